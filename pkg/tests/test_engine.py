"""Engine-level behavior: cycle detection, trace contracts, model wiring."""

import numpy as np
import pytest

from gliaflow.config import MODEL_A, MODEL_B_COUPLED, MODEL_B_PURE, SimConfig
from gliaflow.engine import (
    detect_cycle,
    run_config,
    run_model_a,
    run_model_b,
    summarize,
)
from gliaflow.rng import derive_stream


def small_a(seed=0, **kw):
    cfg = SimConfig(model=MODEL_A, n_neurons=120, t_max=60, seed=seed)
    for key, val in kw.items():
        setattr(cfg, key, val)
    return cfg


def small_b(model=MODEL_B_COUPLED, seed=0, t_max=60):
    cfg = SimConfig(model=model, n_neurons=100, t_max=t_max, seed=seed)
    cfg.astro.ca_gain = 0.01
    return cfg


# -- detect_cycle -------------------------------------------------------------

def test_constant_sequence_is_period_one():
    states = np.ones((50, 4), dtype=np.int8)
    rep = detect_cycle(states)
    assert rep.period == 1 and rep.onset == 0


def test_alternation_with_transient():
    rng = derive_stream(0, "x")
    states = rng.integers(0, 2, (301, 6)).astype(np.int8)
    a = np.array([1, 0, 1, 0, 1, 0], dtype=np.int8)
    b = 1 - a
    full = np.vstack([states[:300]] + [a if t % 2 == 0 else b
                                       for t in range(300, 501)])
    # guard against an accidental earlier match in the random prefix
    full[299] = np.array([1, 1, 1, 1, 1, 1], dtype=np.int8)
    rep = detect_cycle(full)
    assert rep.period == 2
    assert rep.onset == 300


def test_smallest_period_wins():
    # a period-1 tail also satisfies period 2; the report must say 1
    states = np.vstack([np.zeros((5, 3), dtype=np.int8),
                        np.ones((20, 3), dtype=np.int8)])
    rep = detect_cycle(states)
    assert rep.period == 1 and rep.onset == 5


def test_no_cycle_reported_on_aperiodic_history():
    # build a sequence with all rows distinct: no period can hold at the end
    n = 40
    states = np.zeros((n, 8), dtype=np.int8)
    for t in range(n):
        bits = np.array(list(np.binary_repr(t, 8)), dtype=np.int8)
        states[t] = bits
    rep = detect_cycle(states)
    assert rep.period is None and rep.onset is None
    assert "scan" in rep.method


def test_max_period_bound():
    period = 12
    base = np.zeros((period, 5), dtype=np.int8)
    for t in range(period):
        base[t, :] = np.array(list(np.binary_repr(t % period, 5)), dtype=np.int8)
    states = np.vstack([base] * 6)
    assert detect_cycle(states, max_period=10).period is None
    assert detect_cycle(states, max_period=12).period == 12


def test_cycle_needs_final_state_match():
    # periodic interior but a fresh final state: no cycle at the end
    states = np.vstack([np.ones((30, 3), dtype=np.int8),
                        np.zeros((1, 3), dtype=np.int8)])
    rep = detect_cycle(states)
    assert rep.period is None


# -- model A ------------------------------------------------------------------

def test_trace_row_and_state_counts():
    cfg = small_a()
    trace = run_model_a(cfg)
    assert trace.rows.shape[0] == cfg.t_max
    assert trace.states.shape == (cfg.t_max + 1, 120)
    assert trace.column("t")[0] == 1
    assert trace.column("t")[-1] == cfg.t_max


def test_model_a_determinism():
    t1 = run_model_a(small_a(seed=5))
    t2 = run_model_a(small_a(seed=5))
    assert np.array_equal(t1.rows, t2.rows)
    assert np.array_equal(t1.states, t2.states)
    t3 = run_model_a(small_a(seed=6))
    assert not np.array_equal(t1.states, t3.states)


def test_unit_dilation_factor_is_always_balanced():
    cfg = small_a()
    cfg.capillary.dilation_factor = 1.0
    cfg.capillary.n_firing = 0  # trigger constantly; flows still never change
    trace = run_model_a(cfg)
    assert np.all(trace.column("cmp") == 0.0)
    assert np.all(trace.column("flow_1") == 800.0)


def test_flow_columns_track_dilation():
    cfg = small_a()
    cfg.capillary.n_firing = 0
    cfg.capillary.delta_t = 1
    cfg.neuron.init_firing_a = 1.0  # every branch triggers at tick 0
    trace = run_model_a(cfg)
    n_dilated = trace.column("n_dilated")
    assert n_dilated[0] == 30  # initial observation activates at tick 1
    assert np.all(trace.column("flow_30")[n_dilated == 30] == 400.0)
    # a fully dilated tree is uniformly scaled, so it stays balanced
    assert np.all(trace.column("cmp")[n_dilated == 30] == 0.0)


def test_firing_branch_mean_consistency():
    trace = run_model_a(small_a(seed=2))
    total = trace.column("firing_total")
    assert np.allclose(trace.column("firing_branch_mean"), total / 30.0)
    assert np.allclose(trace.column("firing_frac"), total / 120.0)


def test_model_a_summary_fields():
    cfg = small_a(seed=3)
    trace = run_model_a(cfg)
    s = summarize(trace, cfg)
    for key in ("cmp_mean", "cmp_q25", "cmp_q75", "incompatible_frac",
                "n_triggers", "config_hash", "cycle_period"):
        assert key in s
    assert s["model"] == MODEL_A
    assert 0.0 <= s["incompatible_frac"] <= 1.0
    assert s["t_max"] == cfg.t_max


# -- model B ------------------------------------------------------------------

def test_model_b_trace_contract():
    cfg = small_b()
    trace = run_model_b(cfg, coupled=True)
    assert trace.rows.shape[0] == cfg.t_max
    assert trace.states.shape == (cfg.t_max + 1, 100)
    for col in ("n_active_astro", "mean_state", "n_overactive",
                "queue_depth", "mean_abs_weight", "row_mean_1", "row_mean_10"):
        assert col in trace.columns


def test_refractory_holds_over_full_run():
    trace = run_model_b(small_b(), coupled=True)
    s = trace.states
    assert not np.any((s[:-1] == 1) & (s[1:] == 1))


def test_pure_and_coupled_share_wiring_and_init():
    """With one seed the two variants draw identical graphs and initial
    states; only the astrocyte pathway differs."""
    tp = run_model_b(small_b(MODEL_B_PURE), coupled=False)
    tc = run_model_b(small_b(MODEL_B_COUPLED), coupled=True)
    assert np.array_equal(tp.states[0], tc.states[0])
    gp = tp.extras["graph"]
    gc = tc.extras["graph"]
    assert np.array_equal(gp.indptr, gc.indptr)
    assert np.array_equal(gp.sources, gc.sources)
    assert np.array_equal(gp.edge_sign, gc.edge_sign)


def test_uncoupled_run_has_silent_astro_columns():
    trace = run_model_b(small_b(MODEL_B_PURE), coupled=False)
    assert np.all(trace.column("n_active_astro") == 0)
    assert np.all(trace.column("mean_state") == 0.0)
    assert np.all(trace.column("queue_depth") == 0)
    # uncoupled runs do not adapt weights
    w = trace.column("mean_abs_weight")
    assert np.all(w == w[0])
    assert trace.plasticity_rows == []


def test_zero_delta_w_freezes_weights():
    cfg = small_b()
    cfg.plasticity.delta_w = 0.0
    trace = run_model_b(cfg, coupled=True)
    w = trace.column("mean_abs_weight")
    assert np.all(w == w[0])
    assert trace.plasticity_rows == []


def test_plasticity_updates_on_schedule():
    cfg = small_b(t_max=100)
    trace = run_model_b(cfg, coupled=True)
    ticks = [row[0] for row in trace.plasticity_rows]
    # window+1 states are first available at tick 20, so updates land on
    # every multiple of the period from then on
    assert ticks == [20, 40, 60, 80, 100]
    assert np.all(np.abs(trace.extras["graph"].weights) <= 1.0)


def test_calcium_ledger_closes():
    cfg = small_b()
    trace = run_model_b(cfg, coupled=True)
    ex = trace.extras
    assert ex["packets_emitted"] == ex["packets_delivered"]
    assert ex["ca_delivered"] == pytest.approx(ex["ca_emitted"], rel=1e-9)


def test_model_b_summary_fields():
    cfg = small_b()
    trace = run_model_b(cfg, coupled=True)
    s = summarize(trace, cfg)
    for key in ("mean_abs_weight_final", "n_plasticity_updates",
                "ca_emitted", "packets_emitted"):
        assert key in s
    assert s["n_plasticity_updates"] == len(trace.plasticity_rows)


def test_model_b_determinism():
    t1 = run_model_b(small_b(seed=9), coupled=True)
    t2 = run_model_b(small_b(seed=9), coupled=True)
    assert np.array_equal(t1.rows, t2.rows)
    assert np.array_equal(t1.states, t2.states)


def test_run_config_dispatch():
    ta = run_config(small_a())
    assert "cmp" in ta.columns
    tb = run_config(small_b(MODEL_B_PURE))
    assert "mean_abs_weight" in tb.columns
    tc = run_config(small_b(MODEL_B_COUPLED))
    assert tc.extras["packets_emitted"] >= 0


def test_csv_emission(tmp_path):
    cfg = small_a(seed=1)
    trace = run_model_a(cfg)
    path = tmp_path / "trace.csv"
    trace.to_csv(path)
    lines = path.read_text().splitlines()
    assert len(lines) == cfg.t_max + 1
    assert lines[0].startswith("t,firing_total,firing_frac")
    first = lines[1].split(",")
    assert first[0] == "1"             # integer formatting for counts
    assert "." not in first[1]

    cfgb = small_b(t_max=45)
    tb = run_model_b(cfgb, coupled=True)
    pcsv = tmp_path / "plasticity.csv"
    tb.plasticity_csv(pcsv)
    plines = pcsv.read_text().splitlines()
    assert plines[0] == "t,n_strengthened,n_weakened,mean_abs_weight"
    assert len(plines) == 1 + len(tb.plasticity_rows)
