"""Simulation loops, trace recording, cycle detection, run summaries.

One tick is 1 ms.  A run of ``t_max`` ticks performs t_max synchronous
updates and records one trace row per update (ticks 1..t_max, so the trace
has exactly t_max rows); the state history additionally keeps the initial
state at tick 0 for cycle detection.  All randomness comes from named
streams derived from the run seed, so a run is bit-reproducible and adding
a new stream consumer never shifts existing draw sequences.

Model A tick order: sample background noise (pulse window applied),
synchronous bipolar update, per-branch firing counts into the capillary
trigger logic, record flows and the balance metric.  The initial state is
observed by the capillaries before the loop, so dilations it causes
activate at tick delta_t.

Model B tick order (computing state k):
  1. deliver calcium scheduled for tick k
  2. count effective spikes of the transition state(k-2) -> state(k-1)
     (an outcome is sensed one tick after it happens; counts are zero
     while k < 2)
  3. astrocyte activation from spikes + received calcium, then emission
  4. regulation -> per-neuron additive contribution (zero when uncoupled)
  5. synchronous binary update with refractory masking
  6. every update_period ticks: plasticity over the window just ended
     (coupled runs only)
  7. record
After the loop the delivery queue is drained at the packets' scheduled
ticks (nothing further is emitted), closing the calcium ledger.
"""

import json
from dataclasses import dataclass

import numpy as np

from . import astrocytes, capillaries, neurons, plasticity, synapses
from .config import MODEL_A, MODEL_B_COUPLED, SimConfig, config_hash
from .rng import derive_stream


@dataclass
class CycleReport:
    period: int | None
    onset: int | None
    method: str = "exhaustive equality scan over recorded states"


class SimTrace:
    """Per-tick scalar columns plus the full state history of one run.

    ``rows`` has one record per simulated tick (1..t_max); ``states`` has
    t_max + 1 entries because it includes the initial state at tick 0.
    """

    def __init__(self, columns: list, t_max: int, n_neurons: int):
        self.columns = list(columns)
        self.rows = np.zeros((t_max, len(columns)))
        self.states = np.zeros((t_max + 1, n_neurons), dtype=np.int8)
        self.extras: dict = {}
        self.plasticity_rows: list = []  # (t, n_strengthened, n_weakened, mean_abs_w)

    def set_row(self, t: int, values: dict) -> None:
        for j, name in enumerate(self.columns):
            self.rows[t - 1, j] = values[name]

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.columns.index(name)]

    def to_csv(self, path) -> None:
        int_cols = {"t", "firing_total", "n_dilated", "n_active_astro",
                    "n_overactive", "queue_depth"}
        with open(path, "w") as fh:
            fh.write(",".join(self.columns) + "\n")
            for i in range(self.rows.shape[0]):
                parts = []
                for j, name in enumerate(self.columns):
                    v = self.rows[i, j]
                    parts.append("%d" % int(v) if name in int_cols else "%.17g" % v)
                fh.write(",".join(parts) + "\n")

    def plasticity_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("t,n_strengthened,n_weakened,mean_abs_weight\n")
            for t, n_s, n_w, mean_w in self.plasticity_rows:
                fh.write("%d,%d,%d,%.17g\n" % (t, n_s, n_w, mean_w))


def run_model_a(cfg: SimConfig) -> SimTrace:
    n = cfg.resolved_n()
    rng_deg = derive_stream(cfg.seed, "a.degrees")
    rng_graph = derive_stream(cfg.seed, "a.graph")
    rng_init = derive_stream(cfg.seed, "a.init")
    rng_noise = derive_stream(cfg.seed, "a.noise")
    rng_cap = derive_stream(cfg.seed, "a.capillary")

    degrees = synapses.sample_degrees(n, cfg.synapse, rng_deg)
    graph = synapses.build_graph(n, degrees, cfg.synapse, rng_graph)
    tree = capillaries.build_tree(n, rng_cap, cfg.capillary)
    state = neurons.init_bipolar(n, cfg.neuron.init_firing_a, rng_init)

    cols = ["t", "firing_total", "firing_frac", "firing_branch_mean",
            "n_dilated", "cmp"]
    cols += [f"flow_{b}" for b in range(1, capillaries.N_BRANCHES + 1)]
    trace = SimTrace(cols, cfg.t_max, n)
    trace.states[0] = state

    counts = capillaries.branch_firing_counts(tree.branch_of_neuron, state)
    tree.observe_firing(counts, 0, cfg.capillary)
    tree.advance(0)

    for k in range(1, cfg.t_max + 1):
        noise = neurons.sample_noise(k, cfg.noise, n, graph.ext_counts, rng_noise)
        state = neurons.step_bipolar(state, graph, noise, cfg.neuron.phi_a)
        counts = capillaries.branch_firing_counts(tree.branch_of_neuron, state)
        tree.observe_firing(counts, k, cfg.capillary)
        tree.advance(k)
        trace.states[k] = state
        total = neurons.firing_count(state)
        flows = tree.flow_snapshot(k)
        row = {
            "t": k,
            "firing_total": total,
            "firing_frac": total / n,
            "firing_branch_mean": total / capillaries.N_BRANCHES,
            "n_dilated": int(tree.is_dilated(k)[1:].sum()),
            "cmp": tree.compatibility(k),
        }
        for b in range(capillaries.N_BRANCHES):
            row[f"flow_{b + 1}"] = flows[b]
        trace.set_row(k, row)

    trace.extras["n_triggers"] = len(tree.trigger_log)
    return trace


def run_model_b(cfg: SimConfig, coupled: bool) -> SimTrace:
    n = cfg.resolved_n()
    nside = int(np.sqrt(n))
    rng_deg = derive_stream(cfg.seed, "b.degrees")
    rng_graph = derive_stream(cfg.seed, "b.graph")
    rng_init = derive_stream(cfg.seed, "b.init")
    rng_eta = derive_stream(cfg.seed, "b.eta")

    degrees = synapses.sample_degrees(n, cfg.synapse, rng_deg)
    graph = synapses.build_graph(n, degrees, cfg.synapse, rng_graph)
    state = neurons.init_binary(n, cfg.neuron.init_firing_b, rng_init)

    if coupled:
        rng_links = derive_stream(cfg.seed, "b.links")
        grid, namap = astrocytes.build_grid(n, cfg.astro, rng_links)
        edge_astro = namap.assign_edges(graph)

    history = plasticity.SpikeHistory(n, cfg.plasticity.update_period)
    history.record(state)

    cols = ["t", "firing_total", "firing_frac", "n_active_astro",
            "mean_state", "n_overactive", "queue_depth", "mean_abs_weight"]
    cols += [f"row_mean_{r}" for r in range(1, nside + 1)]
    trace = SimTrace(cols, cfg.t_max, n)
    trace.states[0] = state

    zeros_n = np.zeros(n)
    for k in range(1, cfg.t_max + 1):
        if coupled:
            grid.drain(k, cfg.astro.window_accum)
            if k >= 2:
                eff = astrocytes.effective_spike_counts(
                    graph, edge_astro, trace.states[k - 2], trace.states[k - 1],
                    grid.n_astro)
            else:
                eff = np.zeros(grid.n_astro)
            gvec = grid.step(eff, k, cfg.astro)
            contrib = astrocytes.regulate(gvec, namap.quads, cfg.astro)
        else:
            contrib = zeros_n
        eta = neurons.sample_eta(cfg.noise, n, rng_eta)
        state = neurons.step_binary(state, graph, contrib, cfg.neuron.phi_b, eta)
        trace.states[k] = state
        history.record(state)
        if (coupled and cfg.plasticity.delta_w > 0.0 and history.ready
                and k % cfg.plasticity.update_period == 0):
            gate = None
            if cfg.plasticity.gate_by_astro_active:
                gate = grid.active[edge_astro]
            outcome = plasticity.update_weights(graph, history, cfg.plasticity, gate)
            n_s = int(np.count_nonzero((outcome == plasticity.EXC_SUCCESS)
                                       | (outcome == plasticity.INH_SUCCESS)))
            n_w = int(np.count_nonzero((outcome == plasticity.EXC_FAILURE)
                                       | (outcome == plasticity.INH_FAILURE)))
            trace.plasticity_rows.append(
                (k, n_s, n_w, float(np.abs(graph.matrix.data).mean())))

        total = neurons.firing_count(state)
        row = {
            "t": k,
            "firing_total": total,
            "firing_frac": total / n,
            "n_active_astro": int(grid.active.sum()) if coupled else 0,
            "mean_state": float(grid.g.mean()) if coupled else 0.0,
            "n_overactive": grid.n_overactive(cfg.astro) if coupled else 0,
            "queue_depth": grid.queue_depth() if coupled else 0,
            "mean_abs_weight": float(np.abs(graph.matrix.data).mean()),
        }
        by_row = state.reshape(nside, nside).mean(axis=1)
        for r in range(nside):
            row[f"row_mean_{r + 1}"] = float(by_row[r])
        trace.set_row(k, row)

    if coupled:
        leftover = grid.drain_remaining(cfg.t_max, cfg.astro.window_accum)
        trace.extras.update({
            "ca_emitted": grid.ca_emitted,
            "ca_delivered": grid.ca_delivered,
            "ca_drained_after_end": leftover,
            "packets_emitted": grid.packets_emitted,
            "packets_delivered": grid.packets_delivered,
        })
    trace.extras["graph"] = graph
    return trace


def run_config(cfg: SimConfig) -> SimTrace:
    if cfg.model == MODEL_A:
        return run_model_a(cfg)
    return run_model_b(cfg, coupled=(cfg.model == MODEL_B_COUPLED))


def detect_cycle(states: np.ndarray, max_period: int = 10) -> CycleReport:
    """Smallest period p (then earliest onset) such that every recorded
    state from the onset on satisfies state(t) = state(t + p) through the
    end of the history.  At least one comparison must support the claim."""
    n_recorded = states.shape[0]
    for p in range(1, max_period + 1):
        if n_recorded - p < 1:
            break
        same = (states[p:] == states[:-p]).all(axis=1)
        if not same[-1]:
            continue
        mismatches = np.nonzero(~same)[0]
        onset = 0 if mismatches.size == 0 else int(mismatches[-1]) + 1
        return CycleReport(period=p, onset=onset)
    return CycleReport(period=None, onset=None)


def summarize(trace: SimTrace, cfg: SimConfig) -> dict:
    ff = trace.column("firing_frac")
    last = ff[-min(100, ff.shape[0]):]
    cycle = detect_cycle(trace.states)
    out = {
        "model": cfg.model,
        "n_neurons": cfg.resolved_n(),
        "t_max": cfg.t_max,
        "seed": cfg.seed,
        "config_hash": config_hash(cfg),
        "firing_frac_mean": float(ff.mean()),
        "firing_frac_last100_mean": float(last.mean()),
        "firing_frac_final": float(ff[-1]),
        "cycle_period": cycle.period,
        "cycle_onset": cycle.onset,
        "cycle_method": cycle.method,
    }
    if cfg.model == MODEL_A:
        cmp_col = trace.column("cmp")
        out.update({
            "cmp_mean": float(cmp_col.mean()),
            "cmp_q25": float(np.percentile(cmp_col, 25)),
            "cmp_q75": float(np.percentile(cmp_col, 75)),
            "incompatible_frac": float(np.mean(cmp_col > 0.0)),
            "n_triggers": trace.extras.get("n_triggers", 0),
        })
    else:
        out["mean_abs_weight_final"] = float(trace.column("mean_abs_weight")[-1])
        out["n_plasticity_updates"] = len(trace.plasticity_rows)
        for key in ("ca_emitted", "ca_delivered", "ca_drained_after_end",
                    "packets_emitted", "packets_delivered"):
            if key in trace.extras:
                out[key] = trace.extras[key]
    return out


def write_summary(summary: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
