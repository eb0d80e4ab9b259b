"""Synaptic plasticity for the binary network.

Weights adapt every ``update_period`` ticks from per-synapse statistics over
the window just ended.  For a synapse from p to q the window provides

  pre_freq   mean firing rate of p over the window's presynaptic ticks
  post_freq  mean firing rate of q over the following ticks (shifted by one)
  corr       fraction of p's spikes that were followed by q firing next tick

and the synapse is classified by its *constructed* sign (an edge keeps its
excitatory/inhibitory identity even if the magnitude is driven to zero):

  positive, pre_freq >= f_hi, post_freq >= f_hi, corr >= corr_min
      -> excitation success   (strengthen)
  positive, pre_freq >= f_hi, otherwise
      -> excitation failure   (weaken)
  negative, pre_freq >= f_hi, post_freq <= f_lo
      -> inhibition success   (strengthen)
  negative, pre_freq >= f_hi, post_freq >  f_lo
      -> inhibition failure   (weaken)
  pre_freq < f_hi
      -> no change

Strengthen/weaken move |w| by delta_w, clamped to [0, 1]; the sign is
reapplied afterwards so no weight ever crosses zero.
"""

from dataclasses import dataclass

import numpy as np

from .synapses import SynapseGraph

NO_CHANGE = 0
EXC_SUCCESS = 1
EXC_FAILURE = 2
INH_SUCCESS = 3
INH_FAILURE = 4

OUTCOME_NAMES = {
    NO_CHANGE: "no_change",
    EXC_SUCCESS: "excitation_success",
    EXC_FAILURE: "excitation_failure",
    INH_SUCCESS: "inhibition_success",
    INH_FAILURE: "inhibition_failure",
}


@dataclass
class PlasticityParams:
    f_hi: float = 0.25        # "frequently firing" threshold (fraction of ticks)
    f_lo: float = 0.1         # "rarely firing" threshold
    corr_min: float = 0.5
    delta_w: float = 0.02
    update_period: int = 20   # window length in ticks
    gate_by_astro_active: bool = False  # update only astro-covered-and-active edges


class SpikeHistory:
    """Rolling window of the last ``window + 1`` binary states.

    One shared per-neuron buffer; per-synapse statistics are views into it.
    Row s of ``ordered()`` is the state ``window - s`` ticks ago, i.e. rows
    run oldest to newest, with rows [0, window) the presynaptic ticks and
    rows [1, window] the aligned postsynaptic ticks.
    """

    def __init__(self, n_neurons: int, window: int):
        self.window = int(window)
        self.buf = np.zeros((window + 1, n_neurons), dtype=np.int8)
        self.count = 0

    def record(self, state: np.ndarray) -> None:
        self.buf[self.count % (self.window + 1)] = state
        self.count += 1

    @property
    def ready(self) -> bool:
        return self.count >= self.window + 1

    def ordered(self) -> np.ndarray:
        """Window rows in chronological order (oldest first)."""
        if not self.ready:
            raise RuntimeError("history window not yet full")
        k = self.count % (self.window + 1)
        idx = (np.arange(self.window + 1) + k) % (self.window + 1)
        return self.buf[idx]

    def edge_stats(self, graph: SynapseGraph) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(pre_freq, post_freq, corr) per edge over the current window."""
        rows = self.ordered().astype(np.float64)
        pre = rows[:-1]    # ticks t-window .. t-1
        post = rows[1:]    # ticks t-window+1 .. t
        src = graph.sources
        tgt = graph.targets
        pre_freq = pre[:, src].mean(axis=0)
        post_freq = post[:, tgt].mean(axis=0)
        spikes = pre[:, src]
        follows = (spikes * post[:, tgt]).sum(axis=0)
        n_spikes = spikes.sum(axis=0)
        corr = np.divide(follows, n_spikes,
                         out=np.zeros_like(follows), where=n_spikes > 0)
        return pre_freq, post_freq, corr


def classify_one(sign: int, pre_freq: float, post_freq: float, corr: float,
                 params: PlasticityParams) -> int:
    """Scalar reference version of the four-case rule."""
    if pre_freq < params.f_hi or sign == 0:
        return NO_CHANGE
    if sign > 0:
        if post_freq >= params.f_hi and corr >= params.corr_min:
            return EXC_SUCCESS
        return EXC_FAILURE
    if post_freq <= params.f_lo:
        return INH_SUCCESS
    return INH_FAILURE


def classify_edges(sign: np.ndarray, pre_freq: np.ndarray, post_freq: np.ndarray,
                   corr: np.ndarray, params: PlasticityParams) -> np.ndarray:
    outcome = np.full(sign.shape[0], NO_CHANGE, dtype=np.int8)
    prehot = pre_freq >= params.f_hi
    pos = prehot & (sign > 0)
    neg = prehot & (sign < 0)
    exc_ok = pos & (post_freq >= params.f_hi) & (corr >= params.corr_min)
    outcome[exc_ok] = EXC_SUCCESS
    outcome[pos & ~exc_ok] = EXC_FAILURE
    inh_ok = neg & (post_freq <= params.f_lo)
    outcome[inh_ok] = INH_SUCCESS
    outcome[neg & ~inh_ok] = INH_FAILURE
    return outcome


def apply_outcomes(graph: SynapseGraph, outcome: np.ndarray,
                   params: PlasticityParams) -> None:
    """Adjust weight magnitudes in place on the graph's storage."""
    mag = np.abs(graph.matrix.data)
    strengthen = (outcome == EXC_SUCCESS) | (outcome == INH_SUCCESS)
    weaken = (outcome == EXC_FAILURE) | (outcome == INH_FAILURE)
    mag[strengthen] += params.delta_w
    mag[weaken] -= params.delta_w
    np.clip(mag, 0.0, 1.0, out=mag)
    graph.matrix.data[:] = graph.edge_sign * mag


def update_weights(graph: SynapseGraph, history: SpikeHistory,
                   params: PlasticityParams,
                   gate_mask: np.ndarray | None = None) -> np.ndarray:
    """One plasticity step: stats over the window, classify, apply.

    ``gate_mask`` (per edge, optional) restricts the update to edges whose
    covering astrocyte is currently active.  Returns the per-edge outcome
    codes (useful for diagnostics)."""
    pre_freq, post_freq, corr = history.edge_stats(graph)
    outcome = classify_edges(graph.edge_sign, pre_freq, post_freq, corr, params)
    if gate_mask is not None:
        outcome = np.where(gate_mask, outcome, NO_CHANGE).astype(np.int8)
    apply_outcomes(graph, outcome, params)
    return outcome
