"""Capillary tree: activity-triggered dilation and the flow-balance metric.

Thirty branches form a two-root binary tree of four layers (2 + 4 + 8 + 16).
Branch j for j = 1..14 is a joint whose children are branches 2j+1 and 2j+2.
Baseline flow halves at every split: 800 um^3/ms on the top layer, then 400,
200, and 100 on the sixteen leaf branches, so the baseline tree conserves
flow exactly at every joint.

Each branch supplies an equal block of neurons.  When more than ``n_firing``
of a branch's neurons fire at tick t, the branch dilates ``delta_t`` ticks
later for ``d_c`` ticks, multiplying its flow by ``dilation_factor``
(volume proxy, default 4x).  Overlapping triggers extend the dilation window
rather than stacking.

The balance metric is the sum over the 14 joints of
|flow(j) - flow(2j+1) - flow(2j+2)|; zero means the vasculature is
flow-conserving ("compatible").  Scaling every flow by a common factor
scales the metric by the same factor, so uniformly dilated trees are as
balanced as the baseline.
"""

import heapq
from dataclasses import dataclass

import numpy as np

N_BRANCHES = 30
N_JOINTS = 14
LAYER_FLOWS = (800.0, 400.0, 200.0, 100.0)  # um^3/ms per layer, top to leaves


@dataclass
class CapillaryParams:
    n_firing: int = 20        # dilation trigger: firing count must EXCEED this
    delta_t: int = 2          # trigger-to-dilation delay, ticks
    d_c: int = 20             # dilation duration, ticks
    dilation_factor: float = 4.0
    shuffle_assignment: bool = False  # randomize neuron-to-branch assignment


def baseline_flows() -> np.ndarray:
    """Branch flows indexed 1..30 (slot 0 unused)."""
    flows = np.zeros(N_BRANCHES + 1)
    flows[1:3] = LAYER_FLOWS[0]
    flows[3:7] = LAYER_FLOWS[1]
    flows[7:15] = LAYER_FLOWS[2]
    flows[15:31] = LAYER_FLOWS[3]
    return flows


class CapillaryTree:
    """Dilation schedule plus neuron-to-branch assignment.

    ``dilated_until[b]`` is the last tick covered by branch b's activated
    dilations (-1 when never dilated); ``pending`` holds (activation_tick,
    branch) events not yet reached.  Dilation state at a tick is a pure
    function of the trigger history, which is kept in ``trigger_log`` for
    replay checks.
    """

    def __init__(self, n_neurons: int, rng: np.random.Generator | None = None,
                 shuffle: bool = False, dilation_factor: float = 4.0):
        if n_neurons % N_BRANCHES != 0:
            raise ValueError(
                f"n_neurons must be divisible by {N_BRANCHES}, got {n_neurons}"
            )
        self.n_neurons = int(n_neurons)
        self.per_branch = n_neurons // N_BRANCHES
        self.baseline = baseline_flows()
        self.dilation_factor = float(dilation_factor)
        self.dilated_until = np.full(N_BRANCHES + 1, -1, dtype=np.int64)
        self.pending: list[tuple[int, int]] = []
        self.trigger_log: list[tuple[int, int]] = []
        self._d_c = CapillaryParams().d_c

        order = np.arange(n_neurons)
        if shuffle:
            if rng is None:
                raise ValueError("shuffle_assignment requires an rng")
            rng.shuffle(order)
        # branch b (1-based) supplies block b-1 of the (possibly shuffled) order
        self.branch_of_neuron = np.empty(n_neurons, dtype=np.int64)
        for b in range(1, N_BRANCHES + 1):
            block = order[(b - 1) * self.per_branch : b * self.per_branch]
            self.branch_of_neuron[block] = b

    def supplied_neurons(self, branch: int) -> np.ndarray:
        return np.nonzero(self.branch_of_neuron == branch)[0]

    # -- dilation schedule --------------------------------------------------

    def observe_firing(self, firing_counts: np.ndarray, t: int, params: CapillaryParams) -> None:
        """Enqueue dilations for branches whose count strictly exceeds the
        threshold at tick t; the dilation activates at t + delta_t."""
        counts = np.asarray(firing_counts)
        if counts.shape[0] != N_BRANCHES:
            raise ValueError(f"expected {N_BRANCHES} per-branch counts")
        for b in np.nonzero(counts > params.n_firing)[0]:
            branch = int(b) + 1
            activation = t + params.delta_t
            heapq.heappush(self.pending, (activation, branch))
            self.trigger_log.append((t, branch))
        self._d_c = params.d_c

    def advance(self, t: int) -> None:
        """Activate every pending dilation whose activation tick is <= t.
        Overlaps extend the window (max of expiries), never stack."""
        while self.pending and self.pending[0][0] <= t:
            activation, branch = heapq.heappop(self.pending)
            until = activation + self._d_c - 1
            if until > self.dilated_until[branch]:
                self.dilated_until[branch] = until

    def is_dilated(self, t: int) -> np.ndarray:
        """Boolean per branch (index 1..30) after ``advance(t)``."""
        return self.dilated_until >= t

    def flow_snapshot(self, t: int) -> np.ndarray:
        """Current flow of branches 1..30 at tick t (shape (30,))."""
        flows = self.baseline.copy()
        mask = self.is_dilated(t)
        flows[mask] *= self.dilation_factor
        return flows[1:]

    def compatibility(self, t: int) -> float:
        """Sum over the 14 joints of |parent flow - child flows| at tick t."""
        flows = np.concatenate(([0.0], self.flow_snapshot(t)))
        total = 0.0
        for j in range(1, N_JOINTS + 1):
            total += abs(flows[j] - flows[2 * j + 1] - flows[2 * j + 2])
        return float(total)


def build_tree(n_neurons: int, rng: np.random.Generator | None = None,
               params: CapillaryParams | None = None) -> CapillaryTree:
    params = params or CapillaryParams()
    return CapillaryTree(
        n_neurons,
        rng=rng,
        shuffle=params.shuffle_assignment,
        dilation_factor=params.dilation_factor,
    )


def branch_firing_counts(branch_of_neuron: np.ndarray, state: np.ndarray) -> np.ndarray:
    """Firing-neuron count per branch (shape (30,)) for either encoding."""
    firing = (state == 1).astype(np.int64)
    return np.bincount(branch_of_neuron, weights=firing, minlength=N_BRANCHES + 1)[1:].astype(np.int64)


def compatibility_of_flows(flows: np.ndarray) -> float:
    """Balance metric for an arbitrary 30-branch flow vector (1-based joint
    arithmetic applied to a 0-based input array)."""
    f = np.concatenate(([0.0], np.asarray(flows, dtype=np.float64)))
    total = 0.0
    for j in range(1, N_JOINTS + 1):
        total += abs(f[j] - f[2 * j + 1] - f[2 * j + 2])
    return float(total)
