"""Synapse graph generation.

Each neuron receives a number of afferent synapses drawn from a normal
distribution centered on ``s_ave``.  A fraction ``p_loc`` of them connect to
neurons inside the simulated population and are materialized as weighted
edges; the remainder represents input from outside the population and is
kept only as a per-neuron count that scales the Gaussian background noise
(see :mod:`gliaflow.neurons`).

Weights are sampled uniformly on [2*mu - 1, 1], so their mean is ``mu``
("local shift").  mu = 0 gives the symmetric [-1, 1] distribution; mu = 1
degenerates to all-ones.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


@dataclass
class SynapseParams:
    s_ave: float = 50.0         # mean afferent synapse count per neuron
    sigma_deg: float | None = None  # degree std-dev; None -> s_ave / 5
    p_loc: float = 0.8          # fraction of a neuron's synapses that are local
    mu: float = 0.0             # weight mean; weights uniform on [2*mu-1, 1]
    allow_self: bool = False

    def resolved_sigma(self) -> float:
        return self.s_ave / 5.0 if self.sigma_deg is None else self.sigma_deg


class SynapseGraph:
    """Sparse directed weighted graph over neurons.

    Edge (i, j) is the synapse from source j to target i; the CSR matrix
    ``matrix`` therefore has row i holding neuron i's afferent weights, and
    the per-step input vector is ``matrix @ state``.  ``matrix.data`` is the
    canonical weight storage (edges sorted by target, then source) and is
    mutated in place by plasticity.  ``edge_sign`` freezes each synapse's
    class (excitatory / inhibitory) at construction time: plasticity changes
    magnitudes only, never the class.
    """

    def __init__(self, n: int, indptr, sources, weights, ext_counts, allow_self=False):
        self.n = int(n)
        indptr = np.asarray(indptr, dtype=np.int64)
        sources = np.asarray(sources, dtype=np.int64)
        weights = np.asarray(weights, dtype=np.float64)
        self.matrix = sp.csr_matrix((weights, sources, indptr), shape=(n, n))
        self.ext_counts = np.asarray(ext_counts, dtype=np.int64)
        self.allow_self = bool(allow_self)
        self.edge_sign = np.sign(self.matrix.data).astype(np.int8)

    # -- views ------------------------------------------------------------

    @property
    def n_edges(self) -> int:
        return self.matrix.data.shape[0]

    @property
    def weights(self) -> np.ndarray:
        return self.matrix.data

    @property
    def sources(self) -> np.ndarray:
        return self.matrix.indices

    @property
    def indptr(self) -> np.ndarray:
        return self.matrix.indptr

    @property
    def targets(self) -> np.ndarray:
        """Per-edge target neuron, aligned with ``weights``."""
        counts = np.diff(self.matrix.indptr)
        return np.repeat(np.arange(self.n, dtype=np.int64), counts)

    def afferent_slice(self, i: int) -> slice:
        """Edge-array slice holding neuron i's afferent synapses."""
        return slice(int(self.matrix.indptr[i]), int(self.matrix.indptr[i + 1]))

    def input_to(self, state: np.ndarray) -> np.ndarray:
        """Per-neuron synaptic input for a state vector."""
        return self.matrix @ state.astype(np.float64)

    def weight_stats(self):
        """(mean, min, max, count) over stored weights; mean/min/max are None
        for an empty graph."""
        w = self.matrix.data
        if w.size == 0:
            return (None, None, None, 0)
        return (float(w.mean()), float(w.min()), float(w.max()), int(w.size))

    # -- serialization ----------------------------------------------------

    def to_csv(self, path) -> None:
        """Edge list export: ``target,source,weight`` with a header row."""
        tgt = self.targets
        src = self.sources
        with open(path, "w") as fh:
            fh.write("target,source,weight\n")
            for k in range(self.n_edges):
                fh.write("%d,%d,%.17g\n" % (tgt[k], src[k], self.matrix.data[k]))

    @classmethod
    def from_csv(cls, path, n: int, ext_counts=None, allow_self=False):
        raw = np.genfromtxt(path, delimiter=",", skip_header=1, dtype=np.float64, ndmin=2)
        if raw.size == 0:
            tgt = np.zeros(0, dtype=np.int64)
            src = np.zeros(0, dtype=np.int64)
            w = np.zeros(0, dtype=np.float64)
        else:
            tgt = raw[:, 0].astype(np.int64)
            src = raw[:, 1].astype(np.int64)
            w = raw[:, 2]
        order = np.lexsort((src, tgt))
        tgt, src, w = tgt[order], src[order], w[order]
        counts = np.bincount(tgt, minlength=n)
        indptr = np.concatenate(([0], np.cumsum(counts)))
        if ext_counts is None:
            ext_counts = np.zeros(n, dtype=np.int64)
        return cls(n, indptr, src, w, ext_counts, allow_self=allow_self)


def round_half_even(x) -> np.ndarray:
    """Nearest-integer rounding, ties to even (unbiased)."""
    return np.rint(x).astype(np.int64)


def sample_degrees(n: int, params: SynapseParams, rng: np.random.Generator) -> np.ndarray:
    """Per-neuron afferent synapse counts.

    Normal(s_ave, sigma_deg) rounded to the nearest integer and clamped to
    the feasible range [0, n-1] (n with self-edges allowed).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    sigma = params.resolved_sigma()
    raw = rng.normal(params.s_ave, sigma, size=n)
    deg = round_half_even(raw)
    hi = n if params.allow_self else n - 1
    return np.clip(deg, 0, hi)


def build_graph(n: int, degrees, params: SynapseParams, rng: np.random.Generator) -> SynapseGraph:
    """Materialize the local part of each neuron's afferent synapses.

    Neuron i gets round(degree_i * p_loc) local edges with distinct sources
    drawn uniformly (collisions redrawn, so the requested local degree is
    exact); weights are uniform on [2*mu - 1, 1].  The non-local remainder is
    recorded in ``ext_counts`` and never materialized.
    """
    degrees = np.asarray(degrees, dtype=np.int64)
    if degrees.shape[0] != n:
        raise ValueError("degrees must have length n")
    local = round_half_even(degrees * params.p_loc)
    avail = n if params.allow_self else n - 1
    if np.any(local > avail):
        bad = int(np.argmax(local > avail))
        raise ValueError(
            f"neuron {bad} requests {int(local[bad])} local sources "
            f"but only {avail} are available"
        )

    lo = 2.0 * params.mu - 1.0
    src_chunks = []
    w_chunks = []
    for i in range(n):
        k = int(local[i])
        if k == 0:
            continue
        chosen: set[int] = set()
        picked = []
        while len(picked) < k:
            batch = rng.integers(0, n, size=max(2 * (k - len(picked)), 8))
            for s in batch:
                s = int(s)
                if s == i and not params.allow_self:
                    continue
                if s in chosen:
                    continue
                chosen.add(s)
                picked.append(s)
                if len(picked) == k:
                    break
        order = np.sort(np.array(picked, dtype=np.int64))
        src_chunks.append(order)
        w_chunks.append(rng.uniform(lo, 1.0, size=k))

    counts = local
    indptr = np.concatenate(([0], np.cumsum(counts)))
    sources = np.concatenate(src_chunks) if src_chunks else np.zeros(0, dtype=np.int64)
    weights = np.concatenate(w_chunks) if w_chunks else np.zeros(0, dtype=np.float64)
    ext_counts = degrees - local
    return SynapseGraph(n, indptr, sources, weights, ext_counts, allow_self=params.allow_self)
