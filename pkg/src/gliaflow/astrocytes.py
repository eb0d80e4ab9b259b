"""Astrocyte grid: delayed calcium waves and neuron regulation.

The grid has side 2*sqrt(n_neurons), four astrocytes per neuron, laid out so
neuron (u, v) is wrapped by astrocytes (2u, 2v), (2u+1, 2v), (2u, 2v+1) and
(2u+1, 2v+1).  A neuron's afferent synapses are dealt round-robin across
those four, which is what "an astrocyte wraps a quarter of the synapses"
means operationally.

Astrocyte-to-astrocyte links are sampled once at build time: an unordered
pair at Euclidean distance d <= cutoff is linked with probability
min(1, rho_scale / d), and calcium sent over the link arrives after
round(delay_scale * d) ticks (at least one).  In-flight calcium lives in a
circular (max_delay + 1, n_astro) ring indexed by arrival tick.

Per tick, an astrocyte's drive is

    spike_gain * (effective presynaptic spikes on its quarter)
  + ca_gain   * (calcium it received during the last window_accum ticks)

and it activates when the drive exceeds theta_act, taking state g = drive.
An active astrocyte sends ca_emit_fraction * g along every outgoing link and
regulates its neuron: excitation +k_excite * g while g <= theta_over,
inhibition -k_inhibit * g beyond that.

A presynaptic spike counts as *effective* when it achieves its sign's goal
one tick later: positive synapse and the target fires, or negative synapse
and the target stays quiet.
"""

from dataclasses import dataclass

import numpy as np

from .synapses import SynapseGraph


@dataclass
class AstroParams:
    theta_act: float = 3.0       # activation threshold on the summed drive
    theta_over: float = 8.0      # above this, regulation flips to inhibition
    spike_gain: float = 1.0
    ca_gain: float = 1.0
    k_excite: float = 0.5
    k_inhibit: float = 0.5
    rho_scale: float = 1.0       # link probability = min(1, rho_scale / d)
    delay_scale: float = 2.0     # link delay = round(delay_scale * d) >= 1
    ca_emit_fraction: float = 0.1
    window_accum: int = 10       # ticks of received calcium that count as drive
    cutoff: float = 10.0         # max link distance


def build_links(side: int, params: AstroParams,
                rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sample symmetric links on a side x side grid.

    Returns directed (src, dst, delay) arrays where every kept unordered
    pair appears in both directions with the same delay.  Offsets are
    enumerated in a fixed order so the draw is reproducible.
    """
    cutoff2 = params.cutoff * params.cutoff
    srcs, dsts, delays = [], [], []
    c = int(np.floor(params.cutoff))
    for dx in range(0, c + 1):
        for dy in range(-c, c + 1):
            if dx == 0 and dy <= 0:
                continue  # half-plane: each unordered pair sampled once
            d2 = dx * dx + dy * dy
            if d2 > cutoff2:
                continue
            d = np.sqrt(d2)
            p = min(1.0, params.rho_scale / d)
            delay = max(1, int(np.rint(params.delay_scale * d)))
            i = np.arange(0, side - dx)
            j = np.arange(max(0, -dy), side - max(0, dy))
            ii, jj = np.meshgrid(i, j, indexing="ij")
            a = (ii * side + jj).ravel()
            b = ((ii + dx) * side + (jj + dy)).ravel()
            keep = rng.random(a.shape[0]) < p
            if keep.any():
                srcs.append(a[keep])
                dsts.append(b[keep])
                delays.append(np.full(int(keep.sum()), delay, dtype=np.int64))
    if srcs:
        s = np.concatenate(srcs)
        t = np.concatenate(dsts)
        dl = np.concatenate(delays)
    else:
        s = t = np.empty(0, dtype=np.int64)
        dl = np.empty(0, dtype=np.int64)
    # duplicate in both directions, then canonicalize the order
    src = np.concatenate([s, t])
    dst = np.concatenate([t, s])
    dly = np.concatenate([dl, dl])
    order = np.lexsort((dst, src))
    return src[order], dst[order], dly[order]


class AstrocyteGrid:
    """Link structure, delayed-delivery ring, and per-astro state g."""

    def __init__(self, side: int, link_src: np.ndarray, link_dst: np.ndarray,
                 link_delay: np.ndarray, params: AstroParams):
        self.side = int(side)
        self.n_astro = side * side
        self.link_src = link_src
        self.link_dst = link_dst
        self.link_delay = link_delay
        self.max_delay = int(link_delay.max()) if link_delay.size else 1
        self.ring = np.zeros((self.max_delay + 1, self.n_astro))
        self.accum = np.zeros((params.window_accum, self.n_astro))
        self.g = np.zeros(self.n_astro)
        self.active = np.zeros(self.n_astro, dtype=bool)
        # conservation ledger
        self.ca_emitted = 0.0
        self.ca_delivered = 0.0
        self.packets_emitted = 0
        self.packets_delivered = 0
        self._pending_packets = np.zeros((self.max_delay + 1,), dtype=np.int64)

    def drain(self, t: int, window_accum: int) -> np.ndarray:
        """Deliver the calcium scheduled for tick t and roll the receive
        window forward.  Must be called exactly once per tick, in order."""
        slot = t % (self.max_delay + 1)
        delivered = self.ring[slot].copy()
        self.ring[slot] = 0.0
        self.ca_delivered += float(delivered.sum())
        self.packets_delivered += int(self._pending_packets[slot])
        self._pending_packets[slot] = 0
        self.accum[t % window_accum] = delivered
        return delivered

    def ca_recent(self) -> np.ndarray:
        """Calcium each astro received over the last window_accum ticks."""
        return self.accum.sum(axis=0)

    def step(self, effective_counts: np.ndarray, t: int, params: AstroParams) -> np.ndarray:
        """Update activation state from this tick's drive, then emit calcium
        from every active astro along its links.  Returns the state vector g."""
        drive = params.spike_gain * effective_counts + params.ca_gain * self.ca_recent()
        self.active = drive > params.theta_act
        self.g = np.where(self.active, drive, 0.0)
        if self.active.any() and self.link_src.size:
            mask = self.active[self.link_src]
            if mask.any():
                src = self.link_src[mask]
                dst = self.link_dst[mask]
                amounts = params.ca_emit_fraction * self.g[src]
                slots = (t + self.link_delay[mask]) % (self.max_delay + 1)
                np.add.at(self.ring, (slots, dst), amounts)
                self.ca_emitted += float(amounts.sum())
                n = int(mask.sum())
                self.packets_emitted += n
                np.add.at(self._pending_packets, slots, 1)
        return self.g

    def in_flight(self) -> float:
        return float(self.ring.sum())

    def queue_depth(self) -> int:
        """Number of calcium packets currently awaiting delivery."""
        return int(self._pending_packets.sum())

    def n_overactive(self, params: AstroParams) -> int:
        return int(np.count_nonzero(self.g > params.theta_over))

    def drain_remaining(self, t_last: int, window_accum: int) -> float:
        """Deliver everything still queued after the last simulated tick.

        No astrocyte is updated any more, so nothing new is emitted; each
        packet still lands at its scheduled tick, which keeps the delivery
        ledger exact.  Returns the total amount delivered."""
        total = 0.0
        for t in range(t_last + 1, t_last + self.max_delay + 2):
            total += float(self.drain(t, window_accum).sum())
            if self.queue_depth() == 0:
                break
        return total


class NeuronAstroMap:
    """Neuron -> 4 wrapping astros, and afferent edge -> handling astro."""

    def __init__(self, n_neurons: int, side: int):
        nside = int(np.sqrt(n_neurons))
        if nside * nside != n_neurons:
            raise ValueError(f"n_neurons must be a perfect square, got {n_neurons}")
        if side != 2 * nside:
            raise ValueError(f"grid side must be {2 * nside}, got {side}")
        self.n_neurons = n_neurons
        self.side = side
        u, v = np.divmod(np.arange(n_neurons), nside)
        # quarter order: (0,0), (1,0), (0,1), (1,1) offsets in astro coords
        self.quads = np.stack([
            (2 * u) * side + (2 * v),
            (2 * u + 1) * side + (2 * v),
            (2 * u) * side + (2 * v + 1),
            (2 * u + 1) * side + (2 * v + 1),
        ], axis=1)

    def assign_edges(self, graph: SynapseGraph) -> np.ndarray:
        """Per-edge astro index: afferent synapses of neuron i are dealt
        round-robin over its four astros, in slice order."""
        edge_astro = np.empty(graph.n_edges, dtype=np.int64)
        indptr = graph.indptr
        for i in range(graph.n):
            lo, hi = indptr[i], indptr[i + 1]
            r = np.arange(hi - lo) % 4
            edge_astro[lo:hi] = self.quads[i, r]
        return edge_astro


def effective_spike_counts(graph: SynapseGraph, edge_astro: np.ndarray,
                           pre_state: np.ndarray, post_state: np.ndarray,
                           n_astro: int) -> np.ndarray:
    """Count effective presynaptic spikes per astro for the transition
    pre_state -> post_state (post_state is one tick later)."""
    w = graph.weights
    fired_pre = pre_state[graph.sources] == 1
    fired_post = post_state[graph.targets] == 1
    eff = fired_pre & (((w > 0) & fired_post) | ((w < 0) & ~fired_post))
    return np.bincount(edge_astro[eff], minlength=n_astro).astype(np.float64)


def regulate(g: np.ndarray, quads: np.ndarray, params: AstroParams) -> np.ndarray:
    """Per-neuron additive input from its four astros: active ones push
    +k_excite*g up to theta_over and -k_inhibit*g past it."""
    contrib = np.where(g > params.theta_over, -params.k_inhibit * g,
                       np.where(g > 0.0, params.k_excite * g, 0.0))
    return contrib[quads].sum(axis=1)


def build_grid(n_neurons: int, params: AstroParams,
               rng: np.random.Generator) -> tuple[AstrocyteGrid, NeuronAstroMap]:
    nside = int(np.sqrt(n_neurons))
    if nside * nside != n_neurons:
        raise ValueError(f"n_neurons must be a perfect square, got {n_neurons}")
    side = 2 * nside
    src, dst, delay = build_links(side, params, rng)
    grid = AstrocyteGrid(side, src, dst, delay, params)
    return grid, NeuronAstroMap(n_neurons, side)
