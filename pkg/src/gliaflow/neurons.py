"""Neuron state vectors and the two synchronous update rules.

Model A neurons are bipolar (-1 resting / +1 firing) and follow the classic
sign-threshold recurrent update.  Model B neurons are binary (0 resting /
1 firing), follow a sign rule shifted into {0, 1}, receive an additive
astrocyte contribution, and carry a hard refractory constraint: a neuron
that fired at t cannot fire at t+1, capping the rate at one spike per two
1 ms steps (500 Hz).

Sign convention: sgn(0) counts as +1 (fires).  Updates are fully
synchronous; the new state depends only on the previous state and the
exogenous samples, never on evaluation order.
"""

from dataclasses import dataclass

import numpy as np

from .synapses import SynapseGraph

BIPOLAR = "bipolar"
BINARY = "binary"


@dataclass
class NoiseParams:
    """Background input noise and the transient stimulation window.

    Per-neuron background noise is Normal(mean_t, base_std * sqrt(ext_i))
    where ext_i is the neuron's count of non-local synapses; mean_t switches
    from base_mean to pulse_mean inside the pulse window (ticks inclusive).
    ``pulse_mean=None`` disables the pulse.  A second optional window
    (``pulse2_*``) allows an inhibitory counter-pulse; it takes precedence
    where the windows overlap.  ``eta_std`` is the per-neuron noise term of
    the binary-model update.
    """

    base_mean: float = 0.0
    base_std: float = 0.3
    pulse_mean: float | None = 1.0
    pulse_start: int = 101
    pulse_end: int = 105
    pulse2_mean: float | None = None
    pulse2_start: int = 0
    pulse2_end: int = 0
    eta_std: float = 0.1


@dataclass
class NeuronParams:
    """Thresholds and initial firing probabilities (both sweepable)."""

    phi_a: float = 0.0          # bipolar-model threshold
    phi_b: float = 1.25         # binary-model threshold
    init_firing_a: float = 0.25  # initial firing probability, model A
    init_firing_b: float = 0.5   # initial firing probability, model B


def init_bipolar(n: int, p_fire: float, rng: np.random.Generator) -> np.ndarray:
    state = np.where(rng.random(n) < p_fire, 1, -1).astype(np.int8)
    return state


def init_binary(n: int, p_fire: float, rng: np.random.Generator) -> np.ndarray:
    return (rng.random(n) < p_fire).astype(np.int8)


def step_bipolar(state: np.ndarray, g: SynapseGraph, noise: np.ndarray,
                 phi: np.ndarray | float = 0.0) -> np.ndarray:
    """s_i(t+1) = sgn(sum_j w_ij s_j(t) + noise_i - phi_i), with sgn(0) -> +1."""
    h = g.input_to(state) + noise - phi
    return np.where(h >= 0.0, 1, -1).astype(np.int8)


def step_binary(
    state: np.ndarray,
    g: SynapseGraph,
    astro_contrib: np.ndarray,
    phi: np.ndarray | float,
    eta: np.ndarray,
) -> np.ndarray:
    """Binary update with astrocyte input and refractory masking.

    n_i(t+1) = (sgn(sum_j w_ij n_j(t) + astro_i - phi_i + eta_i) + 1) / 2,
    then any neuron with n_i(t) = 1 is forced to 0 (no two consecutive
    firing steps).
    """
    h = g.input_to(state) + astro_contrib - phi + eta
    fired = (h >= 0.0).astype(np.int8)
    fired[state == 1] = 0
    return fired


def sample_noise(
    t: int,
    params: NoiseParams,
    n: int,
    ext_counts: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """Per-neuron background noise for tick t.

    Std scales with sqrt(external synapse count); a neuron with no external
    synapses receives exactly the window mean.
    """
    mean_t = params.base_mean
    if params.pulse_mean is not None and params.pulse_start <= t <= params.pulse_end:
        mean_t = params.pulse_mean
    if params.pulse2_mean is not None and params.pulse2_start <= t <= params.pulse2_end:
        mean_t = params.pulse2_mean
    std = params.base_std * np.sqrt(np.asarray(ext_counts, dtype=np.float64))
    return rng.normal(0.0, 1.0, size=n) * std + mean_t


def sample_eta(params: NoiseParams, n: int, rng: np.random.Generator) -> np.ndarray:
    """Noise term of the binary update, Normal(0, eta_std) per neuron."""
    if params.eta_std == 0.0:
        return np.zeros(n)
    return rng.normal(0.0, params.eta_std, size=n)


def firing_count(state: np.ndarray, subset=None) -> int:
    """Number of firing neurons (state value 1 in either encoding)."""
    values = state if subset is None else state[np.asarray(subset)]
    return int(np.count_nonzero(values == 1))
