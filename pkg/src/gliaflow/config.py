"""Run configuration: one dataclass tree, flat key-path access, validation.

Every tunable lives in a typed block (synapse, noise, neuron, capillary,
astro, plasticity) under :class:`SimConfig`.  Externally a config is a flat
mapping of dotted key paths to scalars, e.g. ``capillary.n_firing = 25``,
which is the format of config files, ``--set`` overrides, sweep axes, and
environment variables (prefix ``GLIAFLOW_``, with ``__`` standing in for
the dot: ``GLIAFLOW_CAPILLARY__N_FIRING=25``).

``validate_config`` returns *all* violations, not just the first, so a bad
config file can be fixed in one pass.  It also returns soft warnings for
configurations that run fine but differ from the reference scale the models
were characterized at (2400 neurons for model A, 900 for model B).
"""

import dataclasses
import hashlib
import os
from dataclasses import dataclass, field

from .astrocytes import AstroParams
from .capillaries import N_BRANCHES, CapillaryParams
from .neurons import NeuronParams, NoiseParams
from .plasticity import PlasticityParams
from .synapses import SynapseParams

MODEL_A = "a"
MODEL_B_COUPLED = "b-coupled"
MODEL_B_PURE = "b-pure"
MODELS = (MODEL_A, MODEL_B_COUPLED, MODEL_B_PURE)

REFERENCE_N = {MODEL_A: 2400, MODEL_B_COUPLED: 900, MODEL_B_PURE: 900}


@dataclass
class SimConfig:
    model: str = MODEL_A
    n_neurons: int | None = None   # None -> reference size for the model
    t_max: int = 500               # ticks simulated after the initial state
    seed: int = 0
    synapse: SynapseParams = field(default_factory=SynapseParams)
    noise: NoiseParams = field(default_factory=NoiseParams)
    neuron: NeuronParams = field(default_factory=NeuronParams)
    capillary: CapillaryParams = field(default_factory=CapillaryParams)
    astro: AstroParams = field(default_factory=AstroParams)
    plasticity: PlasticityParams = field(default_factory=PlasticityParams)

    def resolved_n(self) -> int:
        if self.n_neurons is not None:
            return int(self.n_neurons)
        return REFERENCE_N[self.model]


_BLOCKS = ("synapse", "noise", "neuron", "capillary", "astro", "plasticity")
_SCALARS = ("model", "n_neurons", "t_max", "seed")


def default_config(model: str = MODEL_A) -> SimConfig:
    return SimConfig(model=model)


# -- flat key-path view -----------------------------------------------------

def flatten(cfg: SimConfig) -> dict:
    """Config as an ordered {dotted.key: value} mapping."""
    out = {}
    for name in _SCALARS:
        out[name] = getattr(cfg, name)
    for block in _BLOCKS:
        obj = getattr(cfg, block)
        for f in dataclasses.fields(obj):
            out[f"{block}.{f.name}"] = getattr(obj, f.name)
    return out


def valid_keys(cfg: SimConfig | None = None) -> set:
    return set(flatten(cfg or SimConfig()))


def _coerce(key: str, current, value):
    """Fit a parsed value to the slot's type; raise ValueError if it can't."""
    if value is None:
        return None
    if isinstance(current, bool):
        if isinstance(value, bool):
            return value
        raise ValueError(f"{key}: expected a boolean, got {value!r}")
    if isinstance(current, int):
        if isinstance(value, bool):
            raise ValueError(f"{key}: expected an integer, got {value!r}")
        if isinstance(value, int):
            return value
        if isinstance(value, float) and value.is_integer():
            return int(value)
        raise ValueError(f"{key}: expected an integer, got {value!r}")
    if isinstance(current, float):
        if isinstance(value, bool) or isinstance(value, str):
            raise ValueError(f"{key}: expected a number, got {value!r}")
        return float(value)
    if isinstance(current, str):
        if isinstance(value, str):
            return value
        raise ValueError(f"{key}: expected a string, got {value!r}")
    # current is None (optional float slots like synapse.sigma_deg)
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    raise ValueError(f"{key}: expected a number or none, got {value!r}")


def set_key(cfg: SimConfig, key: str, value) -> None:
    """Assign one dotted key path in place; KeyError on unknown keys."""
    if key in _SCALARS:
        current = getattr(cfg, key)
        if key == "model":
            if not isinstance(value, str):
                raise ValueError(f"model: expected a string, got {value!r}")
            cfg.model = value
        elif key == "n_neurons":
            cfg.n_neurons = None if value is None else _coerce(key, 0, value)
        else:
            setattr(cfg, key, _coerce(key, current, value))
        return
    if "." in key:
        block, _, name = key.partition(".")
        if block in _BLOCKS:
            obj = getattr(cfg, block)
            names = {f.name for f in dataclasses.fields(obj)}
            if name in names:
                setattr(obj, name, _coerce(key, getattr(obj, name), value))
                return
    raise KeyError(key)


def parse_value(text: str):
    """Parse a scalar from config-file / CLI / environment text."""
    s = text.strip()
    low = s.lower()
    if low in ("none", "null"):
        return None
    if low == "true":
        return True
    if low == "false":
        return False
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        pass
    if len(s) >= 2 and s[0] == s[-1] and s[0] in "'\"":
        return s[1:-1]
    return s


def load_config_file(path: str) -> dict:
    """Read ``key = value`` lines; '#' starts a comment; blanks ignored."""
    overrides = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw.rstrip()!r}")
            key, _, val = line.partition("=")
            overrides[key.strip()] = parse_value(val)
    return overrides


ENV_PREFIX = "GLIAFLOW_"


def env_overrides(environ=None) -> dict:
    """Overrides from GLIAFLOW_* variables; '__' maps to the key-path dot."""
    environ = os.environ if environ is None else environ
    out = {}
    for name, val in environ.items():
        if not name.startswith(ENV_PREFIX):
            continue
        key = name[len(ENV_PREFIX):].lower().replace("__", ".")
        out[key] = parse_value(val)
    return out


def apply_overrides(cfg: SimConfig, overrides: dict) -> None:
    for key, value in overrides.items():
        set_key(cfg, key, value)


def _fmt(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


def dump_config(cfg: SimConfig) -> str:
    return "".join(f"{k} = {_fmt(v)}\n" for k, v in flatten(cfg).items())


def config_hash(cfg: SimConfig) -> str:
    """Short digest of the fully resolved config (n_neurons included)."""
    flat = flatten(cfg)
    flat["n_neurons"] = cfg.resolved_n()
    canon = "".join(f"{k}={_fmt(flat[k])}\n" for k in sorted(flat))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:12]


# -- validation ---------------------------------------------------------------

def validate_config(cfg: SimConfig) -> tuple[list, list]:
    """Return (errors, warnings); the config is runnable iff errors == []."""
    errors = []
    warnings = []

    def bad(key, msg):
        errors.append(f"{key}: {msg}")

    if cfg.model not in MODELS:
        bad("model", f"must be one of {', '.join(MODELS)}; got {cfg.model!r}")
        return errors, warnings  # model-dependent checks below are meaningless

    n = cfg.resolved_n()
    if n < 1:
        bad("n_neurons", f"must be positive, got {n}")
    if cfg.t_max < 1:
        bad("t_max", f"must be >= 1, got {cfg.t_max}")
    if cfg.seed < 0:
        bad("seed", f"must be >= 0, got {cfg.seed}")

    if cfg.model == MODEL_A:
        if n >= 1 and n % N_BRANCHES != 0:
            bad("n_neurons", f"model a requires a multiple of {N_BRANCHES}, got {n}")
    else:
        root = int(n ** 0.5)
        if n >= 1 and root * root != n:
            bad("n_neurons", f"model b requires a perfect square, got {n}")
    if n != REFERENCE_N[cfg.model]:
        warnings.append(
            f"n_neurons: {n} differs from the reference size "
            f"{REFERENCE_N[cfg.model]} for model {cfg.model}; "
            "characterized behavior may not transfer"
        )

    syn = cfg.synapse
    if syn.s_ave <= 0:
        bad("synapse.s_ave", f"must be > 0, got {syn.s_ave}")
    if syn.resolved_sigma() < 0:
        bad("synapse.sigma_deg", f"must be >= 0, got {syn.sigma_deg}")
    if not 0.0 <= syn.p_loc <= 1.0:
        bad("synapse.p_loc", f"must be in [0, 1], got {syn.p_loc}")
    if not 0.0 <= syn.mu <= 1.0:
        bad("synapse.mu", f"must be in [0, 1], got {syn.mu}")

    nz = cfg.noise
    if nz.base_std < 0:
        bad("noise.base_std", f"must be >= 0, got {nz.base_std}")
    if nz.eta_std < 0:
        bad("noise.eta_std", f"must be >= 0, got {nz.eta_std}")
    if nz.pulse_mean is not None and nz.pulse_start > nz.pulse_end:
        bad("noise.pulse_start", f"window start {nz.pulse_start} exceeds end {nz.pulse_end}")
    if nz.pulse2_mean is not None and nz.pulse2_start > nz.pulse2_end:
        bad("noise.pulse2_start", f"window start {nz.pulse2_start} exceeds end {nz.pulse2_end}")

    nr = cfg.neuron
    if not 0.0 <= nr.init_firing_a <= 1.0:
        bad("neuron.init_firing_a", f"must be in [0, 1], got {nr.init_firing_a}")
    if not 0.0 <= nr.init_firing_b <= 1.0:
        bad("neuron.init_firing_b", f"must be in [0, 1], got {nr.init_firing_b}")

    cap = cfg.capillary
    if cap.n_firing < 0:
        bad("capillary.n_firing", f"must be >= 0, got {cap.n_firing}")
    if cap.delta_t < 0:
        bad("capillary.delta_t", f"must be >= 0, got {cap.delta_t}")
    if cap.d_c < 1:
        bad("capillary.d_c", f"must be >= 1, got {cap.d_c}")
    if cap.dilation_factor <= 0:
        bad("capillary.dilation_factor", f"must be > 0, got {cap.dilation_factor}")

    ast = cfg.astro
    if ast.theta_act < 0:
        bad("astro.theta_act", f"must be >= 0, got {ast.theta_act}")
    if ast.theta_over < ast.theta_act:
        bad("astro.theta_over", f"must be >= theta_act ({ast.theta_act}), got {ast.theta_over}")
    if ast.rho_scale < 0:
        bad("astro.rho_scale", f"must be >= 0, got {ast.rho_scale}")
    if ast.delay_scale < 0:
        bad("astro.delay_scale", f"must be >= 0, got {ast.delay_scale}")
    if not 0.0 <= ast.ca_emit_fraction <= 1.0:
        bad("astro.ca_emit_fraction", f"must be in [0, 1], got {ast.ca_emit_fraction}")
    if ast.window_accum < 1:
        bad("astro.window_accum", f"must be >= 1, got {ast.window_accum}")
    if ast.cutoff <= 0:
        bad("astro.cutoff", f"must be > 0, got {ast.cutoff}")

    pl = cfg.plasticity
    if not 0.0 <= pl.f_lo <= 1.0:
        bad("plasticity.f_lo", f"must be in [0, 1], got {pl.f_lo}")
    if not 0.0 <= pl.f_hi <= 1.0:
        bad("plasticity.f_hi", f"must be in [0, 1], got {pl.f_hi}")
    if pl.f_lo > pl.f_hi:
        bad("plasticity.f_lo", f"must be <= f_hi ({pl.f_hi}), got {pl.f_lo}")
    if not 0.0 <= pl.corr_min <= 1.0:
        bad("plasticity.corr_min", f"must be in [0, 1], got {pl.corr_min}")
    if pl.delta_w < 0:
        bad("plasticity.delta_w", f"must be >= 0, got {pl.delta_w}")
    if pl.update_period < 1:
        bad("plasticity.update_period", f"must be >= 1, got {pl.update_period}")

    return errors, warnings
