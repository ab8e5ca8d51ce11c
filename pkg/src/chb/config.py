"""Run configuration: a sectioned key-value file, validated before anything is allocated.

The schema with defaults is ``SCHEMA`` below and is documented in docs/config.md.
A run is described either by a file or by the name of a preset, which is a
set of overrides on the defaults.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

GAUSS_SPINODAL_EPS = 0.05
# amplitude giving a kernel of total mass 8 on the plane
GAUSS_SPINODAL_AMP = 8.0 / (math.pi * GAUSS_SPINODAL_EPS ** 2)


def _bool(s):
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _delta(s):
    v = str(s).strip().lower()
    return "scan" if v == "scan" else float(v)


# section -> key -> (parser, default)
SCHEMA = {
    "run": {"seed": (int, 0)},
    "grid": {"nx": (int, 64), "ny": (int, 64), "lx": (float, 1.0), "ly": (float, 1.0)},
    "material": {"potential": (str, "log"), "mobility": (str, "degenerate"), "theta": (float, 1.0),
                 "m0": (float, 1.0), "theta_c": (float, 0.0)},
    "kernel": {"kernel": (str, "gaussian"), "kernel_eps": (float, 0.1), "kernel_amp": (float, 1.0)},
    "flow": {"enabled": (_bool, True), "nu0": (float, 1.0), "nu1": (float, 1.0), "eta": (float, 1.0),
             "brinkman_tol": (float, 1e-8), "brinkman_max_iter": (int, 500),
             "viscous_form": (str, "divgrad"), "force": (str, "zero"), "force_amp": (float, 0.0)},
    "stepping": {"dt": (float, 1e-3), "dt_min": (float, 1e-9), "dt_max": (float, 1e-2),
                 "t_end": (float, 1.0), "max_steps": (int, 1_000_000), "guard_band": (float, 1e-9),
                 "shrink_factor": (float, 0.5), "transport": (str, "upwind"),
                 "snapshot_every": (int, 0)},
    "degiorgi": {"enabled": (_bool, False), "T": (float, 1.0), "tau_tilde": (float, 0.25),
                 "delta": (_delta, "scan"), "n_max": (int, 6)},
    "initial": {"ic": (str, "constant"), "mean": (float, 0.0), "amp": (float, 0.0),
                "width": (float, 0.25), "path": (str, "")},
    "output": {"out": (str, "out")},
}

PRESETS = {
    "constant": {
        "initial": {"ic": "constant", "mean": 0.2},
        "stepping": {"dt": 1e-3, "dt_max": 1e-3, "t_end": 0.1},
        "degiorgi": {"enabled": True, "T": 0.1, "tau_tilde": 0.025, "delta": "scan", "n_max": 3},
    },
    "spinodal": {
        "material": {"theta_c": 3.0},
        "kernel": {"kernel_eps": GAUSS_SPINODAL_EPS, "kernel_amp": GAUSS_SPINODAL_AMP},
        "flow": {"nu0": 1.0, "nu1": 2.0, "eta": 1.0},
        "stepping": {"dt": 1e-3, "dt_max": 1e-2, "t_end": 10.0},
        "initial": {"ic": "spinodal", "mean": 0.1, "amp": 0.05},
        "degiorgi": {"enabled": True, "T": 10.0, "tau_tilde": 1.0, "delta": "scan", "n_max": 6},
    },
    "stripe": {
        "material": {"theta_c": 3.0},
        "kernel": {"kernel_eps": GAUSS_SPINODAL_EPS, "kernel_amp": GAUSS_SPINODAL_AMP},
        "flow": {"nu0": 1.0, "nu1": 2.0, "force": "vortex", "force_amp": 5.0},
        "stepping": {"dt": 1e-3, "dt_max": 1e-2, "t_end": 2.0},
        "initial": {"ic": "stripe", "mean": 0.0, "amp": 0.8, "width": 0.25},
    },
    "mms-ch": {"grid": {"nx": 16, "ny": 16}},
    "mms-brinkman": {"grid": {"nx": 32, "ny": 32}},
}
MMS_PRESETS = ("mms-ch", "mms-brinkman")


@dataclass(frozen=True)
class GridConfig:
    nx: int
    ny: int
    lx: float
    ly: float


@dataclass(frozen=True)
class MaterialConfig:
    potential: str
    mobility: str
    theta: float
    m0: float
    theta_c: float


@dataclass(frozen=True)
class KernelConfig:
    kernel: str
    kernel_eps: float
    kernel_amp: float


@dataclass(frozen=True)
class FlowConfig:
    enabled: bool
    nu0: float
    nu1: float
    eta: float
    brinkman_tol: float
    brinkman_max_iter: int
    viscous_form: str
    force: str
    force_amp: float


@dataclass(frozen=True)
class SteppingConfig:
    dt: float
    dt_min: float
    dt_max: float
    t_end: float
    max_steps: int
    guard_band: float
    shrink_factor: float
    transport: str
    snapshot_every: int


@dataclass(frozen=True)
class DeGiorgiConfig:
    enabled: bool
    T: float
    tau_tilde: float
    delta: object
    n_max: int


@dataclass(frozen=True)
class InitialConfig:
    ic: str
    mean: float
    amp: float
    width: float
    path: str


@dataclass(frozen=True)
class SimConfig:
    seed: int
    grid: GridConfig
    material: MaterialConfig
    kernel: KernelConfig
    flow: FlowConfig
    stepping: SteppingConfig
    degiorgi: DeGiorgiConfig
    initial: InitialConfig
    out: str
    name: str = field(default="custom", compare=False)

    def to_ini(self) -> str:
        lines = []
        for sec, keys in SCHEMA.items():
            lines.append(f"[{sec}]")
            for key in keys:
                lines.append(f"{key} = {_fmt(self._get(sec, key))}")
            lines.append("")
        return "\n".join(lines)

    def _get(self, sec, key):
        if sec == "run":
            return self.seed
        if sec == "output":
            return self.out
        return getattr(getattr(self, sec), key)

    def replace(self, **kw):
        from dataclasses import replace

        return replace(self, **kw)


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _merge(raw, overrides, origin):
    for sec, keys in overrides.items():
        if sec not in SCHEMA:
            raise ConfigError(f"{origin}: unknown section [{sec}]")
        for key, val in keys.items():
            if key not in SCHEMA[sec]:
                raise ConfigError(f"{origin}: unknown key {key!r} in [{sec}]")
            raw[sec][key] = val


def _check(cfg: SimConfig):
    from . import brinkman, chsolver, kernel, material

    g, m, k, f, s, d, i = (cfg.grid, cfg.material, cfg.kernel, cfg.flow, cfg.stepping,
                           cfg.degiorgi, cfg.initial)
    if g.nx < 4 or g.ny < 4:
        raise ConfigError("grid needs nx, ny >= 4")
    if m.potential not in material.POTENTIALS:
        raise ConfigError(f"potential must be one of {material.POTENTIALS}")
    if m.mobility not in material.MOBILITIES:
        raise ConfigError(f"mobility must be one of {material.MOBILITIES}")
    if k.kernel not in kernel.KINDS:
        raise ConfigError(f"kernel must be one of {kernel.KINDS}")
    if not k.kernel_eps > 0 or k.kernel_amp < 0:
        raise ConfigError("kernel_eps must be positive and kernel_amp nonnegative")
    if not f.nu0 > 0 or f.nu1 < f.nu0:
        raise ConfigError("need nu1 >= nu0 > 0")
    if f.eta < 0:
        raise ConfigError("eta must be nonnegative")
    if f.viscous_form not in brinkman.VISCOUS_FORMS:
        raise ConfigError(f"viscous_form must be one of {brinkman.VISCOUS_FORMS}")
    if f.force not in brinkman.FORCES:
        raise ConfigError(f"force must be one of {brinkman.FORCES}")
    if not f.brinkman_tol > 0 or f.brinkman_max_iter < 1:
        raise ConfigError("brinkman_tol and brinkman_max_iter must be positive")
    if not 0 < s.dt_min <= s.dt <= s.dt_max:
        raise ConfigError("need 0 < dt_min <= dt <= dt_max")
    if not 0 < s.shrink_factor < 1:
        raise ConfigError("shrink_factor must lie in (0, 1)")
    if not s.t_end > 0 or s.max_steps < 1 or s.guard_band < 0 or s.snapshot_every < 0:
        raise ConfigError("t_end, max_steps must be positive; guard_band, snapshot_every nonnegative")
    if s.transport not in chsolver.TRANSPORTS:
        raise ConfigError(f"transport must be one of {chsolver.TRANSPORTS}")
    if d.enabled:
        if not d.tau_tilde > 0 or not d.T >= 3 * d.tau_tilde or d.T > s.t_end * (1 + 1e-12):
            raise ConfigError("need 3 tau_tilde <= T <= t_end")
        if d.n_max < 3:
            raise ConfigError("n_max must be at least 3")
        if d.delta != "scan" and not 0 < d.delta < 0.25:
            raise ConfigError("delta must be 'scan' or lie in (0, 1/4)")
    if i.ic not in ("constant", "spinodal", "stripe", "file"):
        raise ConfigError(f"unknown initial condition {i.ic!r}")
    lo, hi = material.PotentialSpec(m.potential).domain
    c, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    if i.ic in ("spinodal", "stripe") and not abs(i.mean - c) + i.amp <= 0.95 * half:
        raise ConfigError("initial data needs |mean| + amp <= 0.95 (relative to the domain half-width)")
    if i.ic == "constant" and not abs(i.mean - c) < half:
        raise ConfigError("constant initial value must lie strictly inside the domain")
    if i.ic == "file" and not i.path:
        raise ConfigError("ic = file needs a path")


def build(overrides=None, name="custom", origin="<config>") -> SimConfig:
    raw = {sec: {k: d for k, (_, d) in keys.items()} for sec, keys in SCHEMA.items()}
    _merge(raw, overrides or {}, origin)
    parsed = {}
    for sec, keys in SCHEMA.items():
        parsed[sec] = {}
        for key, (conv, _) in keys.items():
            try:
                parsed[sec][key] = conv(raw[sec][key])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{origin}: bad value for [{sec}] {key}: {exc}") from None
    cfg = SimConfig(
        seed=parsed["run"]["seed"],
        grid=GridConfig(**parsed["grid"]),
        material=MaterialConfig(**parsed["material"]),
        kernel=KernelConfig(**parsed["kernel"]),
        flow=FlowConfig(**parsed["flow"]),
        stepping=SteppingConfig(**parsed["stepping"]),
        degiorgi=DeGiorgiConfig(**parsed["degiorgi"]),
        initial=InitialConfig(**parsed["initial"]),
        out=parsed["output"]["out"],
        name=name,
    )
    _check(cfg)
    return cfg


def preset(name, **extra) -> SimConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}")
    over = {sec: dict(keys) for sec, keys in PRESETS[name].items()}
    for sec, keys in extra.items():
        over.setdefault(sec, {}).update(keys)
    return build(over, name=name, origin=f"preset {name}")


def parse_text(text, origin="<string>") -> SimConfig:
    cp = configparser.ConfigParser(interpolation=None, default_section="__none__")
    cp.optionxform = str
    try:
        cp.read_string(text, source=origin)
    except configparser.Error as exc:
        raise ConfigError(f"{origin}: {exc}") from None
    over = {sec: dict(cp[sec]) for sec in cp.sections()}
    base = over.get("run", {}).pop("preset", None)
    if base is not None:
        if base not in PRESETS:
            raise ConfigError(f"{origin}: unknown preset {base!r}")
        merged = {sec: dict(keys) for sec, keys in PRESETS[base].items()}
        for sec, keys in over.items():
            merged.setdefault(sec, {}).update(keys)
        over = merged
    return build(over, name=base or Path(origin).stem, origin=origin)


def load(path_or_preset) -> SimConfig:
    """A config file path or a preset name."""
    p = Path(path_or_preset)
    if p.is_file():
        return parse_text(p.read_text(), origin=str(p))
    if str(path_or_preset) in PRESETS:
        return preset(str(path_or_preset))
    raise ConfigError(f"{path_or_preset!r} is neither a config file nor a preset "
                      f"({', '.join(PRESETS)})")
