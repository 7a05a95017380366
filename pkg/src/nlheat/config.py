"""Flat sectioned key-value experiment configs.

The format is INI-style: a handful of sections, scalar or comma-list
values, no nesting.  Unknown sections or keys are rejected rather than
ignored, and every value is validated against the experiment schema.
"""

import configparser
from dataclasses import dataclass, field

from .errors import ConfigParseError, ValidationError

KINDS = (
    "simulate",
    "blowup_criterion",
    "small_data_decay",
    "kernel_constants",
    "lp_lq_suite",
    "theta_sweep",
    "scaling_check",
    "verify",
)

SCHEMES = ("imex1", "etd2")

TOLERANCE_KEYS = (
    "energy_decay_scale",
    "f_identity_rel",
    "lp_lq_rel",
    "blowup_t_rel",
    "sweep_ratio_rel",
    "decay_rate_slack",
    "scaling_rel",
)


@dataclass
class ExperimentConfig:
    name: str = ""
    kind: str = "simulate"
    p: float = 2.0
    seeds: tuple = (0,)
    output_dir: str = "out"
    dim: int = 1
    lengths: tuple = (1.0,)
    grid_points: tuple = (256,)
    scheme: str = "imex1"
    t_end: float = None
    dt_init: float = 1e-4
    dt_min: float = 1e-9
    dt_max: float = 1e-2
    cfl: float = 0.05
    u_max: float = 1e6
    dealias: bool = True
    amplitude: float = 1.0
    amplitude_factor: float = 2.0
    r: float = 2.0
    r_values: tuple = (2.0, 3.0)
    thetas: tuple = (1e-5, 1e-4, 1e-3)
    scale_factor: float = 2.0
    compare_times: tuple = (0.1, 0.5)
    jobs: int = 1
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not self.name:
            self.name = self.kind
        if self.p <= 1:
            raise ValidationError("p must exceed 1")
        if self.dim not in (1, 2):
            raise ValidationError("dim must be 1 or 2")
        if len(self.lengths) != self.dim:
            raise ValidationError(f"expected {self.dim} lengths, got {len(self.lengths)}")
        if any(L <= 0 for L in self.lengths):
            raise ValidationError("lengths must be positive")
        if len(self.grid_points) == 1 and self.dim == 2:
            self.grid_points = (self.grid_points[0], self.grid_points[0])
        if len(self.grid_points) != self.dim:
            raise ValidationError(f"expected {self.dim} grid point counts, got {len(self.grid_points)}")
        if any(m < 4 for m in self.grid_points):
            raise ValidationError("grid needs at least 4 points per axis")
        if self.scheme not in SCHEMES:
            raise ValidationError(f"scheme must be one of {SCHEMES}")
        if not self.seeds:
            raise ValidationError("at least one seed is required")
        if self.t_end is not None and self.t_end <= 0:
            raise ValidationError("t_end must be positive")
        if not (0 < self.dt_min <= self.dt_init <= self.dt_max):
            raise ValidationError("need 0 < dt_min <= dt_init <= dt_max")
        if self.r <= self.dim / 2.0 or self.r < 2.0:
            raise ValidationError("decay exponent r needs r >= 2 and r > dim/2")
        if any(t <= 0 or t > 1 for t in self.thetas):
            raise ValidationError("theta values must lie in (0, 1]")
        if self.scale_factor <= 0:
            raise ValidationError("scaling factor must be positive")
        if self.jobs < 1:
            raise ValidationError("jobs must be at least 1")
        for key in self.tolerances:
            if key not in TOLERANCE_KEYS:
                raise ValidationError(f"unknown tolerance override {key!r}")


def _parse_float(s):
    return float(s)


def _parse_int(s):
    return int(s, 0)


def _parse_bool(s):
    low = s.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_float_list(s):
    return tuple(float(tok) for tok in s.replace(",", " ").split())


def _parse_int_list(s):
    return tuple(int(tok) for tok in s.replace(",", " ").split())


_SCHEMA = {
    "experiment": {
        "name": ("name", str.strip),
        "kind": ("kind", str.strip),
        "p": ("p", _parse_float),
        "seed": ("seeds", lambda s: (int(s, 0),)),
        "seeds": ("seeds", _parse_int_list),
        "output_dir": ("output_dir", str.strip),
        "jobs": ("jobs", _parse_int),
    },
    "domain": {
        "dim": ("dim", _parse_int),
        "lengths": ("lengths", _parse_float_list),
    },
    "grid": {
        "points": ("grid_points", _parse_int_list),
    },
    "solver": {
        "scheme": ("scheme", str.strip),
        "t_end": ("t_end", _parse_float),
        "dt_init": ("dt_init", _parse_float),
        "dt_min": ("dt_min", _parse_float),
        "dt_max": ("dt_max", _parse_float),
        "cfl": ("cfl", _parse_float),
        "u_max": ("u_max", _parse_float),
        "dealias": ("dealias", _parse_bool),
        "amplitude": ("amplitude", _parse_float),
    },
    "blowup": {
        "amplitude_factor": ("amplitude_factor", _parse_float),
    },
    "decay": {
        "r": ("r", _parse_float),
    },
    "kernel": {
        "r_values": ("r_values", _parse_float_list),
    },
    "sweep": {
        "thetas": ("thetas", _parse_float_list),
    },
    "scaling": {
        "factor": ("scale_factor", _parse_float),
        "times": ("compare_times", _parse_float_list),
    },
}


def parse_config(text, source="<string>"):
    """Parse and validate config text into an ExperimentConfig."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigParseError(str(exc.message) if hasattr(exc, "message") else str(exc), line=exc.lineno) from exc
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if getattr(exc, "errors", None) else None
        raise ConfigParseError(str(exc), line=line) from exc
    except configparser.DuplicateOptionError as exc:
        raise ConfigParseError(str(exc), line=exc.lineno) from exc
    except configparser.Error as exc:
        raise ConfigParseError(str(exc)) from exc

    values = {}
    tolerances = {}
    for section in parser.sections():
        if section == "tolerances":
            for key, raw in parser.items(section):
                if key not in TOLERANCE_KEYS:
                    raise ValidationError(f"unknown key {key!r} in section [tolerances]")
                tolerances[key] = float(raw)
            continue
        if section not in _SCHEMA:
            raise ValidationError(f"unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ValidationError(f"unknown key {key!r} in section [{section}]")
            attr, conv = _SCHEMA[section][key]
            try:
                values[attr] = conv(raw)
            except ValidationError:
                raise
            except Exception as exc:
                raise ValidationError(f"bad value for {section}.{key}: {raw!r} ({exc})") from exc
    if tolerances:
        values["tolerances"] = tolerances
    return ExperimentConfig(**values)


def load_config(path):
    """Read a config file; parse errors carry their line number."""
    try:
        with open(path, "r") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigParseError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, source=str(path))
