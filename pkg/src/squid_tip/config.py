"""Flat ``key = value`` run configuration in laboratory units (pH, fF, uA, ps)."""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

from .errors import ConfigError, SquidTipError
from .evolve import PulseTrain
from .model import PHI0, SquidParams
from .spectral import MAX_STATES, GridSpec


@dataclass(frozen=True)
class RunConfig:
    L_pH: float = 97.0
    C_fF: float = 50.0
    Ic_uA: float = 4.0
    phix_phi0: float = 0.5
    eps: float = 0.01
    td_ps: float = 3.0
    ts_ps: float = 25.9
    n_pulses: int = 360  # long enough to show two accelerated flux oscillations
    tail_ps: float = 0.0
    n_states: int = 10
    grid_min_phi0: float = -0.1
    grid_max_phi0: float = 1.1
    grid_points: int = 16384
    sample_dt_ps: float = 1.0
    initial: str = "plus"
    pulse_first: bool = False
    out_dir: str = "out"

    def squid_params(self) -> SquidParams:
        return SquidParams(L=self.L_pH * 1e-12, C=self.C_fF * 1e-15, Ic=self.Ic_uA * 1e-6,
                           phi_x=self.phix_phi0 * PHI0)

    def grid(self) -> GridSpec:
        return GridSpec(self.grid_min_phi0, self.grid_max_phi0, self.grid_points)

    def train(self) -> PulseTrain:
        return PulseTrain(self.td_ps * 1e-12, self.ts_ps * 1e-12, self.n_pulses, self.eps,
                          self.pulse_first)

    @property
    def sample_dt(self) -> float:
        return self.sample_dt_ps * 1e-12

    @property
    def tail(self) -> float:
        return self.tail_ps * 1e-12


_TYPES = {f.name: f.type for f in fields(RunConfig)}
_POSITIVE = {"L_pH", "C_fF", "Ic_uA", "td_ps", "sample_dt_ps"}
_NON_NEGATIVE = {"ts_ps", "tail_ps", "n_pulses"}


def _parse_bool(s: str) -> bool:
    low = s.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _convert(key: str, raw: str):
    kind = _TYPES[key]
    if kind == "float":
        v = float(raw)
        if not math.isfinite(v):
            raise ValueError("must be finite")
        return v
    if kind == "int":
        return int(raw)
    if kind == "bool":
        return _parse_bool(raw)
    return raw


def _check(key: str, value) -> None:
    if key in _POSITIVE and not value > 0:
        raise ValueError("must be positive")
    if key in _NON_NEGATIVE and value < 0:
        raise ValueError("must be non-negative")
    if key == "eps" and not 0 < value < 0.5:
        raise ValueError("must lie in (0, 0.5)")
    if key == "n_states" and not 4 <= value <= MAX_STATES:
        raise ValueError(f"must lie in [4, {MAX_STATES}]")
    if key == "grid_points" and value < 257:
        raise ValueError("must be >= 257")
    if key == "initial" and value not in ("plus", "minus"):
        if not value.startswith("eigen:") or not value[6:].isdigit() or int(value[6:]) < 1:
            raise ValueError("must be plus, minus or eigen:K")
    if key == "out_dir" and not value:
        raise ValueError("must not be empty")


def parse_config(text: str) -> RunConfig:
    """Parse config text; omitted keys take the reference-device defaults."""
    values: dict[str, object] = {}
    lines: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, raw = (s.strip() for s in body.split("=", 1))
        if key not in _TYPES:
            raise ConfigError("unknown key", line=lineno, key=key)
        if key in values:
            raise ConfigError(f"duplicate key (first on line {lines[key]})", line=lineno, key=key)
        try:
            value = _convert(key, raw)
            _check(key, value)
        except ValueError as exc:
            raise ConfigError(f"invalid value {raw!r}: {exc}", line=lineno, key=key) from None
        values[key] = value
        lines[key] = lineno
    cfg = replace(RunConfig(), **values)
    try:
        cfg.squid_params().validate()
        cfg.grid()
    except SquidTipError as exc:
        raise ConfigError(str(exc)) from None
    if cfg.initial.startswith("eigen:") and int(cfg.initial[6:]) > cfg.n_states:
        raise ConfigError("eigenstate index exceeds n_states", line=lines.get("initial"),
                          key="initial")
    return cfg


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_config(text)


def serialize_config(cfg: RunConfig) -> str:
    out = []
    for f in fields(RunConfig):
        v = getattr(cfg, f.name)
        if isinstance(v, bool):
            v = "true" if v else "false"
        elif isinstance(v, float):
            v = repr(v)
        out.append(f"{f.name} = {v}")
    return "\n".join(out) + "\n"
