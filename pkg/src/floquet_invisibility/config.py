"""Experiment configuration files.

Configs are flat TOML documents: one ``key = value`` per line, ``#`` comments.
The only nested value is ``potential``, an inline table from site index
(quoted) to amplitude, e.g. ``potential = {"-1" = 1.0, "0" = 1.0}``.
"""

from __future__ import annotations

import dataclasses
import re
import sys
from dataclasses import dataclass, fields
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ParseError, ValidationError
from .model import LatticeModel

KINDS = ("spectrum", "wavepacket", "boundstates", "verify")
REQUIRED = {
    "spectrum": ("omega", "delta", "potential"),
    "wavepacket": ("omega", "delta", "potential", "q0"),
    "boundstates": ("omega", "delta", "potential"),
    "verify": (),
}


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    # model
    kappa: float = 1.0
    omega: float | None = None
    delta: float | None = None
    v0: float | None = None
    potential: dict | None = None
    # spectra
    N: int = 40
    grid: int = 2000
    e_min: float | None = None
    e_max: float | None = None
    method: str = "matrix"
    channel_columns: int = 3
    # wave packets
    dt: float = 0.005
    L: int = 400
    n0: int = -80
    q0: float | None = None
    w: float = 20.0
    t_end: float = 100.0
    stride: float = 0.5
    # bound states
    bs_channels: int = 21
    real_step: float = 1e-3
    # output
    plot: bool = True
    logy: bool = False
    ceiling: float = 10.0
    seed: int = 0
    name: str = ""

    def model(self):
        if self.potential is not None:
            pot = self.potential
        elif self.v0 is not None:
            pot = {0: self.v0}
        else:
            raise ValidationError("config defines no potential (set v0 or potential)", "potential")
        return LatticeModel(self.kappa, self.omega, self.delta or 0.0, pot)

    def replace(self, **kw):
        return validate(dataclasses.replace(self, **kw))


_FIELDS = {f.name: f for f in fields(ExperimentConfig)}
_INT_FIELDS = {"N", "grid", "L", "n0", "channel_columns", "bs_channels", "seed"}
_BOOL_FIELDS = {"plot", "logy"}
_STR_FIELDS = {"kind", "method", "name"}


def _line_of(text, key):
    pat = re.compile(rf"^\s*{re.escape(key)}\s*=")
    for i, line in enumerate(text.splitlines(), 1):
        if pat.match(line):
            return i
    return None


def _coerce(key, value, text):
    line = _line_of(text, key)
    if key == "potential":
        if not isinstance(value, dict):
            raise ParseError("potential must be an inline table of site = amplitude", line, key)
        out = {}
        for site, amp in value.items():
            try:
                out[int(site)] = float(amp)
            except (TypeError, ValueError):
                raise ParseError(f"bad potential entry {site!r} = {amp!r}", line, key) from None
        return out
    if key in _BOOL_FIELDS:
        if not isinstance(value, bool):
            raise ParseError(f"{key} must be true or false", line, key)
        return value
    if key in _STR_FIELDS:
        if not isinstance(value, str):
            raise ParseError(f"{key} must be a string", line, key)
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"{key} must be a number", line, key)
    if key in _INT_FIELDS:
        if float(value) != int(value):
            raise ParseError(f"{key} must be an integer", line, key)
        return int(value)
    return float(value)


def parse_config(text, kind=None):
    """Parse and validate a config document.

    ``kind`` (from the CLI subcommand) fills in or must agree with the
    document's own ``kind`` key.
    """
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ParseError(f"malformed config: {exc}", int(m.group(1)) if m else None) from None
    values = {}
    for key, value in raw.items():
        if key not in _FIELDS:
            line = _line_of(text, key)
            where = f" (line {line})" if line else ""
            raise ParseError(f"unknown key {key!r}{where}", line, key)
        values[key] = _coerce(key, value, text)
    if kind is not None:
        if values.get("kind", kind) != kind:
            raise ValidationError(f"config kind {values['kind']!r} does not match {kind!r}", "kind")
        values["kind"] = kind
    if "kind" not in values:
        raise ValidationError("missing required key 'kind'", "kind")
    return validate(ExperimentConfig(**values))


def load_config(path, kind=None):
    cfg = parse_config(Path(path).read_text(), kind)
    if not cfg.name:
        cfg = dataclasses.replace(cfg, name=Path(path).stem)
    return cfg


def validate(cfg):
    if cfg.kind not in KINDS:
        raise ValidationError(f"kind must be one of {KINDS}, got {cfg.kind!r}", "kind")
    for key in REQUIRED[cfg.kind]:
        if key == "potential":
            if cfg.v0 is None and cfg.potential is None:
                raise ValidationError(f"{cfg.kind} config needs v0 or potential", "potential")
        elif getattr(cfg, key) is None:
            raise ValidationError(f"{cfg.kind} config needs {key!r}", key)
    if cfg.v0 is not None and cfg.potential is not None:
        raise ValidationError("set either v0 or potential, not both", "potential")
    checks = [
        (cfg.kappa > 0, "kappa", "kappa must be > 0"),
        (cfg.omega is None or cfg.omega >= 0, "omega", "omega must be >= 0"),
        (cfg.grid >= 2, "grid", "grid size must be >= 2"),
        (cfg.N >= 1, "N", "channel truncation N must be >= 1"),
        (0 < cfg.dt <= 0.02 / cfg.kappa, "dt", "dt must lie in (0, 0.02/kappa]"),
        (cfg.w >= 4, "w", "packet width w must be >= 4"),
        (cfg.L > 0, "L", "lattice half-size L must be > 0"),
        (cfg.t_end > 0, "t_end", "t_end must be > 0"),
        (cfg.stride > 0, "stride", "snapshot stride must be > 0"),
        (cfg.method in ("matrix", "closed_form"), "method", "method must be 'matrix' or 'closed_form'"),
        (cfg.bs_channels >= 3 and cfg.bs_channels % 2 == 1, "bs_channels", "bs_channels must be odd and >= 3"),
        (cfg.ceiling > 0, "ceiling", "ceiling must be > 0"),
        (cfg.real_step > 0, "real_step", "real_step must be > 0"),
    ]
    for ok, key, msg in checks:
        if not ok:
            raise ValidationError(msg, key)
    if cfg.kind == "boundstates" and cfg.potential is not None and set(cfg.potential) - {0}:
        raise ValidationError("bound-state analysis needs a single impurity at n = 0", "potential")
    if cfg.e_min is not None and cfg.e_max is not None and not cfg.e_min < cfg.e_max:
        raise ValidationError("e_min must be below e_max", "e_min")
    return cfg
