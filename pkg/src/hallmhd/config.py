"""Flat ``section.key = value`` configuration files merged with flag overrides.

Example::

    # comment
    grid.n = 64
    grid.L = 8*pi
    params.mu = 1.0
    integrator.dt = 0.02
    data.seeds = 1, 2, 3
    output.dir = runs/decay

Every key except ``output.dir`` names a field of :class:`ExperimentConfig`
under one of the sections below; the section only groups keys for the
reader. Later assignments win, and flags win over the file.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

from .experiments.common import ExperimentConfig


class ConfigError(ValueError):
    pass


SECTIONS = {
    "grid": ("n", "L"),
    "params": ("mu", "nu", "eps"),
    "integrator": ("dt", "t_end", "scheme", "stride"),
    "data": ("family", "amplitude", "slope", "k_cut", "seed", "seeds"),
    "besov": ("p", "q"),
    "decay": ("m_orders", "slope_tol", "w_growth_exponent", "min_window_decades"),
    "stability": ("eta", "calibration_margin", "gronwall_C", "control_factor"),
    "picard": ("picard_T", "picard_dt", "picard_tol", "picard_n_max"),
}
_OWNER = {k: s for s, keys in SECTIONS.items() for k in keys}
_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def _number(text):
    t = text.strip().replace(" ", "")
    if t.endswith("pi"):
        head = t[:-2].rstrip("*")
        return (float(head) if head else 1.0) * math.pi
    return float(t)


def _convert(name, text):
    default = _FIELDS[name].default
    try:
        if isinstance(default, tuple):
            parts = [p for p in text.replace(",", " ").split() if p]
            kind = type(default[0]) if default else float
            return tuple(kind(_number(p)) if kind is int else _number(p) for p in parts)
        if name == "k_cut":
            return None if text.strip().lower() in ("", "none") else _number(text)
        if isinstance(default, bool):
            return text.strip().lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            v = _number(text)
            if v != int(v):
                raise ValueError(f"{v} is not an integer")
            return int(v)
        if isinstance(default, float):
            return _number(text)
        return text.strip()
    except ValueError as e:
        raise ConfigError(f"bad value for {name}: {text!r} ({e})") from None


def parse_assignments(lines, source="<config>"):
    """Parse ``section.key = value`` lines into ``{dotted_key: raw_text}``."""
    out = {}
    for no, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{no}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        _check_key(key, f"{source}:{no}")
        out[key] = value
    return out


def _check_key(key, where):
    if key == "output.dir":
        return
    if "." not in key:
        raise ConfigError(f"{where}: key {key!r} needs a section prefix")
    section, name = key.split(".", 1)
    if section not in SECTIONS:
        raise ConfigError(f"{where}: unknown section {section!r}")
    if name not in SECTIONS[section]:
        raise ConfigError(f"{where}: unknown key {key!r}")


@dataclass
class RunConfig:
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)
    out_dir: str | None = None

    def resolved(self):
        d = self.experiment.describe()
        d["output.dir"] = self.out_dir
        return d


def load_config(path=None, overrides=None, base=None):
    """Merge ``base`` (an ExperimentConfig), a config file and ``overrides``.

    ``overrides`` maps either dotted keys or bare field names to raw text or
    already typed values; ``None`` values are skipped so unset flags do not
    clobber the file.
    """
    raw = {}
    if path is not None:
        try:
            with open(path) as fh:
                raw.update(parse_assignments(fh, path))
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from None
    typed = {}
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        dotted = key if "." in key or key == "output.dir" else f"{_OWNER.get(key, '?')}.{key}"
        _check_key(dotted, "flag")
        if isinstance(value, str):
            raw[dotted] = value
        else:
            raw.pop(dotted, None)
            typed[dotted] = value
    out_dir = None
    kw = {}
    for dotted, text in raw.items():
        if dotted == "output.dir":
            out_dir = text
            continue
        name = dotted.split(".", 1)[1]
        kw[name] = _convert(name, text)
    for dotted, value in typed.items():
        if dotted == "output.dir":
            out_dir = value
            continue
        kw[dotted.split(".", 1)[1]] = value
    cfg = base or ExperimentConfig()
    try:
        cfg = cfg.replace(**kw)
        cfg.grid()
        cfg.params()
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from None
    if not cfg.amplitude > 0:
        raise ConfigError("data.amplitude must be positive")
    return RunConfig(cfg, out_dir)
