"""Flat ``key = value`` run configuration and its canonical hash.

Sections are dotted prefixes (``model.mass``, ``slab.a`` ...).  Lists are
comma separated.  Unknown keys are rejected so that typos cannot silently
fall back to defaults.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, EmptySpectrum

OUTPUT_ENV = "FPSTATES_OUTPUT_DIR"


def _floats(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _ints(text):
    return tuple(int(v) for v in text.split(",") if v.strip())


def _strings(text):
    return tuple(v.strip() for v in text.split(",") if v.strip())


# key -> (parser, default)
_SCHEMA = {
    "model.mass": (float, 1.0),
    "model.lengths": (_floats, (2 * math.pi,) * 3),
    "slab.a": (float, -1.0),
    "slab.b": (float, 1.0),
    "soften.kind": (str, "indicator"),
    "soften.params": (_strings, ()),
    "cutoff": (float, 20.0),
    "diagnostics.decay_floor": (float, 0.1),
    "diagnostics.window_fraction": (float, 0.25),
    "diagnostics.tail_tol": (float, 1e-8),
    "diagnostics.rolling": (int, 5),
    "diagnostics.powers": (_ints, (0, 2)),
    "diagnostics.fluctuation_powers": (_ints, (1, 2)),
    "diagnostics.hhat0": (float, 1.0),
    "diagnostics.expect": (str, "any"),
    "kernel.norm_modes": (int, 0),
    "kernel.samples": (int, 4096),
    "output.dir": (str, ""),
    "seed": (int, 0),
}


@dataclass(frozen=True)
class RunConfig:
    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    @property
    def output_dir(self):
        """Output directory; the environment variable wins over the file."""
        return os.environ.get(OUTPUT_ENV) or self.values["output.dir"] or "."

    def canonical(self):
        """JSON-ready dict with sorted keys and lists instead of tuples."""
        out = {}
        for key in sorted(self.values):
            if key == "output.dir":
                continue  # where results go does not change them
            v = self.values[key]
            out[key] = list(v) if isinstance(v, tuple) else v
        return out

    def config_hash(self):
        return config_hash(self.canonical())


def config_hash(mapping):
    text = json.dumps(mapping, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def parse_config(text, source="<config>", base_dir=None):
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        if key not in _SCHEMA:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        raw[key] = value.strip()
    values = {}
    for key, (parser, default) in _SCHEMA.items():
        if key in raw:
            try:
                values[key] = parser(raw[key])
            except ValueError as exc:
                raise ConfigError(f"{source}: bad value for {key}: {exc}") from None
        else:
            values[key] = default
    if values["soften.kind"] == "file" and base_dir is not None:
        values["soften.params"] = tuple(str((Path(base_dir) / p).resolve())
                                        for p in values["soften.params"])
    if len(values["model.lengths"]) == 1:
        values["model.lengths"] = values["model.lengths"] * 3
    cfg = RunConfig(values)
    validate(cfg)
    return cfg


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, str(path), base_dir=path.parent)


def validate(cfg):
    v = cfg.values
    if len(v["model.lengths"]) != 3:
        raise ConfigError("model.lengths needs one or three values")
    for key in ("diagnostics.decay_floor", "diagnostics.window_fraction"):
        if not 0 < v[key] < 1 and not (key.endswith("fraction") and v[key] == 1):
            raise ConfigError(f"{key} must lie in (0, 1)")
    if not 0 < v["diagnostics.tail_tol"] < 1:
        raise ConfigError("diagnostics.tail_tol must lie in (0, 1)")
    if v["diagnostics.expect"] not in ("any", "converged", "diverging", "inconclusive"):
        raise ConfigError("diagnostics.expect must be any, converged, diverging or inconclusive")
    if v["soften.kind"] not in ("indicator", "bump", "file"):
        raise ConfigError("soften.kind must be indicator, bump or file")
    if v["soften.kind"] == "file":
        for p in v["soften.params"]:
            if not Path(p).is_file():
                raise ConfigError(f"softening file {p} does not exist")
    if v["cutoff"] < v["model.mass"]:
        raise EmptySpectrum(f"cutoff {v['cutoff']} is inside the mass gap (mass {v['model.mass']})")
