"""Experiment configuration: per-command option schemas, YAML loading, datum specs.

A config file is a YAML mapping of option names (as in the CLI, with
underscores) to values, optionally with ``command``, ``outdir`` and
``label``.  Relative config names are looked up in the directory named by
``CRITLAB_CONFIG_DIR``.  Command-line flags override file values.
"""

import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

import yaml

from .errors import ValidationError

CONFIG_DIR_ENV = "CRITLAB_CONFIG_DIR"


def _pos(v):
    return v > 0


def _nonneg(v):
    return v >= 0


def _pow2(v):
    return v >= 8 and (v & (v - 1)) == 0


# option -> (type, default, validator or None)
SCHEMAS = {
    "hopf": {
        "datum": (str, "sech2:1", None),
        "t": (float, 0.1, _nonneg),
        "xmin": (float, -6.0, None),
        "xmax": (float, 6.0, None),
        "n": (int, 601, lambda v: v >= 2),
    },
    "catastrophe": {
        "datum": (str, "sech2:1", None),
    },
    "hierarchy": {
        "m": (int, 2, lambda v: 1 <= v <= 6),
    },
    "evolve": {
        "eq": (str, "kdv", None),
        "datum": (str, "sech2:1", None),
        "eps": (float, 0.1, _pos),
        "L": (float, 20.0, _pos),
        "n": (int, 4096, _pow2),
        "dt": (float, 1e-5, _pos),
        "t_end": (float, 0.25, _pos),
        "snap": (float, 0.05, _pos),
        "m": (int, 1, lambda v: 1 <= v <= 6),
        "power": (int, 1, lambda v: v >= 1),
        "c": (str, "12", None),
        "p": (str, "0", None),
        "observe_every": (int, 100, _pos),
    },
    "painleve-u": {
        "T": (float, 0.0, None),
        "xmax": (float, 200.0, lambda v: v >= 50),
        "n": (int, 8000, lambda v: v >= 2000),
    },
    "painleve-q": {
        "ray_angle": (float, 0.0, lambda v: abs(v) < 1.5707963267948966),
        "zfar": (float, 100.0, lambda v: v >= 50),
        "znear": (float, 1.0, _pos),
        "samples": (int, 2001, lambda v: v >= 2),
        "continue_angle": (float, None, None),
        "max_len": (float, 10.0, _pos),
        "max_poles": (int, 1, _pos),
    },
    "rh-check": {
        "problem": (str, "psi_p12", None),
        "datum": (str, "sech2:1", None),
        "eps": (float, 0.1, _pos),
        "x": (float, 0.0, None),
        "t": (float, 0.0, _nonneg),
        "m": (int, 2, lambda v: v >= 1),
        "samples": (int, 50, _pos),
    },
    "phi": {
        "datum": (str, "sech2:1", None),
        "x": (float, None, None),
        "t": (float, None, _pos),
        "lambda_min": (float, None, None),
        "lambda_max": (float, None, None),
        "points": (int, 41, lambda v: v >= 2),
    },
    "universality": {
        "datum": (str, "sech2:1", None),
        "eps": (str, "0.1,0.07,0.05", None),
        "window": (str, "1,1", None),
        "L": (float, 20.0, _pos),
        "n": (int, 4096, _pow2),
        "dt": (float, 5e-5, _pos),
        "control_offset": (float, 0.05, _pos),
        "xmax": (float, 50.0, lambda v: v >= 50),
        "pn": (int, 4000, lambda v: v >= 2000),
        "workers": (int, 1, _pos),
    },
}

COMMON = {"outdir", "label", "command"}


@dataclass
class ExperimentConfig:
    command: str
    options: dict
    outdir: str = "runs"
    label: str = ""
    source: str = ""
    extra: dict = field(default_factory=dict)

    def as_dict(self):
        d = asdict(self)
        d.pop("extra")
        return d


def resolve_config_path(name):
    p = Path(name)
    if p.is_file():
        return p
    base = os.environ.get(CONFIG_DIR_ENV)
    if base:
        for cand in (Path(base) / name, Path(base) / f"{name}.yaml"):
            if cand.is_file():
                return cand
    raise ValidationError(f"config {name!r} not found (also looked in ${CONFIG_DIR_ENV})")


def load_config_file(name):
    path = resolve_config_path(name)
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: top level must be a mapping")
    # a run manifest (JSON is YAML) re-runs its resolved config
    if "config" in data and "version" in data:
        data = data["config"]
    if "options" in data:
        data = {**data["options"], **{k: data[k] for k in COMMON if data.get(k)}}
    return data, str(path)


def _coerce(key, typ, value):
    if value is None:
        return None
    try:
        if typ is int:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        if typ is float:
            return float(value)
        return str(value)
    except (TypeError, ValueError):
        raise ValidationError(f"option {key!r}: cannot read {value!r} as {typ.__name__}") from None


def build_config(command, file_values=None, overrides=None, source=""):
    """Merge schema defaults, file values and CLI overrides; validate everything."""
    if command not in SCHEMAS:
        raise ValidationError(f"unknown command {command!r}")
    schema = SCHEMAS[command]
    file_values = dict(file_values or {})
    fc = file_values.pop("command", command)
    if fc != command:
        raise ValidationError(f"config is for {fc!r}, not {command!r}")
    unknown = set(file_values) - set(schema) - COMMON
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    opts = {k: d for k, (_, d, _) in schema.items()}
    merged = {**file_values, **{k: v for k, v in (overrides or {}).items() if v is not None}}
    for k, v in merged.items():
        if k in schema:
            opts[k] = v
    for k, (typ, _, check) in schema.items():
        opts[k] = _coerce(k, typ, opts[k])
        if opts[k] is not None and check is not None and not check(opts[k]):
            raise ValidationError(f"option {k!r} has invalid value {opts[k]!r}")
    outdir = str(merged.get("outdir") or "runs")
    label = str(merged.get("label") or "")
    return ExperimentConfig(command=command, options=opts, outdir=outdir, label=label,
                            source=source)


def load_datum(spec):
    """Datum from 'sech2:A', 'table:path.csv' or a YAML file {kind: ..., ...}."""
    from .initial_data import load_table, make_sech_datum

    spec = str(spec)
    if spec.startswith("sech2"):
        _, _, amp = spec.partition(":")
        try:
            A = float(amp) if amp else 1.0
        except ValueError:
            raise ValidationError(f"bad amplitude in datum spec {spec!r}") from None
        return make_sech_datum(A)
    if spec.startswith("table:"):
        path = spec[len("table:"):]
        if not Path(path).is_file():
            raise ValidationError(f"datum table {path!r} not found")
        return load_table(path)
    p = Path(spec)
    if p.is_file() and p.suffix in (".yaml", ".yml"):
        with open(p) as fh:
            d = yaml.safe_load(fh) or {}
        kind = d.get("kind")
        if kind == "sech2":
            extra = set(d) - {"kind", "amplitude"}
            if extra:
                raise ValidationError(f"unknown datum keys {sorted(extra)}")
            return make_sech_datum(float(d.get("amplitude", 1.0)))
        if kind == "table":
            extra = set(d) - {"kind", "samples", "path"}
            if extra:
                raise ValidationError(f"unknown datum keys {sorted(extra)}")
            if not ("samples" in d) ^ ("path" in d):
                raise ValidationError("table datum needs exactly one of 'samples' or 'path'")
            tp = Path(d.get("samples", d.get("path")))
            if not tp.is_absolute():
                tp = p.parent / tp
            return load_table(tp)
        raise ValidationError(f"unknown datum kind {kind!r}")
    raise ValidationError(f"cannot interpret datum spec {spec!r}")


def parse_float_list(text, count=None):
    try:
        vals = [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ValidationError(f"expected comma-separated numbers, got {text!r}") from None
    if count is not None and len(vals) != count:
        raise ValidationError(f"expected {count} numbers, got {text!r}")
    return vals
