"""Scenario configs, deterministic orchestration and report emission.

A scenario is read from JSON or from a flat ``key = value`` file::

    kind = distortion
    seed = 7
    n_values = 8, 16, 32, 64
    etas = 0.8
    coupling.model = exp_decay
    coupling.mag0 = 20

Numerical results depend only on the canonical config (see
:func:`config_hash`), never on the worker count or output location.
"""

from __future__ import annotations

import csv
import dataclasses
import enum
import hashlib
import io
import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import stat_engine as se
from .array_model import ExpDecay, FromFile, Ideal, gen_coupling
from .exceptions import ConfigError
from .feed_solver import OutputImpedanceRule, synthesize_load_modulation, synthesize_parasitic_loads
from .hardware_models import LoadGrid, quantized_current_evm
from .signal_source import Constellation, constellation_targets

SEED_ENV = "LMARRAY_SEED"

DEFAULT_N = (1, 2, 5, 10, 20, 50, 100, 200, 500, 1000)
DEFAULT_EPSILONS = (1e-2, 1e-3, 1e-4)
DEFAULT_ETAS = (0.7, 0.8, 0.9)
SWEEP_SAMPLES = 10**6


class ScenarioKind(enum.Enum):
    CREST = "crest"
    VSWR = "vswr"
    DISTORTION = "distortion"
    SYNTH = "synth"
    FIG4 = "fig4"


# Fields excluded from the config hash: they never change numerical output.
_UNHASHED = ("output_dir", "workers", "formats")


@dataclass(frozen=True)
class Scenario:
    kind: ScenarioKind
    seed: int = 0
    samples: int = SWEEP_SAMPLES
    n_values: tuple = DEFAULT_N
    epsilons: tuple = DEFAULT_EPSILONS
    etas: tuple = DEFAULT_ETAS
    crest_mode: str = "analytic"
    mismatch_models: tuple = (se.MismatchModel.POWER_CONSERVING.value,)
    vswr_epsilons: tuple = (1e-3,)
    policies: tuple = (se.ClipPolicy.MMSE.value, se.ClipPolicy.EQUAL.value)
    vswr_bins: int = 200
    vswr_max: float = 10.0
    coupling: dict = field(default_factory=lambda: {"model": "exp_decay"})
    synth_elements: int = 2
    synth_scheme: str = "psk"
    synth_order: int = 4
    synth_length: int = 16
    load_bits: int = 16
    load_range: tuple = (-500.0, 500.0)
    output_dir: str = "out"
    workers: int = 1
    formats: tuple = ("csv",)

    def __post_init__(self):
        _check(self)

    def canonical(self) -> dict:
        d = {}
        for f in dataclasses.fields(self):
            if f.name in _UNHASHED:
                continue
            v = getattr(self, f.name)
            d[f.name] = v.value if isinstance(v, enum.Enum) else (list(v) if isinstance(v, tuple) else v)
        d["coupling"] = {k: _jsonable(v) for k, v in sorted(self.coupling.items())}
        return d


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


def config_hash(s: Scenario) -> str:
    text = json.dumps(s.canonical(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def _check(s: Scenario):
    if not isinstance(s.kind, ScenarioKind):
        raise ConfigError("kind", f"unknown scenario kind {s.kind!r}")
    if not 0 <= s.seed < 2**64:
        raise ConfigError("seed", "must be an unsigned 64-bit integer")
    if s.samples < 1:
        raise ConfigError("samples", "must be >= 1")
    if s.workers < 1:
        raise ConfigError("workers", "must be >= 1")
    for name in ("n_values", "epsilons", "etas", "mismatch_models", "vswr_epsilons", "policies"):
        if not getattr(s, name):
            raise ConfigError(name, "must be a nonempty list")
    if any(n < 1 for n in s.n_values):
        raise ConfigError("n_values", "element counts must be >= 1")
    if list(s.n_values) != sorted(set(s.n_values)):
        raise ConfigError("n_values", "must be distinct and sorted ascending")
    for name in ("epsilons", "vswr_epsilons"):
        if any(not 0 < e < 0.5 for e in getattr(s, name)):
            raise ConfigError(name, "clip probabilities must lie in (0, 0.5)")
    if any(not 0 < e <= 1 for e in s.etas):
        raise ConfigError("etas", "efficiencies must lie in (0, 1]")
    if s.crest_mode not in ("analytic", "mc"):
        raise ConfigError("crest_mode", "must be 'analytic' or 'mc'")
    for m in s.mismatch_models:
        if m not in {x.value for x in se.MismatchModel}:
            raise ConfigError("mismatch_models", f"unknown model {m!r}")
    for p in s.policies:
        if p not in {x.value for x in se.ClipPolicy}:
            raise ConfigError("policies", f"unknown policy {p!r}")
    if s.vswr_bins < 1 or not s.vswr_max > 1:
        raise ConfigError("vswr_bins", "need >= 1 bin and vswr_max > 1")
    if s.synth_elements < 2:
        raise ConfigError("synth_elements", "a parasitic array needs >= 2 elements")
    if len(s.load_range) != 2 or not s.load_range[0] < s.load_range[1]:
        raise ConfigError("load_range", "need [x_min, x_max] with x_min < x_max")
    if not 1 <= s.load_bits <= 24:
        raise ConfigError("load_bits", "must lie in 1..24")
    bad = set(s.formats) - {"csv", "json", "plot"}
    if bad:
        raise ConfigError("formats", f"unknown format(s) {sorted(bad)}")
    coupling_kind(s.coupling)


def coupling_kind(spec: dict):
    model = spec.get("model", "exp_decay")
    args = {k: v for k, v in spec.items() if k != "model"}
    try:
        if model == "ideal":
            return Ideal(**{k: complex(v) if k == "z0" else v for k, v in args.items()})
        if model == "exp_decay":
            return ExpDecay(**{k: complex(v) if k == "z0" else float(v) for k, v in args.items()})
        if model == "file":
            return FromFile(args["path"])
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError("coupling", str(exc)) from None
    raise ConfigError("coupling.model", f"unknown model {model!r}")


# -- config parsing ------------------------------------------------------

_INT = {"seed", "samples", "workers", "vswr_bins", "synth_elements", "synth_order", "synth_length", "load_bits"}
_FLOAT = {"vswr_max"}
_INT_LIST = {"n_values"}
_FLOAT_LIST = {"epsilons", "etas", "vswr_epsilons", "load_range"}
_STR_LIST = {"mismatch_models", "policies", "formats"}
_STR = {"kind", "crest_mode", "synth_scheme", "output_dir"}
KNOWN_KEYS = _INT | _FLOAT | _INT_LIST | _FLOAT_LIST | _STR_LIST | _STR | {"coupling"}


def _complex_value(v):
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    return complex(str(v).replace(" ", ""))


def _as_int(v) -> int:
    """Integer from int-like input; accepts exact floats such as ``1e6``."""
    if isinstance(v, str):
        v = v.strip()
        try:
            return int(v)
        except ValueError:
            v = float(v)
    if isinstance(v, float):
        if not v.is_integer():
            raise ValueError(f"{v!r} is not an integer")
        return int(v)
    return int(v)


def _coerce(key, value):
    def as_list(v):
        if isinstance(v, str):
            return [p.strip() for p in v.split(",") if p.strip()]
        return list(v) if isinstance(v, (list, tuple)) else [v]

    try:
        if key in _INT:
            return _as_int(value)
        if key in _FLOAT:
            return float(value)
        if key in _INT_LIST:
            return tuple(_as_int(v) for v in as_list(value))
        if key in _FLOAT_LIST:
            return tuple(float(v) for v in as_list(value))
        if key in _STR_LIST:
            return tuple(str(v) for v in as_list(value))
        if key in _STR:
            return str(value)
    except (TypeError, ValueError):
        raise ConfigError(key, f"cannot interpret {value!r}") from None
    raise ConfigError(key, "unknown key")


def _coupling_dict(raw: dict) -> dict:
    out = {}
    for k, v in raw.items():
        if k in ("model", "path"):
            out[k] = str(v)
        elif k == "z0":
            try:
                out[k] = _complex_value(v)
            except ValueError:
                raise ConfigError("coupling.z0", f"not a complex number: {v!r}") from None
        else:
            try:
                out[k] = float(v)
            except (TypeError, ValueError):
                raise ConfigError(f"coupling.{k}", f"not a number: {v!r}") from None
    return out


def parse_flat(text: str) -> dict:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", "expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        if key.startswith("coupling."):
            raw.setdefault("coupling", {})[key.split(".", 1)[1]] = value
        else:
            raw[key] = value
    return raw


def parse_config_text(text: str) -> dict:
    """Parse JSON (object) or flat key=value text into a raw config dict."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config", "JSON config must be an object")
        return raw
    return parse_flat(text)


def scenario_from_dict(raw: dict, **overrides) -> Scenario:
    """Build a scenario from a raw dict plus non-None keyword overrides.

    Seed precedence: ``overrides['seed']`` > ``raw['seed']`` > ``$LMARRAY_SEED`` > 0.
    """
    merged = dict(raw)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    unknown = set(merged) - KNOWN_KEYS
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown key")
    if "kind" not in merged:
        raise ConfigError("kind", "missing")
    try:
        kind = ScenarioKind(str(merged.pop("kind")))
    except ValueError:
        raise ConfigError("kind", f"must be one of {[k.value for k in ScenarioKind]}") from None
    kwargs = {}
    for key, value in merged.items():
        if key == "coupling":
            if not isinstance(value, dict):
                raise ConfigError("coupling", "must be a table of model parameters")
            kwargs[key] = _coupling_dict(value)
        else:
            kwargs[key] = _coerce(key, value)
    if "seed" not in kwargs and os.environ.get(SEED_ENV):
        kwargs["seed"] = _coerce("seed", os.environ[SEED_ENV])
    if "n_values" in kwargs:
        kwargs["n_values"] = tuple(sorted(kwargs["n_values"]))
    return Scenario(kind=kind, **kwargs)


def load_scenario(path, **overrides) -> Scenario:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    return scenario_from_dict(parse_config_text(text), **overrides)


# -- orchestration -------------------------------------------------------


@dataclass
class ReportBundle:
    curves: list
    manifest: dict
    synthesis: list = field(default_factory=list)


def _crest(s: Scenario):
    return [se.crest_curve(s.n_values, e, s.crest_mode, s.samples, s.seed, s.workers) for e in s.epsilons]


def _vswr(s: Scenario):
    curves = []
    for eps in s.vswr_epsilons:
        for model in s.mismatch_models:
            per_n = [
                se.vswr_distribution(n, eps, model, s.samples, s.seed, s.workers, s.vswr_bins, s.vswr_max)
                for n in s.n_values
            ]
            curves.extend(per_n)
            curves.append(se.vswr_stats_curve(per_n))
    return curves


def _distortion(s: Scenario):
    curves = []
    for eta in s.etas:
        both = se.distortion_curves(s.n_values, eta, s.samples, s.seed, s.workers)
        curves.extend(both[se.ClipPolicy(p)] for p in s.policies)
    return curves


def _synth(s: Scenario):
    cm = gen_coupling(coupling_kind(s.coupling), s.synth_elements)
    spec = Constellation(s.synth_scheme, s.synth_order, s.synth_elements, s.synth_length)
    targets = constellation_targets(spec, s.seed)
    para = [synthesize_parasitic_loads(cm, t) for t in targets]

    rows = {k: [] for k in ("symbol", "port", "target_re", "target_im", "load_re", "load_im", "feasibility", "residual")}
    for sym, (t, syn) in enumerate(zip(targets, para)):
        for port, x, feas in zip(syn.ports, syn.loads, syn.feasibility):
            rows["symbol"].append(sym)
            rows["port"].append(port)
            rows["target_re"].append(t[port].real)
            rows["target_im"].append(t[port].imag)
            rows["load_re"].append(x.real)
            rows["load_im"].append(x.imag)
            rows["feasibility"].append(feas.value)
            rows["residual"].append(syn.residual)
    units = dict.fromkeys(rows, "1")
    units.update(target_re="A", target_im="A", load_re="ohm", load_im="ohm")
    grid = LoadGrid(s.load_bits, *s.load_range)
    q_evm = quantized_current_evm(cm, para, grid)
    meta = {"coupling": s.canonical()["coupling"], "scheme": s.synth_scheme, "order": s.synth_order}
    curves = [se.CurveReport("synth_parasitic", rows, units, meta)]

    summaries = [
        {
            "architecture": "parasitic",
            "max_residual": max(p.residual for p in para),
            "feasibility_counts": _count(f.value for p in para for f in p.feasibility),
            "active_feed_max_abs": max(abs(p.active_feed) for p in para),
            "quantized_bits": s.load_bits,
            "quantized_current_evm_db": q_evm,
        }
    ]
    for rule in OutputImpedanceRule:
        lm = [synthesize_load_modulation(cm, t, rule) for t in targets]
        lrows = {k: [] for k in ("symbol", "port", "zout_re", "zout_im", "vth_re", "vth_im", "residual")}
        for sym, syn in enumerate(lm):
            for port in range(cm.n):
                lrows["symbol"].append(sym)
                lrows["port"].append(port)
                lrows["zout_re"].append(syn.loads[port].real)
                lrows["zout_im"].append(syn.loads[port].imag)
                lrows["vth_re"].append(syn.voltages[port].real)
                lrows["vth_im"].append(syn.voltages[port].imag)
                lrows["residual"].append(syn.residual)
        lunits = dict.fromkeys(lrows, "1")
        lunits.update(zout_re="ohm", zout_im="ohm", vth_re="V", vth_im="V")
        curves.append(se.CurveReport(f"synth_load_modulated_{rule.value}", lrows, lunits, {"convention": rule.value}))
        summaries.append(
            {
                "architecture": f"load_modulated_{rule.value}",
                "max_residual": max(p.residual for p in lm),
                "feasibility_counts": _count(f.value for p in lm for f in p.feasibility),
            }
        )
    return curves, summaries


def _count(values) -> dict:
    out = {}
    for v in values:
        out[v] = out.get(v, 0) + 1
    return dict(sorted(out.items()))


def run_scenario(s: Scenario) -> ReportBundle:
    """Run a scenario. Output depends only on ``s.canonical()``."""
    t0 = time.perf_counter()
    synthesis = []
    if s.kind is ScenarioKind.CREST:
        curves = _crest(s)
    elif s.kind is ScenarioKind.VSWR:
        curves = _vswr(s)
    elif s.kind is ScenarioKind.DISTORTION:
        curves = _distortion(s)
    elif s.kind is ScenarioKind.SYNTH:
        curves, synthesis = _synth(s)
    else:
        curves = _crest(s) + _vswr(s) + _distortion(s)
    for c in curves:
        c.metadata.setdefault("scenario", s.kind.value)
    manifest = {
        "artifact_version": __version__,
        "kind": s.kind.value,
        "seed": s.seed,
        "samples": s.samples,
        "config": s.canonical(),
        "config_hash": config_hash(s),
        "wall_time_s": round(time.perf_counter() - t0, 3),
    }
    return ReportBundle(curves=curves, manifest=manifest, synthesis=synthesis)


# -- output --------------------------------------------------------------


def format_number(v) -> str:
    """Shortest round-trip decimal for floats; plain digits for integers."""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def curve_csv(curve) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(curve.columns))
    for row in zip(*curve.columns.values()):
        w.writerow([format_number(v) for v in row])
    return buf.getvalue()


def curve_plot_data(curve) -> str:
    lines = [f"# {curve.name}"]
    for k, v in sorted(curve.metadata.items()):
        lines.append(f"# {k}: {json.dumps(_to_json(v), sort_keys=True)}")
    names = list(curve.columns)[:2]
    lines.append("# " + " ".join(f"{n}[{curve.units[n]}]" for n in names))
    for a, b in zip(curve.x, curve.y):
        lines.append(f"{format_number(a)} {format_number(b)}")
    return "\n".join(lines) + "\n"


def _to_json(v):
    if isinstance(v, dict):
        return {str(k): _to_json(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_to_json(x) for x in v]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return f if np.isfinite(f) else repr(f)
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, enum.Enum):
        return v.value
    return v


def emit_outputs(bundle: ReportBundle, out_dir, formats=("csv",)) -> list[Path]:
    """Write the bundle to ``out_dir`` and return the written paths.

    ``csv`` writes ``<curve>.csv``; ``plot`` writes ``<curve>.dat`` plus
    rendered figures; ``json`` embeds the curve data in ``summary.json``.
    ``summary.json`` is always written and lists every other file.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc.strerror}") from exc
    formats = set(formats)
    written = []

    def put(name, text):
        path = out / name
        try:
            path.write_text(text, encoding="utf-8")
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc.strerror}") from exc
        written.append(path)

    curve_meta = {}
    for c in bundle.curves:
        entry = {"units": c.units, "metadata": _to_json(c.metadata), "files": []}
        if "csv" in formats:
            put(f"{c.name}.csv", curve_csv(c))
            entry["files"].append(f"{c.name}.csv")
        if "plot" in formats:
            put(f"{c.name}.dat", curve_plot_data(c))
            entry["files"].append(f"{c.name}.dat")
        if "json" in formats:
            entry["columns"] = {k: _to_json(v.tolist()) for k, v in c.columns.items()}
        curve_meta[c.name] = entry

    if "plot" in formats:
        from .plotting import render_figures

        written.extend(render_figures(bundle.curves, out))

    summary = dict(bundle.manifest)
    summary["curves"] = curve_meta
    if bundle.synthesis:
        summary["synthesis"] = _to_json(bundle.synthesis)
    summary["files"] = sorted(p.name for p in written)
    put("summary.json", json.dumps(_to_json(summary), indent=2, sort_keys=True) + "\n")
    return written
