"""Scenario files: schema, line-anchored validation, resolution and execution.

A scenario is a YAML mapping::

    name: fig4_cats                 # required
    description: free text
    dim: 140                        # Fock levels per mode
    budget_seconds: 900             # documented runtime budget (not enforced)
    defaults: {<point keys>}        # merged under every point
    sweep: {<point key>: [values]}  # Cartesian product applied to every point
    points: [{<point keys>}, ...]   # required, at least one
    wigner: {x: [lo, hi, count], p: [lo, hi, count]}

Point keys and units:

    label            str      row label (default: scheme + index)
    scheme           str      fock_prep | photon_add_opa | photon_add_fock |
                              cubic_opa | cubic_fock | cat_breed | gkp_breed
    dim              int      Fock levels per mode
    kappa            float    OPA gain (dimensionless); Fock-source gain for *_fock
    r                float    seed squeezing parameter (nepers)
    r_db             float    seed squeezing in dB (alternative to r)
    alpha            complex  coherent amplitude, e.g. "-1.35i"
    n                int      heralded photon number per round
    k                int      rounds
    tau              float    photon-addition beamsplitter transmissivity
    switch_loss      float    per-round switch loss (fraction in [0, 1])
    loss_every_round bool     also apply switch loss after the last round
    detector         mapping  {efficiency: fraction, dark_rate: counts/s, window: s}
    clock_rate       float    attempts per second (Hz)
    target_r         float    photon-added target squeezing (nepers); omit to optimise
    gamma            float    cubic target non-linearity (enables correction + fidelity)
    cat_alpha        float    initial guess for the cat-target amplitude
    cat_r            float    initial guess for the cat-target squeezing (nepers)
    threshold        str      loss | efficiency (GKP threshold search)
    threshold_floor  float    squeezing floor in dB (default 9.75)
    wigner           bool     write the output state's Wigner grid
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from . import protocols as P
from .channels import DetectorModel
from .metrics import db_to_r, wigner

SCHEMES = tuple(P.ProtocolConfig._REQUIRED)
THRESHOLDS = ("loss", "efficiency")


class ScenarioError(ValueError):
    """Validation failure; ``str()`` is ``file:line:col: message``."""

    def __init__(self, message: str, mark=None, source: str = "<scenario>"):
        self.mark = mark
        self.source = source
        if mark is not None:
            loc = f"{source}:{mark.line + 1}:{mark.column + 1}"
        else:
            loc = source
        super().__init__(f"{loc}: {message}")


# ---------------------------------------------------------------------------
# loading with source marks
# ---------------------------------------------------------------------------


class _Marked(dict):
    """dict remembering the source mark of each key (and of itself)."""

    mark = None
    key_marks: dict
    value_marks: dict


class _Loader(yaml.SafeLoader):
    pass


def _construct_mapping(loader, node):
    loader.flatten_mapping(node)
    out = _Marked()
    out.mark = node.start_mark
    out.key_marks = {}
    out.value_marks = {}
    for knode, vnode in node.value:
        key = loader.construct_object(knode, deep=True)
        if not isinstance(key, str):
            raise ScenarioError("mapping keys must be strings", knode.start_mark)
        if key in out:
            raise ScenarioError(f"duplicate key {key!r}", knode.start_mark)
        out[key] = loader.construct_object(vnode, deep=True)
        out.key_marks[key] = knode.start_mark
        out.value_marks[key] = vnode.start_mark
    return out


class _MarkedList(list):
    marks: list
    mark = None


def _construct_sequence(loader, node):
    out = _MarkedList(loader.construct_object(c, deep=True) for c in node.value)
    out.marks = [c.start_mark for c in node.value]
    out.mark = node.start_mark
    return out


_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)
_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_SEQUENCE_TAG, _construct_sequence)


def _parse_yaml(text: str, source: str):
    try:
        data = yaml.load(text, Loader=_Loader)  # noqa: S506 (SafeLoader subclass)
    except ScenarioError as e:
        raise ScenarioError(str(e).split(": ", 1)[1], e.mark, source) from None
    except yaml.MarkedYAMLError as e:
        raise ScenarioError(f"YAML syntax error: {e.problem}", e.problem_mark, source) from None
    if not isinstance(data, dict):
        raise ScenarioError("scenario must be a mapping", None, source)
    return data


# ---------------------------------------------------------------------------
# schema
# ---------------------------------------------------------------------------


def _as_int(v):
    if isinstance(v, bool) or not isinstance(v, int):
        raise TypeError("an integer")
    return int(v)


def _as_float(v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise TypeError("a number")
    v = float(v)
    if not math.isfinite(v):
        raise TypeError("a finite number")
    return v


def _as_complex(v):
    if isinstance(v, bool):
        raise TypeError("a complex number")
    if isinstance(v, (int, float)):
        return complex(_as_float(v))
    if isinstance(v, str):
        s = v.strip().replace(" ", "").replace("i", "j")
        try:
            c = complex(s)
        except ValueError:
            raise TypeError('a complex number such as "-1.35i"') from None
        if not (math.isfinite(c.real) and math.isfinite(c.imag)):
            raise TypeError("a finite complex number")
        return c
    raise TypeError('a complex number such as "-1.35i"')


def _as_str(v):
    if not isinstance(v, str):
        raise TypeError("a string")
    return v


def _as_bool(v):
    if not isinstance(v, bool):
        raise TypeError("true or false")
    return v


def _enum(*choices):
    def conv(v):
        if v not in choices:
            raise TypeError("one of " + ", ".join(choices))
        return v

    return conv


def _nonneg_int(v):
    v = _as_int(v)
    if v < 0:
        raise TypeError("a non-negative integer")
    return v


def _dim(v):
    v = _as_int(v)
    if v < 2:
        raise TypeError("an integer >= 2")
    return v


def _fraction(v):
    v = _as_float(v)
    if not 0.0 <= v <= 1.0:
        raise TypeError("a number in [0, 1]")
    return v


DETECTOR_SCHEMA = {"efficiency": _fraction, "dark_rate": _as_float, "window": _as_float}

POINT_SCHEMA = {
    "label": _as_str,
    "scheme": _enum(*SCHEMES),
    "dim": _dim,
    "kappa": _as_float,
    "r": _as_float,
    "r_db": _as_float,
    "alpha": _as_complex,
    "n": _nonneg_int,
    "k": _nonneg_int,
    "tau": _fraction,
    "switch_loss": _fraction,
    "loss_every_round": _as_bool,
    "detector": DETECTOR_SCHEMA,
    "clock_rate": _as_float,
    "target_r": _as_float,
    "gamma": _as_float,
    "cat_alpha": _as_float,
    "cat_r": _as_float,
    "threshold": _enum(*THRESHOLDS),
    "threshold_floor": _as_float,
    "wigner": _as_bool,
}

#: Column order of the results table (inputs first).
INPUT_COLUMNS = [k for k in POINT_SCHEMA if k not in ("detector", "wigner")] + [
    "efficiency",
    "dark_rate",
    "window",
]


def _check_mapping(data, schema: dict, source: str, where: str) -> dict:
    if not isinstance(data, dict):
        raise ScenarioError(f"{where} must be a mapping", getattr(data, "mark", None), source)
    out = {}
    for key, value in data.items():
        kmark, vmark = _kmark(data, key), _vmark(data, key)
        if key not in schema:
            raise ScenarioError(f"unknown key {key!r} in {where}", kmark, source)
        conv = schema[key]
        if isinstance(conv, dict):
            out[key] = _check_mapping(value, conv, source, f"{where}.{key}")
            continue
        try:
            out[key] = conv(value)
        except TypeError as e:
            raise ScenarioError(f"{where}.{key} must be {e}", vmark, source) from None
    return out


def _wigner_axis(v, mark, source, name):
    if not (isinstance(v, list) and len(v) == 3):
        raise ScenarioError(f"wigner.{name} must be [lo, hi, count]", mark, source)
    try:
        lo, hi = _as_float(v[0]), _as_float(v[1])
        cnt = _as_int(v[2])
    except TypeError as e:
        raise ScenarioError(f"wigner.{name} entries must be numbers ({e})", mark, source) from None
    if not (hi > lo and cnt >= 2):
        raise ScenarioError(f"wigner.{name} needs hi > lo and count >= 2", mark, source)
    return [lo, hi, cnt]


@dataclass
class Scenario:
    name: str
    description: str
    dim: Optional[int]
    budget_seconds: Optional[float]
    points: list
    wigner_grid: Optional[dict]
    source: str = "<scenario>"

    def resolved(self, dim_override: Optional[int] = None) -> list:
        """Expanded points with defaults, sweeps and dimension precedence applied."""
        out = []
        for p in self.points:
            q = dict(p)
            if dim_override is not None:
                q["dim"] = dim_override
            q.setdefault("dim", self.dim or 120)
            out.append(q)
        return out


def validate(data: dict, source: str = "<scenario>") -> Scenario:
    top_schema = {"name", "description", "dim", "budget_seconds", "defaults", "sweep", "points", "wigner"}
    for key in data:
        if key not in top_schema:
            raise ScenarioError(f"unknown top-level key {key!r}", _kmark(data, key), source)
    if "name" not in data:
        raise ScenarioError("missing required key 'name'", getattr(data, "mark", None), source)
    if "points" not in data:
        raise ScenarioError("missing required key 'points'", getattr(data, "mark", None), source)
    head = _check_mapping(
        _subset(data, ("name", "description", "dim", "budget_seconds")),
        {"name": _as_str, "description": _as_str, "dim": _dim, "budget_seconds": _as_float},
        source,
        "scenario",
    )
    defaults = _check_mapping(data["defaults"], POINT_SCHEMA, source, "defaults") if "defaults" in data else {}
    sweep = {}
    if "sweep" in data:
        sw = data["sweep"]
        if not isinstance(sw, dict):
            raise ScenarioError("sweep must be a mapping of key -> list", _vmark(data, "sweep"), source)
        for key, values in sw.items():
            kmark = _kmark(sw, key)
            if key not in POINT_SCHEMA or isinstance(POINT_SCHEMA[key], dict):
                raise ScenarioError(f"cannot sweep over {key!r}", kmark, source)
            if not isinstance(values, list) or not values:
                raise ScenarioError(f"sweep.{key} must be a non-empty list", kmark, source)
            conv = []
            for i, v in enumerate(values):
                try:
                    conv.append(POINT_SCHEMA[key](v))
                except TypeError as e:
                    m = values.marks[i] if isinstance(values, _MarkedList) else kmark
                    raise ScenarioError(f"sweep.{key}[{i}] must be {e}", m, source) from None
            sweep[key] = conv
    raw_points = data["points"]
    if not isinstance(raw_points, list) or not raw_points:
        raise ScenarioError("points must be a non-empty list", _vmark(data, "points"), source)
    points = []
    for i, rp in enumerate(raw_points):
        pt = _check_mapping(rp, POINT_SCHEMA, source, f"points[{i}]")
        mark = getattr(rp, "mark", None)
        combos = [dict(zip(sweep, vals)) for vals in itertools.product(*sweep.values())] if sweep else [{}]
        for j, combo in enumerate(combos):
            q = {**defaults, **combo, **pt}
            if "detector" in defaults and "detector" in pt:
                q["detector"] = {**defaults["detector"], **pt["detector"]}
            _check_point(q, mark, source, f"points[{i}]")
            if "label" not in q:
                q["label"] = f"{q['scheme']}_{i}" + (f"_{j}" if len(combos) > 1 else "")
            elif len(combos) > 1:
                q["label"] = q["label"] + "_" + "_".join(f"{k}{_fmt_label(v)}" for k, v in combo.items())
            points.append(q)
    labels = [p["label"] for p in points]
    dup = sorted({x for x in labels if labels.count(x) > 1})
    if dup:
        raise ScenarioError(f"duplicate point labels: {', '.join(dup)}", _vmark(data, "points"), source)
    grid = None
    if "wigner" in data:
        w = data["wigner"]
        if not isinstance(w, dict) or set(w) != {"x", "p"}:
            raise ScenarioError("wigner must be a mapping with keys x and p", _vmark(data, "wigner"), source)
        grid = {ax: _wigner_axis(w[ax], _vmark(w, ax), source, ax) for ax in ("x", "p")}
    if any(p.get("wigner") for p in points) and grid is None:
        raise ScenarioError("points request wigner output but no wigner grid is declared", getattr(data, "mark", None), source)
    return Scenario(
        name=head["name"],
        description=head.get("description", ""),
        dim=head.get("dim"),
        budget_seconds=head.get("budget_seconds"),
        points=points,
        wigner_grid=grid,
        source=source,
    )


def _subset(d: dict, keys) -> dict:
    if not isinstance(d, _Marked):
        return {k: d[k] for k in keys if k in d}
    out = _Marked({k: d[k] for k in keys if k in d})
    out.mark = d.mark
    out.key_marks = {k: d.key_marks[k] for k in out}
    out.value_marks = {k: d.value_marks[k] for k in out}
    return out


def _kmark(d, key):
    return d.key_marks.get(key) if isinstance(d, _Marked) else None


def _vmark(d, key):
    return d.value_marks.get(key) if isinstance(d, _Marked) else None


def _fmt_label(v) -> str:
    return repr(v) if not isinstance(v, str) else v


def _check_point(q: dict, mark, source: str, where: str):
    if "scheme" not in q:
        raise ScenarioError(f"{where}: missing 'scheme'", mark, source)
    if "r" in q and "r_db" in q:
        raise ScenarioError(f"{where}: give either r or r_db, not both", mark, source)
    if "threshold" in q and q["scheme"] != "gkp_breed":
        raise ScenarioError(f"{where}: threshold applies to gkp_breed only", mark, source)
    det = q.get("detector", {})
    if det.get("dark_rate", 0.0) > 0 and det.get("efficiency", 1.0) >= 1.0 and q.get("threshold") != "efficiency":
        raise ScenarioError(f"{where}: dark counts unrepresentable at unit efficiency", mark, source)
    try:
        _config(q)
    except (ValueError, TypeError) as e:
        raise ScenarioError(f"{where}: {e}", mark, source) from None


def _detector(q: dict) -> Optional[DetectorModel]:
    d = q.get("detector")
    if not d or q.get("threshold") == "efficiency":
        # efficiency-threshold rows run the ideal-detector reference; the search varies eta
        return None
    return DetectorModel(d.get("efficiency", 1.0), d.get("dark_rate", 0.0), d.get("window", 1e-9))


def _seed_r(q: dict) -> Optional[float]:
    if "r_db" in q:
        return db_to_r(q["r_db"])
    return q.get("r")


def _config(q: dict) -> P.ProtocolConfig:
    return P.ProtocolConfig(
        scheme=q["scheme"],
        dim=q.get("dim", 120),
        kappa=q.get("kappa"),
        r=_seed_r(q),
        alpha=q.get("alpha"),
        n=q.get("n"),
        k=q.get("k", 1),
        tau=q.get("tau"),
        switch_loss=q.get("switch_loss", 0.0),
        loss_every_round=q.get("loss_every_round", False),
        detector=_detector(q),
        clock_rate=q.get("clock_rate"),
    )


# ---------------------------------------------------------------------------
# discovery
# ---------------------------------------------------------------------------


def _bundled_dir():
    return resources.files("opasim") / "scenarios"


def bundled_names() -> list:
    return sorted(p.name[:-5] for p in _bundled_dir().iterdir() if p.name.endswith(".yaml"))


def find_bundled(name: str) -> list:
    """Exact name, else every bundled scenario starting with ``name``."""
    names = bundled_names()
    if name in names:
        return [name]
    return [n for n in names if n.startswith(name)]


def load(path_or_name: str) -> Scenario:
    """Load a scenario from a path, or a bundled scenario by name."""
    p = Path(path_or_name)
    if p.is_file():
        return validate(_parse_yaml(p.read_text(), str(p)), str(p))
    matches = find_bundled(path_or_name)
    if len(matches) != 1:
        if not matches:
            raise ScenarioError(f"no scenario file or bundled scenario named {path_or_name!r}")
        raise ScenarioError(f"ambiguous scenario name {path_or_name!r}: {', '.join(matches)}")
    res = _bundled_dir() / f"{matches[0]}.yaml"
    return validate(_parse_yaml(res.read_text(), matches[0] + ".yaml"), matches[0] + ".yaml")


# ---------------------------------------------------------------------------
# execution
# ---------------------------------------------------------------------------


def execute_point(q: dict, grid: Optional[dict] = None) -> dict:
    """Run one resolved point; returns {"row": ordered results, "wigner": array|None, "healthy": bool}."""
    cfg = _config(q)
    scheme = q["scheme"]
    row: dict[str, Any] = {}
    state = None
    healthy = True

    if scheme == "fock_prep":
        res = P.run_config(cfg)
        row["total_probability"] = res.probability
        state = res.normalized
        healthy = P._health(state).healthy
    elif scheme in ("photon_add_opa", "photon_add_fock"):
        if scheme == "photon_add_opa":
            rep = P.photon_add_opa(cfg.r, cfg.kappa, cfg.n, cfg.trunc, cfg.detector, target_r=q.get("target_r"))
        else:
            rep = P.photon_add_fock(cfg.r, cfg.n, cfg.kappa, cfg.tau, cfg.trunc, cfg.detector, target_r=q.get("target_r"))
        row.update(rep.as_dict())
        state = rep.state
        healthy = rep.healthy
    elif scheme in ("cubic_opa", "cubic_fock"):
        rep = P.run_config(cfg)
        row.update(rep.as_dict())
        state = rep.state
        healthy = rep.healthy
        if "gamma" in q:
            from .fock import PureState

            o = P.optimize_cubic(rep.state, q["gamma"])
            row["fidelity"] = o["fidelity"]
            row["correction_r"] = o["r"]
            row["correction_beta_im"] = o["beta"].imag
            corrected = P.gaussian_correct(rep.state, o["r"], o["beta"])
            state = PureState(corrected.amplitudes / math.sqrt(corrected.trace()), corrected.truncs)
    elif scheme == "cat_breed":
        rep = P.run_config(cfg)
        row.update(rep.as_dict())
        state = rep.state
        healthy = rep.healthy
        if "cat_alpha" in q:
            o = P.optimize_cat(
                rep.state,
                P.cat_parity(cfg.n, cfg.k),
                q["cat_alpha"],
                q.get("cat_r", 0.0),
                rotate_quarter=cfg.r > 0,
            )
            row["fidelity"] = o["fidelity"]
            row["target_alpha"] = o["alpha"]
            row["target_r"] = o["r"]
    elif scheme == "gkp_breed":
        rep = P.run_config(cfg)
        row.update(rep.as_dict())
        state = rep.state
        healthy = rep.healthy
        if "threshold" in q:
            floor = q.get("threshold_floor", P.FT_THRESHOLD_DB)
            r_db = P.squeezing_db(cfg.r)
            if q["threshold"] == "loss":
                th = P.find_loss_threshold(cfg.n, cfg.k, cfg.kappa, r_db, cfg.dim, squeezing_floor=floor)
                row["max_loss"] = th.max_loss if th.max_loss is not None else th.status
            else:
                d = cfg.detector or DetectorModel()
                th = P.find_efficiency_threshold(
                    cfg.n, cfg.k, cfg.kappa, r_db, cfg.dim, dark_rate=d.dark_rate, window=d.window, squeezing_floor=floor
                )
                row["min_efficiency"] = th.max_loss if th.max_loss is not None else th.status
            row["threshold_status"] = th.status
    else:  # pragma: no cover - guarded by the schema
        raise ValueError(scheme)

    if "corrections" in row:
        for k, v in row.pop("corrections").items():
            row[k] = v
    if "squeezing" in row:
        for k, v in row.pop("squeezing").items():
            row[k] = v
    if "target" in row:
        t = row.pop("target")
        if "r" in t:
            row.setdefault("target_r", t["r"])
    rp = row.pop("round_probabilities", None)
    if rp is not None:
        row["round_probabilities"] = ";".join(repr(float(x)) for x in rp)
    row["healthy"] = bool(healthy)
    W = None
    if q.get("wigner") and grid is not None and state is not None:
        W = wigner(state, _axis(grid["x"]), _axis(grid["p"]))
    return {"row": row, "wigner": W, "healthy": bool(healthy)}


def _axis(spec) -> np.ndarray:
    lo, hi, cnt = spec
    return np.linspace(lo, hi, int(cnt))
