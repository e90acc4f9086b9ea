"""Plan files and the option-to-spec translation shared with the CLI.

A plan file has ``[graph]``, ``[influence]`` and ``[sweep]`` sections of
``key = value`` lines; ``#`` starts a comment.  Example::

    [graph]
    model = gnp
    n = 1e5
    dbar = 20

    [influence]
    R = const:2
    W = const:1

    [sweep]
    grid = log:10:10000:13
    runs = 200
    seed = 1
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .criticality import threshold_rule
from .errors import ValidationError
from .graphs import Block, ConfigModel, DegreeSequence, ErExplicit, ErImplicit, FromEdgeList, GnM, PowerLawConfig
from .harness import SweepPlan, log_grid
from .influence import InfluenceSpec, parse_distribution

SECTIONS = ("graph", "influence", "sweep")
MODELS = ("gnp", "gnp-explicit", "gnm", "config", "powerlaw", "block", "edgelist")


def parse_count(text, name: str = "value") -> int:
    """Integer that may be written in scientific notation (``1e6``)."""
    if isinstance(text, (int, np.integer)):
        return int(text)
    s = str(text).strip()
    try:
        return int(s)
    except ValueError:
        pass
    try:
        x = float(s)
    except ValueError:
        raise ValidationError(f"{name}: not a number: {s!r}") from None
    if not math.isfinite(x) or x != int(x):
        raise ValidationError(f"{name}: {s!r} is not an integer")
    return int(x)


def parse_real(text, name: str = "value") -> float:
    try:
        return float(text)
    except (TypeError, ValueError):
        raise ValidationError(f"{name}: not a number: {text!r}") from None


def parse_grid(text: str) -> tuple[int, ...]:
    s = text.strip()
    if s.startswith("log:"):
        parts = s[4:].split(":")
        if len(parts) != 3:
            raise ValidationError(f"grid {s!r}: expected log:<lo>:<hi>:<points>")
        return log_grid(parse_count(parts[0], "grid lo"), parse_count(parts[1], "grid hi"),
                        parse_count(parts[2], "grid points"))
    return tuple(parse_count(x, "grid") for x in s.replace(";", ",").split(",") if x.strip())


def parse_matrix(text: str) -> np.ndarray:
    """Rows separated by ``;`` or ``|``, entries by ``,``."""
    rows = [r for r in text.replace("|", ";").split(";") if r.strip()]
    try:
        return np.array([[float(x) for x in r.split(",")] for r in rows])
    except ValueError:
        raise ValidationError(f"bad matrix {text!r}") from None


def graph_from_options(opt: dict, implicit: bool = True):
    """Build a GraphSpec from string options (model, n, p|dbar, M, ...)."""
    model = opt.get("model")
    if model not in MODELS:
        raise ValidationError(f"model must be one of {', '.join(MODELS)} (got {model!r})")

    def need(key):
        if opt.get(key) is None:
            raise ValidationError(f"model {model} needs '{key}'")
        return opt[key]

    if model in ("gnp", "gnp-explicit"):
        n = parse_count(need("n"), "n")
        if (opt.get("p") is None) == (opt.get("dbar") is None):
            raise ValidationError("give exactly one of p and dbar")
        p = parse_real(opt["p"], "p") if opt.get("p") is not None else parse_real(opt["dbar"], "dbar") / n
        return ErImplicit(n, p) if model == "gnp" and implicit else ErExplicit(n, p)
    if model == "gnm":
        n = parse_count(need("n"), "n")
        if opt.get("M") is not None:
            return GnM(n, parse_count(opt["M"], "M"))
        return GnM(n, parse_count(parse_real(need("dbar"), "dbar") * n / 2, "M = dbar*n/2"))
    if model == "config":
        if opt.get("degfile"):
            return ConfigModel(DegreeSequence.read(opt["degfile"]).degrees)
        if opt.get("degrees"):
            return ConfigModel(np.array([parse_count(x, "degree") for x in str(opt["degrees"]).split(",")]))
        raise ValidationError("model config needs 'degfile' or 'degrees'")
    if model == "powerlaw":
        return PowerLawConfig(parse_count(need("n"), "n"), parse_real(need("beta"), "beta"),
                              parse_count(need("dmin"), "dmin"), parse_count(need("dmax"), "dmax"))
    if model == "block":
        sizes = tuple(parse_count(x, "sizes") for x in str(need("sizes")).split(","))
        return Block(sizes, parse_matrix(need("P")))
    return FromEdgeList(str(need("path")))


def influence_from_options(opt: dict):
    """(InfluenceSpec or None, rule or None)."""
    has_dist = opt.get("R") is not None or opt.get("W") is not None
    has_rule = opt.get("rule") is not None or opt.get("r") is not None
    if has_dist and has_rule:
        raise ValidationError("threshold distributions (R/W) and threshold rules (r/rule) are exclusive")
    if opt.get("rule") is not None and opt.get("r") is not None:
        raise ValidationError("give either r or rule, not both")
    if opt.get("rule") is not None:
        return None, threshold_rule(str(opt["rule"]))
    if opt.get("r") is not None:
        r = parse_count(opt["r"], "r")
        if r < 2:
            raise ValidationError("r must be >= 2")
        return None, r
    R = parse_distribution(opt.get("R") or "const:2")
    W = parse_distribution(opt.get("W") or "const:1")
    return InfluenceSpec(R, W), None


def _bool(text: str, name: str) -> bool:
    s = str(text).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValidationError(f"{name}: expected true/false, got {text!r}")


@dataclass
class PlanFile:
    path: str
    values: dict  # section -> key -> (value, line number)

    def section(self, name: str) -> dict:
        return {k: v for k, (v, _) in self.values.get(name, {}).items()}

    def line_of(self, section: str, key: str) -> int | None:
        entry = self.values.get(section, {}).get(key)
        return entry[1] if entry else None


def read_plan(path) -> PlanFile:
    values: dict = {}
    section = None
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"{path}: {exc.strerror}") from None
    with fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("["):
                if not line.endswith("]"):
                    raise ValidationError(f"{path}:{lineno}: malformed section header {raw.strip()!r}")
                section = line[1:-1].strip()
                if section not in SECTIONS:
                    raise ValidationError(f"{path}:{lineno}: unknown section [{section}]")
                values.setdefault(section, {})
                continue
            if "=" not in line:
                raise ValidationError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
            if section is None:
                raise ValidationError(f"{path}:{lineno}: key outside of any section")
            key, val = (x.strip() for x in line.split("=", 1))
            if not key:
                raise ValidationError(f"{path}:{lineno}: empty key")
            if key in values[section]:
                raise ValidationError(f"{path}:{lineno}: duplicate key '{key}'")
            values[section][key] = (val, lineno)
    return PlanFile(str(path), values)


def _mentioned(section: dict, exc: Exception) -> list[str]:
    msg = str(exc)
    return [k for k in section if msg.startswith(f"{k}:") or f"'{k}'" in msg or f" {k} " in msg]


_SWEEP_KEYS = {"grid", "runs", "seed", "fresh_graph", "nested", "simplify", "workers", "budget"}


def plan_from_file(path, overrides: dict | None = None) -> SweepPlan:
    """SweepPlan from a plan file; errors carry the offending line number."""
    pf = read_plan(path)
    overrides = overrides or {}

    def at(section, key=None):
        line = pf.line_of(section, key) if key else None
        return f"{pf.path}:{line}" if line else pf.path

    for key in pf.section("sweep"):
        if key not in _SWEEP_KEYS:
            raise ValidationError(f"{at('sweep', key)}: unknown sweep key '{key}'")
    try:
        graph = graph_from_options(pf.section("graph"))
    except ValidationError as exc:
        keys = _mentioned(pf.section("graph"), exc) or ["model"]
        raise ValidationError(f"{at('graph', keys[0])}: {exc}") from None
    try:
        influence, rule = influence_from_options(pf.section("influence"))
    except ValidationError as exc:
        sec = pf.section("influence")
        keys = _mentioned(sec, exc) or list(sec)
        raise ValidationError(f"{at('influence', keys[0] if keys else None)}: {exc}") from None

    sw = pf.section("sweep")
    kwargs = {}
    try:
        if "grid" not in sw:
            raise ValidationError("sweep needs a grid")
        kwargs["grid"] = parse_grid(sw["grid"])
    except ValidationError as exc:
        raise ValidationError(f"{at('sweep', 'grid')}: {exc}") from None
    for key, conv, field_name in (("runs", parse_count, "runs"), ("seed", parse_count, "master_seed"),
                                  ("workers", parse_count, "workers"),
                                  ("fresh_graph", _bool, "fresh_graph"), ("nested", _bool, "nested"),
                                  ("simplify", _bool, "simplify"), ("budget", parse_real, "budget_seconds")):
        if key in sw:
            try:
                kwargs[field_name] = conv(sw[key], key)
            except ValidationError as exc:
                raise ValidationError(f"{at('sweep', key)}: {exc}") from None
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return SweepPlan(graph=graph, influence=influence, rule=rule, **kwargs)
    except ValidationError as exc:
        raise ValidationError(f"{pf.path}: {exc}") from None
