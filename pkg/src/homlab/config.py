"""Experiment configuration in a sectioned ``key = value`` text format.

Grammar (one ``[section]`` per concern, ``#`` or ``;`` starts a comment line)::

    [experiment]  kind = ghom | fhom | verify | calibrate | table
    [medium]      kind, values, probs, axis, period, coin_prob
    [medium.a]    sub-medium for kind = mixture (same keys), likewise [medium.b]
    [integrand]   p, surface_family, c1 .. c5, z_cap
    [query]       xi = 1, 0; 0, 1     zeta = 1.0     nu = [0,1]/1; [3,4]/5
    [schedule]    surface = 8, 16, 32, 64     volume = 8, 16, 32
    [seeds]       base, count
    [solver]      h, tol, neighborhood, precision, max_seconds, strip_length
    [tolerances]  numeric thresholds used by ``verify``
    [verify]      instance counts and scales used by ``verify``
    [output]      dir

Lists are comma separated; lists of vectors or directions use ``;`` between
items. An empty value means "unset" for optional numbers.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import re
from dataclasses import dataclass, field, fields
from pathlib import Path

from .geometry import RationalDirection
from .integrand import SurfaceIntegrand, VolumeIntegrand
from .medium import GeneratorKind, sample_medium
from .surface_cell import get_neighborhood

EXPERIMENT_KINDS = ("fhom", "ghom", "verify", "calibrate", "table")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, section: str | None = None, key: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if section is not None:
            where.append(f"[{section}]" + (f" {key}" if key else ""))
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.line, self.section, self.key = line, section, key


def _t(kind: str, **kw):
    return {"type": kind, **kw}


def _floats(s):
    return tuple(float(v) for v in s.split(",") if v.strip())


def _ints(s):
    return tuple(int(v) for v in s.split(",") if v.strip())


def _vectors(s):
    return tuple(_floats(item) for item in s.split(";") if item.strip())


def _strs(s):
    return tuple(item.strip() for item in s.split(";") if item.strip())


def _optfloat(s):
    return None if not s.strip() else float(s)


_PARSE = {"int": int, "float": float, "str": str.strip, "floats": _floats, "ints": _ints,
          "vectors": _vectors, "strs": _strs, "optfloat": _optfloat}


def _fmt_float(v: float) -> str:
    return repr(float(v))


_FORMAT = {
    "int": str,
    "float": _fmt_float,
    "str": str,
    "floats": lambda v: ", ".join(_fmt_float(x) for x in v),
    "ints": lambda v: ", ".join(str(x) for x in v),
    "vectors": lambda v: "; ".join(", ".join(_fmt_float(x) for x in vec) for vec in v),
    "strs": lambda v: "; ".join(v),
    "optfloat": lambda v: "" if v is None else _fmt_float(v),
}


@dataclass(frozen=True)
class MediumSpec:
    kind: str = field(default="iid_cells", metadata=_t("str"))
    values: tuple = field(default=(1.0, 3.0), metadata=_t("floats"))
    probs: tuple = field(default=(0.5, 0.5), metadata=_t("floats"))
    axis: int = field(default=0, metadata=_t("int"))
    period: int = field(default=2, metadata=_t("int"))
    coin_prob: float = field(default=0.5, metadata=_t("float"))

    def to_kind(self, a: GeneratorKind | None = None, b: GeneratorKind | None = None) -> GeneratorKind:
        if self.kind == "mixture":
            if a is None or b is None:
                raise ValueError("mixture medium needs [medium.a] and [medium.b]")
            return GeneratorKind("mixture", coin_prob=self.coin_prob, sub_kinds=(a, b))
        if self.kind == "constant":
            return GeneratorKind("constant", values=self.values[:1])
        if self.kind == "laminate":
            return GeneratorKind("laminate", values=self.values, axis=self.axis, period=self.period)
        return GeneratorKind(self.kind, values=self.values, probs=self.probs)


@dataclass(frozen=True)
class IntegrandSpec:
    p: float = field(default=2.0, metadata=_t("float"))
    surface_family: str = field(default="perimeter", metadata=_t("str"))
    c1: float | None = field(default=None, metadata=_t("optfloat"))
    c2: float | None = field(default=None, metadata=_t("optfloat"))
    c3: float | None = field(default=None, metadata=_t("optfloat"))
    c4: float | None = field(default=None, metadata=_t("optfloat"))
    c5: float | None = field(default=None, metadata=_t("optfloat"))
    z_cap: float = field(default=4.0, metadata=_t("float"))


@dataclass(frozen=True)
class QuerySpec:
    xi: tuple = field(default=((1.0, 0.0),), metadata=_t("vectors"))
    zeta: tuple = field(default=(1.0,), metadata=_t("floats"))
    nu: tuple = field(default=("[0,1]/1",), metadata=_t("strs"))


@dataclass(frozen=True)
class ScheduleSpec:
    surface: tuple = field(default=(8, 16, 32, 64), metadata=_t("ints"))
    volume: tuple = field(default=(8, 16, 32), metadata=_t("ints"))


@dataclass(frozen=True)
class SeedSpec:
    base: int = field(default=0, metadata=_t("int"))
    count: int = field(default=50, metadata=_t("int"))


@dataclass(frozen=True)
class SolverSpec:
    h: float = field(default=0.25, metadata=_t("float"))
    tol: float = field(default=1e-10, metadata=_t("float"))
    neighborhood: str = field(default="n4", metadata=_t("str"))
    precision: float = field(default=1048576.0, metadata=_t("float"))
    max_seconds: float | None = field(default=None, metadata=_t("optfloat"))
    strip_length: int = field(default=64, metadata=_t("int"))


@dataclass(frozen=True)
class ToleranceSpec:
    fixed_point_volume: float = field(default=1e-8, metadata=_t("float"))
    fixed_point_surface: float = field(default=1e-12, metadata=_t("float"))
    laminate_rel: float = field(default=0.05, metadata=_t("float"))
    metrication_rel: float = field(default=0.01, metadata=_t("float"))
    subadditivity_eps: float = field(default=1e-9, metadata=_t("float"))
    concentration_ratio: float = field(default=0.6, metadata=_t("float"))
    mixture_rel: float = field(default=0.01, metadata=_t("float"))
    mixture_standard_errors: float = field(default=3.0, metadata=_t("float"))
    voigt_reuss_slack: float = field(default=0.02, metadata=_t("float"))
    invariance_gap: float = field(default=0.05, metadata=_t("float"))


@dataclass(frozen=True)
class VerifySpec:
    mincut_instances: int = field(default=200, metadata=_t("int"))
    structural_cases: int = field(default=100, metadata=_t("int"))
    ergodic_seeds: int = field(default=50, metadata=_t("int"))
    ergodic_schedule: tuple = field(default=(16, 32, 64), metadata=_t("ints"))
    mixture_seeds: int = field(default=100, metadata=_t("int"))
    voigt_reuss_seeds: int = field(default=30, metadata=_t("int"))
    voigt_reuss_t: int = field(default=16, metadata=_t("int"))
    invariance_seeds: int = field(default=20, metadata=_t("int"))
    invariance_schedule: tuple = field(default=(16, 32, 64), metadata=_t("ints"))
    volume_laminate_t: int = field(default=32, metadata=_t("int"))
    surface_laminate_t: int = field(default=64, metadata=_t("int"))
    table_seeds: int = field(default=10, metadata=_t("int"))
    rng_seed: int = field(default=0, metadata=_t("int"))


@dataclass(frozen=True)
class OutputSpec:
    dir: str = field(default="runs/latest", metadata=_t("str"))


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str = "verify"
    medium: MediumSpec = MediumSpec()
    medium_a: MediumSpec | None = None
    medium_b: MediumSpec | None = None
    integrand: IntegrandSpec = IntegrandSpec()
    query: QuerySpec = QuerySpec()
    schedule: ScheduleSpec = ScheduleSpec()
    seeds: SeedSpec = SeedSpec()
    solver: SolverSpec = SolverSpec()
    tolerances: ToleranceSpec = ToleranceSpec()
    verify: VerifySpec = VerifySpec()
    output: OutputSpec = OutputSpec()

    # --- derived objects -------------------------------------------------
    def generator_kind(self) -> GeneratorKind:
        sub = lambda s: s.to_kind() if s is not None else None  # noqa: E731
        return self.medium.to_kind(sub(self.medium_a), sub(self.medium_b))

    def volume_integrand(self) -> VolumeIntegrand:
        i = self.integrand
        return VolumeIntegrand(sample_medium(self.generator_kind(), self.seeds.base), p=i.p, c1=i.c1, c2=i.c2)

    def surface_integrand(self) -> SurfaceIntegrand:
        i = self.integrand
        return SurfaceIntegrand(sample_medium(self.generator_kind(), self.seeds.base), family=i.surface_family,
                                c3=i.c3, c4=i.c4, c5=i.c5, z_cap=i.z_cap)

    def directions(self) -> list[RationalDirection]:
        return [RationalDirection.parse(s) for s in self.query.nu]

    def neighborhood(self):
        return get_neighborhood(self.solver.neighborhood)

    def digest(self) -> str:
        """Hash of the canonical text without the output location."""
        text = serialize(self, include_output=False)
        return hashlib.sha256(text.encode()).hexdigest()


_SECTIONS = [
    ("medium", "medium", MediumSpec),
    ("medium.a", "medium_a", MediumSpec),
    ("medium.b", "medium_b", MediumSpec),
    ("integrand", "integrand", IntegrandSpec),
    ("query", "query", QuerySpec),
    ("schedule", "schedule", ScheduleSpec),
    ("seeds", "seeds", SeedSpec),
    ("solver", "solver", SolverSpec),
    ("tolerances", "tolerances", ToleranceSpec),
    ("verify", "verify", VerifySpec),
    ("output", "output", OutputSpec),
]
_OPTIONAL_SECTIONS = {"medium.a", "medium.b"}


def _line_index(text: str) -> dict:
    """Map (section, key) -> 1-based line number, plus (section, None) for headers."""
    out, section = {}, None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        m = re.match(r"^\[([^\]]+)\]$", line)
        if m:
            section = m.group(1).strip()
            out.setdefault((section, None), no)
            continue
        m = re.match(r"^([^=:#;\s][^=:]*?)\s*[=:]", line)
        if m and section is not None:
            out.setdefault((section, m.group(1).strip().lower()), no)
    return out


def _parse_section(cp, name: str, cls, lines: dict):
    values = {}
    known = {f.name: f for f in fields(cls)}
    for key, raw in cp.items(name):
        line = lines.get((name, key))
        if key not in known:
            raise ConfigError(f"unknown field {key!r}", line, name, key)
        kind = known[key].metadata["type"]
        try:
            values[key] = _PARSE[kind](raw)
        except ValueError as exc:
            raise ConfigError(f"bad {kind} value {raw!r} ({exc})", line, name, key) from None
    return cls(**values)


def parse(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None, default_section="__defaults__")
    cp.optionxform = str.lower
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        if line is None and getattr(exc, "errors", None):
            line = exc.errors[0][0]
        raise ConfigError(str(exc).splitlines()[0], line) from None
    lines = _line_index(text)
    allowed = {"experiment"} | {s for s, _, _ in _SECTIONS}
    for sec in cp.sections():
        if sec not in allowed:
            raise ConfigError(f"unknown section [{sec}]", lines.get((sec, None)), sec)
    kw = {}
    if cp.has_section("experiment"):
        for key, raw in cp.items("experiment"):
            if key != "kind":
                raise ConfigError(f"unknown field {key!r}", lines.get(("experiment", key)), "experiment", key)
            kw["kind"] = raw.strip()
    kind = kw.get("kind", "verify")
    if kind not in EXPERIMENT_KINDS:
        raise ConfigError(f"kind must be one of {', '.join(EXPERIMENT_KINDS)}", lines.get(("experiment", "kind")),
                          "experiment", "kind")
    for sec, attr, cls in _SECTIONS:
        if cp.has_section(sec):
            kw[attr] = _parse_section(cp, sec, cls, lines)
    cfg = ExperimentConfig(**kw)
    _validate(cfg, lines)
    return cfg


def _validate(cfg: ExperimentConfig, lines: dict) -> None:
    def fail(msg, sec, key):
        raise ConfigError(msg, lines.get((sec, key)) or lines.get((sec, None)), sec, key)

    try:
        cfg.generator_kind()
    except ValueError as exc:
        fail(str(exc), "medium", "kind")
    for sec, name in (("schedule", "surface"), ("schedule", "volume")):
        sched = getattr(cfg.schedule, name)
        if not sched or any(t <= 0 for t in sched) or any(b <= a for a, b in zip(sched, sched[1:])):
            fail("schedule must be a strictly increasing list of positive integers", sec, name)
    if cfg.seeds.count < 1:
        fail("count must be >= 1", "seeds", "count")
    if cfg.solver.neighborhood not in ("n4", "n8"):
        fail("neighborhood must be n4 or n8", "solver", "neighborhood")
    if cfg.solver.h <= 0 or cfg.solver.tol <= 0 or cfg.solver.precision < 1:
        fail("h and tol must be positive, precision >= 1", "solver", None)
    for i, s in enumerate(cfg.query.nu):
        try:
            RationalDirection.parse(s)
        except ValueError as exc:
            fail(f"entry {i}: {exc}", "query", "nu")
    for i, v in enumerate(cfg.query.xi):
        if len(v) != 2:
            fail(f"entry {i}: xi must have 2 components", "query", "xi")


def serialize(cfg: ExperimentConfig, include_output: bool = True) -> str:
    """Canonical text: every field written, fixed order, ``repr`` floats."""
    out = ["[experiment]", f"kind = {cfg.kind}", ""]
    for sec, attr, cls in _SECTIONS:
        obj = getattr(cfg, attr)
        if obj is None or (sec == "output" and not include_output):
            continue
        out.append(f"[{sec}]")
        for f in fields(cls):
            text = _FORMAT[f.metadata["type"]](getattr(obj, f.name))
            out.append(f"{f.name} = {text}".rstrip())
        out.append("")
    return "\n".join(out)


def load(path) -> ExperimentConfig:
    return parse(Path(path).read_text())


def quick(cfg: ExperimentConfig | None = None) -> ExperimentConfig:
    """Same checks with reduced instance counts, for smoke runs."""
    cfg = cfg or ExperimentConfig()
    v = dataclasses.replace(cfg.verify, mincut_instances=40, structural_cases=20, ergodic_seeds=20,
                            mixture_seeds=40, voigt_reuss_seeds=10, invariance_seeds=8,
                            invariance_schedule=(8, 16, 32), ergodic_schedule=(8, 16, 32),
                            surface_laminate_t=32, table_seeds=4)
    return dataclasses.replace(cfg, verify=v)
