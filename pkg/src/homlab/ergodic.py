"""Cell-formula estimators and checks of the structural identities.

The surface process lifts an interval ``A'`` to the parallelepiped
``M R (A' x [-c, c))`` and divides its cut value by ``M``. Values are kept
as exact integers (scaled by ``precision * M``) wherever an identity is
supposed to hold exactly.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import Frame, Interval1, JumpDatum, OrientedCube, as_fraction, lift_interval, make_frame
from .integrand import SurfaceIntegrand, VolumeIntegrand
from .medium import CoefficientField, sample_medium, shift
from .parallel import pmap
from .surface_cell import (
    DEFAULT_PRECISION,
    N4,
    Neighborhood,
    assemble_cut_graph,
    solve_min_cut,
)
from .volume_cell import assemble_volume_problem, solve_volume_cell, subcube_centers


@dataclass(frozen=True)
class SubadditiveProcessSpec:
    """Everything needed to evaluate the surface process for one seed.

    The medium kind is that of ``integrand.field``; each seed gets a fresh
    realization of it.
    """

    zeta: tuple
    frame: Frame
    integrand: SurfaceIntegrand
    base_seed: int = 0
    neighborhood: Neighborhood = N4
    precision: float = DEFAULT_PRECISION

    def __post_init__(self):
        object.__setattr__(self, "zeta", tuple(float(v) for v in np.atleast_1d(self.zeta)))

    @property
    def kind(self):
        return self.integrand.field.kind

    def field(self, seed: int) -> CoefficientField:
        return sample_medium(self.kind, seed, dim=self.frame.dim)

    def seeds(self, n_seeds: int) -> list[int]:
        return [self.base_seed + i for i in range(n_seeds)]

    def flipped(self) -> SubadditiveProcessSpec:
        """Spec for ``(-zeta, -nu)``."""
        return replace(self, zeta=tuple(-v for v in self.zeta), frame=make_frame(-self.frame.nu))


def surface_spec(integrand, zeta=(1.0,), nu=None, **kw) -> SubadditiveProcessSpec:
    from .geometry import RationalDirection

    nu = RationalDirection.axis(1, 2) if nu is None else nu
    if isinstance(nu, str):
        nu = RationalDirection.parse(nu)
    return SubadditiveProcessSpec(zeta=zeta, frame=make_frame(nu), integrand=integrand, **kw)


def mu_eval_int(spec: SubadditiveProcessSpec, interval: Interval1, field: CoefficientField) -> int:
    """Cut value on the lifted interval as an integer in units of ``1 / precision``."""
    if spec.frame.M * interval.length < 2:
        raise ValueError("interval too short: need |A'| >= 2/M")
    g = spec.integrand.with_field(field)
    region = lift_interval(interval, spec.frame)
    datum = JumpDatum((0, 0), spec.zeta, spec.frame.nu)
    graph = assemble_cut_graph(g, datum, region, spec.neighborhood, spec.precision)
    return solve_min_cut(graph).value_int


def mu_eval(spec: SubadditiveProcessSpec, seed: int, interval: Interval1, field: CoefficientField | None = None) -> float:
    field = spec.field(seed) if field is None else field
    return mu_eval_int(spec, interval, field) / (spec.precision * spec.frame.M)


@dataclass
class SubadditivityReport:
    seed: int
    interval: Interval1
    cuts: tuple
    whole: float
    pieces: list
    slack: float
    passed: bool


def check_subadditivity(spec: SubadditiveProcessSpec, seed: int, interval: Interval1, cuts, eps: float = 1e-9) -> SubadditivityReport:
    """Slack ``sum_i mu(A'_i) - mu(A')`` for the partition of ``A'`` at ``cuts``."""
    M = spec.frame.M
    cuts = tuple(sorted(as_fraction(c) for c in cuts))
    for c in cuts:
        if not interval.a < c < interval.b:
            raise ValueError(f"cut {c} not strictly inside {interval}")
        if (c * M).denominator != 1:
            raise ValueError(f"cut {c} is not a multiple of 1/M = 1/{M}")
    points = (interval.a,) + cuts + (interval.b,)
    pieces = [Interval1(a, b) for a, b in zip(points[:-1], points[1:])]
    fld = spec.field(seed)
    whole = mu_eval_int(spec, interval, fld)
    parts = [mu_eval_int(spec, p, fld) for p in pieces]
    scale = spec.precision * M
    slack = (sum(parts) - whole) / scale
    return SubadditivityReport(seed, interval, cuts, whole / scale, [v / scale for v in parts], slack, slack >= -eps)


@dataclass
class CovarianceReport:
    seed: int
    interval: Interval1
    zp: int
    shift_vector: tuple
    shifted_interval_value: float
    shifted_field_value: float
    passed: bool


def check_covariance(spec: SubadditiveProcessSpec, seed: int, interval: Interval1, zp: int) -> CovarianceReport:
    """``mu(omega, A' + z')`` against ``mu(tau_{M R (z',0)} omega, A')``, bit for bit."""
    fld = spec.field(seed)
    zvec = spec.frame.lattice_shift((zp,))
    lhs = mu_eval_int(spec, interval + zp, fld)
    rhs = mu_eval_int(spec, interval, shift(fld, zvec))
    scale = spec.precision * spec.frame.M
    return CovarianceReport(seed, interval, zp, zvec, lhs / scale, rhs / scale, lhs == rhs)


@dataclass
class EstimateSeries:
    """Per-(seed, t) normalized cell values with per-t aggregates."""

    schedule: tuple
    seeds: tuple
    values: np.ndarray
    normalized: np.ndarray
    mean: np.ndarray = field(init=False)
    median: np.ndarray = field(init=False)
    std: np.ndarray = field(init=False)
    partial: bool = False
    label: str = ""

    def __post_init__(self):
        sched = list(self.schedule)
        if any(b <= a for a, b in zip(sched[:-1], sched[1:])):
            raise ValueError("schedule must be strictly increasing")
        cols = self.normalized.shape[1]
        self.mean = np.array([_fmean(self.normalized[:, j]) for j in range(cols)])
        self.median = np.median(self.normalized, axis=0) if len(self.seeds) else np.full(cols, np.nan)
        self.std = np.array([_fstd(self.normalized[:, j]) for j in range(cols)])

    @property
    def completed(self) -> int:
        return self.normalized.shape[1]

    @property
    def point_estimate(self) -> float:
        return float(self.mean[-1])

    @property
    def error_bar(self) -> float:
        n = len(self.seeds)
        return 2.0 * float(self.std[-1]) / math.sqrt(n) if n > 1 else 0.0

    @property
    def concentration_ratio(self) -> float:
        if self.std[0] == 0:
            return 0.0 if self.std[-1] == 0 else math.inf
        return float(self.std[-1] / self.std[0])

    def trend(self) -> np.ndarray:
        return np.diff(self.mean)

    def diagnostics(self) -> dict:
        return {
            "point_estimate": self.point_estimate,
            "error_bar": self.error_bar,
            "concentration_ratio": self.concentration_ratio,
            "trend": self.trend().tolist(),
            "partial": self.partial,
        }


def _fmean(x) -> float:
    x = list(map(float, x))
    return math.fsum(x) / len(x) if x else math.nan


def _fstd(x) -> float:
    x = list(map(float, x))
    if len(x) < 2:
        return 0.0
    m = math.fsum(x) / len(x)
    return math.sqrt(math.fsum((v - m) ** 2 for v in x) / (len(x) - 1))


def _surface_task(spec: SubadditiveProcessSpec, seed: int, t, x, field_shift):
    fld = spec.field(seed)
    if field_shift is not None:
        fld = shift(fld, field_shift)
    g = spec.integrand.with_field(fld)
    t = as_fraction(t)
    center = tuple(t * as_fraction(v) for v in x)
    cube = OrientedCube(center=center, side=t, frame=spec.frame)
    datum = JumpDatum(center, spec.zeta, spec.frame.nu)
    graph = assemble_cut_graph(g, datum, cube, spec.neighborhood, spec.precision)
    res = solve_min_cut(graph, normalizer=float(t) ** (spec.frame.dim - 1))
    return res.value, res.normalized, graph.datum_weight() / float(t)


def _run_schedule(task, make_args, schedule, seeds, max_seconds, workers):
    start = time.monotonic()
    values, normalized, extra = [], [], []
    partial = False
    for t in schedule:
        # the first scale always runs so that a partial series is never empty
        if values and max_seconds is not None and time.monotonic() - start > max_seconds:
            partial = True
            break
        out = pmap(task, [make_args(s, t) for s in seeds], workers)
        values.append([o[0] for o in out])
        normalized.append([o[1] for o in out])
        extra.append([o[2] for o in out])
    shape = (len(seeds), len(values))
    as_arr = lambda rows: np.array(rows, dtype=float).T.reshape(shape)  # noqa: E731
    return as_arr(values), as_arr(normalized), as_arr(extra), partial


def estimate_ghom(spec: SubadditiveProcessSpec, schedule=(8, 16, 32, 64), n_seeds: int = 50, x=(0, 0),
                  field_shift=None, max_seconds: float | None = None, workers: int | None = None,
                  return_competitor: bool = False):
    """Normalized surface cell values on ``Q^nu_t(t x)`` for each seed and t.

    With ``return_competitor`` the normalized flat-interface (datum) cut
    weights are returned alongside the series.
    """
    seeds = spec.seeds(n_seeds)
    vals, norm, comp, partial = _run_schedule(
        _surface_task, lambda s, t: (spec, s, t, x, field_shift), schedule, seeds, max_seconds, workers)
    series = EstimateSeries(tuple(schedule[: vals.shape[1]]), tuple(seeds), vals, norm, partial=partial)
    return (series, comp) if return_competitor else series


def _volume_task(f: VolumeIntegrand, seed: int, t, xi, h, tol, centers):
    fld = sample_medium(f.field.kind, seed, dim=f.field.dim)
    fs = f.with_field(fld)
    total = []
    for c in centers:
        pr = assemble_volume_problem(fs, xi, center=c, t=t, h=h)
        total.append(solve_volume_cell(pr, tol=tol).value)
    value = math.fsum(total) / len(total)
    return value, value / float(t) ** fld.dim, pr.affine_energy() / float(t) ** fld.dim


def estimate_fhom(f: VolumeIntegrand, xi, schedule=(8, 16, 32), n_seeds: int = 50, h: float = 0.25,
                  base_seed: int = 0, tol: float = 1e-10, max_seconds: float | None = None,
                  workers: int | None = None, tiled_to: float | None = None) -> EstimateSeries:
    """Normalized volume cell values on ``Q_t(0)``.

    With ``tiled_to = T`` each value at scale t is instead the mean over the
    cubes of side t tiling ``Q_T(0)`` (t must divide T).
    """
    seeds = [base_seed + i for i in range(n_seeds)]
    n = f.field.dim
    xi = np.atleast_2d(np.asarray(xi, dtype=float))

    def centers(t):
        if tiled_to is None:
            return [(0,) * n]
        k = as_fraction(tiled_to) / as_fraction(t)
        if k.denominator != 1:
            raise ValueError("tiling scale must divide the outer cube side")
        return subcube_centers((0,) * n, tiled_to, n, int(k))

    vals, norm, _, partial = _run_schedule(
        _volume_task, lambda s, t: (f, s, t, xi, h, tol, centers(t)), schedule, seeds, max_seconds, workers)
    return EstimateSeries(tuple(schedule[: vals.shape[1]]), tuple(seeds), vals, norm, partial=partial)


@dataclass
class GapReport:
    schedule: tuple
    gaps: np.ndarray
    mean_gap: np.ndarray
    tolerance: float
    decreasing: bool
    passed: bool


def _relative_gaps(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.abs(a - b) / np.maximum(np.abs(b), 1e-300)


def check_shift_invariance(spec: SubadditiveProcessSpec, z, t_large=64, n_seeds: int = 20, tol: float = 0.05,
                           workers: int | None = None) -> GapReport:
    """Relative gap between estimates for the field and for ``shift(field, z)``."""
    base = estimate_ghom(spec, (t_large,), n_seeds, workers=workers)
    moved = estimate_ghom(spec, (t_large,), n_seeds, field_shift=tuple(int(v) for v in z), workers=workers)
    gaps = _relative_gaps(moved.normalized, base.normalized)
    mean_gap = np.array([_fmean(gaps[:, 0])])
    return GapReport((t_large,), gaps, mean_gap, tol, True, bool(mean_gap[-1] <= tol))


def check_center_independence(spec: SubadditiveProcessSpec, x, schedule=(16, 32, 64), n_seeds: int = 20,
                              tol: float = 0.05, workers: int | None = None) -> GapReport:
    """Relative gap between cubes centered at ``t x`` (datum through ``t x``) and at 0."""
    base = estimate_ghom(spec, schedule, n_seeds, workers=workers)
    moved = estimate_ghom(spec, schedule, n_seeds, x=tuple(x), workers=workers)
    gaps = _relative_gaps(moved.normalized, base.normalized)
    mean_gap = np.array([_fmean(gaps[:, j]) for j in range(gaps.shape[1])])
    decreasing = bool(np.all(np.diff(mean_gap) <= 0))
    return GapReport(tuple(schedule), gaps, mean_gap, tol, decreasing, bool(mean_gap[-1] <= tol and decreasing))


def origin_coefficient(field: CoefficientField) -> float:
    return float(field.values(np.zeros((1, field.dim), dtype=np.int64))[0])


def birkhoff_average(field: CoefficientField, observable=origin_coefficient, z=(1, 0), k_max: int = 10_000) -> np.ndarray:
    """Running means ``(1/k) sum_{i<=k} observable(shift(field, i z))``."""
    z = np.asarray(z, dtype=np.int64)
    obs = np.array([observable(shift(field, tuple(i * z))) for i in range(1, k_max + 1)])
    return np.cumsum(obs) / np.arange(1, k_max + 1)


@dataclass
class ExpectationSeries:
    schedule: tuple
    means: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    within: np.ndarray
    monotone: bool
    per_seed_within: bool = True
    series: EstimateSeries | None = None


def ergodic_expectation_surface(spec: SubadditiveProcessSpec, schedule=(8, 16, 32, 64), n_seeds: int = 50,
                                workers: int | None = None) -> ExpectationSeries:
    """Seed means of the normalized surface values, bracketed below by ``c4``
    and above by the seed mean of the flat-interface competitor."""
    series, comp = estimate_ghom(spec, schedule, n_seeds, workers=workers, return_competitor=True)
    lower = np.full(series.completed, spec.integrand.c4 * spec.integrand.amplitude(np.linalg.norm(spec.zeta)))
    upper = np.array([_fmean(comp[:, j]) for j in range(comp.shape[1])])
    within = (series.mean >= lower) & (series.mean <= upper)
    per_seed = bool(np.all((series.normalized >= lower) & (series.normalized <= upper)))
    return ExpectationSeries(series.schedule, series.mean, lower, upper, within,
                             bool(np.all(np.diff(series.mean) <= 0)), per_seed, series)


def ergodic_expectation_volume(f: VolumeIntegrand, xi, schedule=(8, 16, 32), n_seeds: int = 50, h: float = 0.25,
                               base_seed: int = 0, tol: float = 1e-10, workers: int | None = None,
                               slack: float = 1e-9) -> ExpectationSeries:
    """Seed means over the dyadic tiling of the largest cube; non-increasing in t
    because tiles paste into competitors for the next scale."""
    series = estimate_fhom(f, xi, schedule, n_seeds, h, base_seed, tol, workers=workers, tiled_to=schedule[-1])
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    shape = f.shape(xi)
    lower = np.full(series.completed, f.c1 * shape)
    upper = np.full(series.completed, f.c2 * (1 + shape))
    within = (series.mean >= lower) & (series.mean <= upper)
    monotone = bool(np.all(np.diff(series.mean) <= slack))
    per_seed = bool(np.all((series.normalized >= lower) & (series.normalized <= upper)))
    return ExpectationSeries(series.schedule, series.mean, lower, upper, within, monotone, per_seed, series)


@dataclass
class TableEntry:
    query: tuple
    estimate: float
    error_bar: float
    lower: float
    upper: float

    @property
    def in_bracket(self) -> bool:
        return self.lower <= self.estimate <= self.upper


@dataclass
class HomDensityTable:
    kind: str
    entries: list

    def brackets_ok(self) -> bool:
        return all(e.in_bracket for e in self.entries)

    def lookup(self, query) -> TableEntry:
        for e in self.entries:
            if e.query == query:
                return e
        raise KeyError(query)


def unit_cut_per_length(spec: SubadditiveProcessSpec, t) -> float:
    """Normalized min cut of the same cube in the unit-coefficient medium."""
    from .medium import constant

    unit = replace(spec, integrand=SurfaceIntegrand(sample_medium(constant(1.0), 0), family="perimeter"))
    return _surface_task(unit, 0, t, (0, 0), None)[1]


def surface_table(integrand: SurfaceIntegrand, queries, schedule=(8, 16, 32, 64), n_seeds: int = 50,
                  base_seed: int = 0, neighborhood: Neighborhood = N4, precision: float = DEFAULT_PRECISION,
                  with_symmetric: bool = True, workers: int | None = None, rel_slack: float = 1e-6) -> HomDensityTable:
    """Estimates for each ``(zeta, nu)`` query, bracketed by the class constants
    times the unit-medium cut of the same geometry. ``with_symmetric`` adds the
    ``(-zeta, -nu)`` twin of every query."""
    entries = []
    for zeta, nu in queries:
        spec = surface_spec(integrand, zeta, nu, base_seed=base_seed, neighborhood=neighborhood, precision=precision)
        twins = [spec, spec.flipped()] if with_symmetric else [spec]
        for sp_ in twins:
            series = estimate_ghom(sp_, schedule, n_seeds, workers=workers)
            unit = unit_cut_per_length(sp_, schedule[-1])
            zn = float(np.linalg.norm(sp_.zeta))
            lo = integrand.c4 * unit * (1 - rel_slack)
            hi = integrand.c5 * (1 + zn) * unit * (1 + rel_slack)
            entries.append(TableEntry((sp_.zeta, str(sp_.frame.nu)), series.point_estimate, series.error_bar, lo, hi))
    return HomDensityTable("surface", entries)


def volume_table(integrand: VolumeIntegrand, queries, schedule=(8, 16, 32), n_seeds: int = 50, h: float = 0.25,
                 base_seed: int = 0, tol: float = 1e-10, workers: int | None = None, rel_slack: float = 1e-9) -> HomDensityTable:
    entries = []
    for xi in queries:
        xi = np.atleast_2d(np.asarray(xi, dtype=float))
        series = estimate_fhom(integrand, xi, schedule, n_seeds, h, base_seed, tol, workers=workers)
        shape = integrand.shape(xi)
        lo = integrand.c1 * shape * (1 - rel_slack)
        hi = integrand.c2 * (1 + shape) * (1 + rel_slack)
        entries.append(TableEntry(tuple(xi.reshape(-1).tolist()), series.point_estimate, series.error_bar, lo, hi))
    return HomDensityTable("volume", entries)
