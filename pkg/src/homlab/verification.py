"""Verification checks shared by ``homlab verify`` and the acceptance suite.

Every check returns a :class:`CheckResult`. Series produced along the way are
attached so reports can persist them; timings are kept out of ``detail`` so
that the written data stays deterministic.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import ergodic as E
from .geometry import Interval1, JumpDatum, RationalDirection, axis_cube
from .integrand import SurfaceIntegrand, VolumeIntegrand
from .medium import constant, iid_cells, laminate, mixture, sample_medium
from .surface_cell import (
    N4,
    N8,
    assemble_cut_graph,
    brute_force_min_int,
    calibrate_metrication,
    get_neighborhood,
    solve_min_cut,
)
from .volume_cell import assemble_volume_problem, solve_volume_cell

E1 = RationalDirection.axis(0, 2)
E2 = RationalDirection.axis(1, 2)
TILTED = RationalDirection((3, 4), 5)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)
    series: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        bits = ", ".join(f"{k}={_fmt(v)}" for k, v in self.detail.items())
        out = f"{status} {self.name}: {bits}"
        if self.failures:
            out += " | first failure: " + ", ".join(f"{k}={_fmt(v)}" for k, v in self.failures[0].items())
        return out


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return "(" + ", ".join(_fmt(x) for x in v) + ")"
    if isinstance(v, np.ndarray):
        return _fmt(v.tolist())
    return str(v)


def _timed(fn):
    def wrapper(*args, **kw):
        start = time.perf_counter()
        res = fn(*args, **kw)
        res.seconds = time.perf_counter() - start
        return res

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _surface(kind, family="perimeter", **kw) -> SurfaceIntegrand:
    return SurfaceIntegrand(sample_medium(kind, 0), family=family, **kw)


def _volume(kind, p=2.0) -> VolumeIntegrand:
    return VolumeIntegrand(sample_medium(kind, 0), p=p)


@_timed
def mincut_exactness(n_instances: int = 200, seed: int = 0) -> CheckResult:
    """Max-flow labels against exhaustive enumeration on 6x6 cubes (4x4 free
    cells), integer weights 1..5, both neighborhoods with unit lambdas."""
    rng = np.random.default_rng(seed)
    kind = iid_cells(values=(1, 2, 3, 4, 5), probs=(0.2,) * 5)
    region = axis_cube((0, 0), 6)
    dirs = [E1, E2, -E1, -E2, TILTED, RationalDirection((5, 12), 13), RationalDirection((-4, 3), 5)]
    failures, n_free = [], set()
    for i in range(n_instances):
        nb = get_neighborhood("n4" if i % 2 == 0 else "n8", 1.0, 1.0)
        g = _surface(kind).with_field(sample_medium(kind, int(rng.integers(2**31))))
        nu = dirs[int(rng.integers(len(dirs)))]
        x = (Fraction(int(rng.integers(-3, 4)), 2), Fraction(int(rng.integers(-3, 4)), 2))
        graph = assemble_cut_graph(g, JumpDatum(x, (1.0,), nu), region, nb, precision=1)
        n_free.add(graph.n_free)
        flow = solve_min_cut(graph).value_int
        brute = brute_force_min_int(graph)
        if flow != brute:
            failures.append({"instance": i, "neighborhood": nb.name, "nu": str(nu), "flow": flow, "brute": brute})
    detail = {"instances": n_instances, "mismatches": len(failures), "free_cells": sorted(n_free)}
    return CheckResult("mincut_exactness", not failures, detail, failures=failures)


@_timed
def constant_fixed_points(tol_volume: float = 1e-8, tol_surface: float = 1e-12, value: float = 2.0) -> CheckResult:
    f = _volume(constant(1.0))
    worst_v = 0.0
    for t in (8, 16, 32):
        for xi in ((1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (0.3, -0.7)):
            res = solve_volume_cell(assemble_volume_problem(f, [xi], t=t, h=1.0))
            worst_v = max(worst_v, abs(res.normalized - (xi[0] ** 2 + xi[1] ** 2)))
    g = _surface(constant(value))
    worst_s = 0.0
    for t in (8, 32):
        for nu in (E1, E2):
            spec = E.surface_spec(g, (1.0,), nu)
            worst_s = max(worst_s, abs(E._surface_task(spec, 0, t, (0, 0), None)[1] - value))
    passed = worst_v <= tol_volume and worst_s <= tol_surface
    return CheckResult("constant_fixed_points", passed, {"volume_error": worst_v, "surface_error": worst_s})


@_timed
def volume_laminate(rel: float = 0.05, t: int = 32, h: float = 0.25, tol: float = 1e-10) -> CheckResult:
    """Stripes normal to e1 with a in {1, 4}: harmonic mean across, arithmetic along."""
    f = _volume(laminate(axis=0, period=2, values=(1.0, 4.0)))
    across = solve_volume_cell(assemble_volume_problem(f, [[1.0, 0.0]], t=t, h=h), tol=tol).normalized
    along = solve_volume_cell(assemble_volume_problem(f, [[0.0, 1.0]], t=t, h=h), tol=tol).normalized
    ok = abs(across - 1.6) <= rel * 1.6 and abs(along - 2.5) <= rel * 2.5
    return CheckResult("volume_laminate", ok, {"xi_e1": across, "target_e1": 1.6, "xi_e2": along, "target_e2": 2.5})


@_timed
def surface_laminate(rel: float = 0.05, t: int = 64, n_seeds: int = 2) -> CheckResult:
    """Stripes normal to e1 with c in {1, 3}: an interface along the stripes
    picks the cheap one, an interface across them pays the average."""
    g = _surface(laminate(axis=0, period=2, values=(1.0, 3.0)))
    s1 = E.estimate_ghom(E.surface_spec(g, (1.0,), E1), (t,), n_seeds)
    s2 = E.estimate_ghom(E.surface_spec(g, (1.0,), E2), (t,), n_seeds)
    ok = abs(s1.point_estimate - 1.0) <= rel and abs(s2.point_estimate - 2.0) <= rel * 2.0
    return CheckResult("surface_laminate", ok, {"nu_e1": s1.point_estimate, "target_e1": 1.0,
                                                "nu_e2": s2.point_estimate, "target_e2": 2.0},
                       series={"nu_e1": s1, "nu_e2": s2})


@_timed
def metrication(rel: float = 0.01, strip_length: int = 64) -> CheckResult:
    k_axis = calibrate_metrication(N4, E1, strip_length)
    k4 = calibrate_metrication(N4, TILTED, strip_length)
    k8 = calibrate_metrication(N8, TILTED, strip_length)
    ok = k_axis == 1.0 and abs(k4 - 1.4) <= rel * 1.4 and k8 < k4
    return CheckResult("metrication", ok, {"kappa_n4_e1": k_axis, "kappa_n4_tilted": k4, "kappa_n8_tilted": k8})


@_timed
def structural_identities(n_cases: int = 100, seed: int = 0, eps: float = 1e-9) -> CheckResult:
    """Covariance (bit-exact) and subadditivity (slack >= -eps) on random
    seeds, intervals, aligned partitions and lattice shifts."""
    rng = np.random.default_rng(seed)
    g = _surface(iid_cells((1.0, 3.0)))
    failures = []
    worst_slack, cov_ok, sub_ok = math.inf, 0, 0
    for nu in (E2, TILTED):
        spec = E.surface_spec(g, (1.0,), nu)
        M = spec.frame.M
        for _ in range(n_cases):
            s = int(rng.integers(2**31))
            # interval in units of 1/M, at least 2/M per piece
            a = int(rng.integers(-4 * M, 4 * M))
            n_pieces = int(rng.integers(2, 4))
            lengths = rng.integers(2, max(3, 2 + 3 * M), size=n_pieces)
            pts = a + np.concatenate([[0], np.cumsum(lengths)])
            interval = Interval1(Fraction(int(pts[0]), M), Fraction(int(pts[-1]), M))
            cuts = [Fraction(int(p), M) for p in pts[1:-1]]
            rep = E.check_subadditivity(spec, s, interval, cuts, eps)
            worst_slack = min(worst_slack, rep.slack)
            if rep.passed:
                sub_ok += 1
            else:
                failures.append({"check": "subadditivity", "nu": str(nu), "seed": s,
                                 "interval": f"[{interval.a},{interval.b})", "cuts": tuple(str(c) for c in cuts),
                                 "slack": rep.slack})
            zp = int(rng.integers(-5, 6))
            cov = E.check_covariance(spec, s, interval, zp)
            if cov.passed:
                cov_ok += 1
            else:
                failures.append({"check": "covariance", "nu": str(nu), "seed": s,
                                 "interval": f"[{interval.a},{interval.b})", "z": zp})
    detail = {"cases_per_direction": n_cases, "covariance_exact": cov_ok, "subadditive": sub_ok,
              "min_slack": worst_slack}
    return CheckResult("structural_identities", not failures, detail, failures=failures)


@_timed
def ergodic_concentration(n_seeds: int = 50, schedule=(16, 32, 64), ratio: float = 0.6) -> CheckResult:
    g = _surface(iid_cells((1.0, 3.0)))
    spec = E.surface_spec(g, (1.0,), E2)
    ex = E.ergodic_expectation_surface(spec, schedule, n_seeds)
    s = ex.series
    r = s.concentration_ratio
    failures = []
    for j, t in enumerate(s.schedule):
        col = s.normalized[:, j]
        for i in np.nonzero((col < ex.lower[j]) | (col > ex.upper[j]))[0]:
            failures.append({"seed": s.seeds[i], "t": t, "estimate": float(col[i]),
                             "bracket": (float(ex.lower[j]), float(ex.upper[j]))})
    detail = {"std": s.std, "std_ratio": r, "means": s.mean, "flat_cut_means": ex.upper,
              "outside_bracket": len(failures)}
    return CheckResult("ergodic_concentration", r <= ratio and not failures, detail, series={"iid": s},
                       failures=failures)


@_timed
def non_ergodic(n_seeds: int = 100, schedule=(8, 16, 32, 64), rel: float = 0.01, n_se: float = 3.0) -> CheckResult:
    g = _surface(mixture(constant(1.0), constant(3.0), 0.5))
    spec = E.surface_spec(g, (1.0,), E2)
    s = E.estimate_ghom(spec, schedule, n_seeds)
    near1 = np.abs(s.normalized - 1.0) <= rel * 1.0
    near3 = np.abs(s.normalized - 3.0) <= rel * 3.0
    clustered = bool(np.all(near1 | near3))
    bimodal = bool(np.all(near1.any(axis=0) & near3.any(axis=0)))
    se = float(s.std[-1]) / math.sqrt(n_seeds)
    z = abs(s.point_estimate - 2.0) / se if se > 0 else math.inf
    ok = clustered and bimodal and z <= n_se
    return CheckResult("non_ergodic", ok, {"clustered": clustered, "bimodal": bimodal, "mean": s.point_estimate,
                                           "standard_error": se, "z_score": z}, series={"mixture": s})


@_timed
def voigt_reuss(n_seeds: int = 30, t: int = 16, h: float = 0.25, slack: float = 0.02, tol: float = 1e-10) -> CheckResult:
    f = _volume(iid_cells((1.0, 4.0)))
    s = E.estimate_fhom(f, [[1.0, 0.0]], (t,), n_seeds, h=h, tol=tol)
    lo, hi = 1.6 * (1 - slack), 2.5 * (1 + slack)
    col = s.normalized[:, 0]
    failures = [{"seed": s.seeds[i], "estimate": float(col[i])} for i in np.nonzero((col < lo) | (col > hi))[0]]
    return CheckResult("voigt_reuss", not failures, {"min": float(col.min()), "max": float(col.max()),
                                                     "bracket": (lo, hi)}, series={"iid_volume": s},
                       failures=failures)


@_timed
def invariance(t_large: int = 64, n_seeds: int = 20, tol: float = 0.05, z=(3, 2), x=(1, 0),
               schedule=(16, 32, 64)) -> CheckResult:
    g = _surface(iid_cells((1.0, 3.0)))
    spec = E.surface_spec(g, (1.0,), E2)
    sh = E.check_shift_invariance(spec, z, t_large, n_seeds, tol)
    ce = E.check_center_independence(spec, x, schedule, n_seeds, tol)
    detail = {"shift_gap": float(sh.mean_gap[-1]), "center_gaps": ce.mean_gap, "center_decreasing": ce.decreasing,
              "tolerance": tol}
    return CheckResult("invariance", sh.passed and ce.passed, detail)


@_timed
def symmetry_and_brackets(n_seeds: int = 10, surface_schedule=(8, 16, 32), volume_schedule=(8, 16),
                          h: float = 0.5) -> CheckResult:
    g = _surface(iid_cells((1.0, 3.0)), family="amplitude")
    queries = [(z, nu) for z in (1.0, -2.5) for nu in (E2, E1, TILTED)]
    table = E.surface_table(g, queries, surface_schedule, n_seeds)
    failures = []
    for a, b in zip(table.entries[::2], table.entries[1::2]):
        if a.estimate != b.estimate:
            failures.append({"check": "symmetry", "query": a.query, "twin": b.query,
                             "values": (a.estimate, b.estimate)})
    for e in table.entries:
        if not e.in_bracket:
            failures.append({"check": "surface_bracket", "query": e.query, "estimate": e.estimate,
                             "bracket": (e.lower, e.upper)})
    f = _volume(iid_cells((1.0, 4.0)))
    vtable = E.volume_table(f, [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (0.5, -2.0)], volume_schedule, n_seeds, h=h)
    for e in vtable.entries:
        if not e.in_bracket:
            failures.append({"check": "volume_bracket", "query": e.query, "estimate": e.estimate,
                             "bracket": (e.lower, e.upper)})
    detail = {"surface_entries": len(table.entries), "volume_entries": len(vtable.entries),
              "violations": len(failures)}
    res = CheckResult("symmetry_and_brackets", not failures, detail, failures=failures)
    res.tables = [table, vtable]
    return res
