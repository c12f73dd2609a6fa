"""Command line front end: ``homlab run|verify|calibrate|report``.

Exit status: 0 when everything requested succeeded, 1 when a verification
failed or a budget ran out, 2 for configuration or usage errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import csv
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import config as C
from . import ergodic as E
from . import verification as V
from .geometry import RationalDirection
from .surface_cell import calibrate_metrication, get_neighborhood


@dataclass
class RunRecord:
    digest: str
    kind: str
    checks: list = field(default_factory=list)
    series: dict = field(default_factory=dict)
    tables: list = field(default_factory=list)
    values: dict = field(default_factory=dict)
    wall_clock: float = 0.0
    version: str = __version__

    @property
    def failures(self) -> list:
        out = [{"check": c.name, **f} for c in self.checks if not c.passed for f in (c.failures or [{}])]
        out += [{"check": "budget", "series": name} for name, s in self.series.items() if s.partial]
        return out

    @property
    def passed(self) -> bool:
        return not self.failures


def run_verify(cfg: C.ExperimentConfig, only=None) -> list:
    t, v = cfg.tolerances, cfg.verify
    suite = [
        ("mincut_exactness", lambda: V.mincut_exactness(v.mincut_instances, v.rng_seed)),
        ("constant_fixed_points", lambda: V.constant_fixed_points(t.fixed_point_volume, t.fixed_point_surface)),
        ("volume_laminate", lambda: V.volume_laminate(t.laminate_rel, v.volume_laminate_t, cfg.solver.h, cfg.solver.tol)),
        ("surface_laminate", lambda: V.surface_laminate(t.laminate_rel, v.surface_laminate_t)),
        ("metrication", lambda: V.metrication(t.metrication_rel, cfg.solver.strip_length)),
        ("structural_identities", lambda: V.structural_identities(v.structural_cases, v.rng_seed, t.subadditivity_eps)),
        ("ergodic_concentration", lambda: V.ergodic_concentration(v.ergodic_seeds, v.ergodic_schedule, t.concentration_ratio)),
        ("non_ergodic", lambda: V.non_ergodic(v.mixture_seeds, cfg.schedule.surface, t.mixture_rel, t.mixture_standard_errors)),
        ("voigt_reuss", lambda: V.voigt_reuss(v.voigt_reuss_seeds, v.voigt_reuss_t, cfg.solver.h, t.voigt_reuss_slack, cfg.solver.tol)),
        ("invariance", lambda: V.invariance(v.invariance_schedule[-1], v.invariance_seeds, t.invariance_gap,
                                            schedule=v.invariance_schedule)),
        ("symmetry_and_brackets", lambda: V.symmetry_and_brackets(v.table_seeds)),
    ]
    return [fn() for name, fn in suite if only is None or name in only]


def run(cfg: C.ExperimentConfig, only=None) -> RunRecord:
    start = time.perf_counter()
    rec = RunRecord(cfg.digest(), cfg.kind)
    kind = cfg.kind
    if kind == "verify":
        rec.checks = run_verify(cfg, only)
        for c in rec.checks:
            for name, s in c.series.items():
                rec.series[f"{c.name}.{name}"] = s
            rec.tables += getattr(c, "tables", [])
    if kind in ("ghom", "table"):
        g = cfg.surface_integrand()
        entries = []
        for zeta in cfg.query.zeta:
            for nu in cfg.directions():
                spec = E.surface_spec(g, (zeta,), nu, base_seed=cfg.seeds.base, neighborhood=cfg.neighborhood(),
                                      precision=cfg.solver.precision)
                s = E.estimate_ghom(spec, cfg.schedule.surface, cfg.seeds.count, max_seconds=cfg.solver.max_seconds)
                rec.series[f"ghom.zeta={zeta!r}.nu={nu}"] = s
                unit = E.unit_cut_per_length(spec, s.schedule[-1])
                entries.append(E.TableEntry((zeta, str(nu)), s.point_estimate, s.error_bar,
                                            g.c4 * unit, g.c5 * (1 + abs(zeta)) * unit))
        rec.tables.append(E.HomDensityTable("surface", entries))
    if kind in ("fhom", "table"):
        f = cfg.volume_integrand()
        entries = []
        for xi in cfg.query.xi:
            s = E.estimate_fhom(f, [xi], cfg.schedule.volume, cfg.seeds.count, cfg.solver.h, cfg.seeds.base,
                                cfg.solver.tol, max_seconds=cfg.solver.max_seconds)
            rec.series["fhom.xi=" + ",".join(repr(float(v)) for v in xi)] = s
            shape = float(f.shape(np.atleast_2d(xi)))
            entries.append(E.TableEntry(tuple(xi), s.point_estimate, s.error_bar,
                                        f.c1 * shape, f.c2 * (1 + shape)))
        rec.tables.append(E.HomDensityTable("volume", entries))
    if kind in ("ghom", "fhom", "table"):
        bad = [{"table": t.kind, "query": e.query, "estimate": e.estimate, "bracket": (e.lower, e.upper)}
               for t in rec.tables for e in t.entries if not e.in_bracket]
        rec.checks.append(V.CheckResult("table_brackets", not bad, {"violations": len(bad)}, failures=bad))
    if kind == "calibrate":
        nb = cfg.neighborhood()
        for nu in cfg.directions():
            rec.values[f"kappa.{nb.name}.{nu}"] = calibrate_metrication(nb, nu, cfg.solver.strip_length,
                                                                        precision=cfg.solver.precision)
    rec.wall_clock = time.perf_counter() - start
    return rec


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _safe(name: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "._-=" else "_" for ch in name)


def emit_report(rec: RunRecord, out_dir, cfg: C.ExperimentConfig | None = None) -> Path:
    out = Path(out_dir)
    try:
        (out / "series").mkdir(parents=True, exist_ok=True)
        (out / "convergence").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"output directory {out} is not writable: {exc}") from None
    for name, s in rec.series.items():
        with open(out / "series" / f"{_safe(name)}.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["seed", "t", "value", "normalized"])
            for i, seed in enumerate(s.seeds):
                for j, t in enumerate(s.schedule):
                    w.writerow([seed, t, _fmt(s.values[i, j]), _fmt(s.normalized[i, j])])
        with open(out / "convergence" / f"{_safe(name)}.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "mean", "std", "median", "n"])
            for j, t in enumerate(s.schedule):
                w.writerow([t, _fmt(s.mean[j]), _fmt(s.std[j]), _fmt(s.median[j]), len(s.seeds)])
    for k, table in enumerate(rec.tables):
        with open(out / f"table_{k}_{table.kind}.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["query", "estimate", "error_bar", "lower", "upper"])
            for e in table.entries:
                w.writerow([_fmt(e.query), _fmt(e.estimate), _fmt(e.error_bar), _fmt(e.lower), _fmt(e.upper)])
    lines = [f"config_digest = {rec.digest}", f"kind = {rec.kind}"]
    for c in rec.checks:
        lines.append(c.line())
    for name, s in rec.series.items():
        lines.append(f"estimate.{name} = {_fmt(s.point_estimate)} +/- {_fmt(s.error_bar)}"
                     + (" (partial: budget exhausted)" if s.partial else ""))
    for k, v in rec.values.items():
        lines.append(f"{k} = {_fmt(v)}")
    lines.append(f"overall = {'PASS' if rec.passed else 'FAIL'}")
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    if cfg is not None:
        (out / "config.ini").write_text(C.serialize(cfg, include_output=False))
    failures_path = out / "failures.json"
    if rec.failures:
        failures_path.write_text(json.dumps(rec.failures, indent=1, default=_fmt) + "\n")
    elif failures_path.exists():
        failures_path.unlink()
    meta = {"digest": rec.digest, "kind": rec.kind, "version": rec.version, "wall_clock_seconds": rec.wall_clock,
            "check_seconds": {c.name: c.seconds for c in rec.checks}, "passed": rec.passed}
    (out / "record.json").write_text(json.dumps(meta, indent=1) + "\n")
    return out


def parse_nu(text: str) -> RationalDirection:
    """Accept ``[a,b]/d`` and the shorter ``a,b/d``."""
    text = text.strip()
    if not text.startswith("["):
        head, _, den = text.rpartition("/")
        text = f"[{head}]/{den}" if head else f"[{den}]"
    return RationalDirection.parse(text)


def _cmd_run(args) -> int:
    cfg = C.load(args.config)
    if args.out:
        cfg = dataclasses.replace(cfg, output=C.OutputSpec(args.out))
    rec = run(cfg)
    out = emit_report(rec, cfg.output.dir, cfg)
    print((out / "summary.txt").read_text(), end="")
    return 0 if rec.passed else 1


def _cmd_verify(args) -> int:
    cfg = C.load(args.config) if args.config else C.ExperimentConfig()
    if args.quick:
        cfg = C.quick(cfg)
    cfg = dataclasses.replace(cfg, kind="verify", output=C.OutputSpec(args.out or cfg.output.dir))
    rec = run(cfg, only=set(args.only) if args.only else None)
    out = emit_report(rec, cfg.output.dir, cfg)
    print((out / "summary.txt").read_text(), end="")
    return 0 if rec.passed else 1


def _cmd_calibrate(args) -> int:
    nb = get_neighborhood(args.neighborhood)
    nu = parse_nu(args.nu)
    kappa = calibrate_metrication(nb, nu, args.strip_length)
    print(f"kappa({nu}, {nb.name}) = {kappa!r}")
    return 0


def _cmd_report(args) -> int:
    run_dir = Path(args.run_dir)
    summary = run_dir / "summary.txt"
    if not summary.exists():
        print(f"no summary.txt in {run_dir}", file=sys.stderr)
        return 2
    print(summary.read_text(), end="")
    for path in sorted((run_dir / "convergence").glob("*.csv")):
        print(f"\n# {path.stem}")
        print(path.read_text(), end="")
    return 0 if "overall = PASS" in summary.read_text() else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="homlab", description="Cell-formula estimates for random media.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the experiment described by a config file")
    r.add_argument("config")
    r.add_argument("--out", help="override [output] dir")
    r.set_defaults(func=_cmd_run)
    v = sub.add_parser("verify", help="run the verification suite")
    v.add_argument("--quick", action="store_true", help="reduced instance counts")
    v.add_argument("--config", help="config file supplying tolerances and counts")
    v.add_argument("--out", help="output directory")
    v.add_argument("--only", nargs="*", help="restrict to the named checks")
    v.set_defaults(func=_cmd_verify)
    c = sub.add_parser("calibrate", help="metrication factor of a lattice direction")
    c.add_argument("--nu", required=True, help="direction as a,b/d or [a,b]/d")
    c.add_argument("--neighborhood", default="n4", choices=["n4", "n8"])
    c.add_argument("--strip-length", type=int, default=64)
    c.set_defaults(func=_cmd_calibrate)
    rep = sub.add_parser("report", help="print the summary and convergence tables of a run directory")
    rep.add_argument("run_dir")
    rep.set_defaults(func=_cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except C.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
