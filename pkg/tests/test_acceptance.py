"""The twelve acceptance criteria at their stated tolerances.

Each test prints (and records for the terminal summary) one line
``PASS|FAIL <n>: <description> ...``. Run directly with
``python tests/test_acceptance.py`` for the lines without pytest.
"""

import filecmp
import time
from pathlib import Path

import pytest

from homlab import cli
from homlab import verification as V

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # direct execution outside pytest
    ACCEPTANCE_LINES = []


def report(number: int, title: str, result: V.CheckResult, limit: float | None = None, seconds: float | None = None):
    seconds = result.seconds if seconds is None else seconds
    in_time = limit is None or seconds < limit
    ok = result.passed and in_time
    timing = f" [{seconds:.1f}s" + (f" < {limit:.0f}s]" if limit else "]")
    line = f"{'PASS' if ok else 'FAIL'} {number}: {title}{timing} {result.line().split(': ', 1)[1]}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return ok


def test_criterion_01_mincut_exactness():
    r = V.mincut_exactness(n_instances=200)
    assert report(1, "min-cut equals enumeration", r, limit=60)


def test_criterion_02_constant_fixed_points():
    r = V.constant_fixed_points(tol_volume=1e-8, tol_surface=1e-12)
    assert report(2, "constant-media fixed points", r)


def test_criterion_03_volume_laminate():
    r = V.volume_laminate(rel=0.05, t=32, h=0.25)
    assert report(3, "volume laminate 1.6 / 2.5", r, limit=300)


def test_criterion_04_surface_laminate():
    r = V.surface_laminate(rel=0.05, t=64)
    assert report(4, "surface laminate 1 / 2", r, limit=120)


def test_criterion_05_metrication():
    r = V.metrication(rel=0.01)
    assert report(5, "metrication calibration", r)


def test_criterion_06_structural_identities():
    r = V.structural_identities(n_cases=100)
    assert report(6, "covariance and subadditivity", r, limit=300)


def test_criterion_07_ergodic_concentration():
    r = V.ergodic_concentration(n_seeds=50, schedule=(16, 32, 64), ratio=0.6)
    assert report(7, "ergodic concentration", r)


def test_criterion_08_non_ergodic():
    r = V.non_ergodic(n_seeds=100, schedule=(8, 16, 32, 64), rel=0.01, n_se=3.0)
    assert report(8, "non-ergodic random limit", r)


def test_criterion_09_voigt_reuss():
    r = V.voigt_reuss(n_seeds=30, t=16, h=0.25, slack=0.02)
    assert report(9, "Voigt-Reuss bracket", r)


def test_criterion_10_invariance():
    r = V.invariance(t_large=64, n_seeds=20, tol=0.05, z=(3, 2), x=(1, 0), schedule=(16, 32, 64))
    assert report(10, "shift invariance and x-independence", r)


def test_criterion_11_symmetry_and_brackets():
    r = V.symmetry_and_brackets()
    assert report(11, "estimator symmetry and class brackets", r)


def _data_files(root: Path) -> list:
    return sorted(p.relative_to(root) for p in root.rglob("*") if p.is_file() and p.name != "record.json")


def test_criterion_12_determinism(tmp_path, monkeypatch):
    start = time.perf_counter()
    codes = []
    for workers, name in (("1", "serial"), ("4", "parallel")):
        monkeypatch.setenv("HOMLAB_WORKERS", workers)
        codes.append(cli.main(["verify", "--quick", "--out", str(tmp_path / name)]))
    a, b = tmp_path / "serial", tmp_path / "parallel"
    files_a, files_b = _data_files(a), _data_files(b)
    differing = [str(f) for f in files_a if not filecmp.cmp(a / f, b / f, shallow=False)] if files_a == files_b \
        else ["file lists differ"]
    r = V.CheckResult("determinism", not differing and codes[0] == codes[1],
                      {"files_compared": len(files_a), "differing": len(differing), "workers": (1, 4)},
                      failures=[{"file": f} for f in differing])
    assert report(12, "byte-identical verify output across parallelism", r,
                  seconds=time.perf_counter() - start)


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-s"]))
