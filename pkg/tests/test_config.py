import dataclasses

import pytest
from hypothesis import given, settings, strategies as st

from homlab import config as C

SAMPLE = """\
# laminate volume run
[experiment]
kind = fhom

[medium]
kind = laminate
values = 1, 4
period = 2

[query]
xi = 1, 0; 0, 1

[seeds]
count = 3

[solver]
h = 0.25
max_seconds =
"""


def test_defaults_round_trip():
    cfg = C.ExperimentConfig()
    assert C.parse(C.serialize(cfg)) == cfg


def test_sample_parses_and_round_trips():
    cfg = C.parse(SAMPLE)
    assert cfg.kind == "fhom" and cfg.medium.values == (1.0, 4.0)
    assert cfg.query.xi == ((1.0, 0.0), (0.0, 1.0))
    assert cfg.solver.max_seconds is None
    assert C.parse(C.serialize(cfg)) == cfg
    assert cfg.generator_kind().name == "laminate"


def test_mixture_sections():
    text = "[medium]\nkind = mixture\ncoin_prob = 0.25\n[medium.a]\nkind = constant\nvalues = 1\n" \
           "[medium.b]\nkind = constant\nvalues = 3\n"
    kind = C.parse(text).generator_kind()
    assert kind.name == "mixture" and kind.coin_prob == 0.25
    with pytest.raises(C.ConfigError):
        C.parse("[medium]\nkind = mixture\n")


finite = st.floats(min_value=1e-6, max_value=1e6, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(finite, finite, st.integers(0, 10**6), st.integers(1, 500),
       st.lists(st.integers(1, 200), min_size=1, max_size=5, unique=True),
       st.lists(st.tuples(finite, finite), min_size=1, max_size=3))
def test_round_trip_property(h, tol, base, count, sched, xis):
    cfg = C.ExperimentConfig(
        kind="table",
        seeds=C.SeedSpec(base, count),
        solver=dataclasses.replace(C.SolverSpec(), h=h, tol=tol),
        schedule=C.ScheduleSpec(tuple(sorted(sched)), (4, 8)),
        query=dataclasses.replace(C.QuerySpec(), xi=tuple(xis)),
    )
    again = C.parse(C.serialize(cfg))
    assert again == cfg
    assert again.digest() == cfg.digest()


def test_digest_tracks_semantics_only():
    cfg = C.parse(SAMPLE)
    assert cfg.digest() == C.parse(SAMPLE.replace("count = 3", "count   =   3")).digest()
    assert cfg.digest() == dataclasses.replace(cfg, output=C.OutputSpec("elsewhere")).digest()
    assert cfg.digest() != C.parse(SAMPLE.replace("count = 3", "count = 4")).digest()
    assert cfg.digest() != C.parse(SAMPLE.replace("h = 0.25", "h = 0.5")).digest()


@pytest.mark.parametrize("text, line, key", [
    ("[solver]\nh = 0.5\ntol = fast\n", 3, "tol"),
    ("[seeds]\nbase = 0\nbogus = 1\n", 3, "bogus"),
    ("[experiment]\nkind = dance\n", 2, "kind"),
    ("[schedule]\n\nsurface = 8, 4\n", 3, "surface"),
    ("[query]\nnu = [1,1]/1\n", 2, "nu"),
])
def test_errors_name_line_and_field(text, line, key):
    with pytest.raises(C.ConfigError) as exc:
        C.parse(text)
    assert exc.value.line == line and exc.value.key == key
    assert f"line {line}" in str(exc.value)


def test_syntax_error_and_unknown_section():
    with pytest.raises(C.ConfigError) as exc:
        C.parse("[seeds]\nthis line has no separator\n")
    assert exc.value.line == 2
    with pytest.raises(C.ConfigError):
        C.parse("[nonsense]\na = 1\n")


def test_quick_reduces_counts_only():
    q = C.quick()
    assert q.verify.mincut_instances < C.ExperimentConfig().verify.mincut_instances
    assert q.tolerances == C.ExperimentConfig().tolerances
