import pytest

from slidekit.design import (
    PARENT,
    QUALITATIVE,
    QUANTITATIVE,
    SLID,
    FactorSpec,
    PlanningMatrix,
    SlidingSpec,
    build_welding_fixture,
    resolve_settings,
)
from slidekit.errors import MissingSlidingEntry, UnknownLevelLabel, ValidationError


def small_parts(table=None, center=None, half_width=None):
    planning = PlanningMatrix.from_rows(("A", "B"), [("1", "lo"), ("1", "hi"), ("2", "lo"), ("2", "hi")])
    factors = (
        FactorSpec("A", QUANTITATIVE, PARENT, ("1", "2"), (1, 2)),
        FactorSpec("B", QUANTITATIVE, SLID, ("lo", "hi"), parent="A"),
    )
    spec = SlidingSpec("A", "B", table or {"1": (10, 20), "2": (5, 15)}, center=center, half_width=half_width)
    return planning, factors, spec


def test_welding_fixture_shape(welding):
    assert welding.runs == 18
    assert welding.planning.names == tuple("ABCDEFGH")
    assert welding.planning.level_counts("A") == {"2": 9, "4": 9}
    assert welding.planning.level_counts("B") == {"low": 6, "median": 6, "high": 6}
    for name in "CDEFG":
        assert sorted(welding.planning.level_counts(name).values()) == [6, 6, 6]
    assert welding.planning.level_counts("H") == {"3/8": 12, "1/4": 6}


def test_welding_slid_settings_follow_table(welding):
    a = welding.actual_array("A")
    b = welding.actual_array("B")
    assert sorted(set(b[a == 2])) == [32, 36, 40]
    assert sorted(set(b[a == 4])) == [18, 22, 26]
    assert list(b[:3]) == [32, 32, 32]
    assert list(b[9:12]) == [18, 18, 18]


def test_welding_pair(welding):
    parent, slid, spec = welding.pair()
    assert (parent.name, slid.name) == ("A", "B")
    assert spec.midpoint("2") == 36 and spec.half_range("4") == 4
    assert [f.name for f in welding.free_factors()] == list("CDEFGH")


def test_fixture_is_deterministic():
    assert build_welding_fixture() == build_welding_fixture()


def test_resolve_small_design():
    d = resolve_settings(*small_parts()[:2], [small_parts()[2]])
    assert d.actual["B"] == (10.0, 20.0, 5.0, 15.0)


def test_missing_sliding_entry():
    planning, factors, _ = small_parts()
    spec = SlidingSpec("A", "B", {"1": (10, 20)})
    with pytest.raises(MissingSlidingEntry):
        resolve_settings(planning, factors, [spec])


def test_slid_table_length_must_match_levels():
    planning, factors, _ = small_parts()
    with pytest.raises(MissingSlidingEntry):
        resolve_settings(planning, factors, [SlidingSpec("A", "B", {"1": (10, 20), "2": (5,)})])
    with pytest.raises(ValidationError):
        resolve_settings(planning, factors, [SlidingSpec("A", "B", {"1": (10, 20), "2": (5, 10, 15)})])


def test_slid_factor_without_table():
    planning, factors, _ = small_parts()
    with pytest.raises(MissingSlidingEntry):
        resolve_settings(planning, factors, [])


def test_unknown_level_label():
    _, factors, spec = small_parts()
    planning = PlanningMatrix.from_rows(("A", "B"), [("1", "lo"), ("3", "hi")])
    with pytest.raises(UnknownLevelLabel, match="run 2"):
        resolve_settings(planning, factors, [spec])


def test_geometry_must_agree_with_table():
    # centers 15 and 10 at coded -1, +1: s = 12.5, t = -2.5, half-width 5
    planning, factors, spec = small_parts(center=(12.5, -2.5), half_width=5)
    resolve_settings(planning, factors, [spec])
    planning, factors, spec = small_parts(center=(12.5, -2.0), half_width=5)
    with pytest.raises(ValidationError):
        resolve_settings(planning, factors, [spec])


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(name="X", kind="ordinal", role="free", levels=("a",)),
        dict(name="X", kind=QUANTITATIVE, role="free", levels=("a", "b"), settings=(2, 1)),
        dict(name="X", kind=QUANTITATIVE, role="free", levels=("a", "b"), settings=(1,)),
        dict(name="X", kind=QUALITATIVE, role="free", levels=("a", "b"), settings=(1, 2)),
        dict(name="X", kind=QUANTITATIVE, role=SLID, levels=("a", "b")),
        dict(name="X", kind=QUANTITATIVE, role="free", levels=("a", "a"), settings=(1, 2)),
    ],
)
def test_factor_spec_rejects(kwargs):
    with pytest.raises(ValidationError):
        FactorSpec(**kwargs)


def test_sliding_table_must_increase():
    with pytest.raises(ValidationError):
        SlidingSpec("A", "B", {"1": (3, 2, 1)})
