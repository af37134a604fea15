import pytest
from hypothesis import given
from hypothesis import strategies as st

from gansemble.seeding import derive_seed


def test_deterministic():
    assert derive_seed(7, "gan", "small") == derive_seed(7, "gan", "small")


def test_distinct_parts_distinct_seeds():
    seen = {
        derive_seed(0, "gan", "a"),
        derive_seed(0, "gan", "b"),
        derive_seed(0, "gen", "a"),
        derive_seed(1, "gan", "a"),
        derive_seed(0, "gan", "a", 0.5),
    }
    assert len(seen) == 5


def test_range():
    for parts in [("x",), ("fit", "sp", "a", 0.0), (12,)]:
        s = derive_seed(3, *parts)
        assert 0 <= s < 2**63 - 1


def test_float_and_int_parts_distinct():
    assert derive_seed(0, 1) != derive_seed(0, 1.0)


def test_bool_part_rejected():
    with pytest.raises(TypeError):
        derive_seed(0, True)


@given(
    st.integers(min_value=0, max_value=2**31),
    st.lists(st.one_of(st.text(max_size=8), st.integers(), st.floats(allow_nan=False)), max_size=4),
)
def test_always_in_range_and_stable(master, parts):
    a = derive_seed(master, *parts)
    b = derive_seed(master, *parts)
    assert a == b
    assert 0 <= a < 2**63 - 1
