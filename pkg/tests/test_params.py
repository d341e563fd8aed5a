import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from pdmd.errors import InvalidInput
from pdmd.params import Normalization, ParamFunction, ParamMap


def test_primitives():
    z = np.array([0.5, 2.0])
    assert ParamFunction("coord", 1)(z) == 2.0
    assert ParamFunction("affine", 0, {"scale": 3.0, "offset": 1.0})(z) == 2.5
    assert ParamFunction("poly", 1, {"coeffs": [1, 0, 2]})(z) == 9.0
    assert ParamFunction("sin", 0, {"frequency": np.pi})(z) == pytest.approx(1.0)


@pytest.mark.parametrize(
    "kind, args",
    [("exp", {}), ("poly", {}), ("coord", {"scale": 1.0})],
)
def test_bad_functions(kind, args):
    with pytest.raises(InvalidInput):
        ParamFunction(kind, 0, args)


def test_default_range_normalization():
    norm = Normalization.from_range([[0.01], [0.015], [0.02]])
    np.testing.assert_allclose(norm.apply(np.array([0.01])), [0.0], atol=1e-15)
    np.testing.assert_allclose(norm.apply(np.array([0.02])), [0.01])
    np.testing.assert_allclose(norm.invert(norm.apply(np.array([0.013]))), [0.013])


def test_constant_coordinate_is_shifted_only():
    norm = Normalization.from_range([[1.0, 5.0], [2.0, 5.0]], lo=0.0, hi=1.0)
    np.testing.assert_allclose(norm.apply(np.array([1.5, 5.0])), [0.5, 0.0])


@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=2), st.floats(-1e3, 1e3))
def test_normalization_roundtrip(pair, x):
    assume(pair[0] == pair[1] or abs(pair[0] - pair[1]) > 1e-9)
    norm = Normalization.from_range([[pair[0]], [pair[1]]])
    assert norm.invert(norm.apply(np.array([x])))[0] == pytest.approx(x, rel=1e-9, abs=1e-9)


def test_subnormal_spread_rejected():
    with pytest.raises(InvalidInput):
        Normalization.from_range([[0.0], [1e-313]])


def test_map_acts_on_normalized_theta():
    pm = ParamMap.coordinates(1, Normalization((2.0,), (-1.0,)))
    assert pm([3.0])[0] == 5.0


def test_map_validation():
    with pytest.raises(InvalidInput):
        ParamMap(1, (ParamFunction("coord", 1),))
    pm = ParamMap.coordinates(2)
    with pytest.raises(InvalidInput):
        pm([1.0])
    with pytest.raises(InvalidInput):
        pm([1.0, np.nan])


def test_identifiability():
    pm = ParamMap.coordinates(2)
    assert pm.identifiable([[0, 0], [1, 0], [0, 1]])
    assert not pm.identifiable([[0, 0], [1, 1], [2, 2]])  # collinear
    E = pm.excitation_matrix([[0, 0], [1, 0]])
    np.testing.assert_array_equal(E, [[1, 1], [0, 1], [0, 0]])


def test_serialization_roundtrip():
    pm = ParamMap(
        2,
        (ParamFunction("coord", 0), ParamFunction("sin", 1, {"frequency": 2.0, "phase": 0.1})),
        Normalization((100.0, 1.0), (-1.0, 0.0)),
    )
    back = ParamMap.from_dict(pm.to_dict())
    assert back == pm
    th = np.array([0.013, 0.7])
    np.testing.assert_array_equal(back(th), pm(th))
