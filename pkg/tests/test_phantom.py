import numpy as np
import pytest

from codedptycho._validation import ParameterError
from codedptycho.phantom import ObjectSpec, make_rpp, shepp_logan


def test_zero_angle_range_gives_real_phantom():
    f = make_rpp(ObjectSpec(32, 0.0, 1))
    assert np.all(f.imag == 0)
    assert np.all(f.real >= 0)
    np.testing.assert_array_equal(f.real, shepp_logan(32))


def test_dark_corners():
    f = make_rpp(ObjectSpec(64, 2 * np.pi, 0))
    for corner in (f[0, 0], f[0, -1], f[-1, 0], f[-1, -1]):
        assert corner == 0


def test_modulus_independent_of_seed_and_angle():
    a = make_rpp(ObjectSpec(40, 2 * np.pi, 1))
    b = make_rpp(ObjectSpec(40, 1.0, 2))
    # equal up to the rounding of |r * exp(1j phi)|
    np.testing.assert_allclose(np.abs(a), np.abs(b), rtol=1e-15, atol=0)
    assert np.linalg.norm(a) == pytest.approx(np.linalg.norm(shepp_logan(40)), rel=1e-14)
    assert not np.allclose(a, b)


@pytest.mark.parametrize("angle", [0.3, np.pi, 2 * np.pi])
def test_phases_within_range(angle):
    f = make_rpp(ObjectSpec(32, angle, 4))
    phase = np.mod(np.angle(f[np.abs(f) > 0]), 2 * np.pi)
    assert phase.max() <= angle + 1e-12
    np.testing.assert_array_equal(make_rpp(ObjectSpec(32, angle, 4)), f)


def test_phantom_structure():
    img = shepp_logan(128)
    assert img.max() == pytest.approx(1.0)
    assert img.min() == 0.0
    # skull ring brighter than brain tissue at the image centre
    assert img[64, 64] < img[64, 64 - int(0.68 * 63.5)]


def test_spec_validation():
    with pytest.raises(ParameterError):
        ObjectSpec(4, 1.0, 0)
    with pytest.raises(ParameterError):
        ObjectSpec(16, 7.0, 0)
