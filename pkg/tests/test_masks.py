import json

import numpy as np
import pytest

from codedptycho._validation import ParameterError
from codedptycho.masks import (
    MaskSpec,
    make_correlated_mask,
    make_fresnel_mask,
    make_iid_mask,
    make_mask,
)


def test_iid_unit_modulus_and_deterministic():
    a = make_iid_mask(32, 7)
    assert np.max(np.abs(np.abs(a) - 1)) <= 1e-15
    np.testing.assert_array_equal(a, make_iid_mask(32, 7))
    assert not np.array_equal(a, make_iid_mask(32, 8))


def test_iid_mean_is_small():
    mu = make_iid_mask(256, 3)
    assert abs(mu.mean()) <= 4 / 256


def test_correlated_ell_one_is_iid():
    np.testing.assert_array_equal(make_correlated_mask(16, 1, 5), make_iid_mask(16, 5))


@pytest.mark.parametrize("ell", [2, 4, 7, 16])
def test_correlated_unit_modulus(ell):
    mu = make_correlated_mask(16, ell, 2)
    np.testing.assert_allclose(np.abs(mu), 1.0, atol=1e-14)


@pytest.mark.parametrize("m", [8, 9])
def test_correlated_full_box_is_constant(m):
    mu = make_correlated_mask(m, m, 4)
    np.testing.assert_allclose(mu, np.full((m, m), mu[0, 0]), atol=1e-12)


def test_correlated_matches_direct_periodic_sum():
    m, ell, seed = 10, 4, 9
    base = make_iid_mask(m, seed)
    direct = np.zeros((m, m), dtype=complex)
    for d1 in range(-2, 3):
        for d2 in range(-2, 3):
            direct += np.roll(base, (d1, d2), axis=(0, 1))
    np.testing.assert_allclose(make_correlated_mask(m, ell, seed), direct / np.abs(direct), atol=1e-12)


def test_correlated_rejects_large_ell():
    with pytest.raises(ParameterError):
        make_correlated_mask(8, 9, 0)


def test_correlated_mask_is_smoother_than_iid():
    def roughness(mu):
        return np.mean(np.abs(mu - np.roll(mu, 1, axis=0)))

    assert roughness(make_correlated_mask(64, 16, 1)) < 0.5 * roughness(make_iid_mask(64, 1))


def test_fresnel_values():
    np.testing.assert_array_equal(make_fresnel_mask(8, 0.0), np.ones((8, 8)))
    mu = make_fresnel_mask(4, 1.0, (0.0, 0.0))
    assert abs(mu[0, 0] - 1j) <= 1e-15
    np.testing.assert_allclose(np.abs(make_fresnel_mask(12, 0.38, (1.5, -2.0))), 1.0, atol=1e-15)


def test_fresnel_direct_formula():
    m, rho, beta = 6, 0.7, (0.3, 1.1)
    mu = make_fresnel_mask(m, rho, beta)
    for k1 in range(1, m + 1):
        for k2 in range(1, m + 1):
            ref = np.exp(1j * np.pi * rho * ((k1 - beta[0]) ** 2 + (k2 - beta[1]) ** 2) / m)
            assert abs(mu[k1 - 1, k2 - 1] - ref) <= 1e-13


def test_maskspec_roundtrip_and_dispatch():
    spec = MaskSpec(kind="correlated", m=16, ell=4, seed=3)
    again = MaskSpec(**json.loads(json.dumps(spec.to_dict())))
    assert again == spec
    np.testing.assert_array_equal(spec.build(), make_correlated_mask(16, 4, 3))
    np.testing.assert_array_equal(make_mask(MaskSpec(kind="plain"), 5), np.ones((5, 5)))
    with pytest.raises(ParameterError):
        MaskSpec(kind="amplitude")
