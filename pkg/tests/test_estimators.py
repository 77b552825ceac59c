import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from codedptycho._validation import DimensionError
from codedptycho.estimators import CodedDiffraction, PtychoReconstructor, check_modulus_data
from codedptycho.masks import MaskSpec
from codedptycho.phantom import ObjectSpec, make_rpp


@pytest.fixture
def data():
    f = make_rpp(ObjectSpec(n=16, seed=2))
    model = CodedDiffraction(n=16, q=2, mask=MaskSpec("iid", seed=3)).fit()
    return f, model.transform(f)


def test_params_and_clone():
    est = PtychoReconstructor(n=16, q=2, dr_iters=5)
    params = est.get_params()
    assert params["dr_iters"] == 5 and params["overlap"] == "half"
    twin = clone(est).set_params(ap_iters=7)
    assert twin.ap_iters == 7 and est.ap_iters == 100
    assert clone(CodedDiffraction(nsr=0.1)).get_params()["nsr"] == 0.1


def test_transformer_shapes(data):
    f, b = data
    assert b.shape == (4, 31, 31)
    model = CodedDiffraction(n=16, q=2, mask=MaskSpec("iid", seed=3)).fit()
    batch = model.transform(np.stack([f, 2 * f]))
    np.testing.assert_allclose(batch[1], 2 * b)
    with pytest.raises(DimensionError):
        model.transform(np.ones(16))
    with pytest.raises(NotFittedError):
        CodedDiffraction().transform(f)


def test_noisy_transform_hits_nsr(data):
    f, b = data
    noisy = CodedDiffraction(n=16, q=2, mask=MaskSpec("iid", seed=3), nsr=0.1).fit().transform(f)
    assert abs(np.linalg.norm(noisy - b) / np.linalg.norm(b) - 0.1) <= 1e-10


def test_fit_and_score(data):
    f, b = data
    est = PtychoReconstructor(n=16, q=2, mask=MaskSpec("iid", seed=3),
                              dr_iters=200, ap_iters=100).fit(b, f_true=f)
    assert est.n_iter_ == 300
    assert est.error(f) <= 1e-6
    assert -est.score(b) <= 1e-6
    np.testing.assert_allclose(est.predict(), b, atol=1e-6 * np.linalg.norm(b))
    assert est.fixed_point_test(b)["is_solution"]


def test_modulus_validation():
    with pytest.raises(DimensionError):
        check_modulus_data(np.ones((2, 3, 3)), (4, 31, 31))
    with pytest.raises(ValueError):
        check_modulus_data(-np.ones((1, 1, 1)), (1, 1, 1))
    with pytest.raises(ValueError):
        check_modulus_data(np.ones((1, 1, 1), dtype=complex), (1, 1, 1))
    with pytest.raises(NotFittedError):
        PtychoReconstructor().predict()
