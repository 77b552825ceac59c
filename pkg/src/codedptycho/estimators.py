"""scikit-learn style wrappers around the measurement operator and solvers.

``CodedDiffraction`` is a transformer from objects to modulus data and
``PtychoReconstructor`` fits an object to modulus data. Both expose
``get_params``/``set_params`` through :class:`sklearn.base.BaseEstimator`, so
they can be cloned and grid-searched.
"""
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import DimensionError, check_image
from .experiments import relative_error, relative_residual
from .masks import MaskSpec
from .scheme import MeasurementOperator, NoiseSpec, build_scheme
from .solvers import SolverConfig, ap_fixed_point_test, run

__all__ = ["CodedDiffraction", "PtychoReconstructor", "check_modulus_data"]


def check_modulus_data(b, shape):
    """Validate modulus data against an operator's data shape."""
    b = np.asarray(b)
    if np.iscomplexobj(b):
        raise ValueError("modulus data must be real")
    b = b.astype(float, copy=False)
    if b.shape != tuple(shape):
        raise DimensionError(f"data must have shape {tuple(shape)}, got {b.shape}")
    if not np.all(np.isfinite(b)) or np.any(b < 0):
        raise ValueError("modulus data must be finite and nonnegative")
    return b


def _make_operator(n, q, overlap, mask):
    scheme = build_scheme(n, q, overlap)
    if isinstance(mask, MaskSpec):
        mask = mask.build(scheme.m)
    elif mask is None:
        mask = MaskSpec().build(scheme.m)
    return MeasurementOperator(scheme, mask)


class CodedDiffraction(TransformerMixin, BaseEstimator):
    """Map n x n objects to coded diffraction moduli ``|A* x (+ noise)|``.

    Parameters
    ----------
    n, q : int
        Object side and shifts per direction; the mask side is 2n/q.
    overlap : {"half", "three_quarter"}
    mask : MaskSpec or ndarray, optional
        Mask description or an explicit m x m phase mask. Defaults to an
        i.i.d. random mask with seed 0.
    nsr : float
        Target noise-to-signal ratio; 0 gives noiseless data.
    noise_seed : int
    """

    def __init__(self, n=64, q=4, overlap="half", mask=None, nsr=0.0, noise_seed=0):
        self.n = n
        self.q = q
        self.overlap = overlap
        self.mask = mask
        self.nsr = nsr
        self.noise_seed = noise_seed

    def fit(self, X=None, y=None):
        self.operator_ = _make_operator(self.n, self.q, self.overlap, self.mask)
        return self

    def transform(self, X):
        """Modulus data for one object ``(n, n)`` or a batch ``(k, n, n)``."""
        check_is_fitted(self, "operator_")
        X = np.asarray(X, dtype=np.complex128)
        if X.ndim == 2:
            return self.operator_.measure(X, self._noise(0))
        if X.ndim != 3:
            raise DimensionError(f"expected (n, n) or (k, n, n) input, got {X.shape}")
        return np.stack([self.operator_.measure(x, self._noise(i)) for i, x in enumerate(X)])

    def _noise(self, index):
        if not self.nsr:
            return None
        return NoiseSpec(self.nsr, int(self.noise_seed) + index)


class PtychoReconstructor(BaseEstimator):
    """Recover an object from modulus data with DR initialization and AP refinement.

    Parameters
    ----------
    n, q, overlap, mask
        Measurement geometry, as in :class:`CodedDiffraction`.
    dr_iters, ap_iters : int
        Iteration counts of the two phases.
    init_seed : int
        Seed of the random starting object.
    stop_rr : float, optional
        Stop early once the relative residual falls below this value.

    Attributes
    ----------
    operator_ : MeasurementOperator
    object_ : ndarray of shape (n, n)
        Reconstructed object (defined up to a global phase).
    trace_ : SolverTrace
    n_iter_ : int
    """

    def __init__(self, n=64, q=4, overlap="half", mask=None, dr_iters=300, ap_iters=100,
                 init_seed=0, stop_rr=None):
        self.n = n
        self.q = q
        self.overlap = overlap
        self.mask = mask
        self.dr_iters = dr_iters
        self.ap_iters = ap_iters
        self.init_seed = init_seed
        self.stop_rr = stop_rr

    def fit(self, b, f_true=None):
        """Reconstruct from modulus data ``b`` of shape ``(T, 2m-1, 2m-1)``.

        ``f_true`` only feeds the RE column of ``trace_``.
        """
        op = _make_operator(self.n, self.q, self.overlap, self.mask)
        b = check_modulus_data(b, op.data_shape)
        if f_true is not None:
            f_true = check_image(f_true, shape=op.object_shape, name="f_true")
        cfg = SolverConfig(self.dr_iters, self.ap_iters, self.init_seed, self.stop_rr)
        self.object_, self.trace_ = run(op, b, cfg, f_true=f_true)
        self.operator_ = op
        self.n_iter_ = len(self.trace_)
        self.data_norm_ = float(np.linalg.norm(b))
        return self

    def transform(self, b):
        return self.fit(b).object_

    def predict(self, X=None):
        """Data ``|A* object_|`` predicted by the fitted object."""
        check_is_fitted(self, "object_")
        return np.abs(self.operator_.forward(self.object_))

    def residual(self, b):
        check_is_fitted(self, "object_")
        return relative_residual(check_modulus_data(b, self.operator_.data_shape),
                                 self.operator_, self.object_)

    def error(self, f_true):
        check_is_fitted(self, "object_")
        return relative_error(f_true, self.object_)

    def score(self, b, y=None):
        """Negative relative residual on ``b`` (higher is better)."""
        return -self.residual(b)

    def fixed_point_test(self, b):
        check_is_fitted(self, "object_")
        return ap_fixed_point_test(self.operator_, b, self.object_)
