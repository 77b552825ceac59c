"""Spectral gap of the linearized phase-retrieval map and twin-image constructions.

With ``omega = sgn(A* f)`` define ``B* x = conj(omega) * A* x`` and the real
matrix ``BT`` (the transpose of ``[Re B; Im B]``) acting on ``G(x) = [Re x; Im x]``
by ``BT G(x) = Re(B* x)``. Its singular values pair up as
``s_k**2 + s_{2N+1-k}**2 = 1``; the top one is 1 (vector ``G(f)``), the bottom
one is 0 (vector ``G(-1j f)``), and the second one ``gamma`` sets the local
convergence rate of DR (``gamma``) and AP (``gamma**2``).
"""
from dataclasses import asdict, dataclass

import numpy as np

from ._validation import ConvergenceError, DimensionError, ParameterError, check_image
from .solvers import sgn

__all__ = [
    "SpectralReport",
    "BoundCertificate",
    "apply_B_adjoint",
    "gap_operator",
    "real_matrix",
    "compute_gamma_dense",
    "compute_gamma_power",
    "certify_rate_bound",
    "rate_bound_test_vector",
    "conjugate_inversion",
    "fresnel_h_symmetry",
    "twin_image",
]

# Largest dense real matrix (rows * cols) built by compute_gamma_dense; covers
# every half-overlap scheme with n <= 32.
MAX_DENSE_ENTRIES = 33_000_000


@dataclass
class SpectralReport:
    gamma: float
    sigma: np.ndarray
    method: str
    residual: float

    def to_dict(self):
        d = asdict(self)
        d["sigma"] = [float(s) for s in np.atleast_1d(self.sigma)]
        return d


@dataclass
class BoundCertificate:
    q: int
    c_f: float
    root_c: float
    a: float
    lhs: float
    rhs: float
    gamma_lower: float
    degenerate: bool = False

    def to_dict(self):
        return asdict(self)


def apply_B_adjoint(op, f, x):
    """``B* x = conj(sgn(A* f)) * A* x``; ``x`` may carry batch dimensions."""
    omega = sgn(op.forward(f))
    return np.conj(omega) * op.forward(x)


def gap_operator(op, f):
    """Return ``u -> 1j * B Im(B* u)`` on complex n x n arrays (batched).

    This is the real-linear normal operator whose eigenvalues on the
    complement of ``1j f`` are the squared singular values of ``BT``.
    """
    omega = sgn(op.forward(f))
    conj_omega = np.conj(omega)

    def apply(u):
        return 1j * op.adjoint(omega * np.imag(conj_omega * op.forward(u)))

    return apply


def real_matrix(op, f, chunk=256):
    """Materialize ``BT`` (shape M x 2N) by probing real and imaginary unit pixels."""
    n = op.scheme.n
    nn = n * n
    m_rows = int(np.prod(op.data_shape))
    if m_rows * 2 * nn > MAX_DENSE_ENTRIES:
        raise ParameterError(
            f"dense spectral matrix of size {m_rows} x {2 * nn} is too large; "
            "use compute_gamma_power instead",
            "scheme.n",
        )
    conj_omega = np.conj(sgn(op.forward(f)))
    out = np.empty((m_rows, 2 * nn))
    for start in range(0, 2 * nn, chunk):
        cols = np.arange(start, min(start + chunk, 2 * nn))
        probes = np.zeros((cols.size, nn), dtype=np.complex128)
        pix = cols % nn
        probes[np.arange(cols.size), pix] = np.where(cols < nn, 1.0, 1j)
        resp = np.real(conj_omega * op.forward(probes.reshape(-1, n, n)))
        out[:, cols] = resp.reshape(cols.size, m_rows).T
    return out


def compute_gamma_dense(op, f, return_vectors=False):
    """Second singular value of ``BT`` from a full dense SVD.

    Returns a :class:`SpectralReport`; with ``return_vectors=True`` also the
    right singular vectors as rows of a (2N, 2N) array in ``G`` coordinates.
    """
    f = check_image(f, shape=op.object_shape, name="f")
    mat = real_matrix(op, f)
    if return_vectors:
        _, sigma, vt = np.linalg.svd(mat, full_matrices=False)
    else:
        sigma = np.linalg.svd(mat, compute_uv=False)
    pairing = np.max(np.abs(sigma**2 + sigma[::-1] ** 2 - 1.0))
    report = SpectralReport(float(sigma[1]), sigma, "DenseSVD", float(pairing))
    return (report, vt) if return_vectors else report


def _orthonormalize(vs):
    """Real Gram-Schmidt (via QR) of complex arrays viewed in R^{2N}."""
    k = vs.shape[0]
    real = np.concatenate([vs.real.reshape(k, -1), vs.imag.reshape(k, -1)], axis=1)
    qmat, _ = np.linalg.qr(real.T)
    half = real.shape[1] // 2
    q = qmat.T
    return (q[:, :half] + 1j * q[:, half:]).reshape(vs.shape)


def _real_inner(a, b):
    """Real inner products ``Re <a_i, b_j>`` of batched arrays."""
    k = a.shape[0]
    return np.real(a.reshape(k, -1).conj() @ b.reshape(b.shape[0], -1).T)


def compute_gamma_power(op, f, max_iters=5000, tol=1e-9, block=8, seed=0):
    """Estimate ``gamma`` by deflated block power iteration.

    Iterates ``u -> 1j B Im(B* u)`` on a block of vectors kept orthogonal to
    ``1j f`` (which carries the known top singular value 1), with a
    Rayleigh-Ritz rotation each step. Stops when the eigen-residual of the
    leading Ritz pair drops below ``tol``.

    Raises
    ------
    ConvergenceError
        If ``max_iters`` is exhausted; ``last_estimate`` holds the current gamma.
    """
    f = check_image(f, shape=op.object_shape, name="f")
    apply = gap_operator(op, f)
    top = 1j * f / np.linalg.norm(f)

    def deflate(v):
        c = np.real(v.reshape(v.shape[0], -1) @ top.conj().ravel())
        return v - c[:, None, None] * top

    rng = np.random.default_rng(seed)
    shape = (block,) + op.object_shape
    v = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    v = _orthonormalize(deflate(v))
    theta = np.nan
    for it in range(1, max_iters + 1):
        w = deflate(apply(v))
        h = _real_inner(v, w)
        h = 0.5 * (h + h.T)
        evals, evecs = np.linalg.eigh(h)
        order = np.argsort(evals)[::-1]
        evals, evecs = evals[order], evecs[:, order]
        ritz = np.tensordot(evecs.T, v, axes=1)
        aritz = np.tensordot(evecs.T, w, axes=1)
        theta = evals[0]
        residual = float(np.linalg.norm(aritz[0] - theta * ritz[0]))
        if residual <= tol:
            gamma = float(np.sqrt(max(theta, 0.0)))
            sig = np.sqrt(np.clip(evals, 0.0, None))
            return SpectralReport(gamma, sig, "PowerIteration", residual)
        v = _orthonormalize(aritz)
    raise ConvergenceError(
        f"power iteration did not reach tol={tol} in {max_iters} iterations",
        last_estimate=float(np.sqrt(max(theta, 0.0))),
    )


def _bisect_root(func, lo, hi, width=1e-12):
    flo = func(lo)
    if flo == 0.0:
        return lo
    fhi = func(hi)
    if fhi == 0.0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise ValueError("root is not bracketed")
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        fmid = func(mid)
        if fmid == 0.0:
            return mid
        if np.sign(fmid) == np.sign(flo):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def rate_bound_test_vector(f, q):
    """Build the orthogonal test vector used to bound the second-smallest singular value.

    ``f`` is cut into q row-blocks ``f_j`` (j = 1..q) of height n/q. The test
    vector scales row-block j by ``v_j = a sin(2 pi j / q - c)`` where ``c`` is
    a root in [0, pi] of ``sum_j ||f_j||^2 sin(2 pi j/q - c)`` (orthogonality
    to ``f``) and ``a`` normalizes the result. For q = 2 the sinusoid
    degenerates and the weights are ``a * (E2, -E1)`` with ``E_j = ||f_j||**2``.

    Returns ``(g, c, a, energies)``.
    """
    n = f.shape[0]
    if n % q != 0:
        raise DimensionError(f"object side {n} is not divisible by q={q}")
    h = n // q
    energies = np.array([np.sum(np.abs(f[j * h:(j + 1) * h]) ** 2) for j in range(q)])
    phases = 2.0 * np.pi * np.arange(1, q + 1) / q

    def p(c):
        return float(np.sum(energies * np.sin(phases - c)))

    if q == 2:
        # sin(pi - c) = -sin(2 pi - c): the sinusoid only spans (1, -1), which is
        # orthogonal to f only for equal block energies. Use the two-level
        # vector proportional to (E2, -E1) instead; c = pi/2 labels it.
        c = 0.5 * np.pi
        shape = np.array([energies[1], -energies[0]])
    else:
        c = _bisect_root(p, 0.0, np.pi)
        shape = np.sin(phases - c)
    a = 1.0 / np.sqrt(np.sum(shape**2 * energies))
    v = a * shape
    g = np.repeat(v, h)[:, None] * f
    return g, c, a, energies


def certify_rate_bound(op, f):
    """Certify ``gamma >= sqrt(1 - lhs**2)`` with ``lhs <= 2 sqrt(c_f) sin(pi/q)``.

    ``lhs = ||Im(B* g)||`` for the test vector of :func:`rate_bound_test_vector`,
    which upper-bounds the second-smallest singular value of ``BT``. The
    certificate is marked degenerate (with NaN entries) when a row-block of
    ``f`` carries no energy.
    """
    scheme = op.scheme
    if scheme.overlap != "half":
        raise ParameterError("the rate bound applies to the half-overlap scheme only", "scheme.overlap")
    f = check_image(f, shape=op.object_shape, name="f")
    q = scheme.q
    h = scheme.n // q
    energies = np.array([np.sum(np.abs(f[j * h:(j + 1) * h]) ** 2) for j in range(q)])
    rhs_factor = 2.0 * np.sin(np.pi / q)
    if energies.min() <= 0:
        nan = float("nan")
        return BoundCertificate(q, nan, nan, nan, nan, nan, nan, degenerate=True)
    c_f = float(energies.max() / (2.0 * energies.min()))
    g, c, a, _ = rate_bound_test_vector(f, q)
    lhs = float(np.linalg.norm(np.imag(apply_B_adjoint(op, f, g))))
    rhs = float(rhs_factor * np.sqrt(c_f))
    if lhs > rhs + 1e-10:
        raise ArithmeticError(f"rate bound violated: lhs={lhs} > rhs={rhs}")
    gamma_lower = float(np.sqrt(max(0.0, 1.0 - lhs**2)))
    return BoundCertificate(q, c_f, float(c), float(a), lhs, rhs, gamma_lower)


def conjugate_inversion(x):
    """Complex conjugate of the array rotated by 180 degrees."""
    x = np.asarray(x)
    return np.conj(x[..., ::-1, ::-1])


def _quadrants(x):
    k = x.shape[0] // 2
    return x[:k, :k], x[:k, k:], x[k:, :k], x[k:, k:]


def _require_integer_rho(rho):
    if not float(rho).is_integer():
        raise ParameterError(
            f"the Fresnel twin symmetry needs an integer rho, got {rho}", "mask.rho"
        )


def fresnel_h_symmetry(mu, rho, check=True):
    """Quadrant symmetry of ``h = conj(Q mu) * mu`` for a Fresnel mask.

    For integer ``rho`` and even ``m`` the quadrants satisfy
    ``h1 = h4 = s h2 = s h3`` with ``s = +1`` or ``-1``. ``s`` is estimated as
    the mean of ``h1 / h2``.

    With ``check=False`` the integer-rho precondition and the final assertion
    are skipped, which lets callers measure how badly the symmetry fails.
    """
    mu = check_image(mu, name="mu")
    m = mu.shape[0]
    if mu.shape[1] != m or m % 2:
        raise DimensionError(f"mu must be square with even side, got {mu.shape}")
    if check:
        _require_integer_rho(rho)
    h = np.conj(conjugate_inversion(mu)) * mu
    h1, h2, h3, h4 = _quadrants(h)
    s = complex(np.mean(h1 / h2))
    scale = np.linalg.norm(h1)
    residual = max(
        np.linalg.norm(h1 - h4), np.linalg.norm(h1 - s * h2), np.linalg.norm(h1 - s * h3)
    ) / scale
    sign = float(np.real(s))
    if check:
        if abs(s - round(sign)) > 1e-10 or abs(round(sign)) != 1 or residual > 1e-10:
            raise ArithmeticError(f"twin symmetry fails: s={s}, residual={residual}")
        sign = float(round(sign))
    return {"h": h, "twin_sign": sign, "symmetry_residual": float(residual)}


def twin_image(x, mu, rho):
    """Object ``Q x * conj(h)`` with the same q = 2 data as ``x``."""
    mu = check_image(mu, name="mu")
    x = check_image(x, shape=mu.shape, name="x")
    h = fresnel_h_symmetry(mu, rho)["h"]
    return conjugate_inversion(x) * np.conj(h)
