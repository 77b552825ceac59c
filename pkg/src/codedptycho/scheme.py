"""Minimalist ptychographic scheme and the normalized measurement operator.

The operator ``A*`` maps an n x n object to a stack of ``T`` oversampled
diffraction blocks of shape (2m-1, 2m-1), one per mask shift. Columns are
normalized so that ``A A* = I``.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from ._validation import DimensionError, ParameterError, check_image, check_int, check_nonneg
from .field import Grid, odft, odft_adjoint, oversampled_size

__all__ = [
    "OVERLAPS",
    "Scheme",
    "NoiseSpec",
    "MeasurementOperator",
    "build_scheme",
    "coverage_map",
    "realized_nsr",
]

OVERLAPS = ("half", "three_quarter")


@dataclass(frozen=True)
class Scheme:
    """Shift geometry: ``len(shifts)`` grids of size m x m on an n x n torus."""

    n: int
    q: int
    overlap: str
    m: int
    step: int
    shifts: tuple = field(repr=False)

    @property
    def coverage(self):
        """Number of grids covering each object pixel (4 or 16)."""
        return (self.m // self.step) ** 2

    @property
    def n_patterns(self):
        return len(self.shifts)

    @property
    def block_size(self):
        return oversampled_size(self.m)

    @property
    def data_count(self):
        return self.n_patterns * self.block_size**2


def build_scheme(n, q, overlap="half"):
    """Enumerate the mask shifts of the minimalist scheme.

    Mask side is ``m = 2n/q``. With ``overlap="half"`` the shift step is m/2
    and there are q**2 grids; with ``"three_quarter"`` the step is m/4 and
    there are 4q**2 grids. Shifts are ordered row-major over (k, l) with
    origin ``step * (k, l)``.
    """
    n = check_int(n, "scheme.n", minimum=1)
    q = check_int(q, "scheme.q", minimum=2)
    if overlap not in OVERLAPS:
        raise ParameterError(f"scheme.overlap must be one of {OVERLAPS}, got {overlap!r}", "scheme.overlap")
    if (2 * n) % q != 0 or ((2 * n) // q) % 2 != 0:
        raise ParameterError(
            f"scheme.q={q} is inadmissible for n={n}: m = 2n/q must be an even integer",
            "scheme.q",
        )
    m = 2 * n // q
    if overlap == "half":
        step, per_axis = m // 2, q
    else:
        if m % 4 != 0:
            raise ParameterError(
                f"scheme.q={q} is inadmissible for n={n} with three_quarter overlap: "
                "m = 2n/q must be divisible by 4",
                "scheme.q",
            )
        step, per_axis = m // 4, 2 * q
    shifts = tuple(
        Grid((step * k, step * l), (m, m)) for k in range(per_axis) for l in range(per_axis)
    )
    return Scheme(n=n, q=q, overlap=overlap, m=m, step=step, shifts=shifts)


def coverage_map(scheme):
    """How many grids of ``scheme`` contain each object pixel."""
    counts = np.zeros((scheme.n, scheme.n), dtype=int)
    for g in scheme.shifts:
        rows = (g.origin[0] + np.arange(g.size[0])) % scheme.n
        cols = (g.origin[1] + np.arange(g.size[1])) % scheme.n
        np.add.at(counts, np.ix_(rows, cols), 1)
    return counts


@dataclass
class NoiseSpec:
    """Target realized noise-to-signal ratio and the seed of the noise draw."""

    nsr_target: float = 0.0
    seed: int = 0

    def __post_init__(self):
        self.nsr_target = check_nonneg(self.nsr_target, "noise.nsr_target")
        self.seed = check_int(self.seed, "noise.seed", minimum=0)


def realized_nsr(b, clean):
    """``||b - |clean||| / ||clean||`` for modulus data ``b``."""
    return np.linalg.norm(b - np.abs(clean)) / np.linalg.norm(clean)


class MeasurementOperator:
    """Stacked masked oversampled DFT ``A*`` and its adjoint ``A``.

    Parameters
    ----------
    scheme : Scheme
    mask : array_like, shape (m, m)
        Unit-modulus phase mask shared (by translation) across all shifts.

    Notes
    -----
    ``forward`` and ``adjoint`` accept leading batch dimensions. The adjoint
    accumulates overlapping patches with ``np.bincount`` in a fixed order, so
    results do not depend on how the FFTs were parallelized.
    """

    def __init__(self, scheme, mask):
        self.scheme = scheme
        self.mask = check_image(mask, shape=(scheme.m, scheme.m), name="mask")
        self.nu = 1.0 / np.sqrt(scheme.coverage)
        n, m = scheme.n, scheme.m
        idx = np.empty((scheme.n_patterns, m, m), dtype=np.intp)
        for t, g in enumerate(scheme.shifts):
            rows = (g.origin[0] + np.arange(m)) % n
            cols = (g.origin[1] + np.arange(m)) % n
            idx[t] = rows[:, None] * n + cols[None, :]
        self._idx = idx

    @property
    def object_shape(self):
        return (self.scheme.n, self.scheme.n)

    @property
    def data_shape(self):
        p = self.scheme.block_size
        return (self.scheme.n_patterns, p, p)

    def forward(self, x):
        """Apply ``A*``: object(s) ``(..., n, n)`` to data ``(..., T, P, P)``."""
        x = np.asarray(x, dtype=np.complex128)
        if x.shape[-2:] != self.object_shape:
            raise DimensionError(f"object must have trailing shape {self.object_shape}, got {x.shape}")
        lead = x.shape[:-2]
        flat = x.reshape(lead + (-1,))
        patches = flat[..., self._idx] * self.mask
        return self.nu * odft(patches)

    def adjoint(self, y):
        """Apply ``A``: data ``(..., T, P, P)`` to object(s) ``(..., n, n)``."""
        y = np.asarray(y, dtype=np.complex128)
        if y.shape[-3:] != self.data_shape:
            raise DimensionError(f"data must have trailing shape {self.data_shape}, got {y.shape}")
        lead = y.shape[:-3]
        patches = odft_adjoint(self.nu * y, self.scheme.m) * np.conj(self.mask)
        nn = self.scheme.n**2
        batch = int(np.prod(lead, dtype=np.intp))
        offsets = (np.arange(batch) * nn)[:, None]
        index = (offsets + self._idx.reshape(1, -1)).ravel()
        weights = patches.reshape(-1)
        re = np.bincount(index, weights=weights.real, minlength=batch * nn)
        im = np.bincount(index, weights=weights.imag, minlength=batch * nn)
        return (re + 1j * im).reshape(lead + self.object_shape)

    def measure(self, f, noise=None):
        """Modulus data ``|A* f + z|``.

        With a :class:`NoiseSpec`, ``z`` is circularly symmetric complex
        Gaussian noise rescaled so the realized NSR matches the target to
        within 0.1%.
        """
        f = check_image(f, shape=self.object_shape, name="f")
        clean = self.forward(f)
        if noise is None or noise.nsr_target == 0.0:
            return np.abs(clean)
        target = noise.nsr_target
        rng = np.random.default_rng(noise.seed)
        z = rng.standard_normal(clean.shape) + 1j * rng.standard_normal(clean.shape)
        z *= np.linalg.norm(clean) / np.linalg.norm(z)

        def excess(scale):
            return realized_nsr(np.abs(clean + scale * z), clean) - target

        hi = target
        while excess(hi) < 0:
            hi *= 2.0
            if hi > 1e6:
                raise ParameterError(f"cannot reach target NSR {target}", "noise.nsr_target")
        scale = brentq(excess, 0.0, hi, xtol=1e-14, rtol=1e-12)
        return np.abs(clean + scale * z)
