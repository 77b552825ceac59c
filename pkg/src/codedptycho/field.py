"""Oversampled DFT and periodic patch indexing on complex 2-D arrays.

Images are plain ``numpy`` complex arrays. The transforms accept leading batch
dimensions and act on the last two axes.
"""
from dataclasses import dataclass

import numpy as np
import scipy.fft

from ._validation import DimensionError, check_image

__all__ = [
    "Grid",
    "odft",
    "odft_adjoint",
    "oversampled_size",
    "wrap_extract",
    "wrap_embed_add",
    "wrap_indices",
]


@dataclass(frozen=True)
class Grid:
    """Rectangular pixel domain ``origin + [0, size)`` on a periodic lattice."""

    origin: tuple
    size: tuple

    def __post_init__(self):
        object.__setattr__(self, "origin", tuple(int(v) for v in self.origin))
        object.__setattr__(self, "size", tuple(int(v) for v in self.size))
        if len(self.origin) != 2 or len(self.size) != 2:
            raise DimensionError("Grid origin and size must be integer pairs")
        if min(self.size) < 1:
            raise DimensionError(f"Grid size must be positive, got {self.size}")


def oversampled_size(m):
    """Side length ``2m - 1`` of the frequency grid for an m x m patch."""
    return 2 * m - 1


def odft(patch):
    """Unitary-column oversampled DFT of an m x m patch.

    The patch is zero-padded to ``(2m-1) x (2m-1)`` and transformed with the
    kernel ``exp(-2j*pi*n.w)``; the result is scaled by ``1/(2m-1)`` so the
    implied matrix has orthonormal columns.

    Parameters
    ----------
    patch : array_like, shape (..., m, m)

    Returns
    -------
    ndarray, shape (..., 2m-1, 2m-1)
    """
    patch = np.asarray(patch, dtype=np.complex128)
    if patch.ndim < 2 or patch.shape[-1] != patch.shape[-2]:
        raise DimensionError(f"odft expects square patches, got shape {patch.shape}")
    p = oversampled_size(patch.shape[-1])
    return scipy.fft.fft2(patch, s=(p, p), axes=(-2, -1)) / p


def odft_adjoint(block, m):
    """Adjoint of :func:`odft`; maps (2m-1)x(2m-1) blocks back to m x m."""
    block = np.asarray(block, dtype=np.complex128)
    p = oversampled_size(m)
    if block.ndim < 2 or block.shape[-2:] != (p, p):
        raise DimensionError(
            f"odft_adjoint with m={m} expects blocks of shape ({p}, {p}), got {block.shape}"
        )
    # ifft2 carries 1/p**2; the adjoint of the 1/p-scaled forward needs p * ifft2.
    full = scipy.fft.ifft2(block, axes=(-2, -1)) * p
    return full[..., :m, :m]


def wrap_indices(shape, grid):
    """Row and column index vectors of ``grid`` reduced modulo ``shape``."""
    rows = (grid.origin[0] + np.arange(grid.size[0])) % shape[0]
    cols = (grid.origin[1] + np.arange(grid.size[1])) % shape[1]
    return rows, cols


def wrap_extract(x, grid):
    """Copy the ``grid`` patch of ``x`` using periodic indexing."""
    x = check_image(x)
    rows, cols = wrap_indices(x.shape, grid)
    return x[np.ix_(rows, cols)]


def wrap_embed_add(acc, patch, grid):
    """Return ``acc`` plus ``patch`` placed at ``grid`` with periodic wrap.

    This is the adjoint of :func:`wrap_extract`. Pixels hit more than once
    (a grid larger than ``acc``) accumulate every contribution.
    """
    acc = check_image(acc, name="acc")
    patch = check_image(patch, shape=grid.size, name="patch")
    rows, cols = wrap_indices(acc.shape, grid)
    out = acc.copy()
    np.add.at(out, np.ix_(rows, cols), patch)
    return out
