"""Unit-modulus phase masks: i.i.d. random, correlated random, Fresnel, plain."""
from dataclasses import asdict, dataclass

import numpy as np
import scipy.fft

from ._validation import ParameterError, check_int

__all__ = [
    "MASK_KINDS",
    "MaskSpec",
    "make_iid_mask",
    "make_correlated_mask",
    "make_fresnel_mask",
    "make_plain_mask",
    "make_mask",
]

MASK_KINDS = ("iid", "correlated", "fresnel", "plain")


@dataclass
class MaskSpec:
    """Parameters of a phase mask.

    ``ell`` is only read for ``kind="correlated"``; ``rho`` and ``beta`` only
    for ``kind="fresnel"``. ``m`` may be left as ``None`` when the scheme
    decides the mask size.
    """

    kind: str = "iid"
    m: int = None
    ell: int = 1
    rho: float = 0.0
    beta: tuple = (0.0, 0.0)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in MASK_KINDS:
            raise ParameterError(
                f"mask.kind must be one of {MASK_KINDS}, got {self.kind!r}", "mask.kind"
            )
        if self.m is not None:
            self.m = check_int(self.m, "mask.m", minimum=1)
        self.ell = check_int(self.ell, "mask.ell", minimum=1)
        self.seed = check_int(self.seed, "mask.seed", minimum=0)
        if len(self.beta) != 2:
            raise ParameterError("mask.beta must be a pair of reals", "mask.beta")
        self.beta = (float(self.beta[0]), float(self.beta[1]))
        self.rho = float(self.rho)

    def to_dict(self):
        d = asdict(self)
        d["beta"] = list(self.beta)
        return d

    def build(self, m=None):
        """Generate the mask at side ``m`` (defaults to ``self.m``)."""
        m = self.m if m is None else m
        if m is None:
            raise ParameterError("mask size m is undetermined", "mask.m")
        return make_mask(self, m)


def make_iid_mask(m, seed):
    """Mask ``exp(1j*theta)`` with theta i.i.d. uniform on [0, 2pi)."""
    m = check_int(m, "m", minimum=1)
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, 2.0 * np.pi, size=(m, m))
    return np.exp(1j * theta)


def make_correlated_mask(m, ell, seed):
    """Correlated phase mask of correlation length ``ell``.

    The i.i.d. complex mask is convolved periodically with the indicator of the
    square ``max(|k1|, |k2|) <= ell/2`` (taken as a set of residues mod m) and
    each pixel is renormalized to unit modulus. A pixel whose sum vanishes
    gets the value 1. ``ell=1`` reproduces :func:`make_iid_mask` exactly.
    """
    m = check_int(m, "m", minimum=1)
    ell = check_int(ell, "ell", minimum=1)
    if ell > m:
        raise ParameterError(f"correlation length ell={ell} exceeds mask size m={m}", "mask.ell")
    base = make_iid_mask(m, seed)
    if ell == 1:
        return base

    half = ell // 2
    offsets = np.arange(-half, half + 1) % m
    kernel = np.zeros((m, m))
    kernel[np.ix_(offsets, offsets)] = 1.0
    summed = scipy.fft.ifft2(scipy.fft.fft2(base) * scipy.fft.fft2(kernel))
    mag = np.abs(summed)
    out = np.ones((m, m), dtype=np.complex128)
    nz = mag > 0
    out[nz] = summed[nz] / mag[nz]
    return out


def make_fresnel_mask(m, rho, beta=(0.0, 0.0)):
    """Discrete Fresnel mask ``exp(1j*pi*rho*((k1-b1)**2 + (k2-b2)**2)/m)``.

    Pixel ``[i, j]`` corresponds to ``k1 = i + 1``, ``k2 = j + 1``.
    """
    m = check_int(m, "m", minimum=1)
    k = np.arange(1, m + 1, dtype=float)
    k1 = (k - beta[0])[:, None]
    k2 = (k - beta[1])[None, :]
    return np.exp(1j * np.pi * float(rho) * (k1**2 + k2**2) / m)


def make_plain_mask(m):
    m = check_int(m, "m", minimum=1)
    return np.ones((m, m), dtype=np.complex128)


def make_mask(spec, m):
    """Dispatch on ``spec.kind`` and build an m x m mask."""
    if spec.kind == "iid":
        return make_iid_mask(m, spec.seed)
    if spec.kind == "correlated":
        return make_correlated_mask(m, spec.ell, spec.seed)
    if spec.kind == "fresnel":
        return make_fresnel_mask(m, spec.rho, spec.beta)
    return make_plain_mask(m)
