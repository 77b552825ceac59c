"""Randomly phased phantom (RPP) test objects."""
from dataclasses import asdict, dataclass

import numpy as np

from ._validation import ParameterError, check_int, check_nonneg

__all__ = ["ObjectSpec", "shepp_logan", "make_rpp"]

# Modified Shepp-Logan (Toft): intensity, semi-axes a, b, centre x0, y0, angle (deg).
_SHEPP_LOGAN = np.array(
    [
        [1.0, 0.69, 0.92, 0.0, 0.0, 0.0],
        [-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0],
        [-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0],
        [-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0],
        [0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0],
        [0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0],
        [0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0],
        [0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0],
        [0.1, 0.0230, 0.0230, 0.0, -0.605, 0.0],
        [0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0],
    ]
)


@dataclass
class ObjectSpec:
    n: int = 64
    angle_range: float = 2.0 * np.pi
    seed: int = 0

    def __post_init__(self):
        self.n = check_int(self.n, "object.n", minimum=8)
        self.angle_range = check_nonneg(self.angle_range, "object.angle_range")
        if self.angle_range > 2.0 * np.pi + 1e-12:
            raise ParameterError(
                f"object.angle_range must lie in [0, 2pi], got {self.angle_range}",
                "object.angle_range",
            )
        self.seed = check_int(self.seed, "object.seed", minimum=0)

    def to_dict(self):
        return asdict(self)

    def build(self):
        return make_rpp(self)


def shepp_logan(n):
    """Ten-ellipse Shepp-Logan phantom on an n x n grid spanning [-1, 1]^2.

    Row 0 is the top of the image (y = +1). Values are clipped to be
    nonnegative; the background outside the skull ellipse is exactly zero.
    """
    n = check_int(n, "n", minimum=2)
    axis = (np.arange(n) - (n - 1) / 2) / ((n - 1) / 2)
    x = np.broadcast_to(axis[None, :], (n, n))
    y = np.broadcast_to(-axis[:, None], (n, n))
    img = np.zeros((n, n))
    for amp, a, b, x0, y0, deg in _SHEPP_LOGAN:
        phi = np.deg2rad(deg)
        c, s = np.cos(phi), np.sin(phi)
        xr = (x - x0) * c + (y - y0) * s
        yr = -(x - x0) * s + (y - y0) * c
        img[(xr / a) ** 2 + (yr / b) ** 2 <= 1.0] += amp
    # 1 - 0.8 - 0.2 leaves rounding residue inside the dark ellipses.
    img[img < 1e-12] = 0.0
    return img


def make_rpp(spec):
    """Shepp-Logan modulus with i.i.d. uniform phases on [0, angle_range].

    Zero-modulus pixels carry phase 0.
    """
    modulus = shepp_logan(spec.n)
    rng = np.random.default_rng(spec.seed)
    phase = rng.uniform(0.0, spec.angle_range, size=modulus.shape)
    phase[modulus == 0] = 0.0
    return modulus * np.exp(1j * phase)
