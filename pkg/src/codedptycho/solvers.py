"""Fourier-domain alternating projections (AP) and Douglas-Rachford (DR).

Both iterate on a data-space vector ``y`` with the two projections

* ``P1 y = A* A y`` onto the range of the measurement operator, and
* ``P2 y = b * sgn(y)`` onto the modulus set ``{|y| = b}``.

The object estimate at any point is ``A y``.
"""
import csv
import io
from dataclasses import dataclass, field

import numpy as np

from ._validation import DimensionError, ParameterError, check_int

__all__ = [
    "SolverConfig",
    "SolverTrace",
    "sgn",
    "project_range",
    "project_modulus",
    "ap_step",
    "dr_step",
    "dr_fixed_point_residual",
    "ap_fixed_point_test",
    "optimal_phase",
    "run",
]


def sgn(y):
    """Entrywise ``y/|y|`` with value 1 where ``y == 0``."""
    y = np.asarray(y, dtype=np.complex128)
    mag = np.abs(y)
    out = np.ones_like(y)
    nz = mag != 0
    out[nz] = y[nz] / mag[nz]
    return out


def project_range(op, y):
    return op.forward(op.adjoint(y))


def project_modulus(b, y):
    b = np.asarray(b, dtype=float)
    y = np.asarray(y, dtype=np.complex128)
    if b.shape != y.shape:
        raise DimensionError(f"modulus data shape {b.shape} does not match {y.shape}")
    return b * sgn(y)


def ap_step(op, b, y):
    """One AP iteration ``y <- P1 P2 y``."""
    return project_range(op, project_modulus(b, y))


def dr_step(op, b, y):
    """One DR iteration ``y <- y + P1(2 P2 y - y) - P2 y``."""
    p2 = project_modulus(b, y)
    return y + project_range(op, 2.0 * p2 - y) - p2


def dr_fixed_point_residual(op, b, y):
    """``||A*A(2 b sgn(y) - y) - b sgn(y)||``, the DR fixed-point defect at u = 1."""
    p2 = project_modulus(b, y)
    return float(np.linalg.norm(project_range(op, 2.0 * p2 - y) - p2))


def ap_fixed_point_test(op, b, x, tol=1e-8):
    """Norm criterion separating the true solution from other AP fixed points.

    Every AP fixed point satisfies ``||x|| <= ||b||``; equality singles out the
    true object.
    """
    norm_x = float(np.linalg.norm(x))
    norm_b = float(np.linalg.norm(b))
    return {
        "norm_x": norm_x,
        "norm_b": norm_b,
        "is_solution": abs(norm_x - norm_b) <= tol * norm_b,
    }


def optimal_phase(f, x):
    """Unit scalar ``a`` minimizing ``||f - a x||`` (1 if ``<x, f> = 0``)."""
    inner = np.vdot(x, f)
    mag = abs(inner)
    return inner / mag if mag > 0 else 1.0 + 0j


@dataclass
class SolverConfig:
    dr_iters: int = 300
    ap_iters: int = 100
    init_seed: int = 0
    stop_rr: float = None

    def __post_init__(self):
        self.dr_iters = check_int(self.dr_iters, "solver.dr_iters", minimum=0)
        self.ap_iters = check_int(self.ap_iters, "solver.ap_iters", minimum=0)
        self.init_seed = check_int(self.init_seed, "solver.init_seed", minimum=0)
        if self.dr_iters + self.ap_iters < 1:
            raise ParameterError("solver.dr_iters + solver.ap_iters must be at least 1", "solver.dr_iters")
        if self.stop_rr is not None:
            self.stop_rr = float(self.stop_rr)
            if not self.stop_rr >= 0:
                raise ParameterError("solver.stop_rr must be nonnegative", "solver.stop_rr")


@dataclass
class SolverTrace:
    """Per-iteration history. ``re`` holds NaN when no reference was given."""

    algo: list = field(default_factory=list)
    iter: list = field(default_factory=list)
    re: list = field(default_factory=list)
    rr: list = field(default_factory=list)
    norm_x: list = field(default_factory=list)
    norm_b: list = field(default_factory=list)

    COLUMNS = ("algo", "iter", "re", "rr", "norm_x", "norm_b")

    def append(self, algo, it, re, rr, norm_x, norm_b):
        self.algo.append(algo)
        self.iter.append(it)
        self.re.append(re)
        self.rr.append(rr)
        self.norm_x.append(norm_x)
        self.norm_b.append(norm_b)

    def __len__(self):
        return len(self.algo)

    def rows(self):
        return zip(*(getattr(self, c) for c in self.COLUMNS))

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.COLUMNS)
        for algo, it, re, rr, nx, nb in self.rows():
            writer.writerow([algo, it] + [f"{v:.17g}" for v in (re, rr, nx, nb)])
        return buf.getvalue()


def _initial_object(op, b, seed):
    rng = np.random.default_rng(seed)
    shape = op.object_shape
    x0 = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return x0 * (np.linalg.norm(b) / np.linalg.norm(x0))


def run(op, b, cfg, f_true=None, x0=None):
    """DR initialization followed by AP refinement.

    Parameters
    ----------
    op : MeasurementOperator
    b : ndarray
        Modulus data of shape ``op.data_shape``.
    cfg : SolverConfig
    f_true : ndarray, optional
        Reference object; enables the RE column of the trace.
    x0 : ndarray, optional
        Starting object. Defaults to a complex Gaussian image drawn from
        ``cfg.init_seed`` and scaled to ``||x0|| = ||b||``.

    Returns
    -------
    x_hat : ndarray
        Final object estimate ``A y``.
    trace : SolverTrace
    """
    b = np.asarray(b, dtype=float)
    if b.shape != op.data_shape:
        raise DimensionError(f"data must have shape {op.data_shape}, got {b.shape}")
    norm_b = float(np.linalg.norm(b))
    if f_true is not None:
        f_true = np.asarray(f_true, dtype=np.complex128)
        norm_f = np.linalg.norm(f_true)
    if x0 is None:
        x0 = _initial_object(op, b, cfg.init_seed)
    y = op.forward(x0)
    trace = SolverTrace()

    def record(algo, it, y):
        x = op.adjoint(y)
        ax = op.forward(x)
        rr = float(np.linalg.norm(b - np.abs(ax)) / norm_b)
        re = np.nan
        if f_true is not None:
            re = float(np.linalg.norm(f_true - optimal_phase(f_true, x) * x) / norm_f)
        trace.append(algo, it, re, rr, float(np.linalg.norm(x)), norm_b)
        return cfg.stop_rr is not None and rr < cfg.stop_rr

    stopped = False
    for it in range(1, cfg.dr_iters + 1):
        y = dr_step(op, b, y)
        if record("DR", it, y):
            stopped = True
            break
    if not stopped:
        for it in range(1, cfg.ap_iters + 1):
            y = ap_step(op, b, y)
            if record("AP", it, y):
                break
    return op.adjoint(y), trace
