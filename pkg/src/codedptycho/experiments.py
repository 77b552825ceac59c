"""Metrics, experiment configuration and the parameter sweeps.

Each sweep point derives its own random streams from the configured seeds
and the point index, so sweeps give identical output whether points run
sequentially or in a process pool.
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ._validation import ParameterError, check_image, check_int
from .masks import MaskSpec, make_mask
from .phantom import ObjectSpec, make_rpp
from .scheme import OVERLAPS, MeasurementOperator, NoiseSpec, build_scheme, realized_nsr
from .solvers import SolverConfig, optimal_phase, run

__all__ = [
    "CONFIG_VERSION",
    "SWEEP_PARAMETERS",
    "SchemeConfig",
    "SweepConfig",
    "AnalysisConfig",
    "ExperimentConfig",
    "relative_error",
    "relative_residual",
    "derive_seed",
    "default_rho_grid",
    "default_angle_grid",
    "build_operator",
    "reconstruct",
    "run_rho_sweep",
    "run_q_sweep",
    "run_nsr_sweep",
    "run_angle_sweep",
]

logger = logging.getLogger(__name__)

CONFIG_VERSION = 1
SWEEP_PARAMETERS = ("rho", "q", "nsr", "angle_range")


def relative_error(f, f_hat):
    """``min_alpha ||f - exp(1j alpha) f_hat|| / ||f||``.

    The minimizing phase is ``arg <f_hat, f>``; evaluating the residual at that
    phase avoids the cancellation in the equivalent expression
    ``sqrt(||f||^2 + ||f_hat||^2 - 2|<f, f_hat>|) / ||f||``.
    """
    f = check_image(f, name="f")
    f_hat = check_image(f_hat, shape=f.shape, name="f_hat")
    norm_f = np.linalg.norm(f)
    if norm_f == 0:
        raise ValueError("relative error is undefined for a zero reference")
    return float(np.linalg.norm(f - optimal_phase(f, f_hat) * f_hat) / norm_f)


def relative_residual(b, op, f_hat):
    """``|| b - |A* f_hat| || / ||b||``."""
    b = np.asarray(b, dtype=float)
    norm_b = np.linalg.norm(b)
    if norm_b == 0:
        raise ValueError("relative residual is undefined for zero data")
    return float(np.linalg.norm(b - np.abs(op.forward(f_hat))) / norm_b)


def derive_seed(*keys):
    """Deterministic 63-bit seed from a tuple of nonnegative integers."""
    state = np.random.SeedSequence([int(k) for k in keys]).generate_state(2, dtype=np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1]))


def default_rho_grid():
    grid = [round(0.1 * k, 10) for k in range(1, 41)]
    return sorted(grid + [3.0 / (25.0 * math.pi), 6.0 / (5.0 * math.pi)])


def default_angle_grid():
    return [0.5 * math.pi, math.pi, 1.5 * math.pi, 2.0 * math.pi]


@dataclass
class SchemeConfig:
    q: int = 4
    overlap: str = "half"
    n: int = None

    def __post_init__(self):
        self.q = check_int(self.q, "scheme.q", minimum=2)
        if self.overlap not in OVERLAPS:
            raise ParameterError(f"scheme.overlap must be one of {OVERLAPS}", "scheme.overlap")
        if self.n is not None:
            self.n = check_int(self.n, "scheme.n", minimum=1)


@dataclass
class SweepConfig:
    parameter: str = "rho"
    values: list = None
    repeats: int = 1

    def __post_init__(self):
        if self.parameter not in SWEEP_PARAMETERS:
            raise ParameterError(
                f"sweep.parameter must be one of {SWEEP_PARAMETERS}, got {self.parameter!r}",
                "sweep.parameter",
            )
        if self.values is not None:
            if not isinstance(self.values, (list, tuple)) or not self.values:
                raise ParameterError("sweep.values must be a non-empty list", "sweep.values")
            conv = int if self.parameter == "q" else float
            try:
                self.values = [conv(v) for v in self.values]
            except (TypeError, ValueError):
                raise ParameterError("sweep.values must be numbers", "sweep.values") from None
        self.repeats = check_int(self.repeats, "sweep.repeats", minimum=1)


@dataclass
class AnalysisConfig:
    method: str = "auto"
    max_iters: int = 5000
    tol: float = 1e-9

    def __post_init__(self):
        if self.method not in ("auto", "dense", "power"):
            raise ParameterError("analysis.method must be auto, dense or power", "analysis.method")
        self.max_iters = check_int(self.max_iters, "analysis.max_iters", minimum=1)
        self.tol = float(self.tol)
        if not self.tol > 0:
            raise ParameterError("analysis.tol must be positive", "analysis.tol")


_SECTIONS = {
    "object": ObjectSpec,
    "mask": MaskSpec,
    "scheme": SchemeConfig,
    "noise": NoiseSpec,
    "solver": SolverConfig,
    "sweep": SweepConfig,
    "analysis": AnalysisConfig,
}
_OPTIONAL_SECTIONS = ("noise", "sweep")


def _section_keys(cls):
    return [f.name for f in cls.__dataclass_fields__.values()]


@dataclass
class ExperimentConfig:
    """Resolved experiment description (JSON ``version: 1``)."""

    object: ObjectSpec = field(default_factory=ObjectSpec)
    mask: MaskSpec = field(default_factory=MaskSpec)
    scheme: SchemeConfig = field(default_factory=SchemeConfig)
    noise: NoiseSpec = None
    solver: SolverConfig = field(default_factory=SolverConfig)
    sweep: SweepConfig = None
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    out_dir: str = "runs"
    seed: int = None
    version: int = CONFIG_VERSION

    def __post_init__(self):
        if self.version != CONFIG_VERSION:
            raise ParameterError(f"unsupported config version {self.version!r}", "version")
        if self.scheme.n is not None and self.scheme.n != self.object.n:
            raise ParameterError(
                f"scheme.n={self.scheme.n} must equal object.n={self.object.n}", "scheme.n"
            )
        if self.seed is not None:
            self.seed = check_int(self.seed, "seed", minimum=0)
            self.apply_master_seed(self.seed)

    @property
    def n(self):
        return self.object.n

    def apply_master_seed(self, master):
        """Replace every component seed with one derived from ``master``."""
        self.seed = master
        self.object.seed = derive_seed(master, 0)
        self.mask.seed = derive_seed(master, 1)
        self.solver.init_seed = derive_seed(master, 2)
        if self.noise is not None:
            self.noise.seed = derive_seed(master, 3)

    @classmethod
    def defaults(cls):
        """Nested dict of every config key with its default value."""
        out = {"version": CONFIG_VERSION, "seed": None, "out_dir": "runs"}
        for name, sec in _SECTIONS.items():
            inst = sec()
            out[name] = {k: getattr(inst, k) for k in _section_keys(sec)}
            if name == "mask":
                out[name]["beta"] = list(inst.beta)
        return out

    @classmethod
    def from_dict(cls, data):
        """Validate a parsed JSON config; unknown keys are rejected."""
        if not isinstance(data, dict):
            raise ParameterError("config must be a JSON object", "config")
        allowed = set(_SECTIONS) | {"version", "seed", "out_dir"}
        for key in data:
            if key not in allowed:
                raise ParameterError(f"unknown config key {key!r}", key)
        if "version" not in data:
            raise ParameterError("config is missing the 'version' field", "version")
        kwargs = {k: data[k] for k in ("version", "seed", "out_dir") if k in data}
        for name, sec in _SECTIONS.items():
            raw = data.get(name)
            if raw is None:
                if name in _OPTIONAL_SECTIONS:
                    kwargs[name] = None
                continue
            if not isinstance(raw, dict):
                raise ParameterError(f"config section {name!r} must be an object", name)
            keys = _section_keys(sec)
            for key in raw:
                if key not in keys:
                    raise ParameterError(f"unknown config key '{name}.{key}'", f"{name}.{key}")
            try:
                kwargs[name] = sec(**raw)
            except TypeError as exc:
                raise ParameterError(f"invalid section {name!r}: {exc}", name) from None
        return cls(**kwargs)

    def to_dict(self):
        out = {"version": self.version, "seed": self.seed, "out_dir": str(self.out_dir)}
        for name in _SECTIONS:
            sec = getattr(self, name)
            if sec is None:
                out[name] = None
                continue
            out[name] = {k: getattr(sec, k) for k in _section_keys(type(sec))}
            if name == "mask":
                out[name]["beta"] = list(sec.beta)
        return out


def build_operator(n, q, overlap, mask_spec):
    """Scheme plus mask for one configuration."""
    scheme = build_scheme(n, q, overlap)
    if mask_spec.m is not None and mask_spec.m != scheme.m:
        raise ParameterError(
            f"mask.m={mask_spec.m} disagrees with the scheme's mask size 2n/q={scheme.m}",
            "mask.m",
        )
    if mask_spec.kind == "correlated" and mask_spec.ell > scheme.m:
        raise ParameterError(f"mask.ell={mask_spec.ell} exceeds m={scheme.m}", "mask.ell")
    return MeasurementOperator(scheme, make_mask(mask_spec, scheme.m))


def _point(cfg, obj=None, mask=None, q=None, noise=None):
    """Simulate data and reconstruct once; returns a result dict."""
    obj = cfg.object if obj is None else obj
    mask = cfg.mask if mask is None else mask
    q = cfg.scheme.q if q is None else q
    op = build_operator(obj.n, q, cfg.scheme.overlap, mask)
    f = make_rpp(obj)
    clean = op.forward(f)
    b = op.measure(f, noise)
    x_hat, trace = run(op, b, cfg.solver, f_true=f)
    return {
        "op": op,
        "f": f,
        "b": b,
        "x_hat": x_hat,
        "trace": trace,
        "re": relative_error(f, x_hat),
        "rr": relative_residual(b, op, x_hat),
        "nsr": float(realized_nsr(b, clean)),
    }


def reconstruct(cfg):
    """Single simulate-and-reconstruct run of ``cfg``."""
    return _point(cfg, noise=cfg.noise)


def _map(fn, items, jobs):
    if jobs is None or jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _sweep_values(cfg, parameter, default):
    if cfg.sweep is None:
        return list(default)
    if cfg.sweep.parameter != parameter:
        raise ParameterError(
            f"sweep.parameter is {cfg.sweep.parameter!r} but a {parameter!r} sweep was requested",
            "sweep.parameter",
        )
    return list(default) if cfg.sweep.values is None else list(cfg.sweep.values)


def _strip(result):
    return {k: result[k] for k in ("re", "rr", "nsr", "trace", "f", "x_hat")}


def _rho_point(args):
    cfg, rho = args
    mask = replace(cfg.mask, kind="fresnel", rho=rho, m=None)
    return _strip(_point(cfg, mask=mask, noise=cfg.noise))


def run_rho_sweep(cfg, jobs=None):
    """Final RE/RR against the Fresnel parameter.

    Returns ``(header, rows, results)`` with rows ``(rho, re, rr)``.
    """
    values = _sweep_values(cfg, "rho", default_rho_grid())
    results = _map(_rho_point, [(cfg, float(r)) for r in values], jobs)
    rows = [(rho, r["re"], r["rr"]) for rho, r in zip(values, results)]
    return ("rho", "re", "rr"), rows, results


def mask_for_q(mask, n, q_ref, q):
    """Mask spec regenerated for a new q.

    Correlated masks keep ``m / ell`` at its value for ``q_ref``; Fresnel
    masks keep rho; random masks keep their seed.
    """
    m = 2 * n // q
    if mask.kind == "correlated":
        m_ref = 2 * n // q_ref
        ell = max(1, min(m, int(round(m * mask.ell / m_ref))))
        return replace(mask, m=None, ell=ell)
    return replace(mask, m=None)


def _q_point(args):
    cfg, q = args
    try:
        build_scheme(cfg.n, q, cfg.scheme.overlap)
    except ParameterError as exc:
        return {"error": str(exc)}
    mask = mask_for_q(cfg.mask, cfg.n, cfg.scheme.q, q)
    return _strip(_point(cfg, mask=mask, q=q, noise=cfg.noise))


def run_q_sweep(cfg, jobs=None):
    """RE trace for each q; rows ``(q, iter, re)`` with a global iteration count.

    An inadmissible q yields a single ``(q, 0, nan)`` row and a logged warning.
    """
    values = _sweep_values(cfg, "q", [cfg.scheme.q])
    results = _map(_q_point, [(cfg, int(q)) for q in values], jobs)
    rows = []
    for q, r in zip(values, results):
        if "error" in r:
            logger.warning("skipping q=%d: %s", q, r["error"])
            rows.append((q, 0, float("nan")))
            continue
        rows.extend((q, k, re) for k, re in enumerate(r["trace"].re, start=1))
    return ("q", "iter", "re"), rows, results


def _nsr_point(args):
    cfg, index, nsr, repeat = args
    base = cfg.noise.seed if cfg.noise is not None else 0
    noise = NoiseSpec(nsr_target=nsr, seed=derive_seed(base, index, repeat))
    return _strip(_point(cfg, noise=noise))


def run_nsr_sweep(cfg, jobs=None):
    """Final RE against target NSR; rows ``(nsr, repeat, re, rr, realized_nsr)``."""
    values = _sweep_values(cfg, "nsr", [0.05, 0.10, 0.15, 0.20, 0.25])
    repeats = cfg.sweep.repeats if cfg.sweep is not None else 1
    tasks = [(cfg, i, float(v), r) for i, v in enumerate(values) for r in range(repeats)]
    results = _map(_nsr_point, tasks, jobs)
    rows = [(t[2], t[3], r["re"], r["rr"], r["nsr"]) for t, r in zip(tasks, results)]
    return ("nsr", "repeat", "re", "rr", "realized_nsr"), rows, results


def _angle_point(args):
    cfg, angle = args
    obj = replace(cfg.object, angle_range=angle)
    return _strip(_point(cfg, obj=obj, noise=cfg.noise))


def run_angle_sweep(cfg, jobs=None):
    """RE trace for each object angle range; rows ``(angle_range, iter, re)``."""
    values = _sweep_values(cfg, "angle_range", default_angle_grid())
    results = _map(_angle_point, [(cfg, float(a)) for a in values], jobs)
    rows = []
    for a, r in zip(values, results):
        rows.extend((a, k, re) for k, re in enumerate(r["trace"].re, start=1))
    return ("angle_range", "iter", "re"), rows, results
