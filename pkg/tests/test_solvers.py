import csv
import io

import numpy as np
import pytest

from codedptycho._validation import DimensionError, ParameterError
from codedptycho.phantom import ObjectSpec, make_rpp
from codedptycho.solvers import (
    SolverConfig,
    ap_fixed_point_test,
    ap_step,
    dr_fixed_point_residual,
    dr_step,
    project_modulus,
    project_range,
    run,
    sgn,
)

from conftest import random_complex


@pytest.fixture
def problem(make_op):
    op = make_op(32, 4, kind="iid", seed=2)
    f = make_rpp(ObjectSpec(32, 2 * np.pi, 1))
    return op, f, op.measure(f)


def test_sgn_values():
    out = sgn(np.array([0, -3, 2j, 3 + 4j]))
    np.testing.assert_allclose(out, [1, -1, 1j, 0.6 + 0.8j], atol=1e-16)
    rng = np.random.default_rng(0)
    np.testing.assert_allclose(np.abs(sgn(random_complex(rng, (50,)))), 1.0, atol=1e-15)


def test_range_projection_properties(problem, rng):
    op, _, _ = problem
    y = random_complex(rng, op.data_shape)
    w = random_complex(rng, op.data_shape)
    p = project_range(op, y)
    assert np.linalg.norm(project_range(op, p) - p) <= 1e-12 * np.linalg.norm(p)
    assert np.linalg.norm(p) <= np.linalg.norm(y)
    lhs, rhs = np.vdot(project_range(op, y), w), np.vdot(y, project_range(op, w))
    assert abs(lhs - rhs) <= 1e-12 * abs(lhs)
    r = op.forward(random_complex(rng, op.object_shape))
    np.testing.assert_allclose(project_range(op, r), r, atol=1e-12)


def test_modulus_projection_properties(problem, rng):
    op, _, b = problem
    y = random_complex(rng, op.data_shape)
    p = project_modulus(b, y)
    np.testing.assert_array_max_ulp(np.abs(p), b, maxulp=4)
    np.testing.assert_allclose(project_modulus(b, p), p, atol=1e-14)
    np.testing.assert_array_equal(project_modulus(b, np.zeros(op.data_shape)), b)
    for _ in range(5):
        w = b * np.exp(2j * np.pi * rng.uniform(size=op.data_shape))
        assert np.linalg.norm(p - y) <= np.linalg.norm(w - y)
    with pytest.raises(DimensionError):
        project_modulus(b[:2], y)


def test_true_solution_is_fixed(problem):
    op, f, b = problem
    y = op.forward(f)
    assert np.linalg.norm(ap_step(op, b, y) - y) <= 1e-12 * np.linalg.norm(y)
    assert np.linalg.norm(dr_step(op, b, y) - y) <= 1e-12 * np.linalg.norm(y)


def test_ap_object_norm_never_exceeds_data_norm(problem, rng):
    op, _, b = problem
    y = random_complex(rng, op.data_shape)
    for _ in range(5):
        y = ap_step(op, b, y)
        assert np.linalg.norm(op.adjoint(y)) <= np.linalg.norm(b) * (1 + 1e-12)


def test_ap_set_distance_is_monotone(problem, rng):
    op, _, b = problem
    y = op.forward(random_complex(rng, op.object_shape))
    dist = []
    for _ in range(10):
        dist.append(np.linalg.norm(project_modulus(b, y) - y))
        y = ap_step(op, b, y)
    assert all(d1 <= d0 * (1 + 1e-12) for d0, d1 in zip(dist, dist[1:]))


def test_dr_with_zero_data(problem, rng):
    op, _, b = problem
    y = random_complex(rng, op.data_shape)
    out = dr_step(op, np.zeros_like(b), y)
    np.testing.assert_allclose(out, y - project_range(op, y), atol=1e-12)


def test_dr_residual_formula(problem, rng):
    op, _, b = problem
    y = random_complex(rng, op.data_shape)
    step = np.linalg.norm(dr_step(op, b, y) - y)
    assert dr_fixed_point_residual(op, b, y) == pytest.approx(step, rel=1e-12)


def test_config_validation():
    with pytest.raises(ParameterError):
        SolverConfig(0, 0)
    with pytest.raises(ParameterError):
        SolverConfig(1, 0, stop_rr=-1.0)


def test_run_trace_and_convergence(problem):
    op, f, b = problem
    x_hat, trace = run(op, b, SolverConfig(60, 40, 3), f_true=f)
    assert len(trace) == 100
    assert trace.algo[:60] == ["DR"] * 60 and trace.algo[60:] == ["AP"] * 40
    assert trace.iter[0] == 1 and trace.iter[60] == 1
    assert trace.re[-1] < 1e-2
    assert all(nb == pytest.approx(np.linalg.norm(b)) for nb in trace.norm_b)
    assert trace.re[-1] == pytest.approx(
        np.linalg.norm(f - np.vdot(x_hat, f) / abs(np.vdot(x_hat, f)) * x_hat) / np.linalg.norm(f)
    )


def test_run_without_reference_has_nan_error(problem):
    op, _, b = problem
    _, trace = run(op, b, SolverConfig(3, 2, 0))
    assert np.all(np.isnan(trace.re)) and len(trace) == 5


def test_run_early_stop(problem):
    op, f, b = problem
    _, trace = run(op, b, SolverConfig(60, 200, 3, stop_rr=1e-6), f_true=f)
    assert trace.rr[-1] < 1e-6
    assert len(trace) < 260
    assert all(r >= 1e-6 for r in trace.rr[:-1])


def test_run_is_deterministic(problem):
    op, f, b = problem
    a, ta = run(op, b, SolverConfig(10, 5, 9), f_true=f)
    c, tc = run(op, b, SolverConfig(10, 5, 9), f_true=f)
    np.testing.assert_array_equal(a, c)
    assert ta.to_csv() == tc.to_csv()


def test_global_phase_equivariance(problem, rng):
    op, f, b = problem
    x0 = random_complex(rng, op.object_shape)
    x0 *= np.linalg.norm(b) / np.linalg.norm(x0)
    cfg = SolverConfig(20, 10, 0)
    _, t0 = run(op, b, cfg, f_true=f, x0=x0)
    _, t1 = run(op, b, cfg, f_true=f, x0=np.exp(1.234j) * x0)
    np.testing.assert_allclose(t1.re, t0.re, rtol=0, atol=1e-10)


def test_ap_fixed_point_test(problem):
    op, f, b = problem
    res = ap_fixed_point_test(op, b, f)
    assert abs(res["norm_x"] - res["norm_b"]) <= 1e-12 * res["norm_b"]
    assert res["is_solution"]
    assert not ap_fixed_point_test(op, b, np.zeros_like(f))["is_solution"]


def test_trace_csv_format(problem):
    op, f, b = problem
    _, trace = run(op, b, SolverConfig(2, 1, 0), f_true=f)
    rows = list(csv.reader(io.StringIO(trace.to_csv())))
    assert rows[0] == ["algo", "iter", "re", "rr", "norm_x", "norm_b"]
    assert [r[0] for r in rows[1:]] == ["DR", "DR", "AP"]
    assert float(rows[1][2]) == trace.re[0]
    assert float(rows[3][5]) == trace.norm_b[2]


def test_ap_tail_contracts_at_gap_rate(problem):
    from codedptycho.analysis import compute_gamma_dense

    op, f, b = problem
    _, trace = run(op, b, SolverConfig(100, 100, 3), f_true=f)
    re = np.array([r for a, r in zip(trace.algo, trace.re) if a == "AP"])
    tail = re[(re < 1e-2) & (re > 1e-12)]
    assert tail.size > 10
    gamma = compute_gamma_dense(op, f).gamma
    assert np.median(tail[1:] / tail[:-1]) <= gamma**2 + 0.05
