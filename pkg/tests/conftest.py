import numpy as np
import pytest

from codedptycho.masks import make_mask, MaskSpec
from codedptycho.scheme import MeasurementOperator, build_scheme


def random_complex(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def make_op():
    def factory(n=16, q=2, overlap="half", kind="iid", seed=1, **mask_kw):
        scheme = build_scheme(n, q, overlap)
        mask = make_mask(MaskSpec(kind=kind, seed=seed, **mask_kw), scheme.m)
        return MeasurementOperator(scheme, mask)

    return factory


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
