"""Finite-difference checks for every differentiable op (64-bit)."""

import numpy as np
import pytest

from csanet import ops
from csanet.autodiff import Tensor
from csanet.errors import NumericalError
from csanet.gradcheck import grad_check
from csanet.verification import GRADCHECK_SCOPES, run_scope

TOL = 1e-3

OP_SCOPES = [name for name in GRADCHECK_SCOPES if name != "model-mini"]


@pytest.mark.parametrize("scope", OP_SCOPES)
def test_op_scope_passes(scope):
    report = run_scope(scope)
    assert report.passed(TOL), f"{scope}: max relative error {report.max_rel_error:.3e}"


def test_linear_plus_cross_entropy_closure():
    rng = np.random.default_rng(21)
    x = Tensor(rng.standard_normal((3, 6)))
    w = Tensor(rng.standard_normal((4, 6)) * 0.5)
    b = Tensor(rng.standard_normal(4))
    targets = np.array([1, 3, 0])
    report = grad_check(lambda x_, w_, b_: ops.cross_entropy(ops.linear(x_, w_, b_), targets), [x, w, b])
    assert report.passed(TOL)


def test_grad_check_rejects_float32():
    x = Tensor(np.zeros(3, dtype=np.float32))
    with pytest.raises(NumericalError):
        grad_check(lambda t: t.sum(), [x])


def test_grad_check_rejects_nonscalar_closure():
    x = Tensor(np.zeros(3, dtype=np.float64))
    with pytest.raises(NumericalError):
        grad_check(lambda t: t * 2, [x])


def test_grad_check_rejects_non_finite_closure():
    x = Tensor(np.ones(2, dtype=np.float64))
    with pytest.raises(NumericalError):
        grad_check(lambda t: (t * np.inf).sum(), [x])


def test_grad_check_reports_bad_gradients():
    # An intentionally wrong backward: treat y = 2x as if dy/dx were 1.
    def broken(t):
        out = Tensor(t.data * 2.0)
        out.requires_grad = True
        out._prev = (t,)

        def backward(g):
            from csanet.autodiff import _accumulate

            _accumulate(t, g)  # wrong: should be 2*g

        out._backward = backward
        return out.sum()

    x = Tensor(np.ones(4, dtype=np.float64))
    report = grad_check(broken, [x])
    assert not report.passed(TOL)
