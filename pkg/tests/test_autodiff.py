"""Core tensor/tape behavior: broadcasting, shape ops, determinism."""

import numpy as np
import pytest

from csanet.autodiff import Tensor, concat, narrow, no_grad, pad, precision
from csanet.errors import DimensionError


def test_add_broadcast_backward():
    a = Tensor(np.ones((2, 3)), requires_grad=True)
    b = Tensor(np.ones(3), requires_grad=True)
    out = (a + b).sum()
    out.backward()
    assert a.grad.shape == (2, 3)
    assert b.grad.shape == (3,)
    np.testing.assert_array_equal(b.grad, [2.0, 2.0, 2.0])


def test_mul_scalar_parameter_backward():
    alpha = Tensor(np.float64(2.0), requires_grad=True)
    x = Tensor(np.arange(6.0).reshape(2, 3))
    out = (alpha * x).sum()
    out.backward()
    assert alpha.grad.shape == ()
    assert float(alpha.grad) == pytest.approx(15.0)


def test_matmul_backward_with_2d_rhs():
    a = Tensor(np.random.default_rng(0).standard_normal((2, 4, 3)), requires_grad=True)
    w = Tensor(np.random.default_rng(1).standard_normal((3, 5)), requires_grad=True)
    out = (a @ w).sum()
    out.backward()
    assert a.grad.shape == (2, 4, 3)
    assert w.grad.shape == (3, 5)


def test_transpose_reshape_roundtrip_gradient():
    x = Tensor(np.arange(24.0).reshape(2, 3, 4), requires_grad=True)
    out = x.transpose(2, 0, 1).reshape((4, 6)).sum()
    out.backward()
    np.testing.assert_array_equal(x.grad, np.ones((2, 3, 4)))


def test_concat_and_narrow_gradients():
    a = Tensor(np.ones((2, 2)), requires_grad=True)
    b = Tensor(np.ones((2, 3)), requires_grad=True)
    merged = concat([a, b], axis=1)
    out = narrow(merged, 1, 1, 3).sum()
    out.backward()
    np.testing.assert_array_equal(a.grad, [[0, 1], [0, 1]])
    np.testing.assert_array_equal(b.grad, [[1, 1, 0], [1, 1, 0]])


def test_pad_backward_crops():
    x = Tensor(np.ones((1, 2)), requires_grad=True)
    out = pad(x, ((0, 0), (1, 2))).sum()
    out.backward()
    np.testing.assert_array_equal(x.grad, np.ones((1, 2)))


def test_backward_requires_scalar():
    x = Tensor(np.ones(3), requires_grad=True)
    with pytest.raises(DimensionError):
        (x * 2).backward()


def test_no_grad_builds_no_tape():
    x = Tensor(np.ones(3), requires_grad=True)
    with no_grad():
        out = x * 2
    assert out._backward is None
    assert not out.requires_grad


def test_grad_accumulates_across_uses():
    x = Tensor(np.array([3.0]), requires_grad=True)
    out = (x * x).sum()  # both operands are the same node
    out.backward()
    assert float(x.grad[0]) == pytest.approx(6.0)


def test_precision_context_switches_dtype():
    with precision("float64"):
        t = Tensor([1, 2, 3])
        assert t.dtype == np.float64
    t = Tensor([1, 2, 3])
    assert t.dtype == np.float32


def test_float_inputs_keep_their_dtype():
    t = Tensor(np.zeros(2, dtype=np.float64))
    assert t.dtype == np.float64


def test_determinism_same_graph_bitwise():
    rng = np.random.default_rng(5)
    data = rng.standard_normal((4, 4)).astype(np.float32)
    w = rng.standard_normal((4, 4)).astype(np.float32)

    def run():
        x = Tensor(data, requires_grad=True)
        out = ((x @ Tensor(w)) * 0.5).sum()
        out.backward()
        return out.data.copy(), x.grad.copy()

    o1, g1 = run()
    o2, g2 = run()
    assert o1.tobytes() == o2.tobytes()
    assert g1.tobytes() == g2.tobytes()
