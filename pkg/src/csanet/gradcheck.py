"""Finite-difference verification of reverse-mode gradients.

Runs in 64-bit mode: reverse-mode gradients of a scalar-valued closure are
compared against central differences with step h = 1e-4. The reported
error for each input is max |analytic - numeric| normalized by the largest
gradient magnitude seen for that input.
"""

from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor
from .errors import NumericalError


@dataclass
class GradCheckReport:
    """Per-input worst relative errors plus the overall maximum."""

    per_input: list
    max_rel_error: float
    labels: list = None  # optional display names aligned with per_input

    def passed(self, tol=1e-3):
        return self.max_rel_error <= tol


def grad_check(fn, inputs, h=1e-4):
    """Compare reverse-mode and finite-difference gradients of fn(*inputs).

    fn must map the given Tensors to a scalar Tensor and be deterministic
    (re-running it with perturbed inputs must only reflect the
    perturbation). Inputs should be float64 and small (<= ~1e3 elements).
    """
    inputs = list(inputs)
    for t in inputs:
        if not isinstance(t, Tensor):
            raise TypeError("grad_check inputs must be Tensors")
        t.requires_grad = True
        t.zero_grad()
        if t.data.dtype != np.float64:
            raise NumericalError("grad_check requires float64 inputs")
        t.data = np.ascontiguousarray(t.data)  # reshape(-1) below must be a view

    out = fn(*inputs)
    if out.data.size != 1:
        raise NumericalError("grad_check closure must return a scalar")
    if not np.isfinite(out.data):
        raise NumericalError("closure produced a non-finite value")
    out.backward()
    analytic = [np.zeros_like(t.data) if t.grad is None else np.array(t.grad, dtype=np.float64) for t in inputs]

    per_input = []
    worst = 0.0
    for t, ana in zip(inputs, analytic):
        if not np.all(np.isfinite(ana)):
            raise NumericalError("non-finite analytic gradient")
        num = np.zeros_like(t.data)
        flat = t.data.reshape(-1)
        nflat = num.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = float(fn(*inputs).data)
            flat[i] = orig - h
            dn = float(fn(*inputs).data)
            flat[i] = orig
            nflat[i] = (up - dn) / (2.0 * h)
        if not np.all(np.isfinite(num)):
            raise NumericalError("non-finite numeric gradient")
        scale = max(float(np.abs(ana).max(initial=0.0)), float(np.abs(num).max(initial=0.0)))
        if scale < 1e-12:
            err = float(np.abs(ana - num).max(initial=0.0))
        else:
            err = float(np.abs(ana - num).max(initial=0.0) / scale)
        per_input.append(err)
        worst = max(worst, err)
        t.zero_grad()
    return GradCheckReport(per_input=per_input, max_rel_error=worst)
