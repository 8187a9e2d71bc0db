"""Finite-difference gradient oracle.

The analytic gradient of a random projection ``sum(R * f(inputs))`` is
compared with central differences ``(L(x + h) - L(x - h)) / 2h`` for every
element of every input. Checks run in float64.
"""

from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel

from app.core.logging import get_logger
from app.tensor import functional as F
from app.tensor.rng import make_rng
from app.tensor.tensor import Array, Tensor, backpropagate

logger = get_logger(__name__)

FD_STEP = 1e-5
# Relative errors are measured against max(|analytic|, |numeric|, floor)
RELATIVE_FLOOR = 1e-6

type OpUnderTest = Callable[..., Tensor]


class GradCheckReport(BaseModel):
    """Outcome of comparing analytic and numeric gradients for one op."""

    op: str
    points: int
    max_relative_error: float
    tolerance: float
    passed: bool


def _projected_loss(fn: OpUnderTest, inputs: Sequence[Tensor], projection: Array) -> float:
    return float(np.sum(fn(*inputs).data * projection))


def grad_check(
    fn: OpUnderTest,
    inputs: Sequence[Tensor],
    tolerance: float = 1e-4,
    step: float = FD_STEP,
    name: str = "op",
    seed: int = 0,
) -> GradCheckReport:
    """Compare analytic and central-difference gradients at one input point.

    Args:
        fn: Operation under test, called as ``fn(*inputs)``.
        inputs: float64 tensors; those with ``requires_grad`` are checked.
        tolerance: Pass threshold on the maximum relative error.
        step: Finite-difference step ``h``.
        name: Label for the report.
        seed: Seed of the random output projection.

    Returns:
        A report; a failing check is a report, not an exception.
    """
    for t in inputs:
        t.zero_grad()
    out = fn(*inputs)
    projection = make_rng(seed, "gradcheck.projection").standard_normal(out.shape)
    backpropagate(out, projection.astype(out.dtype))

    worst = 0.0
    for t in inputs:
        if not t.requires_grad:
            continue
        analytic = np.zeros_like(t.data) if t.grad is None else t.grad
        flat = t.data.reshape(-1)
        numeric = np.empty(flat.size, dtype=np.float64)
        for k in range(flat.size):
            original = flat[k]
            flat[k] = original + step
            plus = _projected_loss(fn, inputs, projection)
            flat[k] = original - step
            minus = _projected_loss(fn, inputs, projection)
            flat[k] = original
            numeric[k] = (plus - minus) / (2 * step)
        a = analytic.reshape(-1).astype(np.float64)
        scale = np.maximum(np.maximum(np.abs(a), np.abs(numeric)), RELATIVE_FLOOR)
        worst = max(worst, float(np.max(np.abs(a - numeric) / scale)))
        t.zero_grad()

    return GradCheckReport(
        op=name, points=1, max_relative_error=worst, tolerance=tolerance, passed=worst < tolerance
    )


@dataclass(frozen=True)
class GradCheckCase:
    """A named op plus a sampler of random float64 input points."""

    name: str
    fn: OpUnderTest
    sample: Callable[[np.random.Generator], list[Tensor]]


def _param(rng: np.random.Generator, *shape: int, away_from_zero: bool = False) -> Tensor:
    values = rng.standard_normal(shape)
    if away_from_zero:
        values = np.where(np.abs(values) < 0.05, np.sign(values + 1e-12) * 0.05, values)
    return Tensor(values, requires_grad=True, dtype=np.float64)


def _sample_maxpool(rng: np.random.Generator) -> list[Tensor]:
    # Distinct window values keep the argmax stable under the FD step
    values = rng.permutation(2 * 2 * 4 * 4).reshape(2, 2, 4, 4) * 0.1
    return [Tensor(values + rng.uniform(0, 0.01, values.shape), requires_grad=True, dtype=np.float64)]


TENSOR_CASES: tuple[GradCheckCase, ...] = (
    GradCheckCase(
        "conv2d",
        lambda x, w, b: F.conv2d(x, w, b, stride=1, padding=1),
        lambda rng: [_param(rng, 2, 2, 5, 5), _param(rng, 3, 2, 3, 3), _param(rng, 3)],
    ),
    GradCheckCase(
        "conv2d_strided",
        lambda x, w, b: F.conv2d(x, w, b, stride=2, padding=1),
        lambda rng: [_param(rng, 1, 2, 6, 6), _param(rng, 2, 2, 3, 3), _param(rng, 2)],
    ),
    GradCheckCase(
        "conv_transpose2d",
        lambda x, w, b: F.conv_transpose2d(x, w, b, stride=2, padding=1, output_padding=1),
        lambda rng: [_param(rng, 2, 2, 3, 3), _param(rng, 2, 3, 3, 3), _param(rng, 3)],
    ),
    GradCheckCase("maxpool2d", F.maxpool2d, _sample_maxpool),
    GradCheckCase(
        "prelu",
        F.prelu,
        lambda rng: [_param(rng, 2, 3, 4, away_from_zero=True), _param(rng)],
    ),
    GradCheckCase("relu", F.relu, lambda rng: [_param(rng, 2, 3, 4, away_from_zero=True)]),
    GradCheckCase(
        "mse_loss",
        F.mse_loss,
        lambda rng: [_param(rng, 2, 3, 4, 4), _param(rng, 2, 3, 4, 4)],
    ),
)


def run_suite(
    cases: Sequence[GradCheckCase],
    points: int = 20,
    tolerance: float = 1e-4,
    seed: int = 0,
) -> list[GradCheckReport]:
    """Check every case at ``points`` random input points.

    Returns:
        One aggregated report per case (worst error over all points).
    """
    reports: list[GradCheckReport] = []
    for case in cases:
        rng = make_rng(seed, "gradcheck", case.name)
        worst = 0.0
        for point in range(points):
            report = grad_check(
                case.fn, case.sample(rng), tolerance=tolerance, name=case.name, seed=seed + point
            )
            worst = max(worst, report.max_relative_error)
        summary = GradCheckReport(
            op=case.name,
            points=points,
            max_relative_error=worst,
            tolerance=tolerance,
            passed=worst < tolerance,
        )
        logger.info(
            "tensor.gradcheck.case_completed",
            op=case.name,
            points=points,
            max_relative_error=worst,
            passed=summary.passed,
        )
        reports.append(summary)
    return reports
