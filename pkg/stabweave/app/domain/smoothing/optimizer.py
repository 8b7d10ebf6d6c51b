"""Per-window minimization of the smoothing objective over Delta."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from loguru import logger
from scipy.optimize import minimize as scipy_minimize

from stabweave.app.config.pipeline_config import ObjectiveConfig, OptimizerConfig, SmoothingWeights
from stabweave.app.constants import StitchMode
from stabweave.app.core import SERVICE_NAME
from stabweave.app.domain.smoothing.objective import LossBreakdown, SmoothingIncrement, SmoothingObjective
from stabweave.app.domain.trajectory import TrajectoryWindow

FunGrad = Callable[[np.ndarray], tuple[float, np.ndarray]]

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
MIN_STEP = 1e-9


@dataclass(frozen=True)
class MinimizeResult:
    x: np.ndarray
    value: float
    initial_value: float
    iterations: int


@dataclass(frozen=True)
class SmoothingResult:
    increment: SmoothingIncrement
    breakdown: LossBreakdown
    initial_value: float
    iterations: int


def _relative_decrease(old: float, new: float) -> float:
    return (old - new) / max(abs(old), 1e-12)


def minimize_adam(fun_grad: FunGrad, x0: np.ndarray, cfg: OptimizerConfig) -> MinimizeResult:
    """Per-coordinate adaptive descent with step growth on accept and backtracking on increase.

    Accepted iterates never increase the loss, so the last accepted iterate is the best one.
    """
    x = np.array(x0, dtype=np.float64)
    f, g = fun_grad(x)
    initial = f
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    step = cfg.initial_step
    k = 0
    iterations = 0
    for iterations in range(1, cfg.max_iters + 1):
        k += 1
        m = ADAM_BETA1 * m + (1.0 - ADAM_BETA1) * g
        v = ADAM_BETA2 * v + (1.0 - ADAM_BETA2) * g * g
        direction = (m / (1.0 - ADAM_BETA1**k)) / (np.sqrt(v / (1.0 - ADAM_BETA2**k)) + ADAM_EPS)
        if not np.any(direction):
            break

        accepted = False
        for _ in range(cfg.max_backtracks + 1):
            candidate = x - step * direction
            fc, gc = fun_grad(candidate)
            if fc <= f:
                accepted = True
                break
            step *= cfg.step_shrink
            if step < MIN_STEP:
                break
        if not accepted:
            # Moments point uphill; restart them from the current gradient.
            m[...] = 0.0
            v[...] = 0.0
            k = 0
            step = max(step, cfg.initial_step * cfg.step_shrink)
            continue

        decrease = _relative_decrease(f, fc)
        x, f, g = candidate, fc, gc
        step *= cfg.step_growth
        if decrease < cfg.rel_tol:
            break
    return MinimizeResult(x=x, value=f, initial_value=initial, iterations=iterations)


def minimize_lbfgs(fun_grad: FunGrad, x0: np.ndarray, cfg: OptimizerConfig) -> MinimizeResult:
    shape = np.shape(x0)
    initial = fun_grad(np.asarray(x0, dtype=np.float64))[0]

    def flat(z: np.ndarray) -> tuple[float, np.ndarray]:
        value, grad = fun_grad(z.reshape(shape))
        return value, grad.ravel()

    result = scipy_minimize(
        flat,
        np.asarray(x0, dtype=np.float64).ravel(),
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": cfg.max_iters, "ftol": cfg.rel_tol, "gtol": cfg.grad_tol},
    )
    x = result.x.reshape(shape)
    value = fun_grad(x)[0]
    if value > initial:
        x, value = np.asarray(x0, dtype=np.float64), initial
    return MinimizeResult(x=x, value=value, initial_value=initial, iterations=int(result.nit))


def warm_start(previous: np.ndarray | None, shape: tuple[int, ...]) -> np.ndarray:
    """Shift the previous window's Delta one frame back in time; the new slot copies its neighbour."""
    if previous is None or previous.shape != shape:
        return np.zeros(shape)
    shifted = np.empty_like(previous)
    shifted[:, :-1] = previous[:, 1:]
    shifted[:, -1] = previous[:, -1]
    return shifted


def smooth_window(
    window: TrajectoryWindow,
    weights: SmoothingWeights,
    opt: OptimizerConfig,
    *,
    objective: ObjectiveConfig | None = None,
    mode: StitchMode = StitchMode.ONLINE,
    initial: np.ndarray | None = None,
    centers: list[int] | None = None,
) -> SmoothingResult:
    problem = SmoothingObjective(window, weights, objective or ObjectiveConfig(), mode, centers)
    x0 = initial if initial is not None else np.zeros_like(window.trajectories)

    def fun_grad(delta: np.ndarray) -> tuple[float, np.ndarray]:
        value, grad, _ = problem.value_and_grad(delta)
        return value, grad

    solver = minimize_lbfgs if opt.method == "lbfgs" else minimize_adam
    result = solver(fun_grad, x0, opt)
    _, breakdown = problem.evaluate(result.x)
    logger.bind(
        service_name=SERVICE_NAME,
        event="window_optimized",
        xi=window.xi,
        iterations=result.iterations,
        initial_loss=round(result.initial_value, 6),
        final_loss=round(result.value, 6),
    ).debug("")
    return SmoothingResult(
        increment=SmoothingIncrement(result.x),
        breakdown=breakdown,
        initial_value=result.initial_value,
        iterations=result.iterations,
    )
