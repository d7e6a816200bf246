"""Backward induction for the discrete BSDE on a recombining lattice.

Per step the conditional mean over the ``2**d`` children gives
``E[y_next]``, the martingale-representation coefficient is
``z_k = E[y_next * eps_k] / dt`` and ``y`` solves

    y = E[y_next] + g(t_i, y, z) * dt          (implicit, Picard)
    y = E[y_next] + g(t_i, E[y_next], z) * dt  (explicit)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import BsdeSolution, Driver, LatticeModel, Payoff, child_offsets
from .errors import ConvergenceError, CourantError, ValidationError

IMPLICIT = "implicit"
EXPLICIT = "explicit"


@dataclass(frozen=True, slots=True)
class SolverConfig:
    scheme: str = IMPLICIT
    picard_tol: float = 1e-12
    picard_max_iter: int = 100
    courant_cap: float = 0.5

    def __post_init__(self) -> None:
        if self.scheme not in (IMPLICIT, EXPLICIT):
            raise ValidationError(f"unknown scheme {self.scheme!r}")
        if not self.picard_tol > 0:
            raise ValidationError("picard_tol must be positive")
        if not 0 < self.courant_cap < 1:
            raise ValidationError("courant_cap must lie in (0, 1)")
        if self.picard_max_iter < 1:
            raise ValidationError("picard_max_iter must be at least 1")


DEFAULT_CONFIG = SolverConfig()


def min_steps_for_courant(mu: float, span: float, cap: float = 0.5) -> int:
    """Smallest ``n`` with ``mu * span / n <= cap``."""
    if mu <= 0:
        return 1
    n = max(1, math.ceil(mu * span / cap))
    # guard against ceil landing one short through rounding
    while mu * (span / n) > cap:
        n += 1
    return n


def min_steps_for_monotone(mu: float, span: float, d: int = 1) -> int:
    """Smallest ``n`` making the lattice scheme monotone for a ``mu``-Lipschitz driver.

    The z-estimator feeds ``+-1/(2**d sqrt(dt))`` of each child into every
    ``z_k``, so the child weight stays non-negative iff ``d * mu * sqrt(dt) <= 1``.
    Only then does the discrete comparison theorem hold for z-dependent drivers.
    """
    if mu <= 0:
        return 1
    n = max(1, math.ceil(span * (d * mu) ** 2))
    while d * mu * math.sqrt(span / n) > 1:
        n += 1
    return n


def is_monotone(model: LatticeModel, mu: float) -> bool:
    return model.d * mu * model.sqrt_dt <= 1 + 1e-12


def _check_courant(model: LatticeModel, driver: Driver, cfg: SolverConfig) -> None:
    dt = model.grid.dt
    if driver.mu * dt > cfg.courant_cap * (1 + 1e-12):
        n_min = min_steps_for_courant(driver.mu, model.grid.T - model.grid.t0, cfg.courant_cap)
        raise CourantError(
            f"mu*dt = {driver.mu * dt:.4g} exceeds courant_cap {cfg.courant_cap}; "
            f"use at least n={n_min} steps",
            n_min,
        )


def implicit_step(
    expected_next,
    z,
    t: float,
    driver: Driver,
    dt: float,
    cfg: SolverConfig = DEFAULT_CONFIG,
):
    """Solve ``y = expected_next + g(t, y, z) dt`` by Picard iteration.

    Works node-wise on arrays (``z`` carries a trailing axis of length d) or
    on scalars. Returns ``(y, iterations)``.
    """
    if driver.mu * dt >= 1:
        raise ValidationError(f"mu*dt = {driver.mu * dt:.4g} >= 1: no contraction")
    e = np.asarray(expected_next, dtype=float)
    za = np.asarray(z, dtype=float)
    if za.ndim == e.ndim:
        za = za[..., None]
    y = e
    residual = math.inf
    for it in range(1, cfg.picard_max_iter + 1):
        y_new = e + driver.fn(t, y, za) * dt
        diff = np.abs(y_new - y)
        y = y_new
        # scale by magnitude so large prices can reach the tolerance in float64
        residual = float(np.max(diff / np.maximum(1.0, np.abs(y)))) if diff.size else 0.0
        if residual <= cfg.picard_tol:
            break
    else:
        raise ConvergenceError(
            f"Picard iteration did not converge in {cfg.picard_max_iter} iterations "
            f"(residual {residual:.3e})",
            residual,
        )
    return (float(y) if y.ndim == 0 else y), it


def conditional_moments(y_next: np.ndarray, d: int, sqrt_dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Children average and z estimate for every node one step back."""
    m = y_next.shape[0] - 1
    mean = np.zeros((m,) * d)
    z = np.zeros((m,) * d + (d,))
    scale = 2.0**d
    for off in child_offsets(d):
        child = y_next[tuple(slice(o, o + m) for o in off)]
        mean += child
        for k, o in enumerate(off):
            if o:
                z[..., k] += child
            else:
                z[..., k] -= child
    return mean / scale, z / (scale * sqrt_dt)


def solve_bsde(
    model: LatticeModel,
    driver: Driver,
    payoff: Payoff,
    cfg: SolverConfig = DEFAULT_CONFIG,
    *,
    stop_step: int = 0,
) -> BsdeSolution:
    """Solve the lattice BSDE backward from ``payoff`` at maturity.

    ``stop_step`` ends the induction early; fields before it are left empty.
    """
    if driver.dim_z != model.d:
        raise ValidationError(f"driver dim_z={driver.dim_z} but lattice has d={model.d}")
    if not math.isclose(payoff.maturity, model.grid.T, rel_tol=0, abs_tol=1e-12):
        raise ValidationError(f"payoff maturity {payoff.maturity} != lattice T {model.grid.T}")
    _check_courant(model, driver, cfg)
    n, d = model.n, model.d
    dt = model.grid.dt
    sqrt_dt = model.sqrt_dt
    terminal = payoff.evaluate(model.terminal_state())

    ys: list[np.ndarray] = [np.empty(0)] * (n + 1)
    zs: list[np.ndarray] = [np.empty(0)] * n
    iters = [0] * n
    ys[n] = terminal
    y = terminal
    for i in range(n - 1, stop_step - 1, -1):
        t = model.grid.time(i)
        mean, z = conditional_moments(y, d, sqrt_dt)
        if cfg.scheme == IMPLICIT:
            y, iters[i] = implicit_step(mean, z, t, driver, dt, cfg)
        else:
            y = mean + driver.fn(t, mean, z) * dt
            iters[i] = 0
        ys[i] = y
        zs[i] = z
    return BsdeSolution(tuple(ys), tuple(zs), tuple(iters), cfg.scheme, model)


def g_expectation(
    model: LatticeModel,
    driver: Driver,
    payoff: Payoff,
    t_index: int,
    cfg: SolverConfig = DEFAULT_CONFIG,
) -> np.ndarray:
    """Conditional price ``E^g_{t_i,T}[X]`` as a field over step-``t_index`` nodes."""
    if not 0 <= t_index <= model.n:
        raise ValidationError(f"t_index {t_index} outside 0..{model.n}")
    return solve_bsde(model, driver, payoff, cfg, stop_step=t_index).y[t_index]


def price(model: LatticeModel, driver: Driver, payoff: Payoff, cfg: SolverConfig = DEFAULT_CONFIG) -> float:
    return solve_bsde(model, driver, payoff, cfg).root_price
