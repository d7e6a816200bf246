"""Recovering a generating function from the prices of a black-box mechanism.

Two routes are offered: the toy-model formula for ``g = g(z)``, which prices
the claim ``zbar . (B_T - B_t)`` and divides by the horizon, and the
short-horizon representation limit, which prices ``y + p . (X_{t+eps} - x)``
for a ladder of ``eps`` and extrapolates the difference quotient to zero.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from .core import ARITHMETIC, Driver, LatticeModel, Payoff, TimeGrid
from .errors import ValidationError
from .solver import DEFAULT_CONFIG, SolverConfig, min_steps_for_courant, solve_bsde

TOY_MODEL_CAVEAT = "valid only under g=g(z) hypothesis"


@dataclass(frozen=True)
class MechanismHandle:
    """A dynamic pricing mechanism seen only through its prices.

    ``price(t, T, payoff)`` returns the time-``t`` price of a payoff maturing
    at ``T``; Brownian values seen by the payoff are measured from time ``t``.
    ``dt`` is the finest time resolution the mechanism resolves.
    """

    price: Callable[[float, float, Payoff], float]
    d: int = 1
    dt: float = 1.0 / 512
    label: str = "mechanism"
    y_dependent: bool | None = None


def mechanism_from_driver(
    driver: Driver,
    dt: float = 1.0 / 512,
    *,
    s0: float = 0.0,
    vol: float = 1.0,
    drift: float = 0.0,
    cfg: SolverConfig = DEFAULT_CONFIG,
) -> MechanismHandle:
    """Wrap the lattice g-expectation of ``driver`` as a black box.

    The underlying is the arithmetic lattice ``s0 + drift*t + vol*W``; the
    step count is the nearest to ``(T - t) / dt``, raised if the contraction
    cap demands it.
    """
    if not dt > 0:
        raise ValidationError("mechanism resolution dt must be positive")

    def price(t: float, T: float, payoff: Payoff) -> float:
        if T <= t:
            if T == t:
                raise ValidationError("price needs T > t; at T == t the price is the payoff itself")
            raise ValidationError(f"degenerate span [{t}, {T}]")
        span = T - t
        n = max(1, round(span / dt), min_steps_for_courant(driver.mu, span, cfg.courant_cap))
        model = LatticeModel.create(TimeGrid(t, T, n), s0, vol, drift, d=driver.dim_z, mapping=ARITHMETIC)
        return solve_bsde(model, driver, payoff, cfg).root_price

    return MechanismHandle(price, driver.dim_z, dt, f"E^{driver.name}", driver.depends_on_y)


@dataclass(frozen=True)
class RecoverySample:
    zbar: tuple[float, ...]
    t: float
    T: float
    estimate: float
    residual: float
    caveat: str = ""

    def __post_init__(self) -> None:
        if not self.T > self.t:
            raise ValidationError("recovery sample needs T > t")


def _zvec(zbar: float | Sequence[float], d: int) -> tuple[float, ...]:
    z = (float(zbar),) if np.ndim(zbar) == 0 else tuple(float(v) for v in zbar)
    if len(z) != d:
        raise ValidationError(f"zbar has {len(z)} components, mechanism has d={d}")
    return z


def recover_g_of_z(mech: MechanismHandle, zbar: float | Sequence[float], t: float, T: float) -> float:
    """``g(zbar) = E_{t,T}[zbar . (B_T - B_t)] / (T - t)``."""
    if not T > t:
        raise ValidationError(f"degenerate span [{t}, {T}]")
    z = _zvec(zbar, mech.d)
    return mech.price(t, T, Payoff.linear_in_b(z, T)) / (T - t)


def recover_sample(mech: MechanismHandle, zbar, t: float, T: float) -> RecoverySample:
    """Toy-model estimate plus its drift between the full and the half horizon.

    For a mechanism that really is ``g(z)`` the two horizons agree exactly, so
    ``residual`` flags time or ``y`` dependence.
    """
    z = _zvec(zbar, mech.d)
    est = recover_g_of_z(mech, z, t, T)
    half = recover_g_of_z(mech, z, t, t + 0.5 * (T - t)) if (T - t) / 2 >= mech.dt else est
    caveat = TOY_MODEL_CAVEAT if mech.y_dependent in (True, None) else ""
    return RecoverySample(z, t, T, est, abs(est - half), caveat)


def recover_surface(
    mech: MechanismHandle, z_grid: Sequence[float | Sequence[float]], t: float, T: float
) -> list[RecoverySample]:
    return [recover_sample(mech, z, t, T) for z in z_grid]


def surface_to_text(samples: Sequence[RecoverySample], sep: str = ",") -> str:
    if not samples:
        return ""
    d = len(samples[0].zbar)
    head = sep.join([f"z{k}" for k in range(d)] + ["estimate", "residual", "caveat"])
    rows = [
        sep.join([f"{v:.10g}" for v in s.zbar] + [f"{s.estimate:.12g}", f"{s.residual:.3e}", s.caveat])
        for s in samples
    ]
    return "\n".join([head, *rows]) + "\n"


@dataclass(frozen=True)
class RepresentationEstimate:
    estimate: float
    eps: tuple[float, ...]
    slopes: tuple[float, ...]


def default_eps_ladder(horizon: float = 1.0) -> tuple[float, ...]:
    return tuple(horizon * 2.0**-k for k in range(3, 8))


def recover_by_representation(
    mech: MechanismHandle,
    x: float | Sequence[float],
    y: float,
    p: float | Sequence[float],
    b_fn: Callable[[np.ndarray], np.ndarray],
    sigma_fn: Callable[[np.ndarray], np.ndarray],
    eps_ladder: Sequence[float] | None = None,
    t: float = 0.0,
) -> RepresentationEstimate:
    """Estimate ``g(t, y, sigma(x)^T p) + p . b(x)`` from short-horizon prices.

    For each ``eps`` the mechanism prices ``y + p . (X_{t+eps} - x)`` where
    ``X`` is the underlying with coefficients frozen at ``x``:
    ``X_{t+eps} - x = b(x) eps + sigma(x) (B_{t+eps} - B_t)``. The difference
    quotients are extrapolated to ``eps = 0`` by a least-squares line.
    """
    ladder = tuple(float(e) for e in (eps_ladder if eps_ladder is not None else default_eps_ladder()))
    if len(ladder) < 2:
        raise ValidationError("eps ladder needs at least two entries")
    if any(b >= a for a, b in zip(ladder, ladder[1:])):
        raise ValidationError("eps ladder must be strictly decreasing")
    usable = sum(e >= 2 * mech.dt for e in ladder)
    if usable < len(ladder):
        raise ValidationError(
            f"eps ladder too fine for mechanism resolution dt={mech.dt:g}: "
            f"only the first {usable} entries satisfy eps >= 2*dt"
        )
    xv = np.atleast_1d(np.asarray(x, dtype=float))
    pv = np.atleast_1d(np.asarray(p, dtype=float))
    bx = np.atleast_1d(np.asarray(b_fn(xv), dtype=float))
    sx = np.asarray(sigma_fn(xv), dtype=float).reshape(xv.size, mech.d)
    if pv.shape != xv.shape or bx.shape != xv.shape:
        raise ValidationError("x, p and b(x) must have the same length")
    slopes = []
    for eps in ladder:
        T = t + eps

        def fn(state, eps=eps):
            dw = state.w  # measured from time t
            return y + (bx @ pv) * eps + dw @ (sx.T @ pv)

        val = mech.price(t, T, Payoff.custom(fn, T, "y+p.(X-x)"))
        slopes.append((val - y) / eps)
    coef = np.polyfit(np.asarray(ladder), np.asarray(slopes), 1)
    return RepresentationEstimate(float(coef[1]), ladder, tuple(float(s) for s in slopes))


def representation_target(driver: Driver, t: float, y: float, p, b_x, sigma_x) -> float:
    """Exact right-hand side ``g(t, y, sigma^T p) + p . b`` for a known driver."""
    pv = np.atleast_1d(np.asarray(p, dtype=float))
    sx = np.asarray(sigma_x, dtype=float).reshape(pv.size, driver.dim_z)
    return float(driver.eval(t, y, sx.T @ pv)) + float(pv @ np.atleast_1d(b_x))

