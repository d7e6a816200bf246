"""Explicit finite differences for the semilinear pricing PDE

    u_t + 1/2 L(s)^2 u_ss + b(s) u_s + f(t, s, u, L(s) u_s) = 0,  u(T, s) = Phi(s),

plus the Black-Scholes closed form used as an oracle.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .core import GEOMETRIC, Driver, LatticeModel, Payoff, TerminalState
from .errors import ValidationError
from .solver import DEFAULT_CONFIG, SolverConfig, solve_bsde

PdeDriver = Callable[[float, np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def black_scholes_closed_form(s0: float, K: float, r: float, sigma: float, T: float, call_or_put: str = "call") -> float:
    """Lognormal price of a European call or put (put by parity)."""
    if not sigma > 0:
        raise ValidationError("sigma must be positive")
    if not T > 0:
        raise ValidationError("T must be positive")
    if call_or_put not in ("call", "put"):
        raise ValidationError(f"call_or_put must be 'call' or 'put', got {call_or_put!r}")
    disc_k = K * math.exp(-r * T)
    if K <= 0:
        call = s0 - disc_k
    else:
        vsq = sigma * math.sqrt(T)
        d1 = (math.log(s0 / K) + (r + 0.5 * sigma**2) * T) / vsq
        call = s0 * float(ndtr(d1)) - disc_k * float(ndtr(d1 - vsq))
    return call if call_or_put == "call" else call - s0 + disc_k


@dataclass(frozen=True)
class PdeGrid:
    """Uniform ``(t, s)`` grid; ``n_t=None`` picks the smallest stable count."""

    s_min: float
    s_max: float
    m: int
    T: float
    terminal: Callable[[np.ndarray], np.ndarray]
    n_t: int | None = None
    t0: float = 0.0

    def __post_init__(self) -> None:
        if not self.s_min < self.s_max:
            raise ValidationError("need s_min < s_max")
        if self.m < 2:
            raise ValidationError("need at least 2 space steps")
        if self.n_t is not None and self.n_t < 2:
            raise ValidationError("need at least 2 time steps")
        if not self.T > self.t0:
            raise ValidationError("need T > t0")

    @property
    def s(self) -> np.ndarray:
        return np.linspace(self.s_min, self.s_max, self.m + 1)

    @property
    def ds(self) -> float:
        return (self.s_max - self.s_min) / self.m


@dataclass(frozen=True)
class PdeSolution:
    s: np.ndarray
    t: np.ndarray
    u: np.ndarray  # shape (n_t + 1, m + 1), u[k] at time t[k]

    def at(self, s0: float, k: int = 0) -> float:
        return float(np.interp(s0, self.s, self.u[k]))

    def to_text(self, sep: str = ",", every: int = 1) -> str:
        rows = [sep.join(["t"] + [f"{v:.6g}" for v in self.s])]
        for k in range(0, len(self.t), every):
            rows.append(sep.join([f"{self.t[k]:.8g}"] + [f"{v:.10g}" for v in self.u[k]]))
        return "\n".join(rows) + "\n"


def stable_time_steps(grid: PdeGrid, diffusion_max: float, drift_max: float, lip_f: float) -> int:
    """Smallest ``n_t`` with ``dt <= ds^2 / (L_max^2 + |b|_max ds + Lip_f ds^2)``."""
    ds = grid.ds
    dt_max = ds**2 / (diffusion_max**2 + drift_max * ds + lip_f * ds**2)
    return max(2, math.ceil((grid.T - grid.t0) / dt_max))


def solve_feynman_kac(
    f: PdeDriver,
    sigma_fn: Callable[[np.ndarray], np.ndarray],
    b_fn: Callable[[np.ndarray], np.ndarray],
    grid: PdeGrid,
    lip_f: float = 0.0,
    keep: int | None = None,
) -> PdeSolution:
    """March the PDE backward from ``grid.terminal`` with explicit Euler.

    ``f(t, s, u, v)`` receives ``v = L(s) u_s``. Boundary nodes are held at
    the terminal values. ``keep`` thins the stored time levels (every
    ``keep``-th level plus ``t0``); by default roughly 200 levels are kept.
    """
    s = grid.s
    ds = grid.ds
    diff = np.asarray(sigma_fn(s), dtype=float) * np.ones_like(s)
    drift = np.asarray(b_fn(s), dtype=float) * np.ones_like(s)
    n_min = stable_time_steps(grid, float(np.max(np.abs(diff))), float(np.max(np.abs(drift))), lip_f)
    n_t = grid.n_t if grid.n_t is not None else n_min
    if n_t < n_min:
        raise ValidationError(f"explicit scheme unstable with n_t={n_t}; need at least n_t={n_min}")
    dt = (grid.T - grid.t0) / n_t
    keep = keep or max(1, n_t // 200)

    u = np.asarray(grid.terminal(s), dtype=float).copy()
    if u.shape != s.shape or not np.all(np.isfinite(u)):
        raise ValidationError("terminal condition must be finite on the grid")
    left, right = u[0], u[-1]
    a = 0.5 * diff[1:-1] ** 2 / ds**2
    c = drift[1:-1] / (2 * ds)
    lam = diff[1:-1] / (2 * ds)
    si = s[1:-1]
    levels = [u.copy()]
    times = [grid.T]
    for k in range(n_t - 1, -1, -1):
        t = grid.t0 + (k + 1) * dt
        up, mid, dn = u[2:], u[1:-1], u[:-2]
        us_x2 = up - dn
        lu = a * (up - 2 * mid + dn) + c * us_x2
        new = mid + dt * (lu + f(t, si, mid, lam * us_x2))
        u = np.concatenate(([left], new, [right]))
        if k % keep == 0:
            levels.append(u.copy())
            times.append(grid.t0 + k * dt)
    return PdeSolution(s, np.asarray(times[::-1]), np.asarray(levels[::-1]))


def terminal_function(payoff: Payoff, model: LatticeModel) -> Callable[[np.ndarray], np.ndarray]:
    """``Phi(s)`` for a path-independent payoff on a one-dimensional lattice.

    The Brownian value is recovered from ``s`` by inverting the underlying
    mapping, so ``linear_in_B`` payoffs translate too.
    """
    if model.d != 1:
        raise ValidationError("PDE cross-check supports d = 1 only")
    s0, vol, b = model.s0[0], model.vol[0], model.drift[0]
    T = model.grid.T - model.grid.t0

    def phi(s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if model.mapping == GEOMETRIC:
            w = (np.log(np.maximum(s, 1e-300) / s0) - (b - 0.5 * vol**2) * T) / vol
        else:
            w = (s - s0 - b * T) / vol
        st = TerminalState(s[:, None], w[:, None] + model.w0[0], np.zeros((s.size, 1), dtype=int))
        return payoff.evaluate(st)

    return phi


def driver_as_pde(driver: Driver) -> PdeDriver:
    def f(t, s, u, v):
        return driver.eval(t, u, v)

    return f


@dataclass(frozen=True)
class CrossCheck:
    lattice_price: float
    pde_price: float
    tolerance: float
    pde: PdeSolution

    @property
    def gap(self) -> float:
        return abs(self.lattice_price - self.pde_price)

    @property
    def passed(self) -> bool:
        return self.gap <= self.tolerance

    def to_text(self) -> str:
        return (
            "lattice_price,pde_price,gap,tolerance,status\n"
            f"{self.lattice_price:.10g},{self.pde_price:.10g},{self.gap:.6e},{self.tolerance:g},"
            f"{'pass' if self.passed else 'fail'}\n"
        )


def cross_check(
    model: LatticeModel,
    driver: Driver,
    payoff: Payoff,
    m: int = 800,
    *,
    s_bounds: tuple[float, float] | None = None,
    n_t: int | None = None,
    tolerance: float = 0.05,
    cfg: SolverConfig = DEFAULT_CONFIG,
) -> CrossCheck:
    """Price ``payoff`` on the lattice and by the PDE, and compare at ``s0``.

    The PDE coefficients match the lattice: ``L(s) = vol*s, b(s) = drift*s``
    for the geometric mapping, constants for the arithmetic one.
    """
    if model.d != 1:
        raise ValidationError("cross-check supports d = 1 only")
    s0, vol, b = model.s0[0], model.vol[0], model.drift[0]
    if model.mapping == GEOMETRIC:
        lo, hi = s_bounds or (s0 / 5, 5 * s0)

        def sigma_fn(s):
            return vol * s

        def b_fn(s):
            return b * s
    else:
        span = 8 * abs(vol) * math.sqrt(model.grid.T - model.grid.t0) + abs(b) * (model.grid.T - model.grid.t0)
        lo, hi = s_bounds or (s0 - span, s0 + span)

        def sigma_fn(s):
            return vol + 0 * s

        def b_fn(s):
            return b + 0 * s

    grid = PdeGrid(lo, hi, m, model.grid.T, terminal_function(payoff, model), n_t, model.grid.t0)
    sol = solve_feynman_kac(driver_as_pde(driver), sigma_fn, b_fn, grid, lip_f=driver.mu)
    lat = solve_bsde(model, driver, payoff, cfg).root_price
    return CrossCheck(lat, sol.at(s0), tolerance, sol)
