"""Pricing with g-expectations on recombining lattices."""

from .core import LatticeModel, Payoff, TimeGrid, build_time_grid
from .drivers import (
    make_abs_z,
    make_black_scholes,
    make_borrowing,
    make_constant,
    make_discount,
    make_gmu,
    make_short_premium,
    make_zero,
    parse_driver_config,
)
from .errors import ConvergenceError, CourantError, GPricingError, ValidationError
from .solver import SolverConfig, g_expectation, price, solve_bsde

__all__ = [
    "ConvergenceError",
    "CourantError",
    "GPricingError",
    "LatticeModel",
    "Payoff",
    "SolverConfig",
    "TimeGrid",
    "ValidationError",
    "build_time_grid",
    "g_expectation",
    "make_abs_z",
    "make_black_scholes",
    "make_borrowing",
    "make_constant",
    "make_discount",
    "make_gmu",
    "make_short_premium",
    "make_zero",
    "parse_driver_config",
    "price",
    "solve_bsde",
]
