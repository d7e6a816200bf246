"""Domain types: time grids, recombining Bernoulli lattices, drivers, payoffs
and BSDE solutions.

All types are immutable after construction. Lattice nodes at step ``i`` are
indexed by the vector of up-move counts, so a field over step ``i`` is an
ndarray of shape ``(i + 1,) * d``; vector-valued fields carry a trailing axis
of length ``d``.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np

from .errors import ValidationError

MAX_DIM = 3

GEOMETRIC = "geometric"
ARITHMETIC = "arithmetic"


@dataclass(frozen=True, slots=True)
class TimeGrid:
    t0: float
    T: float
    n: int

    def __post_init__(self) -> None:
        if not (math.isfinite(self.t0) and math.isfinite(self.T)):
            raise ValidationError("time grid bounds must be finite")
        if self.T <= self.t0:
            raise ValidationError(f"empty time span: T={self.T} <= t0={self.t0}")
        if int(self.n) != self.n or self.n < 1:
            raise ValidationError(f"step count must be a positive integer, got {self.n}")

    @property
    def dt(self) -> float:
        return (self.T - self.t0) / self.n

    def time(self, i: int) -> float:
        if i == self.n:
            return self.T
        return self.t0 + i * self.dt

    @property
    def times(self) -> np.ndarray:
        ts = self.t0 + self.dt * np.arange(self.n + 1)
        ts[-1] = self.T
        return ts


def build_time_grid(t0: float, T: float, n: int) -> TimeGrid:
    """Grid of ``n`` equal steps on ``[t0, T]``."""
    return TimeGrid(float(t0), float(T), n)


@dataclass(frozen=True, slots=True)
class TerminalState:
    """Node-wise state handed to payoffs: prices, Brownian values, up counts.

    Each array has shape ``nodes + (d,)``.
    """

    s: np.ndarray
    w: np.ndarray
    up: np.ndarray

    @property
    def shape(self) -> tuple[int, ...]:
        return self.s.shape[:-1]


def _as_tuple(x: float | Sequence[float], d: int, name: str) -> tuple[float, ...]:
    if np.ndim(x) == 0:
        return (float(x),) * d
    out = tuple(float(v) for v in x)
    if len(out) != d:
        raise ValidationError(f"{name} has length {len(out)}, expected {d}")
    return out


@dataclass(frozen=True)
class LatticeModel:
    """Recombining ``d``-dimensional symmetric Bernoulli lattice.

    Each Brownian coordinate moves by ``+-sqrt(dt)`` with probability 1/2 per
    step. ``w0`` offsets the Brownian value so that a sub-lattice rooted at an
    interior node reports the same absolute ``W`` as the parent lattice; the
    underlying mapping always uses the increment ``W - w0``.
    """

    grid: TimeGrid
    s0: tuple[float, ...]
    vol: tuple[float, ...]
    drift: tuple[float, ...]
    mapping: str = GEOMETRIC
    w0: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        d = len(self.s0)
        if not 1 <= d <= MAX_DIM:
            raise ValidationError(f"Brownian dimension must be in 1..{MAX_DIM}, got {d}")
        if len(self.vol) != d or len(self.drift) != d:
            raise ValidationError("s0, vol and drift must have the same length")
        if self.mapping not in (GEOMETRIC, ARITHMETIC):
            raise ValidationError(f"unknown underlying mapping {self.mapping!r}")
        if self.mapping == GEOMETRIC and any(s <= 0 for s in self.s0):
            raise ValidationError("geometric mapping needs strictly positive s0")
        if not self.w0:
            object.__setattr__(self, "w0", (0.0,) * d)
        elif len(self.w0) != d:
            raise ValidationError("w0 must have length d")
        vals = self.s0 + self.vol + self.drift + self.w0
        if not all(math.isfinite(v) for v in vals):
            raise ValidationError("lattice parameters must be finite")

    @classmethod
    def create(
        cls,
        grid: TimeGrid,
        s0: float | Sequence[float] = 100.0,
        vol: float | Sequence[float] = 0.2,
        drift: float | Sequence[float] = 0.0,
        *,
        d: int | None = None,
        mapping: str = GEOMETRIC,
        w0: Sequence[float] = (),
    ) -> LatticeModel:
        if d is None:
            d = next((len(x) for x in (s0, vol, drift) if np.ndim(x) == 1), 1)
        return cls(
            grid,
            _as_tuple(s0, d, "s0"),
            _as_tuple(vol, d, "vol"),
            _as_tuple(drift, d, "drift"),
            mapping,
            tuple(float(v) for v in w0),
        )

    @property
    def d(self) -> int:
        return len(self.s0)

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def sqrt_dt(self) -> float:
        return math.sqrt(self.grid.dt)

    def node_count(self, step: int) -> int:
        return (step + 1) ** self.d

    def up_counts(self, step: int) -> np.ndarray:
        """Up-move counts at every step-``step`` node, shape ``nodes + (d,)``."""
        axes = np.meshgrid(*([np.arange(step + 1)] * self.d), indexing="ij")
        return np.stack(axes, axis=-1)

    def brownian(self, step: int) -> np.ndarray:
        up = self.up_counts(step)
        return np.asarray(self.w0) + (2 * up - step) * self.sqrt_dt

    def underlying(self, step: int) -> np.ndarray:
        return self._map(self.grid.time(step) - self.grid.t0, self.brownian(step) - np.asarray(self.w0))

    def _map(self, elapsed: float, dw: np.ndarray) -> np.ndarray:
        s0 = np.asarray(self.s0)
        vol = np.asarray(self.vol)
        b = np.asarray(self.drift)
        if self.mapping == GEOMETRIC:
            return s0 * np.exp((b - 0.5 * vol**2) * elapsed + vol * dw)
        return s0 + b * elapsed + vol * dw

    def state(self, step: int) -> TerminalState:
        return TerminalState(self.underlying(step), self.brownian(step), self.up_counts(step))

    def terminal_state(self) -> TerminalState:
        return self.state(self.n)

    def node_weights(self, step: int) -> np.ndarray:
        """Probability of each step-``step`` node under the uniform path measure."""
        w1 = np.array([math.comb(step, k) for k in range(step + 1)], dtype=float) / 2.0**step
        out = w1
        for _ in range(self.d - 1):
            out = np.multiply.outer(out, w1)
        return out

    def with_grid(self, grid: TimeGrid) -> LatticeModel:
        return LatticeModel(grid, self.s0, self.vol, self.drift, self.mapping, self.w0)

    def truncated(self, step: int) -> LatticeModel:
        """The same lattice cut off at ``step`` (same dt, same origin)."""
        if not 1 <= step <= self.n:
            raise ValidationError(f"truncation step must be in 1..{self.n}")
        return self.with_grid(TimeGrid(self.grid.t0, self.grid.time(step), step))

    def subtree(self, step: int, up: Sequence[int]) -> LatticeModel:
        """Lattice rooted at node ``(step, up)`` running to the same maturity."""
        if step >= self.n:
            raise ValidationError("subtree root must precede maturity")
        up = tuple(int(u) for u in up)
        w = node_brownian_value(self, step, up)
        s = self.underlying(step)[up]
        grid = TimeGrid(self.grid.time(step), self.grid.T, self.n - step)
        return LatticeModel(grid, tuple(s), self.vol, self.drift, self.mapping, tuple(w))


def node_brownian_value(model: LatticeModel, step: int, up_counts: Sequence[int]) -> np.ndarray:
    """Brownian value ``W_k = w0_k + (2 u_k - step) sqrt(dt)`` at one node."""
    up = np.asarray(up_counts, dtype=int).reshape(-1)
    if up.size != model.d:
        raise ValidationError(f"expected {model.d} up counts, got {up.size}")
    if not 0 <= step <= model.n:
        raise ValidationError(f"step {step} outside 0..{model.n}")
    if np.any(up < 0) or np.any(up > step):
        raise ValidationError(f"up counts {tuple(up)} out of range for step {step}")
    return np.asarray(model.w0) + (2 * up - step) * model.sqrt_dt


DriverFn = Callable[[float, np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Driver:
    """Generating function ``g(t, y, z)`` with declared Lipschitz constant.

    ``fn`` must be vectorised: ``y`` has any shape ``S`` and ``z`` has shape
    ``S + (dim_z,)``; the result has shape ``S``. ``traits`` declares
    structural properties (``zero_at_origin``, ``zero_at_z0``, ``convex``,
    ``concave``, ``homogeneous``, ``subadditive``, ``linear``) used to decide
    which mechanism checks apply. ``ignored_z`` lists z-components the
    driver does not depend on.
    """

    name: str
    dim_z: int
    mu: float
    depends_on_y: bool
    fn: DriverFn = field(repr=False)
    parameters: Mapping[str, float] = field(default_factory=dict)
    traits: frozenset[str] = frozenset()
    ignored_z: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.dim_z < 1:
            raise ValidationError("dim_z must be positive")
        if not (math.isfinite(self.mu) and self.mu >= 0):
            raise ValidationError(f"Lipschitz constant must be finite and >= 0, got {self.mu}")
        object.__setattr__(self, "parameters", MappingProxyType(dict(self.parameters)))
        object.__setattr__(self, "traits", frozenset(self.traits))

    def eval(self, t: float, y, z):
        """Evaluate ``g``; scalar ``y`` returns a float."""
        ya = np.asarray(y, dtype=float)
        za = np.asarray(z, dtype=float)
        if za.ndim == ya.ndim:
            za = za[..., None]
        if za.shape[-1] != self.dim_z:
            raise ValidationError(f"z has {za.shape[-1]} components, driver expects {self.dim_z}")
        out = np.asarray(self.fn(t, ya, za), dtype=float)
        if out.shape != ya.shape:
            out = np.broadcast_to(out, ya.shape).copy()
        return float(out) if out.ndim == 0 else out

    def has(self, trait: str) -> bool:
        return trait in self.traits


PayoffFn = Callable[[TerminalState], np.ndarray]

_OPTION_KINDS = ("call", "put", "short_call", "short_put")


@dataclass(frozen=True)
class Payoff:
    """Terminal functional of the lattice state at ``maturity``.

    Use the classmethod constructors; arithmetic between payoffs of the same
    maturity yields ``custom`` payoffs, which is how combined positions
    (spreads, scaled claims) are built.
    """

    kind: str
    maturity: float
    strike: float | None = None
    coeff: tuple[float, ...] | None = None
    value: float | None = None
    asset: int = 0
    fn: PayoffFn | None = field(default=None, repr=False)
    label: str = ""

    def __post_init__(self) -> None:
        if self.kind in _OPTION_KINDS and (self.strike is None or not math.isfinite(self.strike)):
            raise ValidationError(f"{self.kind} payoff needs a finite strike")

    @classmethod
    def call(cls, strike: float, maturity: float, asset: int = 0) -> Payoff:
        return cls("call", maturity, strike=float(strike), asset=asset)

    @classmethod
    def put(cls, strike: float, maturity: float, asset: int = 0) -> Payoff:
        return cls("put", maturity, strike=float(strike), asset=asset)

    @classmethod
    def short_call(cls, strike: float, maturity: float, asset: int = 0) -> Payoff:
        return cls("short_call", maturity, strike=float(strike), asset=asset)

    @classmethod
    def short_put(cls, strike: float, maturity: float, asset: int = 0) -> Payoff:
        return cls("short_put", maturity, strike=float(strike), asset=asset)

    @classmethod
    def linear_in_b(cls, coeff: float | Sequence[float], maturity: float) -> Payoff:
        c = (float(coeff),) if np.ndim(coeff) == 0 else tuple(float(v) for v in coeff)
        return cls("linear_in_B", maturity, coeff=c)

    @classmethod
    def constant(cls, c: float, maturity: float) -> Payoff:
        return cls("constant", maturity, value=float(c))

    @classmethod
    def custom(cls, fn: PayoffFn, maturity: float, label: str = "custom") -> Payoff:
        return cls("custom", maturity, fn=fn, label=label)

    @classmethod
    def from_field(cls, values: np.ndarray, maturity: float, label: str = "field") -> Payoff:
        """Payoff given directly as a terminal field (indexed by up counts)."""
        vals = np.array(values, dtype=float)
        vals.setflags(write=False)

        def fn(state: TerminalState) -> np.ndarray:
            if state.shape != vals.shape:
                raise ValidationError(f"field payoff has shape {vals.shape}, lattice has {state.shape}")
            return vals

        return cls.custom(fn, maturity, label)

    def evaluate(self, state: TerminalState) -> np.ndarray:
        k = self.strike
        if self.kind in _OPTION_KINDS:
            if self.asset >= state.s.shape[-1]:
                raise ValidationError(f"payoff asset {self.asset} not in lattice")
            s = state.s[..., self.asset]
            if self.kind == "call":
                out = np.maximum(s - k, 0.0)
            elif self.kind == "put":
                out = np.maximum(k - s, 0.0)
            elif self.kind == "short_call":
                out = -np.maximum(s - k, 0.0)
            else:
                out = -np.maximum(k - s, 0.0)
        elif self.kind == "linear_in_B":
            if len(self.coeff) != state.w.shape[-1]:
                raise ValidationError("linear_in_B coefficient length must equal d")
            out = state.w @ np.asarray(self.coeff)
        elif self.kind == "constant":
            out = np.full(state.shape, self.value)
        elif self.kind == "custom":
            out = np.broadcast_to(np.asarray(self.fn(state), dtype=float), state.shape)
        else:
            raise ValidationError(f"unknown payoff kind {self.kind!r}")
        out = np.asarray(out, dtype=float)
        if not np.all(np.isfinite(out)):
            raise ValidationError(f"payoff {self.describe()} is not finite at every terminal node")
        return out

    def describe(self) -> str:
        if self.kind in _OPTION_KINDS:
            return f"{self.kind}({self.strike:g})"
        if self.kind == "linear_in_B":
            return f"linear_in_B({', '.join(f'{c:g}' for c in self.coeff)})"
        if self.kind == "constant":
            return f"constant({self.value:g})"
        return self.label or "custom"

    def _check_same_maturity(self, other: Payoff) -> None:
        if not math.isclose(self.maturity, other.maturity, rel_tol=0, abs_tol=1e-12):
            raise ValidationError("cannot combine payoffs with different maturities")

    def __add__(self, other: Payoff | float) -> Payoff:
        if isinstance(other, Payoff):
            self._check_same_maturity(other)
            return Payoff.custom(
                lambda s: self.evaluate(s) + other.evaluate(s),
                self.maturity,
                f"({self.describe()} + {other.describe()})",
            )
        c = float(other)
        return Payoff.custom(lambda s: self.evaluate(s) + c, self.maturity, f"({self.describe()} + {c:g})")

    def __sub__(self, other: Payoff | float) -> Payoff:
        if isinstance(other, Payoff):
            self._check_same_maturity(other)
            return Payoff.custom(
                lambda s: self.evaluate(s) - other.evaluate(s),
                self.maturity,
                f"({self.describe()} - {other.describe()})",
            )
        return self + (-float(other))

    def __neg__(self) -> Payoff:
        return self.scaled(-1.0)

    def __mul__(self, lam: float) -> Payoff:
        return self.scaled(lam)

    __rmul__ = __mul__

    def scaled(self, lam: float) -> Payoff:
        lam = float(lam)
        return Payoff.custom(lambda s: lam * self.evaluate(s), self.maturity, f"{lam:g}*{self.describe()}")


@dataclass(frozen=True)
class BsdeSolution:
    """``(Y, Z)`` on every lattice node; ``y[i]`` is the step-``i`` field."""

    y: tuple[np.ndarray, ...]
    z: tuple[np.ndarray, ...]
    picard_iterations: tuple[int, ...]
    scheme: str
    model: LatticeModel = field(repr=False)

    @property
    def root_price(self) -> float:
        return float(self.y[0].reshape(-1)[0])

    def field_at(self, step: int) -> np.ndarray:
        return self.y[step]


def child_offsets(d: int) -> list[tuple[int, ...]]:
    """All ``2**d`` child offsets (one 0/1 move per dimension)."""
    return list(itertools.product((0, 1), repeat=d))
