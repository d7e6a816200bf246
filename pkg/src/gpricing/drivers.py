"""Built-in generating functions, a registry for custom ones, key=value
configuration parsing and a sampling Lipschitz estimator."""

from __future__ import annotations

import bisect
import math
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .core import Driver
from .errors import ValidationError

TRAITS_SUBLINEAR = frozenset({"zero_at_origin", "convex", "homogeneous", "subadditive"})


@dataclass(frozen=True)
class PiecewiseConstant:
    """Deterministic coefficient: ``values[k]`` on ``[breaks[k-1], breaks[k])``.

    ``len(values) == len(breaks) + 1``; the last value extends to infinity.
    """

    breaks: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.values) != len(self.breaks) + 1:
            raise ValidationError("piecewise table needs one more value than breakpoints")
        if list(self.breaks) != sorted(self.breaks):
            raise ValidationError("breakpoints must be increasing")
        if not all(math.isfinite(v) for v in self.values + self.breaks):
            raise ValidationError("piecewise table entries must be finite")

    def __call__(self, t: float) -> float:
        return self.values[bisect.bisect_right(self.breaks, t)]

    @property
    def bound(self) -> float:
        return max(abs(v) for v in self.values)


Coefficient = float | PiecewiseConstant


def _coef(c: Coefficient) -> Callable[[float], float]:
    if isinstance(c, PiecewiseConstant):
        return c
    c = float(c)
    if not math.isfinite(c):
        raise ValidationError("driver coefficients must be finite")
    return lambda t: c


def _segment_times(*coefs: Coefficient) -> list[float]:
    """One representative time per constant segment of all coefficients."""
    breaks = sorted({b for c in coefs if isinstance(c, PiecewiseConstant) for b in c.breaks})
    if not breaks:
        return [0.0]
    return [breaks[0] - 1.0] + breaks


def _sup(expr: Callable[..., float], *coefs: Coefficient) -> float:
    fns = [_coef(c) for c in coefs]
    return max(expr(*(f(t) for f in fns)) for t in _segment_times(*coefs))


def _params(**kw: Coefficient) -> dict[str, float]:
    # piecewise tables are reported by their first value
    return {k: (v.values[0] if isinstance(v, PiecewiseConstant) else float(v)) for k, v in kw.items()}


def _neg_part(x: np.ndarray) -> np.ndarray:
    return np.maximum(-x, 0.0)


def make_gmu(mu: float, dim_z: int = 1) -> Driver:
    """Dominating driver ``mu |y| + mu |z|_1``."""
    mu = float(mu)
    if not (math.isfinite(mu) and mu > 0):
        raise ValidationError(f"mu must be positive, got {mu}")

    def fn(t, y, z):
        return mu * np.abs(y) + mu * np.abs(z).sum(axis=-1)

    return Driver(
        "gmu",
        dim_z,
        mu,
        True,
        fn,
        {"mu": mu},
        TRAITS_SUBLINEAR | {"symmetric"},
    )


def make_abs_z(mu: float, dim_z: int = 1, components: Sequence[int] | None = None) -> Driver:
    """Toy-model driver ``mu * sum_{k in components} |z_k|``, independent of y."""
    mu = float(mu)
    if not (math.isfinite(mu) and mu >= 0):
        raise ValidationError(f"mu must be non-negative, got {mu}")
    comps = tuple(range(dim_z)) if components is None else tuple(sorted(set(components)))
    if not comps or any(not 0 <= c < dim_z for c in comps):
        raise ValidationError(f"components {comps} invalid for dim_z={dim_z}")
    idx = np.asarray(comps)

    def fn(t, y, z):
        return mu * np.abs(z[..., idx]).sum(axis=-1) + 0.0 * y

    ignored = tuple(k for k in range(dim_z) if k not in comps)
    return Driver(
        "abs_z",
        dim_z,
        mu,
        False,
        fn,
        {"mu": mu},
        TRAITS_SUBLINEAR | {"zero_at_z0", "symmetric"},
        ignored,
    )


def make_black_scholes(r: Coefficient, b: Coefficient, sigma: Coefficient) -> Driver:
    """Replication driver ``-r y - (b - r) z / sigma``."""
    if _sup(lambda s: float(s == 0), sigma):
        raise ValidationError("sigma must be non-zero")
    rf, bf, sf = _coef(r), _coef(b), _coef(sigma)

    def fn(t, y, z):
        rt, bt, st = rf(t), bf(t), sf(t)
        return -rt * y - (bt - rt) / st * z[..., 0]

    lip = _sup(lambda r_, b_, s_: abs(r_) + abs(b_ - r_) / abs(s_), r, b, sigma)
    traits = {"zero_at_origin", "linear", "convex", "concave", "homogeneous", "subadditive", "symmetric"}
    if _is_zero(r):
        traits.add("zero_at_z0")
    return Driver("black_scholes", 1, lip, not _is_zero(r), fn, _params(r=r, b=b, sigma=sigma), traits)


def _is_zero(c: Coefficient) -> bool:
    if isinstance(c, PiecewiseConstant):
        return all(v == 0 for v in c.values)
    return float(c) == 0


def make_borrowing(r: Coefficient, R: Coefficient, b: Coefficient, sigma: float) -> Driver:
    """Higher borrowing rate ``R > r``: adds ``(R - r)(y - z/sigma)^-``."""
    sigma = float(sigma)
    if sigma == 0:
        raise ValidationError("sigma must be non-zero")
    if _sup(lambda r_, R_: float(R_ <= r_), r, R):
        raise ValidationError("borrowing rate R must exceed lending rate r")
    rf, Rf, bf = _coef(r), _coef(R), _coef(b)

    def fn(t, y, z):
        rt, Rt, bt = rf(t), Rf(t), bf(t)
        zz = z[..., 0]
        return -rt * y - (bt - rt) / sigma * zz + (Rt - rt) * _neg_part(y - zz / sigma)

    # sup of |g_y| and of |g_z| over both branches of the negative part
    lip = _sup(
        lambda r_, R_, b_: max(abs(r_), abs(R_)) + max(abs(b_ - r_), abs(b_ - R_)) / abs(sigma), r, R, b
    )
    traits = {"zero_at_origin", "convex", "homogeneous", "subadditive"}
    return Driver("borrowing", 1, lip, True, fn, _params(r=r, R=R, b=b, sigma=sigma), traits)


def make_short_premium(r: Coefficient, b: Coefficient, sigma: float, k: Coefficient) -> Driver:
    """Short-sale premium driver ``-r y - (b - r) z / sigma + k z^-``."""
    sigma = float(sigma)
    if sigma == 0:
        raise ValidationError("sigma must be non-zero")
    if _sup(lambda k_: float(k_ < 0), k):
        raise ValidationError("premium k must be non-negative")
    rf, bf, kf = _coef(r), _coef(b), _coef(k)

    def fn(t, y, z):
        rt, bt = rf(t), bf(t)
        zz = z[..., 0]
        return -rt * y - (bt - rt) / sigma * zz + kf(t) * _neg_part(zz)

    lip = _sup(lambda r_, b_, k_: abs(r_) + max(abs(b_ - r_) / abs(sigma), abs((b_ - r_) / sigma + k_)), r, b, k)
    traits = {"zero_at_origin", "convex", "homogeneous", "subadditive"}
    if _is_zero(r):
        traits.add("zero_at_z0")
    return Driver("short_premium", 1, lip, not _is_zero(r), fn, _params(r=r, b=b, sigma=sigma, k=k), traits)


def make_discount(r: float, dim_z: int = 1) -> Driver:
    """Pure discounting ``-r y``."""
    r = float(r)

    def fn(t, y, z):
        return -r * y

    traits = {"zero_at_origin", "linear", "convex", "concave", "homogeneous", "subadditive", "symmetric"}
    return Driver("discount", dim_z, abs(r), r != 0, fn, {"r": r}, traits, tuple(range(dim_z)))


def make_constant(c: float, dim_z: int = 1) -> Driver:
    """``g == c``; violates self-financing unless ``c == 0``."""
    c = float(c)

    def fn(t, y, z):
        return np.full(np.shape(y), c)

    traits = {"convex", "concave", "subadditive"} if c >= 0 else {"convex", "concave"}
    if c == 0:
        traits |= {"zero_at_origin", "zero_at_z0", "linear", "homogeneous", "symmetric"}
    return Driver("constant", dim_z, 0.0, False, fn, {"c": c}, frozenset(traits), tuple(range(dim_z)))


def make_zero(dim_z: int = 1) -> Driver:
    """Classical (linear, zero-rate) expectation."""
    d = make_constant(0.0, dim_z)
    return Driver("zero", dim_z, 0.0, False, d.fn, {}, d.traits, d.ignored_z)


def register_driver(
    name: str,
    fn: Callable,
    mu: float,
    *,
    dim_z: int = 1,
    depends_on_y: bool = True,
    vectorized: bool = True,
    traits: frozenset[str] | set[str] = frozenset(),
    ignored_z: Sequence[int] = (),
    parameters: Mapping[str, float] | None = None,
) -> Driver:
    """Wrap a user evaluation map ``fn(t, y, z)`` into a :class:`Driver`.

    The declared ``mu`` is trusted; cross-check it with
    :func:`estimate_lipschitz`. With ``vectorized=False`` ``fn`` receives a
    float ``y`` and a length-``dim_z`` array ``z``.
    """
    if vectorized:
        call = fn
    else:

        def call(t, y, z):
            y = np.asarray(y, dtype=float)
            out = np.empty(y.shape)
            for idx in np.ndindex(y.shape):
                out[idx] = fn(t, float(y[idx]), np.asarray(z[idx], dtype=float))
            return out

    return Driver(name, dim_z, float(mu), depends_on_y, call, dict(parameters or {}), frozenset(traits), tuple(ignored_z))


@dataclass(frozen=True)
class DriverSpec:
    name: str
    parameters: dict[str, float] = field(default_factory=dict)
    dim_z: int = 1


_REQUIRED: dict[str, tuple[tuple[str, ...], tuple[str, ...]]] = {
    # name: (required, optional)
    "gmu": (("mu",), ("dim_z",)),
    "abs_z": (("mu",), ("dim_z",)),
    "black_scholes": (("r", "b", "sigma"), ()),
    "borrowing": (("r", "R", "b", "sigma"), ()),
    "short_premium": (("r", "b", "sigma", "k"), ()),
    "discount": (("r",), ("dim_z",)),
    "constant": (("c",), ("dim_z",)),
    "zero": ((), ("dim_z",)),
}


def registered_names() -> tuple[str, ...]:
    return tuple(_REQUIRED)


def build_driver(dspec: DriverSpec) -> Driver:
    if dspec.name not in _REQUIRED:
        raise ValidationError(f"unknown driver {dspec.name!r}; known: {', '.join(_REQUIRED)}")
    required, optional = _REQUIRED[dspec.name]
    p = dict(dspec.parameters)
    for key in required:
        if key not in p:
            raise ValidationError(f"missing parameter {key}")
    extra = set(p) - set(required) - set(optional)
    if extra:
        raise ValidationError(f"unexpected parameter(s) for {dspec.name}: {', '.join(sorted(extra))}")
    dim = int(p.pop("dim_z", dspec.dim_z))
    if dspec.name == "gmu":
        return make_gmu(p["mu"], dim)
    if dspec.name == "abs_z":
        return make_abs_z(p["mu"], dim)
    if dspec.name == "black_scholes":
        return make_black_scholes(p["r"], p["b"], p["sigma"])
    if dspec.name == "borrowing":
        return make_borrowing(p["r"], p["R"], p["b"], p["sigma"])
    if dspec.name == "short_premium":
        return make_short_premium(p["r"], p["b"], p["sigma"], p["k"])
    if dspec.name == "discount":
        return make_discount(p["r"], dim)
    if dspec.name == "constant":
        return make_constant(p["c"], dim)
    return make_zero(dim)


def parse_driver_config(text: str) -> Driver:
    """Parse ``key=value`` assignments (whitespace or newline separated, ``#`` comments)."""
    assignments: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        for token in line.split():
            if "=" not in token:
                raise ValidationError(f"line {lineno}: expected key=value, got {token!r}")
            key, _, value = token.partition("=")
            key, value = key.strip(), value.strip()
            if not key or not value:
                raise ValidationError(f"line {lineno}: empty key or value in {token!r}")
            if key in assignments:
                raise ValidationError(f"line {lineno}: duplicate key {key!r}")
            assignments[key] = value
    name = assignments.pop("driver", None)
    if name is None:
        raise ValidationError("missing driver name (driver=...)")
    params: dict[str, float] = {}
    for key, value in assignments.items():
        try:
            v = float(value)
        except ValueError:
            raise ValidationError(f"parameter {key}={value!r} is not a number") from None
        if not math.isfinite(v):
            raise ValidationError(f"parameter {key} is not finite")
        params[key] = v
    return build_driver(DriverSpec(name, params))


def estimate_lipschitz(
    driver: Driver,
    box: Sequence[tuple[float, float]] | tuple[float, float] = (-1.0, 1.0),
    samples: int = 10_000,
    rng_seed: int = 0,
    t: float = 0.0,
) -> float:
    """Largest ``|dg| / (|dy| + |dz|_1)`` over sampled point pairs.

    ``box`` is one ``(lo, hi)`` pair applied to every coordinate or a list of
    ``1 + dim_z`` pairs (y first). Half the pairs are uniform over the box, the
    other half are short perturbations, which probe the local gradient.
    """
    if samples < 2:
        raise ValidationError("need at least 2 samples")
    dim = 1 + driver.dim_z
    bounds = np.asarray([box] * dim if np.ndim(box) == 1 else box, dtype=float)
    if bounds.shape != (dim, 2) or np.any(bounds[:, 1] <= bounds[:, 0]):
        raise ValidationError("box must give a non-degenerate (lo, hi) per coordinate")
    rng = np.random.default_rng(rng_seed)
    lo, hi = bounds[:, 0], bounds[:, 1]
    width = hi - lo
    a = lo + width * rng.random((samples, dim))
    far = lo + width * rng.random((samples, dim))
    step = 1e-3 * width * rng.choice([-1.0, 1.0], size=(samples, dim)) * rng.random((samples, dim))
    near = a + step
    b = np.where(np.arange(samples)[:, None] % 2 == 0, far, near)
    ga = driver.eval(t, a[:, 0], a[:, 1:])
    gb = driver.eval(t, b[:, 0], b[:, 1:])
    dist = np.abs(a - b).sum(axis=1)
    ok = dist > 0
    if not np.any(ok):
        return 0.0
    return float(np.max(np.abs(ga - gb)[ok] / dist[ok]))
