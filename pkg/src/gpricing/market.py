"""Option-quote ingestion and the domination inequality battery.

Every ordered strike pair inside a quote group yields seven inequalities
``E[X] - E[Xbar] <= E^{g_mu}[X - Xbar]``; the right-hand side is priced on a
geometric lattice calibrated to the group's underlying.
"""

from __future__ import annotations

import csv
import io
import math
from collections import defaultdict
from collections.abc import Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import date

from .core import Driver, LatticeModel, Payoff, TimeGrid
from .drivers import make_gmu
from .errors import GPricingError, ValidationError
from .solver import DEFAULT_CONFIG, SolverConfig, min_steps_for_courant, min_steps_for_monotone, solve_bsde

HEADER = ("quote_date", "expiry", "underlying", "strike", "type", "side", "price")
CALL, PUT = "C", "P"
TRADE, ASK, BID = "trade", "ask", "bid"
DAYS_PER_YEAR = 365.0

# family -> (type of X, type of Xbar, Xbar enters short)
FAMILIES: dict[str, tuple[str, str, bool]] = {
    "CallCall": (CALL, CALL, False),
    "PutPut": (PUT, PUT, False),
    "CallPut": (CALL, PUT, False),
    "PutCall": (PUT, CALL, False),
    "CallShortCall": (CALL, CALL, True),
    "PutShortPut": (PUT, PUT, True),
    "CallShortPut": (CALL, PUT, True),
}
_SAME_TYPE_DIFFERENCE = ("CallCall", "PutPut")

PASS, VIOLATE, UNEVALUATED = "pass", "violate", "unevaluated"


@dataclass(frozen=True, slots=True)
class QuoteRecord:
    quote_date: date
    expiry: date
    underlying: float
    strike: float
    option_type: str
    side: str
    price: float
    implied_vol: float | None = None

    def __post_init__(self) -> None:
        if not self.price >= 0:
            raise ValidationError("negative price")
        if self.expiry < self.quote_date:
            raise ValidationError("expiry before quote_date")
        if not self.strike > 0:
            raise ValidationError("non-positive strike")
        if not self.underlying > 0:
            raise ValidationError("non-positive underlying")
        if self.option_type not in (CALL, PUT):
            raise ValidationError(f"unknown type {self.option_type!r}")
        if self.side not in (TRADE, ASK, BID):
            raise ValidationError(f"unknown side {self.side!r}")

    @property
    def group_key(self) -> tuple[date, date, float]:
        return (self.quote_date, self.expiry, self.underlying)


@dataclass(frozen=True)
class Reject:
    line: int
    reason: str
    text: str


@dataclass(frozen=True)
class QuoteSet:
    records: tuple[QuoteRecord, ...]
    rejects: tuple[Reject, ...] = ()

    @property
    def groups(self) -> dict[tuple[date, date, float], list[QuoteRecord]]:
        out: dict[tuple[date, date, float], list[QuoteRecord]] = defaultdict(list)
        for q in self.records:
            out[q.group_key].append(q)
        return dict(sorted(out.items()))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(HEADER)
        for q in self.records:
            w.writerow([
                q.quote_date.isoformat(), q.expiry.isoformat(), f"{q.underlying:.10g}",
                f"{q.strike:.10g}", q.option_type, q.side, f"{q.price:.12g}",
            ])
        return buf.getvalue()


def _parse_row(row: list[str]) -> QuoteRecord:
    if len(row) != len(HEADER):
        raise ValidationError(f"expected {len(HEADER)} fields, got {len(row)}")
    qd, ex, und, k, typ, side, px = (c.strip() for c in row)
    try:
        qdate, edate = date.fromisoformat(qd), date.fromisoformat(ex)
    except ValueError as exc:
        raise ValidationError(f"bad date: {exc}") from None
    try:
        und_v, k_v, px_v = float(und), float(k), float(px)
    except ValueError:
        raise ValidationError("non-numeric field") from None
    if not all(math.isfinite(v) for v in (und_v, k_v, px_v)):
        raise ValidationError("non-finite number")
    return QuoteRecord(qdate, edate, und_v, k_v, typ.upper(), side.lower(), px_v)


def ingest_quotes(document: str) -> QuoteSet:
    """Parse quote CSV text; malformed lines land in ``rejects`` with line numbers.

    A wrong header raises. Duplicate (group, strike, type, side) lines are rejected.
    """
    lines = list(csv.reader(io.StringIO(document)))
    if not lines or tuple(c.strip() for c in lines[0]) != HEADER:
        raise ValidationError(f"quote header must be {','.join(HEADER)}")
    records: list[QuoteRecord] = []
    rejects: list[Reject] = []
    seen: set[tuple] = set()
    for lineno, row in enumerate(lines[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            q = _parse_row(row)
        except ValidationError as exc:
            rejects.append(Reject(lineno, str(exc), ",".join(row)))
            continue
        key = (q.group_key, q.strike, q.option_type, q.side)
        if key in seen:
            rejects.append(Reject(lineno, "duplicate quote", ",".join(row)))
            continue
        seen.add(key)
        records.append(q)
    return QuoteSet(tuple(records), tuple(rejects))


@dataclass(frozen=True)
class ScanConfig:
    sigma_for_tree: float
    mu: float = 25.0
    drift_for_tree: float = 0.0
    steps: int = 100
    max_steps: int = 20000
    short_dated_threshold: float = 2.0  # days
    bid_ask_mode: bool = False
    include_diagonal: bool = False
    tolerance_scale: float = 1e-6
    jobs: int = 1
    solver: SolverConfig = DEFAULT_CONFIG

    def __post_init__(self) -> None:
        if not self.mu > 0:
            raise ValidationError("mu must be positive")
        if not self.sigma_for_tree > 0:
            raise ValidationError("sigma_for_tree must be positive")
        if self.steps < 1 or self.max_steps < self.steps:
            raise ValidationError("need 1 <= steps <= max_steps")
        if self.jobs < 1:
            raise ValidationError("jobs must be at least 1")


@dataclass(frozen=True)
class Inequality:
    family: str
    strike_i: float
    strike_j: float
    quote_date: date
    expiry: date
    underlying: float
    lhs: float

    @property
    def maturity(self) -> float:
        return (self.expiry - self.quote_date).days / DAYS_PER_YEAR

    @property
    def days(self) -> int:
        return (self.expiry - self.quote_date).days

    def rhs_payoff(self) -> Payoff:
        tx, tb, short = FAMILIES[self.family]
        T = self.maturity
        x = Payoff.call(self.strike_i, T) if tx == CALL else Payoff.put(self.strike_i, T)
        xb = Payoff.call(self.strike_j, T) if tb == CALL else Payoff.put(self.strike_j, T)
        # Xbar = -xb for the short families, so X - Xbar = x + xb
        return x + xb if short else x - xb


@dataclass(frozen=True)
class Verdict:
    inequality: Inequality
    rhs: float
    status: str
    short_dated: bool
    steps: int = 0
    reason: str = ""

    @property
    def gap(self) -> float:
        return self.inequality.lhs - self.rhs

    def to_row(self) -> str:
        q = self.inequality
        return ",".join([
            q.family, f"{q.strike_i:.10g}", f"{q.strike_j:.10g}", q.quote_date.isoformat(),
            q.expiry.isoformat(), f"{q.maturity:.10g}", f"{q.lhs:.10g}", f"{self.rhs:.10g}",
            f"{self.gap:.6e}", self.status, "short" if self.short_dated else "", self.reason,
        ])


def _price_table(quotes: Sequence[QuoteRecord]) -> dict[tuple[float, str, str], float]:
    return {(q.strike, q.option_type, q.side): q.price for q in quotes}


def build_inequality_battery(
    quotes: QuoteSet | Iterable[QuoteRecord], cfg: ScanConfig
) -> tuple[list[Inequality], list[str]]:
    """All family inequalities per group, with notes for skipped groups or pairs."""
    qs = quotes if isinstance(quotes, QuoteSet) else QuoteSet(tuple(quotes))
    out: list[Inequality] = []
    notes: list[str] = []
    for (qd, ex, und), group in qs.groups.items():
        table = _price_table(group)
        strikes = sorted({q.strike for q in group})
        label = f"{qd.isoformat()} {ex.isoformat()} {und:g}"
        if len(strikes) < 2:
            notes.append(f"group {label}: fewer than 2 strikes, skipped")
            continue
        missing = 0
        for ki in strikes:
            for kj in strikes:
                for fam, (tx, tb, short) in FAMILIES.items():
                    if ki == kj and (not cfg.include_diagonal or fam in _SAME_TYPE_DIFFERENCE):
                        continue
                    if cfg.bid_ask_mode:
                        # E[X] is the ask; -E[-Xbar] is the bid on Xbar
                        pi, pj = table.get((ki, tx, ASK)), table.get((kj, tb, BID if short else ASK))
                    else:
                        pi, pj = table.get((ki, tx, TRADE)), table.get((kj, tb, TRADE))
                    if pi is None or pj is None:
                        missing += 1
                        continue
                    lhs = pi + pj if short else pi - pj
                    out.append(Inequality(fam, ki, kj, qd, ex, und, lhs))
        if missing:
            notes.append(f"group {label}: {missing} inequalities skipped for missing quotes")
    return out, notes


def required_steps(T: float, cfg: ScanConfig) -> int:
    """Steps meeting the configured count, the contraction cap and scheme monotonicity."""
    return max(
        cfg.steps,
        min_steps_for_courant(cfg.mu, T, cfg.solver.courant_cap),
        min_steps_for_monotone(cfg.mu, T, 1),
    )


def evaluate_inequality(ineq: Inequality, cfg: ScanConfig) -> Verdict:
    T = ineq.maturity
    short = ineq.days < cfg.short_dated_threshold
    if T <= 0:
        return Verdict(ineq, math.nan, UNEVALUATED, short, 0, "zero time to maturity")
    n = required_steps(T, cfg)
    if n > cfg.max_steps:
        return Verdict(ineq, math.nan, UNEVALUATED, short, n, f"needs {n} steps > max_steps {cfg.max_steps}")
    model = LatticeModel.create(TimeGrid(0.0, T, n), ineq.underlying, cfg.sigma_for_tree, cfg.drift_for_tree)
    try:
        rhs = solve_bsde(model, make_gmu(cfg.mu), ineq.rhs_payoff(), cfg.solver).root_price
    except GPricingError as exc:
        return Verdict(ineq, math.nan, UNEVALUATED, short, n, str(exc))
    status = VIOLATE if ineq.lhs > rhs + cfg.tolerance_scale * ineq.underlying else PASS
    return Verdict(ineq, rhs, status, short, n)


@dataclass(frozen=True)
class MonotonicityFlag:
    quote_date: date
    expiry: date
    option_type: str
    side: str
    strike_low: float
    strike_high: float
    price_low: float
    price_high: float

    def to_row(self) -> str:
        return ",".join([
            self.quote_date.isoformat(), self.expiry.isoformat(), self.option_type, self.side,
            f"{self.strike_low:.10g}", f"{self.strike_high:.10g}",
            f"{self.price_low:.10g}", f"{self.price_high:.10g}",
        ])


def monotonicity_flags(quotes: QuoteSet) -> list[MonotonicityFlag]:
    """Pairs where call prices rise or put prices fall with strike."""
    flags = []
    for (qd, ex, _), group in quotes.groups.items():
        by: dict[tuple[str, str], list[QuoteRecord]] = defaultdict(list)
        for q in group:
            by[(q.option_type, q.side)].append(q)
        for (typ, side), qs in sorted(by.items()):
            qs = sorted(qs, key=lambda q: q.strike)
            for a, lo in enumerate(qs):
                for hi in qs[a + 1:]:
                    bad = hi.price > lo.price if typ == CALL else hi.price < lo.price
                    if bad:
                        flags.append(MonotonicityFlag(qd, ex, typ, side, lo.strike, hi.strike, lo.price, hi.price))
    return flags


@dataclass(frozen=True)
class ViolationReport:
    scan_id: str
    config: ScanConfig
    verdicts: tuple[Verdict, ...]
    flagged_monotonicity: tuple[MonotonicityFlag, ...]
    notes: tuple[str, ...] = ()
    rejects: tuple[Reject, ...] = ()

    @property
    def total(self) -> int:
        return len(self.verdicts)

    @property
    def violations(self) -> list[Verdict]:
        return [v for v in self.verdicts if v.status == VIOLATE]

    @property
    def passes(self) -> list[Verdict]:
        return [v for v in self.verdicts if v.status == PASS]

    @property
    def unevaluated(self) -> list[Verdict]:
        return [v for v in self.verdicts if v.status == UNEVALUATED]

    @property
    def flagged_short_dated(self) -> list[Verdict]:
        return [v for v in self.verdicts if v.short_dated]

    def summary(self) -> dict[str, dict[str, int]]:
        out: dict[str, dict[str, int]] = {
            f: {PASS: 0, VIOLATE: 0, UNEVALUATED: 0, "short_dated": 0} for f in FAMILIES
        }
        for v in self.verdicts:
            row = out[v.inequality.family]
            row[v.status] += 1
            row["short_dated"] += v.short_dated
        return out

    def to_text(self) -> str:
        c = self.config
        lines = [
            f"# scan {self.scan_id}",
            f"# mu={c.mu:g} sigma_for_tree={c.sigma_for_tree:g} drift_for_tree={c.drift_for_tree:g} "
            f"steps={c.steps} bid_ask_mode={c.bid_ask_mode} day_count=ACT/365 "
            f"short_dated_threshold_days={c.short_dated_threshold:g} tolerance={c.tolerance_scale:g}*underlying",
            "family,strike_i,strike_j,quote_date,expiry,T,lhs,rhs,gap,status,short_dated,reason",
            *(v.to_row() for v in self.verdicts),
            "",
            "# summary",
            "family,pass,violate,unevaluated,short_dated",
        ]
        for fam, row in self.summary().items():
            lines.append(f"{fam},{row[PASS]},{row[VIOLATE]},{row[UNEVALUATED]},{row['short_dated']}")
        lines += [
            f"total,{len(self.passes)},{len(self.violations)},{len(self.unevaluated)},{len(self.flagged_short_dated)}",
            f"# {len(self.violations)} violations",
            "",
            "# flagged_monotonicity",
            "quote_date,expiry,type,side,strike_low,strike_high,price_low,price_high",
            *(f.to_row() for f in self.flagged_monotonicity),
        ]
        if self.notes:
            lines += ["", "# notes", *self.notes]
        if self.rejects:
            lines += ["", "# rejects", *(f"line {r.line}: {r.reason}" for r in self.rejects)]
        return "\n".join(lines) + "\n"


def _evaluate_batch(args: tuple[list[Inequality], ScanConfig]) -> list[Verdict]:
    batch, cfg = args
    return [evaluate_inequality(q, cfg) for q in batch]


def scan(quotes: QuoteSet | Iterable[QuoteRecord], cfg: ScanConfig, scan_id: str = "scan") -> ViolationReport:
    """Evaluate the full battery; output order is fixed by the battery, not by workers."""
    qs = quotes if isinstance(quotes, QuoteSet) else QuoteSet(tuple(quotes))
    battery, notes = build_inequality_battery(qs, cfg)
    if cfg.jobs > 1 and len(battery) > 1:
        chunks = [battery[k:: cfg.jobs] for k in range(cfg.jobs)]
        with ProcessPoolExecutor(cfg.jobs) as pool:
            parts = list(pool.map(_evaluate_batch, [(c, cfg) for c in chunks]))
        verdicts: list[Verdict] = [None] * len(battery)  # type: ignore[list-item]
        for k, part in enumerate(parts):
            verdicts[k:: cfg.jobs] = part
    else:
        verdicts = _evaluate_batch((battery, cfg))
    return ViolationReport(scan_id, cfg, tuple(verdicts), tuple(monotonicity_flags(qs)), tuple(notes), qs.rejects)


@dataclass(frozen=True)
class ChainSpec:
    strikes: tuple[float, ...]
    expiry_days: tuple[int, ...]
    s0: float = 100.0
    sigma: float = 0.2
    drift: float | None = None
    steps: int = 200
    quote_date: date = field(default_factory=lambda: date(2024, 1, 2))

    def __post_init__(self) -> None:
        if not self.strikes or any(k <= 0 for k in self.strikes):
            raise ValidationError("strikes must be positive and non-empty")
        if not self.expiry_days or any(d < 1 for d in self.expiry_days):
            raise ValidationError("expiry_days must be at least 1")
        if not self.sigma > 0 or not self.s0 > 0:
            raise ValidationError("s0 and sigma must be positive")


def synthesize_quotes(driver: Driver, chain: ChainSpec, bid_ask: bool = False, cfg: SolverConfig = DEFAULT_CONFIG) -> QuoteSet:
    """Quotes priced by ``driver``: trade = E[X], or ask = E[X] and bid = -E[-X].

    The lattice drift defaults to the driver's ``b`` parameter (0 if absent).
    """
    if driver.dim_z != 1:
        raise ValidationError("quote synthesis needs a one-dimensional driver")
    drift = chain.drift if chain.drift is not None else float(driver.parameters.get("b", 0.0))
    out: list[QuoteRecord] = []
    for days in chain.expiry_days:
        T = days / DAYS_PER_YEAR
        expiry = date.fromordinal(chain.quote_date.toordinal() + days)
        n = max(chain.steps, min_steps_for_courant(driver.mu, T, cfg.courant_cap))
        model = LatticeModel.create(TimeGrid(0.0, T, n), chain.s0, chain.sigma, drift)
        for k in chain.strikes:
            for typ, pay in ((CALL, Payoff.call(k, T)), (PUT, Payoff.put(k, T))):
                ask = solve_bsde(model, driver, pay, cfg).root_price
                if bid_ask:
                    bid = -solve_bsde(model, driver, -pay, cfg).root_price
                    out.append(QuoteRecord(chain.quote_date, expiry, chain.s0, k, typ, ASK, ask))
                    out.append(QuoteRecord(chain.quote_date, expiry, chain.s0, k, typ, BID, max(bid, 0.0)))
                else:
                    out.append(QuoteRecord(chain.quote_date, expiry, chain.s0, k, typ, TRADE, ask))
    return QuoteSet(tuple(out))
