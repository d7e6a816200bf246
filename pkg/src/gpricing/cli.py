"""Command-line entry point.

Exit status: 0 success, 1 invalid input, 2 property or scan failures.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
from collections.abc import Sequence
from datetime import date
from pathlib import Path

from .core import ARITHMETIC, GEOMETRIC, Driver, LatticeModel, Payoff, TimeGrid
from .drivers import parse_driver_config
from .errors import GPricingError, ValidationError
from .market import ChainSpec, ScanConfig, ingest_quotes, scan, synthesize_quotes
from .pde import cross_check
from .properties import CaseGenerator, SuiteConfig, run_property_suite
from .recovery import mechanism_from_driver, recover_surface, surface_to_text
from .solver import solve_bsde

EXIT_OK, EXIT_INVALID, EXIT_FAILED = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    # usage errors count as invalid input, keeping exit 2 for check failures
    def error(self, message: str):
        raise ValidationError(message)


def write_atomic(path: str | Path, text: str) -> None:
    """Write via a sibling temporary file and rename, so readers never see a partial file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _emit(text: str, out: str | None) -> None:
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


def _load_driver(path: str | None) -> Driver:
    if not path:
        raise ValidationError("--driver is required")
    p = Path(path)
    if not p.is_file():
        raise ValidationError(f"--driver: no such file {path}")
    try:
        return parse_driver_config(p.read_text(encoding="utf-8"))
    except ValidationError as exc:
        raise ValidationError(f"--driver: {exc}") from None


def _floats(text: str, flag: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ValidationError(f"{flag}: expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise ValidationError(f"{flag}: empty list")
    return vals


def parse_payoff(text: str, T: float) -> Payoff:
    """``call:K``, ``put:K``, ``short_call:K``, ``short_put:K``, ``linear:c1,c2``, ``constant:c``."""
    kind, _, arg = text.partition(":")
    if not arg:
        raise ValidationError(f"--payoff: expected kind:value, got {text!r}")
    vals = _floats(arg, "--payoff")
    makers = {"call": Payoff.call, "put": Payoff.put, "short_call": Payoff.short_call, "short_put": Payoff.short_put}
    if kind in makers:
        return makers[kind](vals[0], T)
    if kind == "linear":
        return Payoff.linear_in_b(vals, T)
    if kind == "constant":
        return Payoff.constant(vals[0], T)
    raise ValidationError(f"--payoff: unknown kind {kind!r}")


def _model(args, driver: Driver, n: int) -> LatticeModel:
    drift = args.drift if args.drift is not None else float(driver.parameters.get("b", 0.0))
    return LatticeModel.create(
        TimeGrid(0.0, args.T, n), args.s0, args.sigma, drift, d=driver.dim_z, mapping=args.mapping
    )


def _positive(name: str, v: float | None) -> None:
    if v is not None and not v > 0:
        raise ValidationError(f"{name} must be positive")


def cmd_price(args) -> int:
    driver = _load_driver(args.driver)
    payoff = parse_payoff(args.payoff, args.T)
    ladder = sorted({max(1, args.steps >> k) for k in range(args.ladder - 1, -1, -1)})
    rows = ["steps,price,change"]
    prev = None
    for n in ladder:
        p = solve_bsde(_model(args, driver, n), driver, payoff).root_price
        rows.append(f"{n},{p:.10f}," + ("" if prev is None else f"{p - prev:.3e}"))
        prev = p
    _emit(f"price {prev:.10f}\n" + "\n".join(rows) + "\n", args.out)
    return EXIT_OK


def cmd_props(args) -> int:
    driver = _load_driver(args.driver)
    gen = CaseGenerator(rng_seed=args.seed, count=args.count, max_steps=args.max_case_steps)
    res = run_property_suite(driver, SuiteConfig(gen=gen, mu=args.mu))
    _emit(res.to_text(), args.out)
    for r in res.reports:
        flag = "" if r.consistent else "  <-- unexpected"
        print(f"{r.property}: {r.verdict} (expected {r.expected}){flag}", file=sys.stderr)
    return EXIT_OK if not res.failures else EXIT_FAILED


def cmd_recover(args) -> int:
    driver = _load_driver(args.driver)
    mech = mechanism_from_driver(driver, args.dt)
    zs = _floats(args.z_grid, "--z-grid")
    grid = zs if driver.dim_z == 1 else [tuple([z] * driver.dim_z) for z in zs]
    _emit(surface_to_text(recover_surface(mech, grid, args.t, args.T)), args.out)
    return EXIT_OK


def cmd_pde_check(args) -> int:
    driver = _load_driver(args.driver)
    payoff = parse_payoff(args.payoff, args.T)
    chk = cross_check(_model(args, driver, args.steps), driver, payoff, args.m, tolerance=args.tolerance)
    _emit(chk.to_text(), args.out)
    if args.grid_out:
        write_atomic(args.grid_out, chk.pde.to_text())
    return EXIT_OK if chk.passed else EXIT_FAILED


def cmd_scan(args) -> int:
    if not args.quotes:
        raise ValidationError("--quotes is required")
    if args.sigma is None:
        raise ValidationError("--sigma is required for scan")
    p = Path(args.quotes)
    if not p.is_file():
        raise ValidationError(f"--quotes: no such file {args.quotes}")
    try:
        quotes = ingest_quotes(p.read_text(encoding="utf-8"))
    except ValidationError as exc:
        raise ValidationError(f"--quotes: {exc}") from None
    cfg = ScanConfig(
        sigma_for_tree=args.sigma, mu=args.mu, drift_for_tree=args.drift or 0.0, steps=args.steps,
        max_steps=args.max_steps, short_dated_threshold=args.short_days, bid_ask_mode=args.bid_ask,
        include_diagonal=args.diagonal, jobs=args.jobs,
    )
    rep = scan(quotes, cfg, scan_id=p.name)
    _emit(rep.to_text(), args.out)
    print(f"{len(rep.violations)} violations", file=sys.stderr)
    return EXIT_OK if not rep.violations else EXIT_FAILED


def cmd_synth(args) -> int:
    driver = _load_driver(args.driver)
    try:
        qd = date.fromisoformat(args.quote_date)
    except ValueError:
        raise ValidationError(f"--quote-date: bad date {args.quote_date!r}") from None
    chain = ChainSpec(
        _floats(args.strikes, "--strikes"), tuple(int(d) for d in _floats(args.expiries, "--expiries")),
        args.s0, args.sigma, args.drift, args.steps, qd,
    )
    _emit(synthesize_quotes(driver, chain, args.bid_ask).to_csv(), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="gpricing", description="Lattice g-expectation pricing toolkit.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, steps=200):
        p.add_argument("--driver", help="driver config file (key=value lines, driver=<name>)")
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--steps", type=int, default=steps, help="lattice steps")
        p.add_argument("--mu", type=float, default=25.0)

    def lattice(p, sigma=0.2):
        p.add_argument("--s0", type=float, default=100.0)
        p.add_argument("--sigma", type=float, default=sigma)
        p.add_argument("--drift", type=float, default=None, help="default: driver parameter b, else 0")
        p.add_argument("--T", type=float, default=1.0, help="maturity in years")
        p.add_argument("--mapping", choices=(GEOMETRIC, ARITHMETIC), default=GEOMETRIC)

    p = sub.add_parser("price", help="price a payoff with a convergence ladder")
    common(p, 2000)
    lattice(p)
    p.add_argument("--payoff", default="call:100")
    p.add_argument("--ladder", type=int, default=4, help="number of halvings of --steps")
    p.set_defaults(func=cmd_price)

    p = sub.add_parser("props", help="run the property suite on a driver")
    common(p)
    p.add_argument("--count", type=int, default=100, help="cases per property")
    p.add_argument("--max-case-steps", type=int, default=12)
    p.set_defaults(func=cmd_props)

    p = sub.add_parser("recover", help="recover g(z) from mechanism prices")
    common(p)
    p.add_argument("--z-grid", default="-2,-1,0,1,2")
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--dt", type=float, default=1 / 512)
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("pde-check", help="compare lattice and PDE prices")
    common(p, 2000)
    lattice(p)
    p.add_argument("--payoff", default="call:100")
    p.add_argument("--m", type=int, default=800, help="PDE space steps")
    p.add_argument("--tolerance", type=float, default=0.05)
    p.add_argument("--grid-out", help="write the PDE u-grid here")
    p.set_defaults(func=cmd_pde_check)

    p = sub.add_parser("scan", help="scan option quotes for domination violations")
    common(p, 100)
    p.add_argument("--quotes", help="quote CSV file")
    p.add_argument("--sigma", type=float, default=None, help="tree volatility (required)")
    p.add_argument("--drift", type=float, default=0.0)
    p.add_argument("--max-steps", type=int, default=20000)
    p.add_argument("--short-days", type=float, default=2.0)
    p.add_argument("--bid-ask", action="store_true", help="use ask/bid quotes instead of trades")
    p.add_argument("--diagonal", action="store_true", help="also test i=j for mixed and sum families")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("synth", help="synthesize a quote CSV from a driver")
    common(p)
    p.add_argument("--strikes", default="90,100,110")
    p.add_argument("--expiries", default="30", help="days to expiry, comma separated")
    p.add_argument("--s0", type=float, default=100.0)
    p.add_argument("--sigma", type=float, default=0.2)
    p.add_argument("--drift", type=float, default=None)
    p.add_argument("--quote-date", default="2024-01-02")
    p.add_argument("--bid-ask", action="store_true")
    p.set_defaults(func=cmd_synth)
    return ap


def run(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        for name in ("steps", "jobs"):
            if getattr(args, name) < 1:
                raise ValidationError(f"--{name} must be at least 1")
        _positive("--mu", args.mu)
        for name in ("sigma", "T", "s0"):
            _positive(f"--{name}", getattr(args, name, None))
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except GPricingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
