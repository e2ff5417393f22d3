"""Command-line front end: ``suspension-lab <command> [flags]``.

Every command writes JSON lines.  The first line is the resolved configuration,
so any report can be re-run bit-identically from its own header.

Exit status: 0 success, 1 statistical check failed, 2 usage error, 3 a depth
cap, truncation or size limit was hit.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from . import acceptance, fock, oracle, point_process as pp, riesz
from .odometer import (
    BitSource,
    CapExceeded,
    GrowthSpec,
    InfeasibleRectangle,
    LazyWord,
    TowerPoint,
    TruncationExceeded,
    window,
)
from .parser import ParseError, parse_observable, parse_region, parse_simple
from .stats import covariance, within

EXIT_OK, EXIT_STAT, EXIT_USAGE, EXIT_LIMIT = 0, 1, 2, 3
Z_MAX = 3.0
U64 = 1 << 64


class UsageError(Exception):
    """Bad flag value; the message names the flag."""


def workers() -> int:
    """Thread count from ``SUSPENSION_LAB_THREADS`` (0 or unset = auto)."""
    raw = os.environ.get("SUSPENSION_LAB_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"SUSPENSION_LAB_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise UsageError("SUSPENSION_LAB_THREADS must be >= 0")
    return n or (os.cpu_count() or 1)


def ordered_map(fn: Callable, items: Iterable) -> list:
    """``[fn(x) for x in items]``, possibly threaded; order always follows ``items``."""
    items = list(items)
    n = workers()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise UsageError(f"--config: cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"--config: invalid JSON in {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError("--config: top level must be an object")
    return cfg


def resolve(args) -> dict:
    """Merge file config and flags; flags win."""
    cfg = _load_config(args.config)
    growth = dict(cfg.get("growth", {}))
    for key in ("m", "repeat_last", "cap_depth", "truncation_k"):
        if key in cfg:
            growth[key] = cfg[key]
    try:
        spec = GrowthSpec.from_dict(growth)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"--config: bad growth spec: {exc}") from None
    seed = args.seed if args.seed is not None else cfg.get("seed", 42)
    trials = args.trials if args.trials is not None else cfg.get("trials", 1000)
    if not (isinstance(seed, int) and 0 <= seed < U64):
        raise UsageError(f"--seed must be an unsigned 64-bit integer, got {seed!r}")
    if not (isinstance(trials, int) and trials >= 2):
        raise UsageError(f"--trials must be an integer >= 2, got {trials!r}")
    return {
        "command": args.command_path,
        "growth": spec.to_dict(),
        "seed": seed,
        "trials": trials,
        "count_cap": int(cfg.get("count_cap", 20)),
        "lambda": cfg.get("lambda"),
        "args": {k: v for k, v in sorted(vars(args).items())
                 if k not in ("config", "seed", "trials", "out", "func", "command_path") and v is not None},
    }


class Reporter:
    def __init__(self, out: str | None):
        self.fh = open(out, "w") if out else sys.stdout
        self.owned = bool(out)

    def emit(self, obj: dict):
        self.fh.write(json.dumps(obj, sort_keys=False) + "\n")

    def raw(self, text: str):
        self.fh.write(text)

    def close(self):
        if self.owned:
            self.fh.close()
        else:
            self.fh.flush()


# ---------------------------------------------------------------------------
# argument helpers
# ---------------------------------------------------------------------------


def _spec(cfg) -> GrowthSpec:
    return GrowthSpec.from_dict(cfg["growth"])


def _region(args, spec, flag="--region"):
    if getattr(args, "window", None) is not None:
        return window(_window_arg(args.window), spec=spec)
    text = getattr(args, "region", None)
    if text is None:
        raise UsageError(f"give --window L=<n> or {flag}")
    try:
        return parse_region(text, spec)
    except (ParseError, InfeasibleRectangle, ValueError) as exc:
        raise UsageError(f"{flag}: {exc}") from None


def _window_arg(text: str) -> int:
    body = text[2:] if text.startswith("L=") else text
    try:
        L = int(body)
    except ValueError:
        raise UsageError(f"--window expects L=<n>, got {text!r}") from None
    if L < 1:
        raise UsageError("--window: L must be >= 1")
    return L


def _int_list(text: str, flag: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"{flag} expects comma-separated integers, got {text!r}") from None


def _points(texts: Sequence[str], spec: GrowthSpec, seed: int) -> list[TowerPoint]:
    """Points written ``bits:level``; bits beyond the prefix come from a fixed stream."""
    out = []
    for i, text in enumerate(texts):
        try:
            bits, level = text.split(":")
            word = LazyWord.from_bits(bits, BitSource(seed, (7, i)), spec.cap_depth)
            pt = TowerPoint(word, int(level))
            pt.check(spec)
        except (ValueError, InfeasibleRectangle) as exc:
            raise UsageError(f"--point {text!r}: expected <bits>:<level> inside the tower ({exc})") from None
        out.append(pt)
    return out


def _observable(text: str, flag: str, spec=None, ground=None):
    try:
        return parse_observable(text, spec, ground)
    except (ParseError, ValueError) as exc:
        raise UsageError(f"{flag}: {exc}") from None


def _simple(text: str, flag: str, spec=None, ground=None):
    try:
        return parse_simple(text, spec, ground)
    except (ParseError, ValueError) as exc:
        raise UsageError(f"{flag}: {exc}") from None


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_sample(args, cfg, rep):
    spec = _spec(cfg)
    region = _region(args, spec)
    draw = pp.sample_marked if args.marked else pp.sample_poisson
    nu = draw(region, cfg["seed"], spec)
    rep.raw(pp.to_jsonl(nu))
    return EXIT_OK


def cmd_evolve(args, cfg, rep):
    spec = _spec(cfg)
    nu = pp.sample_poisson(_region(args, spec), cfg["seed"], spec)
    rep.raw(pp.to_jsonl(pp.pushforward(nu, args.steps, spec)))
    return EXIT_OK


def cmd_superpose(args, cfg, rep):
    spec = _spec(cfg)
    regions = [window(_window_arg(w), spec=spec) for w in args.windows]
    if len(regions) < 2:
        raise UsageError("--windows needs at least two windows, e.g. --windows L=1 L=2")
    total = pp.sample_poisson(regions[0], (cfg["seed"], 0), spec)
    for i, r in enumerate(regions[1:], start=1):
        total = pp.superpose(total, pp.sample_poisson(r, (cfg["seed"], i), spec))
    rep.raw(pp.to_jsonl(total))
    return EXIT_OK


def cmd_thin(args, cfg, rep):
    spec = _spec(cfg)
    c = float(Fraction(args.c))
    if not 0 < c <= 1:
        raise UsageError(f"--c must lie in (0, 1], got {args.c}")
    nu = pp.sample_marked(_region(args, spec), cfg["seed"], spec)
    kept, dropped = pp.thin_split(nu, c)
    rep.emit({"type": "thin", "c": c, "atoms": len(nu), "kept": len(kept), "dropped": len(dropped),
              "exact": True})
    rep.raw(pp.to_jsonl(kept))
    return EXIT_OK


def cmd_mecke(args, cfg, rep):
    spec = _spec(cfg)
    region = _region(args, spec)
    g = _observable(args.g, "--g", spec)
    f = _simple(args.f, "--f", spec)
    r = fock.mecke_check(g, f, region, cfg["trials"], cfg["seed"], spec)
    rep.emit({"type": "mecke", **r.to_dict(), "pass": r.z <= Z_MAX})
    return EXIT_OK if r.z <= Z_MAX else EXIT_STAT


def cmd_project(args, cfg, rep):
    spec = _spec(cfg)
    F = _observable(args.expr, "--expr", spec)
    ys = _points(args.point or [], spec, cfg["seed"])
    est = fock.project_n(F, ys, _region(args, spec), cfg["trials"], cfg["seed"], spec)
    rep.emit({"type": "projection", "points": args.point or [], **est.to_dict()})
    return EXIT_OK


def _ground(args, cfg) -> oracle.FiniteGround:
    lam = args.lam if args.lam is not None else cfg["lambda"]
    if lam is None:
        raise UsageError("oracle needs --lambda l1,l2,... or \"lambda\" in --config")
    if isinstance(lam, str):
        lam = lam.split(",")
    try:
        masses = tuple(Fraction(str(x)) for x in lam)
    except ValueError:
        raise UsageError(f"--lambda: not a list of rationals: {lam!r}") from None
    cap = args.count_cap if args.count_cap is not None else cfg["count_cap"]
    try:
        return oracle.FiniteGround(masses, count_cap=cap)
    except ValueError as exc:
        raise UsageError(f"--lambda/--count-cap: {exc}") from None


def cmd_oracle(args, cfg, rep):
    G = _ground(args, cfg)
    if args.mode == "expect":
        F = _observable(args.expr, "--expr", ground=G)
        rep.emit({"type": "oracle_expect", **oracle.exact_expect(F, G).to_dict()})
    elif args.mode == "mecke":
        g = _observable(args.g, "--g", ground=G)
        f = _simple(args.f, "--f", ground=G)
        fmap = {}
        for c, atoms in f.terms:
            for i in atoms.indices:
                fmap[i] = fmap.get(i, 0) + c
        res = oracle.oracle_mecke(G, g=g, f=fmap)
        rep.emit({"type": "oracle_mecke", **res.to_dict()})
        if not res.holds:
            return EXIT_STAT
    elif args.mode == "project":
        F = _observable(args.expr, "--expr", ground=G)
        for ys, e in oracle.oracle_projection(F, G, args.order).items():
            rep.emit({"type": "oracle_projection", "points": list(ys), **e.to_dict()})
    else:
        F = _observable(args.f, "--f", ground=G)
        Gx = _observable(args.g, "--g", ground=G)
        res = oracle.oracle_chaos_orthogonality(F, Gx, G)
        ok = abs(res.inner.value) <= res.inner.bound + 1e-12 and all(
            abs(e.value) <= e.bound + 1e-12 for e in res.leibniz.values())
        rep.emit({"type": "oracle_orthogonality", **res.to_dict(), "holds": ok})
        if not ok:
            return EXIT_STAT
    return EXIT_OK


def cmd_riesz(args, cfg, rep):
    spec = _spec(cfg)
    if args.mode == "coeff":
        J = args.levels
        c = riesz.coeff_at(spec, args.at, J)
        digits = riesz.signed_digits(spec, args.at, J if J is not None else 64)
        while digits and J is None and digits[-1] == 0:
            digits.pop()
        rep.emit({"type": "riesz_coeff", "m": args.at, "levels": J, "coeff": str(c),
                  "digits": digits, "exact": True})
    elif args.mode == "power":
        co = riesz.convolution_power_coeffs(spec, args.p, args.levels)
        rep.emit({"type": "riesz_power", "p": args.p, "levels": args.levels, "frequencies": len(co),
                  "total": str(co.total()), "symmetric": co.is_symmetric(),
                  "at_nj": {str(spec.n(j)): str(co[spec.n(j)]) for j in range(args.levels)},
                  "exact": True})
        if args.full:
            for k, v in sorted(co.coeffs.items()):
                rep.emit({"type": "coeff", "freq": k, "value": str(v), "exact": True})
    else:
        levels = _int_list(args.levels, "--levels")
        report = riesz.singularity_evidence(spec, args.p, args.q, levels, args.grid)
        rep.emit({"type": "riesz_singular", **report.to_dict(), "exact": False, "se": 0.0})
        if args.csv:
            riesz.write_density_csv(args.csv, spec, args.p, args.q, levels[-1], args.grid)
    return EXIT_OK


def cmd_autocorr(args, cfg, rep):
    spec = _spec(cfg)
    A = _region(args, spec, "--set")
    if args.lags == "auto-nj":
        lags = [spec.n(j) for j in range(args.max_j + 1)]
    else:
        lags = _int_list(args.lags, "--lags")
    status = EXIT_OK
    for j, lag in enumerate(lags):
        v = riesz.autocorr_exact(A, lag, spec, args.method)
        line = {"type": "autocorr", **v.to_dict()}
        if args.mc_trials:
            source = A | A.preimage(spec, lag)
            trace = (cfg["seed"], j)

            def trial(i, source=source, trace=trace, lag=lag):
                nu = pp.sample_poisson(source, trace + (i,), spec)
                return pp.count(nu, A), pp.count(pp.pushforward(nu, lag, spec), A)

            xs, ys = zip(*ordered_map(trial, range(args.mc_trials)))
            cov, se = covariance(xs, ys)
            ok = within(cov, float(v.value), se, Z_MAX)
            line.update({"mc_cov": cov, "se": se, "mc_pass": ok})
            status = status if ok else EXIT_STAT
        rep.emit(line)
    return status


def cmd_suite(args, cfg, rep):
    if args.name != "acceptance":
        raise UsageError(f"--name: unknown suite {args.name!r} (available: acceptance)")
    only = _int_list(args.only, "--only") if args.only else None
    failed = False
    for c in acceptance.CRITERIA:
        if only is not None and c.number not in only:
            continue
        r = c(cfg["seed"])
        print(r.line(), file=sys.stderr)
        d = r.to_dict()
        # wall time goes to stderr only, so reports stay byte-identical
        d.pop("seconds")
        d["within_time"] = r.within_time
        rep.emit({"type": "criterion", **d, "exact": True})
        failed |= not r.ok
    return EXIT_STAT if failed else EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="FILE", help="JSON configuration")
    common.add_argument("--seed", type=int, help="unsigned 64-bit seed (default 42)")
    common.add_argument("--trials", type=int, help="Monte Carlo trials (default 1000)")
    common.add_argument("--out", metavar="FILE", help="write JSON lines here instead of stdout")

    where = argparse.ArgumentParser(add_help=False)
    where.add_argument("--window", metavar="L=n", help="window of levels 1..n")
    where.add_argument("--region", help='disjoint rectangles, e.g. "C(0)[1..1],C(1)[1..2]"')

    p = _Parser(prog="suspension-lab", description="Poisson suspensions over a rank-one tower.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("sample", parents=[common, where], help="draw one Poisson configuration")
    s.add_argument("--marked", action="store_true", help="attach uniform marks")
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("evolve", parents=[common, where], help="sample, then push forward by T^steps")
    s.add_argument("--steps", type=int, required=True)
    s.set_defaults(func=cmd_evolve)

    s = sub.add_parser("superpose", parents=[common], help="superpose independent window samples")
    s.add_argument("--windows", nargs="+", required=True, metavar="L=n")
    s.set_defaults(func=cmd_superpose)

    s = sub.add_parser("thin", parents=[common, where], help="mark-thin a sample at level c")
    s.add_argument("--c", required=True, help="retention level in (0, 1]")
    s.set_defaults(func=cmd_thin)

    s = sub.add_parser("mecke", parents=[common, where], help="Monte Carlo check of the Mecke formula")
    s.add_argument("--g", required=True, help="observable g")
    s.add_argument("--f", required=True, help='simple function, e.g. "1*C(1)[1..2]"')
    s.set_defaults(func=cmd_mecke)

    s = sub.add_parser("project", parents=[common, where], help="estimate P_n F at given points")
    s.add_argument("--expr", required=True)
    s.add_argument("--point", action="append", metavar="BITS:LEVEL")
    s.set_defaults(func=cmd_project)

    s = sub.add_parser("oracle", parents=[common], help="exact computations on a finite ground set")
    s.add_argument("mode", choices=["expect", "mecke", "project", "orthogonality"])
    s.add_argument("--lambda", dest="lam", help="atom masses, e.g. 1/2,1,3/2,2")
    s.add_argument("--count-cap", type=int)
    s.add_argument("--expr")
    s.add_argument("--g")
    s.add_argument("--f")
    s.add_argument("--order", type=int, default=1)
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("riesz", parents=[common], help="Riesz product spectral quantities")
    s.add_argument("mode", choices=["coeff", "power", "singular"])
    s.add_argument("--at", type=int, help="frequency (coeff)")
    s.add_argument("--levels", help="J (coeff, power) or a list like 4,6,8,10 (singular)")
    s.add_argument("--p", type=int, default=1)
    s.add_argument("--q", type=int, default=2)
    s.add_argument("--grid", type=int, help="grid size for densities")
    s.add_argument("--csv", metavar="FILE", help="dump densities at the last level")
    s.add_argument("--full", action="store_true", help="emit every coefficient (power)")
    s.set_defaults(func=cmd_riesz)

    s = sub.add_parser("autocorr", parents=[common], help="exact autocorrelation of a set")
    s.add_argument("--set", dest="region", required=True)
    s.add_argument("--lags", default="auto-nj", help="auto-nj or comma-separated lags")
    s.add_argument("--max-j", type=int, default=4)
    s.add_argument("--method", choices=["image", "preimage"], default="image")
    s.add_argument("--mc-trials", type=int, default=0, help="also compare with a Monte Carlo covariance")
    s.set_defaults(func=cmd_autocorr, window=None)

    s = sub.add_parser("suite", parents=[common], help="run a canned check suite")
    s.add_argument("--name", default="acceptance")
    s.add_argument("--only", help="comma-separated criterion numbers")
    s.set_defaults(func=cmd_suite)
    return p


def _check_mode_flags(args):
    if args.command == "riesz":
        if args.mode == "coeff":
            if args.at is None:
                raise UsageError("riesz coeff needs --at")
            args.levels = None if args.levels is None else _int_list(args.levels, "--levels")[0]
        elif args.mode == "power":
            if args.levels is None:
                raise UsageError("riesz power needs --levels J")
            args.levels = _int_list(args.levels, "--levels")[0]
        elif args.levels is None:
            args.levels = "4,6,8,10"
    if args.command == "oracle":
        need = {"expect": ["expr"], "project": ["expr"], "mecke": ["g", "f"], "orthogonality": ["f", "g"]}
        for name in need[args.mode]:
            if getattr(args, name) is None:
                raise UsageError(f"oracle {args.mode} needs --{name}")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.command_path = args.command + (f" {args.mode}" if hasattr(args, "mode") else "")
    try:
        _check_mode_flags(args)
        cfg = resolve(args)
        rep = Reporter(args.out)
    except UsageError as exc:
        print(f"suspension-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"suspension-lab: error: --out: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        rep.emit({"type": "config", **cfg})
        return args.func(args, cfg, rep)
    except UsageError as exc:
        print(f"suspension-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CapExceeded, TruncationExceeded, riesz.LevelTooLarge, riesz.GridTooCoarse,
            oracle.EnumerationTooLarge) as exc:
        print(f"suspension-lab: limit: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    except (riesz.OutOfRange, pp.EmptyRegion, ValueError) as exc:
        print(f"suspension-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    finally:
        if "rep" in locals():
            rep.close()


if __name__ == "__main__":
    sys.exit(main())
