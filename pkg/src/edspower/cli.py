"""Command-line entry point.

Exit status: 0 success, 1 verification failure, 2 input error, 3 budget
exhausted or undecided.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

from . import bound as bound_mod
from .arith import DEFAULT_TRIAL_BOUND, perfect_power_decomposition, prime_factors
from .curve import to_short_model
from .eds import (
    EDSequence,
    check_strong_divisibility,
    check_valuation_law_all_primes,
    empirical_r,
    exact_law_applies,
    find_power_terms,
    kappa_certificate,
    primitive_divisor_cofactor,
)
from .errors import ConfigurationError, EDSPowerError, PreconditionError
from .frey import (
    build_frey,
    build_support,
    descent_triple,
    gcd_support_check,
    normalize_signs,
    scale_integral,
    support_for_prime,
    verify_prop_conclusions,
)
from .io import (
    TermCache,
    cache_root,
    certificate,
    dumps,
    int_to_str,
    load_curve,
    load_forms,
    rational_to_str,
)
from .tower import build_tower

logger = logging.getLogger("edspower")


@dataclass(frozen=True)
class RunConfig:
    curve: Path
    cache_dir: Path | None
    max_index: int
    min_exponent: int
    trial_division_bound: int
    silverman_start: int
    json: bool

    def __post_init__(self):
        for name in ("max_index", "min_exponent", "trial_division_bound", "silverman_start"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"--{name.replace('_', '-')} must be positive")
        if not self.curve.is_file():
            raise ConfigurationError(f"curve file {self.curve} does not exist")


def _config(args) -> RunConfig:
    return RunConfig(
        curve=Path(args.curve),
        cache_dir=cache_root(args.cache_dir),
        max_index=args.max_index,
        min_exponent=args.min_exponent,
        trial_division_bound=args.trial_division_bound,
        silverman_start=args.silverman_start,
        json=args.json,
    )


class _Session:
    """A curve, its sequence, and the optional on-disk cache behind it."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.curve = load_curve(config.curve)
        self.seq = EDSequence(self.curve.model, self.curve.point)
        self.cache = TermCache(config.cache_dir, self.seq) if config.cache_dir else None
        if self.cache:
            read = self.cache.load()
            logger.info("read %d cached terms from %s", read, self.cache.path)

    def close(self):
        if self.cache:
            self.cache.flush()

    def inputs(self, **extra) -> dict:
        m = self.curve.model
        out = {
            "curve": self.curve.name,
            "a": [str(a) for a in m.ainvs],
            "point": {"x": rational_to_str(self.curve.point.x), "y": rational_to_str(self.curve.point.y)},
            "curve_hash": self.seq.hash,
        }
        out.update({k: str(v) if isinstance(v, int) and not isinstance(v, bool) else v for k, v in extra.items()})
        return out


def _short(n: int, width: int = 60) -> str:
    s = int_to_str(n)
    return s if len(s) <= width else f"{s[:20]}...{s[-20:]} ({len(s)} digits)"


# -- eds --------------------------------------------------------------------------


def eds_gen(s: _Session, args):
    seq, n_max = s.seq, s.config.max_index
    seq.extend(n_max)
    terms = [seq.term(n) for n in range(1, n_max + 1)]
    outcome = {"terms": [{"n": t.n, "A": int_to_str(t.A), "B": int_to_str(t.B), "C": int_to_str(t.C)} for t in terms]}
    lines = [f"{t.n:>4}  B = {_short(t.B)}" for t in terms]
    return certificate("eds.gen", s.inputs(max_index=n_max), outcome, True), lines


def eds_props(s: _Session, args):
    seq, n_max = s.seq, s.config.max_index
    sd = check_strong_divisibility(seq, n_max)
    bound = args.valuation_bound
    seq.extend(bound)
    failures = []
    checked = 0
    for n in range(1, bound + 1):
        for m in range(1, bound // n + 1):
            checked += 1
            if not check_valuation_law_all_primes(seq, n, m):
                failures.append([n, m])
    outcome = {
        "strong_divisibility": {
            "max_index": n_max,
            "pairs_checked": sd.pairs_checked,
            "first_violation": sd.first_violation and list(sd.first_violation),
        },
        "valuation_law": {"bound": bound, "pairs_checked": checked, "failures": failures},
    }
    if not exact_law_applies(seq.model, 2) and any(seq.B(n) % 2 == 0 for n in range(1, bound + 1)):
        outcome["valuation_law"]["empirical_r_at_2"] = empirical_r(seq, 2, bound)
    passed = sd.passed and not failures
    lines = [
        f"strong divisibility up to {n_max}: {'pass' if sd.passed else f'FAIL at {sd.first_violation}'}",
        f"valuation law for nm <= {bound}: {'pass' if not failures else f'FAIL at {failures[:5]}'}",
    ]
    if "empirical_r_at_2" in outcome["valuation_law"]:
        lines.append(f"observed defect at p = 2 (a1 odd, reported only): {outcome['valuation_law']['empirical_r_at_2']}")
    return certificate("eds.props", s.inputs(max_index=n_max, valuation_bound=bound), outcome, passed), lines


def eds_primdiv(s: _Session, args):
    seq = s.seq
    lo, hi = args.min_index, s.config.max_index
    seq.extend(hi)
    missing = [n for n in range(lo, hi + 1) if primitive_divisor_cofactor(seq, n) == 1]
    outcome = {"range": [lo, hi], "without_primitive_divisor": missing}
    lines = [f"indices {lo}..{hi} without a primitive divisor: {missing or 'none'}"]
    return certificate("eds.primdiv", s.inputs(min_index=lo, max_index=hi), outcome, not missing), lines


def eds_powers(s: _Session, args):
    found = find_power_terms(s.seq, s.config.max_index, s.config.min_exponent)
    outcome = {"powers": [{"n": p.n, "u": int_to_str(p.u), "ell": p.ell} for p in found]}
    lines = [f"B_{p.n} = {_short(p.u)}^{p.ell}" for p in found] or ["no perfect powers found"]
    inputs = s.inputs(max_index=s.config.max_index, min_exponent=s.config.min_exponent)
    return certificate("eds.powers", inputs, outcome, True), lines


def eds_kappa(s: _Session, args):
    excluded = {int(t) for t in args.exclude.split(",") if t.strip()} if args.exclude else set()
    cert = kappa_certificate(s.seq, excluded, s.config.silverman_start, s.config.trial_division_bound)
    outcome = {k: (str(v) if isinstance(v, int) and not isinstance(v, bool) else v) for k, v in vars(cert).items()}
    outcome["witness_divisible"] = s.seq.B(cert.witness_index) % cert.p == 0
    lines = [f"q={cert.q} r={cert.r} kappa={cert.kappa} p={cert.p} witness=B_{cert.witness_index}"
             + (" (empirical r)" if cert.empirical else "")]
    inputs = s.inputs(T=sorted(excluded), silverman_start=s.config.silverman_start)
    return certificate("eds.kappa", inputs, outcome, outcome["witness_divisible"]), lines


# -- frey -------------------------------------------------------------------------


def _coords(x) -> list[str]:
    return [rational_to_str(c) for c in x.coords]


def frey_build(s: _Session, args):
    model, point, seq = s.curve.model, s.curve.point, s.seq
    n = args.n
    outcome: dict = {}
    lines: list[str] = []
    inputs = s.inputs(n=n, silverman_start=s.config.silverman_start, frak_p=args.frak_p)
    try:
        if seq.B(1) == 1:
            raise PreconditionError("B_1 = 1: the point is integral")
        short, image = to_short_model(model, point)
        tower = build_tower(short, image.x, image.y)
        summary = tower.summary()
        outcome["tower"] = summary if args.explain else {k: summary[k] for k in ("degree", "totally_real", "signature")}
        lines.append(f"tower degree {tower.degree}, totally real: {tower.totally_real}")
        trip = descent_triple(tower, seq, n)
        outcome["descent"] = {"eps": [_coords(e) for e in trip.eps], "A": int_to_str(trip.A), "B": int_to_str(trip.B)}
        lines.append("eps = " + ", ".join(_short_coords(e) for e in trip.eps))
        gcd = gcd_support_check(tower, model, trip, s.config.trial_division_bound)
        outcome["gcd_support"] = {"passed": gcd.passed, "pairs": [_jsonable(p) for p in gcd.pairs]}
        lines.append(f"gcd support against 2*Delta_E: {'pass' if gcd.passed else 'FAIL'}")
        if args.frak_p:
            support = support_for_prime(tower, model, args.frak_p, s.config.trial_division_bound)
        else:
            support = build_support(tower, model, seq, s.config.silverman_start, s.config.trial_division_bound)
        outcome["support"] = support.summary()
        if support.kappa:
            outcome["support"]["kappa_certificate"] = {k: str(v) for k, v in vars(support.kappa).items()}
        u, k = perfect_power_decomposition(trip.B)
        ells = sorted(prime_factors(k)[0]) if k > 1 else []
        ell = args.ell or (max(ells) if ells else None)
        outcome["power"] = {"u": int_to_str(u), "k": k, "ell": ell}
        passed = gcd.passed
        if ell is None or trip.B % support.frak_p.p:
            reason = "B_n is not a perfect power" if ell is None else "the chosen prime does not divide B_n"
            outcome["frey"] = {"skipped": reason}
            lines.append(f"Frey curve skipped: {reason}")
        else:
            normalized = normalize_signs(trip, support.frak_p)
            flips = [1 if a == b else -1 for a, b in zip(normalized.eps, trip.eps)]
            z1, z2, z3, alpha = scale_integral(tower, normalized, support)
            frey = build_frey(z1, z2, z3, alpha)
            report = verify_prop_conclusions(frey, support, ell, args.norm_bound)
            outcome["frey"] = {"signs": flips, **frey.summary(), "verification": report.summary()}
            passed = passed and report.passed
            lines.append(f"z = ({_short_coords(z1)}, {_short_coords(z2)}, {_short_coords(z3)}), alpha = {alpha}")
            lines.append(f"conclusions at primes of norm <= {args.norm_bound}: {'pass' if report.passed else 'FAIL'}")
        return certificate("frey.build", inputs, outcome, passed), lines
    except EDSPowerError as exc:
        outcome["error"] = {"code": exc.code, "message": str(exc)}
        cert = certificate("frey.build", inputs, outcome, False)
        exc.partial = cert
        raise


def _short_coords(x) -> str:
    r = x.rational()
    if r is not None:
        return _short(r.numerator) if r.denominator == 1 else str(r)
    return f"<{len(x.coords)} coordinates>"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, int) and not isinstance(obj, bool):
        return int_to_str(obj)
    return obj


# -- bound ------------------------------------------------------------------------


def bound_exponent(s: _Session, args):
    config = bound_mod.BoundConfig(args.C_L, args.assume_modularity, args.kappa1)
    forms = load_forms(args.forms)
    model, point = s.curve.model, s.curve.point
    if s.seq.B(1) == 1:
        raise PreconditionError("B_1 = 1: the point is integral")
    short, image = to_short_model(model, point)
    tower = build_tower(short, image.x, image.y)
    support = build_support(tower, model, s.seq, s.config.silverman_start, s.config.trial_division_bound)
    report = bound_mod.assemble_bound(config, support, support.kappa, forms, s.config.trial_division_bound)
    outcome = {"support": support.summary(), "report": report.summary()}
    inputs = s.inputs(C_L=args.C_L, assume_modularity=args.assume_modularity, kappa1=args.kappa1,
                      forms=sorted(f.label for f in forms), silverman_start=s.config.silverman_start)
    lines = [
        f"kappa = {report.kappa}, kappa2 = {report.kappa2}, kappa' = {report.kappa_prime}",
        f"forms: {', '.join(f'{k}: {sorted(v.primes)}' for k, v in sorted(report.form_bounds.items())) or 'none'}",
        f"levels enumerated: {report.levels_enumerated}, without a form: {len(report.gaps)}",
        f"bound on the exponent: {report.final_bound}",
    ]
    return certificate("bound.exponent", inputs, outcome, True), lines


# -- argument parsing -------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--curve", required=True, help="curve JSON file")
    common.add_argument("--max-index", type=int, default=30)
    common.add_argument("--min-exponent", type=int, default=2)
    common.add_argument("--trial-division-bound", type=int, default=DEFAULT_TRIAL_BOUND)
    common.add_argument("--silverman-start", type=int, default=10,
                        help="index from which every term is taken to have a primitive divisor")
    common.add_argument("--cache-dir", help="term cache directory (default: $EDSPOWER_CACHE_DIR)")
    common.add_argument("--json", action="store_true", help="print the certificate as JSON")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog="edspower", description=__doc__.splitlines()[0])
    groups = parser.add_subparsers(dest="group", required=True)

    eds = groups.add_parser("eds", help="sequence terms and their properties").add_subparsers(dest="cmd", required=True)
    eds.add_parser("gen", parents=[common]).set_defaults(func=eds_gen)
    p = eds.add_parser("props", parents=[common])
    p.add_argument("--valuation-bound", type=int, default=60, help="check the valuation law for n*m up to this")
    p.set_defaults(func=eds_props)
    p = eds.add_parser("primdiv", parents=[common])
    p.add_argument("--min-index", type=int, default=5)
    p.set_defaults(func=eds_primdiv)
    eds.add_parser("powers", parents=[common]).set_defaults(func=eds_powers)
    p = eds.add_parser("kappa", parents=[common])
    p.add_argument("--exclude", default="", help="comma-separated primes forming T")
    p.set_defaults(func=eds_kappa)

    frey = groups.add_parser("frey", help="descent and Frey curve").add_subparsers(dest="cmd", required=True)
    p = frey.add_parser("build", parents=[common])
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--explain", action="store_true", help="include the full tower summary")
    p.add_argument("--frak-p", type=int, help="rational prime below the chosen prime ideal (default: from the kappa certificate)")
    p.add_argument("--ell", type=int, help="exponent to verify (default: largest prime exponent of B_n)")
    p.add_argument("--norm-bound", type=int, default=10**4)
    p.set_defaults(func=frey_build)

    bnd = groups.add_parser("bound", help="exponent bound").add_subparsers(dest="cmd", required=True)
    p = bnd.add_parser("exponent", parents=[common])
    p.add_argument("--forms", required=True, help="directory of eigenform JSON files")
    p.add_argument("--C_L", "--C-L", dest="C_L", type=int, required=True)
    p.add_argument("--assume-modularity", action=argparse.BooleanOptionalAction, default=True,
                   help="take kappa1 = 0; with --no-assume-modularity, --kappa1 is required")
    p.add_argument("--kappa1", type=int)
    p.set_defaults(func=bound_exponent)
    return parser


def main(argv=None) -> int:
    if hasattr(sys, "set_int_max_str_digits"):
        sys.set_int_max_str_digits(0)
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    session = None
    try:
        session = _Session(_config(args))
        cert, lines = args.func(session, args)
        status = 0 if cert["passed"] or args.func is bound_exponent else 1
    except EDSPowerError as exc:
        cert = getattr(exc, "partial", None)
        if args.json:
            print(dumps(cert or {"error": {"code": exc.code, "message": str(exc)}, "passed": False}))
        else:
            print(f"error ({exc.code}): {exc}", file=sys.stderr)
        return exc.exit_status
    finally:
        if session is not None:
            session.close()
    if args.json:
        print(dumps(cert))
    else:
        print("\n".join(lines))
    return status


if __name__ == "__main__":
    sys.exit(main())
