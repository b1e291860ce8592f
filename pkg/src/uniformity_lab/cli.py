"""``uniformity-lab`` command line.

Exit codes: 0 ok, 2 input error, 3 work budget exceeded, 4 internal invariant
violation.  JSON goes to stdout; CSV uses '.' decimals, '\\n' line endings and
shortest round-trip float formatting.
"""

from __future__ import annotations

import argparse
import json
import signal
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import bracket, cocycle, functions, gowers, nilsequence
from .config import DEFAULT_FIXTURES, RunConfig, resolve_threads

EXIT_OK, EXIT_INPUT, EXIT_BUDGET, EXIT_INTERNAL = 0, 2, 3, 4
TRUNCATION_MARKER = "# truncated"


class InputError(Exception):
    pass


def _fmt(x) -> str:
    return repr(float(x))


def _emit_json(doc, out) -> None:
    out.write(json.dumps(doc) + "\n")


def _emit_csv(header: Sequence[str], rows: Iterable[Sequence], out) -> None:
    """Write rows as they come; on Ctrl-C flush what exists and mark the cut."""
    out.write(",".join(header) + "\n")
    try:
        for row in rows:
            out.write(",".join(v if isinstance(v, str) else _fmt(v) if isinstance(v, float) else str(v) for v in row) + "\n")
    except KeyboardInterrupt:
        out.write(TRUNCATION_MARKER + "\n")
        out.flush()
        raise


@contextmanager
def _pool(threads: int):
    if threads <= 1:
        yield None
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        yield pool


def _load_function(path):
    try:
        return functions.load(path)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read function file {path}: {exc}") from None


def _function_rows(f):
    if isinstance(f, functions.IntervalFunction):
        points = f.domain
    else:
        points = np.arange(f.modulus)
    for p, z in zip(points, f.values):
        yield (int(p), float(z.real), float(z.imag))


# --- subcommands -----------------------------------------------------------------


def cmd_norm(args, cfg: RunConfig, out) -> int:
    """Gowers U^d norm of a function file (interval files use M = 2^d N)."""
    f = _load_function(args.file)
    if args.d < 1:
        raise InputError("--d must be >= 1")
    method = args.method
    with _pool(cfg.threads) as pool:
        kwargs = dict(budget=cfg.work_budget, pool=pool, samples=args.samples, seed=cfg.seed)
        if isinstance(f, functions.IntervalFunction):
            res = gowers.gowers_norm_interval(f, args.d, method, **kwargs)
        else:
            res = gowers.cyclic_norm(f, args.d, method, **kwargs)
    if cfg.output_format == "csv":
        _emit_csv(["value", "power_value", "d", "method", "stderr"],
                  [(res.value, res.power_value, res.d, res.method, "" if res.stderr is None else res.stderr)], out)
    else:
        _emit_json(res.to_json(), out)
    return EXIT_OK


def cmd_derivative(args, cfg: RunConfig, out) -> int:
    """Multiplicative derivative f(x+h) conj(f(x)); interval files keep their overlap window."""
    f = _load_function(args.file)
    try:
        if isinstance(f, functions.IntervalFunction):
            g = functions.mult_derivative_interval(f, args.h)
        else:
            g = functions.mult_derivative(f, args.h)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if cfg.output_format == "csv":
        _emit_csv(["n", "re", "im"], _function_rows(g), out)
    else:
        _emit_json(functions.to_json(g), out)
    return EXIT_OK


def cmd_correlate(args, cfg: RunConfig, out) -> int:
    """E_{n in [N]} f(n) conj(g(n))."""
    f, g = _load_function(args.file), _load_function(args.other)
    if not (isinstance(f, functions.IntervalFunction) and isinstance(g, functions.IntervalFunction)):
        raise InputError("correlate needs two interval function files")
    try:
        z = gowers.correlate(f, g)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    doc = {"re": z.real, "im": z.imag, "abs": abs(z)}
    if cfg.output_format == "csv":
        _emit_csv(["re", "im", "abs"], [(z.real, z.imag, abs(z))], out)
    else:
        _emit_json(doc, out)
    return EXIT_OK


def cmd_witness(args, cfg: RunConfig, out) -> int:
    """Largest Fourier coefficient, bounded below by the squared U^2 norm."""
    f = _load_function(args.file)
    if isinstance(f, functions.IntervalFunction):
        f = functions.embed_zero_extend(f, gowers.interval_modulus(f.N, 2))
    rep = gowers.u2_inverse_witness(f)
    if cfg.output_format == "csv":
        c = rep.coefficient
        _emit_csv(["frequency", "re", "im", "abs", "lower_bound"],
                  [(rep.frequency, c.real, c.imag, abs(c), rep.lower_bound)], out)
    else:
        _emit_json(rep.to_json(), out)
    return EXIT_OK


def _parse_params(items: Sequence[str]) -> dict:
    params = {}
    for item in items or ():
        for part in item.split(","):
            if not part:
                continue
            if "=" not in part:
                raise InputError(f"parameter {part!r} is not key=value")
            key, val = part.split("=", 1)
            params[key.strip()] = val.strip()
    return params


def _parse_range(text: str) -> np.ndarray:
    try:
        lo, hi = (int(x) for x in text.split(".."))
    except ValueError:
        raise InputError(f"range {text!r} must look like n0..n1") from None
    if hi < lo:
        raise InputError(f"empty range {text!r}")
    return np.arange(lo, hi + 1)


def _real(params: dict, key: str) -> float:
    if key not in params:
        raise InputError(f"missing parameter {key}")
    try:
        return float(params[key])
    except ValueError:
        raise InputError(f"parameter {key}={params[key]!r} is not a number") from None


def _pairs(params: dict) -> list:
    raw = params.get("pairs", "")
    out = []
    for chunk in filter(None, raw.split(";")):
        try:
            a, b = chunk.split(":")
            out.append((float(a), float(b)))
        except ValueError:
            raise InputError(f"pair {chunk!r} must look like alpha:beta") from None
    return out


def cmd_nil_eval(args, cfg: RunConfig, out) -> int:
    """Evaluate a nilsequence through the group over a range of n (CSV rows n,re,im)."""
    p = _parse_params(args.params)
    n = _parse_range(args.range)
    kind = args.kind
    if kind in ("bi", "semidirect", "bracket-linear") and args.h is None:
        raise InputError(f"--kind {kind} needs --h")
    if kind == "heisenberg":
        vals = nilsequence.heisenberg_nilchar(_real(p, "alpha"), _real(p, "beta"), n)
    elif kind == "bi":
        vals = nilsequence.bi_nilchar(_real(p, "alpha"), _real(p, "beta"), args.h, n)
    elif kind == "semidirect":
        vals = nilsequence.semidirect_nilchar(_real(p, "beta"), _real(p, "gamma"), _real(p, "delta"), args.h, n)
    elif kind == "bracket-linear":
        vals = nilsequence.bracket_linear_char(_real(p, "gamma"), _pairs(p), args.h, n)
    else:
        vec = nilsequence.vector_nilchar(_real(p, "alpha"), _real(p, "beta"), n)
        rows = ((int(k), float(v[0].real), float(v[0].imag), float(v[1].real), float(v[1].imag)) for k, v in zip(n, vec))
        _emit_csv(["n", "re1", "im1", "re2", "im2"], rows, out)
        return EXIT_OK
    vals = np.broadcast_to(vals, n.shape)
    _emit_csv(["n", "re", "im"], ((int(k), float(z.real), float(z.imag)) for k, z in zip(n, vals)), out)
    return EXIT_OK


def _load_expr(path):
    try:
        return bracket.load_expr(path)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read expression {path}: {exc}") from None


def cmd_bracket_check(args, cfg: RunConfig, out) -> int:
    """Max circle distance between two bracket phases over sampled n, h (and real parameters)."""
    if args.sign_oracle:
        try:
            sign, residual = bracket.alphab_sign_oracle(args.samples, cfg.seed)
            doc = {"sign": sign, "residual": residual}
        except bracket.IdentityOracleError as exc:
            _emit_json({"sign": None, "residuals": {str(k): v for k, v in exc.residuals.items()}}, out)
            return EXIT_INTERNAL
        _emit_json(doc, out)
        return EXIT_OK
    if not (args.lhs and args.rhs):
        raise InputError("bracket-check needs --lhs and --rhs (or --sign-oracle)")
    lhs, rhs = _load_expr(args.lhs), _load_expr(args.rhs)
    lo, hi = (int(x) for x in args.int_range.split(".."))
    try:
        rep = bracket.check_phase_identity(lhs, rhs, args.samples, cfg.seed, int_range=(lo, hi))
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if cfg.output_format == "csv":
        _emit_csv(["max_defect", "failing"], [(rep.max_defect, json.dumps(rep.failing_assignment).replace(",", ";"))], out)
    else:
        _emit_json(rep.to_json(), out)
    return EXIT_OK


def _build_family(args, cfg: RunConfig):
    if args.family == "lemma2":
        N = args.N
        return None if args.no_align else functions.phase_poly_function(
            functions.PhasePolynomial((0.0, 0.0, args.alpha)), N), cocycle.lemma2_family(args.alpha, N)
    if args.family == "random":
        return None, cocycle.random_family(args.N, cfg.seed)
    if args.family == "coboundary":
        if not args.theta:
            raise InputError("--family coboundary needs --theta FILE")
        theta = _load_function(args.theta)
        if not isinstance(theta, functions.IntervalFunction):
            raise InputError("--theta must be an interval function")
        try:
            return None, cocycle.coboundary_family(theta)
        except ValueError as exc:
            raise InputError(str(exc)) from None
    if args.family == "file":
        return None, _load_family(args.family_file)
    raise InputError(f"unknown family {args.family}")


def _load_family(path):
    if not path:
        raise InputError("--family file needs --family-file")
    try:
        with open(path) as fh:
            return cocycle.HFamily.from_json(json.load(fh))
    except (OSError, ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read family file {path}: {exc}") from None


def cmd_quadruples(args, cfg: RunConfig, out) -> int:
    """Additive-quadruple scan: fraction of quadruples whose windowed statistic reaches c."""
    f, fam = _build_family(args, cfg)
    budget = cocycle.ScanBudget(max_enumerate=args.max_enumerate, samples=args.samples, seed=cfg.seed)
    want_rows = cfg.output_format == "csv" or args.csv
    result = cocycle.quadruple_scan(f, fam, args.c, budget, records=bool(want_rows))
    stats, recs = result if want_rows else (result, None)
    summary = stats.to_json()
    rows = None
    if recs is not None:
        rows = zip(recs.h.tolist(), recs.a.tolist(), recs.b.tolist(), recs.statistic.tolist(), recs.window.tolist())
    header = ["h", "a", "b", "statistic", "window"]
    if cfg.output_format == "csv":
        _emit_csv(header, rows, out)
        _emit_json(summary, sys.stderr)
    else:
        if args.csv:
            with open(args.csv, "w", newline="\n") as fh:
                _emit_csv(header, rows, fh)
        _emit_json(summary, out)
    return EXIT_OK


def cmd_fw_experiment(args, cfg: RunConfig, out) -> int:
    """Means of chi1 chi2 conj(chi3 chi4) for independent random Heisenberg frequencies."""
    means = cocycle.fw_trials(args.trials, args.N, cfg.seed)
    mags = np.abs(means)
    summary = {
        "trials": args.trials,
        "N": args.N,
        "threshold": args.threshold,
        "within_threshold": int(np.sum(mags <= args.threshold)),
        "max_abs": float(mags.max()),
    }
    rows = ((t, float(z.real), float(z.imag), float(abs(z))) for t, z in enumerate(means))
    if cfg.output_format == "csv":
        _emit_csv(["trial", "re", "im", "abs"], rows, out)
        _emit_json(summary, sys.stderr)
    else:
        if args.csv:
            with open(args.csv, "w", newline="\n") as fh:
                _emit_csv(["trial", "re", "im", "abs"], rows, fh)
        _emit_json(summary, out)
    return EXIT_OK


def cmd_integrate(args, cfg: RunConfig, out) -> int:
    """Integrate a shift family: theta(n) = chi_{n-1}(1), with cocycle and integration residuals."""
    if args.theta:
        theta0 = _load_function(args.theta)
        if not isinstance(theta0, functions.IntervalFunction):
            raise InputError("--theta must be an interval function")
        try:
            fam = cocycle.coboundary_family(theta0)
        except ValueError as exc:
            raise InputError(str(exc)) from None
    else:
        fam = _load_family(args.family_file)
    try:
        theta, residual = cocycle.integrate_cocycle(fam)
    except cocycle.MissingShiftError as exc:
        raise InputError(str(exc)) from None
    doc = {
        "N": fam.N,
        "integration_residual": residual,
        "cocycle_residual": cocycle.verify_cocycle(fam),
        "theta": functions.to_json(theta),
    }
    if cfg.output_format == "csv":
        _emit_csv(["n", "re", "im"], _function_rows(theta), out)
    else:
        _emit_json(doc, out)
    return EXIT_OK


# --- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="64-bit RNG seed (default 0)")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads; overrides $UNIFORMITY_LAB_THREADS (default: CPU count)")
    common.add_argument("--format", choices=("json", "csv"), default="json", help="output format")
    common.add_argument("--budget", type=int, default=gowers.DEFAULT_WORK_BUDGET,
                        help="work budget in elementary operations (default 1e10)")
    common.add_argument("--fixtures", type=Path, default=DEFAULT_FIXTURES,
                        help="frozen-constants JSON file used by the acceptance suite")

    parser = argparse.ArgumentParser(prog="uniformity-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("norm", parents=[common], help="Gowers U^d norm",
                       description="||f||_{U^d} = (E_{x,h_1..h_d} Delta_{h_1}..Delta_{h_d} f(x))^{1/2^d}. "
                                   "Interval files {N, values} are zero-extended to Z/(2^d N)Z and divided by "
                                   "the norm of the indicator of [N]. Values are dimensionless.")
    p.add_argument("--file", required=True, help="function JSON {N|modulus, values: [[re, im], ...]}")
    p.add_argument("--d", type=int, required=True, help="order d >= 1")
    p.add_argument("--method", choices=("direct", "recursive", "fft", "sampled"), default="recursive")
    p.add_argument("--samples", type=int, default=10**5, help="samples for --method sampled")
    p.set_defaults(func=cmd_norm)

    p = sub.add_parser("derivative", parents=[common], help="multiplicative derivative",
                       description="Delta_h f(x) = f(x+h) conj(f(x)); for interval files the result lives on "
                                   "the window where both x and x+h lie in [N] and carries its offset.")
    p.add_argument("--file", required=True)
    p.add_argument("--h", type=int, required=True, help="integer shift")
    p.set_defaults(func=cmd_derivative)

    p = sub.add_parser("correlate", parents=[common], help="correlation of two interval functions",
                       description="E_{n in [N]} f(n) conj(g(n)), a complex number of modulus <= 1.")
    p.add_argument("--file", required=True)
    p.add_argument("--other", required=True)
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("witness", parents=[common], help="U^2 inverse witness",
                       description="Frequency xi maximising |f^(xi)|, f^(xi) = E_x f(x) e(-x xi/M); "
                                   "|f^(xi)| >= ||f||_{U^2}^2 for functions into the unit disc. Interval files "
                                   "are zero-extended to Z/4NZ.")
    p.add_argument("--file", required=True)
    p.set_defaults(func=cmd_witness)

    p = sub.add_parser("nil-eval", parents=[common], help="evaluate a nilsequence",
                       description="Group-path evaluation on the Heisenberg nilmanifold with F((x,y,z)Gamma) = e(-z). "
                                   "heisenberg: e(alpha n floor(beta n)); bi: e(alpha n floor(beta h)); "
                                   "semidirect: e(gamma {delta h} n floor(beta n)); bracket-linear: "
                                   "e(gamma n) prod e(alpha_j n floor(beta_j h)) with pairs=a1:b1;a2:b2; "
                                   "vector: the two-component continuous version with a smoothstep partition of unity. "
                                   "Scalar outputs are piecewise continuous.")
    p.add_argument("--kind", required=True, choices=("heisenberg", "bi", "semidirect", "vector", "bracket-linear"))
    p.add_argument("--params", nargs="+", default=[], help="key=value pairs, e.g. alpha=0.3 beta=0.7")
    p.add_argument("--range", required=True, help="n0..n1 inclusive")
    p.add_argument("--h", type=int, default=None)
    p.set_defaults(func=cmd_nil_eval)

    p = sub.add_parser("bracket-check", parents=[common], help="numerical bracket phase identity check",
                       description="Max circle distance (on R/Z) between two s-expression phases over sampled "
                                   "integer n, h and real parameters in [0, 1). --sign-oracle instead determines the "
                                   "sign of {alpha n}{beta n} in alpha n floor(beta n) = -beta n floor(alpha n) "
                                   "+ alpha beta n^2 +- {alpha n}{beta n} mod 1.")
    p.add_argument("--lhs")
    p.add_argument("--rhs")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--int-range", default="1..200", help="range for n and h")
    p.add_argument("--sign-oracle", action="store_true")
    p.set_defaults(func=cmd_bracket_check)

    p = sub.add_parser("quadruples", parents=[common], help="additive-quadruple statistic scan",
                       description="For h1=h, h2=h+a+b, h3=h+a, h4=h+b computes "
                                   "|E_n chi_{h1}(n) chi_{h2}(n-b) conj(chi_{h3}(n) chi_{h4}(n-b))| over the common "
                                   "window and counts those >= c. Windows shorter than N/4 are skipped. "
                                   "Families: lemma2 (chi_h(n)=e(2 alpha h n), aligned against e(alpha n^2)), "
                                   "random (i.i.d. unimodular), coboundary (Delta_h theta), file (family JSON).")
    p.add_argument("--family", choices=("lemma2", "random", "coboundary", "file"), default="lemma2")
    p.add_argument("--N", type=int, default=256)
    p.add_argument("--alpha", type=float, default=(5**0.5 - 1) / 2)
    p.add_argument("--theta", help="interval function file for --family coboundary")
    p.add_argument("--family-file", help="family JSON {N, chi: {h: [[re, im], ...]}}")
    p.add_argument("--c", type=float, default=0.5, help="statistic threshold")
    p.add_argument("--samples", type=int, default=cocycle.SCAN_SAMPLES)
    p.add_argument("--max-enumerate", type=int, default=cocycle.MAX_ENUMERATE)
    p.add_argument("--no-align", action="store_true", help="skip phase alignment against f")
    p.add_argument("--csv", help="also write per-quadruple rows to this path")
    p.set_defaults(func=cmd_quadruples)

    p = sub.add_parser("fw-experiment", parents=[common], help="Furstenberg-Weiss mean experiment",
                       description="Per trial draws eight uniform frequencies (alpha_j, beta_j) and reports "
                                   "E_{n in [N]} chi_1 chi_2 conj(chi_3 chi_4)(n) with chi_j = e(alpha_j n floor(beta_j n)).")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--N", type=int, default=10**4)
    p.add_argument("--threshold", type=float, default=0.1)
    p.add_argument("--csv", help="also write per-trial rows to this path")
    p.set_defaults(func=cmd_fw_experiment)

    p = sub.add_parser("integrate", parents=[common], help="integrate a cocycle family",
                       description="theta(n) = chi_{n-1}(1) for n in [N]; reports max |theta(n+h) - theta(n) chi_h(n)| "
                                   "and the cocycle residual max |chi_{h+k}(n) - chi_h(n) chi_k(n+h)|.")
    p.add_argument("--family-file", help="family JSON {N, chi: {h: [[re, im], ...]}}")
    p.add_argument("--theta", help="build the coboundary family of this interval function instead")
    p.set_defaults(func=cmd_integrate)
    return parser


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig(seed=args.seed, threads=resolve_threads(args.threads), work_budget=args.budget,
                        output_format=args.format, fixtures_path=args.fixtures)
        return args.func(args, cfg, out)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except gowers.WorkBudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except gowers.InternalInvariantError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except KeyboardInterrupt:
        out.flush()
        return 128 + signal.SIGINT


if __name__ == "__main__":
    sys.exit(main())
