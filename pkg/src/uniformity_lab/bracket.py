"""Bracket-polynomial expressions: parse, evaluate mod 1, compare phases.

Expressions are trees of constants, variables, ``add``/``sub``/``mul``/``neg``
and the bracket operations ``floor`` and ``frac``.  The text form is a prefix
s-expression::

    (mul (const 0.3) (var n) (floor (mul (const 0.7) (var n))))

Variables ``n`` and ``h`` are integer-valued; any other variable name is a
real parameter.  Evaluation is vectorised over numpy arrays of assignments.
Floors round toward minus infinity with no guard band; the samplers below
instead redraw any point whose floor arguments come within ``FLOOR_GUARD`` of
an integer.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

MAX_NODES = 10_000
FLOOR_GUARD = 1e-6
IDENTITY_TOL = 1e-9
INTEGER_VARS = frozenset({"n", "h"})

_ARITY = {"add": None, "mul": None, "sub": 2, "neg": 1, "floor": 1, "frac": 1}


@dataclass(frozen=True)
class Expr:
    op: str
    args: tuple = ()
    value: float = 0.0
    name: str = ""

    def __add__(self, other):
        return add(self, _lift(other))

    def __radd__(self, other):
        return add(_lift(other), self)

    def __sub__(self, other):
        return sub(self, _lift(other))

    def __rsub__(self, other):
        return sub(_lift(other), self)

    def __mul__(self, other):
        return mul(self, _lift(other))

    def __rmul__(self, other):
        return mul(_lift(other), self)

    def __neg__(self):
        return neg(self)

    def __str__(self):
        return to_sexpr(self)


def _lift(x) -> Expr:
    return x if isinstance(x, Expr) else const(x)


def const(v: float) -> Expr:
    return Expr("const", value=float(v))


def var(name: str) -> Expr:
    return Expr("var", name=name)


def add(*xs: Expr) -> Expr:
    return Expr("add", tuple(xs))


def mul(*xs: Expr) -> Expr:
    return Expr("mul", tuple(xs))


def sub(a: Expr, b: Expr) -> Expr:
    return Expr("sub", (a, b))


def neg(a: Expr) -> Expr:
    return Expr("neg", (a,))


def floor(a: Expr) -> Expr:
    return Expr("floor", (a,))


def frac(a: Expr) -> Expr:
    return Expr("frac", (a,))


def node_count(expr: Expr) -> int:
    return 1 + sum(node_count(a) for a in expr.args)


def variables(expr: Expr) -> set:
    if expr.op == "var":
        return {expr.name}
    out = set()
    for a in expr.args:
        out |= variables(a)
    return out


def _check_size(expr: Expr) -> Expr:
    if node_count(expr) > MAX_NODES:
        raise ValueError(f"expression exceeds {MAX_NODES} nodes")
    return expr


# --- text form -----------------------------------------------------------------

_TOKEN = re.compile(r"\(|\)|[^\s()]+")


def parse(text: str) -> Expr:
    tokens = _TOKEN.findall(text)
    if not tokens:
        raise ValueError("empty expression")
    expr, pos = _parse_at(tokens, 0)
    if pos != len(tokens):
        raise ValueError(f"trailing tokens after expression: {' '.join(tokens[pos:])}")
    return _check_size(expr)


def _parse_at(tokens, pos):
    if tokens[pos] != "(":
        raise ValueError(f"expected '(' at token {pos}, got {tokens[pos]!r}")
    if pos + 1 >= len(tokens):
        raise ValueError("unterminated expression")
    head = tokens[pos + 1]
    pos += 2
    if head in ("const", "var"):
        if pos + 1 >= len(tokens) or tokens[pos + 1] != ")":
            raise ValueError(f"({head} ...) takes exactly one atom")
        atom = tokens[pos]
        node = const(float(atom)) if head == "const" else var(atom)
        return node, pos + 2
    if head not in _ARITY:
        raise ValueError(f"unknown operator {head!r}")
    args = []
    while pos < len(tokens) and tokens[pos] != ")":
        sub_expr, pos = _parse_at(tokens, pos)
        args.append(sub_expr)
    if pos >= len(tokens):
        raise ValueError("unbalanced parentheses")
    arity = _ARITY[head]
    if (arity is not None and len(args) != arity) or (arity is None and not args):
        raise ValueError(f"wrong number of arguments to {head}: {len(args)}")
    return Expr(head, tuple(args)), pos + 1


def to_sexpr(expr: Expr) -> str:
    if expr.op == "const":
        return f"(const {expr.value!r})"
    if expr.op == "var":
        return f"(var {expr.name})"
    return "(" + " ".join([expr.op] + [to_sexpr(a) for a in expr.args]) + ")"


# --- evaluation ----------------------------------------------------------------


def evaluate(expr: Expr, assignment: Mapping[str, object], floor_args: Optional[list] = None):
    """Evaluate in doubles.  Floor/frac arguments are appended to ``floor_args`` if given."""
    op = expr.op
    if op == "const":
        return expr.value
    if op == "var":
        try:
            return np.asarray(assignment[expr.name], dtype=float)
        except KeyError:
            raise KeyError(f"variable {expr.name!r} is unassigned") from None
    vals = [evaluate(a, assignment, floor_args) for a in expr.args]
    if op == "add":
        out = vals[0]
        for v in vals[1:]:
            out = out + v
        return out
    if op == "mul":
        out = vals[0]
        for v in vals[1:]:
            out = out * v
        return out
    if op == "sub":
        return vals[0] - vals[1]
    if op == "neg":
        return -vals[0]
    if floor_args is not None:
        floor_args.append(vals[0])
    if op == "floor":
        return np.floor(vals[0])
    if op == "frac":
        # x - floor(x) rounds to 1.0 for tiny negative x
        r = vals[0] - np.floor(vals[0])
        return np.where(r >= 1.0, 0.0, r)
    raise ValueError(f"unknown operator {op!r}")


def reduce_mod1(x):
    r = np.mod(x, 1.0)
    return np.where(r >= 1.0, 0.0, r)


def eval_mod1(expr: Expr, assignment: Mapping[str, object]):
    """Value of ``expr`` reduced into ``[0, 1)``."""
    return reduce_mod1(evaluate(expr, assignment))


def circle_distance(a, b):
    d = reduce_mod1(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))
    return np.minimum(d, 1.0 - d)


def phase_defect(lhs: Expr, rhs: Expr, assignment: Mapping[str, object]):
    """Circle distance between the two phases at an assignment."""
    return circle_distance(evaluate(lhs, assignment), evaluate(rhs, assignment))


# --- sampling and identity checks ------------------------------------------------


@dataclass(frozen=True)
class IdentityReport:
    max_defect: float
    failing_assignment: Optional[dict]
    samples: int

    def to_json(self) -> dict:
        return {
            "max_defect": self.max_defect,
            "failing_assignment": self.failing_assignment,
            "samples": self.samples,
        }


def _near_integer(x) -> np.ndarray:
    # exact integers (e.g. floor(n)) are safe; only near-misses are ambiguous
    x = np.asarray(x, dtype=float)
    dist = np.abs(x - np.round(x))
    return (dist > 0) & (dist < FLOOR_GUARD)


def sample_assignments(
    exprs,
    samples: int,
    seed: int,
    int_range: tuple = (1, 200),
    real_range: tuple = (0.0, 1.0),
    max_rounds: int = 100,
) -> dict:
    """Draw ``samples`` assignments, redrawing any that put a floor argument within the guard of an integer."""
    names = sorted(set().union(*(variables(x) for x in exprs)))
    rng = np.random.Generator(np.random.PCG64(int(seed) % 2**64))

    def draw(k):
        out = {}
        for name in names:
            if name in INTEGER_VARS:
                out[name] = rng.integers(int_range[0], int_range[1] + 1, size=k).astype(float)
            else:
                out[name] = rng.uniform(real_range[0], real_range[1], size=k)
        return out

    def bad_mask(assign):
        args: list = []
        for x in exprs:
            evaluate(x, assign, args)
        k = len(next(iter(assign.values()))) if assign else 0
        bad = np.zeros(k, dtype=bool)
        for a in args:
            bad |= np.broadcast_to(_near_integer(a), (k,))
        return bad

    assign = draw(samples)
    if not names:
        return assign
    for _ in range(max_rounds):
        bad = bad_mask(assign)
        if not bad.any():
            return assign
        fresh = draw(int(bad.sum()))
        for name in names:
            assign[name][bad] = fresh[name]
    raise RuntimeError("could not draw assignments away from floor discontinuities")


def check_phase_identity(
    lhs: Expr,
    rhs: Expr,
    samples: int,
    seed: int,
    *,
    int_range: tuple = (1, 200),
    tol: float = IDENTITY_TOL,
) -> IdentityReport:
    """Largest circle distance between ``lhs`` and ``rhs`` over random assignments."""
    if variables(lhs) != variables(rhs) and variables(lhs) and variables(rhs):
        raise ValueError(
            f"variable sets differ: {sorted(variables(lhs))} vs {sorted(variables(rhs))}"
        )
    assign = sample_assignments([lhs, rhs], samples, seed, int_range)
    defect = np.broadcast_to(phase_defect(lhs, rhs, assign), (samples,))
    worst = int(np.argmax(defect))
    max_defect = float(defect[worst])
    failing = None
    if max_defect > tol:
        failing = {k: float(v[worst]) for k, v in assign.items()}
    return IdentityReport(max_defect, failing, samples)


# --- the alpha/beta swap identity ---------------------------------------------------

ALPHA, BETA, N = var("alpha"), var("beta"), var("n")


def swap_identity_sides(sign: float, product_term: bool = True) -> tuple:
    """``alpha n floor(beta n)`` against ``-beta n floor(alpha n) + alpha beta n^2 + sign {alpha n}{beta n}``."""
    lhs = mul(ALPHA, N, floor(mul(BETA, N)))
    terms = [neg(mul(BETA, N, floor(mul(ALPHA, N)))), mul(ALPHA, BETA, N, N)]
    if product_term:
        terms.append(mul(const(sign), frac(mul(ALPHA, N)), frac(mul(BETA, N))))
    return lhs, add(*terms)


class IdentityOracleError(AssertionError):
    def __init__(self, residuals: dict):
        self.residuals = residuals
        super().__init__(f"no sign makes the swap identity hold; residuals {residuals}")


def alphab_sign_oracle(
    samples: int = 1000, seed: int = 0, product_term: bool = True, tol: float = IDENTITY_TOL
) -> tuple:
    """Find the sign of the ``{alpha n}{beta n}`` term by brute force.

    Returns ``(sign, residual)``; raises :class:`IdentityOracleError` when
    neither sign brings the residual under ``tol``.  Assignments with
    ``alpha`` or ``beta`` within ``1e-3`` of zero are excluded as degenerate.
    """
    residuals = {}
    for sign in (-1, 1):
        lhs, rhs = swap_identity_sides(sign, product_term)
        assign = sample_assignments([lhs, rhs], samples, seed, int_range=(1, 200), real_range=(1e-3, 1.0))
        residuals[sign] = float(np.max(phase_defect(lhs, rhs, assign)))
    passing = [s for s in (-1, 1) if residuals[s] <= tol]
    if not passing:
        raise IdentityOracleError(residuals)
    best = min(passing, key=lambda s: residuals[s])
    return best, residuals[best]


def load_expr(path) -> Expr:
    with open(path) as fh:
        return parse(fh.read())

