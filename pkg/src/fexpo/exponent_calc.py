"""Symbolic exponents: piecewise-affine functions of the Hurst index H.

Expressions are trees of affine leaves ``a + b*H`` (rational a, b) combined by
sums, maxima and minima. Every expression has an exact canonical form, a
continuous piecewise-affine function on the closed interval [1/2, 3/4] with
rational breakpoints, so symbolic equality and pointwise order are decidable.
"""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence, Union

import numpy as np

from . import graph_core as gc
from .errors import AssumptionViolated, DomainError, TSetInvalid, ValidationError

H_LO = Fraction(1, 2)
H_HI = Fraction(3, 4)

Number = Union[int, Fraction]


@dataclass(frozen=True)
class HurstParam:
    H: float

    def __post_init__(self):
        if not (0.5 < self.H < 0.75):
            raise DomainError(f"H={self.H} must lie in (1/2, 3/4)")

    @property
    def alpha_H(self) -> float:
        return self.H * (2 * self.H - 1)


def check_hurst(H: float) -> float:
    return HurstParam(float(H)).H


# -- canonical form --------------------------------------------------------

def _fmt_frac(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def format_affine(a: Fraction, b: Fraction) -> str:
    if b == 0:
        return _fmt_frac(a)
    coef = "" if abs(b) == 1 else _fmt_frac(abs(b))
    hterm = f"{coef}H"
    if b > 0:
        if a == 0:
            return hterm
        sign = "+" if a > 0 else "-"
        return f"{hterm}{sign}{_fmt_frac(abs(a))}"
    if a == 0:
        return f"-{hterm}"
    return f"{_fmt_frac(a)}-{hterm}"


@dataclass(frozen=True)
class PiecewiseAffine:
    """Continuous piecewise-affine function on [1/2, 3/4].

    ``breaks`` has one more entry than ``pieces``; piece ``i`` is ``a + b*H``
    on ``[breaks[i], breaks[i+1]]``. Adjacent equal pieces are always merged,
    so two instances are equal iff they describe the same function.
    """

    breaks: tuple[Fraction, ...]
    pieces: tuple[tuple[Fraction, Fraction], ...]

    @staticmethod
    def affine(a: Number, b: Number = 0) -> "PiecewiseAffine":
        return PiecewiseAffine((H_LO, H_HI), ((Fraction(a), Fraction(b)),))

    @staticmethod
    def _build(breaks: list[Fraction], pieces: list[tuple[Fraction, Fraction]]) -> "PiecewiseAffine":
        nb, npcs = [breaks[0]], []
        for i, p in enumerate(pieces):
            if npcs and npcs[-1] == p:
                nb[-1] = breaks[i + 1]
            else:
                npcs.append(p)
                nb.append(breaks[i + 1])
        return PiecewiseAffine(tuple(nb), tuple(npcs))

    def _refine(self, breaks: Sequence[Fraction]) -> list[tuple[Fraction, Fraction]]:
        out, i = [], 0
        for lo in breaks[:-1]:
            while self.breaks[i + 1] <= lo:
                i += 1
            out.append(self.pieces[i])
        return out

    def _common(self, other: "PiecewiseAffine"):
        breaks = sorted(set(self.breaks) | set(other.breaks))
        return breaks, self._refine(breaks), other._refine(breaks)

    def __add__(self, other: "PiecewiseAffine") -> "PiecewiseAffine":
        breaks, p, q = self._common(other)
        return self._build(breaks, [(a1 + a2, b1 + b2) for (a1, b1), (a2, b2) in zip(p, q)])

    def scale(self, k: Number) -> "PiecewiseAffine":
        k = Fraction(k)
        return self._build(list(self.breaks), [(k * a, k * b) for a, b in self.pieces])

    def __neg__(self) -> "PiecewiseAffine":
        return self.scale(-1)

    def __sub__(self, other: "PiecewiseAffine") -> "PiecewiseAffine":
        return self + (-other)

    def _extremum(self, other: "PiecewiseAffine", pick_max: bool) -> "PiecewiseAffine":
        breaks, p, q = self._common(other)
        nb: list[Fraction] = [breaks[0]]
        npcs: list[tuple[Fraction, Fraction]] = []
        for lo, hi, f, g in zip(breaks[:-1], breaks[1:], p, q):
            cuts = [lo]
            if f[1] != g[1]:
                root = (g[0] - f[0]) / (f[1] - g[1])
                if lo < root < hi:
                    cuts.append(root)
            cuts.append(hi)
            for l, r in zip(cuts[:-1], cuts[1:]):
                mid = (l + r) / 2
                fv, gv = f[0] + f[1] * mid, g[0] + g[1] * mid
                npcs.append(f if (fv >= gv) == pick_max else g)
                nb.append(r)
        return self._build(nb, npcs)

    def maximum(self, other: "PiecewiseAffine") -> "PiecewiseAffine":
        return self._extremum(other, True)

    def minimum(self, other: "PiecewiseAffine") -> "PiecewiseAffine":
        return self._extremum(other, False)

    def at(self, h: Fraction) -> Fraction:
        """Exact value at a rational point of [1/2, 3/4]."""
        for lo, hi, (a, b) in zip(self.breaks, self.breaks[1:], self.pieces):
            if lo <= h <= hi:
                return a + b * h
        raise DomainError(f"H={h} outside [1/2, 3/4]")

    def evaluate(self, H):
        Harr = np.asarray(H, dtype=float)
        edges = np.array([float(x) for x in self.breaks[1:-1]])
        idx = np.searchsorted(edges, Harr, side="right")
        a = np.array([float(p[0]) for p in self.pieces])
        b = np.array([float(p[1]) for p in self.pieces])
        out = a[idx] + b[idx] * Harr
        return float(out) if np.ndim(out) == 0 else out

    def le(self, other: "PiecewiseAffine") -> bool:
        """Pointwise ``self <= other`` on the whole interval (checked exactly)."""
        diff = other - self
        return all(diff.at(x) >= 0 for x in diff.breaks)

    def is_convex(self) -> bool:
        return all(p[1] <= q[1] for p, q in zip(self.pieces, self.pieces[1:]))

    def is_concave(self) -> bool:
        return all(p[1] >= q[1] for p, q in zip(self.pieces, self.pieces[1:]))

    def render(self) -> str:
        strs = [format_affine(a, b) for a, b in self.pieces]
        if len(strs) == 1:
            return strs[0]
        if self.is_convex():
            return f"max({', '.join(strs)})"
        if self.is_concave():
            return f"min({', '.join(strs)})"
        segs = [f"[{_fmt_frac(lo)},{_fmt_frac(hi)}]: {s}"
                for lo, hi, s in zip(self.breaks, self.breaks[1:], strs)]
        return "piecewise(" + "; ".join(segs) + ")"

    def __str__(self) -> str:
        return self.render()


# -- expression tree -------------------------------------------------------

class Expr:
    """Base class of exponent expressions."""

    def canonical(self) -> PiecewiseAffine:  # pragma: no cover - abstract
        raise NotImplementedError

    def evaluate(self, H):  # pragma: no cover - abstract
        raise NotImplementedError

    def render(self) -> str:  # pragma: no cover - abstract
        raise NotImplementedError

    def __str__(self) -> str:
        return self.render()

    def __add__(self, other) -> "Expr":
        return Sum((self, as_expr(other)))

    def __radd__(self, other) -> "Expr":
        return Sum((as_expr(other), self))

    def __sub__(self, other) -> "Expr":
        return Sum((self, Scale(Fraction(-1), as_expr(other))))

    def __rsub__(self, other) -> "Expr":
        return Sum((as_expr(other), Scale(Fraction(-1), self)))

    def __neg__(self) -> "Expr":
        return Scale(Fraction(-1), self)

    def __mul__(self, k) -> "Expr":
        if not isinstance(k, (int, Fraction)):
            return NotImplemented
        return Scale(Fraction(k), self)

    __rmul__ = __mul__

    def equals(self, other) -> bool:
        """Symbolic equality on (1/2, 3/4)."""
        return self.canonical() == as_expr(other).canonical()

    def le(self, other) -> bool:
        """Pointwise ``self <= other`` on (1/2, 3/4)."""
        return self.canonical().le(as_expr(other).canonical())


@dataclass(frozen=True, eq=True)
class Affine(Expr):
    a: Fraction = Fraction(0)
    b: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "a", Fraction(self.a))
        object.__setattr__(self, "b", Fraction(self.b))

    def canonical(self) -> PiecewiseAffine:
        return PiecewiseAffine.affine(self.a, self.b)

    def evaluate(self, H):
        if np.ndim(H):
            return float(self.a) + float(self.b) * np.asarray(H, dtype=float)
        return float(self.a) + float(self.b) * float(H)

    def render(self) -> str:
        return format_affine(self.a, self.b)


@dataclass(frozen=True, eq=True)
class Sum(Expr):
    terms: tuple[Expr, ...]

    @cached_property
    def _canon(self) -> PiecewiseAffine:
        out = PiecewiseAffine.affine(0)
        for t in self.terms:
            out = out + t.canonical()
        return out

    def canonical(self) -> PiecewiseAffine:
        return self._canon

    def evaluate(self, H):
        return sum(t.evaluate(H) for t in self.terms)

    def render(self) -> str:
        return " + ".join(f"({t.render()})" if isinstance(t, Sum) else t.render() for t in self.terms)


@dataclass(frozen=True, eq=True)
class Scale(Expr):
    k: Fraction
    term: Expr

    def canonical(self) -> PiecewiseAffine:
        return self.term.canonical().scale(self.k)

    def evaluate(self, H):
        return float(self.k) * self.term.evaluate(H)

    def render(self) -> str:
        if self.k == -1:
            return f"-({self.term.render()})"
        return f"{_fmt_frac(self.k)}*({self.term.render()})"


@dataclass(frozen=True, eq=True)
class Max(Expr):
    terms: tuple[Expr, ...]

    def canonical(self) -> PiecewiseAffine:
        out = self.terms[0].canonical()
        for t in self.terms[1:]:
            out = out.maximum(t.canonical())
        return out

    def evaluate(self, H):
        vals = [t.evaluate(H) for t in self.terms]
        return np.max(vals, axis=0) if np.ndim(H) else max(vals)

    def render(self) -> str:
        return f"max({', '.join(t.render() for t in self.terms)})"


@dataclass(frozen=True, eq=True)
class Min(Expr):
    terms: tuple[Expr, ...]

    def canonical(self) -> PiecewiseAffine:
        out = self.terms[0].canonical()
        for t in self.terms[1:]:
            out = out.minimum(t.canonical())
        return out

    def evaluate(self, H):
        vals = [t.evaluate(H) for t in self.terms]
        return np.min(vals, axis=0) if np.ndim(H) else min(vals)

    def render(self) -> str:
        return f"min({', '.join(t.render() for t in self.terms)})"


@dataclass(frozen=True, eq=True)
class Canon(Expr):
    """Wraps an already canonical function as an expression."""

    pa: PiecewiseAffine

    def canonical(self) -> PiecewiseAffine:
        return self.pa

    def evaluate(self, H):
        return self.pa.evaluate(H)

    def render(self) -> str:
        return self.pa.render()


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, PiecewiseAffine):
        return Canon(x)
    if isinstance(x, (int, Fraction)):
        return Affine(Fraction(x), Fraction(0))
    if isinstance(x, str):
        return parse_expr(x)
    raise TypeError(f"cannot interpret {x!r} as an exponent")


def const(a: Number) -> Affine:
    return Affine(Fraction(a), Fraction(0))


def affine(a: Number, b: Number) -> Affine:
    return Affine(Fraction(a), Fraction(b))


def vmax(*xs) -> Expr:
    return Max(tuple(as_expr(x) for x in xs))


def vmin(*xs) -> Expr:
    return Min(tuple(as_expr(x) for x in xs))


def simplify(e: Expr) -> Expr:
    """Canonical form wrapped back into an expression (renders compactly)."""
    return Canon(as_expr(e).canonical())


# -- parsing ---------------------------------------------------------------

_IMPLICIT_MUL = re.compile(r"(\d|\))\s*(H|\()")


def parse_expr(text: str) -> Expr:
    """Parse strings such as ``"4H-1"``, ``"6H-5/2"``, ``"max(1-4H, -2)"`` or ``"(-1/2) ∨ (4H-3)"``.

    ``∨`` / ``∧`` bind looser than ``+`` and ``-``, like Python's ``|`` / ``&``.
    """
    src = text.replace("∨", "|").replace("∧", "&").strip()
    src = _IMPLICIT_MUL.sub(r"\1*\2", src)
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as exc:
        raise ValidationError(f"cannot parse exponent {text!r}") from exc
    return _from_ast(tree.body, text)


def _from_ast(node: ast.AST, text: str) -> Expr:
    if isinstance(node, ast.Constant) and isinstance(node.value, int):
        return const(node.value)
    if isinstance(node, ast.Name) and node.id == "H":
        return affine(0, 1)
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        inner = _from_ast(node.operand, text)
        return _fold(-inner) if isinstance(node.op, ast.USub) else inner
    if isinstance(node, ast.BinOp):
        left, right = _from_ast(node.left, text), _from_ast(node.right, text)
        if isinstance(node.op, ast.Add):
            return _fold(Sum((left, right)))
        if isinstance(node.op, ast.Sub):
            return _fold(Sum((left, -right)))
        if isinstance(node.op, ast.BitOr):
            return Max((left, right))
        if isinstance(node.op, ast.BitAnd):
            return Min((left, right))
        if isinstance(node.op, (ast.Mult, ast.Div)):
            lc, rc = _const_value(left), _const_value(right)
            if isinstance(node.op, ast.Div):
                if rc is None or rc == 0:
                    raise ValidationError(f"division by a non-constant in {text!r}")
                return _fold(Scale(1 / rc, left))
            if lc is not None:
                return _fold(Scale(lc, right))
            if rc is not None:
                return _fold(Scale(rc, left))
            raise ValidationError(f"nonlinear product in {text!r}")
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in ("max", "min"):
        args = tuple(_from_ast(a, text) for a in node.args)
        if not args:
            raise ValidationError(f"empty {node.func.id}() in {text!r}")
        return Max(args) if node.func.id == "max" else Min(args)
    raise ValidationError(f"unsupported syntax in exponent {text!r}")


def _const_value(e: Expr) -> Fraction | None:
    if isinstance(e, Affine) and e.b == 0:
        return e.a
    return None


def _fold(e: Expr) -> Expr:
    """Collapse affine-only subtrees so parsed leaves stay readable."""
    pa = e.canonical()
    if len(pa.pieces) == 1 and not _has_extremum(e):
        a, b = pa.pieces[0]
        return Affine(a, b)
    return e


def _has_extremum(e: Expr) -> bool:
    if isinstance(e, (Max, Min)):
        return True
    if isinstance(e, Sum):
        return any(_has_extremum(t) for t in e.terms)
    if isinstance(e, Scale):
        return _has_extremum(e.term)
    return False


# -- auxiliary exponent functions -----------------------------------------

def phi_H(I: int) -> Expr:
    """``-1/2 + ((1/2 - H) I) v (-1/2)`` for ``I >= 2``."""
    if I < 2:
        raise DomainError(f"phi_H needs I >= 2, got {I}")
    return const(Fraction(-1, 2)) + vmax(affine(Fraction(I, 2), -I), Fraction(-1, 2))


def e2_plus(I: int) -> Expr:
    if I < 2:
        raise DomainError(f"e2_plus needs I >= 2, got {I}")
    return const(2 - I) + 2 * phi_H(I)


def e2_minus(I: int) -> Expr:
    if I < 1:
        raise DomainError(f"e2_minus needs I >= 1, got {I}")
    return const(2 - I - 1) + phi_H(2 * I)


def delta_H(k: int) -> Expr:
    if k < 1:
        raise DomainError(f"delta_H needs k >= 1, got {k}")
    return 2 * phi_H(k + 1) - phi_H(2 * k) - phi_H(2)


def delta_H_closed(k: int) -> PiecewiseAffine:
    """Closed three-regime form of ``delta_H(k)`` written directly in H.

    Zero while ``k <= 1/(2(2H-1))``, equal to ``1/2 + (1-2H)k`` up to
    ``k = (2-2H)/(2H-1)``, and ``2H - 3/2`` beyond.
    """
    if k < 1:
        raise DomainError(f"delta_H needs k >= 1, got {k}")
    h1 = H_LO + Fraction(1, 4 * k)          # k = 1/(2(2H-1))
    h2 = Fraction(k + 2, 2 * k + 2)          # k = (2-2H)/(2H-1)
    cuts = [H_LO] + [h for h in (h1, h2) if H_LO < h < H_HI] + [H_HI]
    pieces = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        mid = (lo + hi) / 2
        if mid <= h1:
            pieces.append((Fraction(0), Fraction(0)))
        elif mid <= h2:
            pieces.append((Fraction(1, 2) + k, Fraction(-2 * k)))
        else:
            pieces.append((Fraction(-3, 2), Fraction(2)))
    return PiecewiseAffine._build(cuts, pieces)


# -- first exponent --------------------------------------------------------

def first_case(c: gc.WeightedGraph) -> str:
    """``"a"`` or ``"b"`` for components with ``s >= 2`` (parity / max-weight test)."""
    st = gc.stats(c)
    if st.q_bar % 2 == 1:
        return "a"
    return "a" if 2 * max(c.q.values()) > st.q_bar else "b"


def first_exponent_component(c: gc.WeightedGraph) -> Expr:
    st = gc.stats(c)
    if st.s <= 1:
        return const(2 - st.I - st.s)
    if first_case(c) == "a":
        # (2-I) - 1 + (1/2-2H) - H(s-2)
        return affine(Fraction(3, 2) - st.I, -st.s)
    # (2-I) + 2(1/2-2H) - H(s-2)
    return affine(3 - st.I, -2 - st.s)


def first_exponent(alpha, g: gc.WeightedGraph) -> Expr:
    terms = [as_expr(alpha)] + [first_exponent_component(c) for c in gc.components(g)]
    return Sum(tuple(terms))


# -- second exponent -------------------------------------------------------

def second_exponent_component(c: gc.WeightedGraph) -> Expr:
    if not gc.satisfies_assumption_connected(c):
        raise AssumptionViolated(f"component {sorted(c.id)} violates the structural assumption")
    st = gc.stats(c)
    if st.s <= 1:
        return const(2 - st.I - st.s)
    if st.I == 1:
        return e2_minus(1)
    return e2_plus(st.I)


def t_exponent_component(c: gc.WeightedGraph) -> Expr:
    return e2_minus(gc.stats(c).I)


def two_weight_components(g: gc.WeightedGraph, min_size: int = 2) -> list[gc.WeightedGraph]:
    """Components with ``s = 2``, ``q_bar = 2`` and at least ``min_size`` vertices."""
    out = []
    for c in gc.components(g):
        st = gc.stats(c)
        if st.s == 2 and st.q_bar == 2 and st.I >= min_size:
            out.append(c)
    return out


def validate_t_set(g: gc.WeightedGraph, t_set: Iterable[frozenset[int]]) -> frozenset[frozenset[int]]:
    allowed = {c.id for c in two_weight_components(g, 2)}
    ts = frozenset(frozenset(t) for t in t_set)
    bad = [sorted(t) for t in ts if t not in allowed]
    if bad:
        raise TSetInvalid(f"T-set entries {bad} are not path components with weighted ends")
    return ts


def second_exponent(alpha, g: gc.WeightedGraph, t_set: Iterable[frozenset[int]] = ()) -> Expr:
    if not gc.satisfies_assumption_graph(g):
        raise AssumptionViolated("graph violates the structural assumption")
    ts = validate_t_set(g, t_set)
    terms = [as_expr(alpha)]
    for c in gc.components(g):
        terms.append(t_exponent_component(c) if c.id in ts else second_exponent_component(c))
    return Sum(tuple(terms))


def h_grid(points: int = 50) -> np.ndarray:
    """Interior grid of the admissible Hurst range."""
    return np.linspace(0.5, 0.75, points + 2)[1:-1]
