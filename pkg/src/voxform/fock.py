"""Truncated rank-1 free-boson Fock space with mode algebra and fields.

Basis states are integer partitions: (n1 >= n2 >= ... >= nk >= 1) stands for
a(-n1)...a(-nk)|0>, the empty partition for the vacuum.  The oscillator
relations are [a(m), a(n)] = m*delta_{m+n,0} and a(n)|0> = 0 for n >= 0.

Fields of composite states follow the normal-ordering recursion: for
v = a(-n)u,

    v(k) = sum_{m<=-1} c(n,m) a(m) u(k-m-n) + sum_{m>=0} c(n,m) u(k-m-n) a(m),

with c(n,m) = (-1)^(n-1) * binom(m+n-1, n-1), i.e. the field of v is the
normally ordered product of d^(n-1)a(z)/(n-1)! with the field of u.  For a
single mode with fixed in/out weights this is exact on the truncated space:
the creation part only passes through weights strictly below the output
weight, so no truncated component is ever needed.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

from .scalars import ExactScalar, VoxformError, ZERO, ONE

__all__ = [
    "Partition",
    "GradedVector",
    "VOAContext",
    "SparseOperator",
    "build_heisenberg",
    "partitions_of",
    "vacuum",
    "generator_state",
    "conformal_state",
    "apply_a",
    "apply_mode",
    "apply_field",
    "apply_field_transpose",
    "apply_translation",
    "apply_translation_transpose",
    "virasoro_apply",
    "virasoro_transpose",
    "matrix_element",
    "multi_matrix_element",
    "vertex_mode",
    "virasoro_mode",
    "check_axioms",
    "field_on_vacuum_series",
    "CheckResult",
    "PoleAtOrigin",
    "OutOfRegion",
    "CutoffOverflow",
    "weight",
]


class PoleAtOrigin(VoxformError):
    """A vertex operator was evaluated at z = 0."""


class OutOfRegion(VoxformError):
    """Points violate the convergence region of the requested expansion."""


class CutoffOverflow(VoxformError):
    """An exact operation needs weight head-room beyond the stored cutoff."""


Partition = tuple[int, ...]


def weight(p: Partition) -> int:
    return sum(p)


def partitions_of(n: int) -> list[Partition]:
    """All partitions of n, largest part first within each, reverse-lex order."""
    return list(_partitions_cached(n))


@lru_cache(maxsize=None)
def _partitions_cached(n: int) -> tuple[Partition, ...]:
    if n < 0:
        return ()
    if n == 0:
        return ((),)
    out: list[Partition] = []

    def rec(remaining: int, maxpart: int, prefix: list[int]):
        if remaining == 0:
            out.append(tuple(prefix))
            return
        for part in range(min(remaining, maxpart), 0, -1):
            prefix.append(part)
            rec(remaining - part, part, prefix)
            prefix.pop()

    rec(n, n, [])
    return tuple(out)


class GradedVector:
    """Sparse vector over the partition basis with ExactScalar coefficients.

    Also used for elements of the graded dual (coefficients against the dual
    basis of the same partitions); the canonical pairing is then the
    coefficientwise bilinear sum.
    """

    __slots__ = ("components",)

    def __init__(self, components: dict[Partition, ExactScalar] | None = None):
        self.components: dict[Partition, ExactScalar] = {}
        if components:
            for p, c in components.items():
                if not hasattr(c, "is_zero"):  # ring elements pass through
                    c = ExactScalar.coerce(c)
                if not c.is_zero():
                    self.components[tuple(p)] = c

    @staticmethod
    def basis(p: Partition) -> "GradedVector":
        return GradedVector({tuple(p): ONE})

    def copy(self) -> "GradedVector":
        v = GradedVector()
        v.components = dict(self.components)
        return v

    def add_into(self, other: "GradedVector") -> None:
        """In-place accumulation; used by the evaluators."""
        acc = self.components
        for p, c in other.components.items():
            s = acc.get(p)
            s = c if s is None else s + c
            if s.is_zero():
                acc.pop(p, None)
            else:
                acc[p] = s

    def __add__(self, other: "GradedVector") -> "GradedVector":
        out = self.copy()
        out.add_into(other)
        return out

    def __sub__(self, other: "GradedVector") -> "GradedVector":
        return self + other.scale(ExactScalar(-1))

    def scale(self, s) -> "GradedVector":
        s = ExactScalar.coerce(s)
        if s.is_zero():
            return GradedVector()
        v = GradedVector()
        v.components = {p: c * s for p, c in self.components.items()}
        return v

    def is_zero(self) -> bool:
        return not self.components

    def coefficient(self, p: Partition) -> ExactScalar:
        return self.components.get(tuple(p), ZERO)

    def weights(self) -> set[int]:
        return {weight(p) for p in self.components}

    def max_weight(self) -> int:
        return max((weight(p) for p in self.components), default=0)

    def project(self, w: int) -> "GradedVector":
        v = GradedVector()
        v.components = {p: c for p, c in self.components.items() if weight(p) == w}
        return v

    def truncate(self, level: int) -> "GradedVector":
        v = GradedVector()
        v.components = {p: c for p, c in self.components.items() if weight(p) <= level}
        return v

    def is_homogeneous(self) -> bool:
        return len(self.weights()) <= 1

    def pair(self, other: "GradedVector") -> ExactScalar:
        """Canonical dual pairing: sum of coefficient products."""
        small, big = self.components, other.components
        if len(big) < len(small):
            small, big = big, small
        total = ZERO
        for p in sorted(small):
            c = big.get(p)
            if c is not None:
                total = total + small[p] * c
        return total

    def items_sorted(self):
        return sorted(self.components.items())

    def __eq__(self, other):
        if not isinstance(other, GradedVector):
            return NotImplemented
        return self.components == other.components

    def __repr__(self):
        if not self.components:
            return "0"
        return " + ".join(f"({c})*{list(p)}" for p, c in self.items_sorted())


def vacuum() -> GradedVector:
    return GradedVector.basis(())


def generator_state() -> GradedVector:
    """a(-1)|0>, the weight-1 generator."""
    return GradedVector.basis((1,))


def conformal_state() -> GradedVector:
    """omega = (1/2) a(-1)^2 |0>, the Virasoro vector at central charge 1."""
    return GradedVector.basis((1, 1)).scale(Fraction(1, 2))


# -- elementary mode actions ----------------------------------------------


def _insert_part(p: Partition, n: int) -> Partition:
    for i, x in enumerate(p):
        if n >= x:
            return p[:i] + (n,) + p[i:]
    return p + (n,)


def _remove_part(p: Partition, n: int) -> Partition:
    i = p.index(n)
    return p[:i] + p[i + 1:]


def _acc(acc: dict, key, val: ExactScalar) -> None:
    s = acc.get(key)
    s = val if s is None else s + val
    if s.is_zero():
        acc.pop(key, None)
    else:
        acc[key] = s


def apply_a(m: int, vec: GradedVector, level: int | None = None) -> GradedVector:
    """Oscillator mode a(m); optional output-weight truncation for creators."""
    out = GradedVector()
    acc = out.components
    if m == 0:
        return out
    for p, c in vec.components.items():
        if m > 0:
            mult = p.count(m)
            if mult == 0:
                continue
            _acc(acc, _remove_part(p, m), c * (m * mult))
        else:
            if level is not None and weight(p) - m > level:
                continue
            _acc(acc, _insert_part(p, -m), c)
    return out


def apply_a_transpose(m: int, vec: GradedVector, level: int | None = None) -> GradedVector:
    """Transpose with respect to the basis pairing: <a(m)^T w', x> = <w', a(m) x>."""
    out = GradedVector()
    acc = out.components
    if m == 0:
        return out
    for p, c in vec.components.items():
        if m > 0:
            if level is not None and weight(p) + m > level:
                continue
            q = _insert_part(p, m)
            _acc(acc, q, c * (m * q.count(m)))
        else:
            n = -m
            if p.count(n) == 0:
                continue
            _acc(acc, _remove_part(p, n), c)
    return out


@lru_cache(maxsize=None)
def _c_of(n: int, m: int) -> int:
    """(-1)^(n-1) * binom(m+n-1, n-1) via falling factorials (m may be < 0)."""
    x = m + n - 1
    k = n - 1
    num = 1
    for j in range(k):
        num *= (x - j)
    den = 1
    for j in range(1, k + 1):
        den *= j
    q, r = divmod(num, den)
    assert r == 0
    return (-1) ** (n - 1) * q


_MODE_CACHE: dict[tuple, tuple] = {}


def clear_mode_cache() -> None:
    _MODE_CACHE.clear()


def _basis_mode_action(vp: Partition, k: int, p: Partition) -> tuple:
    """v(k)|p> for basis states as a tuple of (partition, ExactScalar);
    memoized -- the recursion re-visits the same triples heavily."""
    key = (vp, k, p)
    hit = _MODE_CACHE.get(key)
    if hit is not None:
        return hit
    if not vp:  # identity field: 1(k) = delta_{k,-1} Id
        out = ((p, ONE),) if k == -1 else ()
        _MODE_CACHE[key] = out
        return out
    n, rest = vp[0], vp[1:]
    w_out = weight(p) + weight(vp) - k - 1
    acc: dict = {}
    # annihilation part: u(k-m-n) a(m), m >= 1 restricted to parts of p
    for m in sorted(set(p)):
        mult = p.count(m)
        q0 = _remove_part(p, m)
        scale = ExactScalar(m * mult) * ExactScalar(_c_of(n, m))
        for qq, cc in _basis_mode_action(rest, k - m - n, q0):
            _acc(acc, qq, cc * scale)
    # creation part: a(m) u(k-m-n), m <= -1; intermediate weight w_out + m
    m = -1
    while w_out + m >= 0:
        sub = _basis_mode_action(rest, k - m - n, p)
        if sub:
            coef = ExactScalar(_c_of(n, m))
            for qq, cc in sub:
                _acc(acc, _insert_part(qq, -m), cc * coef)
        m -= 1
    out = tuple(acc.items())
    _MODE_CACHE[key] = out
    return out


def _apply_basis_mode(vp: Partition, k: int, p: Partition, c: ExactScalar,
                      out_acc: dict) -> None:
    """Accumulate v(k)(c * |p>) into out_acc for a basis state v = vp."""
    for q, coeff in _basis_mode_action(vp, k, p):
        _acc(out_acc, q, coeff * c)


def apply_mode(v: GradedVector, k: int, vec: GradedVector,
               level: int | None = None) -> GradedVector:
    """Apply the k-th mode of the field of v, keeping output weights <= level."""
    out = GradedVector()
    acc = out.components
    for vp, cv in v.components.items():
        wv = weight(vp)
        for p, c in vec.components.items():
            w_out = weight(p) + wv - k - 1
            if w_out < 0 or (level is not None and w_out > level):
                continue
            sub: dict = {}
            _apply_basis_mode(vp, k, p, c * cv, sub)
            for q, cc in sub.items():
                _acc(acc, q, cc)
    return out


def apply_field(v: GradedVector, z: ExactScalar, vec: GradedVector,
                level: int, out_weights=None, max_parts: int | None = None) -> GradedVector:
    """Y(v, z) applied to vec, keeping output weights <= level.

    For each (v-piece weight, input weight, output weight) the contributing
    mode index is fixed by the grading, so this is an exact finite sum.

    z may be any scalar-ring element (ExactScalar or a jet over it); only
    powers and products with coefficients are taken.  out_weights restricts
    the produced weights (used for the outermost insertion, where only the
    dual support can pair).
    """
    if not hasattr(z, "is_zero"):
        z = ExactScalar.coerce(z)
    # creation shortcut: on a vacuum multiple the field is the raising
    # translation applied to the state (used heavily by innermost
    # insertions); the creation property keeps z = 0 well-defined here
    if out_weights is None and set(vec.components) == {()} and isinstance(z, ExactScalar):
        scalar = vec.components[()]
        if isinstance(scalar, ExactScalar):
            if z.is_zero():
                return v.truncate(level).scale(scalar)
            src = v.truncate(level)
            if max_parts is not None:
                kept = GradedVector()
                # the raising translation preserves oscillator count, so
                # over-budget components of v never fit the cap
                kept.components = {p: c for p, c in src.components.items()
                                   if len(p) <= max_parts}
                src = kept
            return apply_translation(z, src, level).scale(scalar)
    if z.is_zero():
        raise PoleAtOrigin("vertex operator evaluated at z = 0")
    targets = range(0, level + 1) if out_weights is None else \
        [w for w in out_weights if 0 <= w <= level]
    zpow: dict[int, ExactScalar] = {}

    def zp(e: int) -> ExactScalar:
        v = zpow.get(e)
        if v is None:
            v = z ** e
            zpow[e] = v
        return v

    out = GradedVector()
    acc = out.components
    for vp, cv in v.components.items():
        wv = weight(vp)
        np_v = len(vp)
        for p, c in vec.components.items():
            if max_parts is not None and len(p) - np_v > max_parts:
                continue  # cannot shed enough oscillators at this step
            w_in = weight(p)
            for w_out in targets:
                k = w_in + wv - w_out - 1
                sub: dict = {}
                _apply_basis_mode(vp, k, p, c * cv, sub)
                if sub:
                    zc = zp(-k - 1)
                    for q, cc in sub.items():
                        if max_parts is not None and len(q) > max_parts:
                            continue
                        _acc(acc, q, cc * zc)
    return out


def _apply_basis_mode_transpose(vp: Partition, k: int, p: Partition,
                                c: ExactScalar, out_acc: dict) -> None:
    """Accumulate v(k)^T (c * dual|p>) into out_acc: <v(k)^T w', x> = <w', v(k) x>.

    Transposition reverses the composition order of the defining recursion
    and transposes each oscillator factor.
    """
    if not vp:
        if k == -1:
            _acc(out_acc, p, c)
        return
    n, rest = vp[0], vp[1:]
    w_in = weight(p)                      # dual-side weight of w'
    w_out = w_in - weight(vp) + k + 1     # ket weight pairing nontrivially
    x = GradedVector({p: c})
    # transpose of u(j) a(m), m >= 1:  a(m)^T u(j)^T  (u(j)^T first);
    # intermediate dual weight is w_out - m >= 0
    m = 1
    while w_out - m >= 0:
        sub: dict = {}
        _apply_basis_mode_transpose(rest, k - m - n, p, c, sub)
        if sub:
            coef = _c_of(n, m)
            mid = GradedVector()
            mid.components = sub
            lifted = apply_a_transpose(m, mid)
            for q, cc in lifted.components.items():
                _acc(out_acc, q, cc * coef)
        m += 1
    # transpose of a(m) u(j), m <= -1:  u(j)^T a(m)^T  (a(m)^T first);
    # a(m)^T removes the part -m from the dual
    for m_abs in sorted(set(p)):
        m = -m_abs
        ax = apply_a_transpose(m, x)
        for q, cq in ax.components.items():
            sub = {}
            _apply_basis_mode_transpose(rest, k - m - n, q, cq, sub)
            coef = _c_of(n, m)
            for qq, cc in sub.items():
                _acc(out_acc, qq, cc * coef)


def apply_field_transpose(v: GradedVector, z: ExactScalar, wvec: GradedVector,
                          level: int) -> GradedVector:
    """Y(v, z)^T on a dual-side vector, keeping dual weights <= level."""
    z = ExactScalar.coerce(z)
    if z.is_zero():
        raise PoleAtOrigin("vertex operator evaluated at z = 0")
    out = GradedVector()
    acc = out.components
    for vp, cv in v.components.items():
        wv = weight(vp)
        for p, c in wvec.components.items():
            w_in = weight(p)
            for w_out in range(0, level + 1):
                # <w'_{w_in}, v(k) x_{w_out}> needs w_in = w_out + wv - k - 1
                k = w_out + wv - w_in - 1
                sub: dict = {}
                _apply_basis_mode_transpose(vp, k, p, c * cv, sub)
                if sub:
                    zc = z ** (-k - 1)
                    for q, cc in sub.items():
                        _acc(acc, q, cc * zc)
    return out


# -- Virasoro ---------------------------------------------------------------


def virasoro_apply(n: int, vec: GradedVector, level: int | None = None) -> GradedVector:
    """L(n) = (1/2) sum_{i+j=n} :a(i)a(j): with central charge 1.

    For n != 0 the two modes commute, so ordering only matters for n = 0,
    which acts as the weight.  Enumerates the finitely many contributing
    ordered pairs directly.
    """
    out = GradedVector()
    acc = out.components
    half = ExactScalar(Fraction(1, 2))
    for p, c in vec.components.items():
        w = weight(p)
        w_out = w - n
        if w_out < 0 or (level is not None and w_out > level):
            continue
        if n == 0:
            if w:
                _acc(acc, p, c * w)
            continue
        x = GradedVector({p: c * half})
        total = GradedVector()
        # ordered pairs (i, j = n - i) with the right factor a(j) applied first
        # (b1) j annihilates a part of p
        for j in sorted(set(p)):
            i = n - j
            if i == 0:
                continue
            term = apply_a(i, apply_a(j, x))
            total.add_into(term)
        # (b2) j creates, i annihilates a part of p (i in parts, j = n-i <= -1)
        for i in sorted(set(p)):
            j = n - i
            if j <= -1:
                term = apply_a(i, apply_a(j, x))
                total.add_into(term)
        # (b3) both create: j in [n+1, -1], i = n - j <= -1 (only for n <= -2)
        if n <= -2:
            for j in range(-1, n, -1):
                i = n - j
                if i > -1:
                    continue
                term = apply_a(i, apply_a(j, x))
                total.add_into(term)
        out.add_into(total)
    return out


def virasoro_transpose(n: int, wvec: GradedVector, level: int) -> GradedVector:
    """<L(n)^T w', x> = <w', L(n) x>, built blockwise from the direct rule."""
    out = GradedVector()
    by_weight: dict[int, list[tuple[Partition, ExactScalar]]] = {}
    for p, c in wvec.components.items():
        by_weight.setdefault(weight(p), []).append((p, c))
    for w_dual, rows in sorted(by_weight.items()):
        w_ket = w_dual + n
        if w_ket < 0 or w_ket > level:
            continue
        for q in partitions_of(w_ket):
            img = virasoro_apply(n, GradedVector.basis(q))
            for p, c in rows:
                coef = img.coefficient(p)
                if not coef.is_zero():
                    _acc(out.components, q, coef * c)
    return out


def _inv_factorial(j: int) -> ExactScalar:
    f = 1
    for i in range(2, j + 1):
        f *= i
    return ExactScalar(Fraction(1, f))


def apply_translation(zeta: ExactScalar, vec: GradedVector, level: int) -> GradedVector:
    """exp(zeta * L(-1)) truncated at weight level; nilpotent there."""
    zeta = ExactScalar.coerce(zeta)
    out = vec.truncate(level)
    term = out
    j = 1
    while True:
        term = virasoro_apply(-1, term, level)
        if term.is_zero() or j > level + 1:
            break
        out = out + term.scale((zeta ** j) * _inv_factorial(j))
        j += 1
    return out


def apply_translation_transpose(zeta: ExactScalar, wvec: GradedVector,
                                level: int) -> GradedVector:
    """exp(zeta * L(-1))^T on a dual-side vector (lowers dual weights)."""
    zeta = ExactScalar.coerce(zeta)
    out = wvec.truncate(level)
    term = out
    j = 1
    while True:
        term = virasoro_transpose(-1, term, level)
        if term.is_zero() or j > level + 1:
            break
        out = out + term.scale((zeta ** j) * _inv_factorial(j))
        j += 1
    return out


def apply_lowering_exponential(coeff_by_mode: dict[int, ExactScalar],
                               vec: GradedVector) -> GradedVector:
    """exp(sum_m c_m L(m)) for strictly positive modes m; always finite."""
    for m in coeff_by_mode:
        if m <= 0:
            raise ValueError("apply_lowering_exponential needs modes m > 0")
    out = vec.copy()
    term = vec.copy()
    j = 1
    while not term.is_zero():
        nxt = GradedVector()
        for m, cm in sorted(coeff_by_mode.items()):
            piece = virasoro_apply(m, term)
            if not piece.is_zero():
                nxt.add_into(piece.scale(cm))
        term = nxt
        if term.is_zero():
            break
        out.add_into(term.scale(_inv_factorial(j)))
        j += 1
    return out


# -- matrix elements ---------------------------------------------------------


def matrix_element(wprime: GradedVector, v: GradedVector, z: ExactScalar,
                   u: GradedVector) -> ExactScalar:
    """<w', Y(v, z) u>: finite by grading selection, exact."""
    z = ExactScalar.coerce(z)
    if z.is_zero():
        raise PoleAtOrigin("matrix element evaluated at z = 0")
    level = max((weight(p) for p in wprime.components), default=0)
    return wprime.pair(apply_field(v, z, u, level))


def multi_matrix_element(wprime: GradedVector,
                         states: Sequence[tuple[GradedVector, ExactScalar]],
                         u: GradedVector, level: int) -> ExactScalar:
    """Partial sum of <w', Y(v1,z1)...Y(vn,zn) u> truncated at weight level.

    Requires |z1| > |z2| > ... > |zn| > 0 and pairwise distinct points;
    outside that region the expansion is invalid and OutOfRegion is raised.
    """
    pts = [ExactScalar.coerce(z) for _, z in states]
    for z in pts:
        if z.is_zero():
            raise PoleAtOrigin("insertion at z = 0")
    mods = [z.abs_squared() for z in pts]
    for a, b in zip(mods, mods[1:]):
        if not a > b:
            raise OutOfRegion(f"|z| moduli not strictly decreasing: {mods}")
    if len({(z.re, z.im) for z in pts}) != len(pts):
        raise OutOfRegion("insertion points must be pairwise distinct")
    vec = u.truncate(level)
    for (v, _), z in zip(reversed(states), reversed(pts)):
        vec = apply_field(v, z, vec, level)
    return wprime.pair(vec)


# -- enumerated context and sparse operators ---------------------------------


@dataclass
class SparseOperator:
    """Explicit matrix of an operator on the enumerated truncated space."""

    entries: dict[tuple[Partition, Partition], ExactScalar]
    weight_shift: int | None = None

    def apply(self, vec: GradedVector) -> GradedVector:
        out = GradedVector()
        acc = out.components
        for (pout, pin), coef in self.entries.items():
            c = vec.components.get(pin)
            if c is not None:
                _acc(acc, pout, coef * c)
        return out

    def compose(self, inner: "SparseOperator") -> "SparseOperator":
        """self o inner (apply inner first)."""
        by_mid: dict[Partition, list[tuple[Partition, ExactScalar]]] = {}
        for (pout, pin), c in inner.entries.items():
            by_mid.setdefault(pout, []).append((pin, c))
        out: dict[tuple[Partition, Partition], ExactScalar] = {}
        for (pout, pmid), c1 in self.entries.items():
            for pin, c2 in by_mid.get(pmid, ()):
                _acc(out, (pout, pin), c1 * c2)
        shift = None
        if self.weight_shift is not None and inner.weight_shift is not None:
            shift = self.weight_shift + inner.weight_shift
        return SparseOperator(out, shift)

    def add(self, other: "SparseOperator") -> "SparseOperator":
        out = dict(self.entries)
        for key, c in other.entries.items():
            _acc(out, key, c)
        shift = self.weight_shift if self.weight_shift == other.weight_shift else None
        return SparseOperator(out, shift)

    def scale(self, s) -> "SparseOperator":
        s = ExactScalar.coerce(s)
        return SparseOperator({k: c * s for k, c in self.entries.items()},
                              self.weight_shift)

    def __eq__(self, other):
        if not isinstance(other, SparseOperator):
            return NotImplemented
        return self.entries == other.entries

    def check_grading(self) -> bool:
        if self.weight_shift is None:
            return True
        return all(weight(po) == weight(pi) + self.weight_shift
                   for (po, pi) in self.entries)


@dataclass
class VOAContext:
    """Enumerated basis of V_{<=N} for the rank-1 Heisenberg algebra."""

    cutoff: int
    basis_by_weight: dict[int, list[Partition]]
    central_charge: int = 1

    def basis(self, w: int) -> list[Partition]:
        return self.basis_by_weight.get(w, [])

    def dim(self, w: int) -> int:
        return len(self.basis(w))

    def all_states(self) -> list[Partition]:
        out = []
        for w in range(self.cutoff + 1):
            out.extend(self.basis(w))
        return out

    def heisenberg_mode(self, m: int) -> SparseOperator:
        entries: dict[tuple[Partition, Partition], ExactScalar] = {}
        for p in self.all_states():
            img = apply_a(m, GradedVector.basis(p), self.cutoff)
            for q, c in img.components.items():
                entries[(q, p)] = c
        return SparseOperator(entries, -m)

    def operator_from_action(self, action: Callable[[GradedVector], GradedVector],
                             weight_shift: int | None = None) -> SparseOperator:
        entries: dict[tuple[Partition, Partition], ExactScalar] = {}
        for p in self.all_states():
            img = action(GradedVector.basis(p)).truncate(self.cutoff)
            for q, c in img.components.items():
                entries[(q, p)] = c
        return SparseOperator(entries, weight_shift)


def build_heisenberg(N: int) -> VOAContext:
    """Enumerate the truncated Fock basis; dim V_(l) = p(l) partitions."""
    if N < 0:
        raise ValueError("cutoff must be >= 0")
    return VOAContext(N, {w: partitions_of(w) for w in range(N + 1)})


def vertex_mode(ctx: VOAContext, v: GradedVector, k: int) -> SparseOperator:
    """Mode v(k) as an explicit matrix on V_{<=cutoff}; v must be homogeneous."""
    if not v.is_homogeneous():
        raise ValueError("vertex_mode needs a homogeneous state; split first")
    wv = v.max_weight()
    return ctx.operator_from_action(lambda x: apply_mode(v, k, x, ctx.cutoff),
                                    weight_shift=wv - k - 1)


def vertex_mode_pieces(ctx: VOAContext, v: GradedVector, k: int) -> dict[int, SparseOperator]:
    """Mode matrices of the homogeneous pieces of v, keyed by piece weight."""
    return {w: vertex_mode(ctx, v.project(w), k) for w in sorted(v.weights())}


def virasoro_mode(ctx: VOAContext, n: int) -> SparseOperator:
    if abs(n) > ctx.cutoff + 1:
        raise CutoffOverflow(f"L({n}) exceeds stored head-room at cutoff {ctx.cutoff}")
    return ctx.operator_from_action(lambda x: virasoro_apply(n, x, ctx.cutoff),
                                    weight_shift=-n)


# -- axiom checking -----------------------------------------------------------


@dataclass
class CheckResult:
    check_id: str
    status: str  # "pass" | "fail" | "skip"
    residual: str
    bound: str
    detail: str = ""

    def as_dict(self) -> dict:
        return {"id": self.check_id, "status": self.status,
                "residual": self.residual, "bound": self.bound,
                "detail": self.detail}


def _result(check_id: str, ok: bool, detail: str = "") -> CheckResult:
    return CheckResult(check_id, "pass" if ok else "fail",
                       "0" if ok else "nonzero", "0", detail)


def _scale_by_weight(vec: GradedVector, a: ExactScalar) -> GradedVector:
    out = GradedVector()
    for p, c in vec.components.items():
        out.components[p] = c * (a ** weight(p))
    return out


def _binom_exact(x: int, j: int) -> ExactScalar:
    """binom(x, j) for integer x of any sign via falling factorials."""
    num = 1
    for i in range(j):
        num *= (x - i)
    den = 1
    for i in range(1, j + 1):
        den *= i
    return ExactScalar(Fraction(num, den))


def _translation_series_coeff(v: GradedVector, z: ExactScalar, u: GradedVector,
                              j: int, w_out: int, cutoff: int) -> GradedVector:
    """z'^j coefficient of exp(z'L(-1)) Y(v,z) exp(-z'L(-1)) u at weight w_out.

    Exact: L(-1)^s u and the one selected mode per weight are finite, and the
    outer L(-1)^r lands at w_out <= cutoff by construction.
    """
    out = GradedVector()
    for s in range(j + 1):
        r = j - s
        ls_u = u
        for _ in range(s):
            ls_u = virasoro_apply(-1, ls_u, cutoff)
        if ls_u.is_zero():
            continue
        # pick the v-mode landing at weight w_out - r before the outer L^r
        mid_target = w_out - r
        if mid_target < 0:
            continue
        acc = GradedVector()
        for vp, cv in v.components.items():
            for p, c in ls_u.components.items():
                k = weight(p) + weight(vp) - mid_target - 1
                sub: dict = {}
                _apply_basis_mode(vp, k, p, c * cv, sub)
                if sub:
                    zc = z ** (-k - 1)
                    for q, cc in sub.items():
                        _acc(acc.components, q, cc * zc)
        for _ in range(r):
            acc = virasoro_apply(-1, acc, cutoff)
        sign = ExactScalar((-1) ** s)
        out.add_into(acc.scale(sign * _inv_factorial(r) * _inv_factorial(s)))
    return out


def field_on_vacuum_series(v: GradedVector, level: int) -> dict[int, GradedVector]:
    """Coefficients of Y(v, z)|0> as exponent -> state, output weight <= level.

    Negative exponents present only if the creation axiom fails."""
    out: dict[int, GradedVector] = {}
    for vp, cv in v.components.items():
        wv = weight(vp)
        for w_out in range(level + 1):
            k = wv - w_out - 1
            img = apply_mode(GradedVector({vp: cv}), k, vacuum(), level)
            if not img.is_zero():
                e = -k - 1
                out[e] = out.get(e, GradedVector()) + img
    return out


def check_axioms(ctx: VOAContext, samples: Sequence[ExactScalar] | None = None,
                 max_weight: int | None = None,
                 corrupt: str | None = None) -> list[CheckResult]:
    """Verify the defining axioms on basis states of weight <= max_weight.

    Head-room: max_weight defaults to cutoff - 2 so that no compared
    component can be corrupted by truncation.  Residuals are exact; pass
    means exactly zero.  ``corrupt`` injects a fault into the named check so
    the surrounding tooling can prove checks are falsifiable.
    """
    if samples is None:
        samples = [ExactScalar(Fraction(3, 2)), ExactScalar(Fraction(1, 3))]
    top = (ctx.cutoff - 2 if max_weight is None else max_weight)
    top = max(top, 0)
    results: list[CheckResult] = []
    states = [p for w in range(top + 1) for p in ctx.basis(w)]

    # identity property: Y(1, z) = Id
    ok = True
    for p in states:
        x = GradedVector.basis(p)
        y = apply_field(vacuum(), samples[0], x, ctx.cutoff)
        if corrupt == "identity":
            y = y.scale(2)
        if y != x:
            ok = False
    results.append(_result("axiom.identity", ok, f"{len(states)} basis states"))

    # creation property: Y(v, z)|0> = v + O(z), no negative powers
    ok = True
    for p in states:
        v = GradedVector.basis(p)
        series = field_on_vacuum_series(v, ctx.cutoff)
        if series.get(0) != v or any(e < 0 for e in series):
            ok = False
    results.append(_result("axiom.creation", ok))

    # grading: weight shift of every stored entry of v(k)
    ok = True
    for p in states:
        v = GradedVector.basis(p)
        for k in range(-2, weight(p) + 2):
            if not vertex_mode(ctx, v, k).check_grading():
                ok = False
    results.append(_result("axiom.grading", ok))

    # L(0) bracket: [L(0), v(k)] = (L(0)v)(k) + (-k-1) v(k)
    ok = True
    for p in states:
        v = GradedVector.basis(p)
        for q in states:
            u = GradedVector.basis(q)
            for k in range(-2, weight(p) + weight(q) + 1):
                w_out = weight(q) + weight(p) - k - 1
                if w_out < 0 or w_out > ctx.cutoff:
                    continue
                vk_u = apply_mode(v, k, u, ctx.cutoff)
                lhs = virasoro_apply(0, vk_u) - apply_mode(v, k, virasoro_apply(0, u), ctx.cutoff)
                rhs = apply_mode(virasoro_apply(0, v), k, u, ctx.cutoff) + vk_u.scale(-k - 1)
                if corrupt == "l0-bracket":
                    rhs = rhs + vk_u
                if lhs != rhs:
                    ok = False
    results.append(_result("axiom.l0-bracket", ok))

    # L(-1) derivative in mode form: (L(-1)v)(k) = -k v(k-1)
    ok = True
    for p in states:
        v = GradedVector.basis(p)
        if weight(p) + 1 > ctx.cutoff:
            continue
        lv = virasoro_apply(-1, v, ctx.cutoff)
        for q in states:
            u = GradedVector.basis(q)
            for k in range(-2, weight(p) + weight(q) + 2):
                w_out = weight(q) + weight(p) - k
                if w_out < 0 or w_out > ctx.cutoff:
                    continue
                lhs = apply_mode(lv, k, u, ctx.cutoff)
                rhs = apply_mode(v, k - 1, u, ctx.cutoff).scale(-k)
                if lhs != rhs:
                    ok = False
    results.append(_result("axiom.lminus1-derivative", ok))

    # translation: exp(z'L(-1)) Y(v, z) exp(-z'L(-1)) = Y(v, z+z'), compared
    # as exact power series in z' through an order the cutoff can absorb
    ok = True
    z = samples[0]
    for p in states:
        v = GradedVector.basis(p)
        for q in states:
            u = GradedVector.basis(q)
            korder = max(0, ctx.cutoff - top)
            for w_out in range(0, top + 1):
                for j in range(korder + 1):
                    # z'^j coefficient of Y(v, z+z')u at output weight w_out:
                    # sum_k binom(-k-1, j) z^{-k-1-j} v(k)u
                    k = weight(q) + weight(p) - w_out - 1
                    vk_u = apply_mode(v, k, u, ctx.cutoff).project(w_out)
                    lhs = vk_u.scale(_binom_exact(-k - 1, j) * (z ** (-k - 1 - j)))
                    # z'^j coefficient of e^{z'L}Y(v,z)e^{-z'L}u at w_out:
                    # sum_{r+s=j} (-1)^s L^r [Y(v,z) L^s u]/(r! s!)
                    rhs = _translation_series_coeff(v, z, u, j, w_out, ctx.cutoff)
                    if corrupt == "translation":
                        rhs = rhs.scale(2)
                    if lhs != rhs:
                        ok = False
    results.append(_result("axiom.translation", ok, "power-series order "
                                                    "comparison in the shift"))

    # scaling conjugation: a^{L(0)} Y(v,z) a^{-L(0)} = Y(a^{L(0)} v, a z)
    ok = True
    a = ExactScalar(2)
    for p in states:
        v = GradedVector.basis(p)
        for q in states:
            u = GradedVector.basis(q)
            base = apply_field(v, samples[0], u, ctx.cutoff)
            lhs = _scale_by_weight(base, a)
            rhs = apply_field(_scale_by_weight(v, a), a * samples[0],
                              _scale_by_weight(u, a), ctx.cutoff)
            if corrupt == "scaling":
                rhs = rhs.scale(2)
            if lhs != rhs:
                ok = False
    results.append(_result("axiom.scaling-conjugation", ok))

    return results
