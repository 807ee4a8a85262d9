"""Formal coordinate changes fixing the origin and their operator action.

A 1-D change rho(z) = a1 z + a2 z^2 + ... (a1 != 0) is put in exponential
form

    rho(z) = exp( sum_{k>=1} beta_k z^{k+1} d/dz ) (beta_0)^{z d/dz} . z,

with beta_0 = a1 and the higher beta_k solved recursively by matching the
expansion order by order (exact rational arithmetic).  The operator realizing
the change on the truncated Fock space is

    P(f) = beta_0^{L(0)} o exp( sum_{m>0} (m+1) beta_m L(m) ),

the lowering exponential applied first; with that order P is a homomorphism
for composition (f1 o f2)(z) = f1(f2(z)) on the scaling / inverted-translation
family, which the tests pin down.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .scalars import ExactScalar, VoxformError, ZERO, ONE
from .fock import (
    GradedVector,
    SparseOperator,
    VOAContext,
    apply_field,
    apply_lowering_exponential,
    apply_mode,
    virasoro_apply,
    weight,
)
from .forms import Insertion, PropertyReport, WForm, evaluate_correlator

__all__ = [
    "NotAnAutomorphism",
    "CoordinateChange1D",
    "beta_from_a",
    "expand_exponential_form",
    "compose_changes",
    "p_operator",
    "p_operator_apply",
    "check_commutator",
    "PrimaryVector",
    "NDimChange",
    "check_form_invariance",
]


class NotAnAutomorphism(VoxformError):
    """The linear coefficient a1 vanishes; the series is not invertible."""


def _poly_trim(c: list[ExactScalar], K: int) -> list[ExactScalar]:
    out = list(c[: K + 1])
    while len(out) < K + 1:
        out.append(ZERO)
    return out


def _poly_mul(a: list[ExactScalar], b: list[ExactScalar], K: int) -> list[ExactScalar]:
    out = [ZERO] * (K + 1)
    for i, x in enumerate(a):
        if x.is_zero() or i > K:
            continue
        for j, y in enumerate(b):
            if i + j > K:
                break
            if not y.is_zero():
                out[i + j] = out[i + j] + x * y
    return out


def _apply_vector_field(beta: dict[int, ExactScalar], poly: list[ExactScalar],
                        K: int) -> list[ExactScalar]:
    """(sum_k beta_k z^{k+1} d/dz) poly, truncated at degree K."""
    out = [ZERO] * (K + 1)
    for k, bk in beta.items():
        if bk.is_zero():
            continue
        for j, c in enumerate(poly):
            if c.is_zero() or j == 0:
                continue
            deg = j + k
            if deg <= K:
                out[deg] = out[deg] + bk * c * ExactScalar(j)
    return out


def expand_exponential_form(beta0: ExactScalar, beta: dict[int, ExactScalar],
                            K: int) -> list[ExactScalar]:
    """Coefficients a_1..a_K of exp(sum beta_k z^{k+1} d/dz)(beta0 z).

    The vector field raises degree, so the exponential terminates mod z^{K+1}.
    Returns the full coefficient list indexed from degree 0 (a_0 = 0).
    """
    cur = [ZERO, ExactScalar.coerce(beta0)] + [ZERO] * (K - 1)
    out = list(cur)
    fact = 1
    term = cur
    for j in range(1, K + 1):
        term = _apply_vector_field(beta, term, K)
        if all(c.is_zero() for c in term):
            break
        fact *= j
        inv = ExactScalar(Fraction(1, fact))
        out = [o + t * inv for o, t in zip(out, term)]
    return _poly_trim(out, K)


@dataclass
class CoordinateChange1D:
    """Power-series coefficients a_1.. of rho and the derived beta's."""

    a: list[ExactScalar]  # a[0] is a_1
    beta0: ExactScalar = field(init=False)
    beta: dict[int, ExactScalar] = field(init=False)

    def __post_init__(self):
        self.a = [ExactScalar.coerce(x) for x in self.a]
        if not self.a or self.a[0].is_zero():
            raise NotAnAutomorphism("a_1 must be nonzero")
        self.beta0, self.beta = beta_from_a(self.a, len(self.a))

    @property
    def order(self) -> int:
        return len(self.a)

    def coefficients(self) -> list[ExactScalar]:
        """[a_1, ..., a_K]."""
        return list(self.a)

    def evaluate(self, z: ExactScalar) -> ExactScalar:
        total = ZERO
        for i, c in enumerate(self.a, start=1):
            total = total + c * (z ** i)
        return total

    def derivative(self, z: ExactScalar) -> ExactScalar:
        total = ZERO
        for i, c in enumerate(self.a, start=1):
            total = total + c * ExactScalar(i) * (z ** (i - 1))
        return total

    @staticmethod
    def scaling(s, order: int = 6) -> "CoordinateChange1D":
        a = [ExactScalar.coerce(s)] + [ZERO] * (order - 1)
        return CoordinateChange1D(a)

    @staticmethod
    def inverted_translation(c, order: int = 6) -> "CoordinateChange1D":
        """rho(z) = z / (1 - c z) = sum c^{k-1} z^k (translation conjugated
        through inversion)."""
        c = ExactScalar.coerce(c)
        return CoordinateChange1D([c ** (k - 1) for k in range(1, order + 1)])


def beta_from_a(a: list[ExactScalar], K: int):
    """Solve the exponential form for (beta0, beta_k) so that the round-trip
    expansion reproduces a_1..a_K exactly."""
    a = _poly_trim([ExactScalar.coerce(x) for x in a], K - 1)
    if a[0].is_zero():
        raise NotAnAutomorphism("a_1 must be nonzero")
    if K < 1:
        raise ValueError("order must be >= 1")
    beta0 = a[0]
    beta: dict[int, ExactScalar] = {}
    inv0 = beta0.inverse()
    for m in range(1, K):
        # coefficient of z^{m+1} is linear in beta_m with slope beta0
        cur = expand_exponential_form(beta0, beta, m + 1)
        target = a[m] if m < len(a) else ZERO
        beta[m] = (target - cur[m + 1]) * inv0
    return beta0, beta


def compose_changes(f1: CoordinateChange1D, f2: CoordinateChange1D,
                    order: int | None = None) -> CoordinateChange1D:
    """(f1 o f2)(z) = f1(f2(z)) as truncated series.

    The result is only determined through the factors' stored orders, so the
    default (and cap) is min(f1.order, f2.order); build the factors at a
    higher order when more is needed.
    """
    K = min(f1.order, f2.order)
    if order is not None:
        if order > K:
            raise ValueError(f"composition undetermined beyond order {K}")
        K = order
    inner = [ZERO] + _poly_trim(f2.a, K - 1)  # series with a_0 = 0
    # Horner-style composition: powers of the inner series
    powers = [[ONE] + [ZERO] * K]
    for _ in range(K):
        powers.append(_poly_mul(powers[-1], inner, K))
    out = [ZERO] * (K + 1)
    for i, c in enumerate(f1.a, start=1):
        if i > K or c.is_zero():
            continue
        for deg, pc in enumerate(powers[i]):
            if not pc.is_zero():
                out[deg] = out[deg] + c * pc
    return CoordinateChange1D(out[1: K + 1])


def p_operator_apply(f: CoordinateChange1D, vec: GradedVector) -> GradedVector:
    """P(f) v = beta0^{L(0)} exp(sum_{m>0} (m+1) beta_m L(m)) v; exact and
    finite because positive modes strictly lower the weight."""
    coeffs = {m: ExactScalar(m + 1) * bm for m, bm in f.beta.items()
              if not bm.is_zero()}
    mid = apply_lowering_exponential(coeffs, vec) if coeffs else vec.copy()
    out = GradedVector()
    for p, c in mid.components.items():
        out.components[p] = c * (f.beta0 ** weight(p))
    return out


def p_operator(ctx: VOAContext, f: CoordinateChange1D) -> SparseOperator:
    return ctx.operator_from_action(lambda v: p_operator_apply(f, v))


# -- commutator identity --------------------------------------------------------


def check_commutator(ctx: VOAContext, n: int, v: GradedVector, z: ExactScalar,
                     u: GradedVector, wprime: GradedVector) -> PropertyReport:
    """<w', [L(n), Y(v,z)] u> against the finite sum
    sum_{m>=-1} (1/(m+1)!) (d^{m+1}_z z^{n+1}) <w', Y(L(m)v, z) u>.

    All quantities are grading-finite against a fixed dual vector, so the
    residual is exact.
    """
    if not v.is_homogeneous():
        raise ValueError("commutator check needs homogeneous v")
    z = ExactScalar.coerce(z)
    level = ctx.cutoff
    # lhs = <w', L(n) Y(v,z)u> - <w', Y(v,z) L(n) u>
    yu = apply_field(v, z, u, level)
    lhs_vec = virasoro_apply(n, yu, level) - apply_field(v, z, virasoro_apply(n, u, level), level)
    lhs = wprime.pair(lhs_vec)
    # rhs = sum_{m >= -1} (d^{m+1}_z z^{n+1})/(m+1)! <w', Y(L(m)v, z) u>;
    # terminates since L(m)v = 0 for m > wt(v)
    rhs = ZERO
    for m in range(-1, v.max_weight() + 1):
        coeff = _dz_power(z, n + 1, m + 1)
        if coeff.is_zero():
            continue
        vm = virasoro_apply(m, v, level)
        if vm.is_zero():
            continue
        fact = 1
        for i in range(2, m + 2):
            fact *= i
        term = wprime.pair(apply_field(vm, z, u, level))
        rhs = rhs + coeff * ExactScalar(Fraction(1, fact)) * term
    resid = lhs - rhs
    ok = resid.is_zero()
    return PropertyReport("coords.commutator", "pass" if ok else "fail",
                          "0" if ok else repr(resid), "0",
                          f"n={n}, wt(v)={v.max_weight()}")


def _dz_power(z: ExactScalar, e: int, k: int) -> ExactScalar:
    """d^k/dz^k z^e evaluated at z (e >= 0 here)."""
    coef = 1
    for i in range(k):
        coef *= (e - i)
    if coef == 0:
        return ZERO
    return ExactScalar(coef) * (z ** (e - k))


# -- n-dimensional restricted changes and form invariance ------------------------


@dataclass
class PrimaryVector:
    state: GradedVector
    delta: int

    def __post_init__(self):
        if not self.state.is_homogeneous():
            raise ValueError("primary vector must be homogeneous")
        if self.state.max_weight() != self.delta:
            raise ValueError("conformal dimension must equal the weight")
        lv = virasoro_apply(1, self.state)
        if not lv.is_zero():
            raise ValueError("state is not primary: L(1) does not annihilate it")


@dataclass
class NDimChange:
    """Restricted family: simultaneous affine map z -> s z + b composed with
    one independent 1-D change per coordinate (applied to the affine image).
    Identity per-coordinate changes are represented by None."""

    scale: ExactScalar = field(default_factory=lambda: ONE)
    shift: ExactScalar = field(default_factory=lambda: ZERO)
    per_coordinate: list[CoordinateChange1D | None] = field(default_factory=list)

    def is_affine(self) -> bool:
        return all(c is None for c in self.per_coordinate)

    def apply_point(self, i: int, z: ExactScalar) -> ExactScalar:
        w = self.scale * z + self.shift
        ch = self.per_coordinate[i] if i < len(self.per_coordinate) else None
        return w if ch is None else ch.evaluate(w)

    def jacobian(self, i: int, z: ExactScalar) -> ExactScalar:
        ch = self.per_coordinate[i] if i < len(self.per_coordinate) else None
        if ch is None:
            return self.scale
        return self.scale * ch.derivative(self.scale * z + self.shift)


def check_form_invariance(wform: WForm, wprime: GradedVector,
                          change: NDimChange,
                          points: list[ExactScalar]) -> PropertyReport:
    """Invariance of the wt-tagged form under the restricted change family.

    Compares the exactly resummed value at the transformed points, weighted
    by prod (drho_i/dz_i)^{wt(v_i)}, against the exactly resummed value at
    the original points.  Exact equality is the expectation for simultaneous
    scalings and translations with a translation/scaling-invariant dual-side
    functional (the dual vacuum) and vacuum tail; other changes land in a
    "report" status carrying the residual.
    """
    from .forms import eval_E_exact
    points = [ExactScalar.coerce(z) for z in points]
    for v in wform.states:
        if not virasoro_apply(1, v).is_zero():
            raise ValueError("form invariance requires primary slot states")
    base = eval_E_exact(wform, wprime, points)
    newpts = [change.apply_point(i, z) for i, z in enumerate(points)]
    jacs = [change.jacobian(i, z) for i, z in enumerate(points)]
    transformed = eval_E_exact(wform, wprime, newpts)
    weighted = transformed
    for v, j in zip(wform.states, jacs):
        weighted = weighted * (j ** v.max_weight())
    resid = weighted - base
    ok = resid.is_zero()
    status = "pass" if ok else ("report" if not change.is_affine() else "fail")
    return PropertyReport("coords.form-invariance", status,
                          "0" if ok else repr(resid), "0",
                          f"affine={change.is_affine()}")
