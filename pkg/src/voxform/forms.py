"""Multi-point rational forms backed by truncated correlator evaluation.

The central primitive is ``evaluate_correlator``: a list of insertions
(state, point) applied right-to-left to a tail state, truncating every
intermediate at a weight level, then paired against a dual-side vector.
Insertions are canonically sorted by strictly decreasing |point| (the region
in which the mode expansion converges); permuting slots therefore cannot
change the computed value, which is what makes two-slot antisymmetrized
sums vanish identically.

A level ladder evaluates several truncation levels in one pass, which feeds
the empirical geometric decay certificates.  Exact derivative and
power-series identities are checked with jet scalars (truncated polynomials
in a nilpotent offset), never with floating differentiation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import mpmath

from .scalars import ExactScalar, TruncatedLaurent, VoxformError, ZERO, ONE
from .fock import (
    GradedVector,
    OutOfRegion,
    PoleAtOrigin,
    apply_field,
    apply_field_transpose,
    apply_mode,
    apply_translation,
    apply_translation_transpose,
    vacuum,
    virasoro_apply,
    virasoro_transpose,
    weight,
)

__all__ = [
    "DuplicatePoints",
    "InconsistentSamples",
    "JetScalar",
    "Insertion",
    "RegionSpec",
    "WForm",
    "SeriesReport",
    "evaluate_correlator",
    "eval_E",
    "eval_E_vector",
    "eval_intertwining",
    "permute_form",
    "check_lminus1_property",
    "check_l0_conjugation",
    "composability_series_I",
    "composability_series_J",
    "check_correl_fn",
    "RationalReconstruction",
    "reconstruct_rational",
    "fit_linear_recurrence",
    "resum_series",
    "pole_order_at",
    "geometric_fit",
]


class DuplicatePoints(VoxformError):
    """Two insertion points coincide (configuration left F_n C)."""


class InconsistentSamples(VoxformError):
    """No rational function of the given pole ansatz fits the samples."""


# -- jet scalars --------------------------------------------------------------


class JetScalar:
    """Truncated polynomial sum_j c_j * d^j (d nilpotent of order K+1) over
    ExactScalar; c_1 is the exact derivative of any evaluation with respect
    to the offset."""

    __slots__ = ("coeffs", "order")

    def __init__(self, coeffs, order: int):
        self.order = order
        self.coeffs: list[ExactScalar] = [ExactScalar.coerce(c) if not isinstance(c, ExactScalar) else c
                                          for c in coeffs][: order + 1]
        while len(self.coeffs) < order + 1:
            self.coeffs.append(ZERO)

    @staticmethod
    def point(value: ExactScalar, order: int) -> "JetScalar":
        """value + d."""
        c = [ExactScalar.coerce(value)] + [ONE] + [ZERO] * max(0, order - 1)
        return JetScalar(c[: order + 1], order)

    @staticmethod
    def const(value, order: int) -> "JetScalar":
        return JetScalar([ExactScalar.coerce(value)], order)

    def _lift(self, other) -> "JetScalar":
        if isinstance(other, JetScalar):
            return other
        return JetScalar.const(ExactScalar.coerce(other), self.order)

    def __add__(self, other):
        o = self._lift(other)
        return JetScalar([a + b for a, b in zip(self.coeffs, o.coeffs)], self.order)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._lift(other)
        return JetScalar([a - b for a, b in zip(self.coeffs, o.coeffs)], self.order)

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        o = self._lift(other)
        out = [ZERO] * (self.order + 1)
        for i, a in enumerate(self.coeffs):
            if a.is_zero():
                continue
            for j, b in enumerate(o.coeffs):
                if i + j > self.order:
                    break
                if not b.is_zero():
                    out[i + j] = out[i + j] + a * b
        return JetScalar(out, self.order)

    __rmul__ = __mul__

    def __neg__(self):
        return JetScalar([-a for a in self.coeffs], self.order)

    def inverse(self) -> "JetScalar":
        a0 = self.coeffs[0]
        if a0.is_zero():
            raise ZeroDivisionError("jet with zero constant term")
        inv0 = a0.inverse()
        # Newton-free triangular solve: (a0 + N) * x = 1
        out = [inv0] + [ZERO] * self.order
        for k in range(1, self.order + 1):
            s = ZERO
            for j in range(1, k + 1):
                s = s + self.coeffs[j] * out[k - j]
            out[k] = -(inv0 * s)
        return JetScalar(out, self.order)

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        out = JetScalar.const(ONE, self.order)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coeffs)

    def derivative_coefficient(self, j: int = 1) -> ExactScalar:
        return self.coeffs[j] if j <= self.order else ZERO

    # region predicates and sorting see the constant term
    def abs_squared(self):
        return self.coeffs[0].abs_squared()

    @property
    def re(self):
        return self.coeffs[0].re

    @property
    def im(self):
        return self.coeffs[0].im

    def __repr__(self):
        return "jet(" + ", ".join(repr(c) for c in self.coeffs) + ")"


# -- regions and insertions ----------------------------------------------------


@dataclass(frozen=True)
class Insertion:
    state: GradedVector
    point: ExactScalar


def _distinct(points) -> None:
    seen = set()
    for z in points:
        key = (z.re, z.im)
        if key in seen:
            raise DuplicatePoints(f"coincident insertion point {z}")
        seen.add(key)


def _sorted_by_modulus(insertions: list[Insertion]) -> list[Insertion]:
    """Strictly decreasing |point|; equal moduli of distinct points have no
    convergent operator ordering, so they are rejected."""
    _distinct([ins.point for ins in insertions])
    mods = [(ins.point.abs_squared(), i) for i, ins in enumerate(insertions)]
    order = sorted(range(len(insertions)), key=lambda i: mods[i][0], reverse=True)
    for a, b in zip(order, order[1:]):
        if mods[a][0] == mods[b][0]:
            raise OutOfRegion(
                f"insertion points with equal modulus: {insertions[a].point}, "
                f"{insertions[b].point}")
    return [insertions[i] for i in order]


@dataclass
class RegionSpec:
    """Checkable inequalities on concrete points.

    ordering: indices that must have strictly decreasing modulus.
    difference_bounds: tuples (i, j, k, l) demanding |z_i - z_j| < |z_k - z_l|
    (indices may address a virtual origin via None -> 0).
    """

    ordering: list[int] = field(default_factory=list)
    difference_bounds: list[tuple] = field(default_factory=list)

    def violations(self, points: list[ExactScalar]) -> list[str]:
        out = []

        def at(i):
            return ExactScalar(0) if i is None else points[i]

        mods = [z.abs_squared() for z in points]
        for a, b in zip(self.ordering, self.ordering[1:]):
            if not mods[a] > mods[b]:
                out.append(f"|z{a}| > |z{b}| violated")
        for (i, j, k, l) in self.difference_bounds:
            lhs = (at(i) - at(j)).abs_squared()
            rhs = (at(k) - at(l)).abs_squared()
            if not lhs < rhs:
                out.append(f"|z{i}-z{j}| < |z{k}-z{l}| violated")
        return out


# -- the evaluator -------------------------------------------------------------


def evaluate_correlator(wprime: GradedVector, insertions: list[Insertion],
                        tail: GradedVector, levels: list[int],
                        sort: bool = True):
    """Truncated <w', Y(s1,p1)...Y(sn,pn) tail> at each level of the ladder.

    levels must be strictly increasing; returns one scalar per level, where
    the level-L entry is exactly the value obtained by truncating every
    intermediate vector at weight L.  One propagation pass serves the whole
    ladder: components are bucketed by the highest rung their path has
    needed so far.
    """
    if any(a >= b for a, b in zip(levels, levels[1:])):
        raise ValueError("levels must be strictly increasing")
    ordered = _sorted_by_modulus(list(insertions)) if sort else list(insertions)
    top = levels[-1]

    def bucket_of(w: int) -> int:
        for j, L in enumerate(levels):
            if w <= L:
                return j
        return -1  # dropped

    # part-count reachability: an insertion of a p-part state changes the
    # oscillator count by at most p, so components that cannot reach the
    # dual side's part count within the remaining insertions never pair;
    # dropping them is exact.
    dual_parts = max((len(p) for p in wprime.components), default=0)
    caps = []
    budget = dual_parts
    for ins in ordered:  # outermost first
        budget += _max_parts(ins.state)
        caps.append(budget)
    # caps[i] applies after the insertion ordered[i] has *not* yet run,
    # walking inward; the tail sees the innermost budget
    tail_cap = caps[-1] if caps else dual_parts

    buckets: list[GradedVector] = [GradedVector() for _ in levels]
    for p, c in tail.components.items():
        if len(p) > tail_cap:
            continue
        b = bucket_of(weight(p))
        if b >= 0:
            buckets[b].components[p] = c

    for step, ins in enumerate(reversed(ordered)):
        pos = len(ordered) - 1 - step  # index into ordered/caps
        last = pos == 0
        outw = sorted(wprime.weights()) if last else None
        cap = dual_parts if last else caps[pos - 1]
        new_buckets = [GradedVector() for _ in levels]
        for i, vec in enumerate(buckets):
            if vec.is_zero():
                continue
            img = apply_field(ins.state, ins.point, vec, top,
                              out_weights=outw, max_parts=cap)
            for p, c in img.components.items():
                if len(p) > cap:
                    continue
                b = bucket_of(weight(p))
                if b < 0:
                    continue
                j = max(i, b)
                cur = new_buckets[j].components.get(p)
                cur = c if cur is None else cur + c
                if cur.is_zero():
                    new_buckets[j].components.pop(p, None)
                else:
                    new_buckets[j].components[p] = cur
        buckets = new_buckets

    values = []
    running = ZERO
    for vec in buckets:
        running = running + wprime.pair(vec)
        values.append(running)
    return values


def _max_parts(state: GradedVector) -> int:
    return max((len(p) for p in state.components), default=0)


def evaluate_correlator_vector(insertions: list[Insertion], tail: GradedVector,
                               level: int, sort: bool = True) -> GradedVector:
    """The truncated completion vector Y(s1,p1)...Y(sn,pn) tail."""
    ordered = _sorted_by_modulus(list(insertions)) if sort else list(insertions)
    vec = tail.truncate(level)
    for ins in reversed(ordered):
        vec = apply_field(ins.state, ins.point, vec, level)
    return vec


# -- decay certificates --------------------------------------------------------


@dataclass
class SeriesReport:
    """Per-level values of a truncated series with an empirical geometric
    decay certificate.  All floats are mpmath at the working precision."""

    levels: list[int]
    values: list[ExactScalar]
    increments: list[float]
    fitted_ratio: float | None
    tail_bound: float | None
    contractive: bool
    region_violations: list[str] = field(default_factory=list)

    @property
    def value(self) -> ExactScalar:
        return self.values[-1]

    def as_dict(self) -> dict:
        return {
            "levels": list(self.levels),
            "value": repr(self.values[-1]),
            "increments": [str(x) for x in self.increments],
            "fitted_ratio": None if self.fitted_ratio is None else str(self.fitted_ratio),
            "tail_bound": None if self.tail_bound is None else str(self.tail_bound),
            "contractive": self.contractive,
            "region_violations": list(self.region_violations),
        }


def geometric_fit(levels: list[int], values: list[ExactScalar],
                  safety: int = 2) -> tuple:
    """Empirical ratio certificate for a ladder of partial sums.

    Fits a per-level decay ratio q from consecutive rung increments and
    bounds the remaining tail by safety * |last increment| * q^g/(1 - q^g)
    with g the last rung gap.  Returns (increments, q, tail_bound,
    contractive); a series whose trailing increments vanish is certified
    with tail 0.
    """
    incs = [_abs(b - a) for a, b in zip(values, values[1:])]
    if not incs:
        return [], None, mpmath.mpf(0), True
    ratios = []
    for a, b, ga, gb in zip(incs, incs[1:], levels, levels[1:]):
        if a > 0 and b > 0:
            ratios.append((b / a) ** (mpmath.mpf(1) / (gb - ga)))
    if not ratios:
        if incs[-1] == 0:
            return incs, None, mpmath.mpf(0), True
        return incs, None, None, False
    q = max(ratios)
    if q >= 1:
        return incs, q, None, False
    g = levels[-1] - levels[-2]
    qg = q ** g
    tail = safety * incs[-1] * qg / (1 - qg)
    return incs, q, tail, True


def series_report(levels, values, violations=()) -> SeriesReport:
    incs, q, tail, contractive = geometric_fit(levels, values)
    return SeriesReport(list(levels), list(values), incs, q, tail, contractive,
                        list(violations))


# -- W-forms -------------------------------------------------------------------


@dataclass
class WForm:
    """An n-point form with bound states, wt-differential tags, a tail state
    and a truncation level.

    kind "E" is the correlator-built representative: the value against w' at
    points (z1..zn) is the truncated <w', Y(v1,z1)...Y(vn,zn) tail>.
    """

    states: list[GradedVector]
    tail: GradedVector
    level: int
    kind: str = "E"
    region: RegionSpec | None = None
    check_tags: bool = True

    def __post_init__(self):
        if not self.check_tags:
            return
        for v in self.states:
            if not v.is_homogeneous():
                raise ValueError("slot states must be homogeneous (wt tag)")

    @property
    def arity(self) -> int:
        return len(self.states)

    @property
    def wt_tags(self) -> list[int]:
        return [v.max_weight() for v in self.states]

    def insertions(self, points: list[ExactScalar]) -> list[Insertion]:
        if len(points) != self.arity:
            raise ValueError(f"need {self.arity} points, got {len(points)}")
        _distinct(points)
        return [Insertion(v, ExactScalar.coerce(z))
                for v, z in zip(self.states, points)]


def eval_E(wform: WForm, wprime: GradedVector, points: list[ExactScalar],
           u_tail: GradedVector | None = None,
           levels: list[int] | None = None) -> SeriesReport:
    """E-correlator value as a ladder report; u_tail overrides the form's tail."""
    tail = wform.tail if u_tail is None else u_tail
    levels = levels or _default_ladder(wform.level)
    ins = wform.insertions(points)
    violations = wform.region.violations([i.point for i in ins]) if wform.region else []
    values = evaluate_correlator(wprime, ins, tail, levels)
    return series_report(levels, values, violations)


def eval_E_vector(wform: WForm, points: list[ExactScalar],
                  u_tail: GradedVector | None = None,
                  level: int | None = None) -> GradedVector:
    tail = wform.tail if u_tail is None else u_tail
    return evaluate_correlator_vector(wform.insertions(points), tail,
                                      wform.level if level is None else level)


def eval_E_exact(wform: WForm, wprime: GradedVector, points: list[ExactScalar],
                 u_tail: GradedVector | None = None,
                 max_order: int = 8) -> ExactScalar:
    """Exact correlator value by rational resummation of the level series.

    The per-level increments of the truncated evaluation are recognized as a
    rational generating function (validated on held-out levels) and summed
    in closed form.  Raises InconsistentSamples when the level series of
    this form is not recognized at the working level.
    """
    tail = wform.tail if u_tail is None else u_tail
    ladder = list(range(0, wform.level + 1))
    values = evaluate_correlator(wprime, wform.insertions(points), tail, ladder)
    terms = [values[0]] + [b - a for a, b in zip(values, values[1:])]
    return resum_series(terms, max_order=max_order)


def _default_ladder(level: int) -> list[int]:
    rungs = [level - 6, level - 4, level - 2, level]
    return [r for r in rungs if r >= 0] or [level]


def eval_intertwining(w: GradedVector, zeta: ExactScalar, v: GradedVector,
                      level: int) -> GradedVector:
    """exp(zeta L(-1)) Y(v, -zeta) w, exact on the truncated space."""
    zeta = ExactScalar.coerce(zeta)
    if zeta.is_zero():
        raise PoleAtOrigin("intertwining operator at zeta = 0")
    return apply_translation(zeta, apply_field(v, -zeta, w, level), level)


def permute_form(wform: WForm, sigma: list[int]) -> tuple[WForm, int]:
    """Slot relabeling by sigma (image positions); returns the permuted form
    and the permutation sign."""
    if sorted(sigma) != list(range(wform.arity)):
        raise ValueError(f"not a permutation of 0..{wform.arity - 1}: {sigma}")
    states = [wform.states[sigma[i]] for i in range(wform.arity)]
    sign = _perm_sign(sigma)
    return WForm(states, wform.tail, wform.level, wform.kind, wform.region), sign


def _perm_sign(sigma) -> int:
    sign = 1
    seen = [False] * len(sigma)
    for i in range(len(sigma)):
        if seen[i]:
            continue
        j = i
        clen = 0
        while not seen[j]:
            seen[j] = True
            j = sigma[j]
            clen += 1
        if clen % 2 == 0:
            sign = -sign
    return sign


# -- derivative / conjugation properties ---------------------------------------


def jet_points(points: list[ExactScalar], slot: int, order: int):
    """points with a nilpotent offset added to one slot."""
    out = []
    for i, z in enumerate(points):
        if i == slot:
            out.append(JetScalar.point(z, order))
        else:
            out.append(JetScalar.const(z, order))
    return out


def _jet_correlator(wprime: GradedVector, states: list[GradedVector],
                    jetpts, tail: GradedVector, level: int):
    """Correlator with jet-valued points, through the standard evaluator
    (jets expose the constant term to the region predicates)."""
    ins = [Insertion(s, jp) for s, jp in zip(states, jetpts)]
    val = evaluate_correlator(wprime, ins, tail, [level])[0]
    if not isinstance(val, JetScalar):
        val = JetScalar.const(val, jetpts[0].order)
    return val


@dataclass
class PropertyReport:
    check_id: str
    status: str
    residual: str
    bound: str
    detail: str = ""

    def as_dict(self):
        return {"id": self.check_id, "status": self.status,
                "residual": self.residual, "bound": self.bound,
                "detail": self.detail}


def check_lminus1_property(wform: WForm, wprime: GradedVector,
                           points: list[ExactScalar], direction: int,
                           series_order: int = 3) -> list[PropertyReport]:
    """Translation-generator properties of an E-form at concrete points.

    (i)  d/dz_i of the truncated evaluation equals the evaluation with the
         lowering-translated state in slot i -- exact, via jets.
    (ii) the power-series claim: the jet expansion in an offset on slot i
         matches sum_j d^j/j! <... exp-series-inserted ...> through
         series_order -- exact.
    (iii) the all-slot sum equals the dual-side translation generator action
         -- exact when the tail is translation-invariant (vacuum).
    """
    points = [ExactScalar.coerce(z) for z in points]
    reports = []
    level = wform.level

    # (i) + (ii): jet expansion vs inserted powers of the raising generator
    jp = jet_points(points, direction, series_order)
    jet_val = _jet_correlator(wprime, wform.states, jp, wform.tail, level)
    ok = True
    fact = 1
    lval = wform.states[direction]
    for j in range(1, series_order + 1):
        fact *= j
        lval = virasoro_apply(-1, lval, level)
        states2 = list(wform.states)
        states2[direction] = lval
        ins = [Insertion(s, z) for s, z in zip(states2, points)]
        direct = evaluate_correlator(wprime, ins, wform.tail, [level])[0]
        expected = direct * ExactScalar(Fraction(1, fact))
        if jet_val.derivative_coefficient(j) != expected:
            ok = False
    reports.append(PropertyReport(
        "form.lminus1.slot-derivative", "pass" if ok else "fail",
        "0" if ok else "nonzero", "0",
        f"slot {direction}, series order {series_order}"))

    # (iii) sum over slots vs dual-side action of the lowering generator:
    # <w', L(-1).F> = sum_i d_i <w', F> + <w', F with translated tail>.
    # Truncation-boundary paths can differ between the two routes, so the
    # residual is compared against its own decay certificate.
    ladder = _default_ladder(level)
    resids = []
    for rung in ladder:
        total = JetScalar.const(0, 1)
        for i in range(wform.arity):
            jp1 = jet_points(points, i, 1)
            total = total + _jet_correlator(wprime, wform.states, jp1,
                                            wform.tail, rung)
        slot_sum = total.derivative_coefficient(1)
        wshift = virasoro_transpose(-1, wprime, rung)
        ins = [Insertion(s, z) for s, z in zip(wform.states, points)]
        dual_side = evaluate_correlator(wshift, ins, wform.tail, [rung])[0]
        ltail = virasoro_apply(-1, wform.tail, rung)
        extra = evaluate_correlator(wprime, ins, ltail, [rung])[0] \
            if not ltail.is_zero() else ZERO
        resids.append(dual_side - slot_sum - extra)
    final = resids[-1]
    if final.is_zero():
        status, residual, bound = "pass", "0", "0"
    else:
        _, q, tail, contractive = geometric_fit(ladder, [ZERO] + resids)
        rmag = _abs(final)
        decaying = all(_abs(a) >= _abs(b) for a, b in zip(resids, resids[1:]))
        status = "pass" if decaying and contractive else "fail"
        residual, bound = str(rmag), ("decaying" if decaying else "growing")
    reports.append(PropertyReport(
        "form.lminus1.global-sum", status, residual, str(bound) if bound else "",
        "dual-side generator vs slot derivatives"))
    return reports


def check_l0_conjugation(wform: WForm, wprime: GradedVector, z_scale,
                         points: list[ExactScalar]) -> PropertyReport:
    """z^{L(0)}-conjugation: scale-weighted dual pairing against the form
    equals the form with scaled states and points; exact per level."""
    z = ExactScalar.coerce(z_scale)
    points = [ExactScalar.coerce(p) for p in points]
    level = wform.level
    ins = [Insertion(s, p) for s, p in zip(wform.states, points)]
    wscaled = GradedVector()
    for p, c in wprime.components.items():
        wscaled.components[p] = c * (z ** weight(p))
    lhs = evaluate_correlator(wscaled, ins, wform.tail, [level])[0]

    states2 = [_scale_state(s, z) for s in wform.states]
    tail2 = _scale_state(wform.tail, z)
    ins2 = [Insertion(s, z * p) for s, p in zip(states2, points)]
    rhs = evaluate_correlator(wprime, ins2, tail2, [level])[0]
    resid = lhs - rhs
    ok = resid.is_zero()
    return PropertyReport("form.l0-conjugation", "pass" if ok else "fail",
                          "0" if ok else repr(resid), "0",
                          f"scale {z}")


def _scale_state(v: GradedVector, z: ExactScalar) -> GradedVector:
    out = GradedVector()
    for p, c in v.components.items():
        out.components[p] = c * (z ** weight(p))
    return out


# -- composability series -------------------------------------------------------


def composability_series_I(wform: WForm, wprime: GradedVector,
                           group_states: list[list[GradedVector]],
                           group_points: list[list[ExactScalar]],
                           zetas: list[ExactScalar],
                           level: int) -> SeriesReport:
    """Grouped-projection series: each slot i of the form receives the
    projections of E(l_i)-elements built from its group's states at offsets
    (z - zeta_i), inserted at zeta_i.

    Convergence region: |z_(i)p - zeta_i| + |z_(j)q - zeta_j| < |zeta_i - zeta_j|
    for i != j.  The report's ladder runs over the total projection degree.
    """
    n = wform.arity
    if not (len(group_states) == len(group_points) == len(zetas) == n):
        raise ValueError("need one group and one zeta per slot")
    zetas = [ExactScalar.coerce(z) for z in zetas]
    violations = []
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            for zp in group_points[i]:
                for zq in group_points[j]:
                    lhs = _abs(zp - zetas[i]) + _abs(zq - zetas[j])
                    rhs = _abs(zetas[i] - zetas[j])
                    if not lhs < rhs:
                        violations.append(
                            f"|z-zeta_{i}| + |z'-zeta_{j}| < |zeta_{i}-zeta_{j}| violated")
    # build each group's composite vector at relative offsets
    composites = []
    for i in range(n):
        ins = [Insertion(s, ExactScalar.coerce(z) - zetas[i])
               for s, z in zip(group_states[i], group_points[i])]
        composites.append(evaluate_correlator_vector(ins, vacuum(), level))
    ladder = _default_ladder(level)
    values = []
    for rung in ladder:
        ins = [Insertion(c.truncate(rung), zetas[i]) for i, c in enumerate(composites)]
        val = evaluate_correlator(wprime, ins, wform.tail, [level])[0]
        values.append(val)
    rep = series_report(ladder, values, violations)
    return rep


def composability_series_J(wform: WForm, wprime: GradedVector,
                           front: list[tuple[GradedVector, ExactScalar]],
                           points: list[ExactScalar],
                           level: int) -> SeriesReport:
    """Front vertex operators against the projected form value:
    sum_q <w', Y(v1,z1)...Y(vm,zm) P_q(F(...points...))>.

    Region: every front modulus exceeds every form-point modulus.
    """
    violations = []
    fpts = [ExactScalar.coerce(z) for _, z in front]
    bpts = [ExactScalar.coerce(z) for z in points]
    _distinct(fpts + bpts)
    for zf in fpts:
        for zb in bpts:
            if not zf.abs_squared() > zb.abs_squared():
                violations.append(f"|front {zf}| > |back {zb}| violated")
        if zf.abs_squared() == 0:
            violations.append("front point at origin")
    inner = eval_E_vector(wform, bpts)
    ladder = _default_ladder(level)
    values = []
    for rung in ladder:
        vec = inner.truncate(rung)
        ins = [Insertion(v, z) for (v, _), z in zip(front, fpts)]
        val = evaluate_correlator(wprime, ins, vec, [level])[0]
        values.append(val)
    return series_report(ladder, values, violations)


def check_correl_fn(wprime: GradedVector,
                    groups: list[list[tuple[GradedVector, ExactScalar]]],
                    centers: list[ExactScalar],
                    tail: GradedVector, level: int) -> dict:
    """Grouped-projection series against the flat correlator at shifted
    points.  groups[i] carries (state, offset) pairs; the last group is the
    tail group whose composite is built on the tail state.

    Region: 0 < |offset_p^i| + |offset_q^j| < |center_i - center_j|.
    """
    centers = [ExactScalar.coerce(c) for c in centers]
    if len(groups) != len(centers):
        raise ValueError("need one center per group")
    violations = []
    for i in range(len(groups)):
        for j in range(len(groups)):
            if i >= j:
                continue
            for (_, zp) in groups[i]:
                for (_, zq) in groups[j]:
                    lhs = _abs(ExactScalar.coerce(zp)) + _abs(ExactScalar.coerce(zq))
                    rhs = _abs(centers[i] - centers[j])
                    if not lhs < rhs:
                        violations.append(f"group {i}/{j} offset bound violated")
    # flat evaluation at absolute positions
    flat_ins = []
    for grp, c in zip(groups, centers):
        for s, off in grp:
            flat_ins.append(Insertion(s, ExactScalar.coerce(off) + c))
    shifted_tail = apply_translation(centers[-1], tail, level) \
        if not centers[-1].is_zero() else tail.truncate(level)
    flat = evaluate_correlator(wprime, flat_ins, shifted_tail, [level])[0]

    # grouped evaluation: composite per group at its center
    ladder = _default_ladder(level)
    values = []
    composites = []
    for grp in groups[:-1]:
        ins = [Insertion(s, ExactScalar.coerce(off)) for s, off in grp]
        composites.append(evaluate_correlator_vector(ins, vacuum(), level))
    ins_last = [Insertion(s, ExactScalar.coerce(off)) for s, off in groups[-1]]
    tail_comp = evaluate_correlator_vector(ins_last, tail, level) if ins_last \
        else tail.truncate(level)
    for rung in ladder:
        ins = [Insertion(c.truncate(rung), z)
               for c, z in zip(composites, centers[:-1])]
        tvec = apply_translation(centers[-1], tail_comp.truncate(rung), level) \
            if not centers[-1].is_zero() else tail_comp.truncate(rung)
        values.append(evaluate_correlator(wprime, ins, tvec, [level])[0])
    rep = series_report(ladder, values, violations)
    resid = flat - rep.value
    return {"report": rep, "flat": flat, "residual": resid,
            "residual_abs": _abs(resid)}


def _abs(x: ExactScalar):
    m = x.abs_squared()
    return mpmath.sqrt(mpmath.mpf(m.numerator) / m.denominator)


# -- rational reconstruction ----------------------------------------------------


@dataclass
class RationalReconstruction:
    """Numerator coefficients over a fixed pole ansatz.

    numerator: map from exponent tuple to ExactScalar.
    pole_pairs: ((i, j), order) factors (z_i - z_j)^order in the denominator.
    origin_poles: (i, order) factors z_i^order.
    """

    nvars: int
    numerator: dict[tuple, ExactScalar]
    pole_pairs: list[tuple[tuple[int, int], int]]
    origin_poles: list[tuple[int, int]]

    def denominator_at(self, pt: list[ExactScalar]) -> ExactScalar:
        d = ONE
        for (i, j), order in self.pole_pairs:
            d = d * ((pt[i] - pt[j]) ** order)
        for i, order in self.origin_poles:
            d = d * (pt[i] ** order)
        return d

    def evaluate(self, pt: list[ExactScalar]) -> ExactScalar:
        num = ZERO
        for exps, c in self.numerator.items():
            term = c
            for i, e in enumerate(exps):
                term = term * (pt[i] ** e)
            num = num + term
        return num / self.denominator_at(pt)

    def pole_order(self, i: int, j: int) -> int:
        for (a, b), order in self.pole_pairs:
            if {a, b} == {i, j}:
                return order
        return 0


def reconstruct_rational(samples: list[tuple[list[ExactScalar], ExactScalar]],
                         pole_pairs: list[tuple[tuple[int, int], int]],
                         origin_poles: list[tuple[int, int]] | None = None,
                         numerator_degree: int = 2,
                         holdout: int = 2) -> RationalReconstruction:
    """Exact linear solve for numerator coefficients over the pole ansatz.

    The last ``holdout`` samples only validate; failure to reproduce any
    sample exactly raises InconsistentSamples.
    """
    origin_poles = origin_poles or []
    if not samples:
        raise ValueError("no samples")
    nvars = len(samples[0][0])
    exps = _monomials(nvars, numerator_degree)
    rec = RationalReconstruction(nvars, {}, pole_pairs, origin_poles)
    fit, hold = samples[: len(samples) - holdout], samples[len(samples) - holdout:]
    if len(fit) < len(exps):
        raise ValueError(f"need at least {len(exps)} fitting samples, got {len(fit)}")
    rows = []
    rhs = []
    for pt, val in fit:
        pt = [ExactScalar.coerce(x) for x in pt]
        rows.append([_mono_at(e, pt) for e in exps])
        rhs.append(ExactScalar.coerce(val) * rec.denominator_at(pt))
    sol = _solve_exact(rows, rhs)
    if sol is None:
        raise InconsistentSamples("no numerator over this ansatz fits the samples")
    rec.numerator = {e: c for e, c in zip(exps, sol) if not c.is_zero()}
    for pt, val in samples:
        pt = [ExactScalar.coerce(x) for x in pt]
        if rec.evaluate(pt) != ExactScalar.coerce(val):
            raise InconsistentSamples(
                "reconstruction fails held-out validation; the data is not a "
                "rational function of the declared shape")
    return rec


def _monomials(nvars: int, degree: int) -> list[tuple]:
    if nvars == 0:
        return [()]
    out = []
    for rest in _monomials(nvars - 1, degree):
        for e in range(degree + 1 - 0):
            if sum(rest) + e <= degree:
                out.append((e,) + rest)
    return out


def _mono_at(exps: tuple, pt: list[ExactScalar]) -> ExactScalar:
    total = ONE
    for i, e in enumerate(exps):
        if e:
            total = total * (pt[i] ** e)
    return total


def _solve_exact(rows: list[list[ExactScalar]], rhs: list[ExactScalar]):
    """Gaussian elimination on a rectangular exact system; None when
    inconsistent, free variables pinned to zero."""
    m, n = len(rows), len(rows[0])
    aug = [row[:] + [r] for row, r in zip(rows, rhs)]
    pivots = []
    r = 0
    for c in range(n):
        piv = None
        for i in range(r, m):
            if not aug[i][c].is_zero():
                piv = i
                break
        if piv is None:
            continue
        aug[r], aug[piv] = aug[piv], aug[r]
        inv = aug[r][c].inverse()
        aug[r] = [x * inv for x in aug[r]]
        for i in range(m):
            if i != r and not aug[i][c].is_zero():
                f = aug[i][c]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[r])]
        pivots.append(c)
        r += 1
        if r == m:
            break
    for i in range(r, m):
        if not aug[i][n].is_zero():
            return None
    sol = [ZERO] * n
    for i, c in enumerate(pivots):
        sol[c] = aug[i][n]
    return sol


# -- series recognition (1-D) ---------------------------------------------------


def fit_linear_recurrence(seq: list[ExactScalar], max_order: int,
                          validate: int = 3, max_offset: int = 3,
                          candidate_orders=None):
    """Smallest recurrence sum_j q_j c_{k-j} = 0 (q_0 = 1, order d) holding
    for all k >= d + offset, found by scanning (d, offset); the trailing
    ``validate`` terms are excluded from fitting and only validate.

    Returns (q, offset) or None.  Leading zeros are stripped before fitting
    (they shift the generating function by a monomial, which changes nothing
    at the evaluation point 1).
    """
    lead = 0
    while lead < len(seq) and seq[lead].is_zero():
        lead += 1
    if lead == len(seq):
        return [ONE], 0
    if lead:
        seq = seq[lead:]
    orders = candidate_orders if candidate_orders is not None \
        else range(0, max_order + 1)
    for d in orders:
        for off in range(0, max_offset + 1):
            start = d + off
            if len(seq) < start + d + validate + 1:
                continue
            if d == 0:
                if all(c.is_zero() for c in seq[start:]):
                    return [ONE], off
                continue
            rows = []
            rhs = []
            for k in range(start, len(seq) - validate):
                rows.append([seq[k - j] for j in range(1, d + 1)])
                rhs.append(-seq[k])
            sol = _solve_exact(rows, rhs)
            if sol is None:
                continue
            q = [ONE] + sol
            ok = True
            for k in range(start, len(seq)):
                s = ZERO
                for j, qq in enumerate(q):
                    s = s + qq * seq[k - j]
                if not s.is_zero():
                    ok = False
                    break
            if ok:
                return q, off
    return None


def resum_series(seq: list[ExactScalar], max_order: int = 6,
                 validate: int = 3) -> ExactScalar:
    """Exact sum of sum_k c_k for a sequence whose generating function is
    rational with bounded denominator degree (validated on held-out terms).

    The sum is P(1)/Q(1); a vanishing Q(1) means a pole at the evaluation
    point, i.e. the series does not converge there.  Raises
    InconsistentSamples when no bounded recurrence fits.
    """
    lead = 0
    while lead < len(seq) and seq[lead].is_zero():
        lead += 1
    if lead == len(seq):
        return ZERO
    seq = seq[lead:]
    # any validated recurrence sums the series correctly, so scan orders in
    # coarse steps instead of exhaustively
    steps = sorted({0, 1, 2, 3, 4, 6, 8, 12, 16, 20, 26, 32, max_order})
    fit = fit_linear_recurrence(seq, max_order, validate,
                                candidate_orders=[d for d in steps
                                                  if d <= max_order])
    if fit is None:
        raise InconsistentSamples("no bounded linear recurrence fits the series")
    q, off = fit
    d = len(q) - 1
    # numerator P(s) = Q(s) * C(s) truncated below degree d + off
    pcoeffs = []
    for k in range(d + off):
        s = ZERO
        for j in range(0, min(k, d) + 1):
            if 0 <= k - j < len(seq):
                s = s + q[j] * seq[k - j]
        pcoeffs.append(s)
    q1 = ZERO
    for qq in q:
        q1 = q1 + qq
    if q1.is_zero():
        raise InconsistentSamples("generating function has a pole at the "
                                  "evaluation point; series does not converge")
    p1 = ZERO
    for c in pcoeffs:
        p1 = p1 + c
    return p1 / q1


def pole_order_at(qpoly: list[ExactScalar], z0: ExactScalar) -> int:
    """Multiplicity of z0 as a root of Q(s) = sum q_j s^j."""
    order = 0
    coeffs = list(qpoly)
    while True:
        val = ZERO
        for j, c in enumerate(coeffs):
            val = val + c * (z0 ** j)
        if not val.is_zero():
            return order
        order += 1
        coeffs = [c * (j + 1) for j, c in enumerate(coeffs[1:])]
        if not coeffs:
            return order
