"""The sewing-parametrized product of two multi-point forms.

For factor forms F1 (slots at x_1..x_k) and F2 (slots at y_1..y_n), a dual
vector w' and annulus coordinates zeta1 * zeta2 = epsilon, the product value
is the level sum

    sum_l epsilon^l sum_{u in basis(V_l)}
        <w', T(zeta1) Y(u, -zeta1) F1-value> * <w', T(zeta2) Y(ubar, -zeta2) F2-value>,

with T the raising-translation exponential and ubar the dual basis of the
lambda-form.  Each factor is computed by merging the (u, -zeta) insertion into
the factor's own insertion list and evaluating in the canonical
modulus-sorted order (all form points must dominate |zeta|), with the
translation exponential transposed onto w'.

Geometry note (checked by the partition-independence report): the level sum
resums to a two-sphere gluing with effective identification map
z -> eps_eff / z where eps_eff = -epsilon * lambda^2.  Feeding lambda from
the sewing relation (lambda^2 = -epsilon) therefore squares the expansion
parameter; the normalized cross-split comparison uses eps_eff throughout,
so every lambda convention is handled uniformly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import mpmath

from .scalars import ApproxScalar, ExactScalar, VoxformError, ZERO, ONE
from .fock import (
    GradedVector,
    OutOfRegion,
    apply_field,
    apply_field_transpose,
    apply_translation_transpose,
    build_heisenberg,
    partitions_of,
    vacuum,
    virasoro_apply,
    weight,
)
from .forms import (
    Insertion,
    InconsistentSamples,
    JetScalar,
    PropertyReport,
    RationalReconstruction,
    WForm,
    _abs,
    evaluate_correlator,
    geometric_fit,
    jet_points,
    reconstruct_rational,
    resum_series,
)
from .pairing import BilinearFormContext
from .sewing import SphereConfig, validate_config

__all__ = [
    "EpsProductSpec",
    "ConvergenceReport",
    "InvalidConfig",
    "NonContractiveProduct",
    "epsilon_product",
    "epsilon_product_levels",
    "cauchy_report",
    "product_partial_derivative",
    "product_l0_conjugation",
    "partition_independence",
    "pole_structure",
    "intertwined_factor",
]


class InvalidConfig(VoxformError):
    """The sewing configuration failed validation."""


class NonContractiveProduct(VoxformError):
    """The level coefficients do not certify geometric decay."""


@dataclass
class EpsProductSpec:
    """Everything the product needs: factors, sewing data, pairing, levels."""

    left: WForm
    right: WForm
    cfg: SphereConfig
    form: BilinearFormContext          # lambda-form with its dual blocks
    level_max: int                      # dual-basis level cutoff l <= level_max
    inner_level: int                    # truncation inside each factor
    x_points: list[ExactScalar] = field(default_factory=list)
    y_points: list[ExactScalar] = field(default_factory=list)

    def __post_init__(self):
        self.x_points = [ExactScalar.coerce(z) for z in self.x_points]
        self.y_points = [ExactScalar.coerce(z) for z in self.y_points]
        if len(self.x_points) != self.left.arity:
            raise ValueError("left factor arity mismatch")
        if len(self.y_points) != self.right.arity:
            raise ValueError("right factor arity mismatch")
        rep = validate_config(self.cfg)
        if not rep.valid:
            raise InvalidConfig("; ".join(rep.violations))
        if self.form.ctx.cutoff < self.level_max:
            raise ValueError("pairing context cutoff below the level cutoff")

    @property
    def epsilon(self) -> ExactScalar:
        return self.cfg.epsilon

    def effective_epsilon(self) -> ExactScalar:
        """eps_eff = -epsilon * lambda^2, the net per-level expansion factor
        of the dual-basis sum (the sewing identification parameter)."""
        lam = self.form.lam
        return -(self.epsilon * lam * lam)


@dataclass
class ConvergenceReport:
    levels: list[int]
    coefficients: list[ExactScalar]
    value: ExactScalar
    M1: object = None                   # mpmath floats
    M2: object = None
    R1: object = None
    R2: object = None
    fitted_ratio: object = None
    tail_bound: object = None
    contractive: bool = False
    cauchy_constant: object = None
    detail: str = ""

    def as_dict(self) -> dict:
        return {
            "levels": list(self.levels),
            "coefficients": [repr(c) for c in self.coefficients],
            "value": repr(self.value),
            "M1": None if self.M1 is None else str(self.M1),
            "M2": None if self.M2 is None else str(self.M2),
            "R1": None if self.R1 is None else str(self.R1),
            "R2": None if self.R2 is None else str(self.R2),
            "fitted_ratio": None if self.fitted_ratio is None else str(self.fitted_ratio),
            "tail_bound": None if self.tail_bound is None else str(self.tail_bound),
            "contractive": self.contractive,
            "cauchy_constant": None if self.cauchy_constant is None else str(self.cauchy_constant),
            "detail": self.detail,
        }


def intertwined_factor(wprime: GradedVector, factor: WForm,
                       points: list[ExactScalar], u: GradedVector,
                       zeta: ExactScalar, level: int,
                       extra_insertions: list[Insertion] | None = None,
                       tail: GradedVector | None = None) -> ExactScalar:
    """<w', T(zeta) Y(u, -zeta) (factor insertions applied to tail)>.

    The translation exponential is transposed onto w' (exact, the dual side
    is weight-bounded); the u-insertion at -zeta joins the factor's
    insertions and the whole list is evaluated in modulus-sorted order.
    """
    zeta = ExactScalar.coerce(zeta)
    wshift = apply_translation_transpose(zeta, wprime, level)
    ins = [Insertion(s, z) for s, z in zip(factor.states, points)]
    if extra_insertions:
        ins = ins + list(extra_insertions)
    ins.append(Insertion(u, -zeta))
    use_tail = factor.tail if tail is None else tail
    return evaluate_correlator(wshift, ins, use_tail, [level])[0]


def intertwined_factor_exact(wprime: GradedVector, factor: WForm,
                             points: list[ExactScalar], u: GradedVector,
                             zeta: ExactScalar, level: int,
                             max_order: int = 14,
                             tail: GradedVector | None = None) -> ExactScalar:
    """Exact factor value by rational resummation over the inner level.

    Needed when an insertion sits close to the annulus scale, where the
    truncated series converges too slowly to certify; raises
    InconsistentSamples when the level series is not recognized.
    """
    zeta = ExactScalar.coerce(zeta)
    # the series of a weight-w probe starts at inner level ~w, and staggered
    # truncations of nested insertions multiply the pole set; size the
    # ladder generously so the recurrence fit can close (single-row probes
    # need much less than multi-row ones)
    wu = u.max_weight()
    rows = max((len(p) for p in u.components), default=0)
    sw = sum(s.max_weight() for s in factor.states)
    if rows <= 1:
        need_order = wu + sw + 4
    else:
        need_order = 2 * (wu + sw) + 6
    max_order = max(max_order, need_order)
    level = max(level, wu + 2 * need_order + 10)
    wshift = apply_translation_transpose(zeta, wprime, level)
    ins = [Insertion(s, z) for s, z in zip(factor.states, points)]
    ins.append(Insertion(u, -zeta))
    use_tail = factor.tail if tail is None else tail
    ladder = list(range(0, level + 1))
    values = evaluate_correlator(wshift, ins, use_tail, ladder)
    terms = [values[0]] + [b - a for a, b in zip(values, values[1:])]
    return resum_series(terms, max_order=max_order)


def epsilon_product_levels(spec: EpsProductSpec, wprime: GradedVector,
                           basis_override: dict[int, list[GradedVector]] | None = None
                           ) -> list[ExactScalar]:
    """Per-level coefficients c_l of the product for l = 0..level_max.

    basis_override replaces the basis of selected levels (the value must not
    change; dual vectors are recomputed against the override through the
    Gram form).
    """
    eps = spec.epsilon
    lam_form = spec.form
    out: list[ExactScalar] = []
    for l in range(spec.level_max + 1):
        if basis_override and l in basis_override:
            basis_states = basis_override[l]
            duals = _duals_for(lam_form, basis_states, l)
        else:
            basis_states = [GradedVector.basis(p) for p in lam_form.ctx.basis(l)]
            duals = lam_form.dual_basis(l)
        total = ZERO
        for u, ubar in zip(basis_states, duals):
            f1 = intertwined_factor(wprime, spec.left, spec.x_points, u,
                                    spec.cfg.zeta1, spec.inner_level)
            if f1.is_zero():
                continue
            f2 = intertwined_factor(wprime, spec.right, spec.y_points, ubar,
                                    spec.cfg.zeta2, spec.inner_level)
            total = total + f1 * f2
        out.append(total * (eps ** l))
    return out


def _duals_for(form: BilinearFormContext, basis_states: list[GradedVector],
               l: int) -> list[GradedVector]:
    """Dual family of an arbitrary basis of V_(l) under the lambda-form."""
    n = len(basis_states)
    gram = [[form.pair(a, b) for b in basis_states] for a in basis_states]
    from .pairing import _invert_exact
    inv = _invert_exact(gram, l)
    duals = []
    for i in range(n):
        d = GradedVector()
        for j in range(n):
            if not inv[j][i].is_zero():
                d.add_into(basis_states[j].scale(inv[j][i]))
        duals.append(d)
    return duals


def epsilon_product(spec: EpsProductSpec, wprime: GradedVector
                    ) -> tuple[ExactScalar, ConvergenceReport]:
    """The product value with its decay certificate.

    Raises NonContractiveProduct when the certificate fails (fitted ratio
    >= 1); InvalidConfig surfaces from the spec itself.
    """
    report = cauchy_report(spec, wprime)
    if not report.contractive:
        raise NonContractiveProduct(
            f"level coefficients do not certify decay (q={report.fitted_ratio})")
    return report.value, report


def cauchy_report(spec: EpsProductSpec, wprime: GradedVector,
                  grid: int = 5, probe_levels: tuple[int, ...] = (1, 2),
                  fit_window: int = 8) -> ConvergenceReport:
    """Level coefficients plus the grid-estimated sup/radius certificate.

    M_a is the max of |factor_a| over a grid of annulus coordinates zeta
    (grid x grid over radius in [|eps|/r_abar, r_a] and rational angle
    approximations) and over dual-basis probes at the given levels; R_a is
    the outer annulus radius.  The Cauchy-shape constant is
    max_l |c_l| R^l / M over computed levels l >= 2 with M = min(M1, M2),
    R = max(R1, R2).
    """
    coeffs = epsilon_product_levels(spec, wprime)
    levels = list(range(spec.level_max + 1))
    values = []
    run = ZERO
    for c in coeffs:
        run = run + c
        values.append(run)
    window = levels[-min(fit_window, len(levels)):]
    incs, q, tail, contractive = geometric_fit(window,
                                               values[-min(fit_window, len(values)):])
    M1 = _sup_factor(spec, wprime, side=1, grid=grid, probe_levels=probe_levels)
    M2 = _sup_factor(spec, wprime, side=2, grid=grid, probe_levels=probe_levels)
    R1 = mpmath.mpf(spec.cfg.r1.numerator) / spec.cfg.r1.denominator
    R2 = mpmath.mpf(spec.cfg.r2.numerator) / spec.cfg.r2.denominator
    M = min(M1, M2)
    R = max(R1, R2)
    cconst = mpmath.mpf(0)
    if M > 0:
        for l in range(2, spec.level_max + 1):
            mag = _abs(coeffs[l])
            if mag > 0:
                cconst = max(cconst, mag * (R ** l) / M)
    return ConvergenceReport(levels, coeffs, values[-1], M1, M2, R1, R2,
                             q, tail, contractive, cconst)


def _sup_factor(spec: EpsProductSpec, wprime: GradedVector, side: int,
                grid: int, probe_levels: tuple[int, ...]):
    """Grid sup of the factor matrix element over annulus coordinates and
    low-level dual-basis probes; mpmath magnitude."""
    cfg = spec.cfg
    if side == 1:
        factor, points, r_out, r_bar = spec.left, spec.x_points, cfg.r1, cfg.r2
    else:
        factor, points, r_out, r_bar = spec.right, spec.y_points, cfg.r2, cfg.r1
    eps_abs2 = cfg.epsilon.abs_squared()
    # radial grid between |eps|/r_bar and r_out (rational endpoints via squares)
    lo = Fraction(1, 1)
    # use |eps| approx for the lower radius; grid radii only feed sup estimates
    eps_abs = mpmath.sqrt(mpmath.mpf(eps_abs2.numerator) / eps_abs2.denominator)
    rlo = eps_abs / mpmath.mpf(r_bar.numerator) * r_bar.denominator \
        if r_bar else mpmath.mpf(0)
    rhi = mpmath.mpf(r_out.numerator) / r_out.denominator
    best = mpmath.mpf(0)
    # rational points on circles: use tangent half-angle t -> ((1-t^2) + 2ti)/(1+t^2)
    ts = [Fraction(k, grid + 1) for k in range(grid + 1)]
    for i in range(1, grid + 1):
        rad_f = Fraction(int(rlo * 10 ** 6), 10 ** 6) + \
            (Fraction(int(rhi * 10 ** 6), 10 ** 6) - Fraction(int(rlo * 10 ** 6), 10 ** 6)) * Fraction(i, grid)
        if rad_f <= 0:
            continue
        for t in ts:
            den = 1 + t * t
            zeta = ExactScalar(rad_f * (1 - t * t) / den, rad_f * 2 * t / den)
            if zeta.is_zero():
                continue
            # factor points must dominate the probe coordinate
            if any(z.abs_squared() <= zeta.abs_squared() for z in points):
                continue
            for pl in probe_levels:
                for p in partitions_of(pl):
                    try:
                        val = intertwined_factor(wprime, factor, points,
                                                 GradedVector.basis(p), zeta,
                                                 spec.inner_level)
                    except OutOfRegion:
                        continue
                    best = max(best, _abs(val))
    return best


# -- derivative and conjugation properties ---------------------------------------


def product_partial_derivative(spec: EpsProductSpec, wprime: GradedVector,
                               slot: int) -> PropertyReport:
    """d/dz_slot of the product, two ways: jet offset on the slot point
    versus the lowering-translated state in that slot; exact agreement.

    Also checks the all-slot sum against the dual-side translation action
    (factorwise), reported in the detail.
    """
    k = spec.left.arity
    jet_side = _product_jet_derivative(spec, wprime, slot)
    insert_side = _product_with_inserted(spec, wprime, slot)
    resid = jet_side - insert_side
    ok = resid.is_zero()

    total_jet = ZERO
    for s in range(k + spec.right.arity):
        total_jet = total_jet + _product_jet_derivative(spec, wprime, s)
    dual_total = _product_dual_translation(spec, wprime)
    gresid = total_jet - dual_total
    detail = "global sum exact" if gresid.is_zero() else \
        f"global-sum residual {_abs(gresid)}"
    return PropertyReport("product.partial-derivative",
                          "pass" if ok else "fail",
                          "0" if ok else repr(resid), "0",
                          f"slot {slot}; {detail}")


def _with_slot_points(spec: EpsProductSpec, slot: int, jet_order: int):
    k = spec.left.arity
    if slot < k:
        return "left", slot
    return "right", slot - k


def _product_jet_derivative(spec: EpsProductSpec, wprime: GradedVector,
                            slot: int) -> ExactScalar:
    side, idx = _with_slot_points(spec, slot, 1)
    eps = spec.epsilon
    total = ZERO
    for l in range(spec.level_max + 1):
        basis_states = [GradedVector.basis(p) for p in spec.form.ctx.basis(l)]
        duals = spec.form.dual_basis(l)
        lvl = ZERO
        for u, ubar in zip(basis_states, duals):
            if side == "left":
                f1 = _jet_factor(wprime, spec.left, spec.x_points, idx, u,
                                 spec.cfg.zeta1, spec.inner_level)
                if f1.is_zero():
                    continue
                f2 = intertwined_factor(wprime, spec.right, spec.y_points, ubar,
                                        spec.cfg.zeta2, spec.inner_level)
            else:
                f2 = _jet_factor(wprime, spec.right, spec.y_points, idx, ubar,
                                 spec.cfg.zeta2, spec.inner_level)
                if f2.is_zero():
                    continue
                f1 = intertwined_factor(wprime, spec.left, spec.x_points, u,
                                        spec.cfg.zeta1, spec.inner_level)
            lvl = lvl + f1 * f2
        total = total + lvl * (eps ** l)
    return total


def _jet_factor(wprime: GradedVector, factor: WForm, points, idx: int,
                u: GradedVector, zeta: ExactScalar, level: int) -> ExactScalar:
    """d/dz_idx of the intertwined factor via a first-order jet."""
    zeta = ExactScalar.coerce(zeta)
    wshift = apply_translation_transpose(zeta, wprime, level)
    ins = [Insertion(s, JetScalar.point(z, 1) if i == idx else JetScalar.const(z, 1))
           for i, (s, z) in enumerate(zip(factor.states, points))]
    ins.append(Insertion(u, JetScalar.const(-zeta, 1)))
    val = evaluate_correlator(wshift, ins, factor.tail, [level])[0]
    if not isinstance(val, JetScalar):
        return ZERO
    return val.derivative_coefficient(1)


def _product_with_inserted(spec: EpsProductSpec, wprime: GradedVector,
                           slot: int) -> ExactScalar:
    side, idx = _with_slot_points(spec, slot, 1)
    if side == "left":
        states = list(spec.left.states)
        states[idx] = virasoro_apply(-1, states[idx], spec.inner_level)
        left = WForm(states, spec.left.tail, spec.left.level)
        spec2 = _respec(spec, left=left)
    else:
        states = list(spec.right.states)
        states[idx] = virasoro_apply(-1, states[idx], spec.inner_level)
        right = WForm(states, spec.right.tail, spec.right.level)
        spec2 = _respec(spec, right=right)
    return _sum_levels(spec2, wprime)


def _product_dual_translation(spec: EpsProductSpec, wprime: GradedVector) -> ExactScalar:
    """Factorwise dual-side translation generator action: for each factor,
    <w', L(-1) T(zeta) Y(u,-zeta) F> minus the zeta- and tail-contributions
    that are not slot derivatives.

    L(-1) commutes with T(zeta) and [L(-1), Y(u,-zeta)] contributes the
    derivative in the -zeta position, which is not a slot; removing it
    leaves exactly the slot sum.
    """
    eps = spec.epsilon
    total = ZERO
    for l in range(spec.level_max + 1):
        basis_states = [GradedVector.basis(p) for p in spec.form.ctx.basis(l)]
        duals = spec.form.dual_basis(l)
        lvl = ZERO
        for u, ubar in zip(basis_states, duals):
            a1 = _dual_translated_factor(wprime, spec.left, spec.x_points, u,
                                         spec.cfg.zeta1, spec.inner_level)
            b1 = intertwined_factor(wprime, spec.right, spec.y_points, ubar,
                                    spec.cfg.zeta2, spec.inner_level)
            a0 = intertwined_factor(wprime, spec.left, spec.x_points, u,
                                    spec.cfg.zeta1, spec.inner_level)
            b2 = _dual_translated_factor(wprime, spec.right, spec.y_points, ubar,
                                         spec.cfg.zeta2, spec.inner_level)
            lvl = lvl + a1 * b1 + a0 * b2
        total = total + lvl * (eps ** l)
    return total


def _dual_translated_factor(wprime, factor, points, u, zeta, level) -> ExactScalar:
    """Slot-derivative sum of one factor via the dual action.

    The translation generator commutes with the raising exponential, so
    <L(-1)^T w' route> picks up every insertion-point derivative (including
    the one at -zeta) plus the tail contribution; removing those two leaves
    exactly the sum over the factor's own slots.
    """
    zeta = ExactScalar.coerce(zeta)
    from .fock import virasoro_transpose
    wl = virasoro_transpose(-1, wprime, level)
    full = intertwined_factor(wl, factor, points, u, zeta, level)
    # derivative with respect to the -zeta insertion point (jet on it)
    wshift = apply_translation_transpose(zeta, wprime, level)
    ins = [Insertion(s, JetScalar.const(z, 1))
           for s, z in zip(factor.states, points)]
    ins.append(Insertion(u, JetScalar.point(-zeta, 1)))
    dz = evaluate_correlator(wshift, ins, factor.tail, [level])[0]
    zeta_term = dz.derivative_coefficient(1) if isinstance(dz, JetScalar) else ZERO
    ltail = virasoro_apply(-1, factor.tail, level)
    tail_term = ZERO
    if not ltail.is_zero():
        tail_term = intertwined_factor(wprime, factor, points, u, zeta, level,
                                       tail=ltail)
    return full - zeta_term - tail_term


def _respec(spec: EpsProductSpec, left: WForm | None = None,
            right: WForm | None = None) -> EpsProductSpec:
    return EpsProductSpec(left or spec.left, right or spec.right, spec.cfg,
                          spec.form, spec.level_max, spec.inner_level,
                          spec.x_points, spec.y_points)


def _sum_levels(spec: EpsProductSpec, wprime: GradedVector) -> ExactScalar:
    total = ZERO
    for c in epsilon_product_levels(spec, wprime):
        total = total + c
    return total


def product_l0_conjugation(spec: EpsProductSpec, wprime: GradedVector,
                           z_scale) -> PropertyReport:
    """Grading conjugation of the product: the value with scaled states,
    points and annulus coordinates (and epsilon' = z^2 epsilon) against the
    weight-scaled dual pairing; exact per level at matched truncation.

    The lambda-form is held fixed on both sides.
    """
    z = ExactScalar.coerce(z_scale)
    lhs = _conjugated_product(spec, wprime, z)
    wscaled = GradedVector()
    for p, c in wprime.components.items():
        wscaled.components[p] = c * (z ** weight(p))
    rhs = _sum_levels(spec, wscaled)
    resid = lhs - rhs
    ok = resid.is_zero()
    return PropertyReport("product.l0-conjugation", "pass" if ok else "fail",
                          "0" if ok else repr(resid), "0",
                          f"scale {z}, epsilon' = z^2 epsilon")


def _conjugated_product(spec: EpsProductSpec, wprime: GradedVector,
                        z: ExactScalar) -> ExactScalar:
    def scale_state(v: GradedVector) -> GradedVector:
        out = GradedVector()
        for p, c in v.components.items():
            out.components[p] = c * (z ** weight(p))
        return out

    left = WForm([scale_state(s) for s in spec.left.states],
                 scale_state(spec.left.tail), spec.left.level)
    right = WForm([scale_state(s) for s in spec.right.states],
                  scale_state(spec.right.tail), spec.right.level)
    eps2 = spec.epsilon * z * z
    zeta1 = spec.cfg.zeta1 * z
    zeta2 = spec.cfg.zeta2 * z
    scale2 = z.abs_squared()
    # radii rescale with |z| so the scaled configuration stays valid; exact
    # when |z|^2 is a rational square of a rational, else an upper bound
    r1 = spec.cfg.r1 * _rational_sqrt_ceil(scale2)
    r2 = spec.cfg.r2 * _rational_sqrt_ceil(scale2)
    cfg = SphereConfig(r1, r2, eps2, zeta1, zeta2,
                       [z * p for p in spec.x_points],
                       [z * p for p in spec.y_points])
    spec2 = EpsProductSpec(left, right, cfg, spec.form, spec.level_max,
                           spec.inner_level,
                           [z * p for p in spec.x_points],
                           [z * p for p in spec.y_points])
    # the scaled product sums eps2^l; match the unscaled sum's weighting by
    # dividing each level by z^{2l} is already encoded via eps2 = z^2 eps
    return _sum_levels(spec2, wprime)


def _rational_sqrt_ceil(q: Fraction) -> Fraction:
    """A rational upper bound for sqrt(q), exact when q is a perfect square."""
    from .scalars import _isqrt_exact
    rn = _isqrt_exact(q.numerator)
    rd = _isqrt_exact(q.denominator)
    if rn is not None and rd is not None:
        return Fraction(rn, rd)
    x = mpmath.sqrt(mpmath.mpf(q.numerator) / q.denominator)
    return Fraction(int(mpmath.ceil(x * 1000)) + 1, 1000)


# -- partition independence and pole structure ------------------------------------


def partition_independence(states: list[GradedVector],
                           points: list[ExactScalar],
                           cfg: SphereConfig, form: BilinearFormContext,
                           wprime: GradedVector, level_max: int,
                           inner_level: int,
                           splits: list[int] | None = None) -> dict:
    """Cross-split consistency of the product of one fixed slot list.

    The canonical configuration lives on sphere 1 (absolute positions
    w_i = z_i + zeta1).  For a split k, the first k slots feed factor 1
    directly; the remaining slots move to sphere 2 at coordinates determined
    by the identification w = eps_eff / q (q the sphere-2 absolute position,
    q = y + zeta2), and each moved slot contributes the identification
    Jacobian (-eps_eff / q^2)^{wt}.  The normalized values of all splits
    agree within the combined tail certificates.
    """
    n = len(states)
    points = [ExactScalar.coerce(z) for z in points]
    if splits is None:
        splits = list(range(n + 1))
    lam = form.lam
    eps_eff = -(cfg.epsilon * lam * lam)
    results = {}
    for k in splits:
        # factor-1 raw points: the slot point itself (the factor's raising
        # translation moves it to the absolute position w = z + zeta1)
        xs = [z for z in points[:k]]
        ys = []
        jac = ONE
        for v, z in zip(states[k:], points[k:]):
            w_abs = z + cfg.zeta1
            q_abs = eps_eff / w_abs
            ys.append(q_abs - cfg.zeta2)
            # moved slot of weight wt picks (dw/dq)^{-wt}, dw/dq = -eps_eff/q^2
            dwdq = -(eps_eff) / (q_abs * q_abs)
            jac = jac * (dwdq ** (-v.max_weight()))
        left = WForm(list(states[:k]), vacuum(), inner_level)
        right = WForm(list(states[k:]), vacuum(), inner_level)
        cfg_k = SphereConfig(cfg.r1, cfg.r2, cfg.epsilon, cfg.zeta1, cfg.zeta2,
                             xs, ys)
        spec = EpsProductSpec(left, right, cfg_k, form, level_max, inner_level,
                              xs, ys)
        coeffs = _exact_levels(spec, wprime)
        total = resum_series(coeffs, max_order=max(8, level_max + 2))
        results[k] = {"value": total, "normalized": total * jac,
                      "coefficients": coeffs}
    vals = [results[k]["normalized"] for k in splits]
    spread = max((_abs(a - b) for a in vals for b in vals), default=mpmath.mpf(0))
    exact_agree = all(a == b for a in vals for b in vals)
    return {"splits": results, "normalized_spread": spread,
            "exact_agreement": exact_agree, "eps_eff": eps_eff}


def _exact_levels(spec: EpsProductSpec, wprime: GradedVector) -> list[ExactScalar]:
    """Level coefficients with exactly resummed factors."""
    eps = spec.epsilon
    out = []
    for l in range(spec.level_max + 1):
        basis_states = [GradedVector.basis(p) for p in spec.form.ctx.basis(l)]
        duals = spec.form.dual_basis(l)
        total = ZERO
        for u, ubar in zip(basis_states, duals):
            f1 = intertwined_factor_exact(wprime, spec.left, spec.x_points, u,
                                          spec.cfg.zeta1, spec.inner_level)
            if f1.is_zero():
                continue
            f2 = intertwined_factor_exact(wprime, spec.right, spec.y_points, ubar,
                                          spec.cfg.zeta2, spec.inner_level)
            total = total + f1 * f2
        out.append(total * (eps ** l))
    return out


def pole_structure(spec_points: list[tuple[ExactScalar, ExactScalar]],
                   build_spec, wprime: GradedVector,
                   numerator_degree: int = 2,
                   resum_order: int = 8) -> RationalReconstruction:
    """Pole reconstruction of the (1,1) product over a sweep in sewn
    coordinates.

    build_spec(x1, y1) -> EpsProductSpec for raw factor points.  Each value
    is resummed exactly over levels (rational recognition of the level
    series); the reconstruction runs over the sewn-sphere coordinates
    (p, w) = (x1 + zeta1, eps_eff/(y1 + zeta2)) with the identification
    Jacobian weighting, where the only admitted pole is the coincidence
    p = w.  InconsistentSamples signals a pole outside the admitted locus.
    """
    samples = []
    for x1, y1 in spec_points:
        spec = build_spec(ExactScalar.coerce(x1), ExactScalar.coerce(y1))
        coeffs = _exact_levels(spec, wprime)
        val = resum_series(coeffs, max_order=resum_order)
        lam = spec.form.lam
        eps_eff = -(spec.epsilon * lam * lam)
        p = ExactScalar.coerce(x1) + spec.cfg.zeta1
        q = ExactScalar.coerce(y1) + spec.cfg.zeta2
        w = eps_eff / q
        dwdq = -(eps_eff) / (q * q)
        wt = spec.right.states[0].max_weight() if spec.right.states else 0
        samples.append(([p, w], val * (dwdq ** (-wt))))
    return reconstruct_rational(samples, [((0, 1), 2)],
                                numerator_degree=numerator_degree)
