"""Acceptance suite: every exit criterion at its stated tolerance, one
printed PASS/FAIL line per criterion.

Scale: algebra cutoff 6 (axiom sweeps at weight <= 4 with head-room),
dual-basis levels to 12, exact rational sample points throughout.

Criterion 2a asserts the stated envelope |S_L - 1| <= 2 * (1/2)^L for the
truncated two-point function at (2, 1).  The exact truncation error there is
(L + 2) * 2^-(L+1), which exceeds the envelope for every L >= 3, so that
line is expected to fail; it is implemented exactly as stated rather than
weakened.  The convergence itself (geometric with ratio 1/2) and the exact
pole reconstruction are covered by criterion 2b.
"""

import itertools
import json
import random
from fractions import Fraction as F

import pytest

from oracles import oracle_levels

from voxform.scalars import ExactScalar as E
from voxform.fock import (
    GradedVector,
    apply_a,
    build_heisenberg,
    check_axioms,
    conformal_state,
    generator_state,
    multi_matrix_element,
    vacuum,
)
from voxform.forms import (
    WForm,
    fit_linear_recurrence,
    pole_order_at,
)
from voxform.pairing import BilinearFormContext, adjoint_mode, lambda_from_epsilon
from voxform.sewing import SphereConfig, mobius_from_epsilon, sewing_partner, validate_config
from voxform.eps_product import (
    EpsProductSpec,
    cauchy_report,
    epsilon_product_levels,
    partition_independence,
)
from voxform.coords import (
    CoordinateChange1D,
    NDimChange,
    beta_from_a,
    check_commutator,
    check_form_invariance,
    compose_changes,
    expand_exponential_form,
    p_operator_apply,
)
from voxform.cochains import (
    Cochain,
    coboundary,
    delta_ex_on_delta1,
    delta_squared_check,
    exceptional_G,
    leibniz_check,
    shuffle_check,
)
from voxform.cli import main as cli_main

ONE = vacuum()
A = generator_state()
OM = conformal_state()
WP = GradedVector.basis(())


def report(criterion: str, ok: bool, detail: str = ""):
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {criterion}: {status}  {detail}")
    assert ok, f"criterion {criterion}: {detail}"


# -- 1: VOA axioms -------------------------------------------------------------


def test_criterion_1_voa_axioms():
    ctx = build_heisenberg(6)
    results = check_axioms(ctx)  # weight <= 4 with head-room by default
    bad = [r.check_id for r in results if r.status != "pass"]
    report("1 (axioms exact on weight <= 4)", not bad, f"failed: {bad}" if bad else
           f"{len(results)} axiom groups, residual exactly 0")


# -- 2: two-point convergence ----------------------------------------------------


def two_point_partial(L):
    return multi_matrix_element(WP, [(A, E(2)), (A, E(1))], ONE, L)


def test_criterion_2a_stated_envelope():
    rows = []
    ok = True
    for L in range(4, 15):
        err = (two_point_partial(L) - E(1)).abs_squared()
        bound = F(2, 2 ** L) ** 2
        rows.append((L, float(err) ** 0.5, float(bound) ** 0.5))
        if not err <= bound:
            ok = False
    for L, e, b in rows:
        print(f"  L={L:2d}  |S_L - 1| = {e:.6e}   stated bound = {b:.6e}")
    # exact truncation error is (L+2)/2^(L+1) > 2/2^L for all L >= 3; the
    # stated envelope is asserted verbatim and is expected to fail
    report("2a (two-point |error| <= 2*(1/2)^L for L >= 4)", ok,
           "exact error (L+2)*2^-(L+1) exceeds the stated envelope")


def test_criterion_2b_convergence_and_pole_reconstruction():
    # geometric convergence with ratio exactly 1/2 per level in the limit
    levels = (8, 16, 24, 30)
    errs = [(two_point_partial(L) - E(1)) for L in levels]
    mags = [float(e.abs_squared()) ** 0.5 for e in errs]
    ratios = [(b / a) ** (1 / (lb - la))
              for (a, b, la, lb) in zip(mags, mags[1:], levels, levels[1:])]
    geo = all(r < 0.6 for r in ratios)
    # exact rational reconstruction of the pole: fit the level increments
    incs = [two_point_partial(L) - two_point_partial(L - 1) for L in range(1, 21)]
    fit = fit_linear_recurrence(incs, 4)
    okfit = fit is not None
    order = pole_order_at(fit[0], E(2)) if okfit else None
    report("2b (two-point geometric convergence + pole order 2 at z1=z2)",
           geo and okfit and order == 2,
           f"fitted per-level ratios {['%.3f' % r for r in ratios]}, "
           f"pole order {order}")


# -- 3: bilinear form -------------------------------------------------------------


def test_criterion_3_bilinear_form():
    ctx = build_heisenberg(6)
    ok = True
    detail = []
    for lam in (E(1), lambda_from_epsilon(E(F(1, 4)))):
        form = BilinearFormContext(ctx, lam)
        states = [p for w in range(4) for p in ctx.basis(w)]
        for p in states:
            for q in states:
                x, y = GradedVector.basis(p), GradedVector.basis(q)
                for n in range(-3, 4):
                    if n == 0:
                        continue
                    if form.pair(apply_a(n, x, ctx.cutoff), y) != \
                            form.pair(x, adjoint_mode(A, n, y, lam, ctx.cutoff)):
                        ok = False
                        detail.append(f"invariance {p},{q},n={n}")
                if sum(p) != sum(q) and not form.pair(
                        GradedVector.basis(p), GradedVector.basis(q)).is_zero():
                    ok = False
                    detail.append(f"orthogonality {p},{q}")
        for w in range(5):
            basis = ctx.basis(w)
            duals = form.dual_basis(w)
            for i, pp in enumerate(basis):
                for j, d in enumerate(duals):
                    want = E(1 if i == j else 0)
                    if form.pair(GradedVector.basis(pp), d) != want:
                        ok = False
                        detail.append(f"dual w={w}")
    report("3 (bilinear form: invariance |n|<=3, duals l<=4, orthogonality)",
           ok, "; ".join(detail[:3]) or "exact for lambda = 1 and lambda(eps)")


# -- 4 and 5: the product ----------------------------------------------------------


@pytest.fixture(scope="module")
def product_setup():
    ctx = build_heisenberg(12)
    lam = lambda_from_epsilon(E(F(1, 4)))
    form = BilinearFormContext(ctx, lam)
    cfg = SphereConfig(F(1), F(1), E(F(1, 16)), E(F(1, 4)), E(F(1, 4)),
                       [E(2)], [E(3)])
    spec = EpsProductSpec(WForm([A], ONE, 30), WForm([A], ONE, 30), cfg, form,
                          12, 30, [E(2)], [E(3)])
    crep = cauchy_report(spec, WP)
    return ctx, form, spec, crep


def test_criterion_4_product_oracle_decay_basis(product_setup):
    ctx, form, spec, crep = product_setup
    engine = crep.coefficients
    oracle = oracle_levels(E(2), E(3), E(F(1, 4)), E(F(1, 4)), E(F(1, 16)),
                           form.lam, 12, 30)
    exact_match = all(engine[l] == oracle[l] for l in range(13))
    decay = crep.contractive and float(crep.fitted_ratio) < 0.5

    rng = random.Random(77)
    base = engine
    invariant = True
    for l in (1, 2, 3, 4):
        basis = [GradedVector.basis(p) for p in ctx.basis(l)]
        n = len(basis)
        got = None
        for _ in range(4):
            M = [[F(rng.randint(-3, 3), rng.randint(1, 3)) for _ in range(n)]
                 for _ in range(n)]
            newb = []
            for i in range(n):
                v = GradedVector()
                for j in range(n):
                    if M[i][j]:
                        v = v + basis[j].scale(M[i][j])
                newb.append(v)
            try:
                got = epsilon_product_levels(spec, WP, basis_override={l: newb})
                break
            except Exception:
                continue
        if got is None or got[l] != base[l]:
            invariant = False
    report("4 (product: oracle-exact levels l<=12, fitted q < 1/2, basis-change)",
           exact_match and decay and invariant,
           f"q = {crep.fitted_ratio}, oracle match {exact_match}, "
           f"basis invariance {invariant}")


def test_criterion_5_cauchy_shape(product_setup):
    ctx, form, spec, crep = product_setup
    ok = crep.cauchy_constant is not None and float(crep.cauchy_constant) <= 4
    report("5 (Cauchy shape |c_l| <= C*M*R^-l, C <= 4 on levels 2..12)", ok,
           f"C = {crep.cauchy_constant}, M1 = {crep.M1}, M2 = {crep.M2}, "
           f"R = max({crep.R1}, {crep.R2})")


# -- 6: coboundary -----------------------------------------------------------------


PTS3 = [E(4), E(F(5, 2)), E(F(25, 16))]
PTS4 = [E(4), E(F(5, 2)), E(F(25, 16)), E(F(125, 128))]


def test_criterion_6_coboundary():
    ok = True
    details = []
    # bidegree bookkeeping on constructed cochains
    for n, states in ((0, []), (1, [A]), (2, [A, A])):
        c = Cochain(n, 3, WForm(states, ONE, 16))
        res = coboundary(c, A, E(1) if n else E(2), WP,
                         [E(4), E(2)][:n])
        if res["bidegree"] != (n + 1, 2):
            ok = False
            details.append(f"bidegree arity {n}")
    # delta squared on three cochains (distinct arities and tails); the
    # middle configuration is the nonvacuous one, with honest certificate
    c0 = Cochain(0, 3, WForm([], GradedVector.basis((1,)), 20))
    r0 = delta_squared_check(c0, WP, [A, A], [E(3), E(1)], ladder=[16, 20])
    c1 = Cochain(1, 3, WForm([A], ONE, 28))
    r1 = delta_squared_check(c1, WP, [A, OM, A], PTS3, ladder=[16, 20, 24, 28])
    c2 = Cochain(1, 3, WForm([A], GradedVector.basis((1,)), 24))
    r2 = delta_squared_check(c2, WP, [A, OM, A], PTS3, ladder=[16, 20, 24])
    for tag, r in (("arity0", r0), ("mixed", r1), ("tail", r2)):
        if r.status != "pass":
            ok = False
            details.append(f"delta^2 {tag}: {r.residual} vs {r.bound}")
        if r.residual != "0" and (r.bound in ("", "None") or float(r.bound) > 1e-6):
            ok = False
            details.append(f"delta^2 {tag} bound {r.bound} > 1e-6")
    if r1.residual == "0":
        ok = False
        details.append("flagship delta^2 unexpectedly vacuous")
    # shuffles: exact zero for n = 2; within tails (here exactly zero) for n = 3
    s2 = shuffle_check(Cochain(2, 3, WForm([A, A], ONE, 22)), 1, WP,
                       [E(3), E(1)])
    if s2.status != "pass" or s2.residual != "0":
        ok = False
        details.append("shuffle n=2")
    c3 = Cochain(3, 3, WForm([A, A, A], ONE, 20))
    for s in (1, 2):
        r = shuffle_check(c3, s, WP, [E(4), E(2), E(1)])
        if r.status != "pass":
            ok = False
            details.append(f"shuffle n=3 s={s}")
    report("6 (coboundary: bidegree, delta^2 <= bound <= 1e-6, shuffles)", ok,
           "; ".join(details) or
           f"delta^2 residuals: 0, {r1.residual} (bound {r1.bound}), {r2.residual} (bound {r2.bound})")


# -- 7: Leibniz --------------------------------------------------------------------


def test_criterion_7_leibniz():
    ctx = build_heisenberg(8)
    lam = lambda_from_epsilon(E(F(1, 4)))
    form = BilinearFormContext(ctx, lam)
    rng = random.Random(101)

    def spec_for(xs, ys, inner):
        cfg = SphereConfig(F(1), F(1), E(F(1, 16)), E(F(1, 4)), E(F(1, 4)),
                           xs, ys)
        return EpsProductSpec(WForm([A] * len(xs), ONE, inner),
                              WForm([A] * len(ys), ONE, inner),
                              cfg, form, 4, inner, xs, ys)

    ok = True
    details = []
    configs = 0
    while configs < 5:
        x0 = F(rng.randint(5, 9), 2)
        y0 = F(rng.randint(5, 11), 4)
        ex = F(rng.randint(7, 11), 8)
        if len({abs(x0), abs(y0), abs(ex)}) < 3:
            continue
        c1 = Cochain(1, 2, WForm([A], ONE, 18))
        c2 = Cochain(1, 2, WForm([A], ONE, 18))
        res_lo = leibniz_check(c1, c2, spec_for([E(x0)], [E(y0)], 14), WP,
                               A, E(ex))
        res_hi = leibniz_check(c1, c2, spec_for([E(x0)], [E(y0)], 18), WP,
                               A, E(ex))
        r_lo, r_hi = float(res_lo["residual_abs"]), float(res_hi["residual_abs"])
        if r_hi == 0:
            configs += 1
            continue
        q = (r_hi / r_lo) ** (1 / 4) if r_lo > 0 else 0.5
        bound = r_hi * q ** 4 / (1 - q ** 4) * 4 if q < 1 else None
        if bound is None or r_hi > max(bound, 1e-20) and r_hi > 1e-12:
            ok = False
            details.append(f"cfg {configs}: residual {r_hi}, bound {bound}")
        configs += 1
    # even-parity factor count (sign bookkeeping for (-1)^k)
    c1 = Cochain(2, 2, WForm([A, A], ONE, 18))
    c2 = Cochain(1, 2, WForm([A], ONE, 18))
    res = leibniz_check(c1, c2, spec_for([E(5), E(F(7, 2))], [E(F(11, 4))], 18),
                        WP, OM, E(F(3, 2)))
    if float(res["residual_abs"]) > 1e-10:
        ok = False
        details.append(f"k=2 residual {float(res['residual_abs'])}")
    # the sign actually matters: flipping it breaks the identity
    flip = leibniz_check(Cochain(1, 2, WForm([A], ONE, 18)),
                         Cochain(1, 2, WForm([A], ONE, 18)),
                         spec_for([E(F(7, 2))], [E(3)], 18), WP, OM,
                         E(F(3, 2)), sign_flip=True)
    if float(flip["residual_abs"]) < 1e-6:
        ok = False
        details.append("sign flip not detected")
    report("7 (Leibniz residual within combined tails, 5 configs + both parities)",
           ok, "; ".join(details) or "all configs within certificates")


# -- 8: exceptional complex ----------------------------------------------------------


def test_criterion_8_exceptional():
    ok = True
    details = []
    f2 = WForm([A, A], ONE, 26)
    for which in (1, 2):
        val, rep = exceptional_G(which, f2, WP, A, A, A, E(4), E(2), E(-3),
                                 E(1), 26)
        if rep.region_violations or not rep.contractive:
            ok = False
            details.append(f"G{which} not certified")
    c1 = Cochain(1, 2, WForm([A], ONE, 28))
    r = delta_ex_on_delta1(c1, WP, A, OM, A, *PTS3, ladder=[20, 24, 28])
    if r.status != "pass":
        ok = False
        details.append(f"composition residual {r.residual} vs {r.bound}")
    r2 = delta_ex_on_delta1(c1, WP, A, A, A, *PTS3, ladder=[20, 24])
    if r2.status != "pass" or r2.residual != "0":
        ok = False
        details.append("parity case nonzero")
    report("8 (exceptional: G1/G2 certified, square-of-one composition ~ 0)",
           ok, "; ".join(details) or f"composition residual {r.residual} <= {r.bound}")


# -- 9: coordinate changes -------------------------------------------------------------


def test_criterion_9_coordinates():
    ok = True
    details = []
    rng = random.Random(55)
    for _ in range(20):
        a = [E(F(rng.randint(1, 5), rng.randint(1, 4)))] + \
            [E(F(rng.randint(-4, 4), rng.randint(1, 5))) for _ in range(5)]
        b0, beta = beta_from_a(a, 6)
        if expand_exponential_form(b0, beta, 6)[1:7] != a:
            ok = False
            details.append("round trip")
    ctx = build_heisenberg(6)
    ORD = ctx.cutoff + 2
    fam = [CoordinateChange1D.scaling(E(F(3, 2)), ORD),
           CoordinateChange1D.inverted_translation(E(F(1, 3)), ORD),
           CoordinateChange1D.scaling(E(2), ORD),
           CoordinateChange1D.inverted_translation(E(F(-2, 5)), ORD)]
    for f1 in fam:
        for f2 in fam:
            comp = compose_changes(f1, f2)
            for p in ctx.all_states():
                x = GradedVector.basis(p)
                if p_operator_apply(comp, x) != \
                        p_operator_apply(f1, p_operator_apply(f2, x)):
                    ok = False
                    details.append("representation")
    states = [p for w in range(4) for p in ctx.basis(w)]
    for p in states:
        for n in (-2, -1, 0, 1, 2):
            r = check_commutator(ctx, n, GradedVector.basis(p), E(F(5, 3)),
                                 GradedVector.basis((1,)),
                                 GradedVector.basis((2, 1)))
            if r.status != "pass":
                ok = False
                details.append(f"commutator {p} n={n}")
    f2form = WForm([A, A], ONE, 24)
    checked = 0
    while checked < 10:
        z1 = E(F(rng.randint(5, 12), rng.randint(1, 2)))
        z2 = E(F(rng.randint(1, 4), rng.randint(1, 3)))
        if z1.abs_squared() <= z2.abs_squared():
            continue
        scale = NDimChange(scale=E(F(rng.randint(2, 5), rng.randint(1, 2))),
                           shift=E(0), per_coordinate=[None, None])
        shift = NDimChange(scale=E(1),
                           shift=E(F(rng.randint(1, 3), rng.randint(1, 4))),
                           per_coordinate=[None, None])
        if check_form_invariance(f2form, WP, scale, [z1, z2]).status != "pass":
            ok = False
            details.append("scaling invariance")
        if check_form_invariance(f2form, WP, shift, [z1, z2]).status != "pass":
            ok = False
            details.append("translation invariance")
        checked += 1
    report("9 (coords: round trips, representation, commutator, invariance)",
           ok, "; ".join(sorted(set(details))) or "all exact")


# -- 10: sewing domain ------------------------------------------------------------------


def test_criterion_10_sewing():
    eps = E(F(1, 4))
    z1 = E(F(1, 2))
    z2 = sewing_partner(z1, eps)
    canonical = SphereConfig(F(1), F(1), eps, z1, z2, [E(F(3, 4))], [E(2)])
    ok = validate_config(canonical).valid
    details = []
    perturbations = {
        "RadiusProduct": SphereConfig(F(1, 4), F(1, 4), eps, z1, z2,
                                      [E(F(3, 4))], [E(2)]),
        "SewingRelation": SphereConfig(F(1), F(1), eps, z1, z2 + E(1),
                                       [E(F(3, 4))], [E(2)]),
        "AnnulusZeta": SphereConfig(F(1), F(1), eps, E(F(1, 100)),
                                    sewing_partner(E(F(1, 100)), eps),
                                    [E(F(3, 4))], [E(2)]),
        "XPointBound": SphereConfig(F(1), F(1), eps, z1, z2,
                                    [E(F(1, 100))], [E(2)]),
        "YPointBound": SphereConfig(F(1), F(1), eps, z1, z2,
                                    [E(F(3, 4))], [E(F(1, 100))]),
    }
    for reason, bad in perturbations.items():
        rep = validate_config(bad)
        if rep.valid or not any(reason in v for v in rep.violations):
            ok = False
            details.append(reason)
    for z in (E(F(1, 2)), E(F(3, 4), F(1, 8))):
        if sewing_partner(sewing_partner(z, eps), eps) != z:
            ok = False
            details.append("involution")
    for xi in (+1, -1):
        m = mobius_from_epsilon(E(F(1, 16)), xi)
        if not (isinstance(m.coefficient(), E) and m.coefficient() == E(F(1, 16))):
            ok = False
            details.append(f"mobius xi={xi}")
    report("10 (sewing: canonical valid, 5 rejections, involution, both roots)",
           ok, "; ".join(details) or "all domain checks exact")


# -- 11: partition independence -----------------------------------------------------------


def test_criterion_11_partition_independence():
    ctx = build_heisenberg(8)
    lam = lambda_from_epsilon(E(F(1, 4)))
    form = BilinearFormContext(ctx, lam)
    cfg = SphereConfig(F(1), F(1), E(F(1, 16)), E(F(1, 4)), E(F(1, 4)))
    res = partition_independence([A, A], [E(3), E(1)], cfg, form, WP, 8, 34)
    flat = (E(F(13, 4)) - E(F(5, 4))) ** -2
    ok = res["exact_agreement"] and \
        all(d["normalized"] == flat for d in res["splits"].values())
    report("11 (partition independence across splits 0|2, 1|1, 2|0)", ok,
           f"normalized spread {res['normalized_spread']} (exact agreement: "
           f"{res['exact_agreement']})")


# -- 12: determinism ------------------------------------------------------------------------


def test_criterion_12_determinism(tmp_path):
    outs = []
    for i in (1, 2):
        p = tmp_path / f"rep{i}.json"
        rc = cli_main(["sewing", "--out", str(p)])
        assert rc == 0
        outs.append(p.read_bytes())
    same = outs[0] == outs[1]
    outs2 = []
    for i in (1, 2):
        p = tmp_path / f"coords{i}.json"
        rc = cli_main(["coords", "--out", str(p)])
        assert rc == 0
        outs2.append(p.read_bytes())
    report("12 (byte-identical reports across runs)", same and outs2[0] == outs2[1],
           "sewing and coords suites compared bytewise")
