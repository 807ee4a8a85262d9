import random
from fractions import Fraction as F

import pytest

from voxform.scalars import ExactScalar as E
from voxform.fock import (
    GradedVector,
    OutOfRegion,
    apply_translation,
    build_heisenberg,
    generator_state,
    vacuum,
)
from voxform.forms import (
    DuplicatePoints,
    InconsistentSamples,
    Insertion,
    JetScalar,
    WForm,
    check_correl_fn,
    check_l0_conjugation,
    check_lminus1_property,
    composability_series_I,
    composability_series_J,
    eval_E,
    eval_E_exact,
    eval_E_vector,
    eval_intertwining,
    evaluate_correlator,
    fit_linear_recurrence,
    geometric_fit,
    permute_form,
    pole_order_at,
    reconstruct_rational,
    resum_series,
)

ONE = vacuum()
A = generator_state()
WP = GradedVector.basis(())


def test_jet_arithmetic():
    x = JetScalar.point(E(2), 3)
    y = (x * x) * x  # (2 + d)^3 = 8 + 12 d + 6 d^2 + d^3
    assert y.coeffs[0] == E(8)
    assert y.coeffs[1] == E(12)
    assert y.coeffs[2] == E(6)
    assert y.coeffs[3] == E(1)
    inv = x.inverse()
    prod = inv * x
    assert prod.coeffs[0] == E(1)
    assert all(c.is_zero() for c in prod.coeffs[1:])
    assert (x ** -2).coeffs[1] == E(F(-2, 8))  # d/dz z^-2 = -2 z^-3 at z=2


def test_eval_E_two_point_with_certificate():
    f2 = WForm([A, A], ONE, 30)
    rep = eval_E(f2, WP, [E(2), E(1)])
    assert abs(float(rep.value.re) - 1) < 1e-7
    assert rep.fitted_ratio is not None and rep.fitted_ratio < 1
    assert rep.tail_bound is not None
    # the increments between rungs shrink geometrically
    assert all(a >= b for a, b in zip(rep.increments, rep.increments[1:]))


def test_eval_E_identity_slot():
    f1 = WForm([ONE], GradedVector.basis((1,)), 10)
    rep = eval_E(f1, GradedVector.basis((1,)), [E(3)])
    assert rep.value == E(1)


def test_eval_E_arity0_is_pairing():
    f0 = WForm([], GradedVector.basis((2, 1)).scale(F(5, 2)), 8)
    rep = eval_E(f0, GradedVector.basis((2, 1)), [])
    assert rep.value == E(F(5, 2))


def test_eval_E_exact_resums_two_point():
    f2 = WForm([A, A], ONE, 26)
    assert eval_E_exact(f2, WP, [E(2), E(1)]) == E(1)
    assert eval_E_exact(f2, WP, [E(3), E(1)]) == E(F(1, 4))


def test_region_errors():
    f2 = WForm([A, A], ONE, 12)
    with pytest.raises(DuplicatePoints):
        eval_E(f2, WP, [E(2), E(2)])
    with pytest.raises(OutOfRegion):
        # distinct points with equal modulus have no convergent ordering
        eval_E(f2, WP, [E(2), E(-2)])


def test_eval_intertwining_cases():
    w1 = GradedVector.basis((1,))
    assert eval_intertwining(w1, E(F(1, 2)), ONE, 8) == \
        apply_translation(E(F(1, 2)), w1, 8)
    # creation case: T(zeta) Y(1,-zeta) w = w  and the generator case
    assert eval_intertwining(ONE, E(F(1, 3)), w1, 8) == w1


def test_permute_form_invariance():
    f2 = WForm([A, A], ONE, 24)
    g, sign = permute_form(f2, [1, 0])
    assert sign == -1
    v1 = eval_E(f2, WP, [E(2), E(1)]).value
    v2 = eval_E(g, WP, [E(1), E(2)]).value
    assert v1 == v2


def test_lminus1_slot_derivative_exact():
    f2 = WForm([A, A], ONE, 28)
    for slot in (0, 1):
        reps = check_lminus1_property(f2, WP, [E(2), E(1)], slot)
        by_id = {r.check_id: r for r in reps}
        assert by_id["form.lminus1.slot-derivative"].status == "pass"
        assert by_id["form.lminus1.global-sum"].status == "pass"


def test_lminus1_nontrivial_dual_side():
    f3 = WForm([A, A, A], GradedVector.basis((1,)), 22)
    reps = check_lminus1_property(f3, GradedVector.basis((2,)),
                                  [E(4), E(2), E(1)], 1)
    assert all(r.status == "pass" for r in reps)


def test_l0_conjugation_exact():
    f2 = WForm([A, A], ONE, 24)
    assert check_l0_conjugation(f2, WP, E(2), [E(2), E(1)]).status == "pass"
    assert check_l0_conjugation(f2, WP, E(1), [E(2), E(1)]).status == "pass"
    f3 = WForm([A, A, A], GradedVector.basis((1,)), 20)
    r = check_l0_conjugation(f3, GradedVector.basis((2,)), E(F(3, 2)),
                             [E(4), E(2), E(1)])
    assert r.status == "pass"


def test_composability_J_series():
    f1 = WForm([A], ONE, 30)
    rep = composability_series_J(f1, WP, [(A, E(3))], [E(1)], 30)
    assert not rep.region_violations
    assert abs(float(rep.value.re) - 0.25) < 1e-10
    assert rep.contractive
    # m = 0 reduces to the direct evaluation
    rep0 = composability_series_J(f1, WP, [], [E(1)], 30)
    direct = eval_E(f1, WP, [E(1)]).value
    assert rep0.value == direct
    # vacuum front state: identity property
    repv = composability_series_J(WForm([A, A], ONE, 24), WP, [(ONE, E(9))],
                                  [E(2), E(1)], 24)
    flat = eval_E(WForm([A, A], ONE, 24), WP, [E(2), E(1)]).value
    assert repv.value == flat


def test_composability_J_region_reported():
    f1 = WForm([A], ONE, 16)
    rep = composability_series_J(f1, WP, [(A, E(1))], [E(3)], 16)
    assert rep.region_violations


def test_composability_I_telescopes():
    f2 = WForm([A, A], ONE, 30)
    zetas = [E(4), E(1)]
    pts = [[E(F(17, 4))], [E(F(5, 4))]]
    rep = composability_series_I(f2, WP, [[A], [A]], pts, zetas, 30)
    assert not rep.region_violations
    assert rep.contractive
    direct = eval_E(f2, WP, [E(F(17, 4)), E(F(5, 4))]).value
    diff = rep.value - direct
    mag = float(diff.abs_squared()) ** 0.5
    assert mag <= max(float(rep.tail_bound) * 4, 1e-28)


def test_composability_I_vacuum_inputs():
    f1 = WForm([A], ONE, 12)
    rep = composability_series_I(f1, WP, [[ONE]], [[E(F(9, 8))]], [E(1)], 12)
    # identity group: the composite the map receives is the vacuum, so the
    # series is the identity-slot evaluation, constant across rungs
    direct = eval_E(WForm([ONE], ONE, 12), WP, [E(1)]).value
    assert rep.value == direct == E(1)
    assert all(v == rep.value for v in rep.values)


def test_correl_fn_grouped_vs_flat():
    res = check_correl_fn(WP, [[(A, E(F(1, 4)))], [(A, E(F(1, 4)))], []],
                          [E(4), E(1), E(0)], ONE, 30)
    assert not res["report"].region_violations
    assert float(res["residual_abs"]) <= float(res["report"].tail_bound)
    # flat value is the shifted two-point function
    assert abs(float(res["flat"].re) - 1 / 9) < 1e-9


def test_correl_fn_single_group_zero_center():
    # one group holding both insertions, centered at the origin: grouping
    # changes nothing and the residual is exactly zero
    res = check_correl_fn(WP, [[], [(A, E(4)), (A, E(1))]], [E(3), E(0)],
                          ONE, 24)
    flat = eval_E(WForm([A, A], ONE, 24), WP, [E(4), E(1)]).value
    assert res["flat"] == flat
    assert res["residual"].is_zero()


def test_reconstruct_rational_cases():
    pts = [(E(2), E(1)), (E(3), E(1)), (E(4), E(1)), (E(3), E(2)),
           (E(5), E(2)), (E(7), E(3)), (E(5), E(1)), (E(9), E(4))]
    samples = [([z1, z2], (z1 - z2) ** -2) for z1, z2 in pts]
    rec = reconstruct_rational(samples, [((0, 1), 2)], numerator_degree=0)
    assert rec.numerator == {(0, 0): E(1)}
    assert rec.pole_order(0, 1) == 2

    samples = [([z1, z2], z1 / (z1 - z2)) for z1, z2 in pts]
    rec = reconstruct_rational(samples, [((0, 1), 1)], numerator_degree=1)
    assert rec.numerator == {(1, 0): E(1)}

    const = [([z1, z2], E(F(7, 3))) for z1, z2 in pts]
    rec = reconstruct_rational(const, [], numerator_degree=0)
    assert rec.numerator == {(0, 0): E(F(7, 3))}


def test_reconstruct_rational_disjoint_sample_sets_agree():
    rng = random.Random(3)

    def draw(n):
        out = set()
        while len(out) < n:
            z1 = F(rng.randint(2, 19), rng.randint(1, 3))
            z2 = F(rng.randint(1, 9), rng.randint(1, 4))
            if z1 != z2:
                out.add((z1, z2))
        return [([E(a), E(b)], (E(a) - E(b)) ** -2) for a, b in out]

    rec1 = reconstruct_rational(draw(8), [((0, 1), 2)], numerator_degree=0)
    rec2 = reconstruct_rational(draw(8), [((0, 1), 2)], numerator_degree=0)
    assert rec1.numerator == rec2.numerator


def test_reconstruct_rational_inconsistent():
    pts = [(E(k), E(1)) for k in range(2, 10)]
    bad = [([z1, z2], E(F(2, 1)) ** int(z1.re)) for z1, z2 in pts]
    with pytest.raises(InconsistentSamples):
        reconstruct_rational(bad, [((0, 1), 2)], numerator_degree=1)


def test_series_recognition_and_pole_order():
    # increments of the (2,1) two-point partial sums: c_n = n 2^{-n-1}
    seq = [E(0)] + [E(F(n, 2 ** (n + 1))) for n in range(1, 25)]
    assert resum_series(seq, max_order=4) == E(1)
    fit = fit_linear_recurrence([E(F(r, 2 ** (r + 1))) for r in range(20)], 4)
    assert fit is not None
    q, off = fit
    # the generating function pole sits at the coincidence point z1 = 2
    assert pole_order_at(q, E(2)) == 2
    assert pole_order_at(q, E(3)) == 0


def test_resum_handles_leading_zeros_and_offsets():
    seq = [E(0)] * 6 + [E(F(1, 2)) ** k for k in range(20)]
    assert resum_series(seq, max_order=3) == E(2)
    assert resum_series([E(0)] * 8, max_order=2) == E(0)


def test_geometric_fit_flags_growth():
    vals = [E(1), E(3), E(9), E(27)]
    incs, q, tail, contractive = geometric_fit([1, 2, 3, 4], vals)
    assert not contractive and q is not None and q >= 1


def test_level_ladder_matches_individual_truncations():
    # one pass with a ladder equals separate truncated propagations
    ins = [Insertion(A, E(4)), Insertion(GradedVector.basis((2,)), E(2)),
           Insertion(A, E(1))]
    tail = GradedVector.basis((1,))
    wp = GradedVector.basis((2, 1))
    ladder_vals = evaluate_correlator(wp, ins, tail, [6, 10, 14])
    for lv, val in zip([6, 10, 14], ladder_vals):
        single = evaluate_correlator(wp, ins, tail, [lv])[0]
        assert single == val
