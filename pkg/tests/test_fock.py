import random
from fractions import Fraction as F

import pytest

from voxform.scalars import ExactScalar as E
from voxform.fock import (
    GradedVector,
    OutOfRegion,
    PoleAtOrigin,
    apply_a,
    apply_a_transpose,
    apply_field,
    apply_field_transpose,
    apply_mode,
    apply_translation,
    apply_translation_transpose,
    build_heisenberg,
    check_axioms,
    conformal_state,
    field_on_vacuum_series,
    generator_state,
    matrix_element,
    multi_matrix_element,
    partitions_of,
    vacuum,
    vertex_mode,
    virasoro_apply,
    virasoro_mode,
    virasoro_transpose,
    weight,
)


def partition_count_oracle(n):
    # Euler recurrence via brute force enumeration
    return len(partitions_of(n))


def brute_force_partitions(n):
    out = set()

    def rec(remaining, maxpart, cur):
        if remaining == 0:
            out.add(tuple(cur))
            return
        for p in range(min(remaining, maxpart), 0, -1):
            rec(remaining - p, p, cur + [p])

    rec(n, n, [])
    return out


def test_partition_enumeration_against_brute_force():
    for n in range(9):
        got = set(partitions_of(n))
        assert got == brute_force_partitions(n)


def test_heisenberg_dims():
    ctx = build_heisenberg(6)
    assert [ctx.dim(w) for w in range(7)] == [1, 1, 2, 3, 5, 7, 11]
    ctx0 = build_heisenberg(0)
    assert ctx0.dim(0) == 1


def test_oscillator_commutators_on_basis():
    # [a(m), a(n)] = m delta_{m+n,0} on states with head-room
    ctx = build_heisenberg(7)
    rng = random.Random(3)
    for _ in range(60):
        m = rng.choice([-3, -2, -1, 1, 2, 3])
        n = rng.choice([-3, -2, -1, 1, 2, 3])
        p = rng.choice([q for q in ctx.all_states() if sum(q) <= 7 - abs(m) - abs(n)])
        x = GradedVector.basis(p)
        lhs = apply_a(m, apply_a(n, x)) - apply_a(n, apply_a(m, x))
        expect = x.scale(m) if m + n == 0 else GradedVector()
        assert lhs == expect


def test_annihilation_kills_vacuum():
    for n in range(0, 4):
        assert apply_a(n, vacuum()).is_zero()


def test_creation_oracle_a1_am1():
    v = apply_a(-1, vacuum())
    assert apply_a(1, v) == vacuum()


def test_vertex_mode_identity_field():
    ctx = build_heisenberg(5)
    for k in (-3, -2, -1, 0, 1):
        op = vertex_mode(ctx, vacuum(), k)
        if k == -1:
            for p in ctx.all_states():
                assert op.apply(GradedVector.basis(p)) == GradedVector.basis(p)
        else:
            assert not op.entries


def test_vertex_mode_generator_matches_oscillator():
    ctx = build_heisenberg(6)
    a = generator_state()
    for k in range(-4, 5):
        op = vertex_mode(ctx, a, k)
        for p in ctx.all_states():
            x = GradedVector.basis(p)
            assert op.apply(x) == apply_a(k, x, ctx.cutoff).truncate(ctx.cutoff)


def test_vertex_mode_weight_shift_grading():
    ctx = build_heisenberg(6)
    for p in [(1,), (2,), (1, 1), (2, 1)]:
        v = GradedVector.basis(p)
        for k in range(-3, sum(p) + 2):
            op = vertex_mode(ctx, v, k)
            assert op.weight_shift == sum(p) - k - 1
            assert op.check_grading()


def test_virasoro_l0_is_weight():
    ctx = build_heisenberg(6)
    for p in ctx.all_states():
        x = GradedVector.basis(p)
        assert virasoro_apply(0, x) == x.scale(sum(p))


def test_virasoro_translation_kills_vacuum():
    assert virasoro_apply(-1, vacuum()).is_zero()


def test_virasoro_commutators_with_central_term():
    ctx = build_heisenberg(8)
    for (m, n) in [(1, -1), (2, -2), (3, -3), (2, -1), (1, 1), (-1, -2)]:
        h = abs(m) + abs(n)
        for p in [q for q in ctx.all_states() if sum(q) <= ctx.cutoff - h]:
            x = GradedVector.basis(p)
            lhs = virasoro_apply(m, virasoro_apply(n, x, ctx.cutoff), ctx.cutoff) - \
                virasoro_apply(n, virasoro_apply(m, x, ctx.cutoff), ctx.cutoff)
            rhs = virasoro_apply(m + n, x, ctx.cutoff).scale(m - n)
            if m + n == 0:
                rhs = rhs + x.scale(F(m ** 3 - m, 12))
            assert lhs.truncate(ctx.cutoff - h) == rhs.truncate(ctx.cutoff - h), (m, n, p)


def test_omega_modes_realize_virasoro():
    om = conformal_state()
    ctx = build_heisenberg(6)
    for n in range(-2, 3):
        for p in ctx.all_states():
            if not 0 <= sum(p) - n <= ctx.cutoff:
                continue
            x = GradedVector.basis(p)
            assert apply_mode(om, n + 1, x, ctx.cutoff) == virasoro_apply(n, x, ctx.cutoff)


def test_virasoro_mode_matrix_l0():
    ctx = build_heisenberg(5)
    L0 = virasoro_mode(ctx, 0)
    for p in ctx.all_states():
        assert L0.apply(GradedVector.basis(p)) == GradedVector.basis(p).scale(sum(p))


def test_creation_property_series():
    for p in [(1,), (2,), (1, 1), (3, 2)]:
        v = GradedVector.basis(p)
        series = field_on_vacuum_series(v, 8)
        assert series[0] == v
        assert all(e >= 0 for e in series)


def test_field_creation_shortcut_matches_general_path():
    for p in [(1,), (2, 1), (3, 2, 1), (1, 1, 1, 1)]:
        v = GradedVector.basis(p)
        z = E(F(2, 3))
        L = 9
        general = GradedVector()
        for w_out in range(L + 1):
            k = sum(p) - w_out - 1
            img = apply_mode(v, k, vacuum(), L)
            if not img.is_zero():
                general = general + img.scale(z ** (-k - 1))
        assert general == apply_field(v, z, vacuum(), L)


def test_matrix_element_identity_and_selection():
    one = vacuum()
    assert matrix_element(GradedVector.basis(()), one, E(F(3, 2)), one) == E(1)
    # grading selection: the only weight-2 component of the generator field
    # on the vacuum is single-row, so a two-row dual pairs to zero
    wp = GradedVector.basis((1, 1))
    assert matrix_element(wp, generator_state(), E(2), vacuum()) == E(0)
    # and the single-row dual picks the coefficient z^{+1}
    assert matrix_element(GradedVector.basis((2,)), generator_state(), E(2),
                          vacuum()) == E(2)


def test_two_point_function_partial_sums():
    a = generator_state()
    wp = GradedVector.basis(())
    vals = {}
    for L in (4, 8, 16, 30):
        v = multi_matrix_element(wp, [(a, E(2)), (a, E(1))], vacuum(), L)
        vals[L] = v
        # exact truncated value: sum_{n<=L} n 2^{-n-1}
        expect = sum(F(n, 2 ** (n + 1)) for n in range(1, L + 1))
        assert v == E(expect)
    # converges to the closed form 1/(z1-z2)^2 = 1
    assert abs(float(vals[30].re) - 1) < 1e-7


def test_multi_matrix_element_regions():
    a = generator_state()
    wp = GradedVector.basis(())
    with pytest.raises(OutOfRegion):
        multi_matrix_element(wp, [(a, E(1)), (a, E(2))], vacuum(), 8)
    with pytest.raises(OutOfRegion):
        multi_matrix_element(wp, [(a, E(2)), (a, E(2))], vacuum(), 8)
    with pytest.raises(PoleAtOrigin):
        multi_matrix_element(wp, [(a, E(2)), (a, E(0))], vacuum(), 8)


def test_odd_insertions_vanish_by_parity():
    a = generator_state()
    wp = GradedVector.basis(())
    for pts in ([E(2)], [E(4), E(2), E(1)]):
        val = multi_matrix_element(wp, [(a, z) for z in pts], vacuum(), 20)
        assert val == E(0)


def test_empty_product_is_pairing():
    wp = GradedVector.basis((2, 1))
    u = GradedVector.basis((2, 1)).scale(F(5, 3))
    assert multi_matrix_element(wp, [], u, 6) == E(F(5, 3))


def wick_two_point(z1, z2):
    return ((z1 - z2) ** -2)


def wick_four_point(zs):
    # sum over pair partitions of 1/(zi - zj)^2 products
    (a, b, c, d) = zs
    return (wick_two_point(a, b) * wick_two_point(c, d) +
            wick_two_point(a, c) * wick_two_point(b, d) +
            wick_two_point(a, d) * wick_two_point(b, c))


def test_four_point_against_wick_oracle():
    a = generator_state()
    wp = GradedVector.basis(())
    zs = [E(8), E(4), E(2), E(1)]
    val = multi_matrix_element(wp, [(a, z) for z in zs], vacuum(), 60)
    expect = wick_four_point(zs)
    assert abs(float((val - expect).abs_squared()) ** 0.5) < 1e-12


def test_transposes_match_pairing():
    rng = random.Random(7)
    ctx = build_heisenberg(7)
    states = ctx.all_states()

    def rand_vec(maxw):
        v = GradedVector()
        for _ in range(4):
            p = rng.choice([q for q in states if sum(q) <= maxw])
            v = v + GradedVector.basis(p).scale(F(rng.randint(-5, 5), rng.randint(1, 4)))
        return v

    L = 7
    for _ in range(25):
        w, x = rand_vec(5), rand_vec(5)
        m = rng.choice([-3, -2, -1, 1, 2, 3])
        assert apply_a_transpose(m, w, L).pair(x) == w.pair(apply_a(m, x, L))
        vst = rng.choice([p for p in states if 0 < sum(p) <= 3])
        v = GradedVector.basis(vst)
        z = E(F(rng.randint(1, 5), rng.randint(1, 3)))
        assert apply_field_transpose(v, z, w, L).pair(x) == w.pair(apply_field(v, z, x, L))
        zeta = E(F(rng.randint(1, 3), rng.randint(2, 5)))
        assert apply_translation_transpose(zeta, w, L).pair(x) == \
            w.pair(apply_translation(zeta, x, L))
        n = rng.choice([-2, -1, 0, 1, 2])
        assert virasoro_transpose(n, w, L).pair(x) == w.pair(virasoro_apply(n, x, L))


def test_axiom_suite_passes_and_faults_fail():
    ctx = build_heisenberg(6)
    results = {r.check_id: r.status for r in check_axioms(ctx)}
    assert set(results.values()) == {"pass"}
    corrupted = {r.check_id: r.status for r in check_axioms(ctx, corrupt="l0-bracket")}
    assert corrupted["axiom.l0-bracket"] == "fail"
    corrupted = {r.check_id: r.status for r in check_axioms(ctx, corrupt="identity")}
    assert corrupted["axiom.identity"] == "fail"


def test_lower_truncation_finitely_many_negative_modes():
    # for fixed u, v only finitely many k < 0 give v(k)u != 0 within cutoff
    ctx = build_heisenberg(6)
    v = GradedVector.basis((2,))
    u = GradedVector.basis((1,))
    nonzero = [k for k in range(-10, 0)
               if not apply_mode(v, k, u, ctx.cutoff).is_zero()]
    assert len(nonzero) <= ctx.cutoff
