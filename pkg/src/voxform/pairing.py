"""Invariant bilinear form, adjoint vertex operators and graded dual bases.

The form <.,.>_lambda is constructed, not postulated: starting from
<1,1> = 1, generator modes are peeled off through the adjoint relation

    <u(n) a, b> = <a, u_dag(n) b>,

where the adjoint field of a homogeneous state u is

    Y_dag(u, z) = Y( exp(-(z/lambda^2) L(1)) (-z/lambda)^(-2 L(0)) u,
                     -lambda^2 / z ).

For the weight-1 generator this gives a_dag(n) = (-1)^(n+1) lambda^(2n) a(-n),
which determines the form on the whole Fock space; the construction then
guarantees invariance instead of assuming it.

The Moebius generator t_lambda = exp(lambda L(-1)) exp(lambda^{-1} L(1))
exp(lambda L(-1)) is exposed as the honest truncated triple exponential; on
the full space the composition does not converge entrywise, so consumers
that need the adjoint use the closed substitution formula above (see
``adjoint_mode``) or the form-adjoint (``form_adjoint_mode``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .scalars import ExactScalar, VoxformError, ZERO, ONE
from .fock import (
    CutoffOverflow,
    GradedVector,
    Partition,
    PoleAtOrigin,
    SparseOperator,
    VOAContext,
    apply_a,
    apply_field,
    apply_mode,
    apply_translation,
    apply_lowering_exponential,
    matrix_element,
    partitions_of,
    vacuum,
    virasoro_apply,
    weight,
)

__all__ = [
    "BilinearFormContext",
    "DegenerateForm",
    "lambda_from_epsilon",
    "form_lambda",
    "dual_basis",
    "t_lambda",
    "adjoint_mode",
    "adjoint_matrix_element",
]


class DegenerateForm(VoxformError):
    """A Gram block failed to invert; the form is degenerate at this weight."""


def lambda_from_epsilon(sqrt_epsilon: ExactScalar, xi_sign: int = +1) -> ExactScalar:
    """lambda = -xi * sqrt(epsilon) with xi in {+i, -i} (default +i)."""
    xi = ExactScalar(0, xi_sign)
    return (-ONE) * xi * sqrt_epsilon


def adjoint_state_series(u: GradedVector, lam: ExactScalar):
    """Decompose exp(-(z/lam^2) L(1)) (-z/lam)^(-2L(0)) u into monomials.

    Yields (state, z_exponent, coefficient) triples; finite because L(1) is
    locally nilpotent.  u must be homogeneous.
    """
    if not u.is_homogeneous():
        raise ValueError("adjoint_state_series needs homogeneous input")
    w = u.max_weight()
    lam2 = lam * lam
    # (-z/lam)^(-2w) = (-1)^{2w} lam^{2w} z^{-2w} = lam^{2w} z^{-2w}
    base = u.scale(lam ** (2 * w))
    s = 0
    cur = base
    fact = 1
    while not cur.is_zero():
        coef = ExactScalar(Fraction((-1) ** s, fact)) * (lam2 ** (-s))
        yield cur.scale(coef), s - 2 * w
        nxt = virasoro_apply(1, cur)
        s += 1
        fact *= s
        cur = nxt


def adjoint_mode(u: GradedVector, n: int, x: GradedVector, lam: ExactScalar,
                 level: int | None = None) -> GradedVector:
    """u_dag(n) x via the substitution formula; exact finite sum.

    For each monomial (state g, z-power e): Y(g, -lam^2/z) contributes the
    mode g(m) with z-exponent e + m + 1 matching -n-1 overall.
    """
    lam2 = lam * lam
    out = GradedVector()
    for g, e in _adjoint_monomials(u, lam):
        # z^{-n-1} = z^{e} * (coef of Y at -lam^2/z):
        # Y(g, y) = sum_m g(m) y^{-m-1}, y = -lam^2/z
        # y^{-m-1} = (-lam2)^{-m-1} z^{m+1}; need e + m + 1 = -n - 1
        m = -n - 2 - e
        term = apply_mode(g, m, x, level)
        if not term.is_zero():
            out.add_into(term.scale((-lam2) ** (-m - 1)))
    return out


def _adjoint_monomials(u: GradedVector, lam: ExactScalar):
    return list(adjoint_state_series(u, lam))


@dataclass
class BilinearFormContext:
    """Gram and dual-Gram blocks of <.,.>_lambda per weight on V_{<=cutoff}."""

    ctx: VOAContext
    lam: ExactScalar
    gram_blocks: dict[int, list[list[ExactScalar]]] = field(default_factory=dict)
    dual_blocks: dict[int, list[list[ExactScalar]]] = field(default_factory=dict)

    def __post_init__(self):
        if self.lam.is_zero():
            raise DegenerateForm("lambda must be nonzero")
        for w in range(self.ctx.cutoff + 1):
            basis = self.ctx.basis(w)
            block = [[self._pair_states(p, q) for q in basis] for p in basis]
            self.gram_blocks[w] = block
            self.dual_blocks[w] = _invert_exact(block, w)

    # the defining recursion: peel the largest part with the generator adjoint
    def _pair_states(self, p: Partition, q: Partition) -> ExactScalar:
        if weight(p) != weight(q):
            return ZERO
        return self._pair_rec(p, GradedVector.basis(q))

    def _pair_rec(self, p: Partition, qvec: GradedVector) -> ExactScalar:
        if not p:
            return qvec.coefficient(())
        n, rest = p[0], p[1:]
        # <a(-n) x, y> = <x, a_dag(-n) y> with a_dag(-n) = (-1)^(n+1) lam^(-2n) a(n)
        coef = ExactScalar((-1) ** (n + 1)) * (self.lam ** (-2 * n))
        moved = apply_a(n, qvec).scale(coef)
        if moved.is_zero():
            return ZERO
        total = ZERO
        for qq, cc in moved.components.items():
            total = total + cc * self._pair_rec(rest, GradedVector.basis(qq))
        return total

    def pair(self, a: GradedVector, b: GradedVector) -> ExactScalar:
        total = ZERO
        for p, cp in a.components.items():
            for q, cq in b.components.items():
                total = total + cp * cq * self._pair_states(p, q)
        return total

    def dual_vector(self, p: Partition) -> GradedVector:
        """The vector dual to basis state p: <p, dual(q)> = delta_{pq}."""
        w = weight(p)
        basis = self.ctx.basis(w)
        i = basis.index(p)
        inv = self.dual_blocks[w]
        out = GradedVector()
        for j, q in enumerate(basis):
            if not inv[j][i].is_zero():
                out.components[q] = inv[j][i]
        return out

    def dual_basis(self, w: int) -> list[GradedVector]:
        if w > self.ctx.cutoff:
            raise CutoffOverflow(f"weight {w} beyond cutoff {self.ctx.cutoff}")
        return [self.dual_vector(p) for p in self.ctx.basis(w)]


def _invert_exact(block: list[list[ExactScalar]], w: int) -> list[list[ExactScalar]]:
    """Exact Gauss-Jordan inverse; DegenerateForm when singular."""
    n = len(block)
    aug = [[block[i][j] for j in range(n)] + [ONE if i == j else ZERO for j in range(n)]
           for i in range(n)]
    for col in range(n):
        piv = None
        for r in range(col, n):
            if not aug[r][col].is_zero():
                piv = r
                break
        if piv is None:
            raise DegenerateForm(f"singular Gram block at weight {w}")
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = aug[col][col].inverse()
        aug[col] = [x * inv for x in aug[col]]
        for r in range(n):
            if r != col and not aug[r][col].is_zero():
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [[aug[i][n + j] for j in range(n)] for i in range(n)]


def form_lambda(form: BilinearFormContext, a: GradedVector,
                b: GradedVector) -> ExactScalar:
    """<a, b>_lambda; bilinear, symmetric, block-diagonal by weight."""
    return form.pair(a, b)


def dual_basis(form: BilinearFormContext, w: int) -> list[GradedVector]:
    return form.dual_basis(w)


def t_lambda(v: GradedVector, lam: ExactScalar, cutoff: int) -> GradedVector:
    """exp(lam L(-1)) exp(lam^{-1} L(1)) exp(lam L(-1)) v on V_{<=cutoff}.

    The raising exponentials are truncated at the cutoff; this is the honest
    finite-dimensional version (the untruncated composition does not converge
    entrywise on positive-weight states).
    """
    if lam.is_zero():
        raise ValueError("lambda must be nonzero")
    if v.max_weight() > cutoff:
        raise CutoffOverflow("state beyond cutoff")
    step1 = apply_translation(lam, v, cutoff)
    step2 = _apply_raising_l1(lam.inverse(), step1)
    step3 = apply_translation(lam, step2, cutoff)
    return step3


def _apply_raising_l1(c: ExactScalar, vec: GradedVector) -> GradedVector:
    """exp(c L(1)); L(1) lowers weight so the series terminates."""
    out = vec.copy()
    term = vec.copy()
    j = 1
    fact = 1
    while True:
        term = virasoro_apply(1, term)
        if term.is_zero():
            break
        fact *= j
        out.add_into(term.scale((c ** j) * ExactScalar(Fraction(1, fact))))
        j += 1
    return out


def t_lambda_operator(ctx: VOAContext, lam: ExactScalar) -> SparseOperator:
    return ctx.operator_from_action(lambda x: t_lambda(x, lam, ctx.cutoff))


def t_lambda_inverse_operator(ctx: VOAContext, lam: ExactScalar) -> SparseOperator:
    """Exact matrix inverse of the truncated t_lambda on V_{<=cutoff}."""
    op = t_lambda_operator(ctx, lam)
    states = ctx.all_states()
    index = {p: i for i, p in enumerate(states)}
    n = len(states)
    mat = [[ZERO] * n for _ in range(n)]
    for (pout, pin), c in op.entries.items():
        mat[index[pout]][index[pin]] = c
    try:
        inv = _invert_exact(mat, -1)
    except DegenerateForm:
        raise DegenerateForm("truncated t_lambda is singular at this cutoff")
    entries = {}
    for i, pout in enumerate(states):
        for j, pin in enumerate(states):
            if not inv[i][j].is_zero():
                entries[(pout, pin)] = inv[i][j]
    return SparseOperator(entries, None)


def form_adjoint_mode(form: BilinearFormContext, u: GradedVector, n: int,
                      b: GradedVector) -> GradedVector:
    """The operator adjoint to u(n) with respect to the constructed form:
    the unique X with <u(n) a, b> = <a, X b> for all a, b in the cutoff space.

    Realized blockwise as G^{-1} u(n)^T G.
    """
    ctx = form.ctx
    out = GradedVector()
    for w_in in sorted(b.weights()):
        bw = b.project(w_in)
        # u(n) maps weight w_out -> w_in' = w_out + wt(u) - n - 1 on the a side;
        # adjoint maps b at weight w_in to weight w_out with
        # w_out + wt(u) - n - 1 = w_in
        for wu in sorted(u.weights()):
            w_out = w_in - wu + n + 1
            if w_out < 0 or w_out > ctx.cutoff:
                continue
            basis_out = ctx.basis(w_out)
            basis_in = ctx.basis(w_in)
            # X b = sum_alpha dual(alpha) <u(n) alpha, b>
            for p in basis_out:
                val = form.pair(apply_mode(u.project(wu), n, GradedVector.basis(p),
                                           ctx.cutoff), bw)
                if not val.is_zero():
                    out.add_into(form.dual_vector(p).scale(val))
    return out


def adjoint_matrix_element(form: BilinearFormContext, wprime: GradedVector,
                           u: GradedVector, z: ExactScalar,
                           v: GradedVector) -> tuple[ExactScalar, ExactScalar]:
    """<w', Y_dag(u, z) v> computed two independent ways.

    Side one sums the substitution formula's modes (``adjoint_mode``); side
    two uses the form-adjoint of each mode (the operator the conjugation
    defines on the truncated space).  Both are exact; agreement checks the
    invariance of the constructed form against the closed formula.
    """
    z = ExactScalar.coerce(z)
    if z.is_zero():
        raise PoleAtOrigin("adjoint matrix element at z = 0")
    ctx = form.ctx
    level = max((weight(p) for p in wprime.components), default=0)
    side_subst = ZERO
    side_form = ZERO
    for wu in sorted(u.weights()):
        upiece = u.project(wu)
        for w_in in sorted(v.weights()):
            vpiece = v.project(w_in)
            for w_out in sorted(wprime.weights()):
                # adjoint modes shift weight by -(wt(u) - n - 1) ... solve n
                # from w_out = w_in - wu + n + 1
                n = w_out - w_in + wu - 1
                t1 = adjoint_mode(upiece, n, vpiece, form.lam, ctx.cutoff)
                side_subst = side_subst + wprime.pair(t1) * (z ** (-n - 1))
                t2 = form_adjoint_mode(form, upiece, n, vpiece)
                side_form = side_form + wprime.pair(t2) * (z ** (-n - 1))
    return side_subst, side_form
