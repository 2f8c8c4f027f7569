import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gapstab.abelian import boolean_group, cyclic, regular_rep
from gapstab.algebra import (
    PVM,
    AlgebraElement,
    AlmostHom,
    TracialAlgebra,
    UnitaryRep,
    commutant_blocks,
    commutator_gap_check,
    conditional_expectation_commutant,
    defect,
    haar_unitary,
    nearest_unitary_in_commutant,
    norm_conditional_duality_check,
    polar,
    unitary_polar_factor,
)
from gapstab.errors import (
    InvalidArgument,
    InvalidPVM,
    InvalidRepresentation,
    NonGeneratingSupport,
)
from gapstab.spectral import ProbMeasure


def test_algebra_validation():
    alg = TracialAlgebra([(2, Fraction(1, 2)), (3, Fraction(1, 2))])
    assert alg.dims == (2, 3)
    assert abs(alg.tau(alg.identity()) - 1.0) < 1e-15
    with pytest.raises(InvalidArgument):
        TracialAlgebra([(2, Fraction(1, 3))])  # weights must sum to 1
    with pytest.raises(InvalidArgument):
        TracialAlgebra([(0, Fraction(1, 1))])
    with pytest.raises(InvalidArgument):
        TracialAlgebra([(2, Fraction(-1, 2)), (2, Fraction(3, 2))])


def test_trace_is_weighted_block_trace():
    alg = TracialAlgebra([(1, Fraction(1, 4)), (2, Fraction(3, 4))])
    x = AlgebraElement(alg, [np.array([[2.0]]), np.diag([1.0, 3.0])])
    # tau = (1/4) * 2 + (3/4) * (1 + 3)/2
    assert abs(alg.tau(x) - (0.25 * 2 + 0.75 * 2)) < 1e-15


def test_weights_and_compatible():
    alg = TracialAlgebra([(2, Fraction(1, 2)), (3, Fraction(1, 2))])
    assert [abs(float(w) - e) < 1e-15 for w, e in zip(alg.weights, [0.5, 0.5])]
    assert alg.compatible(TracialAlgebra([(2, Fraction(1, 2)), (3, Fraction(1, 2))]))
    assert not alg.compatible(TracialAlgebra.matrix(5))


@given(st.integers(2, 5), st.integers(0, 2**32 - 1))
@settings(max_examples=12, deadline=None)
def test_norms_consistent(n, seed):
    rng = np.random.default_rng(seed)
    alg = TracialAlgebra.matrix(n)
    x = AlgebraElement(alg, [rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))])
    assert alg.norm2(x) <= alg.norm_inf(x) + 1e-12  # tau is a state
    assert abs(alg.norm2(x) ** 2 - float(np.real(alg.tau(x.H * x)))) < 1e-9 * (
        1 + alg.norm2(x) ** 2
    )


def test_element_arithmetic():
    alg = TracialAlgebra.matrix(2)
    x = alg.element([np.array([[0.0, 1.0], [0.0, 0.0]])])
    y = x + x.H
    assert np.allclose(y.blocks[0], np.array([[0, 1], [1, 0]]))
    assert abs(alg.tau(y * y) - 1.0) < 1e-15
    z = 2.0 * x - x
    assert np.allclose(z.blocks[0], x.blocks[0])


def test_haar_unitary():
    rng = np.random.default_rng(3)
    u = haar_unitary(5, rng)
    assert np.max(np.abs(u @ u.conj().T - np.eye(5))) < 1e-12
    # determinism under a reseeded generator
    v = haar_unitary(5, np.random.default_rng(3))
    assert np.allclose(u, v)


def _two_point_pvm(alg, diag):
    p = np.diag(diag).astype(complex)
    return PVM(alg, [1, -1], [alg.element([p]), alg.element([np.eye(len(diag)) - p])])


def test_pvm_validation():
    alg = TracialAlgebra.matrix(2)
    pvm = _two_point_pvm(alg, [1.0, 0.0])
    assert set(pvm.outcomes) == {1, -1}
    p = alg.element([np.diag([1.0, 0.0]).astype(complex)])
    with pytest.raises(InvalidPVM):
        PVM(alg, [0, 1], [p, p])  # not orthogonal / incomplete
    with pytest.raises(InvalidPVM):
        PVM(alg, [0], [p])  # does not sum to the identity
    q = alg.element([np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex)])
    zero = alg.zero()
    # a vanishing projection is legitimate
    PVM(alg, [0, 1, 2], [q, alg.identity() - q, zero])


def test_pvm_conjugated():
    alg = TracialAlgebra.matrix(3)
    pvm = _two_point_pvm(alg, [1.0, 1.0, 0.0])
    u = alg.element([haar_unitary(3, np.random.default_rng(0))])
    moved = pvm.conjugated(u)
    for a in pvm.outcomes:
        assert abs(alg.tau(moved[a]) - alg.tau(pvm[a])) < 1e-12


def test_almost_hom_rejects_non_unitary():
    grp = cyclic(2)
    alg = TracialAlgebra.matrix(2)
    images = {g: alg.identity() for g in grp.elements}
    images[(1,)] = alg.element([np.diag([1.0, 0.5]).astype(complex)])
    with pytest.raises(InvalidRepresentation):
        AlmostHom(grp, alg, images)


def test_unitary_rep_validates_multiplication():
    grp = cyclic(4)
    alg = TracialAlgebra.matrix(2)
    # i^k rotations form a rep; breaking one image must be caught
    rot = np.array([[0.0, -1.0], [1.0, 0.0]])
    images = {
        (k,): alg.element([np.linalg.matrix_power(rot, k).astype(complex)])
        for k in range(4)
    }
    UnitaryRep(grp, alg, images)
    images[(2,)] = alg.element([np.eye(2, dtype=complex)])
    with pytest.raises(InvalidRepresentation):
        UnitaryRep(grp, alg, images)


def test_defect_of_exact_rep_is_zero():
    rep = regular_rep(cyclic(3))
    assert defect(rep) < 1e-28


def test_conditional_expectation():
    rep = regular_rep(boolean_group(2))
    alg = rep.algebra
    rng = np.random.default_rng(5)
    v = alg.element([rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))])
    ev = conditional_expectation_commutant(rep, v)
    for g in rep.group.elements:
        u = rep.images[g]
        assert alg.norm_inf(u * ev - ev * u) < 1e-10
    assert abs(alg.tau(ev) - alg.tau(v)) < 1e-12  # trace preserving
    assert alg.norm2(conditional_expectation_commutant(rep, ev) - ev) < 1e-12


def test_gap_check_identity_and_bounds():
    """The uniform commutator average is exactly twice the commutant distance."""
    rep = regular_rep(cyclic(4))
    alg = rep.algebra
    rng = np.random.default_rng(2)
    v = alg.element([rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))])
    mu = ProbMeasure(rep.group, {(1,): Fraction(1, 2), (3,): Fraction(1, 2)})
    chk = commutator_gap_check(rep, mu, v)
    assert chk.lhs <= chk.rhs_half * (1 + 1e-9) + 1e-12
    assert chk.uniform_average <= chk.rhs_full * (1 + 1e-9) + 1e-12
    assert abs(chk.uniform_average - 2.0 * chk.lhs) < 1e-10 * max(1.0, chk.uniform_average)


def test_gap_check_commutant_element():
    rep = regular_rep(cyclic(3))
    v = conditional_expectation_commutant(
        rep, rep.algebra.element([np.diag([1.0, 2.0, 3.0]).astype(complex)])
    )
    mu = ProbMeasure.uniform(rep.group)
    chk = commutator_gap_check(rep, mu, v)
    assert chk.lhs < 1e-12


def test_gap_check_needs_generating_measure():
    rep = regular_rep(boolean_group(2))
    mu = ProbMeasure(rep.group, {(1, 0): 1})  # generates a proper subgroup
    with pytest.raises(NonGeneratingSupport):
        commutator_gap_check(rep, mu, rep.algebra.identity())


def test_polar_decomposition():
    alg = TracialAlgebra.matrix(3)
    rng = np.random.default_rng(11)
    x = alg.element([rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))])
    u, pos = polar(x)
    assert alg.norm_inf(u * pos - x) < 1e-10
    assert alg.norm_inf(u * u.H - alg.identity()) < 1e-10
    evals = np.linalg.eigvalsh(pos.blocks[0])
    assert evals.min() > -1e-12


def test_polar_with_kernel():
    """On singular input the polar factor is the support partial isometry."""
    alg = TracialAlgebra.matrix(2)
    x = alg.element([np.diag([2.0, 0.0]).astype(complex)])
    w, pos = polar(x)
    support = np.diag([1.0, 0.0])
    assert np.allclose((w.H * w).blocks[0], support)
    assert alg.norm_inf(w * pos - x) < 1e-10


def test_unitary_polar_factor():
    rng = np.random.default_rng(4)
    b = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    u = unitary_polar_factor(b)
    assert np.max(np.abs(u @ u.conj().T - np.eye(4))) < 1e-10


def test_commutant_blocks_regular_rep():
    """The commutant of the regular rep of Z/2 is two one-dimensional blocks."""
    rep = regular_rep(cyclic(2))
    dec = commutant_blocks(rep)
    assert sorted(m for (_, _, m, _) in dec.components) == [1, 1]
    x = conditional_expectation_commutant(
        rep, rep.algebra.element([np.diag([1.0, -2.0]).astype(complex)])
    )
    assert dec.scalar_block_residual(x) < 1e-8
    y = dec.compress(x)
    assert rep.algebra.norm2(dec.lift(y) - x) < 1e-10
    assert abs(dec.algebra_n.tau(y) - rep.algebra.tau(x)) < 1e-12


def test_nearest_unitary_sqrt2():
    """||v - u||_2 <= sqrt(2) ||v - E(v)||_2, tight at a mean-zero unitary."""
    rep = regular_rep(cyclic(2))
    alg = rep.algebra
    v = alg.element([np.diag([1.0, -1.0]).astype(complex)])
    # E(v) = 0 here, so ||v - u||_2^2 = 2 for every unitary u of the commutant
    u = nearest_unitary_in_commutant(rep, v)
    for g in rep.group.elements:
        assert alg.norm_inf(u * rep.images[g] - rep.images[g] * u) < 1e-9
    lhs = alg.norm2(v - u)
    assert abs(lhs - math.sqrt(2.0)) < 1e-9


def test_nearest_unitary_recovers_member():
    rep = regular_rep(boolean_group(2))
    alg = rep.algebra
    v = conditional_expectation_commutant(rep, alg.element(
        [np.diag(np.exp(1j * np.array([0.2, 0.9, 1.4, -0.3])))]
    ))
    u, _ = polar(v)
    # u is a unitary of the commutant already, so it is its own best approximant
    best = nearest_unitary_in_commutant(rep, u)
    assert alg.norm2(best - u) < 1e-8


def test_norm_conditional_duality():
    rep = regular_rep(cyclic(3))
    alg = rep.algebra
    rng = np.random.default_rng(9)
    xi = alg.element([rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))])
    lhs, sup = norm_conditional_duality_check(rep, xi)
    assert abs(lhs - sup) < 1e-9 * max(1.0, lhs)  # the dual pairing attains the norm
    member = conditional_expectation_commutant(rep, xi)
    lhs0, sup0 = norm_conditional_duality_check(rep, member)
    assert lhs0 < 1e-12 and sup0 == 0.0
