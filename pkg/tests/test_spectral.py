from fractions import Fraction

import numpy as np
import pytest

from gapstab.abelian import boolean_group, cyclic, regular_rep
from gapstab.codes import code_new
from gapstab.errors import (
    InvalidArgument,
    NonGeneratingSupport,
    ResourceCap,
    SamplingFailure,
)
from gapstab.groups import symmetric_group
from gapstab.spectral import (
    GROUP_ORDER_CAP,
    ProbMeasure,
    alon_roichman_sample,
    kappa,
    kappa_abelian,
    kappa_general,
    poincare_residual,
)


def test_measure_validation():
    grp = cyclic(3)
    mu = ProbMeasure(grp, {(0,): "1/3", (1,): "2/3"})
    assert mu((1,)) == Fraction(2, 3)
    assert mu((2,)) == 0
    with pytest.raises(InvalidArgument):
        ProbMeasure(grp, {(0,): Fraction(1, 2)})  # mass 1/2
    with pytest.raises(InvalidArgument):
        ProbMeasure(grp, {(0,): Fraction(3, 2), (1,): Fraction(-1, 2)})
    with pytest.raises(InvalidArgument):
        ProbMeasure(grp, {(7,): 1})  # not an element


def test_uniform_on_multiset():
    grp = cyclic(2)
    mu = ProbMeasure.uniform_on(grp, [(1,), (1,), (0,)])
    assert mu((1,)) == Fraction(2, 3)


def test_symmetrized_and_convolve():
    grp = cyclic(4)
    mu = ProbMeasure.delta(grp, (1,))
    sym = mu.symmetrized()
    assert sym((1,)) == sym((3,)) == Fraction(1, 2)
    conv = mu.convolve(ProbMeasure.delta(grp, (2,)))
    assert conv((3,)) == 1


def test_generates():
    grp = boolean_group(2)
    assert ProbMeasure.uniform(grp).generates()
    assert not ProbMeasure.delta(grp, (1, 0)).generates()
    two_gens = ProbMeasure.uniform_on(grp, [(1, 0), (0, 1)])
    assert two_gens.generates()


def test_fourier_exact_exponent_two():
    grp = boolean_group(2)
    mu = ProbMeasure.uniform_on(grp, [(1, 0), (0, 1)])
    for chi in grp.elements:
        assert isinstance(mu.fourier(chi), Fraction)
    assert mu.fourier((0, 0)) == 1
    assert mu.fourier((1, 1)) == -1  # both generators pair to -1
    assert mu.fourier((1, 0)) == 0


def test_kappa_repetition_code():
    """kappa = 1/2 for the [3,1,3] repetition measure, exactly."""
    grp = boolean_group(1)
    mu = ProbMeasure.uniform_on(grp, [(1,), (1,), (1,)])
    rep = kappa_abelian(grp, mu)
    assert rep.kappa == Fraction(1, 2)
    assert rep.second_eigenvalue == -1


def test_kappa_uniform_measure():
    grp = boolean_group(3)
    rep = kappa_abelian(grp, ProbMeasure.uniform(grp))
    assert rep.kappa == 1


@pytest.mark.parametrize("n", [1, 2, 3])
def test_kappa_identity_code(n):
    # the [n, n, 1] code places uniform mass on the n standard characters
    grp = boolean_group(n)
    mu = ProbMeasure.uniform_on(
        grp, [tuple(1 if j == i else 0 for j in range(n)) for i in range(n)]
    )
    assert kappa_abelian(grp, mu).kappa == Fraction(n, 2)


def test_kappa_trivial_group():
    grp = cyclic(1)
    assert kappa_abelian(grp, ProbMeasure.uniform(grp)).kappa == 0


def test_kappa_needs_generating_support():
    grp = boolean_group(2)
    with pytest.raises(NonGeneratingSupport):
        kappa_abelian(grp, ProbMeasure.delta(grp, (1, 0)))


def test_kappa_general_s3():
    """Uniform on a transposition and a 3-cycle: kappa = 4/3.

    Oracle: eigenvalues of the symmetrized walk on S3 are
    {1, 1/4, 1/4, 0, -3/4, -3/4}, so the gap is 3/4.
    """
    grp = symmetric_group(3)
    mu = ProbMeasure.uniform_on(grp, [(1, 0, 2), (1, 2, 0)])
    rep = kappa_general(grp, mu)
    assert abs(float(rep.kappa) - 4.0 / 3.0) < 1e-12
    assert abs(float(rep.second_eigenvalue) - 0.25) < 1e-12


def test_kappa_dispatch_consistency():
    grp = boolean_group(2)
    mu = ProbMeasure.uniform_on(grp, [(1, 0), (0, 1), (1, 1)])
    exact = kappa(grp, mu)
    general = kappa_general(grp, mu)
    assert abs(float(exact.kappa) - float(general.kappa)) < 1e-10
    assert exact.method == "abelian-Fourier"


def test_kappa_general_cap():
    grp = symmetric_group(3)
    with pytest.raises(ResourceCap):
        kappa_general(grp, ProbMeasure.uniform(grp), cap=4)
    assert GROUP_ORDER_CAP == 5040


def test_poincare_residual():
    rep = regular_rep(boolean_group(2))
    mu = ProbMeasure.uniform_on(rep.group, [(1, 0), (0, 1)])
    rng = np.random.default_rng(0)
    xi = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    lhs, rhs = poincare_residual(rep, mu, xi)
    assert lhs <= rhs * (1 + 1e-9) + 1e-12
    # invariant vectors sit in the kernel of both sides
    ones = np.ones(4) / 2.0
    lhs0, rhs0 = poincare_residual(rep, mu, ones)
    assert lhs0 < 1e-14 and rhs0 < 1e-14
    with pytest.raises(InvalidArgument):
        poincare_residual(rep, mu, np.ones(3))


def test_measure_jsonable():
    grp = boolean_group(2)
    mu = ProbMeasure.uniform_on(grp, [(1, 0), (1, 0), (0, 1)])
    obj = mu.to_jsonable()
    assert obj == {"1 0": "2/3", "0 1": "1/3"}


def test_alon_roichman_sample():
    grp = boolean_group(3)
    mu = alon_roichman_sample(grp, target_kappa=2.0, rng=np.random.default_rng(1))
    assert float(kappa(grp, mu).kappa) <= 2.0
    again = alon_roichman_sample(grp, target_kappa=2.0, rng=np.random.default_rng(1))
    assert dict(mu.items_nonzero()) == dict(again.items_nonzero())


def test_alon_roichman_failure():
    grp = boolean_group(2)
    with pytest.raises(SamplingFailure):
        alon_roichman_sample(
            grp, target_kappa=1e-6, rng=np.random.default_rng(0), max_tries=3
        )


def test_lazy_measure():
    grp = cyclic(2)
    mu = ProbMeasure.delta(grp, (1,))
    lz = mu.lazy("1/2")
    assert lz((0,)) == Fraction(1, 2) and lz((1,)) == Fraction(1, 2)
    with pytest.raises(InvalidArgument):
        mu.lazy(1)
