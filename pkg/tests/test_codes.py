import itertools
from fractions import Fraction

import numpy as np
import pytest

from gapstab.codes import (
    FiniteField,
    LinearCode,
    code_new,
    finite_field,
    measure_from_code,
    random_code,
    read_code_file,
    reed_muller_multilinear,
    write_code_file,
)
from gapstab.errors import (
    InvalidArgument,
    InvalidField,
    RankDeficient,
    ResourceCap,
    SamplingFailure,
)
from gapstab.spectral import kappa

HAMMING = [
    [1, 0, 0, 0, 0, 1, 1],
    [0, 1, 0, 0, 1, 0, 1],
    [0, 0, 1, 0, 1, 1, 0],
    [0, 0, 0, 1, 1, 1, 1],
]


def test_prime_field():
    f = finite_field(5)
    assert f.mul(3, 4) == 2
    assert f.add(3, 4) == 2
    assert f.inv(2) == 3
    assert f.neg(1) == 4


def test_gf4_polynomial_basis():
    # x^2 = x + 1 under the default modulus, with elements 2 = x, 3 = x + 1
    f = finite_field(4)
    assert f.mul(2, 2) == 3
    assert f.add(2, 3) == 1
    assert f.mul(2, 3) == 1  # x(x+1) = x^2 + x = 1


@pytest.mark.parametrize("q", [2, 3, 4, 5, 8, 9])
def test_field_axioms(q):
    f = finite_field(q)
    els = range(q)
    for a in els:
        assert f.add(a, f.neg(a)) == 0
        if a:
            assert f.mul(a, f.inv(a)) == 1
    for a, b, c in itertools.product(els, repeat=3):
        assert f.mul(a, f.add(b, c)) == f.add(f.mul(a, b), f.mul(a, c))


def test_not_a_prime_power():
    with pytest.raises(InvalidField):
        finite_field(6)
    with pytest.raises(InvalidField):
        finite_field(1)


def test_trace_pairing_invertible():
    f = finite_field(4)
    m = f.trace_pairing()
    assert m.shape == (f.k, f.k)
    assert round(np.linalg.det(m.astype(float))) % f.p != 0


def test_repetition_code():
    code = code_new(2, [[1, 1, 1]])
    assert code.params[:2] == (3, 1)
    assert code.distance() == 3
    assert np.array_equal(code.codeword((1,)), [1, 1, 1])


def test_hamming_code():
    code = code_new(2, HAMMING)
    assert (code.length, code.dim, code.distance()) == (7, 4, 3)


def test_rank_validation():
    with pytest.raises(RankDeficient):
        code_new(2, [[1, 0, 1], [1, 0, 1]])
    with pytest.raises(InvalidArgument):
        code_new(2, [[0, 2, 0]])  # entry outside the field
    with pytest.raises(InvalidArgument):
        code_new(2, [])


def test_distance_cap_and_declared():
    code = code_new(2, HAMMING)
    with pytest.raises(ResourceCap):
        code.distance(cap=4)  # 15 nonzero codewords exceed the cap
    declared = LinearCode(2, HAMMING, distance=3)
    assert declared.distance(cap=1) == 3  # declaration short-circuits
    with pytest.raises(InvalidArgument):
        LinearCode(2, [[1, 1, 0]], distance_bound=3).distance()  # true d = 2


def test_measure_from_repetition():
    code = code_new(2, [[1, 1, 1]])
    group, mu, predicted = measure_from_code(code)
    assert group.orders == (2,)
    assert mu((1,)) == 1  # all three columns give the same character
    assert predicted == Fraction(1, 2)
    assert kappa(group, mu).kappa == predicted


def test_measure_from_hamming():
    group, mu, predicted = measure_from_code(code_new(2, HAMMING))
    assert group.orders == (2,) * 4
    assert sum(p for _, p in mu.items_nonzero()) == 1
    assert predicted == Fraction(7, 6)
    assert kappa(group, mu).kappa == Fraction(7, 6)


def test_measure_from_gf4_code():
    code = code_new(4, [[1, 2]])
    group, mu, predicted = measure_from_code(code)
    # one column per field multiple per nontrivial scalar: (q-1)*K points
    assert sum(p for _, p in mu.items_nonzero()) == 1
    assert predicted == Fraction(3, 4) * Fraction(2, code.distance())
    assert abs(float(kappa(group, mu).kappa) - float(predicted)) < 1e-9


def test_dual_pairing_validation():
    code = code_new(4, [[1, 2]])
    with pytest.raises(InvalidArgument):
        measure_from_code(code, dual_pairing=[[1, 0]])  # wrong shape
    with pytest.raises(InvalidArgument):
        measure_from_code(code, dual_pairing=[[0, 0], [0, 0]])  # singular


def test_reed_muller_multilinear():
    code = reed_muller_multilinear(2, 3)
    # multilinear polynomials in 3 boolean variables, evaluated on 8 points
    assert code.length == 8
    assert code.dim == 8
    assert code.distance() == 1
    # a + b x over F_8 vanishes at most once, so the distance is 7
    code2 = reed_muller_multilinear(8, 1)
    assert (code2.length, code2.dim, code2.distance()) == (8, 2, 7)
    with pytest.raises(InvalidArgument):
        reed_muller_multilinear(3, 2)  # characteristic must be 2
    with pytest.raises(InvalidArgument):
        reed_muller_multilinear(4, 2)  # even extension degree


def test_random_code():
    rng = np.random.default_rng(5)
    code = random_code(2, 8, 3, 3, rng=rng)
    assert (code.length, code.dim) == (8, 3)
    assert code.distance() >= 3
    again = random_code(2, 8, 3, 3, rng=np.random.default_rng(5))
    assert np.array_equal(code.generator, again.generator)


def test_random_code_impossible():
    with pytest.raises(SamplingFailure):
        random_code(2, 3, 2, 3, rng=np.random.default_rng(0), max_tries=20)


def test_code_file_round_trip(tmp_path):
    path = tmp_path / "hamming.code"
    code = code_new(2, HAMMING)
    code.distance()
    write_code_file(path, code)
    back = read_code_file(path)
    assert np.array_equal(back.generator, code.generator)
    assert back.distance() == 3
    empty = tmp_path / "empty.code"
    empty.write_text("")
    with pytest.raises(InvalidArgument):
        read_code_file(empty)


def test_code_file_rejects_malformed(tmp_path):
    bad = tmp_path / "bad.code"
    bad.write_text("2 3\n1 1 1\n")
    with pytest.raises(InvalidArgument):
        read_code_file(bad)
    bad.write_text("2 3 1\n1 1\n")
    with pytest.raises(InvalidArgument):
        read_code_file(bad)
