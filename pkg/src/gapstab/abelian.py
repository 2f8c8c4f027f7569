"""Finite abelian groups, their characters, and the Fourier correspondence
between unitary representations and projection valued measures."""

from __future__ import annotations

import cmath
import itertools
import math

import numpy as np

from .algebra import PVM, TracialAlgebra, UnitaryRep
from .errors import InvalidArgument
from .groups import FiniteGroup, Irrep


class AbelianGroup(FiniteGroup):
    """Product of cyclic groups Z/m_1 x ... x Z/m_r, elements are tuples."""

    def __init__(self, orders):
        orders = tuple(int(m) for m in orders)
        if not orders or any(m <= 0 for m in orders):
            raise InvalidArgument(f"cyclic orders must be positive, got {orders}")
        self.orders = orders
        self.elements = tuple(itertools.product(*[range(m) for m in orders]))
        self.identity = tuple(0 for _ in orders)
        self.exponent = math.lcm(*orders)
        self._post_init_common()

    def mul(self, g, h):
        return tuple((a + b) % m for a, b, m in zip(g, h, self.orders))

    def inv(self, g):
        return tuple((-a) % m for a, m in zip(g, self.orders))

    def power(self, g, k: int):
        return tuple((a * k) % m for a, m in zip(g, self.orders))

    def dual(self) -> "AbelianGroup":
        """The character group; canonically the same product of cyclics."""
        return AbelianGroup(self.orders)

    def pairing(self, chi, a) -> complex:
        """chi(a) = exp(2 pi i sum_j chi_j a_j / m_j).

        Exact (an int, +1 or -1) when the group has exponent at most 2, so
        downstream rational arithmetic stays rational.
        """
        if len(chi) != len(self.orders) or len(a) != len(self.orders):
            raise InvalidArgument("pairing arguments do not match the group rank")
        if self.exponent <= 2:
            return -1 if sum(x * y for x, y in zip(chi, a)) % 2 else 1
        num = 0.0
        for x, y, m in zip(chi, a, self.orders):
            num += (x * y % m) / m
        return cmath.exp(2j * cmath.pi * num)

    def character_table(self) -> np.ndarray:
        """Matrix T[chi_index, a_index] = chi(a) in element order."""
        n = self.order
        t = np.empty((n, n), dtype=complex)
        for i, chi in enumerate(self.elements):
            for j, a in enumerate(self.elements):
                t[i, j] = self.pairing(chi, a)
        return t

    def irreps(self):
        out = []
        for chi in self.elements:
            images = {
                a: np.array([[self.pairing(chi, a)]], dtype=complex)
                for a in self.elements
            }
            out.append(Irrep(self, images, 1))
        return out

    def __repr__(self):
        return "Z" + "x".join(f"/{m}" for m in self.orders)


def cyclic(m: int) -> AbelianGroup:
    return AbelianGroup((m,))


def boolean_group(r: int) -> AbelianGroup:
    """(Z/2)^r, the setting where all character arithmetic is exact."""
    return AbelianGroup((2,) * r)


def regular_algebra(group: FiniteGroup) -> TracialAlgebra:
    return TracialAlgebra.matrix(group.order)


def regular_rep(group: FiniteGroup, algebra: TracialAlgebra | None = None) -> UnitaryRep:
    """Left regular representation by permutation matrices."""
    n = group.order
    if algebra is None:
        algebra = TracialAlgebra.matrix(n)
    if algebra.dims != (n,):
        raise InvalidArgument("regular representation needs one block of size |G|")
    images = {}
    for g in group.elements:
        m = np.zeros((n, n), dtype=complex)
        for h in group.elements:
            m[group.index(group.mul(g, h)), group.index(h)] = 1.0
        images[g] = algebra.element([m])
    return UnitaryRep(group, algebra, images, check="none")


def rep_from_pvm(pvm: PVM, group: AbelianGroup) -> UnitaryRep:
    """Unitary representation of an abelian group from a PVM on its dual.

    U(a) = sum_chi chi(a) P_chi.  The PVM outcomes must be exactly the dual
    group elements.
    """
    if set(pvm.outcomes) != set(group.elements):
        raise InvalidArgument("PVM outcomes must enumerate the dual group")
    alg = pvm.algebra
    images = {}
    for a in group.elements:
        u = alg.zero()
        for chi in group.elements:
            u = u + group.pairing(chi, a) * pvm[chi]
        images[a] = u
    return UnitaryRep(group, alg, images, check="none")


def pvm_from_rep(rep: UnitaryRep, tol: float = 1e-9) -> PVM:
    """Spectral measure of a representation of an abelian group.

    P_chi = E_a conj(chi(a)) U(a); inverse of :func:`rep_from_pvm`.  The
    result is validated as a PVM, which fails if the input is not an honest
    representation.
    """
    group = rep.group
    if not isinstance(group, AbelianGroup):
        raise InvalidArgument("spectral measure requires an abelian group")
    alg = rep.algebra
    projections = []
    for chi in group.elements:
        p = alg.zero()
        for a in group.elements:
            p = p + np.conj(group.pairing(chi, a)) * rep.images[a]
        projections.append((1.0 / group.order) * p)
    return PVM(alg, list(group.elements), projections, tol=tol)
