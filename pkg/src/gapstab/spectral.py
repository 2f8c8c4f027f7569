"""Spectral gap constants for probability measures on finite groups.

kappa(mu) = 1/(1 - lambda_2), with lambda_2 the top eigenvalue of the
symmetrized averaging operator away from constants.  For abelian groups this
is a Fourier computation over characters; in general the regular
representation contains every irreducible, so its gap is the universal one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .abelian import AbelianGroup
from .errors import (
    InvalidArgument,
    NonGeneratingSupport,
    ResourceCap,
    SamplingFailure,
)
from .groups import FiniteGroup

GROUP_ORDER_CAP = 5040


class ProbMeasure:
    """Probability measure with exact rational weights."""

    def __init__(self, group: FiniteGroup, weights: dict):
        self.group = group
        w = {}
        for g, p in weights.items():
            if g not in group:
                raise InvalidArgument(f"{g!r} is not an element of the group")
            p = Fraction(p)
            if p < 0:
                raise InvalidArgument(f"negative weight {p} at {g!r}")
            if p > 0:
                w[g] = w.get(g, 0) + p
        if sum(w.values()) != 1:
            raise InvalidArgument(f"weights sum to {sum(w.values())}, expected 1")
        self.weights = w

    @classmethod
    def uniform(cls, group: FiniteGroup) -> "ProbMeasure":
        p = Fraction(1, group.order)
        return cls(group, {g: p for g in group.elements})

    @classmethod
    def uniform_on(cls, group: FiniteGroup, support) -> "ProbMeasure":
        support = list(support)
        p = Fraction(1, len(support))
        w = {}
        for g in support:  # multiset allowed
            w[g] = w.get(g, 0) + p
        return cls(group, w)

    @classmethod
    def delta(cls, group: FiniteGroup, g) -> "ProbMeasure":
        return cls(group, {g: Fraction(1)})

    def __call__(self, g) -> Fraction:
        return self.weights.get(g, Fraction(0))

    def items_nonzero(self):
        return self.weights.items()

    @property
    def support(self):
        return tuple(self.weights.keys())

    def symmetrized(self) -> "ProbMeasure":
        w = {}
        half = Fraction(1, 2)
        for g, p in self.weights.items():
            w[g] = w.get(g, 0) + half * p
            gi = self.group.inv(g)
            w[gi] = w.get(gi, 0) + half * p
        return ProbMeasure(self.group, w)

    def lazy(self, lam) -> "ProbMeasure":
        """Mix with the point mass at the identity: lam*delta_e + (1-lam)*mu."""
        lam = Fraction(lam)
        if not 0 <= lam < 1:
            raise InvalidArgument("mixing weight must lie in [0, 1)")
        w = {g: (1 - lam) * p for g, p in self.weights.items()}
        e = self.group.identity
        w[e] = w.get(e, 0) + lam
        return ProbMeasure(self.group, w)

    def convolve(self, other: "ProbMeasure") -> "ProbMeasure":
        """Distribution of gh with g ~ self and h ~ other, exact weights."""
        if other.group is not self.group and other.group.elements != self.group.elements:
            raise InvalidArgument("convolution needs measures on the same group")
        w = {}
        for g, p in self.weights.items():
            for h, q in other.weights.items():
                gh = self.group.mul(g, h)
                w[gh] = w.get(gh, 0) + p * q
        return ProbMeasure(self.group, w)

    def generates(self) -> bool:
        """Breadth-first saturation of the support (plus inverses)."""
        seen = {self.group.identity}
        frontier = list(seen)
        gens = set(self.support) | {self.group.inv(g) for g in self.support}
        while frontier:
            nxt = []
            for h in frontier:
                for g in gens:
                    gh = self.group.mul(g, h)
                    if gh not in seen:
                        seen.add(gh)
                        nxt.append(gh)
            frontier = nxt
        return len(seen) == self.group.order

    def fourier(self, chi) -> complex:
        """mu-hat(chi) = sum_g mu(g) chi(g) for an abelian group's character."""
        group = self.group
        if not isinstance(group, AbelianGroup):
            raise InvalidArgument("Fourier transform needs an abelian group")
        if group.exponent <= 2:
            return sum(p * group.pairing(chi, g) for g, p in self.weights.items())
        return complex(
            sum(p * group.pairing(chi, g) for g, p in self.weights.items())
        )

    def to_jsonable(self) -> dict:
        return {" ".join(map(str, g)) if isinstance(g, tuple) else str(g): str(p)
                for g, p in self.weights.items()}

    def __repr__(self):
        return f"ProbMeasure(|supp|={len(self.weights)} on {self.group!r})"


@dataclass
class GapReport:
    kappa: object  # Fraction when exact, float otherwise, math.inf allowed
    second_eigenvalue: object
    method: str

    def __post_init__(self):
        if self.kappa != math.inf and self.kappa < 0:
            raise InvalidArgument("kappa must be nonnegative")


def _require_generating(mu: ProbMeasure):
    if not mu.generates():
        raise NonGeneratingSupport(
            "support does not generate the group; kappa is not defined"
        )


def kappa_abelian(group: AbelianGroup, mu: ProbMeasure) -> GapReport:
    """Gap constant via characters: kappa = max_{chi != 1} 1/(1 - Re mu-hat).

    Exact rational arithmetic whenever every character value is +-1, i.e. for
    groups of exponent 2.
    """
    if not isinstance(group, AbelianGroup):
        raise InvalidArgument("kappa_abelian requires an AbelianGroup")
    if mu.group is not group and mu.group.elements != group.elements:
        raise InvalidArgument("measure lives on a different group")
    _require_generating(mu)
    if group.order == 1:
        return GapReport(Fraction(0), -math.inf, "abelian-Fourier")
    exact = group.exponent <= 2
    best = None
    for chi in group.elements:
        if chi == group.identity:
            continue
        if exact:
            val = mu.fourier(chi)  # a Fraction
        else:
            val = float(np.real(mu.fourier(chi)))
        if best is None or val > best:
            best = val
    if exact:
        kappa = Fraction(1) / (1 - best)
    else:
        kappa = 1.0 / (1.0 - best)
    return GapReport(kappa, best, "abelian-Fourier")


def kappa_general(group: FiniteGroup, mu: ProbMeasure, cap: int = GROUP_ORDER_CAP) -> GapReport:
    """Gap constant from the regular representation of the symmetrized measure."""
    n = group.order
    if n > cap:
        raise ResourceCap(f"group order {n} exceeds the cap {cap}")
    if mu.group is not group and mu.group.elements != group.elements:
        raise InvalidArgument("measure lives on a different group")
    _require_generating(mu)
    if n == 1:
        return GapReport(Fraction(0), -math.inf, "regular-rep")
    nu = mu.symmetrized()
    a = np.zeros((n, n))
    for g, p in nu.items_nonzero():
        fp = float(p)
        for h in group.elements:
            a[group.index(group.mul(g, h)), group.index(h)] += fp
    vals = np.linalg.eigvalsh(a)
    lam2 = float(vals[-2])  # top eigenvalue 1 is simple: support generates
    return GapReport(1.0 / (1.0 - lam2), lam2, "regular-rep")


def kappa(group: FiniteGroup, mu: ProbMeasure, cap: int = GROUP_ORDER_CAP) -> GapReport:
    """Dispatch to the Fourier path for abelian groups, regular rep otherwise."""
    if isinstance(group, AbelianGroup):
        return kappa_abelian(group, mu)
    return kappa_general(group, mu, cap=cap)


def poincare_residual(rep, mu: ProbMeasure, xi) -> tuple[float, float]:
    """Both sides of the Poincare inequality for a vector.

    lhs = ||xi - P xi||^2 with P the projection onto invariant vectors,
    rhs = (kappa/2) * sum_g mu(g) ||rep(g) xi - xi||^2.  Plain Euclidean
    norms; xi is a vector of length equal to the representation space
    (blocks concatenated).
    """
    alg = rep.algebra
    xi = np.asarray(xi, dtype=complex)
    if xi.shape != (alg.total_dim,):
        raise InvalidArgument(
            f"vector length {xi.shape} does not match dimension {alg.total_dim}"
        )
    _require_generating(mu)
    report = kappa(rep.group, mu)

    def act(g, v):
        out = np.empty_like(v)
        k = 0
        for bi, d in enumerate(alg.dims):
            out[k : k + d] = rep.images[g].blocks[bi] @ v[k : k + d]
            k += d
        return out

    inv = np.zeros_like(xi)
    for g in rep.group.elements:
        inv += act(g, xi)
    inv /= rep.group.order
    lhs = float(np.sum(np.abs(xi - inv) ** 2))
    total = 0.0
    for g, p in mu.items_nonzero():
        total += float(p) * float(np.sum(np.abs(act(g, xi) - xi) ** 2))
    rhs = float(report.kappa) / 2.0 * total
    return lhs, rhs


def alon_roichman_sample(
    group: FiniteGroup,
    target_kappa: float = 2.0,
    rng=None,
    max_tries: int = 32,
    c: float = 6.0,
    cap: int = GROUP_ORDER_CAP,
) -> ProbMeasure:
    """Uniform measure on a random multiset with certified kappa.

    Draws ceil(c * ln|G|) elements uniformly, verifies kappa, and retries
    with a doubled c every 8 failures.  The returned measure is certified by
    the verification call, never by the probabilistic guarantee alone.
    Raises SamplingFailure with the best kappa found when the budget runs
    out.
    """
    if group.order > cap:
        raise ResourceCap(f"group order {group.order} exceeds the cap {cap}")
    if rng is None:
        rng = np.random.default_rng(0)
    best = None
    cc = float(c)
    for attempt in range(max_tries):
        if attempt and attempt % 8 == 0:
            cc *= 2.0
        size = max(1, math.ceil(cc * math.log(max(group.order, 2))))
        size = min(size, 4 * group.order)  # no point sampling far past |G|
        draws = [group.elements[int(i)] for i in rng.integers(group.order, size=size)]
        mu = ProbMeasure.uniform_on(group, draws)
        if not mu.generates():
            continue
        report = kappa(group, mu)
        if best is None or float(report.kappa) < float(best[1].kappa):
            best = (mu, report)
        if float(report.kappa) <= target_kappa:
            return mu
    raise SamplingFailure(
        f"no sampled support reached kappa <= {target_kappa} in {max_tries} tries",
        best=None if best is None else best[1],
    )
