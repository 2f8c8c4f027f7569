"""Rounding almost-homomorphisms to genuine corner representations.

The core construction dilates an almost-homomorphism of a finite group G
into the amplification M tensor M_|G|, averages the dilation's range
projection over left translations, cuts the spectrum of the average at 1/2
and completes the polar part of the compressed dilation to an isometry.
The result is a certificate: a true representation on a corner, an isometry
conjugating it back into the base algebra, and measured closeness numbers
next to their guaranteed bounds.

The remaining operations specialize the rounding to commuting pairs,
twisted (projective) pairs and Pauli-type pairs, verify the spectral-gap
amplification inequalities, and run the two-stage stabilization of an
almost-homomorphism of a direct product.
"""

from __future__ import annotations

import math
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np

from .abelian import AbelianGroup, regular_rep
from .algebra import (
    AlgebraElement,
    AlmostHom,
    Amplification,
    TracialAlgebra,
    UnitaryRep,
    commutant_blocks,
    conditional_expectation_commutant,
    defect,
    rep_residual,
    unitary_polar_factor,
)
from .errors import (
    DegenerateDecomposition,
    GapstabError,
    InvalidArgument,
    PreconditionViolation,
    ResourceCap,
)
from .groups import CentralExtensionGroup, FiniteGroup, ProductGroup
from .spectral import ProbMeasure, kappa

# Squared-form closeness constants carried by every certificate.
DISTANCE_CONSTANT = 169.0
PROJECTION_CONSTANT = 16.0
CONTRACTION_CONSTANT = 25.0
SUBGROUP_CONSTANT = 38.0
PAIR_CONSTANT = 1444.0
TWISTED_CONSTANT = 30000.0

# Largest amplified block dimension the dense rounding engine accepts.
ROUNDING_DIM_CAP = 4096

# Eigenvalues this close to the 1/2 cut are kept and flagged.
THRESHOLD_TIE_TOL = 1e-9

# Singular values below this are treated as kernel in polar completions.
_KERNEL_CUT = 1e-8

_BOUND_SLACK = 1e-9


def _check_bound(value: float, bound: float, label: str):
    if value > bound * (1 + 1e-12) + _BOUND_SLACK:
        raise GapstabError(
            f"{label} = {value:.6g} exceeds its guaranteed bound {bound:.6g}"
        )


def _ratio(value: float, bound: float):
    return value / bound if bound > 1e-300 else None


class Intertwiner:
    """A block-aligned rectangular map between two tracial algebras.

    Stores one matrix per block, block i of the source mapping into block i
    of the target.  ``conjugate`` pulls a target element back to the source
    (y -> w* y w); ``push`` is the opposite corner map (x -> w x w*).
    """

    def __init__(self, source: TracialAlgebra, target: TracialAlgebra, mats):
        if len(mats) != source.nblocks or len(mats) != target.nblocks:
            raise InvalidArgument("one matrix per block is required")
        self.source = source
        self.target = target
        self.mats = [np.asarray(m, dtype=complex) for m in mats]
        for m, sdim, tdim in zip(self.mats, source.dims, target.dims):
            if m.shape != (tdim, sdim):
                raise InvalidArgument(
                    f"block shape {m.shape} does not map dim {sdim} to {tdim}"
                )

    @classmethod
    def identity(cls, algebra: TracialAlgebra) -> "Intertwiner":
        return cls(algebra, algebra, [np.eye(d) for d in algebra.dims])

    def conjugate(self, y: AlgebraElement) -> AlgebraElement:
        return AlgebraElement(
            self.source,
            [m.conj().T @ b @ m for m, b in zip(self.mats, y.blocks)],
        )

    def push(self, x: AlgebraElement) -> AlgebraElement:
        return AlgebraElement(
            self.target,
            [m @ b @ m.conj().T for m, b in zip(self.mats, x.blocks)],
        )

    def w_star_w(self) -> AlgebraElement:
        return AlgebraElement(
            self.source, [m.conj().T @ m for m in self.mats]
        )

    def w_w_star(self) -> AlgebraElement:
        return AlgebraElement(
            self.target, [m @ m.conj().T for m in self.mats]
        )

    def compose(self, inner: "Intertwiner") -> "Intertwiner":
        """self after inner: maps inner.source into self.target."""
        if inner.target is not self.source and not inner.target.compatible(
            self.source
        ):
            raise InvalidArgument("composition shapes do not match")
        return Intertwiner(
            inner.source,
            self.target,
            [a @ b for a, b in zip(self.mats, inner.mats)],
        )

    def isometry_defect(self) -> float:
        """||1 - w* w||_2^2 in the source trace; 0 for a true isometry."""
        diff = self.source.identity() - self.w_star_w()
        return self.source.norm2(diff) ** 2

    def __repr__(self):
        shapes = ", ".join(f"{m.shape[0]}x{m.shape[1]}" for m in self.mats)
        return f"Intertwiner({shapes})"


def _rep_residual_capped(rep: UnitaryRep, limit: float = 2e8, samples: int = 64):
    """Multiplication-law residual, exhaustive when affordable else sampled."""
    n = rep.group.order
    cost = n * n * sum(d**3 for d in rep.algebra.dims)
    if cost <= limit:
        return rep_residual(rep)
    rng = np.random.default_rng(0)
    els = rep.group.elements
    worst = 0.0
    for _ in range(samples):
        g = els[rng.integers(n)]
        h = els[rng.integers(n)]
        r = rep.algebra.norm_inf(
            rep.images[rep.group.mul(g, h)] - rep.images[g] * rep.images[h]
        )
        worst = max(worst, r)
    return worst


class RoundingCertificate:
    """Everything the rounding produces, next to its guaranteed bounds.

    Attributes
    ----------
    pi : UnitaryRep on the corner algebra (one block per base block).
    w : Intertwiner from the base algebra into the corner; an isometry.
    distance : mean squared 2-norm closeness E_g ||phi(g) - w* pi(g) w||_2^2.
    trace_excess : trace of the corner projection minus the base trace of 1.
    input_defect : the mean squared multiplication defect of the input.
    projection_defect : ||P - w w*||_2^2 in the amplified trace.
    per_element : dict g -> squared closeness at g.
    intermediates : contraction-stage numbers and numerical health figures.

    ``P`` materializes the corner projection inside the amplified algebra;
    pi(g) = P pi(g) P holds by construction because pi is stored in corner
    coordinates.
    """

    def __init__(
        self,
        group: FiniteGroup,
        base: TracialAlgebra,
        amplification: Amplification,
        corner: TracialAlgebra,
        pi: UnitaryRep,
        w: Intertwiner,
        distance: float,
        trace_excess: float,
        input_defect: float,
        projection_defect: float,
        per_element: dict,
        intermediates: dict,
        threshold_ties: bool,
        tie_count: int,
        corner_factors,
        spectral_ranks,
    ):
        self.group = group
        self.base = base
        self.amplification = amplification
        self.corner = corner
        self.pi = pi
        self.w = w
        self.distance = distance
        self.trace_excess = trace_excess
        self.input_defect = input_defect
        self.projection_defect = projection_defect
        self.per_element = per_element
        self.intermediates = intermediates
        self.threshold_ties = threshold_ties
        self.tie_count = tie_count
        self._corner_factors = corner_factors
        self.spectral_ranks = spectral_ranks
        self._p_cache = None

    @property
    def P(self) -> AlgebraElement:
        """The corner projection as an element of the amplified algebra."""
        if self._p_cache is None:
            self._p_cache = AlgebraElement(
                self.amplification.algebra,
                [f @ f.conj().T for f in self._corner_factors],
            )
        return self._p_cache

    def pullback(self, g) -> AlgebraElement:
        """w* pi(g) w in the base algebra."""
        return self.w.conjugate(self.pi.images[g])

    def report(self) -> dict:
        eps = self.input_defect
        out = {
            "input_defect": eps,
            "distance": self.distance,
            "distance_constant": DISTANCE_CONSTANT,
            "distance_bound": DISTANCE_CONSTANT * eps,
            "distance_ratio": _ratio(self.distance, DISTANCE_CONSTANT * eps),
            "projection_defect": self.projection_defect,
            "projection_bound": PROJECTION_CONSTANT * eps,
            "projection_ratio": _ratio(
                self.projection_defect, PROJECTION_CONSTANT * eps
            ),
            "trace_excess": self.trace_excess,
            "trace_bound": PROJECTION_CONSTANT * eps,
            "threshold_ties": self.threshold_ties,
            "tie_count": self.tie_count,
            "corner_dims": list(self.corner.dims),
        }
        out.update(self.intermediates)
        return out

    def __repr__(self):
        return (
            f"RoundingCertificate(|G|={self.group.order}, "
            f"distance={self.distance:.3g}, defect={self.input_defect:.3g})"
        )


def _round_block(n, m, mul_idx, inv_idx, phi_stack):
    """Round one base block; all the linear algebra lives here.

    Returns the spectral isometry Z, the completion columns C, the
    compressed dilation X, the completed isometry w (corner coordinates),
    ranks and threshold diagnostics.
    """
    v_rect = (phi_stack[inv_idx] / math.sqrt(n)).reshape(n * m, m)

    # The averaged operator is block-Toeplitz: A[h1, h2] = B(h2^{-1} h1)
    # with B(k) = (1/n^2) sum_v phi(v) phi(kv)*.
    bmat = np.empty((n, m, m), dtype=complex)
    for k in range(n):
        bmat[k] = np.einsum(
            "vab,vcb->ac", phi_stack, phi_stack[mul_idx[k]].conj()
        ) / (n * n)
    a_op = np.empty((n * m, n * m), dtype=complex)
    for h1 in range(n):
        krow = mul_idx[inv_idx, h1]
        a_op[h1 * m : (h1 + 1) * m] = (
            bmat[krow].transpose(1, 0, 2).reshape(m, n * m)
        )
    a_op = (a_op + a_op.conj().T) / 2.0

    vals, vecs = np.linalg.eigh(a_op)
    keep = vals >= 0.5 - THRESHOLD_TIE_TOL
    ties = int(np.count_nonzero(np.abs(vals - 0.5) <= THRESHOLD_TIE_TOL))
    margin = float(np.min(np.abs(vals - 0.5))) if vals.size else math.inf
    z_iso = vecs[:, keep]
    low = vecs[:, ~keep]
    r_dim = z_iso.shape[1]

    x_mat = z_iso.conj().T @ v_rect
    u_svd, s, vh = np.linalg.svd(x_mat, full_matrices=False)
    big = s > _KERNEL_CUT
    w0 = u_svd[:, big] @ vh[big]
    t_dim = m - int(np.count_nonzero(big))
    if t_dim > 0:
        ker_proj = np.eye(m) - vh[big].conj().T @ vh[big]
        kvals, kvecs = np.linalg.eigh(ker_proj)
        k_basis = kvecs[:, kvals > 0.5]
        if k_basis.shape[1] != t_dim:
            raise DegenerateDecomposition(
                "kernel of the compressed dilation is numerically ambiguous"
            )
        if low.shape[1] < t_dim:
            raise DegenerateDecomposition(
                "no room orthogonal to the spectral projection to complete "
                "the polar part to an isometry"
            )
        c_cols = low[:, :t_dim]
        w_mat = np.vstack([w0, k_basis.conj().T])
    else:
        c_cols = np.zeros((n * m, 0), dtype=complex)
        w_mat = w0
    return {
        "Z": z_iso,
        "C": c_cols,
        "R": r_dim,
        "t": t_dim,
        "X": x_mat,
        "w": w_mat,
        "w0": w0,
        "ties": ties,
        "margin": margin,
    }


def gowers_hatami_round(phi: AlmostHom, p: int = 2) -> RoundingCertificate:
    """Round an almost-homomorphism to a representation on a corner.

    Implements the dilation construction literally: V stacks phi(g^{-1})
    row blocks, A averages the range projection of V over left
    translations, P is the spectral projection of A above 1/2, pi is the
    left translation action compressed to P (extended by the identity on
    the completion part), X = PV, and w completes the polar part of X to
    an isometry.  The certificate records

        distance        <= 169 * defect        (squared form)
        ||P - w w*||_2^2 <= 16 * defect
        trace excess     <= 16 * defect

    together with the contraction-stage intermediates.  Eigenvalues within
    1e-9 of the 1/2 cut are kept in the projection and flagged.
    """
    if p != 2:
        raise InvalidArgument("only the Hilbert-space case p = 2 is supported")
    group, base = phi.group, phi.algebra
    n = group.order
    if n * max(base.dims) > ROUNDING_DIM_CAP:
        raise ResourceCap(
            f"amplified block dimension {n * max(base.dims)} exceeds "
            f"the cap {ROUNDING_DIM_CAP}"
        )
    eps = defect(phi)
    elements = group.elements
    inv_idx = np.array([group.index(group.inv(g)) for g in elements])
    mul_idx = np.empty((n, n), dtype=int)
    for i, g in enumerate(elements):
        for j, h in enumerate(elements):
            mul_idx[i, j] = group.index(group.mul(g, h))

    blocks = []
    for b in range(base.nblocks):
        stack = np.stack([phi.images[g].blocks[b] for g in elements])
        blocks.append(_round_block(n, base.dims[b], mul_idx, inv_idx, stack))

    coeffs = base.coeffs
    corner = TracialAlgebra._raw(
        [blk["R"] + blk["t"] for blk in blocks], coeffs
    )
    amp = Amplification(base, n)

    base_trace = float(np.real(base.tau(base.identity())))
    tau_spectral = sum(c * blk["R"] for c, blk in zip(coeffs, blocks))
    tau_corner = sum(c * (blk["R"] + blk["t"]) for c, blk in zip(coeffs, blocks))
    trace_excess = tau_corner - base_trace

    projection_defect = sum(
        c * np.linalg.norm(np.eye(blk["R"]) - blk["w0"] @ blk["w0"].conj().T) ** 2
        for c, blk in zip(coeffs, blocks)
    )
    one_minus_xsx = math.sqrt(
        sum(
            c
            * np.linalg.norm(np.eye(base.dims[i]) - blk["X"].conj().T @ blk["X"])
            ** 2
            for i, (c, blk) in enumerate(zip(coeffs, blocks))
        )
    )
    p_minus_xxs = math.sqrt(
        sum(
            c * np.linalg.norm(np.eye(blk["R"]) - blk["X"] @ blk["X"].conj().T) ** 2
            for c, blk in zip(coeffs, blocks)
        )
    )

    w = Intertwiner(base, corner, [blk["w"] for blk in blocks])

    # one pass over the group: corner images, isometry and contraction pulls
    images = {}
    per_element = {}
    contraction = 0.0
    for gi, g in enumerate(elements):
        perm = mul_idx[inv_idx[gi]]
        mats = []
        xpull = []
        for blk, m in zip(blocks, base.dims):
            r_dim, t_dim = blk["R"], blk["t"]
            z_iso = blk["Z"]
            zg = z_iso.reshape(n, m, r_dim)[perm].reshape(n * m, r_dim)
            core = z_iso.conj().T @ zg
            mat = np.zeros((r_dim + t_dim, r_dim + t_dim), dtype=complex)
            mat[:r_dim, :r_dim] = core
            if t_dim:
                mat[r_dim:, r_dim:] = np.eye(t_dim)
            mats.append(mat)
            xpull.append(blk["X"].conj().T @ core @ blk["X"])
        img = AlgebraElement(corner, mats)
        images[g] = img
        diff = phi.images[g] - w.conjugate(img)
        per_element[g] = base.norm2(diff) ** 2
        contraction += (
            base.norm2(phi.images[g] - AlgebraElement(base, xpull)) ** 2
        )
    contraction /= n
    distance = sum(per_element.values()) / n

    pi = UnitaryRep(group, corner, images, tol=1e-6, check="none")
    intermediates = {
        "contraction_distance": contraction,
        "contraction_bound": CONTRACTION_CONSTANT * eps,
        "one_minus_xstarx": one_minus_xsx,
        "p_minus_xxstar": p_minus_xxs,
        "sqrt_defect_bound": 4.0 * math.sqrt(eps),
        "pi_residual": _rep_residual_capped(pi),
        "isometry_residual": w.isometry_defect(),
        "threshold_margin": min(blk["margin"] for blk in blocks),
        "tau_corner": tau_corner,
        "tau_spectral_projection": tau_spectral,
        "base_trace": base_trace,
    }

    return RoundingCertificate(
        group=group,
        base=base,
        amplification=amp,
        corner=corner,
        pi=pi,
        w=w,
        distance=distance,
        trace_excess=trace_excess,
        input_defect=eps,
        projection_defect=projection_defect,
        per_element=per_element,
        intermediates=intermediates,
        threshold_ties=any(blk["ties"] for blk in blocks),
        tie_count=sum(blk["ties"] for blk in blocks),
        corner_factors=[np.hstack([blk["Z"], blk["C"]]) for blk in blocks],
        spectral_ranks=[(blk["R"], blk["t"]) for blk in blocks],
    )


# -- subgroup closeness ---------------------------------------------------------

SubgroupCloseness = namedtuple("SubgroupCloseness", ["lhs", "bound"])


def equivariance_residual(phi: AlmostHom, subgroup, side: str = "left") -> float:
    """Worst 2-norm failure of phi(hg) = phi(h)phi(g) (or the right version)."""
    if side not in ("left", "right"):
        raise InvalidArgument("side must be 'left' or 'right'")
    group, alg = phi.group, phi.algebra
    worst = 0.0
    for h in subgroup:
        for g in group.elements:
            if side == "left":
                d = phi.images[group.mul(h, g)] - phi.images[h] * phi.images[g]
            else:
                d = phi.images[group.mul(g, h)] - phi.images[g] * phi.images[h]
            worst = max(worst, alg.norm2(d))
    return worst


def subgroup_closeness_check(
    phi: AlmostHom,
    subgroup,
    cert: RoundingCertificate,
    side: str = "left",
    tol: float = 1e-8,
    strict: bool = True,
) -> SubgroupCloseness:
    """Closeness of phi to the rounded representation along a subgroup.

    For a subgroup H on which phi is exactly equivariant (phi(hg) =
    phi(h)phi(g) for the left version), returns

        lhs   = (E_{h in H} ||phi(h) - w* pi(h) w||_2^2)^(1/2)
        bound = 38 * sqrt(defect)

    and the caller asserts lhs < bound.  When the equivariance residual
    exceeds ``tol`` and ``strict`` is set, a precondition violation carrying
    the residual is raised; with ``strict=False`` the check degrades to
    reporting (the bound is then only heuristic).
    """
    sub = tuple(subgroup)
    if not phi.group.is_subgroup(sub):
        raise InvalidArgument("the given subset is not a subgroup")
    residual = equivariance_residual(phi, sub, side=side)
    if strict and residual > tol:
        raise PreconditionViolation(
            f"phi is not {side}-equivariant on the subgroup "
            f"(residual {residual:.3g})",
            residual=residual,
        )
    lhs = math.sqrt(sum(cert.per_element[h] for h in sub) / len(sub))
    bound = SUBGROUP_CONSTANT * math.sqrt(cert.input_defect)
    return SubgroupCloseness(lhs, bound)


# -- commuting and twisted pairs ------------------------------------------------


@dataclass
class PairRoundingResult:
    """Rounded commuting pair: representations with commuting ranges."""

    certificate: RoundingCertificate
    u_tilde: UnitaryRep
    v_tilde: UnitaryRep
    w: Intertwiner
    epsilon: float
    distance_u: float
    distance_v: float
    bound: float
    commuting_residual: float

    def report(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "distance_u": self.distance_u,
            "distance_v": self.distance_v,
            "bound_constant": PAIR_CONSTANT,
            "bound": self.bound,
            "ratio_u": _ratio(self.distance_u, self.bound),
            "ratio_v": _ratio(self.distance_v, self.bound),
            "commuting_residual": self.commuting_residual,
            "trace_excess": self.certificate.trace_excess,
        }


def _pair_products(u_rep: UnitaryRep, v_rep: UnitaryRep):
    if not u_rep.algebra.compatible(v_rep.algebra):
        raise InvalidArgument("the two representations live on different algebras")
    prods = {}
    for a in u_rep.group.elements:
        ua = u_rep.images[a]
        for b in v_rep.group.elements:
            prods[(a, b)] = ua * v_rep.images[b]
    return prods


def round_commuting_pair(u_rep: UnitaryRep, v_rep: UnitaryRep) -> PairRoundingResult:
    """Round a pair of representations that almost commute.

    Builds phi(a, b) = U(a)V(b) on the product group, rounds it, and splits
    the corner representation into U~(a) = pi(a, 1) and V~(b) = pi(1, b),
    which commute exactly.  Both distances are below 1444 * epsilon where
    epsilon is the mean squared commutator norm.
    """
    a_grp, b_grp = u_rep.group, v_rep.group
    alg = u_rep.algebra
    prods = _pair_products(u_rep, v_rep)
    eps = 0.0
    for a in a_grp.elements:
        for b in b_grp.elements:
            eps += alg.norm2(prods[(a, b)] - v_rep.images[b] * u_rep.images[a]) ** 2
    eps /= a_grp.order * b_grp.order

    group = ProductGroup(a_grp, b_grp)
    phi = AlmostHom(group, alg, {g: prods[g] for g in group.elements})
    cert = gowers_hatami_round(phi)
    if abs(cert.input_defect - eps) > 1e-6 * max(1.0, eps):
        raise GapstabError(
            "product-form defect identity failed; the inputs are not "
            "homomorphisms"
        )

    ea, eb = a_grp.identity, b_grp.identity
    u_tilde = UnitaryRep(
        a_grp,
        cert.corner,
        {a: cert.pi.images[(a, eb)] for a in a_grp.elements},
        tol=1e-6,
        check="none",
    )
    v_tilde = UnitaryRep(
        b_grp,
        cert.corner,
        {b: cert.pi.images[(ea, b)] for b in b_grp.elements},
        tol=1e-6,
        check="none",
    )
    distance_u = sum(cert.per_element[(a, eb)] for a in a_grp.elements) / a_grp.order
    distance_v = sum(cert.per_element[(ea, b)] for b in b_grp.elements) / b_grp.order
    bound = PAIR_CONSTANT * eps
    _check_bound(distance_u, bound, "commuting-pair distance (first factor)")
    _check_bound(distance_v, bound, "commuting-pair distance (second factor)")

    commuting_residual = 0.0
    for a in a_grp.elements:
        for b in b_grp.elements:
            c = (
                u_tilde.images[a] * v_tilde.images[b]
                - v_tilde.images[b] * u_tilde.images[a]
            )
            commuting_residual = max(commuting_residual, cert.corner.norm2(c))

    return PairRoundingResult(
        certificate=cert,
        u_tilde=u_tilde,
        v_tilde=v_tilde,
        w=cert.w,
        epsilon=eps,
        distance_u=distance_u,
        distance_v=distance_v,
        bound=bound,
        commuting_residual=commuting_residual,
    )


@dataclass
class TwistedRoundingResult:
    """Rounded twisted pair with its exact commutation relation.

    ``u_tilde`` and ``v_tilde`` live on the minus-one eigenspace corner of
    the rounded central sign and satisfy U~(a)V~(b) = gamma(a, b)V~(b)U~(a)
    up to machine precision; ``w`` is the re-polared partial isometry.
    """

    certificate: RoundingCertificate
    u_tilde: UnitaryRep
    v_tilde: UnitaryRep
    w: Intertwiner
    epsilon: float
    distance_u: float
    distance_v: float
    bound: float
    relation_residual: float
    isometry_defect: float
    isometry_bound: float
    p_minus_q: float
    p_minus_q_bound: float
    trace_q: float

    def report(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "distance_u": self.distance_u,
            "distance_v": self.distance_v,
            "bound_constant": TWISTED_CONSTANT,
            "bound": self.bound,
            "ratio_u": _ratio(self.distance_u, self.bound),
            "ratio_v": _ratio(self.distance_v, self.bound),
            "relation_residual": self.relation_residual,
            "isometry_defect": self.isometry_defect,
            "isometry_bound": self.isometry_bound,
            "p_minus_q": self.p_minus_q,
            "p_minus_q_bound": self.p_minus_q_bound,
            "trace_q": self.trace_q,
            "trace_excess": self.certificate.trace_excess,
        }


def round_twisted_pair(
    u_rep: UnitaryRep, v_rep: UnitaryRep, gamma
) -> TwistedRoundingResult:
    """Round a pair satisfying a commutation relation twisted by a sign.

    ``gamma`` is a bicharacter A x B -> {+1, -1} (callable or dict).  The
    pair is packed into phi(a, b, z) = z U(a)V(b) on the central extension
    of A x B by the sign, rounded, and corrected so the output satisfies
    U~(a)V~(b) = gamma(a, b) V~(b)U~(a) exactly: the rounded central sign Z
    is written as P - 2Q, the corner is cut to Q, and w is re-polared.
    Distances stay below 30000 * epsilon.
    """
    gam = gamma if callable(gamma) else (lambda a, b: gamma[(a, b)])
    a_grp, b_grp = u_rep.group, v_rep.group
    alg = u_rep.algebra
    ext = CentralExtensionGroup(a_grp, b_grp, gam)

    prods = _pair_products(u_rep, v_rep)
    eps = 0.0
    for a in a_grp.elements:
        for b in b_grp.elements:
            tw = gam(a, b) * (v_rep.images[b] * u_rep.images[a])
            eps += alg.norm2(prods[(a, b)] - tw) ** 2
    eps /= a_grp.order * b_grp.order

    phi = AlmostHom(
        ext,
        alg,
        {(a, b, z): float(z) * prods[(a, b)] for (a, b, z) in ext.elements},
    )
    cert = gowers_hatami_round(phi)
    if abs(cert.input_defect - eps) > 1e-6 * max(1.0, eps):
        raise GapstabError(
            "twisted defect identity failed; the inputs are not homomorphisms"
        )

    # central sign on the corner, cut to its minus-one eigenspace
    z_img = cert.pi.images[ext.central_sign]
    coeffs = cert.corner.coeffs
    y_isos = []
    p_minus_q_sq = 0.0
    for zb in z_img.blocks:
        zb = (zb + zb.conj().T) / 2.0
        q_block = (np.eye(zb.shape[0]) - zb) / 2.0
        qvals, qvecs = np.linalg.eigh(q_block)
        if np.any(np.minimum(np.abs(qvals), np.abs(qvals - 1)) > 1e-6):
            raise DegenerateDecomposition(
                "rounded central sign is not an involution on the corner"
            )
        y_isos.append(qvecs[:, qvals > 0.5])
    if any(y.shape[1] == 0 for y in y_isos):
        raise DegenerateDecomposition(
            "the minus-one eigenspace of the central sign vanishes on a "
            "block; the inputs are far outside the rounding regime"
        )
    for c, zb in zip(coeffs, z_img.blocks):
        p_minus_q_sq += c * np.linalg.norm((np.eye(zb.shape[0]) + zb) / 2.0) ** 2
    p_minus_q = math.sqrt(p_minus_q_sq)
    p_minus_q_bound = (19.0 * math.sqrt(2.0) + 4.0) * math.sqrt(eps)

    q_corner = TracialAlgebra._raw([y.shape[1] for y in y_isos], coeffs)
    trace_q = sum(c * y.shape[1] for c, y in zip(coeffs, y_isos))

    def cut(elt: AlgebraElement) -> AlgebraElement:
        return AlgebraElement(
            q_corner,
            [y.conj().T @ b @ y for y, b in zip(y_isos, elt.blocks)],
        )

    u_tilde = UnitaryRep(
        a_grp,
        q_corner,
        {a: cut(cert.pi.images[ext.embed_a(a)]) for a in a_grp.elements},
        tol=1e-5,
        check="none",
    )
    v_tilde = UnitaryRep(
        b_grp,
        q_corner,
        {b: cut(cert.pi.images[ext.embed_b(b)]) for b in b_grp.elements},
        tol=1e-5,
        check="none",
    )

    relation_residual = 0.0
    for a in a_grp.elements:
        for b in b_grp.elements:
            lhsm = u_tilde.images[a] * v_tilde.images[b]
            rhsm = float(gam(a, b)) * (v_tilde.images[b] * u_tilde.images[a])
            relation_residual = max(relation_residual, q_corner.norm2(lhsm - rhsm))

    # re-polar Qw to a partial isometry
    w_mats = []
    for y, wm in zip(y_isos, cert.w.mats):
        qw = y.conj().T @ wm
        u_svd, s, vh = np.linalg.svd(qw, full_matrices=False)
        big = s > _KERNEL_CUT
        w_mats.append(u_svd[:, big] @ vh[big])
    w_prime = Intertwiner(alg, q_corner, w_mats)
    isometry_defect = w_prime.isometry_defect()
    isometry_bound = p_minus_q_bound**2

    distance_u = 0.0
    for a in a_grp.elements:
        diff = u_rep.images[a] - w_prime.conjugate(u_tilde.images[a])
        distance_u += alg.norm2(diff) ** 2
    distance_u /= a_grp.order
    distance_v = 0.0
    for b in b_grp.elements:
        diff = v_rep.images[b] - w_prime.conjugate(v_tilde.images[b])
        distance_v += alg.norm2(diff) ** 2
    distance_v /= b_grp.order
    bound = TWISTED_CONSTANT * eps
    _check_bound(distance_u, bound, "twisted-pair distance (first factor)")
    _check_bound(distance_v, bound, "twisted-pair distance (second factor)")

    return TwistedRoundingResult(
        certificate=cert,
        u_tilde=u_tilde,
        v_tilde=v_tilde,
        w=w_prime,
        epsilon=eps,
        distance_u=distance_u,
        distance_v=distance_v,
        bound=bound,
        relation_residual=relation_residual,
        isometry_defect=isometry_defect,
        isometry_bound=isometry_bound,
        p_minus_q=p_minus_q,
        p_minus_q_bound=p_minus_q_bound,
        trace_q=trace_q,
    )


# -- spectral-gap amplification --------------------------------------------------

AmplificationCheck = namedtuple("AmplificationCheck", ["lhs", "rhs"])


def commutator_amplification_check(
    u_rep: UnitaryRep, v_rep: UnitaryRep, mu: ProbMeasure, nu: ProbMeasure
) -> AmplificationCheck:
    """Uniform mean squared commutator against its gap-weighted integral.

    lhs = E_{a, b} ||[U(a), V(b)]||_2^2 over the full groups,
    rhs = kappa(mu) kappa(nu) * integral of the same quantity d(mu x nu);
    the inequality lhs <= rhs holds whenever the supports generate.
    """
    if not u_rep.algebra.compatible(v_rep.algebra):
        raise InvalidArgument("the two representations live on different algebras")
    alg = u_rep.algebra
    k_mu = kappa(u_rep.group, mu)
    k_nu = kappa(v_rep.group, nu)

    def comm_sq(a, b):
        c = (
            u_rep.images[a] * v_rep.images[b]
            - v_rep.images[b] * u_rep.images[a]
        )
        return alg.norm2(c) ** 2

    lhs = 0.0
    for a in u_rep.group.elements:
        for b in v_rep.group.elements:
            lhs += comm_sq(a, b)
    lhs /= u_rep.group.order * v_rep.group.order
    integral = 0.0
    for a, pa in mu.items_nonzero():
        for b, pb in nu.items_nonzero():
            integral += float(pa * pb) * comm_sq(a, b)
    rhs = float(k_mu.kappa) * float(k_nu.kappa) * integral
    return AmplificationCheck(lhs, rhs)


def twisted_amplification_check(
    u_rep: UnitaryRep,
    v_rep: UnitaryRep,
    mu: ProbMeasure,
    nu: ProbMeasure,
    tensor_cap: int = 1024,
) -> AmplificationCheck:
    """Gap amplification for the character-twisted commutation defect.

    For U on an abelian group A and V on its dual, compares the uniform
    mean of ||U(a)V(chi) - chi(a)V(chi)U(a)||_2^2 with kappa(mu) kappa(nu)
    times its (mu x nu)-integral.  Implemented through the tensor reduction
    U(a) -> U(a) (x) lambda(a), V(chi) -> V(chi) (x) M(chi), which turns the
    twisted defect into an honest commutator; a direct evaluation
    cross-checks the reduction whenever the tensor dimension fits.
    """
    a_grp, d_grp = u_rep.group, v_rep.group
    if not isinstance(a_grp, AbelianGroup) or not isinstance(d_grp, AbelianGroup):
        raise InvalidArgument("twisted amplification needs abelian groups")
    if a_grp.orders != d_grp.orders:
        raise InvalidArgument("the second group must be the dual of the first")
    if not u_rep.algebra.compatible(v_rep.algebra):
        raise InvalidArgument("the two representations live on different algebras")
    alg = u_rep.algebra
    k_mu = kappa(a_grp, mu)
    k_nu = kappa(d_grp, nu)

    def twist_sq(a, chi):
        pairing = a_grp.pairing(chi, a)
        c = u_rep.images[a] * v_rep.images[chi] - complex(pairing) * (
            v_rep.images[chi] * u_rep.images[a]
        )
        return alg.norm2(c) ** 2

    lhs = 0.0
    for a in a_grp.elements:
        for chi in d_grp.elements:
            lhs += twist_sq(a, chi)
    lhs /= a_grp.order * d_grp.order
    integral = 0.0
    for a, pa in mu.items_nonzero():
        for chi, pb in nu.items_nonzero():
            integral += float(pa * pb) * twist_sq(a, chi)
    rhs = float(k_mu.kappa) * float(k_nu.kappa) * integral

    if max(alg.dims) * a_grp.order <= tensor_cap:
        reg = regular_rep(a_grp)
        big = TracialAlgebra(
            [
                (d * a_grp.order, w)
                for d, w in zip(alg.dims, alg.weights)
            ]
        )
        lam = {a: reg.images[a].blocks[0] for a in a_grp.elements}
        mod = {
            chi: np.diag(
                [complex(a_grp.pairing(chi, x)) for x in a_grp.elements]
            )
            for chi in d_grp.elements
        }
        u_tensor = UnitaryRep(
            a_grp,
            big,
            {
                a: AlgebraElement(
                    big, [np.kron(b, lam[a]) for b in u_rep.images[a].blocks]
                )
                for a in a_grp.elements
            },
            tol=1e-6,
            check="none",
        )
        v_tensor = UnitaryRep(
            d_grp,
            big,
            {
                chi: AlgebraElement(
                    big, [np.kron(b, mod[chi]) for b in v_rep.images[chi].blocks]
                )
                for chi in d_grp.elements
            },
            tol=1e-6,
            check="none",
        )
        tensor_check = commutator_amplification_check(u_tensor, v_tensor, mu, nu)
        if abs(tensor_check.lhs - lhs) > 1e-8 * max(1.0, lhs) or abs(
            tensor_check.rhs - rhs
        ) > 1e-8 * max(1.0, rhs):
            raise GapstabError("tensor reduction cross-check failed")
    return AmplificationCheck(lhs, rhs)


@dataclass
class PauliRoundingResult:
    """Twisted rounding driven by spectral-gap amplification."""

    amplification: AmplificationCheck
    rounding: TwistedRoundingResult
    kappa_mu: float
    kappa_nu: float
    integral: float
    composed_constant: float
    composed_bound: float

    def report(self) -> dict:
        out = self.rounding.report()
        out.update(
            {
                "amplified_defect": self.amplification.lhs,
                "amplified_bound": self.amplification.rhs,
                "kappa_mu": self.kappa_mu,
                "kappa_nu": self.kappa_nu,
                "integral": self.integral,
                "composed_constant": self.composed_constant,
                "composed_bound": self.composed_bound,
            }
        )
        return out


def round_pauli_pair(
    u_rep: UnitaryRep, v_rep: UnitaryRep, mu: ProbMeasure, nu: ProbMeasure
) -> PauliRoundingResult:
    """Round a Pauli-type pair measured only along mu and nu.

    For an exponent-2 abelian group A and its dual, chains the twisted
    amplification inequality with the twisted rounding at gamma(a, chi) =
    chi(a).  The certificate's distances are below 30000 * kappa(mu) *
    kappa(nu) * integral, and the composed constant is reported explicitly.
    The output w is a partial isometry with ||1 - w* w||_2^2 recorded.
    """
    a_grp = u_rep.group
    if not isinstance(a_grp, AbelianGroup) or a_grp.exponent > 2:
        raise InvalidArgument("the first group must be abelian of exponent 2")
    d_grp = v_rep.group
    if not isinstance(d_grp, AbelianGroup) or d_grp.orders != a_grp.orders:
        raise InvalidArgument("the second group must be the dual of the first")

    amp = twisted_amplification_check(u_rep, v_rep, mu, nu)
    k_mu = float(kappa(a_grp, mu).kappa)
    k_nu = float(kappa(d_grp, nu).kappa)
    integral = amp.rhs / (k_mu * k_nu) if k_mu * k_nu > 0 else 0.0

    rounding = round_twisted_pair(
        u_rep, v_rep, lambda a, chi: int(a_grp.pairing(chi, a))
    )
    composed_constant = TWISTED_CONSTANT * k_mu * k_nu
    composed_bound = composed_constant * integral
    _check_bound(rounding.distance_u, composed_bound, "composed Pauli distance (U)")
    _check_bound(rounding.distance_v, composed_bound, "composed Pauli distance (V)")
    return PauliRoundingResult(
        amplification=amp,
        rounding=rounding,
        kappa_mu=k_mu,
        kappa_nu=k_nu,
        integral=integral,
        composed_constant=composed_constant,
        composed_bound=composed_bound,
    )


# -- direct-product stabilization -------------------------------------------------


@dataclass
class StabilizationReport:
    """Every intermediate quantity of the two-stage stabilization."""

    epsilon: float
    epsilon_split: dict
    split_identity_residual: float
    kappa1: float
    stage1_exact: bool
    stage1: dict | None
    d1_base: float
    d1_corner: float
    eta: dict = field(repr=False)
    eta_sq_mu2: float = 0.0
    eta_bound_triangle: float = 0.0
    eta_bound_gap_form: float = 0.0
    v_to_phi: dict = field(default_factory=dict, repr=False)
    v_defect_uniform: float = 0.0
    v_defect_mu2: float = 0.0
    v_defect_bound: float = 0.0
    stage2_exact: bool = False
    stage2: dict | None = None
    distance_uniform: float = 0.0
    distance_mu1: float = 0.0
    distance_mu2: float = 0.0
    distance_mixture: float = 0.0
    trace_total: float = 0.0
    trace_excess: float = 0.0
    assembly_residual: float = 0.0
    pi_residual: float = 0.0

    def as_dict(self) -> dict:
        out = {
            "epsilon": self.epsilon,
            "split_identity_residual": self.split_identity_residual,
            "kappa1": self.kappa1,
            "stage1_exact": self.stage1_exact,
            "d1_base": self.d1_base,
            "d1_corner": self.d1_corner,
            "eta_sq_mu2": self.eta_sq_mu2,
            "eta_bound_triangle": self.eta_bound_triangle,
            "eta_bound_gap_form": self.eta_bound_gap_form,
            "v_defect_uniform": self.v_defect_uniform,
            "v_defect_mu2": self.v_defect_mu2,
            "v_defect_bound": self.v_defect_bound,
            "stage2_exact": self.stage2_exact,
            "distance_uniform": self.distance_uniform,
            "distance_mu1": self.distance_mu1,
            "distance_mu2": self.distance_mu2,
            "distance_mixture": self.distance_mixture,
            "trace_total": self.trace_total,
            "trace_excess": self.trace_excess,
            "assembly_residual": self.assembly_residual,
            "pi_residual": self.pi_residual,
        }
        for key, val in self.epsilon_split.items():
            out[f"epsilon_{key[0]}{key[1]}"] = val
        return out


def _embedded_measure(group: ProductGroup, mu: ProbMeasure, slot: int) -> ProbMeasure:
    if slot == 0:
        return ProbMeasure(
            group,
            {(g, group.second.identity): p for g, p in mu.items_nonzero()},
        )
    return ProbMeasure(
        group,
        {(group.first.identity, h): p for h, p in mu.items_nonzero()},
    )


_EXACT_STAGE_TOL = 1e-18


def stabilize_product(
    phi: AlmostHom, mu1: ProbMeasure, mu2: ProbMeasure
) -> tuple[UnitaryRep, StabilizationReport]:
    """Stabilize an almost-homomorphism of a direct product in two stages.

    (i) round the restriction to the first factor; (ii) conjugate the
    second-factor values into the corner and project them onto the
    commutant N of the rounded representation; (iii) replace each by the
    nearest unitary of N; (iv) round that almost-homomorphism inside N;
    (v) assemble a genuine representation of G1 x G2 on the doubly-rounded
    corner together with a composed isometry.

    Defect accounting uses the mixture measure mu(x, y) = (mu1(x)1_{y=e} +
    mu2(y)1_{x=e}) / 2; the report carries the four-way defect split, the
    commutant-distance figures eta with both forms of their gap bound, the
    stage defects and every closeness number of the assembly.
    """
    group = phi.group
    if not isinstance(group, ProductGroup):
        raise InvalidArgument("stabilize_product needs a two-factor product group")
    g1, g2 = group.first, group.second
    base = phi.algebra
    e1, e2 = g1.identity, g2.identity

    mu1_emb = _embedded_measure(group, mu1, 0)
    mu2_emb = _embedded_measure(group, mu2, 1)
    mix = ProbMeasure(
        group,
        {
            g: (mu1_emb(g) + mu2_emb(g)) / 2
            for g in set(mu1_emb.support) | set(mu2_emb.support)
        },
    )
    eps = defect(phi, mix, mix)
    eps_split = {
        (1, 1): defect(phi, mu1_emb, mu1_emb),
        (1, 2): defect(phi, mu1_emb, mu2_emb),
        (2, 1): defect(phi, mu2_emb, mu1_emb),
        (2, 2): defect(phi, mu2_emb, mu2_emb),
    }
    split_residual = abs(sum(eps_split.values()) - 4.0 * eps)

    kappa1 = float(kappa(g1, mu1).kappa)

    # stage one: the first factor
    phi1 = AlmostHom(g1, base, {g: phi.images[(g, e2)] for g in g1.elements})
    eps1_uniform = defect(phi1)
    stage1_exact = eps1_uniform <= _EXACT_STAGE_TOL
    if stage1_exact:
        corner1 = base
        pi1 = UnitaryRep(g1, base, dict(phi1.images), tol=1e-6, check="none")
        w1 = Intertwiner.identity(base)
        cert1 = None
    else:
        cert1 = gowers_hatami_round(phi1)
        corner1 = cert1.corner
        pi1 = cert1.pi
        w1 = cert1.w

    d1_base = sum(
        float(p) * base.norm2(phi1.images[g] - w1.conjugate(pi1.images[g])) ** 2
        for g, p in mu1.items_nonzero()
    )

    one_c = corner1.identity()
    complement = one_c - w1.w_w_star()

    def into_corner(x: AlgebraElement) -> AlgebraElement:
        return w1.push(x) + complement

    d1_corner = sum(
        float(p)
        * corner1.norm2(into_corner(phi1.images[g]) - pi1.images[g]) ** 2
        for g, p in mu1.items_nonzero()
    )

    # stage two: second-factor values moved into the corner, projected on N
    phi2_corner = {h: into_corner(phi.images[(e1, h)]) for h in g2.elements}
    decomp = commutant_blocks(pi1)
    n_alg = decomp.algebra_n

    eta = {}
    v_images = {}
    v_to_phi = {}
    for h in g2.elements:
        expected = conditional_expectation_commutant(pi1, phi2_corner[h])
        eta[h] = corner1.norm2(phi2_corner[h] - expected)
        comp = decomp.compress(expected)
        v_images[h] = AlgebraElement(
            n_alg, [unitary_polar_factor(b) for b in comp.blocks]
        )
        v_to_phi[h] = corner1.norm2(
            phi2_corner[h] - decomp.lift(v_images[h])
        )

    eta_sq_mu2 = sum(float(p) * eta[h] ** 2 for h, p in mu2.items_nonzero())
    eta_bound_triangle = (
        1.5 * kappa1 * (4.0 * d1_corner + eps_split[(1, 2)] + eps_split[(2, 1)])
    )
    eta_bound_gap_form = 12.0 * kappa1 * max(d1_corner, eps)

    v_hom = AlmostHom(g2, n_alg, v_images)
    v_defect_uniform = defect(v_hom)
    v_defect_mu2 = defect(v_hom, mu2, mu2)
    eta_mu2 = math.sqrt(eta_sq_mu2)
    mu2_conv = mu2.convolve(mu2)
    eta_conv = math.sqrt(
        sum(float(p) * eta[h] ** 2 for h, p in mu2_conv.items_nonzero())
    )
    v_defect_bound = (
        math.sqrt(eps_split[(2, 2)])
        + 2.0 * math.sqrt(2.0) * eta_mu2
        + math.sqrt(2.0) * eta_conv
    ) ** 2

    stage2_exact = v_defect_uniform <= _EXACT_STAGE_TOL
    if stage2_exact:
        corner2 = n_alg
        pi2 = UnitaryRep(g2, n_alg, dict(v_images), tol=1e-6, check="none")
        w2 = Intertwiner.identity(n_alg)
        cert2 = None
    else:
        cert2 = gowers_hatami_round(v_hom)
        corner2 = cert2.corner
        pi2 = cert2.pi
        w2 = cert2.w

    # assembly: on each commutant component the first factor acts through
    # the component's small representation and the second through the
    # rounded corner of N
    reps_u = []
    for j, (bi, w_iso, m_dim, d_dim) in enumerate(decomp.components):
        uj = {}
        for g in g1.elements:
            b = w_iso.conj().T @ pi1.images[g].blocks[bi] @ w_iso
            acc = np.zeros((d_dim, d_dim), dtype=complex)
            for s in range(m_dim):
                acc += b[s * d_dim : (s + 1) * d_dim, s * d_dim : (s + 1) * d_dim]
            uj[g] = acc / m_dim
        reps_u.append(uj)

    per_block = [[] for _ in range(base.nblocks)]
    for j, (bi, _, _, _) in enumerate(decomp.components):
        per_block[bi].append(j)
    if any(not js for js in per_block):
        raise DegenerateDecomposition("a base block carries no commutant component")

    final_dims = [
        sum(corner2.dims[j] * decomp.components[j][3] for j in js)
        for js in per_block
    ]
    final_alg = TracialAlgebra._raw(final_dims, base.coeffs)

    w_total_mats = []
    for i, js in enumerate(per_block):
        rows = []
        for j in js:
            _, w_iso, _, d_dim = decomp.components[j]
            rows.append(
                np.kron(w2.mats[j], np.eye(d_dim)) @ w_iso.conj().T @ w1.mats[i]
            )
        w_total_mats.append(np.vstack(rows))
    w_total = Intertwiner(base, final_alg, w_total_mats)

    prod_group = group
    images = {}
    for g in g1.elements:
        for h in g2.elements:
            mats = []
            for i, js in enumerate(per_block):
                mat = np.zeros((final_dims[i], final_dims[i]), dtype=complex)
                off = 0
                for j in js:
                    d_dim = decomp.components[j][3]
                    blockjh = np.kron(pi2.images[h].blocks[j], reps_u[j][g])
                    size = blockjh.shape[0]
                    mat[off : off + size, off : off + size] = blockjh
                    off += size
                mats.append(mat)
            images[(g, h)] = AlgebraElement(final_alg, mats)
    pi_final = UnitaryRep(prod_group, final_alg, images, tol=1e-5, check="none")

    per_element = {
        g: base.norm2(phi.images[g] - w_total.conjugate(images[g])) ** 2
        for g in prod_group.elements
    }
    distance_uniform = sum(per_element.values()) / prod_group.order
    distance_mu1 = sum(
        float(p) * per_element[(g, e2)] for g, p in mu1.items_nonzero()
    )
    distance_mu2 = sum(
        float(p) * per_element[(e1, h)] for h, p in mu2.items_nonzero()
    )

    assembly_residual = max(
        base.norm2(
            w_total.conjugate(images[(g, e2)]) - w1.conjugate(pi1.images[g])
        )
        for g in g1.elements
    )

    trace_total = float(
        np.real(final_alg.tau(final_alg.identity()))
    )
    base_trace = float(np.real(base.tau(base.identity())))

    report = StabilizationReport(
        epsilon=eps,
        epsilon_split=eps_split,
        split_identity_residual=split_residual,
        kappa1=kappa1,
        stage1_exact=stage1_exact,
        stage1=cert1.report() if cert1 is not None else None,
        d1_base=d1_base,
        d1_corner=d1_corner,
        eta=eta,
        eta_sq_mu2=eta_sq_mu2,
        eta_bound_triangle=eta_bound_triangle,
        eta_bound_gap_form=eta_bound_gap_form,
        v_to_phi=v_to_phi,
        v_defect_uniform=v_defect_uniform,
        v_defect_mu2=v_defect_mu2,
        v_defect_bound=v_defect_bound,
        stage2_exact=stage2_exact,
        stage2=cert2.report() if cert2 is not None else None,
        distance_uniform=distance_uniform,
        distance_mu1=distance_mu1,
        distance_mu2=distance_mu2,
        distance_mixture=(distance_mu1 + distance_mu2) / 2.0,
        trace_total=trace_total,
        trace_excess=trace_total - base_trace,
        assembly_residual=assembly_residual,
        pi_residual=_rep_residual_capped(pi_final),
    )
    return pi_final, report
