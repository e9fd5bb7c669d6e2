"""Irregular types, level filtration, and the triangular orbit kernel.

An irregular type is a block-scalar polar part T(z) = sum T_i z^{-i}
(i = 1..k-1): each block carries an eigenvalue polynomial t_p(z) and a
multiplicity.  Grouping blocks by the tails of their coefficient
tuples yields the level filtration: at level i two blocks are in the
same class when their coefficients of z^{-(i+1)}, ..., z^{-(k-1)} all
agree.  Level k-1 always has a single class (so the strict
upper/lower pieces there are zero), and level 0 separates all blocks.

Blocks are ordered by comparing the coefficient tuples
(c_{k-1}, ..., c_1) lexicographically by (Re, Im), largest first; this
is compatible with the class orderings at every level, so the "lower"
pieces u_i^- are genuinely block-lower-triangular.

The kernel implemented here:

* factorize        -- unique b = b_minus * b_plus with b_minus in the
                      strictly-lower jets and b_plus in the parabolic
                      ones, via the split g = u_i^- + p_i^+ per degree;
* qp_to_orbit      -- the descending slot recursion reconstructing an
                      orbit element from coordinates (Q, P);
* orbit_to_qp      -- membership test and inverse map, via a
                      stabilizer-chain reduction of the orbit element
                      back to dT followed by factorize;
* qp_to_rep/rep_to_qp -- the grading that matches z^i blocks with the
                      parallel arrows of the core quiver.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .jets import (
    JetMatrix,
    PrincipalPart,
    coadjoint,
    jet_exp,
    jet_inv,
    jet_mul,
    pp_left_mul,
)
from .quiver import DoubledRep, make_quiver
from .scalars import GaussianRational, scalar_key, scalars_equal

FLOAT_COEFF_RTOL = 1e-9


@dataclass(frozen=True)
class Block:
    """One eigenvalue polynomial: coefficients (c_1..c_{k-1}) and multiplicity."""

    coeffs: tuple
    mult: int


@dataclass(frozen=True)
class IrregularType:
    n: int
    k: int
    blocks: tuple  # canonically ordered
    starts: tuple  # ambient start index per block
    level_classes: tuple  # level i -> tuple(class id per block)
    # canonical position -> position in the input (bookkeeping only)
    source_indices: tuple = field(default=(), compare=False)

    @property
    def exact(self) -> bool:
        return isinstance(self.blocks[0].coeffs[0], GaussianRational)

    @property
    def block_count(self) -> int:
        return len(self.blocks)

    def block_slice(self, b: int) -> slice:
        return slice(self.starts[b], self.starts[b] + self.blocks[b].mult)

    def coord_classes(self, level: int) -> np.ndarray:
        """Class id of every ambient coordinate at the given level."""
        cls = self.level_classes[level]
        out = np.empty(self.n, dtype=int)
        for b, blk in enumerate(self.blocks):
            out[self.starts[b] : self.starts[b] + blk.mult] = cls[b]
        return out

    def project(self, m: np.ndarray, level: int, part: str) -> np.ndarray:
        """Component of m in the level subspace named by part.

        part: "lower"/"upper" are the strict triangular pieces u^-/u^+,
        "diag" is the centralizer piece h, "lower_eq"/"upper_eq" the
        parabolic pieces p^-/p^+.
        """
        cls = self.coord_classes(level)
        row = cls[:, None]
        col = cls[None, :]
        masks = {
            "lower": row > col,
            "upper": row < col,
            "diag": row == col,
            "lower_eq": row >= col,
            "upper_eq": row <= col,
        }
        mask = masks[part]
        if linalg.is_exact(m):
            return np.where(mask, m, GaussianRational(0))
        return np.where(mask, m, 0j)

    def in_subspace(self, m: np.ndarray, level: int, part: str, rtol: float = 1e-9) -> bool:
        return linalg.is_zero_matrix(m - self.project(m, level, part), rtol=rtol,
                                     scale=linalg.mat_norm(m))

    def t_slot(self, s: int) -> np.ndarray:
        """Coefficient matrix T_s (block-scalar diagonal)."""
        out = linalg.zeros(self.n, self.n, self.exact)
        for b, blk in enumerate(self.blocks):
            v = blk.coeffs[s - 1]
            for i in range(self.starts[b], self.starts[b] + blk.mult):
                out[i, i] = v
        return out

    def dt_slot(self, s: int) -> np.ndarray:
        """Coefficient of z^{-s-1} dz in dT, namely -s * T_s."""
        return self.t_slot(s) * (-s)

    def dt(self) -> PrincipalPart:
        coeffs = [linalg.zeros(self.n, self.n, self.exact)]
        coeffs += [self.dt_slot(s) for s in range(1, self.k)]
        return PrincipalPart(self.n, self.k, tuple(coeffs), "polar")

    def separation(self, p: int, q: int) -> int:
        """Largest s with c_s differing between blocks p and q (0 if equal)."""
        exact = self.exact
        for s in range(self.k - 1, 0, -1):
            a = self.blocks[p].coeffs[s - 1]
            b = self.blocks[q].coeffs[s - 1]
            if not scalars_equal(a, b, exact, FLOAT_COEFF_RTOL):
                return s
        return 0

    def arrow_multiplicity(self, p: int, q: int) -> int:
        """deg of t_p - t_q in 1/z, minus one."""
        return max(self.separation(p, q) - 1, 0)

    def to_float(self) -> "IrregularType":
        """Same type with complex coefficients (block order preserved)."""
        if not self.exact:
            return self
        blocks = tuple(
            Block(tuple(c.to_complex() for c in b.coeffs), b.mult) for b in self.blocks
        )
        return IrregularType(
            self.n, self.k, blocks, self.starts, self.level_classes, self.source_indices
        )


def make_irregular_type(k: int, blocks, n: int = None) -> IrregularType:
    """Canonicalize and validate block data.

    blocks: iterable of (coeffs, mult); coefficient tuples have length
    k-1 (entries for z^{-1} .. z^{-(k-1)}).  Blocks are sorted with the
    largest reversed coefficient tuple first; duplicate polynomials are
    rejected (merge their multiplicities instead).
    """
    if k < 2:
        raise ValueError("pole order k must be at least 2")
    blk = []
    for coeffs, mult in blocks:
        coeffs = tuple(coeffs)
        if len(coeffs) != k - 1:
            raise ValueError(f"block needs {k - 1} coefficients, got {len(coeffs)}")
        if mult <= 0:
            raise ValueError("block multiplicity must be positive")
        blk.append(Block(coeffs, int(mult)))
    if not blk:
        raise ValueError("irregular type needs at least one block")
    exact = isinstance(blk[0].coeffs[0], GaussianRational)
    if not exact:
        warnings.warn(
            "float irregular-type coefficients: level structure uses tolerance "
            f"{FLOAT_COEFF_RTOL} and is discontinuous in the data",
            stacklevel=2,
        )

    def key(pair):
        return tuple(scalar_key(c) for c in reversed(pair[1].coeffs))

    order = sorted(enumerate(blk), key=key, reverse=True)
    source = tuple(i for i, _ in order)
    blk = [b for _, b in order]
    for a, b in zip(blk, blk[1:]):
        if all(scalars_equal(x, y, exact, FLOAT_COEFF_RTOL) for x, y in zip(a.coeffs, b.coeffs)):
            raise ValueError("blocks must be pairwise distinct as polynomials")
    starts = []
    pos = 0
    for b in blk:
        starts.append(pos)
        pos += b.mult
    if n is not None and pos != n:
        raise ValueError(f"block multiplicities sum to {pos}, expected n={n}")
    levels = []
    for i in range(k):
        cls = [0] * len(blk)
        cid = 0
        for j in range(1, len(blk)):
            same = all(
                scalars_equal(x, y, exact, FLOAT_COEFF_RTOL)
                for x, y in zip(blk[j - 1].coeffs[i:], blk[j].coeffs[i:])
            )
            if not same:
                cid += 1
            cls[j] = cid
        levels.append(tuple(cls))
    return IrregularType(pos, k, tuple(blk), tuple(starts), tuple(levels), source)


def level_filtration(T: IrregularType) -> list:
    """Classes per level: level i -> list of lists of block indices."""
    out = []
    for i in range(T.k):
        classes: dict = {}
        for b, c in enumerate(T.level_classes[i]):
            classes.setdefault(c, []).append(b)
        out.append([classes[c] for c in sorted(classes)])
    return out


def core_quiver(T: IrregularType):
    """Vertices are the blocks, with deg(t_p - t_q) - 1 parallel arrows.

    Arrow p -> q at grading level i exists for 1 <= i <= multiplicity;
    ids are "p{p}>p{q}:{i}".  Returns (quiver, dims).
    """
    names = [f"p{b}" for b in range(T.block_count)]
    arrows = []
    for p in range(T.block_count):
        for q in range(p + 1, T.block_count):
            for i in range(1, T.arrow_multiplicity(p, q) + 1):
                arrows.append((f"p{p}>p{q}:{i}", names[p], names[q]))
    dims = {names[b]: T.blocks[b].mult for b in range(T.block_count)}
    return make_quiver(names, arrows), dims


def factorize(T: IrregularType, b: JetMatrix, rtol: float = 1e-9):
    """Unique b = b_minus * b_plus along g = u_i^- + p_i^+ per degree."""
    if b.n != T.n or b.k != T.k:
        raise ValueError("jet size/precision does not match the irregular type")
    if not b.is_unipotent(rtol):
        raise ValueError("factorize needs a unipotent jet")
    exact = b.exact
    k, n = T.k, T.n
    minus = [linalg.eye(n, exact)] + [linalg.zeros(n, n, exact) for _ in range(k - 1)]
    plus = [linalg.eye(n, exact)] + [linalg.zeros(n, n, exact) for _ in range(k - 1)]
    for i in range(1, k):
        rhs = b.coeffs[i].copy()
        for j in range(1, i):
            rhs = rhs - np.dot(minus[j], plus[i - j])
        lower = T.project(rhs, i, "lower")
        minus[i] = lower
        plus[i] = rhs - lower
    return JetMatrix(n, k, tuple(minus)), JetMatrix(n, k, tuple(plus))


@dataclass(frozen=True)
class QPPair:
    """Triangular coordinates: q[i] in u_i^-, p[i] in u_i^+ (slot 0 unused)."""

    n: int
    k: int
    q: tuple
    p: tuple

    @property
    def exact(self) -> bool:
        return linalg.is_exact(self.q[0])

    @staticmethod
    def zero(T: IrregularType, exact: bool = None) -> "QPPair":
        exact = T.exact if exact is None else exact
        z = [linalg.zeros(T.n, T.n, exact) for _ in range(T.k)]
        return QPPair(T.n, T.k, tuple(z), tuple(list(z)))

    def q_jet(self) -> JetMatrix:
        """The unipotent jet 1 + Q."""
        coeffs = list(self.q)
        coeffs[0] = coeffs[0] + linalg.eye(self.n, self.exact)
        return JetMatrix(self.n, self.k, tuple(coeffs))

    def norm(self) -> float:
        return max(
            max((linalg.mat_norm(m) for m in self.q[1:]), default=0.0),
            max((linalg.mat_norm(m) for m in self.p[1:]), default=0.0),
        )


def validate_qp(T: IrregularType, qp: QPPair, rtol: float = 1e-9):
    for s in range(1, T.k):
        if not T.in_subspace(qp.q[s], s, "lower", rtol):
            raise ValueError(f"Q slot {s} leaves the strictly-lower level subspace")
        if not T.in_subspace(qp.p[s], s, "upper", rtol):
            raise ValueError(f"P slot {s} leaves the strictly-upper level subspace")


class OrbitMembershipError(ValueError):
    """The principal part is not in the coadjoint orbit of dT."""

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


def _require_same_mode(T: IrregularType, exact: bool):
    if T.exact != exact:
        raise TypeError(
            "backend mismatch: convert the irregular type with to_float() "
            "or supply exact data"
        )


def qp_to_orbit(T: IrregularType, qp: QPPair, check: bool = True, rtol: float = 1e-9) -> PrincipalPart:
    """Reconstruct the orbit element with coordinates (Q, P).

    Descending over slots s = k-1..1, the auxiliary element B' is fixed
    by: its u_s^+ part is P_s, and its p_s^- part matches
    dT_s - sum_{j>=1} B'_{s+j} Q_j.  The orbit element is then the
    polar part of (1 + Q) B'.
    """
    _require_same_mode(T, qp.exact)
    if check:
        validate_qp(T, qp, rtol)
    n, k = T.n, T.k
    exact = qp.exact
    bprime = [None] * k
    for s in range(k - 1, 0, -1):
        acc = T.dt_slot(s)
        for j in range(1, k - s):
            acc = acc - np.dot(bprime[s + j], qp.q[j])
        bprime[s] = qp.p[s] + T.project(acc, s, "lower_eq")
    coeffs = [linalg.zeros(n, n, exact)]
    for s in range(1, k):
        b = bprime[s]
        for j in range(1, k - s):
            b = b + np.dot(qp.q[j], bprime[s + j])
        coeffs.append(b)
    return PrincipalPart(n, k, tuple(coeffs), "polar")


def orbit_to_qp(T: IrregularType, B: PrincipalPart, rtol: float = 1e-8) -> QPPair:
    """Invert qp_to_orbit; doubles as the orbit membership test.

    A stabilizer-chain sweep conjugates B back to dT: stage i works
    inside the centralizer of the top i coefficients of dT and kills,
    degree by degree, the component of each slot that separates at
    level k-i-1, by inverting the commutator with dT's slot k-i on
    that piece.  The accumulated jet is factorized and (Q, P) are read
    off.  A final residual above rtol (relative) means B is not in the
    orbit.
    """
    n, k = T.n, T.k
    if B.tag != "polar" or B.n != n or B.k != k:
        raise ValueError("orbit elements are polar principal parts matching T")
    exact = B.exact
    _require_same_mode(T, exact)
    dt = T.dt()
    scale = max(1.0, B.norm(), dt.norm())
    top_defect = B.coeffs[k - 1] - dt.coeffs[k - 1]
    if not linalg.is_zero_matrix(top_defect, rtol=rtol, scale=scale):
        raise OrbitMembershipError(
            "top coefficient differs from dT (it is fixed under the truncated action)",
            residual=linalg.mat_norm(top_defect),
        )
    work = B
    chain = JetMatrix.identity(n, k, exact)
    for stage in range(1, k - 1):
        level_hi = k - stage  # classes of h_{k-i}
        level_lo = k - stage - 1  # refinement being separated
        dvals = _diag_values(T, k - stage)
        for degree in range(1, k - stage):
            s = k - stage - degree
            piece = _filtration_piece(T, work.coeffs[s], level_hi, level_lo)
            if linalg.is_zero_matrix(piece, rtol=0.0, scale=0.0):
                continue
            x = _invert_commutator(T, piece, dvals, level_hi, level_lo, exact)
            g = jet_exp(x, degree, k)
            work = coadjoint(g, work)
            chain = jet_mul(g, chain)
    residual = max(
        linalg.mat_norm(work.coeffs[s] - dt.coeffs[s]) for s in range(1, k)
    )
    if residual > rtol * scale:
        raise OrbitMembershipError(
            f"reduction to dT left residual {residual:.3e}", residual=residual
        )
    b = jet_inv(chain)
    b_minus, _ = factorize(T, b)
    q = [linalg.zeros(n, n, exact)] + [b_minus.coeffs[i] for i in range(1, k)]
    bprime = pp_left_mul(jet_inv(b_minus), B)
    p = [linalg.zeros(n, n, exact)]
    for s in range(1, k):
        p.append(T.project(bprime.coeffs[s], s, "upper"))
    return QPPair(n, k, tuple(q), tuple(p))


def _diag_values(T: IrregularType, slot: int) -> list:
    """Diagonal of dT's coefficient at the slot, per ambient coordinate."""
    d = T.dt_slot(slot)
    return [d[i, i] for i in range(T.n)]


def _filtration_piece(T, m, level_hi, level_lo):
    """Component inside h_{level_hi} but off the diagonal of h_{level_lo}."""
    inside = T.project(m, level_hi, "diag")
    return inside - T.project(inside, level_lo, "diag")


def _invert_commutator(T, piece, dvals, level_hi, level_lo, exact):
    """Solve [X, D] = -piece on the filtration piece, entrywise."""
    n = T.n
    x = linalg.zeros(n, n, exact)
    cls_hi = T.coord_classes(level_hi)
    cls_lo = T.coord_classes(level_lo)
    for r in range(n):
        for c in range(n):
            if cls_hi[r] == cls_hi[c] and cls_lo[r] != cls_lo[c]:
                v = piece[r, c]
                if exact and not v:
                    continue
                x[r, c] = -v / (dvals[c] - dvals[r])
    return x


def qp_to_rep(T: IrregularType, qp: QPPair) -> DoubledRep:
    """Scatter (Q, P) blocks onto the parallel arrows of the core quiver.

    The z^i block of Q mapping block p into block q rides on the i-th
    arrow p -> q; the matching block of P rides on its reverse.
    """
    quiver, dims = core_quiver(T)
    rep = DoubledRep.zero(quiver, dims, qp.exact)
    for p in range(T.block_count):
        sp = T.block_slice(p)
        for q in range(p + 1, T.block_count):
            sq = T.block_slice(q)
            for i in range(1, T.arrow_multiplicity(p, q) + 1):
                arrow = f"p{p}>p{q}:{i}"
                rep.fwd[arrow] = qp.q[i][sq, sp].copy()
                rep.rev[arrow] = qp.p[i][sp, sq].copy()
    return rep


def rep_to_qp(T: IrregularType, rep: DoubledRep) -> QPPair:
    exact = rep.exact
    q = [linalg.zeros(T.n, T.n, exact) for _ in range(T.k)]
    p = [linalg.zeros(T.n, T.n, exact) for _ in range(T.k)]
    for pb in range(T.block_count):
        sp = T.block_slice(pb)
        for qb in range(pb + 1, T.block_count):
            sq = T.block_slice(qb)
            for i in range(1, T.arrow_multiplicity(pb, qb) + 1):
                arrow = f"p{pb}>p{qb}:{i}"
                q[i][sq, sp] = rep.fwd[arrow]
                p[i][sp, sq] = rep.rev[arrow]
    return QPPair(T.n, T.k, tuple(q), tuple(p))


def stabilizes_dt(T: IrregularType, b: JetMatrix, rtol: float = 1e-9) -> bool:
    """A unipotent jet fixes dT iff every coefficient sits in its level
    centralizer h_i."""
    return all(T.in_subspace(b.coeffs[i], i, "diag", rtol) for i in range(1, T.k))


def irregular_type_to_json(T: IrregularType) -> dict:
    from .serialize import scalar_to_json

    return {
        "k": T.k,
        "blocks": [
            {"coeffs": [scalar_to_json(c) for c in b.coeffs], "mult": b.mult}
            for b in T.blocks
        ],
    }


def irregular_type_from_json(data: dict, exact: bool) -> IrregularType:
    from .serialize import scalar_from_json

    k = int(data["k"])
    blocks = [
        (tuple(scalar_from_json(c, exact) for c in b["coeffs"]), int(b["mult"]))
        for b in data["blocks"]
    ]
    return make_irregular_type(k, blocks)
