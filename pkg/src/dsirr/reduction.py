"""Formal reduction of connection jets at an irregular point.

bv_split removes, degree by degree, the part of a connection jet that
does not commute with its semisimple leading coefficient: the degree-j
gauge factor exp(z^j X_j) has X_j in the range of ad of the leading
coefficient, found by entrywise division of the offending component by
eigenvalue differences.  bv_chain iterates the split through the
stabilizer chain of the top coefficients (which must lie in a common
torus), ending with a jet valued in the joint centralizer.

normalize runs the chain against a prescribed irregular type, checks
at every stage that the invariant (centralizer-valued) component of
the leading slot matches the type, and returns the residue of the
reduced jet: the exponent.  The exponent does not depend on the gauge
used, which is what the invariance tests exercise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .irregular import IrregularType
from .jets import ConnectionJet, JetMatrix, gauge, jet_exp, jet_mul

CLUSTER_RTOL = 1e-8


@dataclass
class ReductionResult:
    """Gauge factors (degree, X) in application order, and the reduced jet."""

    factors: list
    reduced: ConnectionJet

    @property
    def depth(self) -> int:
        return self.reduced.depth

    def gauge_jet(self, precision: int = None) -> JetMatrix:
        """Product of the factors as a single jet (later factors on the left)."""
        n = self.reduced.n
        exact = self.reduced.exact
        precision = self.depth + 1 if precision is None else precision
        total = JetMatrix.identity(n, precision, exact)
        for degree, x in self.factors:
            total = jet_mul(jet_exp(x, degree, precision), total)
        return total


@dataclass
class NormalizeResult(ReductionResult):
    exponent: np.ndarray = None


def _eigen_data(a0: np.ndarray, rtol: float):
    """Eigenbasis of a semisimple matrix; exact mode requires diagonal input."""
    n = a0.shape[0]
    if linalg.is_exact(a0):
        for i in range(n):
            for j in range(n):
                if i != j and a0[i, j]:
                    raise ValueError("exact reduction requires a diagonal leading coefficient")
        return [a0[i, i] for i in range(n)], None, None
    af = np.asarray(a0, dtype=complex)
    vals, vecs = np.linalg.eig(af)
    cond = np.linalg.cond(vecs)
    if not np.isfinite(cond) or cond > 1e12:
        raise ValueError("leading coefficient is not diagonalizable within tolerance")
    return list(vals), vecs, np.linalg.inv(vecs)


def _split_pass(
    jet: ConnectionJet,
    slot0: int,
    allowed,
    divisor,
    depth: int,
):
    """Kill, for every degree j, the allowed-positions component of slot
    slot0 + j by conjugating with exp(z^j X); divisor[r][c] is the
    eigenvalue difference to divide by.  Returns (factors, reduced)."""
    n = jet.n
    exact = jet.exact
    factors = []
    work = jet
    for j in range(1, depth - slot0 + 1):
        s = slot0 + j
        c = work.coeffs[s]
        x = linalg.zeros(n, n, exact)
        dirty = False
        for r in range(n):
            for q in range(n):
                if allowed[r][q]:
                    v = c[r, q]
                    if not v:
                        continue
                    x[r, q] = -v / divisor[r][q]
                    dirty = True
        if not dirty:
            continue
        g = jet_exp(x, j, depth + 1)
        work = gauge(g, work)
        factors.append((j, x))
    return factors, work


def bv_split(a: ConnectionJet, depth: int = None, rtol: float = CLUSTER_RTOL) -> ReductionResult:
    """Commute everything past the semisimple leading coefficient.

    The reduced jet satisfies [A_0, A'_i] = 0 for all i up to the
    trusted depth, with A'_0 = A_0; slots already commuting with A_0
    are returned unchanged.
    """
    depth = a.depth if depth is None else depth
    if depth > a.depth:
        raise ValueError(f"requested depth {depth} exceeds trusted depth {a.depth}")
    n = a.n
    a0 = a.coeffs[0]
    vals, vecs, vecs_inv = _eigen_data(a0, rtol)
    work = a
    if vecs is not None:
        # work in the eigenbasis; transform back at the end
        work = ConnectionJet(n, a.k, tuple(vecs_inv @ c @ vecs for c in a.coeffs))
        scale = max(abs(v) for v in vals) if vals else 0.0
        tol = rtol * max(scale, 1.0)
        allowed = [[abs(vals[r] - vals[c]) > tol for c in range(n)] for r in range(n)]
    else:
        allowed = [[bool(vals[r] - vals[c]) for c in range(n)] for r in range(n)]
    divisor = [[vals[c] - vals[r] if allowed[r][c] else None for c in range(n)] for r in range(n)]
    factors, work = _split_pass(work, 0, allowed, divisor, depth)
    if vecs is not None:
        factors = [(j, vecs @ x @ vecs_inv) for j, x in factors]
        work = ConnectionJet(n, a.k, tuple(vecs @ c @ vecs_inv for c in work.coeffs))
    return ReductionResult(factors, work)


def _diag_tuple_classes(diags, rtol: float):
    """Group coordinates by (approximate) equality of their value tuples."""
    n = len(diags[0]) if diags else 0
    classes = [-1] * n
    reps = []
    for i in range(n):
        tup = [d[i] for d in diags]
        for cid, rep in enumerate(reps):
            if all(_close(a, b, rtol) for a, b in zip(tup, rep)):
                classes[i] = cid
                break
        else:
            classes[i] = len(reps)
            reps.append(tup)
    return classes


def _close(a, b, rtol: float) -> bool:
    if isinstance(a, complex) or isinstance(b, complex):
        return abs(complex(a) - complex(b)) <= rtol * max(1.0, abs(complex(a)), abs(complex(b)))
    return a == b


def _diag_of(m: np.ndarray):
    return [m[i, i] for i in range(m.shape[0])]


def _check_torus(m: np.ndarray, rtol: float) -> bool:
    off = m.copy()
    for i in range(m.shape[0]):
        off[i, i] = off[i, i] - m[i, i]
    return linalg.is_zero_matrix(off, rtol=rtol, scale=linalg.mat_norm(m))


def bv_chain(a: ConnectionJet, depth: int = None, rtol: float = CLUSTER_RTOL) -> ReductionResult:
    """Iterated split through the stabilizer chain of the top slots.

    Requires the coefficients below the residue slot (indices <= k-2)
    to be diagonal.  The reduced jet is valued in their joint
    centralizer, and those coefficients are returned unchanged.
    """
    depth = a.depth if depth is None else depth
    if depth > a.depth:
        raise ValueError(f"requested depth {depth} exceeds trusted depth {a.depth}")
    n, k = a.n, a.k
    exact = a.exact
    for i in range(k - 1):
        if not _check_torus(a.coeffs[i], rtol):
            raise ValueError(f"chain hypothesis violated: coefficient {i} is not diagonal")
    work = a
    all_factors = []
    tol = 0.0 if exact else rtol
    for stage in range(1, k):
        lead = work.coeffs[stage - 1]
        diags = [_diag_of(work.coeffs[i]) for i in range(stage - 1)]
        cls_prev = _diag_tuple_classes(diags, tol) if diags else [0] * n
        cls_now = _diag_tuple_classes(diags + [_diag_of(lead)], tol)
        dvals = _diag_of(lead)
        allowed = [
            [
                cls_prev[r] == cls_prev[c] and cls_now[r] != cls_now[c]
                for c in range(n)
            ]
            for r in range(n)
        ]
        divisor = [
            [dvals[c] - dvals[r] if allowed[r][c] else None for c in range(n)]
            for r in range(n)
        ]
        before = work
        factors, work = _split_pass(work, stage - 1, allowed, divisor, depth)
        work = _restore_invariant_slots(before, work, stage - 1)
        all_factors.extend(factors)
    return ReductionResult(all_factors, work)


def _restore_invariant_slots(before: ConnectionJet, after: ConnectionJet, upto: int) -> ConnectionJet:
    """Slots <= upto are invariant under the stage by the centralizer
    property; recomputing them only adds rounding noise, so copy them
    back (guarded against real drift)."""
    coeffs = list(after.coeffs)
    for s in range(min(upto + 1, len(coeffs))):
        drift = linalg.mat_norm(after.coeffs[s] - before.coeffs[s])
        scale = max(1.0, linalg.mat_norm(before.coeffs[s]))
        if drift > 1e-9 * scale:
            raise AssertionError(f"stage moved an invariant slot {s} by {drift:.3e}")
        coeffs[s] = before.coeffs[s]
    return ConnectionJet(after.n, after.k, tuple(coeffs))


def normalize(
    a: ConnectionJet, T: IrregularType, depth: int = None, rtol: float = 1e-8
) -> NormalizeResult:
    """Reduce a connection jet against a prescribed irregular type.

    The jet need not have diagonal coefficients: each stage first
    checks that the invariant component of its leading slot equals the
    matching dT coefficient (else the polar part is incompatible with
    the type) and then removes the separating component at that level.
    Returns the gauge factors, the reduced jet, and the exponent: the
    residue coefficient of the reduced jet, block-diagonal for the
    type.  The exponent is independent of the unipotent gauge used.
    """
    if T.exact != a.exact:
        raise TypeError("backend mismatch between the jet and the irregular type")
    if a.n != T.n or a.k != T.k:
        raise ValueError("jet size or pole order does not match the irregular type")
    depth = (2 * T.k if 2 * T.k <= a.depth else a.depth) if depth is None else depth
    if depth > a.depth:
        raise ValueError(f"requested depth {depth} exceeds trusted depth {a.depth}")
    if depth < a.k - 1:
        raise ValueError("depth underflow: cannot even trust the residue slot")
    n, k = a.n, a.k
    exact = a.exact
    scale = max(1.0, max(linalg.mat_norm(c) for c in a.coeffs))
    work = a
    all_factors = []
    for stage in range(1, k):
        slot_value = T.dt_slot(k - stage)
        defect = work.coeffs[stage - 1] - slot_value
        if not linalg.is_zero_matrix(defect, rtol=rtol, scale=scale):
            raise ValueError(
                f"polar part incompatible with the irregular type at slot {stage - 1} "
                f"(residual {linalg.mat_norm(defect):.3e})"
            )
        level_hi = k - stage
        level_lo = k - stage - 1
        cls_hi = T.coord_classes(level_hi)
        cls_lo = T.coord_classes(level_lo)
        dvals = [slot_value[i, i] for i in range(n)]
        allowed = [
            [cls_hi[r] == cls_hi[c] and cls_lo[r] != cls_lo[c] for c in range(n)]
            for r in range(n)
        ]
        divisor = [
            [dvals[c] - dvals[r] if allowed[r][c] else None for c in range(n)]
            for r in range(n)
        ]
        before = work
        factors, work = _split_pass(work, stage - 1, allowed, divisor, depth)
        work = _restore_invariant_slots(before, work, stage - 1)
        all_factors.extend(factors)
    exponent = work.coeffs[k - 1]
    return NormalizeResult(all_factors, work, exponent=exponent)
