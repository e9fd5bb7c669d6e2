"""Conjugacy classes of matrices: markings, leg data, realization.

An orbit is described by its Jordan data (eigenvalues with block-size
multisets).  A marking is an ordered tuple (l_1, ..., l_d) with
prod_i (A - l_i) = 0 on the orbit; each marking determines the chain
of subspaces V_l = range prod_{i<=l} (A - l_i) whose dimensions form a
type-A leg.  The greedy marking (largest rank drop first, ties by
(Re, Im) order) minimizes the leg dimensions; callers may override the
order.

realize_leg builds the chain maps explicitly: the reverse map along
arrow l -> l-1 is (A - l_l) corestricted to V_l, the forward map is
the inclusion; the product of the pair at the top plus l_1 recovers A.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .quiver import DoubledRep, make_quiver
from .scalars import GaussianRational, as_exact, scalar_key

Marking = tuple


@dataclass(frozen=True)
class OrbitSpec:
    """Jordan data: (eigenvalue, sorted block sizes) pairs summing to n."""

    n: int
    eigenvalues: tuple  # ((value, (b1 >= b2 >= ...)), ...)
    marking_override: Marking | None = None

    def __post_init__(self):
        total = sum(sum(blocks) for _, blocks in self.eigenvalues)
        if total != self.n:
            raise ValueError(f"block sizes sum to {total}, expected n={self.n}")
        vals = [scalar_key(v) for v, _ in self.eigenvalues]
        if len(set(vals)) != len(vals):
            raise ValueError("repeated eigenvalue in orbit data")
        if self.marking_override is not None:
            _validate_marking(self, self.marking_override)

    @property
    def exact(self) -> bool:
        return isinstance(self.eigenvalues[0][0], GaussianRational)

    def trace(self):
        acc = None
        for value, blocks in self.eigenvalues:
            t = value * sum(blocks)
            acc = t if acc is None else acc + t
        return acc

    def max_block(self, value) -> int:
        for v, blocks in self.eigenvalues:
            if scalar_key(v) == scalar_key(value):
                return blocks[0]
        return 0


def make_orbit_spec(n: int, eigenvalues, marking=None) -> OrbitSpec:
    evs = []
    for value, blocks in eigenvalues:
        blocks = tuple(sorted((int(b) for b in blocks), reverse=True))
        if any(b <= 0 for b in blocks):
            raise ValueError("Jordan block sizes must be positive")
        evs.append((value, blocks))
    evs.sort(key=lambda p: scalar_key(p[0]))
    return OrbitSpec(n, tuple(evs), tuple(marking) if marking is not None else None)


def _validate_marking(spec: OrbitSpec, marking: Marking):
    for value, blocks in spec.eigenvalues:
        need = blocks[0]
        have = sum(1 for m in marking if scalar_key(m) == scalar_key(value))
        if have < need:
            raise ValueError(
                f"marking lists eigenvalue {value} only {have} times, largest block is {need}"
            )


def greedy_marking(spec: OrbitSpec) -> Marking:
    """Marking of minimal length d = sum of largest block sizes.

    At each step pick the eigenvalue with the most still-active Jordan
    blocks (maximal rank drop); break ties by (Re, Im) order.
    """
    if spec.marking_override is not None:
        return spec.marking_override
    used = {i: 0 for i in range(len(spec.eigenvalues))}
    marking = []
    while True:
        best, best_drop = None, 0
        for i, (value, blocks) in enumerate(spec.eigenvalues):
            drop = sum(1 for b in blocks if b > used[i])
            if drop > best_drop or (
                drop == best_drop
                and drop > 0
                and scalar_key(value) < scalar_key(spec.eigenvalues[best][0])
            ):
                best, best_drop = i, drop
        if best is None:
            break
        marking.append(spec.eigenvalues[best][0])
        used[best] += 1
    return tuple(marking)


def minimal_marking(L: np.ndarray, eigenvalues=None, rtol: float = 1e-8) -> Marking:
    """Greedy minimal marking of a concrete matrix."""
    return greedy_marking(jordan_from_matrix(L, eigenvalues=eigenvalues, rtol=rtol))


def rank_sequence(spec: OrbitSpec, marking: Marking = None) -> list:
    """dim V_l for l = 1..d-1 (combinatorial, exact).

    dim V_l = sum over Jordan blocks of max(size - uses so far, 0),
    where a use is an occurrence of the block's eigenvalue among the
    first l marking entries.
    """
    marking = greedy_marking(spec) if marking is None else tuple(marking)
    dims = []
    counts = {}
    for m in marking[:-1]:
        key = scalar_key(m)
        counts[key] = counts.get(key, 0) + 1
        d = 0
        for value, blocks in spec.eigenvalues:
            c = counts.get(scalar_key(value), 0)
            d += sum(max(b - c, 0) for b in blocks)
        dims.append(d)
    return dims


def leg_dimensions(spec: OrbitSpec, marking: Marking = None) -> list:
    """Strictly positive part of the rank sequence (zero tail dropped)."""
    dims = rank_sequence(spec, marking)
    while dims and dims[-1] == 0:
        dims.pop()
    return dims


def normal_form_matrix(spec: OrbitSpec, exact: bool = None) -> np.ndarray:
    """Block-diagonal Jordan normal form realizing the spec."""
    exact = spec.exact if exact is None else exact
    a = linalg.zeros(spec.n, spec.n, exact)
    one = GaussianRational(1) if exact else 1.0 + 0j
    pos = 0
    for value, blocks in spec.eigenvalues:
        v = value if exact else complex(value) if not isinstance(value, GaussianRational) else value.to_complex()
        for b in blocks:
            for i in range(b):
                a[pos + i, pos + i] = v
                if i + 1 < b:
                    a[pos + i, pos + i + 1] = one
            pos += b
    return a


def _cluster_eigenvalues(vals: np.ndarray, tol: float):
    order = sorted(range(len(vals)), key=lambda i: (vals[i].real, vals[i].imag))
    clusters = []
    for i in order:
        z = vals[i]
        for c in clusters:
            if abs(z - c[0]) <= tol:
                c[1].append(z)
                c[0] = sum(c[1]) / len(c[1])
                break
        else:
            clusters.append([z, [z]])
    return [(c[0], len(c[1])) for c in clusters]


def jordan_from_matrix(
    L: np.ndarray, eigenvalues=None, rtol: float = 1e-8, cluster_rtol: float = None
) -> OrbitSpec:
    """Recover Jordan data from a matrix.

    Float mode clusters eigenvalues and reads block sizes from rank
    profiles of powers of (L - value).  A size-b Jordan block scatters
    its computed eigenvalues by roughly eps^(1/b), so the detection
    tolerance defaults to max(rtol, eps^(1/n)) relative to ||L||;
    distinct eigenvalues closer than that are ambiguous and get merged.
    Exact mode needs the eigenvalues supplied (rational spectrum).
    """
    n = L.shape[0]
    exact = linalg.is_exact(L)
    if exact:
        if eigenvalues is None:
            raise ValueError("exact Jordan data needs the eigenvalue list supplied")
        return _jordan_pass(L, [as_exact(v) for v in eigenvalues], rtol)
    if eigenvalues is not None:
        return _jordan_pass(L, [complex(v) for v in eigenvalues], rtol)
    # eigenvalues of a size-b block scatter by ~eps^(1/b) under rounding,
    # so start at max(rtol, eps^(1/n)) and coarsen until consistent
    if cluster_rtol is None:
        cluster_rtol = max(rtol, float(np.finfo(float).eps) ** (1.0 / max(2, n)))
    scale = max(1.0, linalg.mat_norm(L))
    eigvals = np.linalg.eigvals(np.asarray(L, dtype=complex))
    tol = cluster_rtol
    last_error = None
    for _ in range(7):
        values = [v for v, _ in _cluster_eigenvalues(eigvals, tol * scale)]
        try:
            return _jordan_pass(L, values, tol)
        except ValueError as e:
            last_error = e
            tol *= 10.0
            if tol > 1e-2:
                break
    raise ValueError(f"eigenvalue clustering ambiguity: {last_error}")


def _jordan_pass(L: np.ndarray, values, detect_rtol: float) -> OrbitSpec:
    n = L.shape[0]
    exact = linalg.is_exact(L)
    spec_data = []
    total = 0
    for value in values:
        shifted = L - value * linalg.eye(n, exact)
        ambient = None if exact else np.linalg.norm(linalg.to_complex(L), 2) + abs(complex(value))
        ranks = [n] + linalg.power_rank_sequence(shifted, n, detect_rtol, scale=ambient)
        mult = n - ranks[-1]
        if mult == 0:
            raise ValueError(f"{value} is not an eigenvalue (within tolerance)")
        blocks = []
        for j in range(1, len(ranks)):
            at_least_j = ranks[j - 1] - ranks[j]
            at_least_next = ranks[j] - ranks[j + 1] if j + 1 < len(ranks) else 0
            blocks.extend([j] * (at_least_j - at_least_next))
        spec_data.append((value, blocks))
        total += mult
    if total != n:
        raise ValueError(
            f"declared eigenvalues account for dimension {total} of {n}; spectrum incomplete"
        )
    return make_orbit_spec(n, spec_data)


@dataclass
class LegRealization:
    """Concrete chain maps for a marking of a matrix orbit.

    Vertices are "0", "1", ..., with V_0 the ambient space; the arrow
    l -> l-1 carries the inclusion forward and the shifted matrix
    backward.  bases[l] holds an ambient-coordinates basis of V_l in
    its columns.
    """

    marking: Marking
    rep: DoubledRep
    bases: dict

    @property
    def leg_dims(self) -> list:
        d = len(self.marking)
        return [self.rep.dims[str(l)] for l in range(1, d) if str(l) in self.rep.dims]


def _check_annihilation(L: np.ndarray, marking: Marking, rtol: float):
    n = L.shape[0]
    exact = linalg.is_exact(L)
    ident = linalg.eye(n, exact)
    prod = ident
    scale = max(1.0, linalg.mat_norm(L)) ** max(1, len(marking))
    for lam in marking:
        prod = np.dot(prod, L - lam * ident)
    if not linalg.is_zero_matrix(prod, rtol=max(rtol, 1e-8), scale=scale):
        raise ValueError("invalid marking: the shifted product does not annihilate")


def realize_leg(L: np.ndarray, marking: Marking, rtol: float = 1e-9) -> LegRealization:
    """Build the chain of subspaces and maps for a marking of L."""
    n = L.shape[0]
    exact = linalg.is_exact(L)
    _check_annihilation(L, marking, rtol)
    ident = linalg.eye(n, exact)
    bases = {0: ident}
    d = len(marking)
    dims = {"0": n}
    fwd, rev, arrows = {}, {}, []
    prev_basis = ident
    for l in range(1, d):
        lam = marking[l - 1]
        shifted = L - lam * ident
        image = np.dot(shifted, prev_basis)
        basis = linalg.column_space(image)
        if basis.shape[1] == 0:
            break  # zero-dimensional tail: leg ends here
        vertex, parent = str(l), str(l - 1)
        dims[vertex] = basis.shape[1]
        arrow_id = f"{vertex}>{parent}"
        arrows.append((arrow_id, vertex, parent))
        # reverse map: (L - lam) corestricted to V_l, in chain coordinates
        rev[arrow_id] = linalg.coords_in_basis(basis, image, rtol)
        # forward map: inclusion of V_l into V_{l-1}
        fwd[arrow_id] = linalg.coords_in_basis(prev_basis, basis, rtol)
        bases[l] = basis
        prev_basis = basis
    quiver = make_quiver(list(dims.keys()), arrows)
    rep = DoubledRep(quiver, dims, fwd, rev)
    return LegRealization(tuple(marking), rep, bases)


def leg_reconstruction(realization: LegRealization, exact: bool = None) -> np.ndarray:
    """Product of the top arrow pair plus l_1; equals the original matrix."""
    n = realization.rep.dims["0"]
    exact = realization.rep.exact if exact is None else exact
    lam1 = realization.marking[0]
    ident = linalg.eye(n, exact)
    if "1" not in realization.rep.dims:
        return lam1 * ident
    a = realization.rep.fwd["1>0"]
    b = realization.rep.rev["1>0"]
    return np.dot(a, b) + lam1 * ident


def expected_rank(spec: OrbitSpec, value, j: int) -> int:
    """rank((R - value)^j) for R in the orbit."""
    r = spec.n
    for v, blocks in spec.eigenvalues:
        if scalar_key(v) == scalar_key(value):
            r -= sum(min(b, j) for b in blocks)
    return r


def orbit_membership(R: np.ndarray, spec: OrbitSpec, rtol: float = 1e-8) -> bool:
    """Exact conjugacy-class membership via rank profiles.

    Checks rank((R - value)^j) against the Jordan data for every
    declared eigenvalue and j up to n; since multiplicities fill n this
    also rules out undeclared eigenvalues.
    """
    n = R.shape[0]
    if n != spec.n:
        raise ValueError("size mismatch")
    exact = linalg.is_exact(R)
    ident = linalg.eye(n, exact)
    for value, blocks in spec.eigenvalues:
        v = value
        if not exact and isinstance(value, GaussianRational):
            v = value.to_complex()
        shifted = R - v * ident
        ambient = None if exact else np.linalg.norm(linalg.to_complex(R), 2) + abs(complex(v))
        ranks = linalg.power_rank_sequence(shifted, n, rtol, scale=ambient)
        for j in range(1, n + 1):
            if ranks[j - 1] != expected_rank(spec, value, j):
                return False
    return True


def orbit_spec_to_json(spec: OrbitSpec) -> dict:
    from .serialize import scalar_to_json

    out = {
        "eigenvalues": [
            {"value": scalar_to_json(v), "blocks": list(b)} for v, b in spec.eigenvalues
        ]
    }
    if spec.marking_override is not None:
        out["marking"] = [scalar_to_json(m) for m in spec.marking_override]
    return out


def orbit_spec_from_json(data: dict, n: int, exact: bool) -> OrbitSpec:
    from .serialize import matrix_from_json, scalar_from_json

    marking = None
    if "marking" in data and "ranks" in data:
        return _spec_from_marking_ranks(data, n, exact)
    if "marking" in data:
        marking = [scalar_from_json(x, exact) for x in data["marking"]]
    if "eigenvalues" in data:
        evs = [
            (scalar_from_json(e["value"], exact), tuple(e["blocks"]))
            for e in data["eigenvalues"]
        ]
        return make_orbit_spec(n, evs, marking)
    if "matrix" in data:
        m = matrix_from_json(data["matrix"], n, n, exact)
        hints = [scalar_from_json(x, exact) for x in data.get("eigenvalue_hints", [])] or None
        spec = jordan_from_matrix(m, eigenvalues=hints)
        if marking is not None:
            spec = make_orbit_spec(n, spec.eigenvalues, marking)
        return spec
    raise ValueError("orbit spec needs 'eigenvalues', 'matrix', or 'marking'+'ranks'")


def _spec_from_marking_ranks(data: dict, n: int, exact: bool) -> OrbitSpec:
    """Rebuild Jordan data from a marking and its rank sequence."""
    from .serialize import scalar_from_json

    marking = [scalar_from_json(x, exact) for x in data["marking"]]
    ranks = [int(r) for r in data["ranks"]]
    if len(ranks) != len(marking) - 1:
        raise ValueError("rank sequence must have length d-1")
    dims = [n] + ranks + [0]
    counts = {}
    per_eigenvalue = {}
    for l, lam in enumerate(marking):
        key = scalar_key(lam)
        counts[key] = counts.get(key, 0) + 1
        drop = dims[l] - dims[l + 1]
        per_eigenvalue.setdefault(key, (lam, []))[1].append((counts[key], drop))
    evs = []
    for lam, occ in per_eigenvalue.values():
        # occ: (occurrence index, #blocks of size >= occurrence index)
        occ.sort()
        blocks = []
        for idx, (j, at_least) in enumerate(occ):
            nxt = occ[idx + 1][1] if idx + 1 < len(occ) else 0
            blocks.extend([j] * (at_least - nxt))
        if blocks:
            evs.append((lam, blocks))
    return make_orbit_spec(n, evs, marking)
