"""Quivers, doubled representations, moment map, and stability.

A doubled representation assigns to every arrow a of the quiver a map
for a (source -> target) and one for its reverse (target -> source);
signs are +1 on original arrows and -1 on reverses.  The moment map at
a vertex i is

    mu_i(Xi) = sum over doubled arrows targeting i of
               sign * Xi_arrow @ Xi_reverse,

and the symplectic form on the doubled representation space is
(1/2) sum_a sign(a) tr dXi_a ^ dXi_{a-bar}.

Stability means irreducibility of the doubled-path-algebra module; it
is decided by a density test: the unital algebra generated by the
vertex projections and all arrow maps inside End(sum of vertex spaces)
must have full dimension (total dim)^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .scalars import ONE

DimVector = dict  # vertex id -> nonnegative int
ParamVector = dict  # vertex id -> scalar


@dataclass(frozen=True)
class Arrow:
    id: str
    src: str
    dst: str


@dataclass(frozen=True)
class Quiver:
    vertices: tuple
    arrows: tuple

    def __post_init__(self):
        seen = set(self.vertices)
        if len(seen) != len(self.vertices):
            raise ValueError("duplicate vertex ids")
        ids = set()
        for a in self.arrows:
            if a.src not in seen or a.dst not in seen:
                raise ValueError(f"arrow {a.id} references unknown vertex")
            if a.id in ids:
                raise ValueError(f"duplicate arrow id {a.id}")
            ids.add(a.id)

    @property
    def loop_free(self) -> bool:
        return all(a.src != a.dst for a in self.arrows)


def make_quiver(vertices, arrows) -> Quiver:
    return Quiver(tuple(vertices), tuple(Arrow(*a) if not isinstance(a, Arrow) else a for a in arrows))


@dataclass
class DoubledRep:
    """Maps for every arrow and its reverse over a dimensioned vertex set."""

    quiver: Quiver
    dims: DimVector
    fwd: dict
    rev: dict

    def __post_init__(self):
        for a in self.quiver.arrows:
            f, r = self.fwd[a.id], self.rev[a.id]
            if f.shape != (self.dims[a.dst], self.dims[a.src]):
                raise ValueError(f"forward map of {a.id} has shape {f.shape}")
            if r.shape != (self.dims[a.src], self.dims[a.dst]):
                raise ValueError(f"reverse map of {a.id} has shape {r.shape}")

    @property
    def exact(self) -> bool:
        for a in self.quiver.arrows:
            return linalg.is_exact(self.fwd[a.id])
        return False

    @staticmethod
    def zero(quiver: Quiver, dims: DimVector, exact: bool = False) -> "DoubledRep":
        fwd = {a.id: linalg.zeros(dims[a.dst], dims[a.src], exact) for a in quiver.arrows}
        rev = {a.id: linalg.zeros(dims[a.src], dims[a.dst], exact) for a in quiver.arrows}
        return DoubledRep(quiver, dict(dims), fwd, rev)

    def copy(self) -> "DoubledRep":
        return DoubledRep(
            self.quiver,
            dict(self.dims),
            {k: v.copy() for k, v in self.fwd.items()},
            {k: v.copy() for k, v in self.rev.items()},
        )

    def to_float(self) -> "DoubledRep":
        return DoubledRep(
            self.quiver,
            dict(self.dims),
            {k: linalg.to_complex(v) for k, v in self.fwd.items()},
            {k: linalg.to_complex(v) for k, v in self.rev.items()},
        )

    def norm(self) -> float:
        total = 0.0
        for a in self.quiver.arrows:
            total += linalg.mat_norm(self.fwd[a.id]) ** 2
            total += linalg.mat_norm(self.rev[a.id]) ** 2
        return total ** 0.5


def moment_map(rep: DoubledRep) -> dict:
    """Vertex-wise moment values; their traces always sum to zero."""
    exact = rep.exact
    mu = {v: linalg.zeros(rep.dims[v], rep.dims[v], exact) for v in rep.quiver.vertices}
    for a in rep.quiver.arrows:
        f, r = rep.fwd[a.id], rep.rev[a.id]
        mu[a.dst] = mu[a.dst] + np.dot(f, r)
        mu[a.src] = mu[a.src] - np.dot(r, f)
    return mu


def symplectic_form(rep: DoubledRep, dxi1: DoubledRep, dxi2: DoubledRep):
    """Evaluate the canonical form on two tangent vectors at rep.

    The value is base-point independent; rep only fixes the quiver and
    dimensions.
    """
    acc = None
    for a in rep.quiver.arrows:
        t = np.trace(np.dot(dxi1.fwd[a.id], dxi2.rev[a.id])) - np.trace(
            np.dot(dxi2.fwd[a.id], dxi1.rev[a.id])
        )
        acc = t if acc is None else acc + t
    if acc is None:
        from .scalars import GaussianRational

        acc = GaussianRational(0) if rep.exact else 0j
    return acc


def delta(quiver: Quiver, dims: DimVector) -> int:
    """Half-dimension of the moduli space: sum over arrows of
    v_src*v_dst minus sum of v_i^2, plus one."""
    s = sum(dims[a.src] * dims[a.dst] for a in quiver.arrows)
    return s - sum(d * d for d in dims.values()) + 1


def _vertex_offsets(quiver: Quiver, dims: DimVector):
    offsets = {}
    total = 0
    for v in quiver.vertices:
        offsets[v] = total
        total += dims[v]
    return offsets, total


def total_endomorphism_generators(rep: DoubledRep):
    """Vertex projections and arrow maps as endomorphisms of the sum."""
    offsets, total = _vertex_offsets(rep.quiver, rep.dims)
    exact = rep.exact
    gens = []
    one = ONE if exact else 1.0 + 0j
    for v in rep.quiver.vertices:
        p = linalg.zeros(total, total, exact)
        o, d = offsets[v], rep.dims[v]
        for i in range(d):
            p[o + i, o + i] = one
        gens.append(p)
    for a in rep.quiver.arrows:
        so, to = offsets[a.src], offsets[a.dst]
        sd, td = rep.dims[a.src], rep.dims[a.dst]
        m = linalg.zeros(total, total, exact)
        m[to : to + td, so : so + sd] = rep.fwd[a.id]
        gens.append(m)
        m = linalg.zeros(total, total, exact)
        m[so : so + sd, to : to + td] = rep.rev[a.id]
        gens.append(m)
    return gens, total


def algebra_span_dimension(gens: list, total: int, rtol: float = linalg.RANK_RTOL) -> int:
    """Dimension of the unital algebra generated inside End(C^total).

    Words are collected with a generous per-vector test; the reported
    dimension is the rank of the whole collection, so in float mode the
    threshold is rtol times the largest singular value of the stacked
    word matrix.  That global cutoff is what makes the density test
    robust near the locus where some maps degenerate to zero.
    """
    exact = linalg.is_exact(gens[0]) if gens else False
    target = total * total
    collect_rtol = rtol if exact else min(rtol, 1e-13)
    span = linalg.SpanBasis(target, exact, collect_rtol)
    words = [linalg.eye(total, exact)]
    span.add(words[0].reshape(-1))
    frontier = []
    for g in gens:
        if span.add(g.reshape(-1)):
            words.append(g)
            frontier.append(g)
    while frontier and span.rank < target:
        new_frontier = []
        for b in frontier:
            for g in gens:
                for prod in (np.dot(b, g), np.dot(g, b)):
                    if span.rank >= target:
                        break
                    if span.add(prod.reshape(-1)):
                        words.append(prod)
                        new_frontier.append(prod)
        frontier = new_frontier
    if exact:
        return span.rank
    stacked = np.array([w.reshape(-1) for w in words], dtype=complex)
    return linalg.rank(stacked, rtol)


def is_stable(rep: DoubledRep, rtol: float = linalg.RANK_RTOL) -> bool:
    """Irreducibility via the density characterization.

    Builds the span closure of the unital algebra generated by the
    vertex projections and all arrow maps; the module is simple exactly
    when the closure has dimension (total dim)^2.
    """
    if all(d == 0 for d in rep.dims.values()):
        raise ValueError("dimension vector is identically zero")
    gens, total = total_endomorphism_generators(rep)
    return algebra_span_dimension(gens, total, rtol) == total * total


def invariant_closure(rep: DoubledRep, seeds: dict, rtol: float = linalg.RANK_RTOL) -> dict:
    """Smallest graded invariant subspace containing the seed vectors.

    seeds maps vertex ids to matrices whose columns are seed vectors
    (missing vertices mean no seeds there).  Returns vertex -> basis
    matrix (columns).
    """
    exact = rep.exact
    spans = {v: linalg.SpanBasis(rep.dims[v], exact, rtol) for v in rep.quiver.vertices}
    queue = []
    for v, mat in seeds.items():
        for j in range(mat.shape[1]):
            if spans[v].add(mat[:, j]):
                queue.append((v, mat[:, j]))
    while queue:
        v, vec = queue.pop()
        col = vec.reshape(-1, 1)
        for a in rep.quiver.arrows:
            if a.src == v:
                img = np.dot(rep.fwd[a.id], col)
                if spans[a.dst].add(img[:, 0]):
                    queue.append((a.dst, img[:, 0]))
            if a.dst == v:
                img = np.dot(rep.rev[a.id], col)
                if spans[a.src].add(img[:, 0]):
                    queue.append((a.src, img[:, 0]))
    return {v: spans[v].matrix().T for v in rep.quiver.vertices}


def quiver_to_json(quiver: Quiver, dims: DimVector = None, zeta: ParamVector = None) -> dict:
    from .serialize import scalar_to_json

    out = {
        "vertices": list(quiver.vertices),
        "arrows": [[a.id, a.src, a.dst] for a in quiver.arrows],
    }
    if dims is not None:
        out["dims"] = {v: int(dims[v]) for v in quiver.vertices}
    if zeta is not None:
        out["zeta"] = {v: scalar_to_json(zeta[v]) for v in quiver.vertices}
    return out


def quiver_from_json(data: dict):
    from .serialize import scalar_from_json

    q = make_quiver(data["vertices"], [tuple(a) for a in data["arrows"]])
    dims = {k: int(v) for k, v in data.get("dims", {}).items()} or None
    zeta = None
    if "zeta" in data:
        zeta = {k: scalar_from_json(v) for k, v in data["zeta"].items()}
    return q, dims, zeta


def to_dot(quiver: Quiver, dims: DimVector = None, zeta: ParamVector = None, full: bool = False) -> str:
    """Graphviz DOT text; parallel arrows become parallel edges.

    Vertex labels carry the dimension; parameters only when full=True.
    """
    lines = ["digraph quiver {"]
    for v in quiver.vertices:
        label = str(v)
        if dims is not None:
            label += f"\\nv={dims[v]}"
        if full and zeta is not None:
            label += f"\\nzeta={zeta[v]}"
        lines.append(f'  "{v}" [label="{label}"];')
    for a in quiver.arrows:
        lines.append(f'  "{a.src}" -> "{a.dst}";')
    lines.append("}")
    return "\n".join(lines) + "\n"
