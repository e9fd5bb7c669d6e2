"""Root system of a loop-free quiver and the non-emptiness criterion.

The symmetrized adjacency a_ij counts arrows between i and j in either
direction; the bilinear form is (u, v) = sum_i 2 u_i v_i
- sum_{i != j} a_ij u_i v_j, the Tits form q(v) = (v, v)/2, and
delta(v) = 1 - q(v) on the same quiver.

Positive roots are recognized by the reflection algorithm: reflect at
any vertex with (v, e_i) > 0; landing on a simple root means a real
root, going negative means not a root, and a fixed vector is an
imaginary root exactly when its support is connected.

The decision procedure: the moduli space for (v, zeta) is non-empty
iff (1) v is a positive root, (2) zeta . v = 0, and (3) every
non-trivial decomposition of v into positive roots w_j with
zeta . w_j = 0 satisfies delta(v) > sum_j delta(w_j).  Condition (2)
and (3) are tested in exact arithmetic only.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .quiver import Quiver
from .scalars import GaussianRational, as_exact


class SearchCapExceeded(Exception):
    """Raised internally when the decomposition search exceeds its cap."""


@dataclass(frozen=True)
class CartanData:
    """Symmetrized adjacency and bilinear form of a loop-free quiver."""

    vertices: tuple
    adjacency: tuple  # row-major symmetric matrix of arrow counts

    @staticmethod
    def from_quiver(quiver: Quiver) -> "CartanData":
        if not quiver.loop_free:
            raise ValueError("root-system arithmetic requires a loop-free quiver")
        idx = {v: i for i, v in enumerate(quiver.vertices)}
        m = len(quiver.vertices)
        a = [[0] * m for _ in range(m)]
        for arrow in quiver.arrows:
            i, j = idx[arrow.src], idx[arrow.dst]
            a[i][j] += 1
            a[j][i] += 1
        return CartanData(tuple(quiver.vertices), tuple(tuple(row) for row in a))

    @property
    def size(self) -> int:
        return len(self.vertices)

    def pairing(self, u, v) -> int:
        total = 0
        for i in range(self.size):
            total += 2 * u[i] * v[i]
            for j in range(self.size):
                if i != j:
                    total -= self.adjacency[i][j] * u[i] * v[j]
        return total

    def pairing_with_simple(self, v, i: int) -> int:
        return 2 * v[i] - sum(self.adjacency[i][j] * v[j] for j in range(self.size) if j != i)

    def tits_form(self, v) -> int:
        p = self.pairing(v, v)
        assert p % 2 == 0
        return p // 2

    def delta(self, v) -> int:
        return 1 - self.tits_form(v)

    def vec(self, dims: dict):
        return tuple(int(dims[v]) for v in self.vertices)

    def support_connected(self, v) -> bool:
        supp = [i for i in range(self.size) if v[i] != 0]
        if not supp:
            return False
        seen = {supp[0]}
        stack = [supp[0]]
        while stack:
            i = stack.pop()
            for j in supp:
                if j not in seen and self.adjacency[i][j] > 0:
                    seen.add(j)
                    stack.append(j)
        return len(seen) == len(supp)


def is_positive_root(cartan: CartanData, v) -> bool:
    """Reflection test for membership among positive roots."""
    v = tuple(int(x) for x in v)
    if any(x < 0 for x in v) or all(x == 0 for x in v):
        return False
    while True:
        if sum(v) == 1:
            return True  # simple root
        moved = False
        for i in range(cartan.size):
            p = cartan.pairing_with_simple(v, i)
            if p > 0:
                w = list(v)
                w[i] -= p
                if w[i] < 0:
                    return False
                v = tuple(w)
                moved = True
                break
        if not moved:
            # fixed configuration: imaginary root iff support connected
            return cartan.support_connected(v)


def _exact_zeta(zeta, vertices):
    return {v: as_exact(zeta[v]) for v in vertices}


def _zeta_dot(zeta_vec, w) -> GaussianRational:
    total = GaussianRational(0)
    for z, c in zip(zeta_vec, w):
        if c:
            total = total + z * c
    return total


def summand_candidates(cartan: CartanData, v, zeta, cap: int = 2_000_000):
    """All positive roots w with 0 < w <= v componentwise and zeta.w = 0.

    The parameter test is exact; float parameters are rejected.  The
    result is sorted lexicographically.
    """
    v = tuple(int(x) for x in v)
    zeta_map = _exact_zeta(zeta, cartan.vertices)
    zeta_vec = tuple(zeta_map[u] for u in cartan.vertices)
    out = []
    count = 0
    for w in itertools.product(*(range(x + 1) for x in v)):
        count += 1
        if count > cap:
            raise SearchCapExceeded(f"candidate enumeration exceeded {cap} nodes")
        if all(x == 0 for x in w):
            continue
        if _zeta_dot(zeta_vec, w):
            continue
        if is_positive_root(cartan, w):
            out.append(w)
    out.sort()
    return out


@dataclass
class Verdict:
    """Outcome of the non-emptiness decision."""

    nonempty: bool | None  # None means undecided
    failed_condition: int | None = None
    witness: list | None = None  # violating decomposition for condition 3
    delta: int | None = None
    dim: int | None = None
    detail: str = ""
    nodes: int = 0

    @property
    def undecided(self) -> bool:
        return self.nonempty is None


def cb_solvable(cartan: CartanData, v, zeta, max_nodes: int = 200_000) -> Verdict:
    """Decide non-emptiness for (v, zeta) on a loop-free quiver.

    On failure the verdict names the violated condition; a condition-3
    failure carries a violating decomposition.  Exceeding the search
    cap yields an honest "undecided".
    """
    v = tuple(int(x) for x in v)
    dv = cartan.delta(v)
    if not is_positive_root(cartan, v):
        return Verdict(False, failed_condition=1, delta=dv, detail="v is not a positive root")
    zeta_map = _exact_zeta(zeta, cartan.vertices)
    zeta_vec = tuple(zeta_map[u] for u in cartan.vertices)
    if _zeta_dot(zeta_vec, v):
        return Verdict(False, failed_condition=2, delta=dv, detail="zeta . v != 0")

    try:
        cands = summand_candidates(cartan, v, zeta, cap=max_nodes)
    except SearchCapExceeded as e:
        return Verdict(None, delta=dv, detail=str(e))
    # non-increasing order canonicalizes multisets during the search
    cands = sorted(cands, reverse=True)
    deltas = [cartan.delta(w) for w in cands]
    nodes = 0

    def remaining_minus(rem, w):
        out = tuple(r - x for r, x in zip(rem, w))
        return out if all(x >= 0 for x in out) else None

    def dfs(start, rem, picked, picked_delta):
        nonlocal nodes
        nodes += 1
        if nodes > max_nodes:
            raise SearchCapExceeded(f"decomposition search exceeded {max_nodes} nodes")
        if all(x == 0 for x in rem):
            if len(picked) >= 2 and not (dv > picked_delta):
                return list(picked)
            return None
        for idx in range(start, len(cands)):
            nxt = remaining_minus(rem, cands[idx])
            if nxt is None:
                continue
            picked.append(cands[idx])
            hit = dfs(idx, nxt, picked, picked_delta + deltas[idx])
            picked.pop()
            if hit is not None:
                return hit
        return None

    try:
        witness = dfs(0, v, [], 0)
    except SearchCapExceeded as e:
        return Verdict(None, delta=dv, detail=str(e), nodes=nodes)
    if witness is not None:
        return Verdict(
            False,
            failed_condition=3,
            witness=[list(w) for w in witness],
            delta=dv,
            detail="a decomposition violates the strict dimension inequality",
            nodes=nodes,
        )
    return Verdict(True, delta=dv, dim=2 * dv, nodes=nodes)
