"""Global quiver synthesis, the decision procedure, and realization.

A problem instance fixes the rank n, one irregular type at infinity
(local coordinate w = 1/z), an orbit of exponents per block of that
type, and finitely many simple poles each carrying a residue orbit.

The synthesized quiver glues the core quiver of the irregular type
with one type-A leg per finite pole (attached to every core vertex)
and one leg per block of the type.  Writing l_{x,i} for the marking
scalars, the parameters are

    zeta_p     = -l_{p,1} - sum_t l_{t,1}      (core vertex p),
    zeta_{x,l} = l_{x,l} - l_{x,l+1}           (leg vertices),

and the dimension vector comes from the core multiplicities and the
leg rank sequences.  By telescoping, zeta . v equals minus the total
trace of the prescribed residue exponents, always.

The affine dictionary at infinity: a connection
(sum_i A_i z^i + sum_t R_t/(z - z_t)) dz has w-principal part with
slot j equal to -A_{j-1} (because z^i dz = -w^{-i-2} dw) and residue
-sum_t R_t; the core triangular coordinates see exactly the slots
1..k-1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .irregular import (
    IrregularType,
    OrbitMembershipError,
    core_quiver,
    orbit_to_qp,
    qp_to_orbit,
    qp_to_rep,
    rep_to_qp,
)
from .jets import ConnectionJet, PrincipalPart
from .orbits import (
    OrbitSpec,
    greedy_marking,
    leg_dimensions,
    orbit_membership,
    realize_leg,
)
from .quiver import DoubledRep, delta, is_stable, make_quiver, moment_map
from .roots import CartanData, Verdict, cb_solvable
from .scalars import GaussianRational


@dataclass(frozen=True)
class FinitePole:
    position: object  # scalar, exact or complex
    orbit: OrbitSpec


@dataclass(frozen=True)
class ProblemInstance:
    n: int
    irregular: IrregularType
    residue_blocks: tuple  # OrbitSpec per canonical block
    poles: tuple  # FinitePole, positions pairwise distinct

    def __post_init__(self):
        if self.irregular.n != self.n:
            raise ValueError("irregular type size differs from the declared rank")
        if len(self.residue_blocks) != self.irregular.block_count:
            raise ValueError("need one exponent orbit per block of the irregular type")
        for b, spec in enumerate(self.residue_blocks):
            if spec.n != self.irregular.blocks[b].mult:
                raise ValueError(
                    f"block {b} has multiplicity {self.irregular.blocks[b].mult}, "
                    f"exponent orbit has size {spec.n}"
                )
        for pole in self.poles:
            if pole.orbit.n != self.n:
                raise ValueError("residue orbits at finite poles live in rank n")
        keys = [_pos_key(p.position) for p in self.poles]
        if len(set(keys)) != len(keys):
            raise ValueError("finite pole positions must be pairwise distinct")

    @property
    def exact(self) -> bool:
        return self.irregular.exact

    def as_float(self) -> "ProblemInstance":
        if not self.exact:
            return self
        def conv(x):
            return x.to_complex() if isinstance(x, GaussianRational) else complex(x)

        blocks = tuple(
            OrbitSpec(
                s.n,
                tuple((conv(v), bl) for v, bl in s.eigenvalues),
                tuple(conv(m) for m in s.marking_override) if s.marking_override else None,
            )
            for s in self.residue_blocks
        )
        poles = tuple(
            FinitePole(
                conv(p.position),
                OrbitSpec(
                    p.orbit.n,
                    tuple((conv(v), bl) for v, bl in p.orbit.eigenvalues),
                    tuple(conv(m) for m in p.orbit.marking_override)
                    if p.orbit.marking_override
                    else None,
                ),
            )
            for p in self.poles
        )
        return ProblemInstance(self.n, self.irregular.to_float(), blocks, poles)


def _pos_key(x):
    from .scalars import scalar_key

    return scalar_key(x)


@dataclass
class GlobalQuiver:
    """Synthesized (quiver, dims, zeta) plus the bookkeeping to attach
    representation data back to matrices."""

    quiver: object
    dims: dict
    zeta: dict
    instance: ProblemInstance
    core_names: list
    markings: dict  # ("p", b) or ("t", j) -> marking tuple

    def zeta_vertex_matrix(self, vertex):
        exact = self.instance.exact
        d = self.dims[vertex]
        return self.zeta[vertex] * linalg.eye(d, exact)


def build_global_quiver(instance: ProblemInstance) -> GlobalQuiver:
    """Assemble (Q, v, zeta) from the instance.

    The identity zeta . v = -(trace of all residue exponents) holds by
    construction and is re-checked here in exact mode.
    """
    T = instance.irregular
    core, core_dims = core_quiver(T)
    vertices = list(core.vertices)
    arrows = [(a.id, a.src, a.dst) for a in core.arrows]
    dims = dict(core_dims)
    markings = {}
    zeta = {}

    leg_specs = []
    for b, spec in enumerate(instance.residue_blocks):
        marking = greedy_marking(spec)
        markings[("p", b)] = marking
        leg_specs.append((f"p{b}.", f"p{b}", marking, leg_dimensions(spec, marking), False))
    for j, pole in enumerate(instance.poles):
        marking = greedy_marking(pole.orbit)
        markings[("t", j)] = marking
        leg_specs.append((f"t{j}.", None, marking, leg_dimensions(pole.orbit, marking), True))

    for prefix, foot, marking, ldims, to_all in leg_specs:
        for l, d in enumerate(ldims, start=1):
            v = f"{prefix}{l}"
            vertices.append(v)
            dims[v] = d
            zeta[v] = marking[l - 1] - marking[l]
            if l >= 2:
                arrows.append((f"{prefix}{l}>{prefix}{l-1}", v, f"{prefix}{l-1}"))
        if ldims:
            if to_all:
                for b in range(T.block_count):
                    arrows.append((f"{prefix}1>p{b}", f"{prefix}1", f"p{b}"))
            else:
                arrows.append((f"{prefix}1>{foot}", f"{prefix}1", foot))

    finite_first = [markings[("t", j)][0] for j in range(len(instance.poles))]
    for b in range(T.block_count):
        z = -markings[("p", b)][0]
        for lam in finite_first:
            z = z - lam
        zeta[f"p{b}"] = z

    gq = GlobalQuiver(make_quiver(vertices, arrows), dims, zeta, instance,
                      list(core.vertices), markings)
    if instance.exact:
        total = zeta_dot_v(gq)
        want = -total_exponent_trace(instance)
        if total != want:
            raise AssertionError("internal: zeta . v failed the trace identity")
    return gq


def zeta_dot_v(gq: GlobalQuiver):
    acc = None
    for v in gq.quiver.vertices:
        t = gq.zeta[v] * gq.dims[v]
        acc = t if acc is None else acc + t
    return acc


def total_exponent_trace(instance: ProblemInstance):
    acc = None
    for spec in list(instance.residue_blocks) + [p.orbit for p in instance.poles]:
        t = spec.trace()
        acc = t if acc is None else acc + t
    return acc


@dataclass
class DSVerdict:
    verdict: Verdict
    gq: GlobalQuiver

    @property
    def nonempty(self):
        return self.verdict.nonempty

    def to_json(self) -> dict:
        from .quiver import quiver_to_json

        out = {
            "verdict": "undecided"
            if self.verdict.undecided
            else ("nonempty" if self.verdict.nonempty else "empty"),
            "quiver": quiver_to_json(self.gq.quiver, self.gq.dims, self.gq.zeta),
            "delta": self.verdict.delta,
            "detail": self.verdict.detail,
        }
        if self.verdict.nonempty:
            out["dim"] = self.verdict.dim
        if self.verdict.failed_condition is not None:
            out["failed_condition"] = self.verdict.failed_condition
        if self.verdict.witness is not None:
            order = list(self.gq.quiver.vertices)
            out["witness"] = [
                {v: w[i] for i, v in enumerate(order) if w[i]} for w in self.verdict.witness
            ]
        return out


def decide_ds(instance: ProblemInstance, max_nodes: int = 200_000) -> DSVerdict:
    """Build the quiver and apply the root-system criterion (exact only)."""
    if not instance.exact:
        raise TypeError(
            "the decision procedure needs exact scalars; rationalize the input "
            "or supply exact strings"
        )
    gq = build_global_quiver(instance)
    cartan = CartanData.from_quiver(gq.quiver)
    v = cartan.vec(gq.dims)
    verdict = cb_solvable(cartan, v, gq.zeta, max_nodes=max_nodes)
    return DSVerdict(verdict, gq)


@dataclass
class ConnectionData:
    """A = (sum_i poly[i] z^i + sum_t residues[t]/(z - positions[t])) dz."""

    n: int
    poly: tuple
    residues: tuple
    positions: tuple

    @property
    def exact(self) -> bool:
        return linalg.is_exact(self.residues[0]) if self.residues else (
            linalg.is_exact(self.poly[0]) if self.poly else False
        )

    def residue_at_infinity(self) -> np.ndarray:
        exact = self.exact
        out = linalg.zeros(self.n, self.n, exact)
        for r in self.residues:
            out = out - r
        return out

    def infinity_jet(self, k: int, depth: int) -> ConnectionJet:
        """Expansion at infinity in w = 1/z, trusted to the given depth."""
        exact = self.exact
        coeffs = []
        for s in range(depth + 1):
            c = linalg.zeros(self.n, self.n, exact)
            i = k - 2 - s
            if 0 <= i < len(self.poly):
                c = c - self.poly[i]
            m = s - (k - 1)  # power of the position in the tail expansion
            if m >= 0:
                for r, z in zip(self.residues, self.positions):
                    c = c - r * (z ** m)
            coeffs.append(c)
        return ConnectionJet(self.n, k, tuple(coeffs))


def _block_slices(T: IrregularType):
    return [T.block_slice(b) for b in range(T.block_count)]


def _core_rep_of(gq: GlobalQuiver, rep: DoubledRep) -> DoubledRep:
    T = gq.instance.irregular
    core, core_dims = core_quiver(T)
    fwd = {a.id: rep.fwd[a.id] for a in core.arrows}
    rev = {a.id: rep.rev[a.id] for a in core.arrows}
    return DoubledRep(core, core_dims, fwd, rev)


def moment_residual(gq: GlobalQuiver, rep: DoubledRep) -> float:
    mu = moment_map(rep)
    total = 0.0
    for v in gq.quiver.vertices:
        total += linalg.mat_norm(mu[v] - gq.zeta_vertex_matrix(v)) ** 2
    return total ** 0.5


def _leg_condition_failures(gq: GlobalQuiver, rep: DoubledRep, rtol: float) -> list:
    """Injectivity/surjectivity demanded of leg arrows.

    Ordinary leg arrows (chains and block feet) need injective forward
    maps and surjective reverse maps onto the source space; the foot
    family of a finite pole needs joint injectivity and joint
    surjectivity of the stacked maps.
    """
    fails = []
    finite_feet = {}
    for a in gq.quiver.arrows:
        if ":" in a.id:
            continue  # core arrows carry no rank conditions
        if a.id.startswith("t") and ">p" in a.id:
            finite_feet.setdefault(a.src, []).append(a)
            continue
        d_src = rep.dims[a.src]
        if linalg.rank(rep.fwd[a.id], rtol) != d_src:
            fails.append(f"{a.id}: forward map not injective")
        if linalg.rank(rep.rev[a.id], rtol) != d_src:
            fails.append(f"{a.id}: reverse map not surjective")
    for src, aa in finite_feet.items():
        d_src = rep.dims[src]
        stacked_fwd = np.concatenate([rep.fwd[a.id] for a in aa], axis=0)
        stacked_rev = np.concatenate([rep.rev[a.id] for a in aa], axis=1)
        if linalg.rank(stacked_fwd, rtol) != d_src:
            fails.append(f"{src}: joint kernel of the foot maps is non-zero")
        if linalg.rank(stacked_rev, rtol) != d_src:
            fails.append(f"{src}: foot reverse maps do not jointly surject")
    return fails


def assemble_residue(gq: GlobalQuiver, rep: DoubledRep, j: int) -> np.ndarray:
    """R_t from the foot arrows of pole j: block (p,q) is the product of
    the forward map into p with the reverse map out of q, plus the
    first marking scalar."""
    inst = gq.instance
    T = inst.irregular
    exact = rep.exact
    n = inst.n
    lam1 = gq.markings[("t", j)][0]
    out = lam1 * linalg.eye(n, exact)
    src = f"t{j}.1"
    if src not in rep.dims:  # length-one marking: scalar residue
        return out
    slices = _block_slices(T)
    for p in range(T.block_count):
        fwd = rep.fwd[f"{src}>p{p}"]
        for q in range(T.block_count):
            rev = rep.rev[f"{src}>p{q}"]
            out[slices[p], slices[q]] = out[slices[p], slices[q]] + np.dot(fwd, rev)
    return out


def core_bracket_blocks(gq: GlobalQuiver, rep: DoubledRep) -> dict:
    """Block-diagonal of the summed core commutators [Q_i, P_i]."""
    T = gq.instance.irregular
    core = _core_rep_of(gq, rep)
    mu = moment_map(core)
    return {b: mu[f"p{b}"] for b in range(T.block_count)}


def exponent_blocks(gq: GlobalQuiver, rep: DoubledRep) -> dict:
    """The block exponents forced by the moment equations:
    L_b = -(core bracket)_bb - sum_t (R_t)_bb."""
    inst = gq.instance
    T = inst.irregular
    brackets = core_bracket_blocks(gq, rep)
    residues = [assemble_residue(gq, rep, j) for j in range(len(inst.poles))]
    slices = _block_slices(T)
    out = {}
    for b in range(T.block_count):
        acc = -brackets[b]
        for r in residues:
            acc = acc - r[slices[b], slices[b]]
        out[b] = acc
    return out


def rep_to_connection(gq: GlobalQuiver, rep: DoubledRep, rtol: float = 1e-8) -> ConnectionData:
    """Convert a moment-map solution with valid leg data to a connection.

    The core coordinates give the polynomial part through the orbit
    reconstruction and the affine dictionary; residues come from the
    finite-pole foot arrows.  All orbit memberships are verified.
    """
    inst = gq.instance
    T = inst.irregular
    resid = moment_residual(gq, rep)
    scale = max(1.0, rep.norm() ** 2)
    if resid > rtol * scale:
        raise ValueError(f"moment residual {resid:.3e} above tolerance")
    fails = _leg_condition_failures(gq, rep, rtol)
    if fails:
        raise ValueError("leg conditions failed: " + "; ".join(fails))
    qp = rep_to_qp(T, _core_rep_of(gq, rep))
    B = qp_to_orbit(T, qp)
    poly = tuple(-B.coeffs[i + 1] for i in range(T.k - 1))
    residues = []
    for j, pole in enumerate(inst.poles):
        r = assemble_residue(gq, rep, j)
        if not orbit_membership(r, pole.orbit, rtol):
            raise ValueError(f"residue at pole {j} leaves its declared orbit")
        residues.append(r)
    for b, lb in exponent_blocks(gq, rep).items():
        if not orbit_membership(lb, inst.residue_blocks[b], rtol):
            raise ValueError(f"exponent at block {b} leaves its declared orbit")
    positions = tuple(p.position for p in inst.poles)
    return ConnectionData(inst.n, poly, tuple(residues), positions)


def connection_to_rep(gq: GlobalQuiver, conn: ConnectionData, rtol: float = 1e-8) -> DoubledRep:
    """Inverse of rep_to_connection up to the symmetry group.

    Membership failures carry the name of the offending pole.  The leg
    realizations are canonical for the greedy markings, so the round
    trip reproduces the connection exactly, not only up to conjugation.
    """
    inst = gq.instance
    T = inst.irregular
    exact = conn.exact
    n, k = inst.n, T.k
    slots = [linalg.zeros(n, n, exact)]
    for i in range(1, k):
        slots.append(-conn.poly[i - 1] if i - 1 < len(conn.poly) else linalg.zeros(n, n, exact))
    B = PrincipalPart(n, k, tuple(slots), "polar")
    try:
        qp = orbit_to_qp(T, B, rtol)
    except OrbitMembershipError as e:
        raise OrbitMembershipError(
            f"polynomial part not in the orbit at infinity: {e}", e.residual
        ) from None
    core_rep = qp_to_rep(T, qp)
    rep = DoubledRep.zero(gq.quiver, gq.dims, exact)
    for a in core_rep.quiver.arrows:
        rep.fwd[a.id] = core_rep.fwd[a.id]
        rep.rev[a.id] = core_rep.rev[a.id]
    slices = _block_slices(T)
    for j, pole in enumerate(inst.poles):
        r = conn.residues[j]
        if not orbit_membership(r, pole.orbit, rtol):
            raise ValueError(f"residue at pole {j} is not in its declared orbit")
        leg = realize_leg(r, gq.markings[("t", j)])
        _install_leg(rep, leg, f"t{j}.", foot_blocks=slices)
    for b, lb in exponent_blocks(gq, rep).items():
        if not orbit_membership(lb, inst.residue_blocks[b], rtol):
            raise ValueError(f"exponent at block {b} is not in its declared orbit")
        leg = realize_leg(lb, gq.markings[("p", b)])
        _install_leg(rep, leg, f"p{b}.", foot_vertex=f"p{b}")
    return rep


def _install_leg(rep: DoubledRep, leg, prefix: str, foot_blocks=None, foot_vertex=None):
    """Copy a leg realization into the global representation.

    The leg's own vertices "1", "2", ... become prefix1, prefix2, ...;
    the arrow into the ambient vertex "0" becomes the foot arrows,
    split over core blocks for finite poles.
    """
    lr = leg.rep
    for a in lr.quiver.arrows:
        src_l = int(a.src)
        if a.dst != "0":
            rep.fwd[f"{prefix}{src_l}>{prefix}{a.dst}"] = lr.fwd[a.id]
            rep.rev[f"{prefix}{src_l}>{prefix}{a.dst}"] = lr.rev[a.id]
            continue
        if foot_vertex is not None:
            rep.fwd[f"{prefix}1>{foot_vertex}"] = lr.fwd[a.id]
            rep.rev[f"{prefix}1>{foot_vertex}"] = lr.rev[a.id]
        else:
            for b, sl in enumerate(foot_blocks):
                rep.fwd[f"{prefix}1>p{b}"] = lr.fwd[a.id][sl, :]
                rep.rev[f"{prefix}1>p{b}"] = lr.rev[a.id][:, sl]


def matrix_algebra_is_dense(mats, n: int, rtol: float = linalg.RANK_RTOL) -> bool:
    """Span closure of the unital algebra generated by the matrices."""
    if n == 0:
        raise ValueError("empty space")
    from .quiver import algebra_span_dimension

    return algebra_span_dimension(list(mats), n, rtol) == n * n


def is_stable_connection(conn: ConnectionData, rtol: float = linalg.RANK_RTOL) -> bool:
    """No proper non-zero subspace preserved by every coefficient."""
    if conn.n == 1:
        return True
    gens = list(conn.poly) + list(conn.residues) + [conn.residue_at_infinity()]
    return matrix_algebra_is_dense(gens, conn.n, rtol)


# ---------------------------------------------------------------------------
# numeric realization


def _arrow_order(gq: GlobalQuiver):
    return [a for a in gq.quiver.arrows]


def _pack(gq: GlobalQuiver, rep: DoubledRep) -> np.ndarray:
    parts = []
    for a in _arrow_order(gq):
        parts.append(np.asarray(rep.fwd[a.id], dtype=complex).reshape(-1))
        parts.append(np.asarray(rep.rev[a.id], dtype=complex).reshape(-1))
    return np.concatenate(parts) if parts else np.zeros(0, dtype=complex)


def _unpack(gq: GlobalQuiver, x: np.ndarray) -> DoubledRep:
    rep = DoubledRep.zero(gq.quiver, gq.dims, exact=False)
    pos = 0
    for a in _arrow_order(gq):
        ds, dt = gq.dims[a.src], gq.dims[a.dst]
        rep.fwd[a.id] = x[pos : pos + ds * dt].reshape(dt, ds)
        pos += ds * dt
        rep.rev[a.id] = x[pos : pos + ds * dt].reshape(ds, dt)
        pos += ds * dt
    return rep


def _residual_vector(gq: GlobalQuiver, rep: DoubledRep) -> np.ndarray:
    mu = moment_map(rep)
    parts = []
    for v in gq.quiver.vertices:
        parts.append((mu[v] - gq.zeta_vertex_matrix(v)).reshape(-1))
    return np.concatenate(parts) if parts else np.zeros(0, dtype=complex)


def moment_jacobian(gq: GlobalQuiver, rep: DoubledRep) -> np.ndarray:
    """Complex Jacobian of the stacked moment values in the packed
    arrow coordinates (analytic: the moment map is bilinear)."""
    vlist = list(gq.quiver.vertices)
    row_off = {}
    pos = 0
    for v in vlist:
        row_off[v] = pos
        pos += gq.dims[v] ** 2
    rows = pos
    arrows = _arrow_order(gq)
    col_off = {}
    pos = 0
    for a in arrows:
        col_off[a.id] = pos
        pos += 2 * gq.dims[a.src] * gq.dims[a.dst]
    cols = pos
    jac = np.zeros((rows, cols), dtype=complex)
    for a in arrows:
        ds, dt = gq.dims[a.src], gq.dims[a.dst]
        f = np.asarray(rep.fwd[a.id], dtype=complex)
        r = np.asarray(rep.rev[a.id], dtype=complex)
        cf = col_off[a.id]
        cr = cf + ds * dt
        # vec_row(X @ M @ Y) = kron(X, Y.T) @ vec_row(M)
        ro = row_off[a.dst]
        jac[ro : ro + dt * dt, cf : cf + dt * ds] += np.kron(np.eye(dt), r.T)
        jac[ro : ro + dt * dt, cr : cr + ds * dt] += np.kron(f, np.eye(dt))
        ro = row_off[a.src]
        jac[ro : ro + ds * ds, cr : cr + ds * dt] -= np.kron(np.eye(ds), f.T)
        jac[ro : ro + ds * ds, cf : cf + dt * ds] -= np.kron(r, np.eye(ds))
    return jac


def _lm_minimize(gq: GlobalQuiver, x0: np.ndarray, max_iter: int = 500):
    """Damped Gauss-Newton on the moment residual."""
    x = x0.copy()
    rep = _unpack(gq, x)
    r = _residual_vector(gq, rep)
    cost = float(np.vdot(r, r).real)
    lam = 1e-3
    stall = 0
    for _ in range(max_iter):
        if cost < 1e-28:
            break
        jac = moment_jacobian(gq, rep)
        jr = np.concatenate(
            [
                np.concatenate([jac.real, -jac.imag], axis=1),
                np.concatenate([jac.imag, jac.real], axis=1),
            ],
            axis=0,
        )
        rr = np.concatenate([r.real, r.imag])
        g = jr.T @ rr
        h = jr.T @ jr
        accepted = False
        for _ in range(25):
            try:
                step = np.linalg.solve(h + lam * np.eye(h.shape[0]), -g)
            except np.linalg.LinAlgError:
                lam *= 4.0
                continue
            xr = np.concatenate([x.real, x.imag]) + step
            x_new = xr[: x.size] + 1j * xr[x.size :]
            rep_new = _unpack(gq, x_new)
            r_new = _residual_vector(gq, rep_new)
            cost_new = float(np.vdot(r_new, r_new).real)
            if cost_new < cost:
                rel_drop = (cost - cost_new) / max(cost, 1e-300)
                x, rep, r, cost = x_new, rep_new, r_new, cost_new
                lam = max(lam / 3.0, 1e-14)
                stall = stall + 1 if rel_drop < 1e-12 else 0
                accepted = True
                break
            lam *= 4.0
            if lam > 1e12:
                break
        if not accepted or stall >= 5 or lam > 1e12:
            break
    return x, cost


@dataclass
class RealizeResult:
    rep: DoubledRep | None
    residual: float
    attempts: int
    seed: int

    @property
    def success(self) -> bool:
        return self.rep is not None


def realize_numeric(
    gq: GlobalQuiver,
    attempts: int = 50,
    seed: int = 0,
    max_iter: int = 500,
    tol: float = 1e-8,
) -> RealizeResult:
    """Search for a stable moment-map solution by restarted damped
    Gauss-Newton from random starts.

    Success requires the residual below tol * ||Xi||^2 and stability;
    failure of all restarts is reported as such (it is evidence, not a
    proof of emptiness).  Deterministic for a fixed seed: restart r
    draws from a generator seeded with (seed, r).
    """
    if gq.instance.exact:
        gq = build_global_quiver(gq.instance.as_float())
    best = float("inf")
    size = sum(2 * gq.dims[a.src] * gq.dims[a.dst] for a in gq.quiver.arrows)
    for attempt in range(attempts):
        rng = np.random.default_rng((seed, attempt))
        x0 = rng.standard_normal(size) + 1j * rng.standard_normal(size)
        x, cost = _lm_minimize(gq, x0, max_iter=max_iter)
        rep = _unpack(gq, x)
        resid = cost ** 0.5
        best = min(best, resid)
        scale = rep.norm() ** 2
        if resid <= tol * scale and is_stable(rep):
            return RealizeResult(rep, resid, attempt + 1, seed)
    return RealizeResult(None, best, attempts, seed)


def kernel_dimension_check(gq: GlobalQuiver, rep: DoubledRep, rank_rtol: float = 1e-6):
    """dim ker(dmu) - (sum v_i^2 - 1) at the point, to compare with
    2 * delta(v); returns (lhs, rhs)."""
    jac = moment_jacobian(gq, rep)
    rk = linalg.rank(jac, rank_rtol)
    dof = jac.shape[1]
    group = sum(d * d for d in gq.dims.values())
    lhs = (dof - rk) - (group - 1)
    rhs = 2 * delta(gq.quiver, gq.dims)
    return lhs, rhs


def verify_instance(gq: GlobalQuiver, rep: DoubledRep, rtol: float = 1e-8) -> dict:
    """Pure report aggregating every invariant check on a representation."""
    inst = gq.instance
    T = inst.irregular
    checks = []

    def record(name, ok, detail=""):
        checks.append({"name": name, "ok": bool(ok), "detail": str(detail)})

    resid = moment_residual(gq, rep)
    scale = max(1.0, rep.norm() ** 2)
    record("moment_residual", resid <= rtol * scale, f"{resid:.3e}")

    fails = _leg_condition_failures(gq, rep, rtol)
    record("leg_conditions", not fails, "; ".join(fails))

    residues = []
    for j, pole in enumerate(inst.poles):
        r = assemble_residue(gq, rep, j)
        residues.append(r)
        record(f"residue_orbit_t{j}", orbit_membership(r, pole.orbit, rtol))
    lbs = exponent_blocks(gq, rep)
    for b, lb in lbs.items():
        record(f"exponent_orbit_p{b}", orbit_membership(lb, inst.residue_blocks[b], rtol))

    # residue theorem: minus the sum of finite residues is the residue
    # at infinity, whose trace must cancel the exponent traces
    tr = sum(np.trace(linalg.to_complex(r)) for r in residues)
    tr += sum(np.trace(linalg.to_complex(lb)) for lb in lbs.values())
    record("trace_identity", abs(tr) <= 1e-6 * scale, f"{abs(tr):.3e}")

    stable_rep = None
    try:
        stable_rep = is_stable(rep)
        record("stability_rep", True, f"stable={stable_rep}")
    except ValueError as e:
        record("stability_rep", False, e)

    conn = None
    try:
        conn = rep_to_connection(gq, rep, rtol)
        record("connection_conversion", True)
    except (ValueError, OrbitMembershipError) as e:
        record("connection_conversion", False, e)
    if conn is not None and stable_rep is not None:
        stable_conn = is_stable_connection(conn)
        record(
            "stability_transport",
            stable_conn == stable_rep,
            f"rep={stable_rep} connection={stable_conn}",
        )
        if not rep.exact and stable_rep:
            lhs, rhs = kernel_dimension_check(gq, rep)
            record("dimension_formula", lhs == rhs, f"lhs={lhs} rhs={rhs}")
    ok = all(c["ok"] for c in checks)
    return {"all_ok": ok, "checks": checks}


# ---------------------------------------------------------------------------
# JSON schemas


def instance_to_json(instance: ProblemInstance) -> dict:
    from .irregular import irregular_type_to_json
    from .orbits import orbit_spec_to_json
    from .serialize import scalar_to_json

    return {
        "schema_version": 1,
        "rank": instance.n,
        "infinity": {
            "irregular_type": irregular_type_to_json(instance.irregular),
            "residue_blocks": [orbit_spec_to_json(s) for s in instance.residue_blocks],
        },
        "finite_poles": [
            {"position": scalar_to_json(p.position), "orbit": orbit_spec_to_json(p.orbit)}
            for p in instance.poles
        ],
    }


def instance_from_json(data: dict, exact: bool) -> ProblemInstance:
    from .irregular import irregular_type_from_json
    from .orbits import orbit_spec_from_json
    from .serialize import scalar_from_json

    n = int(data["rank"])
    T = irregular_type_from_json(data["infinity"]["irregular_type"], exact)
    blocks_json = data["infinity"]["residue_blocks"]
    if len(blocks_json) != T.block_count:
        raise ValueError("need one residue_blocks entry per irregular block")
    # residue_blocks are written in the same order as the input blocks;
    # the type canonicalizes block order, so route through the recorded
    # permutation
    residue_blocks = tuple(
        orbit_spec_from_json(blocks_json[T.source_indices[b]], T.blocks[b].mult, exact)
        for b in range(T.block_count)
    )
    poles = tuple(
        FinitePole(
            scalar_from_json(p["position"], exact),
            orbit_spec_from_json(p["orbit"], n, exact),
        )
        for p in data.get("finite_poles", [])
    )
    return ProblemInstance(n, T, residue_blocks, poles)


def rep_to_json(gq: GlobalQuiver, rep: DoubledRep) -> dict:
    from .serialize import matrix_to_json

    return {
        "schema_version": 1,
        "dims": {v: int(d) for v, d in rep.dims.items()},
        "maps": {
            a.id: {"fwd": matrix_to_json(rep.fwd[a.id]), "rev": matrix_to_json(rep.rev[a.id])}
            for a in gq.quiver.arrows
        },
    }


def rep_from_json(gq: GlobalQuiver, data: dict, exact: bool = False) -> DoubledRep:
    from .serialize import matrix_from_json

    for v, d in data.get("dims", {}).items():
        if gq.dims.get(v) != int(d):
            raise ValueError(f"dimension mismatch at vertex {v}")
    rep = DoubledRep.zero(gq.quiver, gq.dims, exact)
    for a in gq.quiver.arrows:
        entry = data["maps"][a.id]
        ds, dt = gq.dims[a.src], gq.dims[a.dst]
        rep.fwd[a.id] = matrix_from_json(entry["fwd"], dt, ds, exact)
        rep.rev[a.id] = matrix_from_json(entry["rev"], ds, dt, exact)
    return rep


def connection_to_json(conn: ConnectionData) -> dict:
    from .serialize import matrix_to_json, scalar_to_json

    return {
        "schema_version": 1,
        "rank": conn.n,
        "poly": [matrix_to_json(a) for a in conn.poly],
        "residues": [matrix_to_json(r) for r in conn.residues],
        "positions": [scalar_to_json(z) for z in conn.positions],
    }


def connection_from_json(data: dict, exact: bool = False) -> ConnectionData:
    from .serialize import matrix_from_json, scalar_from_json

    n = int(data["rank"])
    poly = tuple(matrix_from_json(a, n, n, exact) for a in data["poly"])
    residues = tuple(matrix_from_json(r, n, n, exact) for r in data["residues"])
    positions = tuple(scalar_from_json(z, exact) for z in data["positions"])
    return ConnectionData(n, poly, residues, positions)
