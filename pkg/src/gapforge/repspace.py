"""Dual sampling: unitary irreducible representation fibers over a torus grid.

For a group Z^d x| F the grid points theta = 2*pi*k/N are partitioned into
F-orbits (theta -> act(f)^T theta mod 2*pi); each orbit representative theta*
together with an irreducible representation sigma of its stabilizer induces a
finite-dimensional irreducible fiber of dimension |orbit| * dim(sigma).
Translations act diagonally through the orbit characters, finite elements
permute the orbit blocks.

Quadrature weights are w(z) = |orbit| * dim(sigma)^2 / (N^d * |stabilizer|),
which sum to one; together with the Hilbert-Schmidt scale 1/dim(z) they give
an exact discrete Plancherel identity for functions supported well inside the
grid period.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError, StructuralError, UnsupportedGroupError
from .groups import GroupElement, GroupSpec, compose, identity, inverse, word_ball

STABILIZER_TOL = 1e-9
NEAR_STRATUM_TOL = 1e-6
UNITARITY_TOL = 1e-12
RELATION_TOL = 1e-10
COMMUTANT_SV_TOL = 1e-8

TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# irreducible representations of the catalogue finite groups


def _element_order(table, f):
    order, g = 1, f
    while g != 0:
        g = table[g][f]
        order += 1
    return order


def _dlog(table, gen, target):
    """Smallest k with gen^k == target, or None."""
    k, g = 0, 0
    while True:
        if g == target:
            return k
        g = table[g][gen]
        k += 1
        if k > len(table):
            return None


def irreps_finite(table) -> list[tuple[int, dict[int, np.ndarray]]]:
    """Complete list of inequivalent unitary irreducibles of a finite-part table.

    Works for the catalogue families (trivial, cyclic, dihedral including S3);
    each irrep is returned as (dim, {element index: unitary matrix}).  The list
    is validated on construction: homomorphism on all pairs, unitarity,
    irreducibility and completeness (sum of squared dims equals the order).
    """
    table = tuple(tuple(row) for row in table)
    if table in _IRREP_CACHE:
        return _IRREP_CACHE[table]
    n = len(table)
    out = _recognize_and_build(table, n)
    _validate_irreps(table, out)
    _IRREP_CACHE[table] = out
    return out


_IRREP_CACHE: dict = {}


def _recognize_and_build(table, n):
    if n == 1:
        return [(1, {0: np.eye(1, dtype=complex)})]
    # cyclic: some element has full order
    for g in range(1, n):
        if _element_order(table, g) == n:
            logs = {_pow(table, g, k): k for k in range(n)}
            omega = np.exp(2j * np.pi / n)
            return [
                (1, {e: np.array([[omega ** (j * logs[e])]]) for e in range(n)})
                for j in range(n)
            ]
    # dihedral of order 2m: cyclic subgroup of index 2 plus inverting involution
    if n % 2 == 0:
        m = n // 2
        for r in range(1, n):
            if _element_order(table, r) != m:
                continue
            cyc = {_pow(table, r, k) for k in range(m)}
            if len(cyc) != m:
                continue
            for s in range(1, n):
                if s in cyc or table[s][s] != 0:
                    continue
                s_inv_r_s = table[table[s][r]][s]
                if s_inv_r_s != _pow(table, r, m - 1):
                    continue
                return _dihedral_irreps(table, n, m, r, s)
    raise UnsupportedGroupError(
        f"no irreducible representation tables available for a finite part of order {n}; "
        "supported finite parts: trivial, cyclic, dihedral (including S3)")


def _pow(table, g, k):
    out = 0
    for _ in range(k):
        out = table[out][g]
    return out


def _dihedral_irreps(table, n, m, r, s):
    """Irreps of a dihedral group recognized as <r, s | r^m, s^2, (sr)^2>."""
    rot_log = {_pow(table, r, k): k for k in range(m)}
    kind = {}
    for e in range(n):
        if e in rot_log:
            kind[e] = (0, rot_log[e])
        else:
            kind[e] = (1, rot_log[table[_inv(table, s)][e]])
    omega = np.exp(2j * np.pi / m)
    out = []

    def one_dim(chi_r, chi_s):
        mats = {}
        for e, (ref, j) in kind.items():
            val = (chi_r ** j) * (chi_s if ref else 1.0)
            mats[e] = np.array([[complex(val)]])
        return (1, mats)

    out.append(one_dim(1.0, 1.0))
    out.append(one_dim(1.0, -1.0))
    if m % 2 == 0:
        out.append(one_dim(-1.0, 1.0))
        out.append(one_dim(-1.0, -1.0))
    two_dim_count = (m - 1) // 2 if m % 2 else m // 2 - 1
    for h in range(1, two_dim_count + 1):
        mats = {}
        for e, (ref, j) in kind.items():
            a = omega ** (h * j)
            diag = np.array([[a, 0.0], [0.0, np.conj(a)]])
            mats[e] = np.array([[0, 1], [1, 0]], dtype=complex) @ diag if ref else diag
        out.append((2, mats))
    return out


def _inv(table, f):
    return table[f].index(0)


def _validate_irreps(table, irreps):
    n = len(table)
    if sum(d * d for d, _ in irreps) != n:
        raise StructuralError("irrep dimensions do not satisfy sum(dim^2) == |F|")
    for d, mats in irreps:
        for e in range(n):
            M = mats[e]
            if np.abs(M.conj().T @ M - np.eye(d)).max() > UNITARITY_TOL:
                raise StructuralError(f"irrep matrix at element {e} is not unitary")
        for a in range(n):
            for b in range(n):
                if np.abs(mats[a] @ mats[b] - mats[table[a][b]]).max() > 1e-10:
                    raise StructuralError(f"irrep fails homomorphism at ({a},{b})")
        char_norm = sum(abs(np.trace(mats[e])) ** 2 for e in range(n))
        if abs(char_norm - n) > 1e-8:
            raise StructuralError("irrep is not irreducible (character norm)")
    for i in range(len(irreps)):
        for j in range(i + 1, len(irreps)):
            di, mi = irreps[i]
            dj, mj = irreps[j]
            if di != dj:
                continue
            inner = sum(np.trace(mi[e]) * np.conj(np.trace(mj[e])) for e in range(n))
            if abs(inner) > 1e-8:
                raise StructuralError("two irreps are equivalent")


# ---------------------------------------------------------------------------
# torus orbits and stabilizers


def _wrap(x):
    """Reduce to the torus fundamental interval, distance to the nearest 2*pi multiple."""
    return np.abs(x - TWO_PI * np.round(np.asarray(x) / TWO_PI))


def little_group(theta, spec: GroupSpec):
    """Orbit of a torus point under f -> act(f)^T theta and its stabilizer.

    Returns (orbit, stabilizer): orbit as a list of torus points (radians,
    wrapped into [0, 2*pi)), stabilizer as the sorted list of finite indices
    fixing theta within STABILIZER_TOL.
    """
    th = np.asarray(theta, dtype=float)
    if th.shape != (spec.abelian_rank,):
        raise StructuralError(f"theta must have length {spec.abelian_rank}")
    orbit = []
    stab = []
    for f in range(spec.finite_order):
        img = (spec.action[f].T @ th) % TWO_PI
        if _wrap(img - th).max(initial=0.0) <= STABILIZER_TOL:
            stab.append(f)
        if not any(_wrap(img - np.asarray(o)).max(initial=0.0) <= STABILIZER_TOL for o in orbit):
            orbit.append(tuple(float(x) for x in img))
    return orbit, stab


def stabilizer_irreps(theta, spec: GroupSpec):
    """Irreps of the stabilizer subgroup at theta, keyed by absolute finite indices.

    Returns a list of (label, {finite index: matrix}) in deterministic order.
    """
    _, stab = little_group(theta, spec)
    sub = {f: i for i, f in enumerate(stab)}
    subtable = tuple(tuple(sub[spec.finite_table[a][b]] for b in stab) for a in stab)
    out = []
    for idx, (dim, mats) in enumerate(irreps_finite(subtable)):
        out.append((f"sigma{idx}(dim{dim})", {stab[i]: mats[i] for i in range(len(stab))}))
    return out


# ---------------------------------------------------------------------------
# induced fibers


@dataclass(eq=False)
class RepFiber:
    """One dual point: an irreducible unitary fiber with quadrature weight.

    `matrices` maps each generator index of the group to its representing
    unitary; `theta`, `stabilizer`, `sigma` and `cosets` keep the induction
    data so the representation can be evaluated at arbitrary elements.
    """

    z_id: int
    theta: tuple[float, ...]
    stabilizer_irrep: str
    dim: int
    matrices: dict[int, np.ndarray]
    weight: float
    stabilizer: tuple[int, ...] = ()
    sigma: dict[int, np.ndarray] = field(default_factory=dict)
    cosets: tuple[int, ...] = (0,)
    warning: bool = False


def induce(theta, sigma: dict[int, np.ndarray], spec: GroupSpec,
           z_id: int = 0, weight: float = 0.0) -> RepFiber:
    """Induce a fiber at `theta` from an irrep `sigma` of the stabilizer.

    sigma maps absolute finite indices of the stabilizer to unitary matrices.
    The fiber dimension is [F : F_theta] * dim(sigma).  Points within
    NEAR_STRATUM_TOL of a higher-symmetry stratum (but not snapped onto it by
    STABILIZER_TOL) get a warning flag.
    """
    th = tuple(float(x) % TWO_PI for x in np.atleast_1d(np.asarray(theta, dtype=float))) \
        if spec.abelian_rank else ()
    orbit, stab = little_group(th, spec)
    if sorted(sigma) != stab:
        raise StructuralError(
            f"sigma is keyed by {sorted(sigma)} but the stabilizer at theta is {stab}")
    stabset = set(stab)
    cosets = []
    covered = set()
    for f in range(spec.finite_order):
        if f not in covered:
            cosets.append(f)
            covered.update(spec.finite_table[f][h] for h in stab)
    ds = next(iter(sigma.values())).shape[0]
    dim = len(cosets) * ds
    near = False
    thv = np.asarray(th, dtype=float)
    for f in range(spec.finite_order):
        if f in stabset:
            continue
        disp = _wrap(spec.action[f].T @ thv - thv).max(initial=0.0)
        if STABILIZER_TOL < disp < NEAR_STRATUM_TOL:
            near = True
    fiber = RepFiber(
        z_id=z_id,
        theta=th,
        stabilizer_irrep="",
        dim=dim,
        matrices={},
        weight=weight,
        stabilizer=tuple(stab),
        sigma={f: np.asarray(m, dtype=complex) for f, m in sigma.items()},
        cosets=tuple(cosets),
        warning=near,
    )
    fiber.stabilizer_irrep = f"dim{ds}@stab{len(stab)}"
    fiber.matrices = {i: fiber_matrix(fiber, g, spec) for i, g in enumerate(spec.generators)}
    return fiber


def fiber_matrix(fiber: RepFiber, g: GroupElement, spec: GroupSpec) -> np.ndarray:
    """The fiber's unitary at an arbitrary group element.

    Block (j, j') is nonzero iff f_j^-1 (g.finite f_j') lies in the stabilizer;
    there it equals exp(i theta_j . a) sigma(h) with theta_j the orbit point
    act(f_j^-1)^T theta*.
    """
    table = spec.finite_table
    stab = set(fiber.stabilizer)
    cosets = fiber.cosets
    ds = next(iter(fiber.sigma.values())).shape[0]
    dim = fiber.dim
    th = np.asarray(fiber.theta, dtype=float)
    a = np.asarray(g.lattice, dtype=int)
    M = np.zeros((dim, dim), dtype=complex)
    for jp, fjp in enumerate(cosets):
        ff = table[g.finite][fjp]
        for j, fj in enumerate(cosets):
            h = table[_inv(table, fj)][ff]
            if h in stab:
                lat = spec.action[_inv(table, fj)] @ a
                phase = np.exp(1j * float(th @ lat)) if spec.abelian_rank else 1.0
                M[j * ds:(j + 1) * ds, jp * ds:(jp + 1) * ds] = phase * fiber.sigma[h]
                break
    return M


def character_fiber(theta, gamma: GroupElement, spec: GroupSpec) -> complex:
    """Abelian fiber value exp(i theta . gamma)."""
    if spec.finite_order != 1:
        raise UnsupportedGroupError("character_fiber is defined for abelian groups only")
    th = np.asarray(theta, dtype=float)
    return complex(np.exp(1j * float(th @ np.asarray(gamma.lattice, dtype=int))))


def trivial_fiber(spec: GroupSpec) -> RepFiber:
    """The one-dimensional trivial fiber (theta = 0, trivial stabilizer irrep)."""
    sigma = {f: np.eye(1, dtype=complex) for f in range(spec.finite_order)}
    return induce((0.0,) * spec.abelian_rank, sigma, spec)


# ---------------------------------------------------------------------------
# dual grids


@dataclass(eq=False)
class DualGrid:
    points_per_dim: int
    fibers: list[RepFiber]
    group: GroupSpec

    @property
    def total_weight(self) -> float:
        return float(sum(f.weight for f in self.fibers))


def sample_dual(spec: GroupSpec, points_per_dim: int, validate: bool = True) -> DualGrid:
    """Quadrature sampling of the dual: one fiber per (grid orbit, stabilizer irrep).

    Grid orbits are computed in exact integer arithmetic on (Z/N)^d, so the
    stabilizer assignment has no floating-point ambiguity.  Weights are the
    Plancherel masses |orbit| * dim(sigma)^2 / (N^d * |stabilizer|), summing
    to one.
    """
    N = int(points_per_dim)
    if N < 1:
        raise StructuralError(f"points_per_dim must be >= 1, got {N}")
    d = spec.abelian_rank
    table = spec.finite_table
    nF = spec.finite_order
    seen: set = set()
    orbit_reps = []
    for k in np.ndindex(*([N] * d)):
        if k in seen:
            continue
        orb = set()
        for f in range(nF):
            orb.add(tuple(int(x) % N for x in spec.action[f].T @ np.asarray(k, dtype=int)))
        rep = min(orb)
        stab = [f for f in range(nF)
                if tuple(int(x) % N for x in spec.action[f].T @ np.asarray(rep, dtype=int)) == rep]
        orbit_reps.append((rep, len(orb), stab))
        seen.update(orb)
    orbit_reps.sort(key=lambda t: t[0])
    fibers = []
    for rep, orb_size, stab in orbit_reps:
        theta = tuple(TWO_PI * x / N for x in rep)
        for label, sigma in stabilizer_irreps(theta, spec):
            ds = next(iter(sigma.values())).shape[0]
            weight = orb_size * ds * ds / (N ** d * len(stab))
            fiber = induce(theta, sigma, spec, z_id=len(fibers), weight=weight)
            fiber.stabilizer_irrep = label
            fibers.append(fiber)
    grid = DualGrid(points_per_dim=N, fibers=fibers, group=spec)
    if abs(grid.total_weight - 1.0) > 1e-12:
        raise StructuralError(f"quadrature weights sum to {grid.total_weight}, expected 1")
    if validate:
        for fiber in fibers:
            report = validate_fiber(fiber, spec)
            if not report.ok:
                raise StructuralError(
                    f"fiber z_id={fiber.z_id} failed validation: {report.violations}")
    return grid


# ---------------------------------------------------------------------------
# fiber validation


@dataclass
class FiberValidation:
    ok: bool
    violations: list[str]
    commutant_dim: int
    unitarity_residual: float
    relation_residual: float


def validate_fiber(fiber: RepFiber, spec: GroupSpec,
                   unitarity_tol: float = UNITARITY_TOL,
                   relation_tol: float = RELATION_TOL,
                   commutant_tol: float = COMMUTANT_SV_TOL) -> FiberValidation:
    """Check unitarity, relation closure and commutant-dimension-1 irreducibility."""
    violations = []
    uni = 0.0
    for i, M in fiber.matrices.items():
        uni = max(uni, float(np.abs(M.conj().T @ M - np.eye(fiber.dim)).max()))
    if uni > unitarity_tol:
        violations.append(f"unitarity residual {uni:.2e}")
    rel = 0.0
    for word in spec.relations:
        P = np.eye(fiber.dim, dtype=complex)
        for gen_idx, sign in word:
            M = fiber.matrices[gen_idx]
            P = P @ (M if sign > 0 else M.conj().T)
        rel = max(rel, float(np.abs(P - np.eye(fiber.dim)).max()))
    if rel > relation_tol:
        violations.append(f"relation residual {rel:.2e}")
    cdim = commutant_dimension(fiber, spec, commutant_tol)
    if cdim != 1:
        violations.append(f"commutant dimension {cdim} (reducible fiber)")
    return FiberValidation(not violations, violations, cdim, uni, rel)


def commutant_dimension(fiber: RepFiber, spec: GroupSpec,
                        sv_tol: float = COMMUTANT_SV_TOL) -> int:
    """Dimension of {X : X pi(g) = pi(g) X} over a generating family of the group.

    The family includes lattice basis translations and all finite-part
    elements, not just the gluing generators (those may generate a proper
    subgroup on which the fiber is reducible even when the full fiber is not).
    """
    mats = list(fiber.matrices.values())
    for i in range(spec.abelian_rank):
        basis = tuple(1 if k == i else 0 for k in range(spec.abelian_rank))
        mats.append(fiber_matrix(fiber, GroupElement(basis, 0), spec))
    for f in range(spec.finite_order):
        mats.append(fiber_matrix(fiber, GroupElement((0,) * spec.abelian_rank, f), spec))
    n = fiber.dim
    eye = np.eye(n)
    blocks = [np.kron(M, eye) - np.kron(eye, M.T) for M in mats]
    sv = np.linalg.svd(np.vstack(blocks), compute_uv=False)
    return int(np.sum(sv < sv_tol))


# ---------------------------------------------------------------------------
# Plancherel check


def plancherel_check(a: dict[GroupElement, complex], grid: DualGrid) -> float:
    """|sum |a|^2 - sum_z w_z ||ahat(z)||_HS^2 / dim(z)| for finitely supported a.

    Precondition: the support lies in a word ball of radius < N/2 so the torus
    quadrature is exact for every phase difference that occurs.
    """
    spec = grid.group
    N = grid.points_per_dim
    if spec.abelian_rank > 0:
        max_radius = (N - 1) // 2
        ball = set(word_ball(spec, max_radius))
        outside = [g for g in a if g not in ball]
        if outside:
            raise PreconditionError(
                f"support not inside the word ball of radius {max_radius} (< N/2)")
    lhs = sum(abs(v) ** 2 for v in a.values())
    rhs = 0.0
    for fiber in grid.fibers:
        ahat = np.zeros((fiber.dim, fiber.dim), dtype=complex)
        for g, v in a.items():
            ahat += v * fiber_matrix(fiber, g, spec)
        rhs += fiber.weight * float(np.sum(np.abs(ahat) ** 2)) / fiber.dim
    return abs(lhs - rhs)


# ---------------------------------------------------------------------------
# export


def fibers_to_json_dict(grid: DualGrid) -> dict:
    """JSON-ready document: z_id, theta (15 significant digits), dim, weight,
    matrices as row-major [re, im] pairs keyed by generator index."""
    fibers = []
    for f in grid.fibers:
        mats = {}
        for gen_idx in sorted(f.matrices):
            M = f.matrices[gen_idx]
            mats[str(gen_idx)] = [[[float(f"{z.real:.17g}"), float(f"{z.imag:.17g}")]
                                   for z in row] for row in M]
        fibers.append({
            "z_id": f.z_id,
            "theta": [float(f"{x:.15g}") for x in f.theta],
            "dim": f.dim,
            "weight": float(f"{f.weight:.17g}"),
            "stabilizer_irrep": f.stabilizer_irrep,
            "matrices": mats,
        })
    return {
        "points_per_dim": grid.points_per_dim,
        "group": grid.group.name,
        "fibers": fibers,
    }
