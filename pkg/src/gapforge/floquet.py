"""Torus transform on finitely supported cover functions (abelian groups) and
band assembly for all supported groups.

The transform evaluates, for each domain vertex x and torus point theta,

    (Uu)(theta)(x) = sum_gamma u(gamma, x) exp(i theta . gamma),

summing over the copies of the patch.  Under the uniform N^d torus grid with
weight 1/N^d this is unitary on functions supported in a word ball of radius
< N/2 (the quadrature is exact for the trigonometric polynomials that occur),
intertwines deck translations with the grid characters, and turns the cover
energy into the weighted sum of the per-fiber quadratic forms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .domain import CoverPatch, DiscretizedDomain, translate
from .errors import PreconditionError, UnsupportedGroupError
from .groups import GroupElement
from .repspace import DualGrid
from .spectral import assemble, eigen_solve, equivariant, interlace_check

PARSEVAL_TOL = 1e-10
INTERTWINE_TOL = 1e-12
ENERGY_TOL = 1e-9


@dataclass(eq=False)
class CoverFunction:
    """Finitely supported function on a cover patch, keyed by vertex index."""

    patch: CoverPatch
    values: dict[int, complex]

    def support_radius(self) -> int:
        radius = 0
        for idx in self.values:
            copy, _ = self.patch.vertex_keys[idx]
            radius = max(radius, self.patch.copy_norm[copy])
        return radius

    def norm_squared(self) -> float:
        return float(sum(self.patch.weights[i] * abs(v) ** 2 for i, v in self.values.items()))

    def translated(self, gamma: GroupElement) -> "CoverFunction":
        """(T_gamma u)(p) = u(T_gamma^-1 p); fails if the support escapes the patch."""
        out: dict[int, complex] = {}
        for idx, val in self.values.items():
            img = translate(idx, gamma, self.patch)
            if img is None:
                raise PreconditionError("translated support leaves the patch")
            out[img] = val
        return CoverFunction(self.patch, out)


@dataclass(eq=False)
class FiberFunction:
    """A vector per domain vertex, attached to one dual point."""

    theta: tuple[float, ...]
    values: np.ndarray   # shape (vertex_count,) for the abelian transform


def random_cover_function(patch: CoverPatch, support_radius: int,
                          rng: np.random.Generator) -> CoverFunction:
    """Complex gaussian values on every cover vertex within the given copy radius."""
    if support_radius > patch.radius:
        raise PreconditionError("support radius exceeds the patch radius")
    values: dict[int, complex] = {}
    for idx, (copy, _) in enumerate(patch.vertex_keys):
        if patch.copy_norm[copy] <= support_radius:
            values[idx] = complex(rng.standard_normal(), rng.standard_normal())
    return CoverFunction(patch, values)


def _support_arrays(u: CoverFunction):
    """Flatten the support into (domain vertex, lattice vector, value) triples,
    one per (copy, vertex) decomposition of each cover vertex."""
    vids, lats, vals = [], [], []
    for idx, val in u.values.items():
        for copy, vid in u.patch.aliases[idx]:
            vids.append(vid)
            lats.append(copy.lattice)
            vals.append(val)
    d = u.patch.spec.abelian_rank
    return (np.asarray(vids, dtype=int),
            np.asarray(lats, dtype=float).reshape(len(lats), d),
            np.asarray(vals, dtype=complex))


def transform_all(u: CoverFunction, thetas) -> np.ndarray:
    """Transform values at several torus points at once, shape (len(thetas), nv).

    Every (copy, domain vertex) decomposition of a cover vertex contributes,
    so a seam vertex enters both as the right port of its copy and as the
    left port of the neighbouring copy, with the respective phases.
    """
    spec = u.patch.spec
    if spec.finite_order != 1:
        raise UnsupportedGroupError("the torus transform is implemented for abelian groups only")
    TH = np.asarray(thetas, dtype=float).reshape(-1, spec.abelian_rank)
    out = np.zeros((u.patch.domain.vertex_count, TH.shape[0]), dtype=complex)
    if u.values:
        vids, lats, vals = _support_arrays(u)
        np.add.at(out, vids, vals[:, None] * np.exp(1j * lats @ TH.T))
    return out.T


def floquet_transform(u: CoverFunction, theta, patch: CoverPatch | None = None) -> FiberFunction:
    """Evaluate the transform at one torus point (abelian groups only)."""
    values = transform_all(u, [tuple(np.atleast_1d(np.asarray(theta, dtype=float)))])[0]
    th = tuple(float(x) for x in np.atleast_1d(np.asarray(theta, dtype=float)))
    return FiberFunction(th, values)


def parseval_check(u: CoverFunction, grid: DualGrid) -> float:
    """|  ||u||^2  -  sum_theta w_theta ||(Uu)(theta)||_D^2  |."""
    _require_quadrature_window(u, grid)
    lhs = u.norm_squared()
    H = transform_all(u, [f.theta for f in grid.fibers])
    weights = np.array([f.weight for f in grid.fibers])
    rhs = float(weights @ (np.abs(H) ** 2 @ u.patch.domain.weights))
    return abs(lhs - rhs)


def intertwine_check(u: CoverFunction, gamma: GroupElement, theta,
                     patch: CoverPatch | None = None) -> float:
    """|| U(T_gamma u)(theta) - exp(i theta . gamma) (Uu)(theta) ||.

    Both supports must avoid seam vertices whose identification partner was
    truncated away, else the patch transform differs from the cover one.
    """
    patch = patch or u.patch
    shifted = u.translated(gamma)
    for fn in (u, shifted):
        if any(not patch.fully_identified(idx) for idx in fn.values):
            raise PreconditionError(
                "support touches a truncated seam vertex; enlarge the patch radius")
    lhs = floquet_transform(shifted, theta, patch).values
    rhs = floquet_transform(u, theta, patch).values
    th = np.asarray(theta, dtype=float)
    phase = np.exp(1j * float(th @ np.asarray(gamma.lattice)))
    return float(np.linalg.norm(lhs - phase * rhs))


@dataclass(eq=False)
class FiberForms:
    """Assembled scalar fiber forms of a (domain, grid) pair, for reuse across
    many energy-identity evaluations."""

    weights: np.ndarray            # quadrature weight per fiber
    matrices: list[np.ndarray]
    quotient_vertices: np.ndarray  # domain vertex of each quotient row, in row order


def fiber_quadratic_forms(domain: DiscretizedDomain, grid: DualGrid) -> FiberForms:
    ops = [assemble(domain, equivariant(fiber)) for fiber in grid.fibers]
    rows = np.zeros(ops[0].size, dtype=int)
    for (vertex, comp), row in ops[0].index_map.items():
        role = domain.roles[vertex]
        if comp == 0 and not (role is not None and role.side == "right"):
            rows[row] = vertex
    return FiberForms(
        weights=np.array([f.weight for f in grid.fibers]),
        matrices=[op.matrix for op in ops],
        quotient_vertices=rows,
    )


def energy_identity_check(u: CoverFunction, grid: DualGrid, domain: DiscretizedDomain,
                          forms: FiberForms | None = None) -> tuple[float, float]:
    """(residual, q_X(u)) for  q_X(u) = sum_theta w_theta q_eq_theta((Uu)(theta)).

    q_X is the exact weighted edge sum over the patch; the right-hand side
    evaluates the assembled fiber forms on the transform restricted to the
    quotient unknowns.  Requires the support to sit strictly inside the patch
    so no truncation edge is touched.
    """
    patch = u.patch
    if u.support_radius() > patch.radius - 1:
        raise PreconditionError(
            "support must stay at copy radius <= patch radius - 1 so that every "
            "incident cover edge lies inside the patch")
    _require_quadrature_window(u, grid)
    vals = u.values
    q_cover = 0.0
    for a, b, w in patch.edges:
        diff = vals.get(a, 0.0) - vals.get(b, 0.0)
        q_cover += w * (diff.real ** 2 + diff.imag ** 2)
    if forms is None:
        forms = fiber_quadratic_forms(domain, grid)
    H = transform_all(u, [f.theta for f in grid.fibers])
    rhs = 0.0
    for i, weight in enumerate(forms.weights):
        hq = H[i][forms.quotient_vertices]
        rhs += weight * float(np.real(np.conj(hq) @ (forms.matrices[i] @ hq)))
    return abs(q_cover - rhs), q_cover


def _require_quadrature_window(u: CoverFunction, grid: DualGrid) -> None:
    limit = grid.points_per_dim / 2.0
    if u.support_radius() >= limit:
        raise PreconditionError(
            f"support radius {u.support_radius()} is not < N/2 = {limit}; "
            "the torus quadrature is no longer exact")


# ---------------------------------------------------------------------------
# bands


@dataclass(eq=False)
class FiberBands:
    z_id: int
    theta: tuple[float, ...]
    dim: int
    eigenvalues: np.ndarray
    reliable: bool


@dataclass(eq=False)
class BandCollection:
    """Per-fiber spectra cut into consecutive blocks of size dim.

    Block k of a dimension-n fiber holds eigenvalues (k-1)n+1 .. kn; the
    aggregate over all fibers of equal dimension is the union of their
    blocks.  Fibers failing the interlacing check are kept but flagged and
    excluded from aggregates.
    """

    k_max: int
    fibers: list[FiberBands] = field(default_factory=list)

    def band(self, z_id: int, k: int) -> np.ndarray:
        fb = next(f for f in self.fibers if f.z_id == z_id)
        if not 1 <= k <= self.k_max:
            raise PreconditionError(f"band index {k} outside 1..{self.k_max}")
        return fb.eigenvalues[(k - 1) * fb.dim: k * fb.dim]

    def aggregate(self, dim: int, k: int) -> np.ndarray:
        """Union of block k over all reliable fibers of the given dimension."""
        chunks = [f.eigenvalues[(k - 1) * dim: k * dim]
                  for f in self.fibers if f.dim == dim and f.reliable]
        return np.sort(np.concatenate(chunks)) if chunks else np.zeros(0)

    def dims_present(self) -> list[int]:
        return sorted({f.dim for f in self.fibers})


def build_bands(domain: DiscretizedDomain, grid: DualGrid, k_max: int) -> BandCollection:
    """Eigensolve every fiber and cut the spectra into dimension-sized blocks.

    Interlacing is verified per fiber; a failing fiber is flagged unreliable
    rather than silently aggregated.
    """
    out = BandCollection(k_max=k_max)
    for fiber in grid.fibers:
        report = interlace_check(domain, fiber)
        out.fibers.append(FiberBands(
            z_id=fiber.z_id,
            theta=fiber.theta,
            dim=fiber.dim,
            eigenvalues=report.equivariant,
            reliable=report.ok,
        ))
    return out


def bands_csv_rows(collection: BandCollection) -> list[str]:
    """Rows z_id, theta components, dim, k, m, lambda — one per eigenvalue."""
    from .spectral import format_float
    d = len(collection.fibers[0].theta) if collection.fibers else 0
    theta_cols = ",".join(f"theta_{i}" for i in range(d))
    header = "z_id," + (theta_cols + "," if d else "") + "dim,k,m,lambda"
    rows = [header]
    for fb in collection.fibers:
        limit = min(collection.k_max * fb.dim, len(fb.eigenvalues))
        for m in range(1, limit + 1):
            k = (m - 1) // fb.dim + 1
            theta_txt = ",".join(format_float(x) for x in fb.theta)
            prefix = f"{fb.z_id}," + (theta_txt + "," if d else "")
            rows.append(prefix + f"{fb.dim},{k},{m},{format_float(fb.eigenvalues[m - 1])}")
    return rows
