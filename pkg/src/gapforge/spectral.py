"""Assembly and full diagonalization of Dirichlet, Neumann and fiber-twisted
quadratic forms on a discretized domain.

Conventions fixed once and used everywhere:

* The quadratic form is the weighted edge sum  sum_e w_e |h(u) - M_e h(v)|^2
  against the vertex-mass inner product.
* Dirichlet pins all port vertices to zero (operator on interior vertices);
  Neumann leaves every vertex free.  Both may be replicated n-fold for
  comparison against dimension-n fibers.
* The fiber-twisted ("equivariant") operator lives on the quotient: each
  left/right port pair is one unknown n-vector.  An edge endpoint sitting on
  a right port of generator i contributes through the transport
  R_i(z)^* h(class), i.e. an edge written from the seam vertex into its
  interior neighbour carries M_e = R_i(z); all other edges carry M_e = I.
  With the transform kernel exp(i theta . gamma) this is the unique
  orientation for which the per-fiber energy identity holds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import DiscretizedDomain
from .errors import ConvergenceError, PreconditionError, StructuralError
from .repspace import RepFiber

HERMITICITY_TOL = 1e-13
PSD_TOL = 1e-10
DEFAULT_EIG_TOL = 1e-9
INTERLACE_TOL = 1e-9


@dataclass(frozen=True)
class BoundaryCondition:
    """Which form to assemble: "dirichlet" / "neumann" (optionally n-fold
    replicated) or "equivariant" for a representation fiber."""

    kind: str
    fiber: RepFiber | None = None
    copies: int = 1

    def __post_init__(self):
        if self.kind not in ("dirichlet", "neumann", "equivariant"):
            raise StructuralError(f"unknown boundary condition {self.kind!r}")
        if self.kind == "equivariant" and self.fiber is None:
            raise StructuralError("equivariant condition requires a fiber")

    def describe(self) -> str:
        if self.kind == "equivariant":
            return f"equivariant[z={self.fiber.z_id},dim={self.fiber.dim}]"
        return self.kind if self.copies == 1 else f"{self.kind}x{self.copies}"


def dirichlet(copies: int = 1) -> BoundaryCondition:
    return BoundaryCondition("dirichlet", copies=copies)


def neumann(copies: int = 1) -> BoundaryCondition:
    return BoundaryCondition("neumann", copies=copies)


def equivariant(fiber: RepFiber) -> BoundaryCondition:
    return BoundaryCondition("equivariant", fiber=fiber)


@dataclass(eq=False)
class AssembledOperator:
    """Hermitian form matrix with its vertex-mass inner product."""

    matrix: np.ndarray
    weights: np.ndarray           # positive diagonal of the inner product
    index_map: dict[tuple[int, int], int]   # (vertex, fiber component) -> row
    condition: BoundaryCondition

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


@dataclass(eq=False)
class Spectrum:
    eigenvalues: np.ndarray
    condition: BoundaryCondition
    residual: float


def _scalar_form(domain: DiscretizedDomain) -> np.ndarray:
    n = domain.vertex_count
    A = np.zeros((n, n))
    for u, v, w in domain.edges:
        A[u, u] += w
        A[v, v] += w
        A[u, v] -= w
        A[v, u] -= w
    return A


def assemble(domain: DiscretizedDomain, bc: BoundaryCondition) -> AssembledOperator:
    """Build the Hermitian matrix and weight diagonal for a boundary condition."""
    if bc.kind == "equivariant":
        return _assemble_equivariant(domain, bc)
    A = _scalar_form(domain)
    if bc.kind == "dirichlet":
        keep = domain.interior_indices()
        A = A[np.ix_(keep, keep)]
        masses = domain.weights[keep]
        vertex_ids = keep
    else:
        masses = domain.weights
        vertex_ids = list(range(domain.vertex_count))
    n = bc.copies
    if n > 1:
        A = np.kron(A, np.eye(n))
        masses = np.repeat(masses, n)
    index_map = {(v, c): i * n + c for i, v in enumerate(vertex_ids) for c in range(n)}
    op = AssembledOperator(A.astype(complex), np.asarray(masses, dtype=float), index_map, bc)
    _check_assembled(op)
    return op


def _assemble_equivariant(domain: DiscretizedDomain, bc: BoundaryCondition) -> AssembledOperator:
    fiber = bc.fiber
    n = fiber.dim
    r = domain.generator_count
    for i in range(r):
        if i not in fiber.matrices:
            raise StructuralError(f"fiber has no matrix for generator {i}")
        if fiber.matrices[i].shape != (n, n):
            raise StructuralError("fiber matrix shape does not match its dimension")
    pairs = domain.port_pairs()
    cls: dict[int, int] = {}
    class_members: list[list[int]] = []
    right_gen: dict[int, int] = {}
    for i, role in enumerate(domain.roles):
        if role is not None and role.side == "right":
            right_gen[i] = role.generator
            continue
        cls[i] = len(class_members)
        class_members.append([i])
    for (g, slot), (left, right) in pairs.items():
        cls[right] = cls[left]
        class_members[cls[left]].append(right)

    Q = len(class_members)
    A = np.zeros((Q * n, Q * n), dtype=complex)
    eye = np.eye(n)

    def transport(v: int) -> np.ndarray:
        # value at a right port is R^* times the class value
        if v in right_gen:
            return fiber.matrices[right_gen[v]].conj().T
        return eye

    for u, v, w in domain.edges:
        cu, cv = cls[u], cls[v]
        Pu, Pv = transport(u), transport(v)
        su, sv = slice(cu * n, cu * n + n), slice(cv * n, cv * n + n)
        A[su, su] += w * eye
        A[sv, sv] += w * eye
        coupling = w * (Pu.conj().T @ Pv)
        A[su, sv] -= coupling
        A[sv, su] -= coupling.conj().T
    masses = np.zeros(Q)
    for ci, members in enumerate(class_members):
        masses[ci] = sum(float(domain.weights[m]) for m in members)
    index_map = {}
    for vertex, ci in cls.items():
        for c in range(n):
            index_map[(vertex, c)] = ci * n + c
    op = AssembledOperator(A, np.repeat(masses, n), index_map, bc)
    _check_assembled(op)
    return op


def _check_assembled(op: AssembledOperator) -> None:
    A = op.matrix
    scale = max(1.0, float(np.abs(A).max()))
    if np.abs(A - A.conj().T).max() > HERMITICITY_TOL * scale:
        raise StructuralError("assembled matrix is not Hermitian")


def eigen_solve(op: AssembledOperator, tol: float = DEFAULT_EIG_TOL) -> Spectrum:
    """All eigenvalues of the weight-normalized operator, ascending.

    The generalized problem A v = lambda W v is symmetrized with W^(-1/2);
    residuals ||A v - lambda W v|| are checked against tol * ||A||.
    """
    if op.size == 0:
        return Spectrum(np.zeros(0), op.condition, 0.0)
    inv_sqrt = 1.0 / np.sqrt(op.weights)
    sym = op.matrix * inv_sqrt[:, None] * inv_sqrt[None, :]
    vals, vecs = np.linalg.eigh(sym)
    norm_est = max(float(np.abs(vals).max()) * float(op.weights.max()), 1e-300)
    V = vecs * inv_sqrt[:, None]
    resid_mat = op.matrix @ V - (op.weights[:, None] * V) * vals[None, :]
    residual = float(np.linalg.norm(resid_mat, axis=0).max()) / norm_est
    if residual > tol:
        raise ConvergenceError(
            f"eigensolve residual {residual:.3e} exceeds tol {tol:.1e}", residual)
    small = vals.min(initial=0.0)
    if small < -PSD_TOL * norm_est:
        raise StructuralError(f"assembled operator is not positive semidefinite ({small:.3e})")
    return Spectrum(vals, op.condition, residual)


def rayleigh(op: AssembledOperator, u: np.ndarray) -> float:
    """Form value over squared weighted norm, q(u) / ||u||_W^2."""
    u = np.asarray(u, dtype=complex).reshape(-1)
    if u.shape[0] != op.size:
        raise PreconditionError(f"vector length {u.shape[0]} != operator size {op.size}")
    denom = float(np.real(np.conj(u) @ (op.weights * u)))
    if denom == 0.0:
        raise PreconditionError("rayleigh quotient of the zero vector")
    return float(np.real(np.conj(u) @ (op.matrix @ u))) / denom


@dataclass
class InterlaceReport:
    """Result of the Neumann <= equivariant <= Dirichlet comparison."""

    ok: bool
    fiber_dim: int
    neumann_nfold: np.ndarray
    dirichlet_nfold: np.ndarray
    equivariant: np.ndarray
    max_lower_violation: float   # max over m of lambda_m^N - lambda_m^eq
    max_upper_violation: float   # max over m of lambda_m^eq - lambda_m^D


def interlace_check(domain: DiscretizedDomain, fiber: RepFiber,
                    tol: float = INTERLACE_TOL) -> InterlaceReport:
    """Verify the two-sided bracketing of the fiber spectrum.

    The n-fold Dirichlet/Neumann spectra are the scalar spectra with every
    value repeated n times; indices beyond the Dirichlet matrix size are
    unconstrained above.
    """
    n = fiber.dim
    lam_n = eigen_solve(assemble(domain, neumann())).eigenvalues
    lam_d = eigen_solve(assemble(domain, dirichlet())).eigenvalues
    lam_e = eigen_solve(assemble(domain, equivariant(fiber))).eigenvalues
    nfold_n = np.repeat(lam_n, n)
    nfold_d = np.repeat(lam_d, n)
    m = len(lam_e)
    lower = float(np.max(nfold_n[:m] - lam_e, initial=-np.inf))
    upper_count = min(m, len(nfold_d))
    upper = float(np.max(lam_e[:upper_count] - nfold_d[:upper_count], initial=-np.inf))
    margin = tol * max(1.0, float(np.abs(lam_e).max(initial=0.0)))
    ok = lower <= margin and upper <= margin
    return InterlaceReport(ok, n, nfold_n, nfold_d, lam_e, lower, upper)


def spectrum_csv_rows(spectra: list[tuple[int, str, np.ndarray]]) -> list[str]:
    """Rows (z_id, condition, m, eigenvalue); m is 1-based, floats shortest
    round-trip.  Scalar Dirichlet/Neumann rows use z_id = -1."""
    rows = ["z_id,condition,m,eigenvalue"]
    for z_id, condition, values in spectra:
        for m, value in enumerate(values, start=1):
            rows.append(f"{z_id},{condition},{m},{format_float(value)}")
    return rows


def format_float(x: float) -> str:
    """Shortest representation that round-trips the double exactly."""
    return repr(float(x))
