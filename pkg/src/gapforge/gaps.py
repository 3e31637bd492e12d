"""Bracketing intervals, gap certification and junction-parameter sweeps.

Interval k is [lambda_k^N, lambda_k^D] from the scalar Neumann/Dirichlet
spectra of the fundamental domain.  A gap is certified between consecutive
intervals exactly when sup I_k < inf I_{k+1} past a guard band, so eigensolver
noise can never manufacture one.  The certificate depends only on the domain;
sampled fiber spectra are cross-checked against it but cannot extend it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .domain import DiscretizedDomain, build_domain
from .errors import PreconditionError
from .groups import GroupSpec
from .repspace import DualGrid, trivial_fiber
from .spectral import (assemble, dirichlet, eigen_solve, equivariant, format_float,
                       neumann)

GAP_GUARD = 1e-10
UNION_TOL = 1e-8


@dataclass(eq=False)
class BracketIntervals:
    """[lambda_k^N, lambda_k^D] for k = 1..k_max, plus the full scalar spectra."""

    k_max: int
    neumann: np.ndarray
    dirichlet: np.ndarray

    def lower(self, k: int) -> float:
        return float(self.neumann[k - 1])

    def upper(self, k: int) -> float:
        return float(self.dirichlet[k - 1])

    def interval(self, k: int) -> tuple[float, float]:
        if not 1 <= k <= self.k_max:
            raise PreconditionError(f"interval index {k} outside 1..{self.k_max}")
        return (self.lower(k), self.upper(k))

    def intervals(self) -> list[tuple[float, float]]:
        return [self.interval(k) for k in range(1, self.k_max + 1)]


def bracket(domain: DiscretizedDomain, k_max: int) -> BracketIntervals:
    """Compute the first k_max bracketing intervals of a domain."""
    lam_d = eigen_solve(assemble(domain, dirichlet())).eigenvalues
    if k_max < 1 or k_max > len(lam_d):
        raise PreconditionError(
            f"k_max {k_max} outside 1..{len(lam_d)} (Dirichlet matrix size)")
    lam_n = eigen_solve(assemble(domain, neumann())).eigenvalues
    for k in range(k_max):
        if lam_n[k] > lam_d[k] + GAP_GUARD * max(1.0, abs(lam_d[k])):
            raise PreconditionError(
                f"bracket violation at k={k + 1}: Neumann {lam_n[k]} > Dirichlet {lam_d[k]}")
    return BracketIntervals(k_max=k_max, neumann=lam_n, dirichlet=lam_d)


@dataclass
class Gap:
    after_k: int
    lower: float   # sup I_k
    upper: float   # inf I_{k+1}

    @property
    def length(self) -> float:
        return self.upper - self.lower


@dataclass
class GapReport:
    k_max: int
    gaps: list[Gap]
    witnesses: list[float] = field(default_factory=list)   # quotient eigenvalue per k
    union_max_violation: float | None = None

    @property
    def count(self) -> int:
        return len(self.gaps)


def detect_gaps(intervals: BracketIntervals) -> GapReport:
    """Certify a gap after k iff sup I_k < inf I_{k+1} beyond the guard band."""
    gaps = []
    for k in range(1, intervals.k_max):
        hi = intervals.upper(k)
        lo = intervals.lower(k + 1)
        guard = GAP_GUARD * max(1.0, abs(hi), abs(lo))
        if hi < lo - guard:
            gaps.append(Gap(after_k=k, lower=hi, upper=lo))
    return GapReport(k_max=intervals.k_max, gaps=gaps)


def nonempty_band_witness(domain: DiscretizedDomain, spec: GroupSpec, k: int) -> float:
    """k-th eigenvalue of the quotient operator (trivial fiber); lies in I_k."""
    op = assemble(domain, equivariant(trivial_fiber(spec)))
    lam = eigen_solve(op).eigenvalues
    if k < 1 or k > len(lam):
        raise PreconditionError(f"witness index {k} outside 1..{len(lam)}")
    return float(lam[k - 1])


@dataclass
class UnionInclusionReport:
    ok: bool
    max_violation: float
    worst_fiber: int | None
    checked: int


def union_inclusion_check(domain: DiscretizedDomain, grid: DualGrid,
                          intervals: BracketIntervals,
                          tol: float = UNION_TOL) -> UnionInclusionReport:
    """Every fiber eigenvalue with block index k <= k_max lies within
    tol * (1 + lambda) of I_k."""
    worst = 0.0
    worst_fiber = None
    checked = 0
    for fiber in grid.fibers:
        lam = eigen_solve(assemble(domain, equivariant(fiber))).eigenvalues
        n = fiber.dim
        for m, value in enumerate(lam, start=1):
            k = (m - 1) // n + 1
            if k > intervals.k_max:
                break
            lo, hi = intervals.interval(k)
            dist = max(lo - value, value - hi, 0.0)
            checked += 1
            rel = dist / (1.0 + abs(value))
            if rel > worst:
                worst = rel
                worst_fiber = fiber.z_id
    return UnionInclusionReport(worst <= tol, worst, worst_fiber, checked)


# ---------------------------------------------------------------------------
# junction sweeps


@dataclass(frozen=True)
class DomainParams:
    chamber_size: int
    port_width: int = 1
    neck_length: int = 2


@dataclass
class SweepStep:
    epsilon: float
    intervals: BracketIntervals
    report: GapReport


@dataclass
class SweepResult:
    epsilon_grid: list[float]
    steps: list[SweepStep]
    gap_target: int
    threshold_index: int | None   # first grid index reaching the target

    @property
    def achieved(self) -> int:
        return max((s.report.count for s in self.steps), default=0)

    @property
    def threshold_epsilon(self) -> float | None:
        if self.threshold_index is None:
            return None
        return self.epsilon_grid[self.threshold_index]


def sweep_epsilon(params: DomainParams, spec: GroupSpec, epsilon_grid,
                  gap_target: int, k_max: int) -> SweepResult:
    """Re-bracket the domain along a strictly decreasing junction grid.

    Reports the first epsilon index whose certified gap count reaches the
    target; the per-step interval data is kept for export.
    """
    eps = [float(e) for e in epsilon_grid]
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise PreconditionError("epsilon grid must be strictly decreasing")
    steps = []
    threshold = None
    for i, e in enumerate(eps):
        domain = build_domain(params.chamber_size, spec.generator_count,
                              params.port_width, e, params.neck_length)
        intervals = bracket(domain, k_max)
        report = detect_gaps(intervals)
        report.witnesses = [nonempty_band_witness(domain, spec, k)
                            for k in range(1, k_max + 1)]
        steps.append(SweepStep(epsilon=e, intervals=intervals, report=report))
        if threshold is None and report.count >= gap_target:
            threshold = i
    return SweepResult(epsilon_grid=eps, steps=steps, gap_target=gap_target,
                       threshold_index=threshold)


# ---------------------------------------------------------------------------
# serialization


def gap_report_to_json_dict(report: GapReport, epsilon: float) -> dict:
    return {
        "epsilon": epsilon,
        "k_max": report.k_max,
        "gap_count": report.count,
        "note": ("certificate relative to the bracketing intervals of the domain; "
                 "fiber sampling is a cross-check on a finite dual grid"),
        "gaps": [
            {"after_k": g.after_k, "lower": format_float(g.lower),
             "upper": format_float(g.upper)}
            for g in report.gaps
        ],
        "witnesses": [format_float(w) for w in report.witnesses],
        "union_max_violation": (None if report.union_max_violation is None
                                else format_float(report.union_max_violation)),
    }


def sweep_to_json_dict(result: SweepResult) -> dict:
    return {
        "epsilon_grid": [format_float(e) for e in result.epsilon_grid],
        "gap_target": result.gap_target,
        "achieved": result.achieved,
        "threshold_epsilon": (None if result.threshold_epsilon is None
                              else format_float(result.threshold_epsilon)),
        "note": ("empirical junction threshold on this instance, "
                 "not a proven bound"),
        "per_epsilon": [
            {"epsilon": format_float(s.epsilon), "gap_count": s.report.count}
            for s in result.steps
        ],
    }


def sweep_csv_rows(result: SweepResult) -> list[str]:
    """Rows epsilon, k, I_k_left, I_k_right, gap_after_k in {0,1}."""
    rows = ["epsilon,k,I_k_left,I_k_right,gap_after_k"]
    for step in result.steps:
        gap_after = {g.after_k for g in step.report.gaps}
        for k in range(1, step.intervals.k_max + 1):
            lo, hi = step.intervals.interval(k)
            flag = 1 if k in gap_after else 0
            rows.append(f"{format_float(step.epsilon)},{k},"
                        f"{format_float(lo)},{format_float(hi)},{flag}")
    return rows


def gaps_json_text(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
