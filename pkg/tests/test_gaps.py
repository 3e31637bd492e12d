import numpy as np
import pytest

from gapforge import (DomainParams, PreconditionError, assemble, bracket, build_domain,
                      builtin_group, detect_gaps, dirichlet, eigen_solve, equivariant,
                      neumann, nonempty_band_witness, sample_dual, sweep_epsilon,
                      union_inclusion_check)
from gapforge.domain import DiscretizedDomain, PortRole
from gapforge.gaps import BracketIntervals

# gap counts for the reference sweep, frozen from the direct eigensolve oracle
# in test_sweep_matches_bruteforce_oracle
REFERENCE_SWEEP_COUNTS = {1.0: 1, 0.5: 3, 0.1: 4, 0.01: 4}


def two_path_domain():
    """One interior vertex attached to one port (junction parameter 1)."""
    roles = [None, PortRole(0, "left", 0)]
    return DiscretizedDomain(np.array([1.0, 0.5]), roles, [(0, 1, 1.0)], 1.0, 1, 1)


def test_bracket_two_path():
    d = two_path_domain()
    intervals = bracket(d, 1)
    # oracle: Neumann pencil of [[1,-1],[-1,1]] with masses (1, 1/2) -> {0, 3};
    # Dirichlet interior is the 1x1 matrix [1] with unit mass -> {1}
    assert np.allclose(intervals.neumann, [0.0, 3.0], atol=1e-12)
    assert np.allclose(intervals.dirichlet, [1.0], atol=1e-12)
    assert intervals.interval(1) == pytest.approx((0.0, 1.0))


def test_bracket_left_endpoint_zero(reference_domain):
    intervals = bracket(reference_domain, 6)
    assert intervals.lower(1) == pytest.approx(0.0, abs=1e-12)


def test_bracket_reference_six_intervals(reference_domain):
    intervals = bracket(reference_domain, 6)
    assert len(intervals.intervals()) == 6
    for k in range(1, 7):
        lo, hi = intervals.interval(k)
        assert lo <= hi + 1e-12
    # endpoints ascend within each family
    assert np.all(np.diff(intervals.neumann) >= -1e-12)
    assert np.all(np.diff(intervals.dirichlet) >= -1e-12)


def test_bracket_k_max_bound(reference_domain):
    with pytest.raises(PreconditionError):
        bracket(reference_domain, 10_000)


def synthetic(neumann_vals, dirichlet_vals):
    return BracketIntervals(k_max=len(dirichlet_vals),
                            neumann=np.asarray(neumann_vals, dtype=float),
                            dirichlet=np.asarray(dirichlet_vals, dtype=float))


def test_detect_gaps_simple():
    report = detect_gaps(synthetic([0, 2], [1, 3]))
    assert report.count == 1
    gap = report.gaps[0]
    assert (gap.after_k, gap.lower, gap.upper) == (1, 1.0, 2.0)


def test_detect_gaps_overlap():
    assert detect_gaps(synthetic([0, 1.4], [1.5, 3])).count == 0


def test_detect_gaps_touching_intervals():
    assert detect_gaps(synthetic([0, 1.0], [1.0, 2])).count == 0


def test_union_inclusion_reference(reference_domain, z2, z2_grid):
    intervals = bracket(reference_domain, 6)
    report = union_inclusion_check(reference_domain, z2_grid, intervals)
    assert report.ok
    assert report.max_violation <= 1e-8
    # eigenvalues with block index beyond k_max are skipped
    quotient_size = len(reference_domain.interior_indices()) + 2
    assert report.checked == 6 * len(z2_grid.fibers)


def test_union_inclusion_trivial_fiber_witnesses(reference_domain, z2):
    intervals = bracket(reference_domain, 6)
    for k in range(1, 7):
        w = nonempty_band_witness(reference_domain, z2, k)
        lo, hi = intervals.interval(k)
        assert lo - 1e-9 <= w <= hi + 1e-9


def test_witness_first_is_zero(reference_domain, z2):
    assert nonempty_band_witness(reference_domain, z2, 1) == pytest.approx(0.0, abs=1e-12)


def test_witness_dominates_neumann(reference_domain, z2):
    intervals = bracket(reference_domain, 6)
    for k in range(1, 7):
        assert nonempty_band_witness(reference_domain, z2, k) >= intervals.lower(k) - 1e-9


def test_sweep_matches_bruteforce_oracle(z2):
    eps_grid = [1.0, 0.5, 0.1, 0.01]
    params = DomainParams(chamber_size=8, port_width=1, neck_length=2)
    result = sweep_epsilon(params, z2, eps_grid, gap_target=2, k_max=6)
    # brute-force oracle: independent bracket + gap count per epsilon
    for step in result.steps:
        d = build_domain(8, 2, 1, step.epsilon, 2)
        lam_n = eigen_solve(assemble(d, neumann())).eigenvalues
        lam_d = eigen_solve(assemble(d, dirichlet())).eigenvalues
        count = sum(1 for k in range(5) if lam_d[k] < lam_n[k + 1] - 1e-10)
        assert step.report.count == count
        assert step.report.count == REFERENCE_SWEEP_COUNTS[step.epsilon]
    assert result.threshold_epsilon == 0.5
    assert result.achieved == 4


def test_sweep_counts_non_decreasing_on_reference(z2):
    counts = [REFERENCE_SWEEP_COUNTS[e] for e in [1.0, 0.5, 0.1, 0.01]]
    assert counts == sorted(counts)


def test_sweep_requires_decreasing_grid(z2):
    params = DomainParams(chamber_size=8)
    with pytest.raises(PreconditionError):
        sweep_epsilon(params, z2, [0.1, 0.5], 1, 6)


def test_gap_soundness_against_bands(reference_domain):
    # no sampled fiber eigenvalue may fall inside a certified gap
    intervals = bracket(reference_domain, 6)
    report = detect_gaps(intervals)
    assert report.count >= 1
    for name in ("Z2", "Z2xZ2-semidirect", "inf-dihedral"):
        spec = builtin_group(name)
        grid = sample_dual(spec, 8)
        for fiber in grid.fibers:
            lam = eigen_solve(assemble(reference_domain, equivariant(fiber))).eigenvalues
            for gap in report.gaps:
                inside = (lam > gap.lower + 1e-8) & (lam < gap.upper - 1e-8)
                assert not inside.any(), (name, fiber.z_id, gap)


def test_decoupling_limit():
    # at epsilon -> 0 both spectra approach the port-deleted decoupled operator
    eps = 1e-6
    d = build_domain(8, 2, 1, eps, 2)
    ports = set(d.port_indices())
    keep = d.interior_indices()
    remap = {v: i for i, v in enumerate(keep)}
    decoupled_edges = [(remap[u], remap[v], w) for u, v, w in d.edges
                       if u not in ports and v not in ports]
    decoupled = DiscretizedDomain(d.weights[keep], [None] * len(keep), decoupled_edges,
                                  1.0, d.generator_count, d.port_width)
    nu = eigen_solve(assemble(decoupled, neumann())).eigenvalues
    lam_d = eigen_solve(assemble(d, dirichlet())).eigenvalues
    lam_n = eigen_solve(assemble(d, neumann())).eigenvalues
    # Dirichlet matches index-wise; Neumann on the low spectrum (junction modes sit high)
    for k in range(1, 13):
        scale = max(abs(nu[k]), 1e-3)
        assert abs(lam_d[k] - nu[k]) <= 1e-4 * scale
        assert abs(lam_n[k] - nu[k]) <= 1e-4 * scale
