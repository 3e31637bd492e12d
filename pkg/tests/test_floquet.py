import numpy as np
import pytest

from gapforge import (CoverFunction, GroupElement, PreconditionError,
                      UnsupportedGroupError, build_bands, build_cover_patch,
                      build_domain, builtin_group, dirichlet, eigen_solve,
                      energy_identity_check, assemble, floquet_transform, identity,
                      intertwine_check, neumann, parseval_check, random_cover_function,
                      sample_dual)
from gapforge.floquet import fiber_quadratic_forms, transform_all


@pytest.fixture(scope="module")
def z2_patch(reference_domain, z2):
    return build_cover_patch(reference_domain, z2, 4)


def delta(patch, gamma, vid):
    return CoverFunction(patch, {patch.index_of(gamma, vid): 1.0 + 0j})


def brute_transform(u, theta):
    """Independent summation oracle: loop every (copy, vertex) pair directly."""
    patch = u.patch
    th = np.asarray(theta, dtype=float)
    out = np.zeros(patch.domain.vertex_count, dtype=complex)
    for gamma in patch.ball:
        phase = np.exp(1j * float(th @ np.asarray(gamma.lattice)))
        for vid in range(patch.domain.vertex_count):
            idx = patch.vertex_index.get(patch.canonical_key(gamma, vid))
            if idx is not None and idx in u.values:
                out[vid] += u.values[idx] * phase
    return out


def test_transform_delta_at_origin(z2_patch, z2):
    u = delta(z2_patch, identity(z2), 10)
    for theta in [(0.0, 0.0), (1.0, 2.0)]:
        h = floquet_transform(u, theta)
        expected = np.zeros(z2_patch.domain.vertex_count, dtype=complex)
        expected[10] = 1.0
        assert np.allclose(h.values, expected)


def test_transform_single_translate_phase():
    z1 = builtin_group("Z1")
    d = build_domain(3, 1, 1, 0.5, 1)
    patch = build_cover_patch(d, z1, 3)
    u = delta(patch, GroupElement((2,)), 4)
    theta = 1.1
    h = floquet_transform(u, (theta,))
    assert h.values[4] == pytest.approx(np.exp(2j * theta))
    assert np.abs(np.delete(h.values, 4)).max() == 0.0


def test_transform_matches_bruteforce_oracle(z2_patch, rng):
    u = random_cover_function(z2_patch, 2, rng)
    for theta in [(0.3, 1.9), (np.pi, 0.0)]:
        fast = floquet_transform(u, theta).values
        slow = brute_transform(u, theta)
        assert np.abs(fast - slow).max() < 1e-12


def test_transform_is_linear(z2_patch, rng):
    u = random_cover_function(z2_patch, 2, rng)
    v = random_cover_function(z2_patch, 2, rng)
    keys = set(u.values) | set(v.values)
    w = CoverFunction(z2_patch, {k: 2.0 * u.values.get(k, 0.0) - 1j * v.values.get(k, 0.0)
                                 for k in keys})
    theta = (0.8, 2.5)
    lhs = floquet_transform(w, theta).values
    rhs = 2.0 * floquet_transform(u, theta).values - 1j * floquet_transform(v, theta).values
    assert np.abs(lhs - rhs).max() < 1e-12


def test_transform_rejects_non_abelian(inf_dihedral):
    d = build_domain(4, 2, 1, 0.5, 1)
    patch = build_cover_patch(d, inf_dihedral, 1)
    u = CoverFunction(patch, {0: 1.0 + 0j})
    with pytest.raises(UnsupportedGroupError):
        floquet_transform(u, (0.0,))


# ---------------------------------------------------------------------------
# Parseval


def test_parseval_delta(z2_patch, z2, z2_grid):
    u = delta(z2_patch, identity(z2), 3)
    vertex_weight = z2_patch.weights[z2_patch.index_of(identity(z2), 3)]
    assert u.norm_squared() == pytest.approx(float(vertex_weight))
    assert parseval_check(u, z2_grid) < 1e-12


def test_parseval_random(z2_patch, z2_grid, rng):
    for _ in range(10):
        u = random_cover_function(z2_patch, 3, rng)
        assert parseval_check(u, z2_grid) <= 1e-10 * u.norm_squared()


def test_parseval_translation_invariance(z2_patch, z2_grid, rng):
    u = random_cover_function(z2_patch, 2, rng)
    shifted = u.translated(GroupElement((1, 0)))
    thetas = [f.theta for f in z2_grid.fibers]
    w = np.array([f.weight for f in z2_grid.fibers])
    m = z2_patch.domain.weights
    norm_u = float(w @ (np.abs(transform_all(u, thetas)) ** 2 @ m))
    norm_s = float(w @ (np.abs(transform_all(shifted, thetas)) ** 2 @ m))
    assert norm_u == pytest.approx(norm_s, rel=1e-12)


def test_parseval_support_window_enforced(z2_patch, z2, rng):
    grid = sample_dual(z2, 4)
    u = random_cover_function(z2_patch, 2, rng)
    with pytest.raises(PreconditionError):
        parseval_check(u, grid)   # radius 2 not < 4/2


def test_quadrature_aliasing_boundary():
    # support at copies -2 and +2: exact only once N > 4
    z1 = builtin_group("Z1")
    d = build_domain(3, 1, 1, 0.5, 1)
    patch = build_cover_patch(d, z1, 2)
    u = CoverFunction(patch, {
        patch.index_of(GroupElement((-2,)), 1): 1.0 + 0j,
        patch.index_of(GroupElement((2,)), 1): 1.0 + 0j,
    })
    lhs = u.norm_squared()

    def quadrature_norm(n_points):
        grid = sample_dual(z1, n_points)
        thetas = [f.theta for f in grid.fibers]
        w = np.array([f.weight for f in grid.fibers])
        H = transform_all(u, thetas)
        return float(w @ (np.abs(H) ** 2 @ patch.domain.weights))

    assert abs(quadrature_norm(4) - lhs) > 0.1 * lhs    # aliased: -2 == 2 mod 4
    assert abs(quadrature_norm(5) - lhs) < 1e-12 * lhs  # exact once N > 2 * radius


# ---------------------------------------------------------------------------
# intertwining


def test_intertwine_identity_is_exact(z2_patch, z2, rng):
    u = random_cover_function(z2_patch, 2, rng)
    assert intertwine_check(u, identity(z2), (0.7, 1.1)) == 0.0


def test_intertwine_trivial_character(z2_patch, rng):
    # at theta = 0 the transform is translation invariant
    u = random_cover_function(z2_patch, 1, rng)
    gamma = GroupElement((1, -1))
    shifted = u.translated(gamma)
    lhs = floquet_transform(shifted, (0.0, 0.0)).values
    rhs = floquet_transform(u, (0.0, 0.0)).values
    assert np.abs(lhs - rhs).max() < 1e-12


def test_intertwine_random(z2_patch, z2_grid, rng):
    gammas = [GroupElement((1, 0)), GroupElement((0, -1)), GroupElement((-1, 0))]
    for _ in range(20):
        u = random_cover_function(z2_patch, 2, rng)
        gamma = gammas[int(rng.integers(len(gammas)))]
        fiber = z2_grid.fibers[int(rng.integers(len(z2_grid.fibers)))]
        resid = intertwine_check(u, gamma, fiber.theta)
        assert resid <= 1e-12 * np.sqrt(u.norm_squared())


def test_intertwine_support_escape_raises(z2_patch):
    u = delta(z2_patch, GroupElement((4, 0)), 0)
    with pytest.raises(PreconditionError):
        intertwine_check(u, GroupElement((1, 0)), (0.1, 0.2))


# ---------------------------------------------------------------------------
# energy identity


def test_energy_single_vertex_support(z2_patch, z2, z2_grid, reference_domain):
    u = delta(z2_patch, identity(z2), 20)
    resid, q = energy_identity_check(u, z2_grid, reference_domain)
    # degree-weighted sum of incident edges
    idx = z2_patch.index_of(identity(z2), 20)
    expected = sum(w for a, b, w in z2_patch.edges if idx in (a, b))
    assert q == pytest.approx(expected)
    assert resid <= 1e-9 * q


def test_energy_random(z2_patch, z2_grid, reference_domain, rng):
    forms = fiber_quadratic_forms(reference_domain, z2_grid)
    for _ in range(10):
        u = random_cover_function(z2_patch, 2, rng)
        resid, q = energy_identity_check(u, z2_grid, reference_domain, forms)
        assert resid <= 1e-9 * q


def test_energy_zero_function(z2_patch, z2_grid, reference_domain):
    u = CoverFunction(z2_patch, {})
    resid, q = energy_identity_check(u, z2_grid, reference_domain)
    assert q == 0.0 and resid == 0.0


def test_energy_requires_interior_support(z2_patch, z2_grid, reference_domain, rng):
    u = random_cover_function(z2_patch, z2_patch.radius, rng)
    with pytest.raises(PreconditionError):
        energy_identity_check(u, z2_grid, reference_domain)


# ---------------------------------------------------------------------------
# bands


def test_bands_dim_one_blocks(reference_domain, z2, z2_grid):
    bands = build_bands(reference_domain, z2_grid, k_max=4)
    assert all(fb.reliable for fb in bands.fibers)
    fb = bands.fibers[0]
    for k in range(1, 5):
        block = bands.band(fb.z_id, k)
        assert len(block) == 1
        assert block[0] == fb.eigenvalues[k - 1]


def test_bands_dim_two_blocks(reference_domain, inf_dihedral, inf_dihedral_grid):
    bands = build_bands(reference_domain, inf_dihedral_grid, k_max=4)
    fb = next(f for f in bands.fibers if f.dim == 2)
    block = bands.band(fb.z_id, 1)
    assert len(block) == 2
    assert np.allclose(block, fb.eigenvalues[:2])


def test_bands_aggregate_is_union(reference_domain, inf_dihedral, inf_dihedral_grid):
    bands = build_bands(reference_domain, inf_dihedral_grid, k_max=3)
    two = [f for f in bands.fibers if f.dim == 2]
    agg = bands.aggregate(2, 1)
    manual = np.sort(np.concatenate([f.eigenvalues[:2] for f in two]))
    assert np.allclose(agg, manual)


def test_band_nesting_inside_brackets(reference_domain, z2, z2_grid):
    k_max = 5
    bands = build_bands(reference_domain, z2_grid, k_max=k_max)
    lam_n = eigen_solve(assemble(reference_domain, neumann())).eigenvalues
    lam_d = eigen_solve(assemble(reference_domain, dirichlet())).eigenvalues
    for fb in bands.fibers:
        for k in range(1, k_max + 1):
            block = bands.band(fb.z_id, k)
            assert block.min() >= lam_n[k - 1] - 1e-9
            assert block.max() <= lam_d[k - 1] + 1e-9
