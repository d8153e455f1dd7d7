import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hribm.biofilm import (
    BiofilmState,
    CoincidentEndpoints,
    DuplicatePosition,
    SpreadParams,
    build_connections,
    classify_adhesion,
    generate_synthetic_biofilm,
    interpolate_velocity,
    mean_nearest_neighbor_distance,
    read_positions,
    spread_force,
    spread_material_fields,
    spring_forces,
    write_positions,
)
from hribm.grid import GridSpec
from hribm.kernels import phi
from hribm.params import SimParams, lagrangian_force_unit


def params():
    return SimParams(dt=1e-4, u0=1e-4)


def two_point_state(p0, p1, rest=None, k=1.0, d0=0.159):
    X = np.array([p0, p1], dtype=float)
    rest_len = np.array([rest if rest is not None else np.linalg.norm(X[0] - X[1])])
    return BiofilmState(
        X=X,
        X0=X.copy(),
        springs_i=np.array([0]),
        springs_j=np.array([1]),
        rest_length=rest_len,
        stiffness=np.array([k], dtype=float),
        d0=d0,
    )


class TestBuildConnections:
    def test_pair_within_cutoff(self):
        X = np.array([[0.2, 0.5, 0.2], [0.2, 0.5, 0.3]])
        st_ = build_connections(X, cutoff=0.162, f_max_newtons=1.3223e-9, params=params())
        assert st_.n_springs == 1
        assert st_.rest_length[0] == pytest.approx(0.1)

    def test_pair_beyond_cutoff(self):
        X = np.array([[0.2, 0.5, 0.2], [0.2, 0.5, 0.4]])
        st_ = build_connections(X, cutoff=0.162, f_max_newtons=1.3223e-9, params=params())
        assert st_.n_springs == 0

    def test_matches_brute_force(self):
        rng = np.random.default_rng(0)
        X = rng.random((100, 3))
        cutoff = 0.18
        st_ = build_connections(X, cutoff, 1.3223e-9, params())
        got = set(zip(st_.springs_i.tolist(), st_.springs_j.tolist()))
        expected = set()
        for i in range(100):
            for j in range(i + 1, 100):
                if np.linalg.norm(X[i] - X[j]) <= cutoff:
                    expected.add((i, j))
        assert got == expected

    def test_stiffness_invariant(self):
        rng = np.random.default_rng(1)
        X = rng.random((50, 3))
        p = params()
        st_ = build_connections(X, 0.2, 1.3223e-9, p, d0=0.159)
        f_max_code = 1.3223e-9 / lagrangian_force_unit(p, 0.159)
        assert np.allclose(st_.stiffness * st_.rest_length, f_max_code, rtol=1e-12)

    def test_duplicate_positions_raise(self):
        X = np.array([[0.3, 0.3, 0.3], [0.3, 0.3, 0.3], [0.5, 0.5, 0.5]])
        with pytest.raises(DuplicatePosition):
            build_connections(X, 0.162, 1.3223e-9, params())


class TestSpringForces:
    def test_rest_configuration_zero(self):
        rng = np.random.default_rng(2)
        X = rng.random((40, 3)) * 0.8 + 0.1
        st_ = build_connections(X, 0.25, 1.3223e-9, params())
        F = spring_forces(st_)
        assert np.abs(F).max() == 0.0

    def test_single_stretched_spring_hand_value(self):
        # rest length 1, stretched to 2 along z: |F| = k (2-1)/2 * 2 = k
        k = 3.7
        st_ = two_point_state([0.0, 0.0, 0.0], [0.0, 0.0, 2.0], rest=1.0, k=k)
        F = spring_forces(st_)
        assert F[0, 2] == pytest.approx(k)     # pulled toward the other end
        assert F[1, 2] == pytest.approx(-k)
        assert np.abs(F[:, :2]).max() == 0.0

    def test_compressed_spring_pushes_apart(self):
        st_ = two_point_state([0.0, 0.0, 0.0], [0.0, 0.0, 0.5], rest=1.0, k=2.0)
        F = spring_forces(st_)
        assert F[0, 2] < 0.0
        assert F[1, 2] > 0.0

    @settings(max_examples=25, deadline=None)
    @given(st.integers(min_value=0, max_value=10_000))
    def test_forces_sum_to_zero(self, seed):
        rng = np.random.default_rng(seed)
        X0 = rng.random((30, 3))
        st_ = build_connections(X0, 0.3, 1.3223e-9, params())
        st_.X = X0 + 0.05 * rng.standard_normal((30, 3))
        F = spring_forces(st_)
        scale = max(np.abs(F).sum(), 1.0)
        assert np.abs(F.sum(axis=0)).max() <= 1e-12 * scale

    def test_coincident_endpoints_raise(self):
        st_ = two_point_state([0.1, 0.1, 0.1], [0.1, 0.1, 0.1 + 1e-15], rest=1.0)
        with pytest.raises(CoincidentEndpoints):
            spring_forces(st_)


class TestClassifyAdhesion:
    def test_boundaries(self):
        y_L = 2.7
        gamma = 0.04
        X = np.array(
            [
                [0.1, y_L, 0.1],            # exactly on the top wall
                [0.1, y_L - 2 * gamma, 0.1],  # below the band
                [0.1, 0.0, 0.1],            # on the bottom wall
                [0.1, gamma, 0.1],          # edge of the bottom band
            ]
        )
        top, bottom = classify_adhesion(X, gamma, y_L)
        assert list(top) == [0]
        assert set(bottom) == {2, 3}

    def test_gamma_validation(self):
        with pytest.raises(ValueError):
            classify_adhesion(np.zeros((1, 3)), -0.1, 1.0)


def lattice_sum_1d(x, h, omega, offset):
    lo = int(np.ceil((x - 2 * omega) / h - offset))
    hi = int(np.floor((x + 2 * omega) / h - offset))
    idx = np.arange(lo, hi + 1)
    return (h / omega) * phi(((idx + offset) * h - x) / omega).sum()


class TestSpreadForce:
    def test_zero_forces_zero_field(self):
        g = GridSpec(8, 16, 8, 1.0 / 16)
        rng = np.random.default_rng(3)
        X = rng.random((10, 3)) * np.array([0.5, 1.0, 0.5]) * 0.8 + 0.05
        st_ = build_connections(X, 0.0, 1.3223e-9, params())  # no springs
        fu, fv, fw = spread_force(st_, 0.033, g)
        assert np.abs(fu).max() == 0.0 and np.abs(fv).max() == 0.0 and np.abs(fw).max() == 0.0

    def test_unit_force_total(self):
        # one bacterium, unit F_z: sum f_z h^3 = 1/d0^3 up to the unity defect
        g = GridSpec(16, 32, 16, 1.0 / 32)
        omega = 0.033
        X = np.array([[0.237, 0.513, 0.331]])
        st_ = BiofilmState(
            X=X, X0=X.copy(),
            springs_i=np.empty(0, dtype=np.int64), springs_j=np.empty(0, dtype=np.int64),
            rest_length=np.empty(0), stiffness=np.empty(0), d0=0.159,
        )
        F = np.array([[0.0, 0.0, 1.0]])
        fu, fv, fw = spread_force(st_, omega, g, forces=F)
        total = fw.sum() * g.h ** 3
        expected = (
            lattice_sum_1d(X[0, 0], g.h, omega, 0.5)
            * lattice_sum_1d(X[0, 1], g.h, omega, 0.5)
            * lattice_sum_1d(X[0, 2], g.h, omega, 0.0)
            / 0.159 ** 3
        )
        assert total == pytest.approx(expected, rel=1e-12)
        assert total == pytest.approx(1.0 / 0.159 ** 3, rel=5e-3)

    def test_opposite_forces_cancel_by_linearity(self):
        # spreading is linear in the Lagrangian values, so equal and
        # opposite loads at one location cancel identically
        g = GridSpec(16, 32, 16, 1.0 / 32)
        X = np.array([[0.3, 0.5, 0.3], [0.3, 0.5, 0.3]])
        st_ = BiofilmState(
            X=X, X0=X.copy(),
            springs_i=np.empty(0, dtype=np.int64), springs_j=np.empty(0, dtype=np.int64),
            rest_length=np.empty(0), stiffness=np.empty(0), d0=0.159,
        )
        F = np.array([[0.4, -0.2, 1.0], [-0.4, 0.2, -1.0]])
        fu, fv, fw = spread_force(st_, 0.033, g, forces=F)
        assert np.abs(fu).max() < 1e-12
        assert np.abs(fv).max() < 1e-12
        assert np.abs(fw).max() < 1e-12

    def test_superposition(self):
        g = GridSpec(16, 32, 16, 1.0 / 32)
        X = np.array([[0.3, 0.5, 0.3], [0.31, 0.52, 0.33]])
        st_ = BiofilmState(
            X=X, X0=X.copy(),
            springs_i=np.empty(0, dtype=np.int64), springs_j=np.empty(0, dtype=np.int64),
            rest_length=np.empty(0), stiffness=np.empty(0), d0=0.159,
        )
        F1 = np.array([[0.4, -0.2, 1.0], [0.0, 0.0, 0.0]])
        F2 = np.array([[0.0, 0.0, 0.0], [-0.4, 0.2, -1.0]])
        a = spread_force(st_, 0.033, g, forces=F1)
        b = spread_force(st_, 0.033, g, forces=F2)
        c = spread_force(st_, 0.033, g, forces=F1 + F2)
        for x, y, z in zip(a, b, c):
            assert np.abs((x + y) - z).max() < 1e-12

    def test_adhered_bacteria_excluded(self):
        g = GridSpec(16, 32, 16, 1.0 / 32)
        X = np.array([[0.3, 0.5, 0.3]])
        st_ = BiofilmState(
            X=X, X0=X.copy(),
            springs_i=np.empty(0, dtype=np.int64), springs_j=np.empty(0, dtype=np.int64),
            rest_length=np.empty(0), stiffness=np.empty(0),
            adhered_top=np.array([0]), d0=0.159,
        )
        fu, fv, fw = spread_force(st_, 0.033, g, forces=np.ones((1, 3)))
        assert np.abs(fw).max() == 0.0


class TestSpreadMaterial:
    def test_far_field_is_water(self):
        g = GridSpec(16, 32, 16, 1.0 / 32)
        X = np.array([[0.25, 0.5, 0.25]])
        st_ = BiofilmState(
            X=X, X0=X.copy(),
            springs_i=np.empty(0, dtype=np.int64), springs_j=np.empty(0, dtype=np.int64),
            rest_length=np.empty(0), stiffness=np.empty(0), d0=0.159,
        )
        rho, mu = spread_material_fields(st_, SpreadParams(), g)
        assert mu[0, -1, 0] == 1.0
        assert rho[0, -1, 0] == 1.0

    def test_isolated_center_value(self):
        # bacterium exactly at a cell center: omega^3 delta(0) = 1/8
        g = GridSpec(16, 32, 16, 1.0 / 32)
        h = g.h
        X = np.array([[7.5 * h, 15.5 * h, 7.5 * h]])
        st_ = BiofilmState(
            X=X, X0=X.copy(),
            springs_i=np.empty(0, dtype=np.int64), springs_j=np.empty(0, dtype=np.int64),
            rest_length=np.empty(0), stiffness=np.empty(0), d0=0.159,
        )
        rho, mu = spread_material_fields(st_, SpreadParams(), g)
        assert mu[7, 15, 7] == pytest.approx(1.0 + 0.125 * 249.0, rel=1e-12)
        assert rho[7, 15, 7] == pytest.approx(1.0 + 0.125 * 0.12, rel=1e-12)

    def test_clamps_hold_at_any_density(self):
        g = GridSpec(16, 32, 16, 1.0 / 32)
        rng = np.random.default_rng(8)
        # absurdly dense cluster to force the clamp
        X = 0.45 + 0.02 * rng.random((60, 3))
        X[:, 1] += 0.05
        st_ = BiofilmState(
            X=X, X0=X.copy(),
            springs_i=np.empty(0, dtype=np.int64), springs_j=np.empty(0, dtype=np.int64),
            rest_length=np.empty(0), stiffness=np.empty(0), d0=0.159,
        )
        sp = SpreadParams()
        rho, mu = spread_material_fields(st_, sp, g)
        assert mu.max() == pytest.approx(sp.mu_b)
        assert rho.max() == pytest.approx(1.0 + sp.rho_b)
        assert mu.min() >= 1.0 and rho.min() >= 1.0


def dense_interpolation_oracle(u, v, w, X, g, walls=(0.0, 0.0, 0.0, 0.0)):
    """Direct summation over all faces and periodic images (interior X)."""
    h = g.h
    out = np.zeros(3)
    comps = [
        (u, 0.0, 0.5, 0.5, 0),
        (v, 0.5, 0.0, 0.5, 1),
        (w, 0.5, 0.5, 0.0, 2),
    ]
    for field, ox, oy, oz, c in comps:
        n0, n1, n2 = field.shape
        acc = 0.0
        for i in range(n0):
            for j in range(n1):
                for k in range(n2):
                    for sx in (-1, 0, 1):
                        for sz in (-1, 0, 1):
                            dx = (i + ox) * h + sx * g.x_L - X[0]
                            dy = (j + oy) * h - X[1]
                            dz = (k + oz) * h + sz * g.z_L - X[2]
                            wgt = phi(dx / h) * phi(dy / h) * phi(dz / h)
                            acc += field[i, j, k] * wgt
        out[c] = acc
    return out


class TestInterpolateVelocity:
    def test_uniform_field(self):
        g = GridSpec(8, 16, 8, 1.0 / 16)
        u = np.zeros(g.shape)
        v = np.zeros((g.nx, g.ny + 1, g.nz))
        w = np.full(g.shape, 0.8)
        rng = np.random.default_rng(4)
        X = rng.random((20, 3)) * np.array([0.5, 1.0, 0.5])
        U = interpolate_velocity(u, v, w, X, g, walls=(0.0, 0.8, 0.0, 0.8))
        assert np.allclose(U[:, 2], 0.8, atol=1e-12)
        assert np.abs(U[:, :2]).max() < 1e-12

    def test_linear_shear_exact(self):
        # w = y: first-moment condition makes linear interpolation exact,
        # including near the walls thanks to the mirrored-linear ghosts
        g = GridSpec(8, 16, 8, 1.0 / 16)
        yc = g.cell_centers(1)
        u = np.zeros(g.shape)
        v = np.zeros((g.nx, g.ny + 1, g.nz))
        w = np.broadcast_to(yc[None, :, None], g.shape).copy()
        rng = np.random.default_rng(5)
        X = rng.random((30, 3)) * np.array([0.5, 1.0, 0.5])
        U = interpolate_velocity(u, v, w, X, g, walls=(0.0, 0.0, 0.0, 1.0))
        assert np.allclose(U[:, 2], X[:, 1], atol=1e-12)

    def test_matches_dense_summation(self):
        g = GridSpec(8, 16, 8, 1.0 / 16)
        rng = np.random.default_rng(6)
        u = rng.standard_normal(g.shape)
        v = rng.standard_normal((g.nx, g.ny + 1, g.nz))
        w = rng.standard_normal(g.shape)
        for _ in range(4):
            X = np.array([0.5, 1.0, 0.5]) * (0.2 + 0.6 * rng.random(3))
            U = interpolate_velocity(u, v, w, X, g)[0]
            expected = dense_interpolation_oracle(u, v, w, X, g)
            assert np.allclose(U, expected, atol=1e-12)


class TestGenerator:
    def test_count_matches_density(self):
        X = generate_synthetic_biofilm((0.9, 2.7, 0.9), d0=0.159, seed=1)
        assert X.shape[0] == round(0.9 * 2.7 * 0.9 / 0.159 ** 3)

    def test_deterministic(self):
        a = generate_synthetic_biofilm((0.5, 1.0, 0.5), seed=42)
        b = generate_synthetic_biofilm((0.5, 1.0, 0.5), seed=42)
        assert np.array_equal(a, b)

    def test_min_separation_respected(self):
        X = generate_synthetic_biofilm((0.5, 1.0, 0.5), min_separation=0.1, seed=3)
        d = X[:, None, :] - X[None, :, :]
        dist = np.sqrt(np.einsum("ijk,ijk->ij", d, d))
        np.fill_diagonal(dist, np.inf)
        assert dist.min() >= 0.1

    def test_mean_nearest_neighbor_near_d0(self):
        X = generate_synthetic_biofilm((0.9, 2.7, 0.9), d0=0.159, seed=5)
        nn = mean_nearest_neighbor_distance(X)
        assert abs(nn - 0.159) / 0.159 < 0.15

    def test_y_margin(self):
        X = generate_synthetic_biofilm((0.5, 1.0, 0.5), seed=7, y_margin=0.066)
        assert X[:, 1].min() >= 0.066
        assert X[:, 1].max() <= 1.0 - 0.066


class TestPositionFiles:
    def test_roundtrip_micrometers(self, tmp_path):
        X = generate_synthetic_biofilm((0.5, 1.0, 0.5), seed=9)
        f = tmp_path / "positions.txt"
        write_positions(f, X, header="synthetic test set")
        text = f.read_text()
        assert text.startswith("# synthetic test set")
        # file units are micrometers: first coordinate is 10x the internal one
        first = [float(p) for p in text.splitlines()[1].split(",")]
        assert first[0] == pytest.approx(X[0, 0] * 10.0, rel=1e-9)
        back = read_positions(f)
        assert np.allclose(back, X, atol=1e-9)
