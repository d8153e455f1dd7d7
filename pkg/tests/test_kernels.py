import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hribm.kernels import (
    DeltaKernel,
    KernelSupportError,
    first_moment_defect,
    phi,
    smoothed_delta,
    unity_defect,
)


def phi_inner_reference(r):
    # direct scalar evaluation of the printed 0 <= |r| <= 1 branch
    r = abs(r)
    return (3.0 - 2.0 * r + (1.0 + 4.0 * r - 4.0 * r * r) ** 0.5) / 8.0


class TestPhi:
    def test_center_value(self):
        assert phi(0.0) == pytest.approx(0.5, abs=1e-15)

    def test_outer_boundary(self):
        assert phi(2.0) == pytest.approx(0.0, abs=1e-15)
        assert phi(-2.0) == pytest.approx(0.0, abs=1e-15)
        assert phi(2.5) == 0.0

    def test_half_point_matches_scalar_reference(self):
        assert phi(0.5) == pytest.approx(phi_inner_reference(0.5), abs=1e-15)
        # frozen value of (2 + sqrt(2)) / 8
        assert phi(0.5) == pytest.approx(0.42677669529663687, abs=1e-15)

    @pytest.mark.parametrize("r", [1.0, 2.0])
    def test_branch_continuity(self, r):
        eps = 1e-9
        assert abs(phi(r - eps) - phi(r + eps)) < 1e-8
        # branch values themselves agree to near machine precision
        left = (3.0 - 2.0 * r + max(1.0 + 4.0 * r - 4.0 * r * r, 0.0) ** 0.5) / 8.0
        right = (5.0 - 2.0 * r - max(-7.0 + 12.0 * r - 4.0 * r * r, 0.0) ** 0.5) / 8.0
        if r == 1.0:
            assert abs(left - right) < 1e-14

    @given(st.floats(min_value=-10.0, max_value=10.0, allow_nan=False))
    def test_nonnegative_and_even(self, r):
        assert phi(r) >= 0.0
        assert phi(r) == pytest.approx(phi(-r), abs=1e-15)

    def test_vectorized(self):
        r = np.array([0.0, 0.5, 1.5, 3.0])
        vals = phi(r)
        assert vals.shape == (4,)
        assert vals[3] == 0.0


class TestSmoothedDelta:
    def test_center(self):
        omega = 0.033
        assert smoothed_delta((0.0, 0.0, 0.0), omega) == pytest.approx(
            0.125 / omega ** 3, rel=1e-14
        )

    def test_outside_support(self):
        omega = 0.05
        assert smoothed_delta((3 * omega, 0.0, 0.0), omega) == 0.0

    def test_product_form(self):
        omega = 0.07
        val = smoothed_delta((0.5 * omega, 0.5 * omega, 0.0), omega)
        expected = phi(0.5) ** 2 * phi(0.0) / omega ** 3
        assert val == pytest.approx(expected, rel=1e-14)

    def test_even_in_each_axis(self):
        omega = 0.042
        dx = np.array([0.3, -0.7, 1.2]) * omega
        for d in range(3):
            flipped = dx.copy()
            flipped[d] = -flipped[d]
            assert smoothed_delta(dx, omega) == pytest.approx(
                smoothed_delta(flipped, omega), rel=1e-14
            )

    def test_integrates_to_one(self):
        # midpoint rule over the support cube on a fine grid
        omega = 0.033
        n = 80
        half = 2.0 * omega
        x = (np.arange(n) + 0.5) / n * 2 * half - half
        s1 = np.sum(phi(x / omega)) * (2 * half / n) / omega
        assert s1 ** 3 == pytest.approx(1.0, abs=1e-6)

    def test_kernel_dataclass(self):
        k = DeltaKernel(omega=0.033)
        assert k.support_radius == pytest.approx(0.066)
        assert k((0.0, 0.0, 0.0)) == pytest.approx(0.125 / 0.033 ** 3, rel=1e-14)
        with pytest.raises(ValueError):
            DeltaKernel(omega=-1.0)


class TestUnityCondition:
    def test_exact_for_grid_width(self):
        h = 1.0 / 64
        rng = np.random.default_rng(7)
        for _ in range(5):
            X = 0.3 + 0.4 * rng.random(3)
            assert unity_defect(X, h, omega=h) <= 1e-12

    def test_node_aligned(self):
        h = 1.0 / 32
        X = np.array([8 * h, 12 * h, 20 * h])
        assert unity_defect(X, h, omega=h) <= 1e-12

    def test_fixed_omega_decreasing_sequence(self):
        # single positions alias with the lattice phase, so measure the
        # defect over a batch of random positions per level
        omega = 0.033
        rng = np.random.default_rng(3)
        X = 0.3 + 0.4 * rng.random((24, 3))
        defects = [
            max(unity_defect(x, h, omega) for x in X) for h in (1 / 32, 1 / 64, 1 / 128)
        ]
        assert defects[0] > defects[1] > defects[2]

    def test_asymptotic_order_beyond_two(self):
        # worst-case over lattice phase; order fitted across five halvings
        omega = 0.033
        hs = [1 / 32, 1 / 64, 1 / 128, 1 / 256, 1 / 512]
        defects = []
        for h in hs:
            xs = 0.5 + np.linspace(0.0, h, 60, endpoint=False)
            defects.append(max(unity_defect((x, 0.5, 0.5), h, omega) for x in xs))
        order = np.polyfit(np.log2(hs), np.log2(defects), 1)[0]
        assert order > 2.0

    def test_boundary_error(self):
        with pytest.raises(KernelSupportError):
            unity_defect((0.5, 0.05, 0.5), h=1 / 64, omega=0.033, y_bounds=(0.0, 1.0))
        # interior point passes the check
        unity_defect((0.5, 0.5, 0.5), h=1 / 64, omega=0.033, y_bounds=(0.0, 1.0))


class TestFirstMomentCondition:
    def test_zero_on_node_by_symmetry(self):
        h = 1.0 / 32
        X = np.array([4 * h, 6 * h, 10 * h])
        assert np.all(first_moment_defect(X, h, omega=0.033) <= 1e-14)

    def test_exact_for_grid_width(self):
        h = 1.0 / 48
        rng = np.random.default_rng(11)
        for _ in range(5):
            X = 0.3 + 0.4 * rng.random(3)
            assert np.all(first_moment_defect(X, h, omega=h) <= 1e-12)

    def test_fixed_omega_shrinks(self):
        omega = 0.033
        rng = np.random.default_rng(5)
        X = 0.4 + 0.2 * rng.random(3)
        d = [np.max(first_moment_defect(X, h, omega)) for h in (1 / 32, 1 / 64, 1 / 128)]
        assert d[0] > d[2]


class TestSpreadingConservation:
    def test_spread_sum_converges_to_total(self):
        # sum over grid of Q * delta * h^3 approaches Q as h -> 0
        omega = 0.033
        rng = np.random.default_rng(2)
        X = 0.45 + 0.1 * rng.random((4, 3))
        Q = rng.random(4) + 0.5
        errs = []
        for h in (1 / 32, 1 / 128):
            total = 0.0
            for q, pos in zip(Q, X):
                total += q * (1.0 - unity_defect(pos, h, omega))  # signed defect bound
            # |sum - Q_total| bounded by sum of unity defects
            errs.append(abs(total - Q.sum()))
        assert errs[1] < errs[0]

    @settings(max_examples=20)
    @given(st.floats(min_value=0.01, max_value=0.1))
    def test_unity_defect_total_function(self, omega):
        assert unity_defect((0.5, 0.5, 0.5), 1 / 64, omega) >= 0.0
