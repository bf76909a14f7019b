import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from oracles import unknown_reference_dense
from qsnet import bounds
from qsnet.bounds import (
    ghz_sum,
    gns_bound,
    imaging_symmetric,
    imaging_unknown_reference,
    local_optimal,
    local_sum,
    local_weighted,
    noon_individual,
    optimal_allocation,
    propagate_variance,
    two_qubit_nonorthogonal,
    weighted_ghz_bound,
    x_min,
)
from qsnet.fisher import g_value

V21 = np.array([2.0, 1.0]) / np.sqrt(5)


class TestGhzSum:
    @pytest.mark.parametrize("mu", [1, 4])
    def test_two_qubits(self, mu):
        assert ghz_sum(2, 1, 0.5, -0.5, mu) == pytest.approx(0.5 / mu)

    @pytest.mark.parametrize("d,N", [(2, 4), (3, 6), (5, 10)])
    def test_atomic_network(self, d, N):
        assert ghz_sum(d, N // d, 1.0, 0.0) == pytest.approx(d / N**2)

    @pytest.mark.parametrize("n", [1, 2, 7])
    def test_single_sensor_heisenberg(self, n):
        assert ghz_sum(1, n, 1.5, -0.5) == pytest.approx(1 / (4 * n * n))

    def test_equal_extremes_rejected(self):
        with pytest.raises(ValueError):
            ghz_sum(2, 1, 1.0, 1.0)


class TestLocalSum:
    def test_value(self):
        assert local_sum(2, 2, 1.0, 0.0) == pytest.approx(1.0)

    @pytest.mark.parametrize("n", [1, 3])
    def test_d1_matches_ghz(self, n):
        assert local_sum(1, n, 1.0, 0.0) == ghz_sum(1, n, 1.0, 0.0)

    def test_ratio_one_over_d(self):
        assert ghz_sum(5, 2, 1.0, 0.0) / local_sum(5, 10, 1.0, 0.0) == pytest.approx(0.2)


class TestWeightedGhz:
    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_even_reduces_to_ghz_sum(self, d):
        assert weighted_ghz_bound(np.ones(d) / np.sqrt(d), 2 * d, 1.0, 0.0) == pytest.approx(ghz_sum(d, 2, 1.0, 0.0))

    def test_one_hot(self):
        assert weighted_ghz_bound([0, 1, 0], 5, 1.0, 0.0) == pytest.approx(1 / 25)

    def test_two_one(self):
        assert weighted_ghz_bound(V21, 3, 1.0, 0.0) == pytest.approx(0.2)

    def test_incompatible_n_max(self):
        with pytest.raises(ValueError):
            weighted_ghz_bound(V21, 4, 1.0, 0.0)

    def test_needs_unit_vector(self):
        with pytest.raises(ValueError):
            weighted_ghz_bound([2, 1], 3, 1.0, 0.0)


class TestLocal:
    def test_x_equal_v(self):
        v = np.array([1.0, 2.0, 2.0]) / 3
        want = 3 * np.abs(v).sum() ** 2 / 25
        assert local_weighted(v, v, 5, 1.0, 0.0) == pytest.approx(want)

    def test_one_hot(self):
        assert local_weighted([1, 0], [1, 0], 4, 1.0, 0.0) == pytest.approx(1 / 16)

    def test_two_one(self):
        assert local_weighted(V21, V21, 3, 1.0, 0.0) == pytest.approx(0.4)

    def test_zero_allocation(self):
        with pytest.raises(ZeroDivisionError):
            local_weighted(V21, [1, 0], 3, 1.0, 0.0)

    @pytest.mark.parametrize("d", [2, 3, 5])
    def test_optimal_even(self, d):
        assert local_optimal(np.ones(d) / np.sqrt(d), 6, 1.0, 0.0) == pytest.approx(local_sum(d, 6, 1.0, 0.0))

    def test_optimal_one_hot(self):
        assert local_optimal([0, 0, 1], 3, 1.0, 0.0) == pytest.approx(1 / 9)

    def test_allocation_minimizes_on_grid(self):
        xs = np.arange(1, 1000) * 1e-3
        vals = [local_weighted(V21, [x, 1 - x], 1, 1.0, 0.0) for x in xs]
        best = xs[int(np.argmin(vals))]
        assert abs(best - optimal_allocation(V21)[0]) <= 1e-3
        assert min(vals) == pytest.approx(local_optimal(V21, 1, 1.0, 0.0), rel=1e-5)


class TestGns:
    def test_two_probe_modes(self):
        assert gns_bound(2, 5, 1.0, 0.0) == pytest.approx(3 / 25)

    def test_one_probe_mode(self):
        assert gns_bound(1, 3, 1.0, 0.0) == pytest.approx(2 / 9)

    def test_uses_largest_eigenvalue_magnitude(self):
        assert gns_bound(1, 1, 0.5, -2.0) == pytest.approx(2 / 4)

    @pytest.mark.parametrize("v,N", [((2, 1), 3), ((3, 1), 4), ((1, 1, 2), 4), ((1, 2, 2), 5)])
    def test_above_weighted_ghz(self, v, N):
        v = np.array(v, float) / np.linalg.norm(v)
        d = len(v)
        assert np.abs(v).sum() ** 2 < d + 1
        assert gns_bound(d, N, 1.0, 0.0) > weighted_ghz_bound(v, N, 1.0, 0.0)


class TestNoon:
    def test_heisenberg(self):
        assert noon_individual(1, 7) == pytest.approx(1 / 49)

    def test_four_modes(self):
        assert noon_individual(4, 8) == pytest.approx(0.25)

    @pytest.mark.parametrize("dp,nf", [(4, 4), (9, 3), (16, 8)])
    def test_rescaled_photons(self, dp, nf):
        N = int(np.sqrt(dp)) * nf
        assert noon_individual(dp, N) == pytest.approx(dp / nf**2)

    def test_divisibility(self):
        with pytest.raises(ValueError):
            noon_individual(3, 8)


class TestImaging:
    @pytest.mark.parametrize("dp", range(2, 8))
    @pytest.mark.parametrize("N", [1, 4])
    def test_gns(self, dp, N):
        v = dp * N * N / (dp + 1) ** 2
        assert imaging_symmetric(v, -1 / dp, dp) == pytest.approx((dp + 1) / (2 * N * N))

    @pytest.mark.parametrize("dp", [1, 2, 5])
    def test_uns(self, dp):
        N = 3
        v = dp * N * N / (dp + 1) ** 2
        assert imaging_symmetric(v, 0.0, dp) == pytest.approx((dp + 1) ** 2 / (4 * dp * N * N))

    @pytest.mark.parametrize("mu", [1, 2])
    def test_trivial(self, mu):
        assert imaging_symmetric(0.25, 0.0, 3, mu) == pytest.approx(1 / mu)

    def test_g_limit(self):
        gs = [g_value(-1 / d, d) for d in range(2, 200)]
        assert np.all(np.diff(gs) > 0)
        assert gs[-1] == pytest.approx(2, abs=0.011)


class TestUnknownReference:
    @pytest.mark.parametrize("v,vr,dp", [(1.0, 2.0, 1), (0.3, 0.7, 3), (5.0, 0.5, 2)])
    def test_separable(self, v, vr, dp):
        assert imaging_unknown_reference(v, vr, 0, 0, dp) == pytest.approx((v + vr) / (2 * v * vr), rel=1e-12)

    def test_equal_separable(self):
        assert imaging_unknown_reference(0.8, 0.8, 0, 0, 4) == pytest.approx(1 / 0.8)

    def test_block_matrix_layout(self):
        f = bounds.unknown_reference_qfim(2.0, 3.0, 0.25, -0.1, 2)
        c_ref = -0.1 * np.sqrt(6)
        np.testing.assert_allclose(f, [[2, 0.5, c_ref], [0.5, 2, c_ref], [c_ref, c_ref, 3]])

    def test_matches_dense_oracle_fixed(self):
        got = imaging_unknown_reference(1.3, 0.6, 0.2, 0.15, 3)
        assert got == pytest.approx(unknown_reference_dense(1.3, 0.6, 0.2, 0.15, 3), rel=1e-9)


@settings(max_examples=200, deadline=None)
@given(v=st.floats(0.05, 20), vr=st.floats(0.05, 20), J=st.floats(-0.9, 0.95), Jr=st.floats(-0.95, 0.95),
       dp=st.integers(1, 8))
def test_unknown_reference_vs_dense(v, vr, J, Jr, dp):
    f = bounds.unknown_reference_qfim(v, vr, J, Jr, dp)
    w = np.linalg.eigvalsh(f)
    assume(w[0] > 1e-3 * w[-1])
    got = imaging_unknown_reference(v, vr, J, Jr, dp)
    want = unknown_reference_dense(v, vr, J, Jr, dp)
    assert got == pytest.approx(want, rel=1e-9, abs=1e-12)


class TestTwoQubit:
    @pytest.mark.parametrize("a", [0.1, 0.5, -0.3])
    def test_g_zero(self, a):
        assert x_min(a, -a) == 0.0

    def test_orthogonal_functions(self):
        # theta = (phi1 + phi2)/sqrt2, (phi1 - phi2)/sqrt2
        assert x_min(np.pi / 4, -np.pi / 4) == 0.0

    def test_pi_over_eight(self):
        g = np.sqrt(2) / 2
        want = (2 - np.sqrt(3.5)) / g
        assert x_min(np.pi / 8, 0.0) == pytest.approx(want, rel=1e-12)
        assert x_min(np.pi / 8, 0.0) == pytest.approx(0.1826758136815995, rel=1e-12)

    def test_grid_minimum(self):
        xs = np.arange(-9990, 9991) * 1e-4
        vals = [two_qubit_nonorthogonal(np.pi / 8, 0.0, x) for x in xs]
        assert abs(xs[int(np.argmin(vals))] - x_min(np.pi / 8, 0.0)) <= 2e-4

    def test_separable_value(self):
        assert two_qubit_nonorthogonal(0.3, 0.2, 0.0) == pytest.approx(2.0)

    def test_dependent_functions_rejected(self):
        with pytest.raises(ValueError):
            two_qubit_nonorthogonal(np.pi / 4, np.pi / 4, 0.1)

    def test_x_range(self):
        with pytest.raises(ValueError):
            two_qubit_nonorthogonal(0.1, 0.1, 1.0)


class TestPropagation:
    def test_one_hot(self):
        assert propagate_variance([0, 1, 0], [3.0, 5.0, 7.0]) == 5.0

    def test_symmetric(self):
        assert propagate_variance(np.ones(2) / np.sqrt(2), [0.3, 0.3]) == pytest.approx(0.3)

    @pytest.mark.parametrize("x", [[2, 1], [1, 2], [3, 3]])
    def test_local_network_reproduced(self, x):
        # per-sensor NO-type states: Var_k = 1/(x_k dlam)^2 with x_k particles on sensor k
        x = np.array(x, float)
        per_sensor = 1 / x**2
        got = propagate_variance(V21, per_sensor)
        assert got == pytest.approx(local_weighted(V21, x, x.sum(), 1.0, 0.0))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            propagate_variance([1, 0], [1.0])


def test_rescale():
    assert bounds.rescale(0.2, 3.0) == pytest.approx(1.8)


def test_report_carries_formula():
    r = bounds.report("ghz_sum", ghz_sum(2, 1, 1, 0), d=2, n=1)
    assert r.value == 0.5 and r.formula == bounds.FORMULAS["ghz_sum"] and r.inputs == {"d": 2, "n": 1}


@settings(max_examples=100, deadline=None)
@given(v=st.lists(st.floats(-5, 5), min_size=1, max_size=6), N=st.integers(1, 30))
def test_bound_chain(v, N):
    v = np.array(v)
    assume(np.linalg.norm(v) > 1e-3)
    v = v / np.linalg.norm(v)
    d = len(v)
    l1sq = np.abs(v).sum() ** 2
    ghz = l1sq / (N * N)
    loc = local_optimal(v, N, 1.0, 0.0)
    # entangled below optimal local, which is below the even local bound; norms bound the gap
    assert 1 / (N * N) <= ghz * (1 + 1e-12)
    assert ghz <= loc * (1 + 1e-12)
    assert loc <= d * d / (N * N) * (1 + 1e-12)
    assert l1sq <= d * (1 + 1e-12)


@settings(max_examples=100, deadline=None)
@given(d=st.integers(1, 12), n=st.integers(1, 10), dl=st.floats(0.1, 5))
def test_ghz_times_d_is_local(d, n, dl):
    assert d * ghz_sum(d, n, dl, 0.0) == pytest.approx(local_sum(d, n * d, dl, 0.0), rel=1e-15)


def admissible_lattice(max_d=4, max_entry=4):
    """Unit vectors with nonnegative integer directions; N_max = ||w||_1 makes them admissible."""
    import itertools
    for d in range(1, max_d + 1):
        for w in itertools.product(range(max_entry + 1), repeat=d):
            if sum(w) and np.gcd.reduce(w) == 1:
                yield np.array(w, float), int(sum(w))


def test_weighted_ghz_below_local_optimal():
    count = 0
    for w, n_max in admissible_lattice():
        v = w / np.linalg.norm(w)
        ghz = weighted_ghz_bound(v, n_max, 1.0, 0.0)
        loc = local_optimal(v, n_max, 1.0, 0.0)
        l1 = np.abs(v).sum()
        if np.count_nonzero(w) == 1:
            assert ghz == pytest.approx(loc, rel=1e-12)
        else:
            assert ghz < loc
        assert ghz / loc <= 1 / l1 * (1 + 1e-12)
        count += 1
    assert count > 300


@pytest.mark.parametrize("dp", range(2, 12))
def test_gns_imaging_worse_than_uns(dp):
    v = dp / (dp + 1) ** 2
    assert imaging_symmetric(v, -1 / dp, dp) > imaging_symmetric(v, 0.0, dp)


@settings(max_examples=100, deadline=None)
@given(a=st.floats(-1.5, 1.5), b=st.floats(-1.5, 1.5))
def test_two_qubit_minimum(a, b):
    assume(abs(np.cos(a + b)) > 1e-3)
    g = np.sin(2 * a) + np.sin(2 * b)
    e0, em = two_qubit_nonorthogonal(a, b, 0.0), two_qubit_nonorthogonal(a, b, x_min(a, b))
    assert em <= e0 + 1e-15
    if abs(g) > 1e-6:
        assert em < e0
