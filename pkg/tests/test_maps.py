import numpy as np
import pytest

from conftest import SX, SY, SZ, random_hermitian, random_lindblad_generator
from dynamap.errors import (
    BranchAmbiguity,
    DimensionMismatch,
    NearSingularMap,
    NonDiagonalizable,
    SingularBasis,
)
from dynamap.maps import (
    DynamicalMapSeries,
    devectorize,
    expm,
    frobenius_diff,
    from_trajectories,
    hamiltonian_superop,
    invert,
    is_trace_preserving,
    logm,
    matrix_units,
    singular_values,
    trace_functional,
    vectorize,
)


class TestVectorize:
    def test_identity_column_stacking(self):
        assert np.array_equal(vectorize(np.eye(2)), np.array([1, 0, 0, 1], dtype=complex))

    def test_basis_element_position(self):
        e01 = np.zeros((2, 2), dtype=complex)
        e01[0, 1] = 1.0
        vec = vectorize(e01)
        assert vec[2] == 1.0 and np.count_nonzero(vec) == 1

    def test_round_trip_exact(self):
        rng = np.random.default_rng(7)
        m = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        assert np.array_equal(devectorize(vectorize(m)), m)

    def test_round_trip_many_dims(self):
        rng = np.random.default_rng(11)
        for dim in (2, 3, 4, 5):
            m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
            assert np.array_equal(devectorize(vectorize(m)), m)

    def test_rejects_non_square(self):
        with pytest.raises(DimensionMismatch):
            vectorize(np.zeros((2, 3)))


class TestFromTrajectories:
    def test_identity_evolution(self):
        basis = matrix_units(2)
        trajs = [[b.copy() for _ in range(4)] for b in basis]
        series = from_trajectories(basis, trajs, dt=0.1)
        for m in series.maps:
            assert np.max(np.abs(m - np.eye(4))) < 1e-14

    def test_matches_semigroup(self):
        rng = np.random.default_rng(3)
        gen = random_lindblad_generator(rng)
        dt, steps = 0.05, 6
        basis = matrix_units(2)
        trajs = [
            [devectorize(expm(gen, n * dt) @ vectorize(b)) for n in range(1, steps + 1)]
            for b in basis
        ]
        series = from_trajectories(basis, trajs, dt=dt)
        for n in range(steps):
            assert frobenius_diff(series.maps[n], expm(gen, (n + 1) * dt)) < 1e-10

    def test_basis_independence(self):
        rng = np.random.default_rng(4)
        gen = random_lindblad_generator(rng)
        dt, steps = 0.05, 5
        half = 0.5 * np.eye(2, dtype=complex)
        pauli_states = [half, half + 0.5 * SX, half + 0.5 * SY, half + 0.5 * SZ]

        def run(basis):
            trajs = [
                [devectorize(expm(gen, n * dt) @ vectorize(b)) for n in range(1, steps + 1)]
                for b in basis
            ]
            return from_trajectories(basis, trajs, dt=dt)

        a = run(matrix_units(2))
        b = run(pauli_states)
        for n in range(steps):
            assert frobenius_diff(a.maps[n], b.maps[n]) < 1e-10

    def test_singular_basis_rejected(self):
        basis = matrix_units(2)
        basis[3] = basis[0]  # linearly dependent
        trajs = [[b.copy()] for b in basis]
        with pytest.raises(SingularBasis):
            from_trajectories(basis, trajs, dt=0.1)

    def test_trace_preservation_propagates(self):
        rng = np.random.default_rng(5)
        gen = random_lindblad_generator(rng, n_jumps=2)
        dt, steps = 0.04, 8
        basis = matrix_units(2)
        trajs = [
            [devectorize(expm(gen, n * dt) @ vectorize(b)) for n in range(1, steps + 1)]
            for b in basis
        ]
        series = from_trajectories(basis, trajs, dt=dt)
        for m in series.maps:
            assert is_trace_preserving(m, 1e-10)


class TestSingularValues:
    def test_identity(self):
        assert np.allclose(singular_values(np.eye(4)), np.ones(4))

    def test_rank_deficient_map(self):
        # two initial states evolve to the same output: column space collapses
        m = np.zeros((4, 4), dtype=complex)
        target = vectorize(np.array([[0.5, 0], [0, 0.5]], dtype=complex))
        m[:, 0] = target
        m[:, 3] = target
        m[:, 1] = vectorize(SX) / 2
        m[:, 2] = vectorize(SY) / 2
        sv = singular_values(m)
        assert sv[-1] < 1e-12
        assert np.all(np.diff(sv) <= 1e-15)

    def test_unitary_invariance(self):
        rng = np.random.default_rng(9)
        m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        h = random_hermitian(rng, 2)
        u = expm(-1j * h, 1.0)
        conj = np.kron(u.conj(), u)
        before = singular_values(m)
        after = singular_values(conj @ m @ conj.conj().T)
        assert np.max(np.abs(before - after)) < 1e-12


class TestInvert:
    def test_identity(self):
        assert np.allclose(invert(np.eye(4)), np.eye(4))

    def test_semigroup_inverse(self):
        rng = np.random.default_rng(13)
        gen = random_lindblad_generator(rng)
        fwd = expm(gen, 0.05)
        assert frobenius_diff(invert(fwd), expm(gen, -0.05)) < 1e-9

    def test_near_singular_raises_with_details(self):
        m = np.diag([1.0, 1.0, 1.0, 0.0]).astype(complex)
        with pytest.raises(NearSingularMap) as err:
            invert(m)
        assert err.value.sigma_min == 0.0
        assert err.value.sigma_max == 1.0


class TestLogmExpm:
    def test_identity_gives_zero(self):
        gen = logm(np.eye(4, dtype=complex), 0.1)
        assert np.max(np.abs(gen)) < 1e-12

    def test_recovers_generator(self):
        rng = np.random.default_rng(17)
        for _ in range(10):
            gen = random_lindblad_generator(rng)
            dt = 0.05  # keeps eigenvalue arguments well inside the branch
            rebuilt = logm(expm(gen, dt), dt)
            assert frobenius_diff(rebuilt, gen) < 1e-8 * max(1.0, np.linalg.norm(gen))

    def test_negative_real_eigenvalue_raises(self):
        with pytest.raises(BranchAmbiguity):
            logm(np.diag([-0.5, 1.0, 1.0, 1.0]).astype(complex), 0.1)

    def test_zero_eigenvalue_raises(self):
        with pytest.raises(BranchAmbiguity):
            logm(np.diag([0.0, 1.0, 1.0, 1.0]).astype(complex), 0.1)

    def test_defective_map_raises(self):
        m = np.eye(4, dtype=complex)
        m[0, 1] = 1.0
        m[1, 1] = 1.0 + 1e-15
        with pytest.raises(NonDiagonalizable):
            logm(m, 0.1)

    def test_poorly_conditioned_uses_fallback(self):
        m = np.diag([2.0, 2.0, 1.0, 1.0]).astype(complex)
        m[0, 1] = 1.0
        m[1, 1] = 2.0 + 1e-7  # eigenvector condition ~ 1e7: fallback regime
        gen = logm(m, 0.1)
        assert frobenius_diff(expm(gen, 0.1), m) < 1e-8 * np.linalg.norm(m)

    def test_expm_zero_generator(self):
        assert np.array_equal(expm(np.zeros((4, 4)), 1.0), np.eye(4))

    def test_expm_diagonal(self):
        gen = np.diag([-1.0, -2.0, -3.0, -4.0]).astype(complex)
        out = expm(gen, 1.0)
        assert np.allclose(np.diag(out), np.exp(np.diag(gen)), rtol=1e-12)

    def test_expm_semigroup_property(self):
        rng = np.random.default_rng(19)
        gen = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        lhs = expm(gen, 0.3) @ expm(gen, 0.45)
        rhs = expm(gen, 0.75)
        assert frobenius_diff(lhs, rhs) <= 1e-10 * np.linalg.norm(rhs)

    def test_round_trip_series(self):
        rng = np.random.default_rng(23)
        for _ in range(5):
            gen = random_lindblad_generator(rng)
            m = expm(gen, 0.08)
            assert frobenius_diff(expm(logm(m, 0.08), 0.08), m) <= 1e-8 * np.linalg.norm(m)


class TestFrobeniusDiff:
    def test_equal_is_zero(self):
        m = np.ones((4, 4))
        assert frobenius_diff(m, m) == 0.0

    def test_identity_vs_zero(self):
        assert frobenius_diff(np.eye(4), np.zeros((4, 4))) == pytest.approx(2.0)

    def test_matches_elementwise_sum(self):
        rng = np.random.default_rng(29)
        a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        b = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        brute = np.sqrt(sum(abs(a[i, j] - b[i, j]) ** 2 for i in range(4) for j in range(4)))
        assert abs(frobenius_diff(a, b) - brute) < 1e-14

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            frobenius_diff(np.eye(4), np.eye(9))


class TestSeriesType:
    def test_times_and_head(self):
        maps = np.stack([np.eye(4, dtype=complex)] * 5)
        series = DynamicalMapSeries(dt=0.5, t0=1.0, maps=maps)
        assert np.allclose(series.times, [1.5, 2.0, 2.5, 3.0, 3.5])
        assert len(series.head(2)) == 2
        assert series.dim == 2

    def test_immutable(self):
        series = DynamicalMapSeries(dt=0.5, t0=0.0, maps=np.stack([np.eye(4, dtype=complex)]))
        with pytest.raises(ValueError):
            series.maps[0, 0, 0] = 2.0

    def test_trace_functional(self):
        w = trace_functional(2)
        rho = np.array([[0.25, 1j], [-1j, 0.75]])
        assert w @ vectorize(rho) == pytest.approx(1.0)

    def test_hamiltonian_superop_action(self):
        h = random_hermitian(np.random.default_rng(31), 2)
        rho = random_hermitian(np.random.default_rng(37), 2)
        lhs = devectorize(hamiltonian_superop(h) @ vectorize(rho))
        rhs = -1j * (h @ rho - rho @ h)
        assert np.max(np.abs(lhs - rhs)) < 1e-14
