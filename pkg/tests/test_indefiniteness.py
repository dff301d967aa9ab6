import math

import numpy as np
import pytest

from qmeasure import (
    EmptyRegion,
    GridSpace,
    Hamiltonian,
    LinearOperator,
    PureState,
    SIGMA_X,
    SIGMA_Z,
    basis_state,
    born_distribution,
    delocalization_demo,
    ee_link_status,
    free_hamiltonian,
    gaussian_packet,
    indefiniteness_scan,
    invariant_subspace_check,
    region_projector,
    spectral_decompose,
    truncated_gaussian_packet,
)
from conftest import random_hermitian, random_projector, random_state

OBS_Z = spectral_decompose(SIGMA_Z)


class TestEeLinkStatus:
    def test_eigenstate_is_definite(self):
        report = ee_link_status(basis_state(2, 0), OBS_Z)
        assert report.is_definite
        assert report.value == pytest.approx(1.0)
        assert report.residual < report.threshold

    def test_superposition_is_indefinite(self):
        report = ee_link_status(PureState([1, 1]), OBS_Z)
        assert not report.is_definite
        assert sorted(v for v, _ in report.support) == [-1.0, 1.0]
        for _, w in report.support:
            assert w == pytest.approx(0.5, abs=1e-12)

    def test_gaussian_vs_smaller_regions_is_indefinite(self):
        # weight escapes every window that cuts the packet within the range
        # double precision can resolve (far tails underflow to exact zeros)
        g = GridSpace(256, 60.0)
        psi = gaussian_packet(g, 0.0, 0.0, 0.8)
        for halfwidth in (4, 8, 12):
            window = (128 - halfwidth, 128 + halfwidth)
            report = ee_link_status(psi, region_projector(g, window))
            assert not report.is_definite

    def test_phase_invariance(self, rng):
        obs = spectral_decompose(random_hermitian(rng, 4))
        s = random_state(rng, 4)
        rotated = PureState(np.exp(1j * 1.234) * s.amplitudes)
        a = ee_link_status(s, obs)
        b = ee_link_status(rotated, obs)
        assert a.status == b.status
        assert [v for v, _ in a.support] == [v for v, _ in b.support]
        np.testing.assert_allclose([w for _, w in a.support],
                                   [w for _, w in b.support], atol=1e-12)

    def test_definite_implies_born_point_mass(self, rng):
        obs = spectral_decompose(random_hermitian(rng, 4))
        s = PureState(obs.eigenbasis(2)[:, 0])
        report = ee_link_status(s, obs)
        assert report.is_definite
        d = born_distribution(s, obs)
        assert d.probability(report.value) == pytest.approx(1.0, abs=1e-10)


class TestRegionProjector:
    def test_full_grid_is_identity(self):
        g = GridSpace(16, 8.0)
        obs = region_projector(g, (0, 16))
        assert obs.n_outcomes == 1
        np.testing.assert_allclose(obs.projector(0).matrix, np.eye(16), atol=1e-12)

    def test_contained_state_has_unit_weight(self):
        g = GridSpace(64, 20.0)
        psi = truncated_gaussian_packet(g, 0.0, 0.0, 1.0, (20, 45))
        obs = region_projector(g, (20, 45))
        d = born_distribution(psi, obs)
        assert d.probability(1.0) == pytest.approx(1.0, abs=1e-12)

    def test_gaussian_tail_weight_oracle(self):
        g = GridSpace(512, 120.0)
        L = 1.1
        psi = gaussian_packet(g, 0.0, 0.0, L)
        halfwidth = int(round(5 * L / g.dx))
        obs = region_projector(g, (256 - halfwidth, 256 + halfwidth + 1))
        inside = born_distribution(psi, obs).probability(1.0)
        # oracle: Gaussian tail integral, P(|x| > 5L) = erfc(5)
        assert 1.0 - inside == pytest.approx(math.erfc(5.0), rel=0.05)
        assert 1.0 - inside < 1e-5

    def test_eigenvalues_are_binary(self):
        g = GridSpace(16, 8.0)
        obs = region_projector(g, (4, 9))
        assert list(obs.eigenvalues) == [0.0, 1.0]

    def test_empty_region_rejected(self):
        g = GridSpace(16, 8.0)
        with pytest.raises(EmptyRegion):
            region_projector(g, (5, 5))


@pytest.fixture(scope="module")
def setup():
    g = GridSpace(256, 60.0)
    width = 1.0
    half = int(round(3 * width / g.dx))
    window = (128 - half, 128 + half + 1)
    psi0 = truncated_gaussian_packet(g, 0.0, 0.0, width, window)
    return g, free_hamiltonian(g, 1.0), psi0, window


class TestDelocalizationDemo:
    def test_zero_time_means_zero_leak(self, setup):
        g, H, psi0, window = setup
        assert delocalization_demo(g, H, psi0, window, 0.0) == 0.0

    def test_short_time_leak_above_floor(self, setup):
        g, H, psi0, window = setup
        natural = 1.0  # m * width^2
        for exponent in (-1, -2, -3, -4):
            out = delocalization_demo(g, H, psi0, window, (10.0 ** exponent) * natural)
            assert out > 1e-12

    def test_momentum_amplitudes_nowhere_zero(self, setup):
        g, _, psi0, _ = setup
        from qmeasure import fourier_map
        phat = np.abs(fourier_map(g) @ psi0.amplitudes)
        assert float(phat.min()) > 1e-300
        assert np.all(phat > 0)

    def test_rejects_state_with_support_outside(self, setup):
        g, H, _, window = setup
        psi = gaussian_packet(g, 0.0, 0.0, 1.0)
        with pytest.raises(ValueError, match="outside"):
            delocalization_demo(g, H, psi, window, 0.1)


class TestIndefinitenessScan:
    def test_invariant_kernel_identically_zero(self, rng):
        H_op = random_hermitian(rng, 5)
        evals, evecs = np.linalg.eigh(H_op.matrix)
        proj = LinearOperator(evecs[:, :2] @ evecs[:, :2].conj().T)
        psi0 = PureState(evecs[:, 4])
        scan = indefiniteness_scan(Hamiltonian(H_op), psi0, proj,
                                   np.linspace(0, 20, 1000))
        assert scan.classification == "identically-zero"
        assert scan.kernel_invariant

    def test_rabi_oscillation_isolated_zeros(self):
        # oracle: <1|psi(t)|^2 = sin^2(t/2) under H = sigma_x/2, zero at 2 pi n
        H = Hamiltonian(LinearOperator([[0, 0.5], [0.5, 0]]))
        proj = LinearOperator(np.diag([0.0, 1.0]))
        times = np.linspace(0.0, 8 * np.pi, 2001)
        scan = indefiniteness_scan(H, basis_state(2, 0), proj, times)
        assert scan.classification == "isolated-zeros"
        np.testing.assert_allclose(scan.series, np.sin(times / 2) ** 2, atol=1e-10)
        zero_times = times[scan.series <= scan.threshold]
        for t in zero_times:
            nearest = round(t / (2 * np.pi))
            assert abs(t - 2 * np.pi * nearest) < (times[1] - times[0])

    def test_generic_system_never_zero(self, rng):
        H = Hamiltonian(random_hermitian(rng, 8))
        proj = random_projector(rng, 8, 3)
        psi0 = random_state(rng, 8)
        scan = indefiniteness_scan(H, psi0, proj, np.linspace(0, 50, 1500))
        assert scan.classification == "never-zero"
        assert scan.minimum > scan.threshold
        assert not scan.kernel_invariant

    def test_stable_under_grid_refinement(self, rng):
        H = Hamiltonian(random_hermitian(rng, 6))
        proj = random_projector(rng, 6, 2)
        psi0 = random_state(rng, 6)
        coarse = indefiniteness_scan(H, psi0, proj, np.linspace(0, 30, 1000))
        fine = indefiniteness_scan(H, psi0, proj, np.linspace(0, 30, 2000))
        assert coarse.classification == fine.classification

    def test_commuting_projector_constant_series(self, rng):
        H_op = random_hermitian(rng, 5)
        evals, evecs = np.linalg.eigh(H_op.matrix)
        proj = LinearOperator(evecs[:, 1:3] @ evecs[:, 1:3].conj().T)
        psi0 = random_state(rng, 5)
        scan = indefiniteness_scan(Hamiltonian(H_op), psi0, proj,
                                   np.linspace(0, 25, 1000))
        assert np.max(np.abs(scan.series - scan.series[0])) < 1e-10

    def test_rejects_non_projector(self, rng):
        H = Hamiltonian(random_hermitian(rng, 3))
        with pytest.raises(ValueError, match="projector"):
            indefiniteness_scan(H, random_state(rng, 3),
                                LinearOperator(np.diag([0.5, 0.5, 0.0])),
                                np.linspace(0, 1, 1000))

    def test_rejects_sparse_time_grid(self, rng):
        H = Hamiltonian(random_hermitian(rng, 3))
        with pytest.raises(ValueError, match="1000"):
            indefiniteness_scan(H, random_state(rng, 3),
                                LinearOperator(np.diag([1.0, 0.0, 0.0])),
                                np.linspace(0, 1, 50))


class TestInvariantSubspaceCheck:
    def test_function_of_hamiltonian_invariant(self, rng):
        H_op = random_hermitian(rng, 5)
        evals, evecs = np.linalg.eigh(H_op.matrix)
        f_of_h = LinearOperator(evecs @ np.diag(np.cos(evals)) @ evecs.conj().T)
        obs = spectral_decompose(f_of_h)
        assert all(invariant_subspace_check(Hamiltonian(H_op), obs))

    def test_noncommuting_qubit_pair(self):
        assert invariant_subspace_check(Hamiltonian(SIGMA_Z),
                                        spectral_decompose(SIGMA_X)) == [False, False]

    def test_region_projector_not_invariant_under_free_motion(self):
        g = GridSpace(64, 20.0)
        H = free_hamiltonian(g, 1.0)
        obs = region_projector(g, (24, 41))
        assert invariant_subspace_check(H, obs) == [False, False]
        psi0 = truncated_gaussian_packet(g, 0.0, 0.0, 1.0, (26, 39))
        times = np.linspace(0.0, 10.0, 1200)
        inside = obs.projector(1)
        scan = indefiniteness_scan(H, psi0, inside, times[1:])
        assert scan.classification == "never-zero"

    def test_no_invariant_eigenspace_means_persistently_open(self, rng):
        # every projector expectation stays strictly positive at virtually
        # all sampled times once no eigenspace is preserved by the dynamics
        H = Hamiltonian(random_hermitian(rng, 6))
        obs = spectral_decompose(random_projector(rng, 6, 2))
        assert not any(invariant_subspace_check(H, obs))
        times = np.linspace(0.0, 60.0, 2000)
        for _ in range(5):
            psi = random_state(rng, 6)
            for i in range(obs.n_outcomes):
                block = obs.eigenbasis(i)
                proj = LinearOperator(block @ block.conj().T)
                scan = indefiniteness_scan(H, psi, proj, times)
                assert float(np.mean(scan.series > scan.threshold)) >= 0.99
