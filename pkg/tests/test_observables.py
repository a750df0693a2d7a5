import math

import numpy as np
import pytest

from lambdacav.model import SystemParams, build_hamiltonian, build_liouvillian
from lambdacav.observables import (
    absorption,
    compute_observables,
    cooperativity,
    g2_zero,
    g_from_cooperativity,
    intracavity_photon_number,
    output_photon_rate,
    predicted_peak_detunings,
)
from lambdacav.qops import FockTruncation
from lambdacav.steady import solve_steady


def atom_field_projector(atom_level, fock, levels):
    dim = 3 * levels
    rho = np.zeros((dim, dim), dtype=complex)
    idx = (atom_level - 1) * levels + fock
    rho[idx, idx] = 1.0
    return rho


@pytest.fixture(scope="module")
def coherent_state():
    # steady state of the resonantly driven empty cavity; mean photons 0.32
    params = SystemParams(g=0.0, Omega_c=0.0, Omega_p=-0.8j * math.sqrt(0.5), Delta_p=0.0)
    trunc = FockTruncation(12)
    return solve_steady(build_liouvillian(params, trunc), trunc=trunc), params


class TestOutputPhotonRate:
    def test_vacuum(self):
        params = SystemParams()
        assert output_photon_rate(atom_field_projector(1, 0, 4), params) == 0.0

    def test_symmetric_cavity_benchmark(self, coherent_state):
        dm, params = coherent_state
        assert output_photon_rate(dm, params) == pytest.approx(0.32, abs=1e-8)

    def test_closed_right_mirror(self, coherent_state):
        dm, _ = coherent_state
        one_sided = SystemParams(kappa_A=1.0, kappa_B=0.0)
        assert output_photon_rate(dm, one_sided) == 0.0

    def test_linear_in_photon_number(self):
        params = SystemParams()
        levels = 5
        rho1 = atom_field_projector(1, 1, levels)
        rho3 = atom_field_projector(1, 3, levels)
        assert output_photon_rate(rho3, params) == pytest.approx(
            3.0 * output_photon_rate(rho1, params), rel=1e-12
        )


class TestG2Zero:
    def test_coherent_state(self, coherent_state):
        dm, _ = coherent_state
        assert g2_zero(dm) == pytest.approx(1.0, abs=1e-6)

    def test_single_photon_fock(self):
        assert g2_zero(atom_field_projector(1, 1, 5)) == 0.0

    def test_two_photon_fock(self):
        assert g2_zero(atom_field_projector(2, 2, 5)) == pytest.approx(0.5, rel=1e-12)

    def test_vacuum_is_undefined(self):
        assert math.isnan(g2_zero(atom_field_projector(1, 0, 4)))

    def test_invariant_under_field_phase_rotation(self, coherent_state):
        dm, _ = coherent_state
        levels = dm.dim // 3
        phases = np.exp(1j * 0.77 * np.arange(levels))
        u = np.kron(np.eye(3), np.diag(phases))
        rotated = u @ dm.matrix @ u.conj().T
        assert g2_zero(rotated) == pytest.approx(g2_zero(dm), rel=1e-12)


class TestAbsorption:
    def test_diagonal_state_has_none(self):
        rho = np.diag(np.full(12, 1.0 / 12.0)).astype(complex)
        assert absorption(rho) == 0.0

    def test_known_coherence(self):
        levels = 3
        rho = (atom_field_projector(1, 0, levels) + atom_field_projector(3, 0, levels)) / 2.0
        rho[0, 2 * levels] = -0.25j          # <1,0| rho |3,0>
        rho[2 * levels, 0] = 0.25j
        # <sigma_13> = sum_k <3,k| rho |1,k> = 0.25j
        assert absorption(rho) == pytest.approx(0.25, rel=1e-12)

    def test_pumped_steady_state_dark(self):
        params = SystemParams(g=20.0, Omega_c=8.0, Omega_p=0.0, Delta_p=22.0)
        trunc = FockTruncation(4)
        dm = solve_steady(build_liouvillian(params, trunc), trunc=trunc)
        assert absorption(dm) < 1e-10


class TestPredictedPeaks:
    def test_reference_splitting(self):
        peaks = predicted_peak_detunings(20.0, 8.0, 1)
        assert peaks == [pytest.approx(math.sqrt(464.0), rel=1e-15)]
        assert peaks[0] == pytest.approx(21.5407, abs=1e-4)

    def test_degenerate_without_coupling(self):
        assert predicted_peak_detunings(0.0, 8.0, 3) == [8.0, 8.0, 8.0]

    def test_two_excitation_value_against_block_eigensolve(self):
        # dense eigensolve of the two-excitation block {|1,2>, |3,1>, |2,1>}
        params = SystemParams(g=20.0, Omega_c=8.0, Omega_p=0.0, Delta_1=0.0, Delta_c=0.0, Delta_p=0.0)
        trunc = FockTruncation(4)
        h = build_hamiltonian(params, trunc).toarray()
        levels = trunc.levels
        idx = [0 * levels + 2, 2 * levels + 1, 1 * levels + 1]
        top = np.linalg.eigvalsh(h[np.ix_(idx, idx)])[-1]
        predicted = predicted_peak_detunings(20.0, 8.0, 2)[1]
        assert predicted == pytest.approx(top, rel=1e-12)
        assert predicted == pytest.approx(29.3939, abs=1e-4)

    def test_strictly_increasing(self):
        peaks = predicted_peak_detunings(20.0, 8.0, 5)
        assert all(b > a for a, b in zip(peaks, peaks[1:]))
        for n in range(1, 4):
            assert (
                predicted_peak_detunings(25.0, 8.0, n)[-1]
                > predicted_peak_detunings(20.0, 8.0, n)[-1]
            )
            assert (
                predicted_peak_detunings(20.0, 10.0, n)[-1]
                > predicted_peak_detunings(20.0, 8.0, n)[-1]
            )

    def test_rejects_bad_n(self):
        with pytest.raises(ValueError):
            predicted_peak_detunings(20.0, 8.0, 0)


class TestCooperativity:
    def test_reference_value(self):
        assert cooperativity(20.0, 1.0) == 200.0

    def test_zero_coupling(self):
        assert cooperativity(0.0, 1.0) == 0.0

    def test_inverse_map(self):
        assert g_from_cooperativity(250.0, 1.0) == pytest.approx(math.sqrt(500.0), rel=1e-15)

    def test_roundtrip_identity(self):
        for c in (1.0, 85.0, 250.0, 1000.0):
            for gamma in (0.5, 1.0, 2.0):
                assert cooperativity(g_from_cooperativity(c, gamma), gamma) == pytest.approx(
                    c, rel=1e-12
                )

    def test_rejects_nonpositive_gamma(self):
        with pytest.raises(ValueError):
            cooperativity(20.0, 0.0)
        with pytest.raises(ValueError):
            g_from_cooperativity(100.0, -1.0)


class TestComputeObservables:
    def test_bundle_matches_parts(self, coherent_state):
        dm, params = coherent_state
        obs = compute_observables(dm, params)
        assert obs.n_intracavity == intracavity_photon_number(dm)
        assert obs.n_out == output_photon_rate(dm, params)
        assert obs.g2_zero == g2_zero(dm)
        assert obs.absorption == absorption(dm)
        assert obs.n_intracavity >= 0 and obs.n_out >= 0 and obs.absorption >= 0
