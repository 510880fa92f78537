"""Floquet solver: matrix structure, branch tracking, oracle, analytic chain."""

import numpy as np
import pytest
from scipy.special import j1

from strongdrive import floquet as fq
from strongdrive.units import TWO_PI

DELTA = TWO_PI * 2.288


class TestMatrixConstruction:
    def test_dimensions_and_hermiticity(self):
        m = fq.build_floquet_matrix(DELTA, TWO_PI * 1.0, DELTA, 50)
        assert m.entries.shape == (202, 202)
        assert m.dim == 202
        assert np.array_equal(m.entries, m.entries.T)

    def test_block_structure(self):
        m = fq.build_floquet_matrix(3.0, 0.8, 2.0, 2).entries
        # central block at photon index 0 (blocks of 2, index 2 -> rows 4:6)
        assert m[4, 4] == 0.0
        assert m[4, 5] == -1.5
        # coupling to the next block carries -+ A/2 on the two spin rows
        assert m[4, 6] == -0.4
        assert m[5, 7] == 0.4
        assert m[4, 7] == 0.0

    def test_central_block_eigenvalues(self):
        blk = fq.central_block(DELTA)
        assert np.allclose(blk, [[0.0, -DELTA / 2], [-DELTA / 2, 0.0]])
        assert np.allclose(np.linalg.eigvalsh(blk), [-DELTA / 2, DELTA / 2])

    def test_zero_drive_eigenvalues_are_shifted_pairs(self):
        omega = 0.6 * DELTA
        n = 8
        m = fq.build_floquet_matrix(DELTA, 0.0, omega, n)
        got = np.sort(np.linalg.eigvalsh(m.entries))
        want = np.sort(
            np.concatenate(
                [[k * omega - DELTA / 2, k * omega + DELTA / 2] for k in range(-n, n + 1)]
            )
        )
        assert np.max(np.abs(got - want)) < 1e-12 * np.max(np.abs(want))

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            fq.build_floquet_matrix(DELTA, 1.0, DELTA, 0)
        with pytest.raises(ValueError):
            fq.build_floquet_matrix(DELTA, 1.0, -1.0, 5)

    def test_ladder_property(self):
        omega = DELTA
        m = fq.build_floquet_matrix(DELTA, TWO_PI * 1.5, omega, 50)
        evals = np.sort(np.linalg.eigvalsh(m.entries))
        interior = evals[np.abs(evals) < (50 - 10) * omega]
        for e in interior[:: len(interior) // 17 + 1]:
            assert np.min(np.abs(evals - (e + omega))) < 1e-6 * omega


class TestBranchTracking:
    def test_weak_limit_detuned(self):
        for factor in (0.6, 1.4):
            spec = fq.quasienergy_sweep(DELTA, factor * DELTA, [0.0])[0]
            assert spec.delta_eps == pytest.approx(abs(DELTA - factor * DELTA), abs=1e-12)

    def test_resonant_zero_drive_degenerate(self):
        spec = fq.quasienergy_sweep(DELTA, DELTA, [0.0])[0]
        assert spec.delta_eps == pytest.approx(0.0, abs=1e-12)
        assert spec.limit_convention

    def test_eigenvector_normalization_and_residual(self):
        amp = TWO_PI * 1.33
        spec = fq.quasienergy_sweep(DELTA, DELTA, [amp])[0]
        h = fq.build_floquet_matrix(DELTA, amp, DELTA, spec.truncation_n).entries
        for eps, table in ((spec.eps0, spec.u0), (spec.eps1, spec.u1)):
            v = table.reshape(-1).real
            assert abs(np.linalg.norm(v) - 1.0) < 1e-10
            resid = np.linalg.norm(h @ v - eps * v)
            assert resid < 1e-9 * np.linalg.norm(h, 2)

    def test_mod_omega_classes_distinct(self):
        spec = fq.quasienergy_sweep(DELTA, DELTA, [TWO_PI * 1.0])[0]
        m0, m1 = spec.mod_omega()
        assert fq.zone_distance(m0, m1, spec.omega) > 1e-3

    def test_resonant_limit_states(self):
        # A -> 0+ on resonance: u0 -> (|0> - |1>)/sqrt2, u1 -> (|0> + |1>)/sqrt2
        spec = fq.quasienergy_sweep(DELTA, DELTA, [TWO_PI * 1e-4])[0]
        basis = spec.states_at(0.0)
        minus = np.array([1.0, -1.0]) / np.sqrt(2.0)
        plus = np.array([1.0, 1.0]) / np.sqrt(2.0)
        assert abs(abs(np.vdot(minus, basis[:, 0])) - 1.0) < 1e-3
        assert abs(abs(np.vdot(plus, basis[:, 1])) - 1.0) < 1e-3

    def test_truncation_convergence(self):
        amp = TWO_PI * 4.78
        de50 = fq.quasienergy_sweep(DELTA, DELTA, [amp], 50)[0].delta_eps
        de30 = fq.quasienergy_sweep(DELTA, DELTA, [amp], 30)[0].delta_eps
        assert abs(de50 - de30) < 1e-10

    def test_quasienergies_entry_point(self):
        m = fq.build_floquet_matrix(DELTA, TWO_PI * 1.0, DELTA)
        spec = fq.quasienergies(m)
        sweep = fq.quasienergy_sweep(DELTA, DELTA, [TWO_PI * 1.0])[0]
        assert spec.delta_eps == pytest.approx(sweep.delta_eps, abs=1e-12)


class TestMonodromyOracle:
    def test_zero_drive(self):
        omega = 0.6 * DELTA
        eps = fq.monodromy_quasienergies(DELTA, 0.0, omega)
        expect = sorted(
            (fq.reduce_to_zone(-DELTA / 2, omega), fq.reduce_to_zone(DELTA / 2, omega))
        )
        assert np.allclose(eps, expect, atol=1e-10)

    def test_zero_splitting_pure_drive(self):
        eps = fq.monodromy_quasienergies(0.0 + 1e-300, TWO_PI * 2.0, TWO_PI * 1.0)
        assert abs(eps[0]) < 1e-9 and abs(eps[1]) < 1e-9

    def test_matches_floquet_matrix(self):
        # the oracle-equivalence property, spot-checked over the scan range
        rng = np.random.default_rng(11)
        for factor in (1.0, 0.6, 1.4):
            omega = factor * DELTA
            amps = np.sort(rng.uniform(0.0, 3.5 * omega, 6))
            specs = fq.quasienergy_sweep(DELTA, omega, amps)
            oracle = fq.monodromy_quasienergies_batch(DELTA, amps, omega)
            for s, pair in zip(specs, oracle):
                for x in s.mod_omega():
                    assert min(fq.zone_distance(x, y, omega) for y in pair) < 1e-8

    def test_convergence_in_step(self):
        omega = DELTA
        period = TWO_PI / omega
        a = TWO_PI * 2.0
        e1 = fq.monodromy_quasienergies(DELTA, a, omega, period / 2000)
        e2 = fq.monodromy_quasienergies(DELTA, a, omega, period / 4000)
        assert abs(e1[0] - e2[0]) < 1e-9

    def test_bad_step_rejected(self):
        with pytest.raises(ValueError):
            fq.monodromy_quasienergies(DELTA, 1.0, DELTA, -1.0)


class TestAnalyticChain:
    def test_zero_drive_exact(self):
        for factor in (1.0, 0.6, 1.4):
            omega = factor * DELTA
            assert fq.analytic_delta_epsilon(DELTA, 0.0, omega) == abs(omega - DELTA)

    def test_weak_drive_resonant(self):
        for a in np.linspace(1e-4, 0.1, 20) * DELTA:
            got = fq.analytic_delta_epsilon(DELTA, a, DELTA)
            assert got == pytest.approx(a, rel=0.01)

    def test_first_j0_zero_point(self):
        # 2A/w at the first zero of J0: Omega = w * sqrt(1 + J1^2)
        x0 = 2.404825557695773
        a = 0.5 * x0 * DELTA
        got = fq.analytic_delta_epsilon(DELTA, a, DELTA)
        want = DELTA * np.hypot(1.0, j1(x0))
        assert got == pytest.approx(want, rel=1e-12)
        assert got / DELTA == pytest.approx(1.1268, abs=2e-4)

    def test_quasienergy_pair_consistency(self, rng):
        for _ in range(100):
            d, a, w = rng.uniform(0.5, 30.0, 3)
            e0, e1 = fq.analytic_quasienergies(d, a, w)
            assert e1 - e0 == pytest.approx(fq.analytic_delta_epsilon(d, a, w), rel=1e-14)

    def test_block_eigenvalues_match_closed_form(self, rng):
        for _ in range(100):
            d, a, w = rng.uniform(0.5, 30.0, 3)
            evals = np.sort(np.linalg.eigvalsh(fq.truncated_2x2_block(d, a, w)))
            want = np.array(fq.analytic_quasienergies(d, a, w))
            assert np.max(np.abs(evals - want)) < 1e-12 * max(1.0, w)

    def test_4x4_contains_block_after_transform(self, rng):
        s = fq.block_basis_transform()
        assert np.allclose(s.T @ s, np.eye(4), atol=1e-15)
        d, a, w = 14.4, 6.0, 13.0
        h4 = fq.truncated_4x4_hamiltonian(d, a, w)
        tilde = s.T @ h4 @ s
        block = tilde[1:3, 1:3]
        assert np.allclose(block, fq.truncated_2x2_block(d, a, w), atol=1e-14)

    def test_4x4_zero_drive_degenerates(self):
        h4 = fq.truncated_4x4_hamiltonian(DELTA, 0.0, DELTA)
        evals = np.sort(np.linalg.eigvalsh(h4))
        want = np.sort([-DELTA - DELTA / 2, -DELTA + DELTA / 2, -DELTA / 2, DELTA / 2])
        assert np.allclose(evals, want, atol=1e-12)


class TestFrequencyComponents:
    def test_degenerate_delta_eps(self):
        got = fq.frequency_components(0.0, TWO_PI * 2.288, 2)
        assert np.allclose(got, [0.0, 2 * TWO_PI * 2.288], atol=1e-9)

    def test_weak_drive_set(self):
        omega = TWO_PI * 2.288
        de = TWO_PI * 0.1
        got = fq.frequency_components(de, omega, 2)
        # the spec's quoted members, in GHz
        for val in (0.1, 2 * 2.288 - 0.1, 2 * 2.288, 2 * 2.288 + 0.1):
            assert np.min(np.abs(got / TWO_PI - val)) < 1e-9
        assert got[0] == 0.0  # n = 0 carrier line is part of the set

    def test_sorted_dedup_nonnegative(self):
        got = fq.frequency_components(TWO_PI * 1.373, TWO_PI * 1.373, 4)
        assert np.all(np.diff(got) > 0.0)
        assert got[0] >= 0.0

    def test_negative_n_max_rejected(self):
        with pytest.raises(ValueError):
            fq.frequency_components(1.0, 1.0, -1)
