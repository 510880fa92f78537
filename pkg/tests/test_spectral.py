"""Spectral estimation: DFT normalization, peaks, classification, fits."""

import numpy as np
import pytest

from strongdrive import spectral
from strongdrive.units import TWO_PI, ghz_to_rad_per_ns


def make_trace(freqs_ghz, amps, span=40.0, dt=0.005, offset=0.5, phases=None):
    t = np.arange(0.0, span + 1e-12, dt)
    v = np.full_like(t, offset)
    phases = phases if phases is not None else [0.0] * len(freqs_ghz)
    for f, a, p in zip(freqs_ghz, amps, phases):
        v += a * np.cos(2 * np.pi * f * t + p)
    return t, v


class TestDft:
    def test_single_tone_peak_position_and_height(self):
        t, v = make_trace([0.5], [1.0])
        sp = spectral.dft(t, v)
        i = int(np.argmax(sp.magnitudes))
        assert abs(sp.freqs[i] - 0.5) <= sp.resolution
        assert sp.magnitudes[i] == pytest.approx(1.0, abs=0.03)
        assert sp.resolution == pytest.approx(1.0 / 40.0, rel=1e-12)

    def test_constant_trace_zero_spectrum(self):
        t = np.arange(0.0, 10.0, 0.01)
        sp = spectral.dft(t, np.full_like(t, 0.7))
        assert np.max(sp.magnitudes) < 1e-12

    def test_freq_axis_uniform_to_nyquist(self):
        t, v = make_trace([0.5], [1.0], dt=0.004)
        sp = spectral.dft(t, v)
        df = np.diff(sp.freqs)
        assert np.max(np.abs(df - df[0])) < 1e-12
        assert sp.freqs[-1] == pytest.approx(0.5 / 0.004, rel=1e-12)

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            spectral.dft([0, 1, 2], [1, 2, 3])  # too short
        t = np.arange(0.0, 1.0, 0.01) ** 1.1  # non-uniform
        with pytest.raises(ValueError):
            spectral.dft(t, np.ones_like(t))
        t, v = make_trace([0.5], [1.0])
        with pytest.raises(ValueError):
            spectral.dft(t, v, window="boxcar")

    def test_parseval_each_window(self):
        t, v = make_trace([0.31, 1.7], [0.6, 0.2], span=25.0, dt=0.01)
        for window in spectral.WINDOWS:
            sp = spectral.dft(t, v, window, 4)
            w = {"hann": np.hanning, "hamming": np.hamming, "rectangular": np.ones}[
                window
            ](len(v))
            energy = float(np.sum(((v - v.mean()) * w) ** 2))
            assert spectral.spectrum_energy(sp) == pytest.approx(energy, rel=1e-9)


class TestFindPeaks:
    def test_single_tone_one_peak(self):
        t, v = make_trace([0.5], [1.0])
        peaks = spectral.find_peaks(spectral.dft(t, v), 0.1)
        assert len(peaks) == 1

    def test_two_tones_resolved(self):
        t, v = make_trace([0.50, 0.65], [1.0, 0.6])
        sp = spectral.dft(t, v)
        peaks = spectral.find_peaks(sp, 0.1)
        assert len(peaks) == 2
        got = np.sort(peaks.frequencies())
        assert abs(got[0] - 0.50) < 0.5 * sp.resolution
        assert abs(got[1] - 0.65) < 0.5 * sp.resolution

    def test_off_bin_interpolation_accuracy(self, rng):
        for _ in range(10):
            f0 = rng.uniform(0.4, 2.0)
            t, v = make_trace([f0], [1.0], phases=[rng.uniform(0, TWO_PI)])
            sp = spectral.dft(t, v)
            peaks = spectral.find_peaks(sp, 0.3)
            assert abs(peaks.frequencies()[0] - f0) < 0.1 * sp.resolution

    def test_sorted_by_amplitude(self):
        t, v = make_trace([0.3, 1.1, 2.2], [0.2, 0.9, 0.5])
        peaks = spectral.find_peaks(spectral.dft(t, v), 0.05)
        amps = peaks.amplitudes()
        assert np.all(np.diff(amps) <= 0.0)

    def test_prominence_validation(self):
        t, v = make_trace([0.5], [1.0])
        with pytest.raises(ValueError):
            spectral.find_peaks(spectral.dft(t, v), 0.0)


class TestClassifyPeaks:
    def test_weak_drive_delta_eps_line(self):
        omega = ghz_to_rad_per_ns(2.288)
        de = ghz_to_rad_per_ns(0.1)
        t, v = make_trace([0.1], [0.4])
        sp = spectral.dft(t, v)
        peaks = spectral.find_peaks(sp, 0.2)
        classified, score = spectral.classify_peaks(peaks, omega, de, 4, sp.resolution)
        assert classified.peaks[0].classification == "n*w+de"
        assert classified.peaks[0].n == 0
        assert score == 0.0

    def test_unassigned_and_odd_score(self):
        omega = ghz_to_rad_per_ns(2.0)
        de = ghz_to_rad_per_ns(0.4)
        # one even line (2w - de = 3.6), one odd line (w = 2.0), one stray
        t, v = make_trace([3.6, 2.0, 1.234], [0.5, 0.2, 0.1])
        sp = spectral.dft(t, v)
        peaks = spectral.find_peaks(sp, 0.05)
        classified, score = spectral.classify_peaks(peaks, omega, de, 4, sp.resolution)
        by_label = {p.classification for p in classified}
        assert "n*w-de" in by_label
        assert "unassigned" in by_label
        assert score == pytest.approx(0.2 / 0.5, abs=0.05)

    def test_even_masking_of_odd_collisions(self):
        # delta_eps = w/2 makes the odd line w - de collide with the even +de
        # at 1.0 GHz; amplitude there must count as classified, not violation
        omega = ghz_to_rad_per_ns(2.0)
        de = 0.5 * omega
        t, v = make_trace([1.0], [0.5])
        sp = spectral.dft(t, v)
        peaks = spectral.find_peaks(sp, 0.2)
        classified, score = spectral.classify_peaks(peaks, omega, de, 4, sp.resolution)
        assert classified.peaks[0].classification == "n*w+de"
        assert score == 0.0  # collided position counts as even, not violation


class TestFastComponentFit:
    def test_synthetic_recovery(self):
        omega = ghz_to_rad_per_ns(2.288)
        de = ghz_to_rad_per_ns(1.3)
        freqs = np.array([de, 2 * omega - de, 2 * omega + de]) / TWO_PI
        t, v = make_trace(freqs, [0.3, 0.05, 0.04], span=30.0, phases=[0.3, 1.1, 2.3])
        lo, hi = spectral.fast_component_amplitudes(t, v, omega, de)
        assert lo == pytest.approx(0.05, abs=1e-3)
        assert hi == pytest.approx(0.04, abs=1e-3)

    def test_short_trace_rejected(self):
        omega = ghz_to_rad_per_ns(2.288)
        de = ghz_to_rad_per_ns(0.05)
        t = np.arange(0.0, 5.0, 0.01)
        with pytest.raises(ValueError):
            spectral.fast_component_amplitudes(t, np.ones_like(t), omega, de)
