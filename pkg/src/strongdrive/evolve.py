"""Pulse-level Schroedinger propagation and Floquet-frame analysis.

All evolution runs through the unitary Magnus stepper in ``_magnus``:
propagators are advanced as 2x2 unitaries and applied to states, so the norm
is conserved to machine precision.  Integration sub-intervals never straddle
an envelope kink (segment boundaries are mesh points), which preserves the
4th-order accuracy of the stepper for the cosine-edged pulses.

Batched drivers cover the two scan geometries that dominate the figures:
amplitude batches of continuous-drive traces, and plateau-duration batches
sharing the rise segment with the fall segments propagated as one batch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._magnus import (
    IDENTITY2,
    STEP_FLOOR,
    magnus_segment,
    matmul2,
    unitarity_defect,
)
from .errors import AccuracyError, BasisDegeneracyError
from .floquet import FloquetSpectrum, quasienergy_sweep
from .model import PulseSpec, QubitParams, StateVector, envelope
from .units import TWO_PI

#: Quasienergy splitting below which the Floquet basis is treated as
#: degenerate (rad/ns).
DEGENERACY_TOL = 1e-9


@dataclass(frozen=True)
class Trajectory:
    """Sampled evolution: times (ns), states (n, 2), P1 and Bloch components."""

    times: np.ndarray
    states: np.ndarray
    p1: np.ndarray
    bloch: np.ndarray

    def __len__(self) -> int:
        return len(self.times)

    def state_at(self, i: int) -> StateVector:
        return StateVector.from_array(self.states[i])


@dataclass(frozen=True)
class FloquetFrameCoeffs:
    """Amplitudes on the instantaneous quasienergy states u0, u1.

    ``accumulated_phase`` is the dynamical phase integral of delta_eps up to
    the decomposition time; it is bookkeeping supplied by trajectory-level
    analyses (a single-time decomposition cannot know the pulse history).
    """

    c0: complex
    c1: complex
    accumulated_phase: float = 0.0


def _states_from_unitaries(u, psi0):
    """Apply (…, 2, 2) propagators to a fixed initial state."""
    psi0 = np.asarray(psi0, dtype=complex).reshape(2)
    return u[..., :, 0] * psi0[0] + u[..., :, 1] * psi0[1]


def _bloch_components(states):
    z = np.conj(states[..., 0]) * states[..., 1]
    return np.stack(
        [2.0 * z.real, 2.0 * z.imag, np.abs(states[..., 0]) ** 2 - np.abs(states[..., 1]) ** 2],
        axis=-1,
    )


def default_step(pulse: PulseSpec) -> float:
    """Default integrator step: min(T/200, t_r/50, t_f/50) over nonzero edges."""
    cands = [TWO_PI / pulse.carrier / 200.0]
    if pulse.t_rise > 0.0:
        cands.append(pulse.t_rise / 50.0)
    if pulse.t_fall > 0.0:
        cands.append(pulse.t_fall / 50.0)
    return min(cands)


def _segment_boundaries(pulse: PulseSpec, t0: float, t1: float):
    cuts = [t0, t1]
    for b in (pulse.t_rise, pulse.t_rise + pulse.t_plateau, pulse.total, 0.0):
        if t0 < b < t1:
            cuts.append(b)
    return np.unique(np.asarray(cuts, dtype=float))


def _drive_fn(pulse: PulseSpec):
    def x_of_t(t):
        a = envelope(pulse, t, allow_outside=True)
        return a * np.cos(pulse.carrier * t + pulse.carrier_phase)

    return x_of_t


def evolve_interval(
    params: QubitParams,
    pulse: PulseSpec,
    t0: float,
    t1: float,
    *,
    target_step: float | None = None,
    u0=None,
) -> np.ndarray:
    """Propagator of the pulse Hamiltonian over [t0, t1] (drive = 0 outside
    the pulse support)."""
    if t1 < t0:
        raise ValueError("t1 must be >= t0")
    step = target_step if target_step is not None else default_step(pulse)
    u = IDENTITY2.copy() if u0 is None else u0
    x_of_t = _drive_fn(pulse)
    hz = -0.5 * params.delta
    cuts = _segment_boundaries(pulse, t0, t1)
    for a, b in zip(cuts[:-1], cuts[1:]):
        n = max(1, int(np.ceil((b - a) / step)))
        u = magnus_segment(u, x_of_t, hz, a, b, n)
    return u


def propagate(
    params: QubitParams,
    pulse: PulseSpec,
    initial: StateVector | None = None,
    sample_dt: float = 0.005,
    *,
    target_step: float | None = None,
    refine: bool = True,
) -> Trajectory:
    """Integrate i dpsi/dt = H(t) psi over the pulse, sampled every sample_dt.

    With ``refine`` the internal step is halved until the final P1 changes by
    less than 1e-8 between refinements; hitting the step floor raises
    AccuracyError.
    """
    if sample_dt <= 0.0:
        raise ValueError("sample_dt must be positive")
    psi0 = StateVector.ground().as_array() if initial is None else initial.as_array()

    n_samp = int(np.floor(pulse.total / sample_dt + 1e-9))
    times = np.arange(n_samp + 1) * sample_dt
    if pulse.total - times[-1] > 1e-12:
        times = np.append(times, pulse.total)

    step = target_step if target_step is not None else default_step(pulse)
    result = _propagate_sampled(params, pulse, times, step)
    if refine:
        while True:
            finer = _propagate_sampled(params, pulse, times, step / 2.0)
            p1_a = np.abs(_states_from_unitaries(result[-1], psi0)[1]) ** 2
            p1_b = np.abs(_states_from_unitaries(finer[-1], psi0)[1]) ** 2
            if abs(p1_a - p1_b) < 1e-8:
                result = finer
                break
            step /= 2.0
            result = finer
            if step < STEP_FLOOR:
                raise AccuracyError(
                    "propagation did not converge above the step floor"
                )
    states = _states_from_unitaries(np.stack(result), psi0)
    return Trajectory(
        times=times,
        states=states,
        p1=np.abs(states[:, 1]) ** 2,
        bloch=_bloch_components(states),
    )


def _propagate_sampled(params, pulse, times, step):
    x_of_t = _drive_fn(pulse)
    hz = -0.5 * params.delta
    u = IDENTITY2.copy()
    out = [u]
    for t0, t1 in zip(times[:-1], times[1:]):
        cuts = _segment_boundaries(pulse, t0, t1)
        for a, b in zip(cuts[:-1], cuts[1:]):
            n = max(1, int(np.ceil((b - a) / step)))
            u = magnus_segment(u, x_of_t, hz, a, b, n)
        out.append(u)
    return out


# ---------------------------------------------------------------------------
# Batched scan drivers
# ---------------------------------------------------------------------------


def continuous_drive_states(
    params: QubitParams,
    amplitudes,
    omega: float,
    times,
    *,
    carrier_phase: float = 0.0,
    initial: StateVector | None = None,
    target_step: float | None = None,
    refine: bool = True,
):
    """States under the un-enveloped drive A cos(wt+phi) at each time.

    Batched over amplitudes; returns an array of shape (n_amp, n_time, 2).
    Equivalent to zero-edge pulses of every duration in ``times``, since the
    Hamiltonians agree on [0, t] for each duration t.
    """
    amps = np.atleast_1d(np.asarray(amplitudes, dtype=float))
    times = np.asarray(times, dtype=float)
    if times[0] != 0.0 or np.any(np.diff(times) <= 0.0):
        raise ValueError("times must start at 0 and increase")
    psi0 = StateVector.ground().as_array() if initial is None else initial.as_array()
    step = target_step if target_step is not None else TWO_PI / omega / 200.0

    def run(h):
        def x_of_t(t):
            return amps[:, None] * np.cos(omega * t + carrier_phase)[None, :]

        u = np.broadcast_to(IDENTITY2, (len(amps), 2, 2)).copy()
        out = np.empty((len(times), len(amps), 2, 2), dtype=complex)
        out[0] = u
        hz = -0.5 * params.delta
        for i, (t0, t1) in enumerate(zip(times[:-1], times[1:])):
            n = max(1, int(np.ceil((t1 - t0) / h)))
            u = magnus_segment(u, x_of_t, hz, t0, t1, n)
            out[i + 1] = u
        return out

    u_all = run(step)
    if refine:
        while True:
            finer = run(step / 2.0)
            d = np.max(
                np.abs(
                    np.abs(_states_from_unitaries(u_all[-1], psi0)[:, 1]) ** 2
                    - np.abs(_states_from_unitaries(finer[-1], psi0)[:, 1]) ** 2
                )
            )
            u_all = finer
            if d < 1e-8:
                break
            step /= 2.0
            if step < STEP_FLOOR:
                raise AccuracyError("batched propagation did not converge")
    states = _states_from_unitaries(np.swapaxes(u_all, 0, 1), psi0)
    return states


def final_states_for_durations(
    params: QubitParams,
    pulse_template: PulseSpec,
    durations,
    *,
    initial: StateVector | None = None,
    target_step: float | None = None,
    refine: bool = True,
):
    """Final state of one pulse per plateau duration, batched.

    Durations index the plateau length t_p; the rise [0, t_r] is shared, the
    plateau propagator is accumulated cumulatively, and the falls (whose
    envelope start times differ per duration) run as one batch.  The result
    is the same quantity as one independent propagation per duration.
    """
    durs = np.atleast_1d(np.asarray(durations, dtype=float))
    if np.any(durs < 0.0) or np.any(np.diff(durs) < 0.0):
        raise ValueError("durations must be >= 0 and non-decreasing")
    psi0 = StateVector.ground().as_array() if initial is None else initial.as_array()
    step0 = (
        target_step
        if target_step is not None
        else default_step(pulse_template)
    )

    def run(h):
        return _duration_batch_unitaries(params, pulse_template, durs, h)

    u = run(step0)
    if refine:
        step = step0
        while True:
            finer = run(step / 2.0)
            d = np.max(
                np.abs(
                    np.abs(_states_from_unitaries(u, psi0)[:, 1]) ** 2
                    - np.abs(_states_from_unitaries(finer, psi0)[:, 1]) ** 2
                )
            )
            u = finer
            if d < 1e-8:
                break
            step /= 2.0
            if step < STEP_FLOOR:
                raise AccuracyError("duration sweep did not converge")
    return _states_from_unitaries(u, psi0)


def _duration_batch_unitaries(params, template, durs, step):
    am = template.amplitude_max
    omega, phi = template.carrier, template.carrier_phase
    t_r, t_f = template.t_rise, template.t_fall
    hz = -0.5 * params.delta

    # shared rise
    u_r = IDENTITY2.copy()
    if t_r > 0.0:
        rise_pulse = PulseSpec(am, omega, t_r, max(durs[-1], 1.0), t_f, phi)

        def x_rise(t):
            return envelope(rise_pulse, t, allow_outside=True) * np.cos(omega * t + phi)

        u_r = magnus_segment(u_r, x_rise, hz, 0.0, t_r, max(1, int(np.ceil(t_r / step))))

    # cumulative plateau, recorded at every requested duration
    u_p = np.empty((len(durs), 2, 2), dtype=complex)
    u = IDENTITY2.copy()

    def x_plateau(t):
        return am * np.cos(omega * t + phi)

    prev = 0.0
    for i, d in enumerate(durs):
        if d > prev:
            n = max(1, int(np.ceil((d - prev) / step)))
            u = magnus_segment(u, x_plateau, hz, t_r + prev, t_r + d, n)
            prev = d
        u_p[i] = u

    out = matmul2(u_p, np.broadcast_to(u_r, u_p.shape))

    # batched falls: local fall time s in [0, t_f], start times differ
    if t_f > 0.0:
        starts = t_r + durs

        def x_fall(s):
            env = 0.5 * am * (1.0 + np.cos(np.pi * s / t_f))
            return env[None, :] * np.cos(omega * (starts[:, None] + s[None, :]) + phi)

        u_f = np.broadcast_to(IDENTITY2, (len(durs), 2, 2)).copy()
        u_f = magnus_segment(
            u_f, x_fall, hz, 0.0, t_f, max(1, int(np.ceil(t_f / step)))
        )
        out = matmul2(u_f, out)
    return out


def sweep_pulse_duration(
    params: QubitParams,
    pulse_template: PulseSpec,
    durations,
    *,
    shots: int | None = None,
    seed: int | None = None,
    target_step: float | None = None,
    refine: bool = True,
):
    """Final-state P1 for one pulse per plateau duration.

    With ``shots`` set, also draws binomial(shots, P1) counts per duration
    from independent per-point streams split off the master seed, so results
    do not depend on evaluation order.
    """
    durs = np.atleast_1d(np.asarray(durations, dtype=float))
    if durs.size == 0:
        raise ValueError("durations must be non-empty")
    states = final_states_for_durations(
        params, pulse_template, durs, target_step=target_step, refine=refine
    )
    p1 = np.abs(states[:, 1]) ** 2
    if shots is None:
        return p1
    seqs = np.random.SeedSequence(seed).spawn(len(durs))
    counts = np.array(
        [np.random.default_rng(s).binomial(shots, p) for s, p in zip(seqs, np.clip(p1, 0.0, 1.0))]
    )
    return p1, counts


# ---------------------------------------------------------------------------
# Pulse trains (calibration sequences)
# ---------------------------------------------------------------------------


def propagate_train(
    params: QubitParams,
    pulses,
    initial: StateVector | None = None,
    *,
    target_step: float | None = None,
) -> StateVector:
    """Apply back-to-back pulses with a phase-coherent carrier.

    Pulse k starting at absolute time t_k contributes
    env_k(t - t_k) * cos(omega t + phi_k): envelopes shift, the carrier runs
    in absolute time, so equal-phase pulses share a rotation axis regardless
    of their start times.
    """
    psi = (StateVector.ground() if initial is None else initial).as_array()
    hz = -0.5 * params.delta
    t_abs = 0.0
    u = IDENTITY2.copy()
    for pulse in pulses:
        step = target_step if target_step is not None else default_step(pulse)
        start = t_abs

        def x_of_t(t, _pulse=pulse, _start=start):
            a = envelope(_pulse, t - _start, allow_outside=True)
            return a * np.cos(_pulse.carrier * t + _pulse.carrier_phase)

        cuts = start + _segment_boundaries(pulse, 0.0, pulse.total)
        for a, b in zip(cuts[:-1], cuts[1:]):
            n = max(1, int(np.ceil((b - a) / step)))
            u = magnus_segment(u, x_of_t, hz, a, b, n)
        t_abs += pulse.total
    final = u @ psi
    return StateVector.from_array(final)


# ---------------------------------------------------------------------------
# Floquet-frame analysis
# ---------------------------------------------------------------------------


def floquet_frame_decompose(
    state: StateVector,
    spectrum: FloquetSpectrum,
    t: float,
    *,
    carrier_phase: float = 0.0,
    accumulated_phase: float = 0.0,
) -> FloquetFrameCoeffs:
    """Project a state onto the instantaneous quasienergy states at time t."""
    if spectrum.delta_eps < DEGENERACY_TOL and not spectrum.limit_convention:
        raise BasisDegeneracyError(
            "quasienergy branches degenerate; Floquet basis ill-defined"
        )
    basis = spectrum.states_at(t, carrier_phase)
    psi = state.as_array()
    c0 = np.vdot(basis[:, 0], psi)
    c1 = np.vdot(basis[:, 1], psi)
    return FloquetFrameCoeffs(complex(c0), complex(c1), accumulated_phase)


def branch_interpolants(
    delta: float, omega: float, amp_max: float, truncation_n: int = 50, n_grid: int = 101
):
    """(eps0(A), eps1(A)) interpolants from one tracked sweep to amp_max."""
    amps = np.linspace(0.0, max(amp_max, 1e-12), n_grid)
    specs = quasienergy_sweep(delta, omega, amps, truncation_n)
    e0 = np.array([s.eps0 for s in specs])
    e1 = np.array([s.eps1 for s in specs])
    return (
        lambda a: np.interp(a, amps, e0),
        lambda a: np.interp(a, amps, e1),
        specs,
    )


def delta_eps_integral(
    pulse: PulseSpec, eps_fn, t0: float, t1: float, n: int = 2001
) -> float:
    """Simpson quadrature of eps_fn(A(t)) over [t0, t1]."""
    if t1 <= t0:
        return 0.0
    if n % 2 == 0:
        n += 1
    t = np.linspace(t0, t1, n)
    y = eps_fn(envelope(pulse, t, allow_outside=True))
    h = (t1 - t0) / (n - 1)
    w = np.ones(n)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return float(h / 3.0 * np.sum(w * y))


def edge_transition_unitary(
    params: QubitParams,
    pulse: PulseSpec,
    edge: str,
    *,
    truncation_n: int = 50,
    target_step: float | None = None,
) -> np.ndarray:
    """Map between Floquet bases across a pulse edge, dynamical phase removed.

    For the rise: from the A = 0 basis at the pulse start to the basis at
    A_m when the plateau begins.  For the fall: from the A_m basis at the
    plateau end back to the A = 0 basis.  The branch dynamical phases
    exp(-i Int eps_j(A(t)) dt) across the edge are divided out, so an
    adiabatic edge yields a diagonal (phase-only) matrix.
    """
    if edge not in ("rise", "fall"):
        raise ValueError("edge must be 'rise' or 'fall'")
    if edge == "rise":
        t0, t1 = 0.0, pulse.t_rise
        a_from, a_to = 0.0, pulse.amplitude_max
    else:
        t0 = pulse.t_rise + pulse.t_plateau
        t1 = pulse.total
        a_from, a_to = pulse.amplitude_max, 0.0

    f0, f1, specs = branch_interpolants(
        params.delta, pulse.carrier, pulse.amplitude_max, truncation_n
    )
    spec_zero = specs[0]
    spec_full = quasienergy_sweep(
        params.delta, pulse.carrier, [pulse.amplitude_max], truncation_n
    )[0]
    if pulse.amplitude_max > 0.0 and spec_full.delta_eps < DEGENERACY_TOL:
        raise BasisDegeneracyError("degenerate quasienergies at the plateau amplitude")

    p_from = (spec_zero if a_from == 0.0 else spec_full).states_at(t0, pulse.carrier_phase)
    p_to = (spec_zero if a_to == 0.0 else spec_full).states_at(t1, pulse.carrier_phase)

    u_lab = evolve_interval(params, pulse, t0, t1, target_step=target_step)
    phi0 = delta_eps_integral(pulse, f0, t0, t1)
    phi1 = delta_eps_integral(pulse, f1, t0, t1)

    w = p_to.conj().T @ u_lab @ p_from
    w = np.diag(np.exp(1j * np.array([phi0, phi1]))) @ w
    defect = unitarity_defect(w[None, ...])
    if defect > 1e-8:
        raise AccuracyError(f"edge transition unitarity defect {defect:.2e}")
    return w


# ---------------------------------------------------------------------------
# State preparation
# ---------------------------------------------------------------------------


def prepare_state(
    params: QubitParams,
    target: StateVector,
    amp: float,
    edges: float,
    *,
    carrier: float | None = None,
    t_max: float | None = None,
    fidelity_floor: float = 0.0,
) -> tuple[PulseSpec, float]:
    """Scan plateau duration and carrier phase for the best target fidelity.

    Amplitude and edge times stay fixed.  The plateau window brackets the
    first Rabi crest for the target (the shortest preparation, which is what
    made the sub-nanosecond pulses interesting): the crest estimate comes
    from the accumulated quasienergy phase matching the Bloch angle between
    |0> and the target.  Coarse scan then local refinement at 0.5 ps and a
    full carrier-phase circle.  Returns the best pulse and the achieved
    state fidelity |<target|psi>|.
    """
    from .floquet import analytic_delta_epsilon

    omega = params.delta if carrier is None else carrier
    de = analytic_delta_epsilon(params.delta, amp, omega)
    tgt = target.as_array()

    if t_max is not None:
        lo, hi = 0.0, t_max
    else:
        # Bloch angle from +z to the target sets the needed rotation.
        angle = float(np.arccos(np.clip(target.bloch().sz, -1.0, 1.0)))
        t_star = max(angle / de - edges, 0.0)
        lo, hi = 0.55 * t_star, 1.4 * t_star + 0.05

    def scan(durs, phases):
        best = (-1.0, None, None)
        for phi in phases:
            template = PulseSpec(amp, omega, edges, 0.0, edges, phi)
            states = final_states_for_durations(
                params,
                template,
                durs,
                refine=False,
                target_step=min(default_step(template), 2e-3),
            )
            fid = np.abs(states @ tgt.conj())
            i = int(np.argmax(fid))
            if fid[i] > best[0]:
                best = (float(fid[i]), float(durs[i]), float(phi))
        return best

    coarse_durs = np.arange(lo, hi, 0.004)
    if coarse_durs.size == 0:
        coarse_durs = np.array([lo])
    coarse_phis = np.linspace(0.0, TWO_PI, 24, endpoint=False)
    f_c, d_c, p_c = scan(coarse_durs, coarse_phis)

    fine_durs = np.arange(max(0.0, d_c - 0.006), d_c + 0.006, 0.0005)
    fine_phis = p_c + np.linspace(-0.15, 0.15, 31)
    f_b, d_b, p_b = scan(fine_durs, fine_phis)

    best_pulse = PulseSpec(amp, omega, edges, d_b, edges, p_b % TWO_PI)
    if f_b < fidelity_floor:
        pass  # reported, not fatal
    return best_pulse, f_b
