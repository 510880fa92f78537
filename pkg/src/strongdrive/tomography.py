"""Tomography pipeline: sampling, MLE reconstruction, bootstrap, calibration.

Measurement model: ideal projective readout of sigma_z after one of three
pre-rotations.  Basis tags and the observable each one maps onto the
measurement axis:

    id    measure sigma_z          sz = 1 - 2 p1
    rx90  Rx(pi/2) then sigma_z    sy = 1 - 2 p1
    ry90  Ry(pi/2) then sigma_z    sx = 2 p1 - 1

with Rx(pi/2) = exp(-i pi sigma_x / 4) and Ry(pi/2) = exp(-i pi sigma_y / 4).
The sign pattern follows from R^dag sigma_z R and is a recorded convention.

Pulse-level calibration reproduces the experiment's procedure: the pulse
length is tuned by the repeated-pulse sequence [Rx(theta)]^(2n+1), which
amplifies an angle error delta into the population as
1 - 2 P1 = sin((2n+1) delta); the y-axis carrier phase is tuned by the
sequence Ry'(pi/2) {[Rx(pi/2)]^2 [Ry'(pi/2)]^2}^n Rx(pi/2).  Composing ideal
rotations shows the latter's exact response to an axis tilt phi is
1 - 2 P1 = -sin((2n+1) phi) (the quoted amplification "2n" is the nominal
factor; the estimators here invert the exact response).
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import NumericError
from .evolve import propagate, propagate_train
from .model import PulseSpec, QubitParams, StateVector
from .units import TWO_PI

BASES = ("id", "rx90", "ry90")

_SQ2 = 1.0 / np.sqrt(2.0)
ROTATIONS = {
    "id": np.eye(2, dtype=complex),
    "rx90": _SQ2 * np.array([[1.0, -1.0j], [-1.0j, 1.0]]),
    "ry90": _SQ2 * np.array([[1.0, -1.0], [1.0, 1.0]]),
}

#: Default pre-rotation pulse parameters: amplitude 2*pi x 0.13 rad/ns,
#: 0.2 ns cosine edges.
PREROTATION_AMPLITUDE = TWO_PI * 0.13
PREROTATION_EDGE = 0.2


@dataclass(frozen=True)
class DensityMatrix:
    """2x2 density matrix: Hermitian, unit trace, positive semidefinite."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError("density matrix must be 2x2")
        if np.max(np.abs(m - m.conj().T)) > 1e-12:
            raise ValueError("density matrix not Hermitian within 1e-12")
        if abs(np.trace(m).real - 1.0) > 1e-12 or abs(np.trace(m).imag) > 1e-12:
            raise ValueError("density matrix trace differs from 1 by > 1e-12")
        if np.min(np.linalg.eigvalsh(m)) < -1e-10:
            raise ValueError("density matrix has eigenvalue < -1e-10")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_matrix(cls, m, normalize: bool = False) -> "DensityMatrix":
        """Build from a raw matrix.

        ``normalize`` repairs matrices quoted at limited precision:
        symmetrize, clip slightly negative eigenvalues (at most 1e-4) to
        zero, and rescale the trace to 1.
        """
        m = np.asarray(m, dtype=complex)
        if normalize:
            m = 0.5 * (m + m.conj().T)
            w, v = np.linalg.eigh(m)
            if np.min(w) < -1e-4:
                raise ValueError("matrix too far from positive semidefinite")
            w = np.clip(w, 0.0, None)
            m = (v * w) @ v.conj().T
            m = m / np.trace(m).real
        return cls(m)

    @classmethod
    def from_state(cls, state: StateVector) -> "DensityMatrix":
        psi = state.as_array()
        return cls(np.outer(psi, psi.conj()))

    def bloch(self) -> np.ndarray:
        m = self.matrix
        return np.array(
            [2.0 * m[0, 1].real, -2.0 * m[0, 1].imag, (m[0, 0] - m[1, 1]).real]
        )


@dataclass(frozen=True)
class ShotRecord:
    """Measured counts in one basis.  ``excited_counts`` may be fractional
    for exact (infinite-shot limit) or bootstrap-resampled records."""

    basis: str
    shots: int
    excited_counts: float
    seed: int | None = None

    def __post_init__(self):
        if self.basis not in BASES:
            raise ValueError(f"basis must be one of {BASES}")
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        if not 0.0 <= self.excited_counts <= self.shots:
            raise ValueError("excited_counts must lie in [0, shots]")

    @property
    def p1(self) -> float:
        return self.excited_counts / self.shots


@dataclass(frozen=True)
class TomographyResult:
    rho: DensityMatrix
    fidelity_to_target: float
    fidelity_stderr: float
    bootstrap_b: int

    def __post_init__(self):
        if not 0.0 <= self.fidelity_to_target <= 1.0:
            raise ValueError("fidelity must lie in [0, 1]")
        if self.fidelity_stderr < 0.0:
            raise ValueError("stderr must be >= 0")


def _as_density(state) -> DensityMatrix:
    if isinstance(state, DensityMatrix):
        return state
    if isinstance(state, StateVector):
        return DensityMatrix.from_state(state)
    raise TypeError("expected StateVector or DensityMatrix")


def measured_p1(state, basis: str) -> float:
    """P1 after the ideal pre-rotation for the basis."""
    rho = _as_density(state).matrix
    r = ROTATIONS[basis]
    return float((r @ rho @ r.conj().T)[1, 1].real)


def simulate_shots(state, basis: str, shots: int, seed=None) -> ShotRecord:
    """Draw binomial(shots, P1) counts after the ideal pre-rotation."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    p = np.clip(measured_p1(state, basis), 0.0, 1.0)
    counts = int(np.random.default_rng(seed).binomial(shots, p))
    return ShotRecord(basis, shots, counts, seed if isinstance(seed, int) else None)


def exact_records(state, shots: int) -> list[ShotRecord]:
    """Infinite-shot-limit records: exact probabilities as fractional counts."""
    return [
        ShotRecord(b, shots, measured_p1(state, b) * shots) for b in BASES
    ]


def bloch_from_records(records) -> np.ndarray:
    """Linear-inversion Bloch vector (may leave the unit ball with noise)."""
    by_basis = {r.basis: r for r in records}
    if set(by_basis) != set(BASES):
        raise ValueError(f"need one record per basis {BASES}")
    sz = 1.0 - 2.0 * by_basis["id"].p1
    sy = 1.0 - 2.0 * by_basis["rx90"].p1
    sx = 2.0 * by_basis["ry90"].p1 - 1.0
    return np.array([sx, sy, sz])


# ---------------------------------------------------------------------------
# Maximum likelihood reconstruction
# ---------------------------------------------------------------------------

_P_CLIP = 1e-12

# Measurement operators M_b = R^dag |1><1| R, so p_b = tr(rho M_b).
_MEAS = {
    b: ROTATIONS[b].conj().T @ np.diag([0.0, 1.0]).astype(complex) @ ROTATIONS[b]
    for b in BASES
}

# d L / d theta for L = [[a, 0], [c + i d, b]].
_DL = (
    np.array([[1, 0], [0, 0]], dtype=complex),
    np.array([[0, 0], [0, 1]], dtype=complex),
    np.array([[0, 0], [1, 0]], dtype=complex),
    np.array([[0, 0], [1j, 0]], dtype=complex),
)


def _rho_from_theta(theta):
    a, b, c, d = theta
    ell = np.array([[a, 0.0], [c + 1j * d, b]], dtype=complex)
    g = ell @ ell.conj().T
    tr = g[0, 0].real + g[1, 1].real
    return ell, g, tr


def _nll_and_grad(theta, records):
    ell, g, tr = _rho_from_theta(theta)
    if tr <= 0.0:
        return 1e300, np.zeros(4)
    rho = g / tr
    nll = 0.0
    grad = np.zeros(4)
    for rec in records:
        m = _MEAS[rec.basis]
        p = float(np.einsum("ij,ji->", rho, m).real)
        k, n = rec.excited_counts, rec.shots
        clipped = not (_P_CLIP < p < 1.0 - _P_CLIP)
        p_safe = min(max(p, _P_CLIP), 1.0 - _P_CLIP)
        nll -= k * np.log(p_safe) + (n - k) * np.log1p(-p_safe)
        if clipped:
            continue
        w = -(k / p_safe - (n - k) / (1.0 - p_safe))
        for i, dl in enumerate(_DL):
            dg = dl @ ell.conj().T + ell @ dl.conj().T
            drho = (dg - rho * np.trace(dg).real) / tr
            grad[i] += w * float(np.einsum("ij,ji->", drho, m).real)
    return nll, grad


def _polish_gradient(theta, records, tol=1e-10, iters=25):
    """Damped Newton steps on the analytic gradient.

    Near the optimum the NLL improvement per step falls below the float64
    resolution of the NLL value, where line-search methods stall; stepping
    on the gradient directly still converges.  The scale-gauge direction of
    the parameterization leaves the Hessian singular, so the solve is
    Levenberg-damped.
    """
    theta = np.asarray(theta, dtype=float).copy()
    _, g = _nll_and_grad(theta, records)
    lam = 1e-6
    for _ in range(iters):
        gn = np.max(np.abs(g))
        if gn < tol:
            break
        h = np.empty((4, 4))
        eps = 1e-7 * max(1.0, np.max(np.abs(theta)))
        for i in range(4):
            tp = theta.copy()
            tp[i] += eps
            tm = theta.copy()
            tm[i] -= eps
            h[:, i] = (_nll_and_grad(tp, records)[1] - _nll_and_grad(tm, records)[1]) / (2 * eps)
        h = 0.5 * (h + h.T)
        accepted = False
        for _ in range(12):
            try:
                step = np.linalg.solve(h + lam * np.eye(4), -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            cand = theta + step
            _, g_cand = _nll_and_grad(cand, records)
            if np.max(np.abs(g_cand)) < gn:
                theta, g = cand, g_cand
                lam = max(lam / 3.0, 1e-9)
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            break
    return theta, g


def mle_reconstruct(records) -> DensityMatrix:
    """Maximum-likelihood density matrix from one record per basis.

    rho is parameterized as L L^dag / tr(L L^dag) with a lower-triangular L
    (4 real parameters), which enforces positivity and unit trace by
    construction; the binomial likelihood is maximized by L-BFGS-B with the
    analytic gradient, then Newton-polished to the gradient tolerance.
    """
    records = list(records)
    s = bloch_from_records(records)
    r = np.linalg.norm(s)
    if r > 0.995:
        s = s * (0.995 / r)
    rho0 = 0.5 * (
        np.eye(2, dtype=complex)
        + s[0] * np.array([[0, 1], [1, 0]])
        + s[1] * np.array([[0, -1j], [1j, 0]])
        + s[2] * np.diag([1.0, -1.0])
    )
    ell0 = np.linalg.cholesky(rho0 + 1e-12 * np.eye(2))
    starts = [
        np.array([ell0[0, 0].real, ell0[1, 1].real, ell0[1, 0].real, ell0[1, 0].imag]),
        np.array([0.7, 0.7, 0.0, 0.0]),
    ]
    best_x, best_g = None, None
    for theta0 in starts:
        res = optimize.minimize(
            _nll_and_grad,
            theta0,
            args=(records,),
            jac=True,
            method="L-BFGS-B",
            options={"maxiter": 2000, "ftol": 1e-16, "gtol": 1e-12},
        )
        x, grad = _polish_gradient(res.x, records)
        if best_g is None or np.max(np.abs(grad)) < np.max(np.abs(best_g)):
            best_x, best_g = x, grad
        if np.max(np.abs(best_g)) < 1e-9:
            break
    if np.max(np.abs(best_g)) > 1e-9:
        raise NumericError(
            "MLE did not reach gradient tolerance: "
            f"|grad|={np.max(np.abs(best_g)):.2e}"
        )
    _, g, tr = _rho_from_theta(best_x)
    rho = g / tr
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / rho.trace().real
    # roundoff can leave a -1e-17-level eigenvalue; lift it without moving
    # anything at reported precision
    w = np.linalg.eigvalsh(rho)
    if w[0] < 0.0:
        rho = rho + (2e-16 - w[0]) * np.eye(2)
        rho = rho / rho.trace().real
    return DensityMatrix(rho)


def fidelity(rho: DensityMatrix, rho_ideal: DensityMatrix) -> float:
    """State fidelity Tr sqrt(sqrt(rho_ideal) rho sqrt(rho_ideal)).

    For 2x2 matrices this equals sqrt(tr(rho sigma) + 2 sqrt(det rho det
    sigma)); for a pure target it reduces to sqrt(<psi|rho|psi>).  Clamped
    to [0, 1].
    """
    a = _as_density(rho).matrix
    b = _as_density(rho_ideal).matrix
    det_a = max(float(np.linalg.det(a).real), 0.0)
    det_b = max(float(np.linalg.det(b).real), 0.0)
    f2 = float(np.trace(a @ b).real) + 2.0 * np.sqrt(det_a * det_b)
    return float(np.clip(np.sqrt(max(f2, 0.0)), 0.0, 1.0))


# ---------------------------------------------------------------------------
# Parametric bootstrap
# ---------------------------------------------------------------------------


def _records_from_bloch(s, shots):
    p_id = np.clip(0.5 * (1.0 - s[2]), 0.0, 1.0)
    p_rx = np.clip(0.5 * (1.0 - s[1]), 0.0, 1.0)
    p_ry = np.clip(0.5 * (1.0 + s[0]), 0.0, 1.0)
    return [
        ShotRecord("id", shots, p_id * shots),
        ShotRecord("rx90", shots, p_rx * shots),
        ShotRecord("ry90", shots, p_ry * shots),
    ]


def bootstrap_errors(records, target, b: int = 200, seed=None) -> TomographyResult:
    """Parametric bootstrap of the reconstruction's fidelity statistics.

    Per the normal-approximation procedure: estimate each Bloch component's
    mean and standard deviation of the mean from the counts, resample b
    synthetic Bloch vectors from those normals, MLE-reconstruct each, and
    take the sample standard deviation of the fidelities as the standard
    error.  Deterministic for a given seed (one child stream per resample).
    """
    if b < 100:
        raise ValueError("bootstrap size b must be >= 100")
    records = list(records)
    target = _as_density(target)
    shots = records[0].shots
    s_hat = bloch_from_records(records)
    by_basis = {r.basis: r for r in records}
    sigma = np.array(
        [
            2.0 * np.sqrt(max(by_basis[bb].p1 * (1.0 - by_basis[bb].p1), 0.0) / by_basis[bb].shots)
            for bb in ("ry90", "rx90", "id")
        ]
    )

    rho_hat = mle_reconstruct(records)
    f_hat = fidelity(rho_hat, target)

    fids = []
    failures = 0
    for child in np.random.SeedSequence(seed).spawn(b):
        rng = np.random.default_rng(child)
        s_b = s_hat + sigma * rng.standard_normal(3)
        try:
            rho_b = mle_reconstruct(_records_from_bloch(s_b, shots))
            fids.append(fidelity(rho_b, target))
        except NumericError:
            failures += 1
    if failures > 0.05 * b:
        raise NumericError(f"{failures}/{b} bootstrap reconstructions failed")
    fids = np.array(fids)
    stderr = float(np.std(fids, ddof=1)) if len(fids) > 1 else 0.0
    return TomographyResult(rho_hat, f_hat, stderr, b)


# ---------------------------------------------------------------------------
# Pulse calibration
# ---------------------------------------------------------------------------


def angle_calibration_sequence(
    params: QubitParams, pulse: PulseSpec, n: int, *, target_step: float | None = None
) -> float:
    """Rotation-angle error estimate from the [R(theta)]^(2n+1) train.

    Propagates 2n+1 identical pulses from |0> with a phase-coherent carrier
    and inverts 1 - 2 P1 = sin((2n+1) delta).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    final = propagate_train(params, [pulse] * (2 * n + 1), target_step=target_step)
    resp = np.clip(1.0 - 2.0 * final.p1, -1.0, 1.0)
    return float(np.arcsin(resp) / (2 * n + 1))


def axis_calibration_sequence(
    params: QubitParams,
    pulse_x: PulseSpec,
    pulse_y: PulseSpec,
    n: int,
    *,
    target_step: float | None = None,
) -> float:
    """Axis-misalignment estimate from Ry'{[Rx]^2 [Ry']^2}^n Rx.

    The train runs in time order Rx, ([Ry']^2 [Rx]^2) x n, Ry'; composing
    ideal rotations gives 1 - 2 P1 = -sin((2n+1) phi) for a y-axis tilt phi
    toward -x, which this inverts.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    pulses = [pulse_x]
    for _ in range(n):
        pulses.extend([pulse_y, pulse_y, pulse_x, pulse_x])
    pulses.append(pulse_y)
    final = propagate_train(params, pulses, target_step=target_step)
    resp = np.clip(1.0 - 2.0 * final.p1, -1.0, 1.0)
    return float(-np.arcsin(resp) / (2 * n + 1))


@functools.lru_cache(maxsize=8)
def prerotation_pulses(
    params: QubitParams,
    amplitude: float = PREROTATION_AMPLITUDE,
    edge: float = PREROTATION_EDGE,
) -> dict:
    """Calibrated tomography pre-rotation pulses {id, rx90, ry90}.

    Pulse length is solved so the repeated-pulse angle estimate vanishes
    (realized rotation angle pi/2 within the calibration tolerance), then
    the y pulse's carrier phase is solved so the axis estimate vanishes.
    The identity is a zero-amplitude wait of the same shape.
    """
    n = 5

    def angle_err(t_p):
        pulse = PulseSpec(amplitude, params.delta, edge, t_p, edge, 0.0)
        return angle_calibration_sequence(params, pulse, n)

    # RWA estimate pi/2 = amplitude * (t_p + edge), then bracket and solve
    t_guess = (np.pi / 2.0) / amplitude - edge
    t_lo, t_hi = 0.8 * t_guess, 1.2 * t_guess
    t_cal = optimize.brentq(angle_err, t_lo, t_hi, xtol=1e-7)

    pulse_x = PulseSpec(amplitude, params.delta, edge, t_cal, edge, 0.0)

    def axis_err(phi):
        pulse_y = PulseSpec(amplitude, params.delta, edge, t_cal, edge, phi)
        return axis_calibration_sequence(params, pulse_x, pulse_y, n)

    phi0 = -np.pi / 2.0
    phi_cal = optimize.brentq(axis_err, phi0 - 0.15, phi0 + 0.15, xtol=1e-7)

    return {
        "id": PulseSpec(0.0, params.delta, edge, t_cal, edge, 0.0),
        "rx90": pulse_x,
        "ry90": PulseSpec(amplitude, params.delta, edge, t_cal, edge, phi_cal),
    }


def realized_rotation_angle(params: QubitParams, pulse: PulseSpec) -> float:
    """Polar rotation angle of |0> under one pulse: 2 asin(sqrt(P1))."""
    traj = propagate(params, pulse, sample_dt=max(pulse.total, 1e-3))
    return float(2.0 * np.arcsin(np.sqrt(np.clip(traj.p1[-1], 0.0, 1.0))))
