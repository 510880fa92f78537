"""Driven two-level system: device parameters, pulse shapes, Hamiltonian.

The qubit is biased at its symmetry point, where the lab-frame Hamiltonian in
the energy eigenbasis {|0>, |1>} is (hbar = 1)

    H(t) = -Delta/2 * sigma_z + A(t) * cos(omega*t + phi) * sigma_x,

with Delta the minimum level splitting and A(t) the shaped drive envelope.
|0> is the ground state, mapped to Bloch +z; the excited-state probability is
P1 = |<1|psi>|^2 = (1 - <sigma_z>)/2.

The drive envelope rises as A_m/2*(1 - cos(pi*t/t_r)), sits at A_m for the
plateau, and falls as A_m/2*(1 + cos(pi*(t - t_p - t_r)/t_f)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .units import HBAR, PHI0, TWO_PI

# Pauli matrices (sigma_x and sigma_z real so the Hamiltonian below is a
# bitwise-Hermitian complex array).
SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

#: Default minimum level splitting, rad/ns.
DELTA_DEFAULT = TWO_PI * 2.288
#: Default persistent current, nA.
PERSISTENT_CURRENT_DEFAULT = 690.0


@dataclass(frozen=True)
class QubitParams:
    """Static device parameters.

    delta: minimum level splitting, rad/ns (angular).
    persistent_current: loop persistent current I_p, nA.
    t1, t_ramsey: recorded coherence constants in ns; informational only,
        no open-system dynamics is simulated.
    """

    delta: float = DELTA_DEFAULT
    persistent_current: float = PERSISTENT_CURRENT_DEFAULT
    t1: float = 1800.0
    t_ramsey: float = 300.0

    def __post_init__(self):
        if not self.delta > 0.0:
            raise ValueError(f"delta must be positive, got {self.delta}")


@dataclass(frozen=True)
class PulseSpec:
    """Shaped drive pulse: cosine-edged envelope times a cosine carrier.

    amplitude_max: peak envelope value A_m, rad/ns (angular).
    carrier: carrier angular frequency omega, rad/ns.
    t_rise, t_plateau, t_fall: segment durations, ns.
    carrier_phase: phase of the cos carrier at t = 0, rad.
    """

    amplitude_max: float
    carrier: float
    t_rise: float = 0.0
    t_plateau: float = 0.0
    t_fall: float = 0.0
    carrier_phase: float = 0.0

    def __post_init__(self):
        if self.amplitude_max < 0.0:
            raise ValueError("amplitude_max must be >= 0")
        for name in ("t_rise", "t_plateau", "t_fall"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def total(self) -> float:
        """Total pulse duration t_r + t_p + t_f, ns."""
        return self.t_rise + self.t_plateau + self.t_fall


def envelope(pulse: PulseSpec, t, *, allow_outside: bool = False):
    """Drive envelope A(t) in rad/ns; accepts scalars or arrays.

    Raises ValueError for t outside [0, total] unless ``allow_outside`` is
    set, in which case the envelope is 0 there.  A zero rise (fall) time
    makes the envelope step directly to (from) A_m.
    """
    t_arr = np.asarray(t, dtype=float)
    if not allow_outside:
        if np.any(t_arr < 0.0) or np.any(t_arr > pulse.total):
            raise ValueError(
                f"t outside pulse support [0, {pulse.total}] ns"
            )
    am = pulse.amplitude_max
    t_r, t_p, t_f = pulse.t_rise, pulse.t_plateau, pulse.t_fall
    out = np.zeros_like(t_arr)

    inside = (t_arr >= 0.0) & (t_arr <= pulse.total)
    rising = inside & (t_arr < t_r)
    falling = inside & (t_arr > t_r + t_p)
    flat = inside & ~rising & ~falling

    out[flat] = am
    if t_r > 0.0:
        out[rising] = 0.5 * am * (1.0 - np.cos(np.pi * t_arr[rising] / t_r))
    if t_f > 0.0:
        out[falling] = 0.5 * am * (
            1.0 + np.cos(np.pi * (t_arr[falling] - t_p - t_r) / t_f)
        )
    return out if out.ndim else float(out)


def drive_coefficient(pulse: PulseSpec, t):
    """Instantaneous sigma_x coefficient A(t)*cos(omega*t + phi), rad/ns.

    Zero outside the pulse support.
    """
    a = envelope(pulse, t, allow_outside=True)
    return a * np.cos(pulse.carrier * np.asarray(t, dtype=float) + pulse.carrier_phase)


def hamiltonian_at(params: QubitParams, pulse: PulseSpec, t: float) -> np.ndarray:
    """2x2 Hamiltonian -Delta/2 sigma_z + A(t) cos(omega t + phi) sigma_x at time t.

    The drive term vanishes outside the pulse support.  hbar = 1; entries in
    rad/ns.
    """
    x = drive_coefficient(pulse, float(t))
    h = np.zeros((2, 2), dtype=complex)
    h[0, 0] = -0.5 * params.delta
    h[1, 1] = 0.5 * params.delta
    h[0, 1] = x
    h[1, 0] = x
    return h


def transition_frequency(params: QubitParams, flux_offset: float) -> float:
    """Qubit transition frequency sqrt(Delta^2 + eps^2) in rad/ns.

    ``flux_offset`` is (Phi_s - Phi_0/2) in units of the flux quantum; the
    energy bias is eps = 2 I_p (Phi_s - Phi_0/2) / hbar converted to rad/ns.
    """
    eps_rad_per_s = 2.0 * (params.persistent_current * 1e-9) * (flux_offset * PHI0) / HBAR
    eps = eps_rad_per_s * 1e-9
    return float(np.hypot(params.delta, eps))


@dataclass(frozen=True)
class StateVector:
    """Pure qubit state (c_g, c_e) in the energy eigenbasis."""

    c_g: complex
    c_e: complex

    def __post_init__(self):
        norm = abs(self.c_g) ** 2 + abs(self.c_e) ** 2
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"state not normalized: |psi|^2 = {norm}")

    @classmethod
    def from_array(cls, psi) -> "StateVector":
        psi = np.asarray(psi, dtype=complex).reshape(2)
        return cls(complex(psi[0]), complex(psi[1]))

    @classmethod
    def ground(cls) -> "StateVector":
        return cls(1.0 + 0.0j, 0.0j)

    @classmethod
    def excited(cls) -> "StateVector":
        return cls(0.0j, 1.0 + 0.0j)

    @classmethod
    def minus_y(cls) -> "StateVector":
        """(|0> - i|1>)/sqrt(2), the Bloch -y state."""
        s = 1.0 / np.sqrt(2.0)
        return cls(s + 0.0j, -1.0j * s)

    def as_array(self) -> np.ndarray:
        return np.array([self.c_g, self.c_e], dtype=complex)

    @property
    def p1(self) -> float:
        """Excited-state probability |c_e|^2."""
        return abs(self.c_e) ** 2

    def bloch(self) -> "BlochVector":
        z = np.conj(self.c_g) * self.c_e
        return BlochVector(
            sx=2.0 * z.real,
            sy=2.0 * z.imag,
            sz=abs(self.c_g) ** 2 - abs(self.c_e) ** 2,
        )

    def overlap(self, other: "StateVector") -> complex:
        """<self|other>."""
        return complex(np.vdot(self.as_array(), other.as_array()))


@dataclass(frozen=True)
class BlochVector:
    """Pauli expectation values (sx, sy, sz); |s| <= 1 for physical states."""

    sx: float
    sy: float
    sz: float

    def __post_init__(self):
        r2 = self.sx**2 + self.sy**2 + self.sz**2
        if r2 > 1.0 + 1e-9:
            raise ValueError(f"Bloch vector outside unit ball: |s|^2 = {r2}")

    def as_array(self) -> np.ndarray:
        return np.array([self.sx, self.sy, self.sz])

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.as_array()))
