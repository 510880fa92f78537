"""Fixed-step commutator Magnus integrator for 2x2 Schroedinger propagators.

Each step over [t, t+h] applies the exponential of an exact anti-Hermitian
matrix (two-point Gauss-Legendre collocation, 4th order), so the propagator
stays unitary to machine precision regardless of step size; only the phase
accuracy depends on h.  For H(t) = x(t) sigma_x + hz sigma_z the step is
exp(-i (ax sigma_x + ay sigma_y + az sigma_z)) with

    ax = h (x1 + x2)/2,   az = h hz,   ay = -(sqrt(3) h^2 / 6) hz (x2 - x1),

x1, x2 being the drive coefficient at the two Gauss points.  The ay term is
the leading commutator correction; without it the method is 2nd order.
"""

from __future__ import annotations

import numpy as np

_GL_LO = 0.5 - np.sqrt(3.0) / 6.0
_GL_HI = 0.5 + np.sqrt(3.0) / 6.0

#: Hard floor on the internal step (ns); refinement below this fails.
STEP_FLOOR = 1e-6

IDENTITY2 = np.eye(2, dtype=complex)


def su2_exp(ax, ay, az):
    """exp(-i (ax sx + ay sy + az sz)) for broadcastable coefficient arrays.

    Returns an array of shape broadcast(ax, ay, az).shape + (2, 2).
    """
    ax, ay, az = np.broadcast_arrays(ax, ay, az)
    r = np.sqrt(ax * ax + ay * ay + az * az)
    cos_r = np.cos(r)
    f = np.sinc(r / np.pi)  # sin(r)/r with the correct r -> 0 limit
    u = np.empty(r.shape + (2, 2), dtype=complex)
    u[..., 0, 0] = cos_r - 1j * az * f
    u[..., 1, 1] = cos_r + 1j * az * f
    u[..., 0, 1] = (-1j * ax - ay) * f
    u[..., 1, 0] = (-1j * ax + ay) * f
    return u


def matmul2(a, b):
    """Batched 2x2 matrix product a @ b (cheaper than einsum at this size)."""
    shape = np.broadcast_shapes(a.shape[:-2], b.shape[:-2]) + (2, 2)
    out = np.empty(shape, dtype=complex)
    out[..., 0, 0] = a[..., 0, 0] * b[..., 0, 0] + a[..., 0, 1] * b[..., 1, 0]
    out[..., 0, 1] = a[..., 0, 0] * b[..., 0, 1] + a[..., 0, 1] * b[..., 1, 1]
    out[..., 1, 0] = a[..., 1, 0] * b[..., 0, 0] + a[..., 1, 1] * b[..., 1, 0]
    out[..., 1, 1] = a[..., 1, 0] * b[..., 0, 1] + a[..., 1, 1] * b[..., 1, 1]
    return out


def magnus_segment(u, x_of_t, hz, t0, t1, n_steps):
    """Advance unitary ``u`` over [t0, t1] where the drive coefficient is smooth.

    ``x_of_t`` maps an array of times to the sigma_x coefficient.  It may
    return a batched array with the time axis last, in which case ``u`` must
    carry matching leading batch dimensions.
    """
    if t1 <= t0 or n_steps < 1:
        return u
    h = (t1 - t0) / n_steps
    edges = t0 + h * np.arange(n_steps)
    x1 = np.asarray(x_of_t(edges + _GL_LO * h))
    x2 = np.asarray(x_of_t(edges + _GL_HI * h))
    ax = 0.5 * h * (x1 + x2)
    ay = -(np.sqrt(3.0) * h * h / 6.0) * hz * (x2 - x1)
    az = h * hz
    for k in range(n_steps):
        u = matmul2(su2_exp(ax[..., k], ay[..., k], az), u)
    return u


def unitarity_defect(u):
    """max |U^dag U - I| entry over the batch."""
    u = np.asarray(u)
    prod = matmul2(np.conj(np.swapaxes(u, -1, -2)), u)
    return float(np.max(np.abs(prod - np.eye(2))))
