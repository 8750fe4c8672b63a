"""Rotor motion and the flux-decay (one-axis) machine model."""

from __future__ import annotations

import numpy as np


def swing_derivatives(omega, t_mech, t_elec, h, d_damp=0.0, omega_base=2.0 * np.pi * 50.0):
    """Rotor angle and speed derivatives, all quantities on the machine base.

    ``2H dw/dt = Tm - Te - D (w - 1)`` and ``d delta/dt = w_base (w - 1)``.
    """
    d_omega = (t_mech - t_elec - d_damp * (omega - 1.0)) / (2.0 * h)
    d_delta = omega_base * (omega - 1.0)
    return d_delta, d_omega


def flux_decay_derivative(efd, eq_p, i_d, xd, xd_p, td0_p):
    """``T'd0 dE'q/dt = Efd - E'q - (xd - x'd) Id``."""
    return (efd - eq_p - (xd - xd_p) * i_d) / td0_p


def rotor_frame(current, delta):
    """Split a network-frame current into (Id, Iq) for a rotor at ``delta``."""
    rot = current * np.exp(-1j * (delta - np.pi / 2.0))
    return rot.real, rot.imag
