"""Free-space dyadic Green's function and its electrostatic limit."""
from __future__ import annotations

import numpy as np
from scipy.special import spherical_jn

from ..core import StaticKernelError, separation

_I3 = np.eye(3)


def free_space_g(r, rp, omega: float) -> np.ndarray:
    """Retarded free-space dyadic Green's function G0(r, r', omega).

    With k = omega, rho = |r - r'| and n the unit separation vector::

        G0 = e^{ik rho} / (4 pi rho) [ (I - nn) + (ik rho - 1)/(k rho)^2 (I - 3nn) ]

    omega = 0 is rejected; the static limit lives in :func:`electrostatic_kernel`.
    """
    rho, n = separation(r, rp)
    if omega == 0:
        raise StaticKernelError("free_space_g is singular at omega = 0; use electrostatic_kernel")
    nn = np.outer(n, n)
    x = omega * rho
    pref = np.exp(1j * x) / (4 * np.pi * rho)
    return pref * ((_I3 - nn) + (1j * x - 1) / x**2 * (_I3 - 3 * nn))


def im_free_space_g(r, rp, omega: float) -> np.ndarray:
    """Im G0 written with spherical Bessel functions (no 1/k^2 cancellation)."""
    rho, n = separation(r, rp)
    nn = np.outer(n, n)
    x = abs(omega) * rho
    out = (x * spherical_jn(0, x) * (_I3 - nn) - spherical_jn(1, x) * (_I3 - 3 * nn)) / (4 * np.pi * rho)
    return np.sign(omega) * out


def free_space_static(r, rp) -> np.ndarray:
    """[omega^2 G0]_{omega=0} = (3nn - I) / (4 pi rho^3)."""
    rho, n = separation(r, rp)
    return ((3 * np.outer(n, n) - _I3) / (4 * np.pi * rho**3)).astype(complex)


def electrostatic_kernel(r, rp) -> np.ndarray:
    """Electrostatic dipole-dipole coupling kernel (3nn - I) / (8 pi rho^3).

    The factor 1/2 relative to the dipole field accounts for each pair
    appearing twice in the ordered double sum over emitters.
    """
    return 0.5 * free_space_static(r, rp)
