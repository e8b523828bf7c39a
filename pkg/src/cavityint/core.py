"""
Geometry, dyadic algebra and shared containers.

All quantities are in natural units with hbar = c = eps0 = 1. A dyadic is a
dense ``(3, 3)`` complex ndarray; a vector is a ``(3,)`` float ndarray.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "CavityIntError",
    "GeometryError",
    "CoincidentPointError",
    "InvalidCouplingError",
    "DimensionError",
    "ConvergenceError",
    "StaticKernelError",
    "StaticLimitError",
    "InstabilityError",
    "SingularMatrixError",
    "UnsupportedConfigurationError",
    "as_vec3",
    "as_dyadic",
    "Emitter",
    "UnitSystem",
    "CouplingMatrix",
    "interaction_energy",
    "separation",
    "channel_relative_error",
]


class CavityIntError(Exception):
    """Base class for all errors raised by this package."""


class GeometryError(CavityIntError, ValueError):
    pass


class CoincidentPointError(GeometryError):
    pass


class InvalidCouplingError(CavityIntError, ValueError):
    pass


class DimensionError(CavityIntError, ValueError):
    pass


class StaticKernelError(CavityIntError, ValueError):
    """Raised when a dynamic Green's function is asked for omega = 0."""


class StaticLimitError(CavityIntError):
    pass


class UnsupportedConfigurationError(CavityIntError, ValueError):
    pass


class SingularMatrixError(CavityIntError, np.linalg.LinAlgError):
    pass


class InstabilityError(CavityIntError):
    """A polariton frequency is non-positive."""

    def __init__(self, message: str, offending: Sequence[tuple[int, float]] = ()):
        super().__init__(message)
        self.offending = list(offending)


class ConvergenceError(CavityIntError):
    """Quadrature or series did not reach the requested tolerance."""

    def __init__(self, message: str, error_estimate: float = float("nan")):
        super().__init__(message)
        self.error_estimate = error_estimate


def as_vec3(v, *, name: str = "vector", dtype=float) -> np.ndarray:
    arr = np.asarray(v, dtype=dtype)
    if arr.shape != (3,):
        raise DimensionError(f"{name} must have shape (3,), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite components")
    return arr


def as_dyadic(m, *, name: str = "dyadic") -> np.ndarray:
    arr = np.asarray(m, dtype=complex)
    if arr.shape != (3, 3):
        raise DimensionError(f"{name} must have shape (3, 3), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def separation(r, rp) -> tuple[float, np.ndarray]:
    """Distance |r - r'| and unit vector along r - r'."""
    d = as_vec3(r) - as_vec3(rp)
    rho = float(np.linalg.norm(d))
    if rho == 0.0:
        raise CoincidentPointError("coincident points: r == r'")
    return rho, d / rho


@dataclass(frozen=True)
class Emitter:
    """Point dipole at ``position`` with real dipole vector ``dipole``."""

    position: np.ndarray
    dipole: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))

    def __post_init__(self):
        object.__setattr__(self, "position", as_vec3(self.position, name="position"))
        object.__setattr__(self, "dipole", as_vec3(self.dipole, name="dipole"))


@dataclass(frozen=True)
class UnitSystem:
    """Scale factors from natural units (hbar = c = eps0 = 1) to user units.

    ``hbar_scale`` converts a natural frequency to an energy, ``c_scale`` a
    natural frequency to an angular frequency for unit length, ``eps0_scale``
    enters every coupling kernel as ``1 / eps0``.
    """

    hbar_scale: float = 1.0
    c_scale: float = 1.0
    eps0_scale: float = 1.0

    def __post_init__(self):
        for name in ("hbar_scale", "c_scale", "eps0_scale"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def natural(cls) -> "UnitSystem":
        return cls()

    @classmethod
    def si(cls) -> "UnitSystem":
        from scipy import constants

        return cls(constants.hbar, constants.c, constants.epsilon_0)

    def coupling(self, lam):
        """Convert a natural-units coupling kernel (1 / (eps0 length^3))."""
        return np.asarray(lam) / self.eps0_scale

    def energy(self, omega):
        return np.asarray(omega) * self.hbar_scale

    def wavenumber(self, omega):
        return np.asarray(omega) / self.c_scale


@dataclass(frozen=True)
class CouplingMatrix:
    """N x N grid of dyadic blocks ``lambda_ij`` stored as an (N, N, 3, 3) array.

    ``route`` is one of ``"modes"``, ``"spectrum"``, ``"residue"``; ``meta``
    records cutoff parameters and quadrature error estimates.
    """

    blocks: np.ndarray
    route: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        b = np.asarray(self.blocks, dtype=complex)
        if b.ndim != 4 or b.shape[0] != b.shape[1] or b.shape[2:] != (3, 3):
            raise DimensionError(f"coupling blocks must have shape (N, N, 3, 3), got {b.shape}")
        object.__setattr__(self, "blocks", b)

    @property
    def n(self) -> int:
        return self.blocks.shape[0]

    def __getitem__(self, ij) -> np.ndarray:
        i, j = ij
        return self.blocks[i, j]

    @property
    def real(self) -> np.ndarray:
        return self.blocks.real

    def symmetry_defect(self) -> float:
        """max |lambda_ji - lambda_ij^T| relative to max |lambda|."""
        scale = np.max(np.abs(self.blocks))
        if scale == 0:
            return 0.0
        swapped = np.transpose(self.blocks, (1, 0, 3, 2))
        return float(np.max(np.abs(swapped - self.blocks)) / scale)

    def energy(self, dipoles) -> float:
        """Sum over ordered pairs of mu_i . Re(lambda_ij) . mu_j."""
        mu = np.asarray(dipoles, dtype=float)
        if mu.shape != (self.n, 3):
            raise DimensionError(f"expected {self.n} dipoles, got shape {mu.shape}")
        return float(np.einsum("ik,ijkl,jl->", mu, self.blocks.real, mu))


def interaction_energy(mu_i, lambda_block, mu_j, *, rtol: float = 1e-12) -> float:
    """Contraction ``mu_i . lambda . mu_j`` of a (real) coupling block.

    The effective Hamiltonian carries this with a minus sign.
    """
    lam = as_dyadic(lambda_block, name="lambda_block")
    scale = np.max(np.abs(lam.real))
    if np.max(np.abs(lam.imag)) > rtol * max(scale, np.finfo(float).tiny):
        raise InvalidCouplingError("coupling block has a non-negligible imaginary part")
    return float(as_vec3(mu_i) @ lam.real @ as_vec3(mu_j))


def channel_relative_error(value, reference, *, floor: float = 1e-12) -> float:
    """Largest relative error of ``value`` over the principal channels of ``reference``.

    The deviation is rotated into the eigenbasis of the symmetric real part of
    ``reference``; entry (k, l) is scaled by sqrt(|e_k e_l|). Channels with
    eigenvalues below ``floor`` times the largest one are compared against that
    floor instead. For the free-space kernel this is the larger of the
    longitudinal and transverse relative errors.
    """
    ref = np.asarray(reference)
    val = np.asarray(value)
    sym = 0.5 * (ref.real + ref.real.T)
    evals, vecs = np.linalg.eigh(sym)
    top = np.max(np.abs(evals))
    if top == 0:
        return float(np.max(np.abs(val - ref)))
    mags = np.maximum(np.abs(evals), floor * top)
    delta = vecs.T @ (val - ref) @ vecs
    return float(np.max(np.abs(delta) / np.sqrt(np.outer(mags, mags))))
