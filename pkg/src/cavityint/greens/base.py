"""Common interface for dyadic Green's function evaluators."""
from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np

from ..core import StaticKernelError, StaticLimitError, as_vec3
from .free import free_space_g, free_space_static, im_free_space_g


class GreensEvaluator(ABC):
    """Evaluates G(r, r', omega) = G0 + G_S for one electromagnetic environment.

    Subclasses provide the scattered part ``G_S``. The free-space part is
    shared. ``static`` returns the un-halved ``[omega^2 G]_{omega=0}``; the
    residue coupling is half of it.
    """

    has_analytic_static: bool = False

    @abstractmethod
    def scattered(self, r, rp, omega: float) -> np.ndarray:
        """G_S(r, r', omega) for omega > 0."""

    @abstractmethod
    def static_scattered(self, r, rp) -> np.ndarray:
        """[omega^2 G_S(r, r', omega)]_{omega=0}."""

    def im_scattered(self, r, rp, omega: float) -> np.ndarray:
        return self.scattered(r, rp, omega).imag

    def __call__(self, r, rp, omega: float) -> np.ndarray:
        return free_space_g(r, rp, omega) + self.scattered(r, rp, omega)

    def im_g(self, r, rp, omega: float, *, include_free: bool = True) -> np.ndarray:
        """Im G(r, r', omega), evaluated stably down to omega = 0."""
        out = np.zeros((3, 3))
        if omega == 0:
            return out
        if include_free:
            out = out + im_free_space_g(r, rp, omega)
        return out + self.im_scattered(r, rp, omega)

    def static(self, r, rp, *, include_free: bool = True) -> np.ndarray:
        out = np.zeros((3, 3), dtype=complex)
        if include_free:
            out = out + free_space_static(r, rp)
        try:
            return out + self.static_scattered(r, rp)
        except StaticKernelError as exc:
            raise StaticLimitError(str(exc)) from exc

    def oscillation_length(self, r, rp) -> float:
        """Longest path length whose phase omega * length shows up in G(r, r', omega)."""
        return float(np.linalg.norm(as_vec3(r) - as_vec3(rp)))

    def check_point(self, r) -> None:
        """Raise GeometryError if ``r`` is not an admissible emitter position."""
        as_vec3(r)


class FreeSpace(GreensEvaluator):
    """Vacuum everywhere: G_S = 0."""

    has_analytic_static = True

    def scattered(self, r, rp, omega: float) -> np.ndarray:
        return np.zeros((3, 3), dtype=complex)

    def im_scattered(self, r, rp, omega: float) -> np.ndarray:
        return np.zeros((3, 3))

    def static_scattered(self, r, rp) -> np.ndarray:
        return np.zeros((3, 3), dtype=complex)

    def __repr__(self) -> str:
        return "FreeSpace()"
