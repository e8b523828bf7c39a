"""Image-dipole construction for a single planar mirror."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import GeometryError, UnsupportedConfigurationError, as_vec3
from .base import GreensEvaluator
from .free import free_space_g, free_space_static, im_free_space_g


@dataclass(frozen=True)
class MirrorSpec:
    """Planar mirror through ``point`` with unit ``normal``.

    ``strength`` f is the static image strength: 1 for a perfect electric
    conductor, (eps - 1)/(eps + 1) for a dielectric half-space.
    """

    z0: float = 0.0
    strength: float = 1.0
    normal: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))

    def __post_init__(self):
        if not abs(self.strength) <= 1:
            raise ValueError(f"mirror strength must lie in [-1, 1], got {self.strength}")
        n = as_vec3(self.normal, name="normal")
        norm = np.linalg.norm(n)
        if norm == 0:
            raise ValueError("mirror normal must be non-zero")
        object.__setattr__(self, "normal", n / norm)

    @classmethod
    def dielectric(cls, eps: float, z0: float = 0.0, **kw) -> "MirrorSpec":
        return cls(z0=z0, strength=(eps - 1) / (eps + 1), **kw)

    @property
    def point(self) -> np.ndarray:
        return self.z0 * self.normal

    def height(self, r) -> float:
        """Signed distance of ``r`` from the plane along the normal."""
        return float((as_vec3(r) - self.point) @ self.normal)

    def image(self, r) -> np.ndarray:
        r = as_vec3(r)
        return r - 2 * self.height(r) * self.normal

    @property
    def reflection(self) -> np.ndarray:
        """Householder reflection I - 2 n n^T."""
        return np.eye(3) - 2 * np.outer(self.normal, self.normal)

    @property
    def dipole_map(self) -> np.ndarray:
        """Image dipole = dipole_map @ source dipole; f diag(-1, -1, 1) for a z-normal."""
        return -self.strength * self.reflection

    def check_same_side(self, r, rp) -> None:
        h1, h2 = self.height(r), self.height(rp)
        if h1 == 0 or h2 == 0:
            raise GeometryError("point lies on the mirror plane")
        if np.sign(h1) != np.sign(h2):
            raise GeometryError("points lie on opposite sides of the mirror plane")


def mirror_static_g(mirror: MirrorSpec, r, rp) -> np.ndarray:
    """Static scattered coupling kernel of a planar mirror.

    Returns ``1/2 K(r, image(r')) S_f`` where ``K = (3nn - I)/(4 pi rho^3)``
    and ``S_f`` maps the source dipole onto its image. ``r == r'`` is allowed
    (self-interaction with the own image).
    """
    mirror.check_same_side(r, rp)
    if mirror.strength == 0:
        return np.zeros((3, 3), dtype=complex)
    return 0.5 * free_space_static(r, mirror.image(rp)) @ mirror.dipole_map


class ImageMirror(GreensEvaluator):
    """Single mirror treated by image dipoles.

    The static kernel is exact for any strength. At finite frequency the
    image construction is exact only for perfect conductors (f = +-1).
    """

    has_analytic_static = True

    def __init__(self, mirror: MirrorSpec):
        self.mirror = mirror

    def check_point(self, r) -> None:
        if self.mirror.height(r) == 0:
            raise GeometryError("point lies on the mirror plane")

    def oscillation_length(self, r, rp) -> float:
        return float(np.linalg.norm(as_vec3(r) - self.mirror.image(rp)))

    def scattered(self, r, rp, omega: float) -> np.ndarray:
        self.mirror.check_same_side(r, rp)
        if abs(self.mirror.strength) != 1:
            raise UnsupportedConfigurationError(
                "dynamic image construction requires a perfect mirror (|f| = 1)"
            )
        return free_space_g(r, self.mirror.image(rp), omega) @ self.mirror.dipole_map

    def im_scattered(self, r, rp, omega: float) -> np.ndarray:
        self.mirror.check_same_side(r, rp)
        if abs(self.mirror.strength) != 1:
            raise UnsupportedConfigurationError(
                "dynamic image construction requires a perfect mirror (|f| = 1)"
            )
        return im_free_space_g(r, self.mirror.image(rp), omega) @ self.mirror.dipole_map

    def static_scattered(self, r, rp) -> np.ndarray:
        return 2 * mirror_static_g(self.mirror, r, rp)

    def __repr__(self) -> str:
        return f"ImageMirror({self.mirror!r})"
