"""
Scattered Green's function of a planar multilayer.

The emitters sit in one vacuum layer bounded by (generalized) reflectors
below and above. G_S is a Sommerfeld integral over the in-plane wavenumber
``kr`` of s- and p-polarized reflection coefficients, obtained by the usual
layer-by-layer recursion. The kr path runs along a half ellipse in the fourth
quadrant (clear of branch points and guided-mode poles) and then along the
real axis, where every wave is evanescent.

p-polarized amplitudes follow the magnetic-field convention, so that a
perfect conductor has r_s = -1 and r_p = +1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy.integrate import quad_vec
from scipy.special import jv

from ..core import ConvergenceError, GeometryError, StaticKernelError, as_vec3
from .base import GreensEvaluator

DEFAULT_RTOL = 1e-8
DEFAULT_ATOL = 1e-14
IMAG_NOISE = 1e-15
STATIC_RTOL = 1e-10
GAMMA_MIN_FRACTION = 1e-6
STATIC_OMEGA_FACTOR = 1e-4


@dataclass(frozen=True)
class Constant:
    """Frequency-independent permittivity (real or complex)."""

    value: complex = 1.0

    def __call__(self, omega: float) -> complex:
        return complex(self.value)


@dataclass(frozen=True)
class Drude:
    """eps(omega) = 1 - omega_p^2 / (omega^2 + i gamma omega).

    The damping is floored at ``1e-6 omega_p`` so that guided-mode poles stay
    off the real axis.
    """

    omega_p: float
    gamma: float = 0.0

    def __post_init__(self):
        if self.omega_p < 0 or self.gamma < 0:
            raise ValueError("Drude parameters must be non-negative")

    @property
    def effective_gamma(self) -> float:
        return max(self.gamma, GAMMA_MIN_FRACTION * self.omega_p)

    def __call__(self, omega: float) -> complex:
        if self.omega_p == 0:
            return 1.0 + 0j
        return 1.0 - self.omega_p**2 / (omega**2 + 1j * self.effective_gamma * omega)


@dataclass(frozen=True)
class PerfectConductor:
    """eps -> -infinity; terminates the stack."""

    def __call__(self, omega: float) -> complex:
        return complex(-np.inf)


Permittivity = Union[Constant, Drude, PerfectConductor]


@dataclass(frozen=True)
class Layer:
    permittivity: Permittivity = field(default_factory=Constant)
    thickness: float | None = None

    @property
    def is_pec(self) -> bool:
        return isinstance(self.permittivity, PerfectConductor)


@dataclass(frozen=True)
class LayerStack:
    """Layers ordered bottom (z -> -inf) to top (z -> +inf).

    The lowest interface sits at ``z_bottom``; interior layers have finite
    thickness, the outermost two are semi-infinite. ``emitter_layer`` indexes
    the vacuum layer holding the emitters.
    """

    layers: tuple[Layer, ...]
    emitter_layer: int
    z_bottom: float = 0.0

    def __post_init__(self):
        layers = tuple(self.layers)
        object.__setattr__(self, "layers", layers)
        if len(layers) < 2:
            raise ValueError("a layer stack needs at least 2 layers")
        if layers[0].thickness is not None or layers[-1].thickness is not None:
            raise ValueError("outermost layers must be semi-infinite (thickness None)")
        for j, layer in enumerate(layers[1:-1], start=1):
            if layer.thickness is None or not layer.thickness > 0:
                raise ValueError(f"interior layer {j} needs a positive thickness")
        e = self.emitter_layer
        if not 0 <= e < len(layers):
            raise ValueError(f"emitter_layer {e} out of range")
        eps = layers[e].permittivity
        if not (isinstance(eps, Constant) and complex(eps.value) == 1):
            raise ValueError("the emitter layer must be vacuum (eps = 1)")

    @classmethod
    def half_space(cls, permittivity: Permittivity, z0: float = 0.0) -> "LayerStack":
        """Material below ``z0``, vacuum emitter half-space above."""
        return cls((Layer(permittivity), Layer(Constant(1.0))), emitter_layer=1, z_bottom=z0)

    @classmethod
    def cavity(cls, lower: Permittivity, upper: Permittivity, gap: float, z0: float = 0.0) -> "LayerStack":
        """Vacuum gap of width ``gap`` between two half-spaces, lower face at ``z0``."""
        return cls(
            (Layer(lower), Layer(Constant(1.0), gap), Layer(upper)), emitter_layer=1, z_bottom=z0
        )

    @property
    def interfaces(self) -> np.ndarray:
        z = [self.z_bottom]
        for layer in self.layers[1:-1]:
            z.append(z[-1] + layer.thickness)
        return np.array(z)

    @property
    def emitter_bounds(self) -> tuple[float, float]:
        z = self.interfaces
        e = self.emitter_layer
        lo = z[e - 1] if e > 0 else -math.inf
        hi = z[e] if e < len(self.layers) - 1 else math.inf
        return float(lo), float(hi)

    @property
    def is_vacuum(self) -> bool:
        return all(
            isinstance(l.permittivity, Constant) and complex(l.permittivity.value) == 1
            for l in self.layers
        )

    def contains(self, r) -> bool:
        lo, hi = self.emitter_bounds
        return lo < as_vec3(r)[2] < hi


def _kz(eps: complex, k: float, kr: np.ndarray) -> np.ndarray:
    """Normal wavenumber on the branch with Im kz >= 0."""
    kz = np.sqrt(eps * k * k - kr * kr + 0j)
    flip = (kz.imag < 0) | ((kz.imag == 0) & (kz.real < 0))
    return np.where(flip, -kz, kz)


def _fresnel(eps_a, kz_a, eps_b, kz_b):
    """(r_s, r_p) for a wave in medium a reflected by medium b."""
    rs = (kz_a - kz_b) / (kz_a + kz_b)
    rp = (eps_b * kz_a - eps_a * kz_b) / (eps_b * kz_a + eps_a * kz_b)
    return rs, rp


def _stack_reflection(layers: Sequence[Layer], omega: float, kr: np.ndarray):
    """Generalized reflection seen from ``layers[-1]`` looking towards ``layers[0]``.

    ``layers[0]`` is semi-infinite; the recursion runs from the far end.
    """
    k = omega
    rs = rp = None
    for j in range(len(layers) - 1):
        near, far = layers[j + 1], layers[j]
        if far.is_pec:
            rs = -np.ones_like(kr, dtype=complex)
            rp = np.ones_like(kr, dtype=complex)
            continue
        eps_n, eps_f = near.permittivity(omega), far.permittivity(omega)
        kz_n, kz_f = _kz(eps_n, k, kr), _kz(eps_f, k, kr)
        r_s, r_p = _fresnel(eps_n, kz_n, eps_f, kz_f)
        if rs is None:
            rs, rp = r_s, r_p
        else:
            ph = np.exp(2j * kz_f * far.thickness)
            rs = (r_s + rs * ph) / (1 + r_s * rs * ph)
            rp = (r_p + rp * ph) / (1 + r_p * rp * ph)
    return rs, rp


class _Integrand:
    """kr-integrand of omega^2 G_S for one source/observer pair."""

    def __init__(self, stack: LayerStack, r, rp, omega: float):
        self.stack = stack
        self.k = omega
        e = stack.emitter_layer
        self.below = stack.layers[: e + 1]
        self.above = stack.layers[e:][::-1]
        self.has_lo = e > 0
        self.has_hi = e < len(stack.layers) - 1
        lo, hi = stack.emitter_bounds
        r, rp = as_vec3(r), as_vec3(rp)
        z, zp = r[2], rp[2]
        self.dz = z - zp
        self.d_lo = z + zp - 2 * lo if self.has_lo else math.inf
        self.d_hi = 2 * hi - z - zp if self.has_hi else math.inf
        self.gap = hi - lo
        X, Y = r[0] - rp[0], r[1] - rp[1]
        self.rho = math.hypot(X, Y)
        phi = math.atan2(Y, X) if self.rho > 0 else 0.0
        self.cphi, self.sphi = math.cos(phi), math.sin(phi)
        self.c2, self.s2 = math.cos(2 * phi), math.sin(2 * phi)

    def _f_terms(self, R_lo, R_hi, kz):
        """F+, F+E2, F-, F-E1 of the multiple-reflection series."""
        zero = np.zeros_like(kz)
        if self.has_lo and self.has_hi:
            RR = R_lo * R_hi
            den = 1 - RR * np.exp(2j * kz * self.gap)
            fp = R_lo * np.exp(1j * kz * self.d_lo) / den
            fm = R_hi * np.exp(1j * kz * self.d_hi) / den
            fpe = RR * np.exp(1j * kz * (2 * self.gap + self.dz)) / den
            fme = RR * np.exp(1j * kz * (2 * self.gap - self.dz)) / den
            return fp, fpe, fm, fme
        if self.has_lo:
            return R_lo * np.exp(1j * kz * self.d_lo), zero, zero, zero
        if self.has_hi:
            return zero, zero, R_hi * np.exp(1j * kz * self.d_hi), zero
        return zero, zero, zero, zero

    def __call__(self, kr: np.ndarray) -> np.ndarray:
        """Returns shape (len(kr), 3, 3): kr/kz times the angular-integrated dyad."""
        k = self.k
        kr = np.asarray(kr, dtype=complex)
        kz = _kz(1.0, k, kr)
        if self.has_lo:
            rs_lo, rp_lo = _stack_reflection(self.below, k, kr)
        else:
            rs_lo = rp_lo = np.zeros_like(kr)
        if self.has_hi:
            rs_hi, rp_hi = _stack_reflection(self.above, k, kr)
        else:
            rs_hi = rp_hi = np.zeros_like(kr)

        sp, spe, sm, sme = self._f_terms(rs_lo, rs_hi, kz)
        pp, ppe, pm, pme = self._f_terms(rp_lo, rp_hi, kz)
        c_ss = k * k * (sp + spe + sm + sme)
        c_uu = kz * kz * (-pp + ppe - pm + pme)
        c_uz = -kz * kr * (pp + ppe - pm - pme)
        c_zu = -kz * kr * (-pp + ppe + pm - pme)
        c_zz = kr * kr * (pp + ppe + pm + pme)

        x = kr * self.rho
        J0 = jv(0, x)
        if self.rho > 0:
            J1, J2 = jv(1, x), jv(2, x)
        else:
            J1 = J2 = np.zeros_like(x)
        C, S = self.c2, self.s2

        out = np.zeros(kr.shape + (3, 3), dtype=complex)
        # angular integrals divided by pi
        out[:, 0, 0] = c_uu * (J0 - J2 * C) + c_ss * (J0 + J2 * C)
        out[:, 1, 1] = c_uu * (J0 + J2 * C) + c_ss * (J0 - J2 * C)
        out[:, 0, 1] = out[:, 1, 0] = (-c_uu + c_ss) * J2 * S
        iu = 2j * J1
        out[:, 0, 2] = c_uz * iu * self.cphi
        out[:, 1, 2] = c_uz * iu * self.sphi
        out[:, 2, 0] = c_zu * iu * self.cphi
        out[:, 2, 1] = c_zu * iu * self.sphi
        out[:, 2, 2] = 2 * c_zz * J0
        return out * (kr / kz)[:, None, None]

    def contour(self) -> tuple[float, float]:
        """Semi-axes (a, b) of the deformed path from 0 to 2a."""
        k = self.k
        kmax = k
        layers = self.stack.layers
        for layer in layers:
            if layer.is_pec:
                continue
            eps = layer.permittivity(k)
            if abs(eps) < 1e2:
                kmax = max(kmax, k * np.sqrt(eps).real)
                if eps.real < -1:
                    kmax = max(kmax, min(20.0, np.sqrt(eps / (eps + 1)).real) * k)
        a = 0.6 * kmax + 0.5 * k
        b = 0.5 * a
        if self.rho > 0:
            b = min(b, 1.0 / self.rho)
        return a, b

    @property
    def decay_length(self) -> float:
        return min(self.d_lo, self.d_hi)


def _vec_quad(fun, lo, hi, rtol, atol, imag_only=False, limit=4000):
    pref = 1j / (8 * np.pi)

    def real_fun(t):
        v = pref * fun(np.array([t]))[0].reshape(9)
        if imag_only:
            return v.imag
        return np.concatenate([v.real, v.imag])

    res, err, info = quad_vec(real_fun, lo, hi, epsrel=rtol, epsabs=atol, limit=limit, full_output=True)
    if imag_only:
        return 1j * res, err, info
    return res[:9] + 1j * res[9:], err, info


def omega2_scattered(
    stack: LayerStack,
    r,
    rp,
    omega: float,
    *,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    imag_only: bool = False,
) -> np.ndarray:
    """omega^2 G_S(r, r', omega) for omega > 0 (finite as omega -> 0).

    With ``imag_only`` only the imaginary part is integrated, to a tolerance
    relative to itself rather than to the much larger real part.
    """
    for point in (r, rp):
        if not stack.contains(point):
            raise GeometryError("emitter position outside the designated emitter layer")
    if omega <= 0:
        raise StaticKernelError("layered G_S needs omega > 0; use the static evaluator for omega = 0")
    if stack.is_vacuum:
        return np.zeros((3, 3), dtype=complex)
    f = _Integrand(stack, r, rp, omega)
    a, b = f.contour()
    if imag_only:
        # the real part of the integrand (size ~ static kernel) leaves round-off
        # in the imaginary part; asking for less than that never converges
        atol = max(atol, IMAG_NOISE / (4 * np.pi * f.decay_length**3))

    def on_ellipse(t):
        kr = a * (1 - np.cos(t)) - 1j * b * np.sin(t)
        dk = a * np.sin(t) - 1j * b * np.cos(t)
        return f(kr) * dk[:, None, None]

    upper = 2 * a + 46.0 / f.decay_length
    v1, e1, i1 = _vec_quad(on_ellipse, 0.0, np.pi, rtol, atol, imag_only)
    v2, e2, i2 = _vec_quad(f, 2 * a, upper, rtol, atol, imag_only)
    total = v1 + v2
    err = e1 + e2
    scale = np.max(np.abs(total))
    if (i1.status != 0 or i2.status != 0) and err > max(atol, rtol * scale):
        raise ConvergenceError(
            f"Sommerfeld quadrature did not converge (error estimate {err:.3e})", error_estimate=err
        )
    return total.reshape(3, 3)


def layered_scattered_g(
    stack: LayerStack, r, rp, omega: float, *, rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL
) -> np.ndarray:
    """Scattered Green's function G_S(r, r', omega) of a planar stack (omega > 0)."""
    return omega2_scattered(stack, r, rp, omega, rtol=rtol, atol=atol) / omega**2


def layered_static_scattered(stack: LayerStack, r, rp, *, rtol: float = STATIC_RTOL) -> np.ndarray:
    """[omega^2 G_S]_{omega=0} by Richardson extrapolation in omega^2.

    Evaluates at omega_1 = 1e-4 / d and 2 omega_1, d being the distance from
    the pair to its nearest image plane.
    """
    for point in (r, rp):
        if not stack.contains(point):
            raise GeometryError("emitter position outside the designated emitter layer")
    if stack.is_vacuum:
        return np.zeros((3, 3), dtype=complex)
    d = _Integrand(stack, r, rp, 1.0).decay_length
    w1 = STATIC_OMEGA_FACTOR / d
    s1 = omega2_scattered(stack, r, rp, w1, rtol=rtol, atol=0.0)
    s2 = omega2_scattered(stack, r, rp, 2 * w1, rtol=rtol, atol=0.0)
    return ((4 * s1 - s2) / 3).real.astype(complex)


class Layered(GreensEvaluator):
    """Green's evaluator for a :class:`LayerStack`."""

    has_analytic_static = False

    def __init__(self, stack: LayerStack, *, rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL):
        self.stack = stack
        self.rtol = rtol
        self.atol = atol

    def check_point(self, r) -> None:
        if not self.stack.contains(r):
            raise GeometryError("emitter position outside the designated emitter layer")

    def oscillation_length(self, r, rp) -> float:
        """Path via the farther single reflection (multiple reflections add multiples of it)."""
        r, rp = as_vec3(r), as_vec3(rp)
        lo, hi = self.stack.emitter_bounds
        lateral = np.hypot(*(r - rp)[:2])
        paths = [np.linalg.norm(r - rp)]
        if np.isfinite(lo):
            paths.append(np.hypot(lateral, r[2] + rp[2] - 2 * lo))
        if np.isfinite(hi):
            paths.append(np.hypot(lateral, 2 * hi - r[2] - rp[2]))
        return float(max(paths))

    def scattered(self, r, rp, omega: float) -> np.ndarray:
        return layered_scattered_g(self.stack, r, rp, omega, rtol=self.rtol, atol=self.atol)

    def im_scattered(self, r, rp, omega: float) -> np.ndarray:
        w2g = omega2_scattered(
            self.stack, r, rp, omega, rtol=self.rtol, atol=self.atol * omega**2, imag_only=True
        )
        return w2g.imag / omega**2

    def static_scattered(self, r, rp) -> np.ndarray:
        return layered_static_scattered(self.stack, r, rp)

    def __repr__(self) -> str:
        return f"Layered({self.stack!r})"
