"""
Direct coupling lambda_ij between dipoles sharing an electromagnetic environment.

Three routes produce the same :class:`~cavityint.core.CouplingMatrix`:

* ``coupling_from_modes``   - sum over discrete modes, Re[E_n(r_i) E_n*(r_j)] / omega_n
* ``coupling_from_spectrum`` - (1/pi) int_0^inf omega Im G(r_i, r_j, omega) d omega
* ``coupling_from_residue``  - (1/2) [omega^2 G(r_i, r_j, omega)]_{omega=0}

The stored blocks already carry the factor 1/2 of the residue formula, so the
effective Hamiltonian is ``H_le - sum_{i,j} mu_i . lambda_ij . mu_j`` over
ordered pairs with nothing further to halve. Self blocks from Green's
functions contain the scattered part only; the divergent free-space self term
belongs to the single-emitter Lamb shift.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy.integrate import quad_vec
from scipy.special import erf

from .core import (
    ConvergenceError,
    CouplingMatrix,
    DimensionError,
    Emitter,
    as_vec3,
)
from .greens import GreensEvaluator, im_free_space_g

log = logging.getLogger(__name__)

DEFAULT_RTOL = 1e-12
DEFAULT_ATOL = 1e-15
# e^{-x^2} < 1e-18 beyond x = 6.5
GAUSSIAN_SPAN = 6.5
ROUNDOFF_SLACK = 1e3


def _positions(emitters) -> np.ndarray:
    if len(emitters) and isinstance(emitters[0], Emitter):
        pos = np.array([e.position for e in emitters], dtype=float)
    else:
        pos = np.asarray(emitters, dtype=float)
    if pos.ndim != 2 or pos.shape[1] != 3:
        raise DimensionError(f"emitter positions must have shape (N, 3), got {pos.shape}")
    return pos


def _dipoles(emitters) -> np.ndarray:
    return np.array([e.dipole for e in emitters], dtype=float)


def min_separation(emitters) -> float:
    pos = _positions(emitters)
    if len(pos) < 2:
        raise DimensionError("need at least two emitters for a pair separation")
    d = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1)
    return float(np.min(d[np.triu_indices(len(pos), 1)]))


@dataclass(frozen=True)
class DiscreteMode:
    frequency: float
    fields: np.ndarray  # (N, 3) complex, one row per emitter

    def __post_init__(self):
        if not self.frequency > 0:
            raise ValueError("mode frequency must be positive")
        f = np.atleast_2d(np.asarray(self.fields, dtype=complex))
        if f.shape[-1] != 3 or not np.all(np.isfinite(f)):
            raise ValueError("mode fields must be finite with shape (N, 3)")
        object.__setattr__(self, "fields", f)


@dataclass(frozen=True)
class DiscreteModeSet:
    """Mode frequencies ``(M,)`` and fields ``(M, N, 3)`` sampled at ``positions``."""

    frequencies: np.ndarray
    fields: np.ndarray
    positions: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.frequencies, dtype=float).reshape(-1)
        f = np.asarray(self.fields, dtype=complex)
        pos = _positions(self.positions)
        if len(w) == 0:
            raise ValueError("mode set is empty")
        if np.any(~(w > 0)):
            raise ValueError("mode frequencies must be positive")
        if f.shape != (len(w), len(pos), 3):
            raise DimensionError(
                f"fields must have shape (M, N, 3) = ({len(w)}, {len(pos)}, 3), got {f.shape}"
            )
        if not np.all(np.isfinite(f)):
            raise ValueError("mode fields must be finite")
        object.__setattr__(self, "frequencies", w)
        object.__setattr__(self, "fields", f)
        object.__setattr__(self, "positions", pos)

    @classmethod
    def from_modes(cls, modes: Sequence[DiscreteMode], positions) -> "DiscreteModeSet":
        return cls(
            np.array([m.frequency for m in modes]), np.stack([m.fields for m in modes]), positions
        )

    def __len__(self) -> int:
        return len(self.frequencies)

    @property
    def n_emitters(self) -> int:
        return self.positions.shape[0]

    def subset(self, index) -> "DiscreteModeSet":
        idx = np.atleast_1d(np.arange(len(self))[index])
        return DiscreteModeSet(self.frequencies[idx], self.fields[idx], self.positions)


@dataclass(frozen=True)
class SpectralCutoff:
    """``gaussian``: weight exp(-omega^2 / omega_c^2); ``hard``: omega <= omega_max."""

    kind: str
    frequency: float

    def __post_init__(self):
        if self.kind not in ("gaussian", "hard"):
            raise ValueError(f"unknown cutoff kind {self.kind!r}")
        if self.kind == "gaussian" and not self.frequency > 0:
            raise ValueError("cutoff frequency must be positive")
        if self.kind == "hard" and not self.frequency >= 0:
            raise ValueError("hard cutoff frequency must be non-negative")

    @classmethod
    def gaussian(cls, omega_c: float) -> "SpectralCutoff":
        return cls("gaussian", omega_c)

    @classmethod
    def hard(cls, omega_max: float) -> "SpectralCutoff":
        return cls("hard", omega_max)

    @classmethod
    def from_rho_over_lambda(cls, rho_over_lambda: float, rho: float, kind: str = "gaussian"):
        """Cutoff wavelength Lambda = rho / rho_over_lambda, omega_c = 2 pi / Lambda."""
        return cls(kind, 2 * np.pi * rho_over_lambda / rho)

    @property
    def upper(self) -> float:
        if self.kind == "hard":
            return self.frequency
        return GAUSSIAN_SPAN * self.frequency

    def weight(self, omega: float) -> float:
        if self.kind == "hard":
            return 1.0
        return math.exp(-((omega / self.frequency) ** 2))

    def as_dict(self) -> dict:
        return {"kind": self.kind, "frequency": self.frequency}


def default_cutoff(emitters) -> SpectralCutoff:
    """Gaussian cutoff at rho/Lambda = 2 for the closest pair."""
    return SpectralCutoff.from_rho_over_lambda(2.0, min_separation(emitters))


def coupling_from_modes(modes: DiscreteModeSet, emitters) -> CouplingMatrix:
    """lambda_ij = sum_n Re[E_n(r_i) (x) E_n*(r_j)] / omega_n."""
    pos = _positions(emitters)
    if modes.n_emitters != len(pos) or not np.allclose(modes.positions, pos):
        raise DimensionError("mode set was sampled on a different emitter roster")
    E = modes.fields
    blocks = np.einsum("nik,njl,n->ijkl", E, E.conj(), 1.0 / modes.frequencies).real
    return CouplingMatrix(blocks.astype(complex), "modes", {"n_modes": len(modes)})


def _pair_integral(g, ri, rj, self_block, cutoff, rtol, atol, self_free):
    upper = cutoff.upper
    if upper == 0:
        return np.zeros((3, 3)), 0.0

    def integrand(w):
        if w == 0:
            return np.zeros(9)
        if self_block:
            im = g.im_scattered(ri, rj, w)
            if self_free:
                im = im + w / (6 * np.pi) * np.eye(3)
        else:
            im = g.im_g(ri, rj, w)
        return (w * cutoff.weight(w) / np.pi * im).reshape(9)

    # break points resolve the sin(omega L) oscillations of the direct and reflected paths
    scale = max(g.oscillation_length(ri, rj), 1e-300)
    n_panels = int(min(max(math.ceil(upper * scale / np.pi), 1), 2000))
    points = np.linspace(0, upper, n_panels + 1)[1:-1]
    val, err, info = quad_vec(
        integrand, 0.0, upper, epsrel=rtol, epsabs=atol, points=points if len(points) else None,
        limit=20000, full_output=True,
    )
    # at the default rtol quad_vec can stop on round-off with an estimate a
    # little above target; only a miss by ROUNDOFF_SLACK counts as failure
    if info.status != 0 and err > max(atol, rtol * np.max(np.abs(val))) * ROUNDOFF_SLACK:
        raise ConvergenceError(
            f"frequency quadrature did not converge (error estimate {err:.3e})", error_estimate=err
        )
    return val.reshape(3, 3), float(err)


def coupling_from_spectrum(
    g: GreensEvaluator,
    emitters,
    cutoff: SpectralCutoff | None = None,
    *,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    self_free: bool = False,
) -> CouplingMatrix:
    """lambda_ij = (1/pi) int_0^inf omega Im G(r_i, r_j, omega) w(omega) d omega.

    ``self_free`` adds the (finite, cutoff-regularized) free-space part
    Im G0(r, r, omega) = omega / (6 pi) to the self blocks; off by default.
    """
    pos = _positions(emitters)
    if cutoff is None:
        cutoff = default_cutoff(pos)
    n = len(pos)
    blocks = np.zeros((n, n, 3, 3), dtype=complex)
    errors = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            val, err = _pair_integral(g, pos[i], pos[j], i == j, cutoff, rtol, atol, self_free)
            blocks[i, j] = val
            blocks[j, i] = val.T
            errors[i, j] = errors[j, i] = err
    meta = {"cutoff": cutoff.as_dict(), "max_error_estimate": float(errors.max()), "self_free": self_free}
    return CouplingMatrix(blocks, "spectrum", meta)


def coupling_from_residue(g: GreensEvaluator, emitters) -> CouplingMatrix:
    """lambda_ij = (1/2) [omega^2 G(r_i, r_j, omega)]_{omega=0}."""
    pos = _positions(emitters)
    n = len(pos)
    blocks = np.zeros((n, n, 3, 3), dtype=complex)
    for i in range(n):
        for j in range(i, n):
            if i == j:
                s = g.static(pos[i], pos[i], include_free=False)
            else:
                s = g.static(pos[i], pos[j])
            lam = 0.5 * s.real
            blocks[i, j] = lam
            blocks[j, i] = lam.T
    return CouplingMatrix(blocks, "residue", {"static": "analytic" if g.has_analytic_static else "extrapolated"})


def cutoff_kernel_closed_form(rho_over_lambda: float, n, rho: float | None = None) -> np.ndarray:
    """Free-space coupling with a Gaussian cutoff at wavelength Lambda, in closed form.

    Returns ``8 pi rho^3 lambda(omega_c)``, which tends to ``3nn - I`` as
    rho/Lambda grows. If ``rho`` is given, the un-normalized kernel is
    returned instead.
    """
    x = float(rho_over_lambda)
    n = as_vec3(n, name="n")
    n = n / np.linalg.norm(n)
    nn = np.outer(n, n)
    eye = np.eye(3)
    gauss = math.exp(-(math.pi * x) ** 2)
    out = 4 * math.pi**2.5 * x**3 * gauss * (eye - nn) + (
        erf(math.pi * x) - 2 * math.sqrt(math.pi) * x * gauss
    ) * (3 * nn - eye)
    if rho is not None:
        out = out / (8 * math.pi * rho**3)
    return out.astype(complex)


@dataclass(frozen=True)
class EffectiveHamiltonianSpec:
    """H_eff = H_le - sum_{i,j} mu_i . lambda_ij . mu_j over ordered pairs.

    ``hle`` is opaque here; when it is a matrix, :meth:`operator` assembles the
    full matrix given a representation of each scalar dipole operator.
    """

    hle: Any
    coupling: CouplingMatrix
    emitters: tuple

    def pair_coefficients(self) -> np.ndarray:
        """J_ij = mu_i . Re(lambda_ij) . mu_j."""
        mu = _dipoles(self.emitters)
        return np.einsum("ik,ijkl,jl->ij", mu, self.coupling.blocks.real, mu)

    def interaction(self, amplitudes=None) -> float:
        """-sum_ij s_i J_ij s_j for classical amplitudes ``s`` (default all ones)."""
        J = self.pair_coefficients()
        s = np.ones(len(J)) if amplitudes is None else np.asarray(amplitudes, dtype=float)
        return float(-s @ J @ s)

    def operator(self, dipole_ops: Sequence[np.ndarray]) -> np.ndarray:
        J = self.pair_coefficients()
        if len(dipole_ops) != len(J):
            raise DimensionError("one dipole operator per emitter required")
        h = np.array(self.hle, dtype=complex)
        for i, oi in enumerate(dipole_ops):
            for j, oj in enumerate(dipole_ops):
                if J[i, j] != 0:
                    h = h - J[i, j] * (oi @ oj)
        return h


def assemble_heff(hle, lam: CouplingMatrix, emitters) -> EffectiveHamiltonianSpec:
    emitters = tuple(emitters)
    if lam.n != len(emitters):
        raise DimensionError(f"coupling is {lam.n}x{lam.n} but roster has {len(emitters)} emitters")
    if isinstance(hle, np.ndarray) and (hle.ndim != 2 or hle.shape[0] != hle.shape[1]):
        raise DimensionError("H_le matrix must be square")
    return EffectiveHamiltonianSpec(hle, lam, emitters)


def modes_from_spectrum(
    g: GreensEvaluator, emitters, nodes, weights, *, cutoff: SpectralCutoff | None = None
) -> DiscreteModeSet:
    """Discretize the spectral integral into explicit modes.

    At each node the 3N x 3N matrix (w_n omega_n / pi) Im G (including the
    finite free-space self term) is factorized into eigenmodes, so that
    ``coupling_from_modes`` reproduces the quadrature sum
    ``coupling_from_spectrum(..., self_free=True)`` approximates.
    """
    pos = _positions(emitters)
    n = len(pos)
    freqs, fields = [], []
    for w, wt in zip(np.asarray(nodes, float), np.asarray(weights, float)):
        if not w > 0:
            raise ValueError("nodes must be positive frequencies")
        m = np.zeros((3 * n, 3 * n))
        for i in range(n):
            for j in range(n):
                if i == j:
                    im = g.im_scattered(pos[i], pos[i], w) + w / (6 * np.pi) * np.eye(3)
                else:
                    im = g.im_g(pos[i], pos[j], w)
                m[3 * i : 3 * i + 3, 3 * j : 3 * j + 3] = im
        m = 0.5 * (m + m.T) * (wt * w / np.pi)
        if cutoff is not None:
            m *= cutoff.weight(w)
        evals, vecs = np.linalg.eigh(m)
        keep = evals > 1e-14 * max(evals.max(), 0.0)
        for lam, v in zip(evals[keep], vecs.T[keep]):
            freqs.append(w)
            fields.append(math.sqrt(lam * w) * v.reshape(n, 3))
    return DiscreteModeSet(np.array(freqs), np.array(fields, dtype=complex), pos)


@dataclass(frozen=True)
class TruncationRow:
    omega_max: float
    coupling: CouplingMatrix
    rel_error: float
    error_estimate: float = 0.0


@dataclass(frozen=True)
class TruncationReport:
    cutoff_kind: str
    residue: CouplingMatrix
    rows: list = field(default_factory=list)


def truncation_report(
    g: GreensEvaluator,
    emitters,
    omega_grid,
    *,
    kind: str = "gaussian",
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> TruncationReport:
    """Partial couplings for a sequence of cutoffs, compared with the residue.

    ``kind="hard"`` integrates sharply up to each grid frequency; in free space
    those partial integrals oscillate with growing amplitude and never
    converge. ``kind="gaussian"`` uses each grid value as omega_c.
    """
    grid = np.asarray(omega_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("omega_grid must be non-empty")
    if np.any(np.diff(grid) < 0):
        raise ValueError("omega_grid must be ascending")
    residue = coupling_from_residue(g, emitters)
    ref = np.linalg.norm(residue.blocks)
    rows = []
    for w in grid:
        if w == 0:
            lam = CouplingMatrix(np.zeros_like(residue.blocks), "spectrum", {"cutoff": {"kind": kind, "frequency": 0.0}})
            rows.append(TruncationRow(0.0, lam, 1.0, 0.0))
            continue
        lam = coupling_from_spectrum(g, emitters, SpectralCutoff(kind, float(w)), rtol=rtol, atol=atol)
        err = float(np.linalg.norm(lam.blocks - residue.blocks) / ref) if ref > 0 else float(np.linalg.norm(lam.blocks))
        rows.append(TruncationRow(float(w), lam, err, lam.meta["max_error_estimate"]))
        log.debug("truncation omega_max=%g rel_error=%g", w, err)
    return TruncationReport(kind, residue, rows)
