"""
Indirect coupling through local bosonic mediators.

Mediators (frequency Omega_i, dipole nu_i) hybridize with discrete cavity
modes within the rotating-wave approximation; the coupled quadratic
Hamiltonian

    H_mp = [[Omega, zeta], [zeta^H, omega]],   zeta_in = nu_i^* . E_n(r_i)

is diagonalized into polaritons. Matter excitations coupled locally with
strength Gamma_i then interact through xi_ij = Gamma_i^* D_ij Gamma_j, where D
is the mediator block of H_mp^{-1}.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .core import (
    DimensionError,
    InstabilityError,
    SingularMatrixError,
    UnsupportedConfigurationError,
    as_vec3,
)
from .direct import DiscreteModeSet, coupling_from_residue
from .greens import GreensEvaluator

log = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class Mediator:
    position: np.ndarray
    dipole: np.ndarray
    frequency: float
    coupling: complex = 1.0

    def __post_init__(self):
        object.__setattr__(self, "position", as_vec3(self.position, name="position"))
        object.__setattr__(self, "dipole", as_vec3(self.dipole, name="dipole", dtype=complex))
        if not self.frequency > 0:
            raise ValueError("mediator frequency must be positive")
        object.__setattr__(self, "coupling", complex(self.coupling))


@dataclass(frozen=True)
class HmpMatrix:
    matrix: np.ndarray
    n_mediators: int

    @property
    def n_modes(self) -> int:
        return self.matrix.shape[0] - self.n_mediators

    @property
    def omega_mediators(self) -> np.ndarray:
        return np.diag(self.matrix)[: self.n_mediators].real

    @property
    def omega_modes(self) -> np.ndarray:
        return np.diag(self.matrix)[self.n_mediators :].real

    @property
    def zeta(self) -> np.ndarray:
        return self.matrix[: self.n_mediators, self.n_mediators :]


@dataclass(frozen=True)
class PolaritonBasis:
    """Ascending polariton frequencies and the unitary whose columns are eigenvectors.

    ``C`` (mediator rows) and ``A`` (mode rows) split ``U`` as in U = (C; A).
    """

    frequencies: np.ndarray
    U: np.ndarray
    n_mediators: int

    @property
    def C(self) -> np.ndarray:
        return self.U[: self.n_mediators]

    @property
    def A(self) -> np.ndarray:
        return self.U[self.n_mediators :]

    @property
    def stable(self) -> bool:
        return bool(np.all(self.frequencies > 0))

    @property
    def offending(self) -> list[tuple[int, float]]:
        return [(int(n), float(w)) for n, w in enumerate(self.frequencies) if not w > 0]


@dataclass(frozen=True)
class XiMatrix:
    values: np.ndarray
    method: str
    meta: dict = field(default_factory=dict)

    @property
    def real(self) -> np.ndarray:
        return self.values.real

    def hermiticity_defect(self) -> float:
        scale = np.max(np.abs(self.values))
        if scale == 0:
            return 0.0
        return float(np.max(np.abs(self.values - self.values.conj().T)) / scale)


def mediator_mode_couplings(mediators: Sequence[Mediator], modes: DiscreteModeSet) -> np.ndarray:
    """zeta_in = nu_i^* . E_n(r_i), shape (N, M)."""
    if modes.n_emitters != len(mediators):
        raise DimensionError(
            f"modes sampled at {modes.n_emitters} points but {len(mediators)} mediators given"
        )
    pos = np.array([m.position for m in mediators])
    if not np.allclose(pos, modes.positions):
        raise DimensionError("mode fields were not sampled at the mediator positions")
    nu = np.array([m.dipole for m in mediators])
    return np.einsum("ik,nik->in", nu.conj(), modes.fields)


def assemble_hmp(mediators: Sequence[Mediator], modes: DiscreteModeSet) -> HmpMatrix:
    zeta = mediator_mode_couplings(mediators, modes)
    n, m = zeta.shape
    h = np.zeros((n + m, n + m), dtype=complex)
    h[:n, :n] = np.diag([med.frequency for med in mediators])
    h[n:, n:] = np.diag(modes.frequencies)
    h[:n, n:] = zeta
    h[n:, :n] = zeta.conj().T
    return HmpMatrix(h, n)


def _phase_fix(U: np.ndarray) -> np.ndarray:
    """Make the first non-negligible component of every column real positive."""
    U = U.copy()
    for col in range(U.shape[1]):
        v = U[:, col]
        k = int(np.argmax(np.abs(v) > 1e-10 * np.max(np.abs(v))))
        U[:, col] = v * (abs(v[k]) / v[k])
    return U


def diagonalize_polaritons(h: HmpMatrix) -> PolaritonBasis:
    H = h.matrix
    scale = max(np.max(np.abs(H)), np.finfo(float).tiny)
    if np.max(np.abs(H - H.conj().T)) > HERMITIAN_TOL * scale:
        raise ValueError("H_mp is not Hermitian")
    w, U = np.linalg.eigh(H)
    return PolaritonBasis(w, _phase_fix(U), h.n_mediators)


def _check_stable(h: HmpMatrix, basis: PolaritonBasis | None = None) -> None:
    if basis is None:
        try:
            np.linalg.cholesky(h.matrix)
            return
        except np.linalg.LinAlgError:
            basis = diagonalize_polaritons(h)
    if not basis.stable:
        raise InstabilityError(
            f"non-positive polariton frequencies {basis.offending}; D is undefined",
            basis.offending,
        )


def d_matrix(h: HmpMatrix, method: str = "eigensum") -> np.ndarray:
    """Mediator block of H_mp^{-1} (hbar = 1).

    ``eigensum``      sum_n C_in C_jn^* / w_n over polaritons
    ``inverse_block`` top-left N x N block of the full inverse
    ``schur``         (Omega - zeta omega^{-1} zeta^H)^{-1}
    """
    n = h.n_mediators
    if method == "eigensum":
        basis = diagonalize_polaritons(h)
        _check_stable(h, basis)
        C = basis.C
        return (C / basis.frequencies) @ C.conj().T
    _check_stable(h)
    if method == "inverse_block":
        try:
            inv = np.linalg.solve(h.matrix, np.eye(h.matrix.shape[0]))
        except np.linalg.LinAlgError as exc:
            raise SingularMatrixError("H_mp is singular") from exc
        return inv[:n, :n]
    if method == "schur":
        w = h.omega_modes
        if np.any(w == 0):
            raise SingularMatrixError("mode block is singular")
        zeta = h.zeta
        s = h.matrix[:n, :n] - (zeta / w) @ zeta.conj().T
        try:
            return np.linalg.inv(s)
        except np.linalg.LinAlgError as exc:
            raise SingularMatrixError("Schur complement is singular") from exc
    raise ValueError(f"unknown D-matrix method {method!r}")


def _common_frequency(mediators: Sequence[Mediator]) -> float:
    om = np.array([m.frequency for m in mediators])
    if not np.all(om == om[0]):
        raise UnsupportedConfigurationError(
            "perturbative and electrostatic xi need a single mediator frequency"
        )
    return float(om[0])


def xi_matrix(
    mediators: Sequence[Mediator],
    modes: DiscreteModeSet | None = None,
    g: GreensEvaluator | None = None,
    method: str = "exact",
    *,
    d_method: str = "eigensum",
) -> XiMatrix:
    """Effective matter-matter coupling xi_ij.

    ``exact``          Gamma_i^* D_ij Gamma_j from the polariton problem
    ``perturbative``   leading order in zeta / Omega with the explicit mode sum
    ``electrostatic``  the mode sum replaced by the static Green's function
    """
    gam = np.array([m.coupling for m in mediators])
    gg = np.outer(gam.conj(), gam)
    if method == "exact":
        if modes is None:
            raise ValueError("exact xi needs a mode set")
        D = d_matrix(assemble_hmp(mediators, modes), d_method)
        return XiMatrix(gg * D, "exact", {"d_method": d_method})
    om = _common_frequency(mediators)
    if method == "perturbative":
        if modes is None:
            raise ValueError("perturbative xi needs a mode set")
        kernel = mode_sum_kernel(mediators, modes)
    elif method == "electrostatic":
        if g is None:
            raise ValueError("electrostatic xi needs a Green's function evaluator")
        lam = coupling_from_residue(g, [m.position for m in mediators])
        nu = np.array([m.dipole for m in mediators])
        kernel = np.einsum("ik,ijkl,jl->ij", nu.conj(), lam.blocks.real, nu)
    else:
        raise ValueError(f"unknown xi method {method!r}")
    values = gg * (np.eye(len(mediators)) / om + kernel / om**2)
    return XiMatrix(values, method)


def mode_sum_kernel(mediators: Sequence[Mediator], modes: DiscreteModeSet) -> np.ndarray:
    """X_ij = sum_n zeta_in zeta_jn^* / omega_n, the zeta omega^{-1} zeta^H product."""
    zeta = mediator_mode_couplings(mediators, modes)
    return (zeta / modes.frequencies) @ zeta.conj().T


def coupling_ratio(mediators: Sequence[Mediator], modes: DiscreteModeSet) -> float:
    """max_i sqrt(X_ii / Omega_i); equals |zeta| / Omega for one resonant mode."""
    X = mode_sum_kernel(mediators, modes)
    om = np.array([m.frequency for m in mediators])
    return float(np.sqrt(np.max(np.diag(X).real / om)))


@dataclass(frozen=True)
class SweepRow:
    Omega: float
    xi_offdiag: complex
    xi_normalized: float
    xi_truncated_normalized: float
    polariton_frequencies: np.ndarray
    coupling_ratio: float
    warning: str | None = None


def _truncated_polariton(basis: PolaritonBasis, mode_freqs: np.ndarray, Omega: float) -> int:
    """Polariton carrying the largest weight of the cavity mode closest to Omega.

    Ties (within 1e-9) go to the lower polariton.
    """
    r = int(np.argmin(np.abs(mode_freqs - Omega)))
    weight = np.abs(basis.A[r]) ** 2
    best = weight.max()
    return int(np.flatnonzero(weight >= best - 1e-9)[0])


def resonance_sweep(
    mediators: Sequence[Mediator],
    modes: DiscreteModeSet,
    omega_sweep,
    *,
    pair: tuple[int, int] = (0, 1),
    max_ratio: float = 0.05,
) -> list[SweepRow]:
    """Exact xi between one mediator pair as the common mediator frequency is swept.

    ``xi_normalized`` is Re(xi_ij) Omega^2 / (Gamma_i^* Gamma_j); the
    truncated variant keeps a single polariton (see ``_truncated_polariton``)
    in the D sum. Rows whose coupling ratio exceeds ``max_ratio`` carry a
    warning instead of failing.
    """
    i, j = pair
    if i == j:
        raise ValueError("pair must name two different mediators")
    gam = np.array([m.coupling for m in mediators])
    norm = gam[i].conj() * gam[j]
    rows = []
    for Om in np.asarray(omega_sweep, dtype=float):
        meds = [replace(m, frequency=float(Om)) for m in mediators]
        h = assemble_hmp(meds, modes)
        basis = diagonalize_polaritons(h)
        _check_stable(h, basis)
        C = basis.C
        D = (C / basis.frequencies) @ C.conj().T
        xi = norm * D[i, j]
        n = _truncated_polariton(basis, modes.frequencies, Om)
        d_trunc = C[i, n] * C[j, n].conj() / basis.frequencies[n]
        ratio = coupling_ratio(meds, modes)
        warning = None
        if ratio > max_ratio:
            warning = f"coupling ratio {ratio:.3g} exceeds {max_ratio:g}; outside the perturbative regime"
            log.warning("Omega=%g: %s", Om, warning)
        rows.append(
            SweepRow(
                float(Om),
                complex(xi),
                float((D[i, j] * Om**2).real),
                float((d_trunc * Om**2).real),
                basis.frequencies.copy(),
                ratio,
                warning,
            )
        )
    return rows


def relative_variation(values) -> float:
    """(max - min) / max |value| of a sweep column."""
    v = np.asarray(values, dtype=float)
    top = np.max(np.abs(v))
    if top == 0:
        return 0.0
    return float((v.max() - v.min()) / top)


def planar_cavity_modes(
    positions, n_modes: int, omega1: float = 1.0, amplitude: float = 1.0, length: float | None = None
) -> DiscreteModeSet:
    """Standing waves of an ideal one-dimensional cavity, polarized along x.

    omega_n = n omega1 and E_n(z) = amplitude sqrt(omega_n) sin(n pi z / L)
    with L = pi / omega1 unless given.
    """
    pos = np.atleast_2d(np.asarray(positions, dtype=float))
    if n_modes < 1 or not omega1 > 0:
        raise ValueError("need at least one mode and a positive fundamental frequency")
    L = np.pi / omega1 if length is None else float(length)
    n = np.arange(1, n_modes + 1)
    w = n * omega1
    profile = amplitude * np.sqrt(w)[:, None] * np.sin(np.outer(n, pos[:, 2]) * np.pi / L)
    fields = np.zeros((n_modes, len(pos), 3), dtype=complex)
    fields[:, :, 0] = profile
    return DiscreteModeSet(w, fields, pos)


def scale_to_ratio(
    mediators: Sequence[Mediator], modes: DiscreteModeSet, omega_min: float, target: float
) -> DiscreteModeSet:
    """Rescale all mode fields so the coupling ratio at mediator frequency ``omega_min`` equals ``target``.

    The ratio falls as Omega^{-1/2}, so ``omega_min`` should be the lowest
    frequency of the intended sweep.
    """
    meds = [replace(m, frequency=float(omega_min)) for m in mediators]
    now = coupling_ratio(meds, modes)
    if now == 0:
        raise ValueError("mode fields vanish at the mediator positions")
    return DiscreteModeSet(modes.frequencies, modes.fields * (target / now), modes.positions)
