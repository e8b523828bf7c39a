"""
Brute-force reference calculations.

* Exact diagonalization of two-level emitters (mu_i sigma_x, splitting eps_i)
  coupled to Fock-truncated cavity modes, for checking the adiabatic
  trace-out of the photons.
* Image-dipole series for a planar cavity made of two mirrors, for checking
  the static scattered Green's function of layered media.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .core import ConvergenceError, DimensionError, Emitter, GeometryError, as_vec3
from .direct import DiscreteModeSet, assemble_heff, coupling_from_modes
from .greens import MirrorSpec, mirror_static_g

log = logging.getLogger(__name__)

DENSE_LIMIT = 4096
DEFAULT_DIM_LIMIT = 2**20

_SX = sp.csr_matrix(np.array([[0.0, 1.0], [1.0, 0.0]]))
_SZ = sp.csr_matrix(np.array([[1.0, 0.0], [0.0, -1.0]]))


@dataclass(frozen=True)
class FockModel:
    """Two-level emitters coupled to discrete modes in the long-wavelength limit.

    H = sum_i (eps_i/2) sigma_z^i + sum_n omega_n a_n^+ a_n
        - sum_{i,n} sigma_x^i (g_in a_n + g_in^* a_n^+)   (+ self-energy constant)

    with g_in = mu_i . E_n(r_i).
    """

    emitters: tuple
    splittings: np.ndarray
    modes: DiscreteModeSet
    n_max: int = 30
    self_energy: bool = False
    dim_limit: int = DEFAULT_DIM_LIMIT

    def __post_init__(self):
        em = tuple(self.emitters)
        if not em or not all(isinstance(e, Emitter) for e in em):
            raise ValueError("emitters must be a non-empty sequence of Emitter")
        object.__setattr__(self, "emitters", em)
        eps = np.broadcast_to(np.asarray(self.splittings, dtype=float), (len(em),)).copy()
        if np.any(eps < 0):
            raise ValueError("emitter splittings must be non-negative")
        object.__setattr__(self, "splittings", eps)
        pos = np.array([e.position for e in em])
        if self.modes.n_emitters != len(em) or not np.allclose(self.modes.positions, pos):
            raise DimensionError("mode set was sampled on a different emitter roster")
        if int(self.n_max) < 1:
            raise ValueError("n_max must be at least 1")
        object.__setattr__(self, "n_max", int(self.n_max))
        if self.dimension > self.dim_limit:
            raise DimensionError(
                f"Hilbert dimension {self.dimension} exceeds the limit {self.dim_limit}"
            )

    @property
    def n_emitters(self) -> int:
        return len(self.emitters)

    @property
    def dimension(self) -> int:
        return 2**self.n_emitters * (self.n_max + 1) ** len(self.modes)

    @property
    def couplings(self) -> np.ndarray:
        """g_in = mu_i . E_n(r_i), shape (N, M)."""
        mu = np.array([e.dipole for e in self.emitters])
        return np.einsum("ik,nik->in", mu, self.modes.fields)

    @property
    def self_energy_constant(self) -> float:
        """sum_n |sum_i g_in|^2 / omega_n when enabled, else 0."""
        if not self.self_energy:
            return 0.0
        g = self.couplings.sum(axis=0)
        return float(np.sum(np.abs(g) ** 2 / self.modes.frequencies))

    def with_splitting(self, eps) -> "FockModel":
        return replace(self, splittings=eps)


def _embed(op, k: int, dims: Sequence[int]) -> sp.csr_matrix:
    out = sp.identity(1, format="csr")
    for site, d in enumerate(dims):
        out = sp.kron(out, op if site == k else sp.identity(d, format="csr"), format="csr")
    return out


def _hle_spin(model: FockModel, dims: Sequence[int]) -> sp.csr_matrix:
    h = sp.csr_matrix((int(np.prod(dims)),) * 2)
    for i, eps in enumerate(model.splittings):
        if eps:
            h = h + 0.5 * eps * _embed(_SZ, i, dims)
    return h


def full_hamiltonian(model: FockModel) -> sp.csr_matrix:
    n_em = model.n_emitters
    nb = model.n_max + 1
    dims = [2] * n_em + [nb] * len(model.modes)
    a = sp.diags(np.sqrt(np.arange(1, nb)), 1, format="csr")
    num = sp.diags(np.arange(nb, dtype=float), format="csr")
    h = _hle_spin(model, dims)
    g = model.couplings
    sx = [_embed(_SX, i, dims) for i in range(n_em)]
    for n, w in enumerate(model.modes.frequencies):
        an = _embed(a, n_em + n, dims)
        h = h + w * _embed(num, n_em + n, dims)
        field_op = sum(g[i, n] * sx[i] for i in range(n_em))
        coup = field_op @ an
        h = h - coup - coup.conj().T
    h = h + model.self_energy_constant * sp.identity(h.shape[0], format="csr")
    return h.tocsr()


def _lowest(h, dense_limit: int = DENSE_LIMIT) -> float:
    if not np.any(h.imag.data):
        h = h.real
    if h.shape[0] <= dense_limit:
        return float(eigh(h.toarray(), eigvals_only=True, subset_by_index=[0, 0])[0])
    try:
        w = eigsh(h, k=1, which="SA", tol=1e-14, return_eigenvectors=False)
    except ArpackNoConvergence as exc:
        raise ConvergenceError("iterative eigensolver did not converge") from exc
    return float(w[0])


def exact_ground_energy(model: FockModel, *, dense_limit: int = DENSE_LIMIT) -> float:
    """Lowest eigenvalue of the Fock-truncated full Hamiltonian."""
    return _lowest(full_hamiltonian(model), dense_limit)


def effective_ground_energy(model: FockModel) -> float:
    """Lowest eigenvalue of H_le - sum_ij mu_i . lambda_ij . mu_j with lambda from the mode sum."""
    dims = [2] * model.n_emitters
    hle = _hle_spin(model, dims).toarray() + model.self_energy_constant * np.eye(int(np.prod(dims)))
    lam = coupling_from_modes(model.modes, [e.position for e in model.emitters])
    spec = assemble_heff(hle, lam, model.emitters)
    sx = [_embed(_SX, i, dims).toarray() for i in range(model.n_emitters)]
    return float(np.linalg.eigvalsh(spec.operator(sx))[0])


def fock_convergence(model: FockModel, step: int = 5) -> float:
    """|E_g(n_max) - E_g(n_max + step)|."""
    return abs(exact_ground_energy(model) - exact_ground_energy(replace(model, n_max=model.n_max + step)))


@dataclass(frozen=True)
class TraceoutRow:
    eps_over_omega: float
    exact: float
    effective: float

    @property
    def energy_error(self) -> float:
        return abs(self.exact - self.effective)


def traceout_error_sweep(model: FockModel, eps_over_omega) -> list[TraceoutRow]:
    """Ground-energy error of the traced-out model as all splittings are set to eps.

    eps is measured in units of the lowest mode frequency.
    """
    w0 = float(np.min(model.modes.frequencies))
    rows = []
    for x in np.asarray(eps_over_omega, dtype=float):
        m = model.with_splitting(x * w0)
        rows.append(TraceoutRow(float(x), exact_ground_energy(m), effective_ground_energy(m)))
    return rows


def loglog_slope(x, y) -> float:
    """Least-squares slope of log y against log x."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


@dataclass(frozen=True)
class ImageSeriesConfig:
    """Two parallel mirrors normal to z at ``z1 < z2`` with static strengths f1, f2."""

    z1: float = 0.0
    z2: float = 1.0
    f1: float = 1.0
    f2: float = 1.0
    threshold: float = 1e-12
    max_images: int = 10**6

    def __post_init__(self):
        if not self.z2 > self.z1:
            raise GeometryError("mirror planes must be distinct with z1 < z2")
        for f in (self.f1, self.f2):
            if not abs(f) <= 1:
                raise ValueError("mirror strengths must lie in [-1, 1]")

    @property
    def gap(self) -> float:
        return self.z2 - self.z1

    def check_inside(self, r) -> None:
        z = as_vec3(r)[2]
        if not self.z1 < z < self.z2:
            raise GeometryError("points must lie strictly between the mirrors")


_FLIP = np.diag([-1.0, -1.0, 1.0])


def _kernels(r: np.ndarray, images: np.ndarray) -> np.ndarray:
    """(3 nn - I) / (4 pi rho^3) for each image position, shape (K, 3, 3)."""
    d = r[None, :] - images
    rho = np.linalg.norm(d, axis=1)
    n = d / rho[:, None]
    k = 3 * n[:, :, None] * n[:, None, :] - np.eye(3)[None]
    return k / (4 * np.pi * rho[:, None, None] ** 3)


def _order_terms(cfg: ImageSeriesConfig, r, rp, m: np.ndarray) -> np.ndarray:
    """Sum of the four images of reflection order m >= 1, shape (len(m), 3, 3)."""
    L = cfg.gap
    x, y, zp = rp
    p = cfg.f1 * cfg.f2
    w = p ** m.astype(float)
    terms = np.zeros((len(m), 3, 3))
    if p != 0:
        for z_img in (zp + 2 * m * L, zp - 2 * m * L):
            img = np.column_stack([np.full(len(m), x), np.full(len(m), y), z_img])
            terms += w[:, None, None] * _kernels(r, img)
    for f, z_img in ((cfg.f1, 2 * cfg.z1 - zp - 2 * m * L), (cfg.f2, 2 * cfg.z2 - zp + 2 * m * L)):
        if f == 0:
            continue
        img = np.column_stack([np.full(len(m), x), np.full(len(m), y), z_img])
        terms += (f * w)[:, None, None] * (_kernels(r, img) @ _FLIP)
    return 0.5 * terms


def image_series_static(
    cfg: ImageSeriesConfig, r, rp, *, reverse: bool = False, chunk: int = 4096
) -> np.ndarray:
    """Static scattered coupling kernel (residue convention, 1/2 included) of a two-mirror cavity.

    Images are grouped by reflection order m; the series stops at the first
    order whose contribution is below ``threshold`` times the partial sum.
    ``reverse`` sums the same retained terms from the highest order down.
    """
    r, rp = as_vec3(r), as_vec3(rp)
    cfg.check_inside(r)
    cfg.check_inside(rp)
    m1 = MirrorSpec(z0=cfg.z1, strength=cfg.f1)
    m2 = MirrorSpec(z0=cfg.z2, strength=cfg.f2)
    first = np.real(mirror_static_g(m1, r, rp) + mirror_static_g(m2, r, rp))
    blocks = [first[None]]
    partial = first.copy()
    n_orders = 0
    converged = cfg.f1 * cfg.f2 == 0
    start = 1
    while not converged:
        if 4 * (start + chunk) > cfg.max_images:
            chunk = cfg.max_images // 4 - start + 1
            if chunk <= 0:
                raise ConvergenceError(
                    f"image series not converged within {cfg.max_images} images",
                    float(np.linalg.norm(blocks[-1][-1]) / max(np.linalg.norm(partial), 1e-300)),
                )
        m = np.arange(start, start + chunk)
        terms = _order_terms(cfg, r, rp, m)
        cum = partial[None] + np.cumsum(terms, axis=0)
        ratio = np.linalg.norm(terms, axis=(1, 2)) / np.maximum(
            np.linalg.norm(cum, axis=(1, 2)), 1e-300
        )
        hit = np.flatnonzero(ratio < cfg.threshold)
        if hit.size:
            stop = int(hit[0]) + 1
            blocks.append(terms[:stop])
            n_orders = start + stop - 1
            converged = True
        else:
            blocks.append(terms)
            partial = cum[-1]
            start += chunk
    allterms = np.concatenate(blocks)
    if reverse:
        allterms = allterms[::-1]
    out = np.zeros((3, 3))
    for t in allterms:
        out = out + t
    log.debug("image series used %d reflection orders", n_orders)
    return out.astype(complex)
