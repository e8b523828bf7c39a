import itertools

import numpy as np
import pytest

from cavityint.core import ConvergenceError, DimensionError, Emitter, GeometryError
from cavityint.direct import DiscreteModeSet
from cavityint.greens import MirrorSpec, mirror_static_g
from cavityint.oracle import (
    FockModel,
    ImageSeriesConfig,
    effective_ground_energy,
    exact_ground_energy,
    fock_convergence,
    image_series_static,
    loglog_slope,
    traceout_error_sweep,
)


def single(g=0.1, eps=0.0, n_max=20):
    em = [Emitter([0, 0, 0], [1, 0, 0])]
    modes = DiscreteModeSet([1.0], [[[g, 0, 0]]], [[0, 0, 0]])
    return FockModel(em, eps, modes, n_max)


def pair(g1=0.4, g2=0.4, eps=0.0, n_max=30):
    pos = [[0, 0, 0], [1, 0, 0]]
    em = [Emitter(p, [1, 0, 0]) for p in pos]
    modes = DiscreteModeSet([1.0], [[[g1, 0, 0], [g2, 0, 0]]], pos)
    return FockModel(em, eps, modes, n_max)


def test_displaced_oscillator():
    assert exact_ground_energy(single()) == pytest.approx(-0.01, abs=1e-10)


def test_free_two_level():
    assert exact_ground_energy(single(g=0.0, eps=0.3)) == pytest.approx(-0.15, abs=1e-14)


def test_two_emitters_polaron_limit():
    g1, g2 = 0.3, -0.2
    m = pair(g1, g2)
    expected = min(-((s1 * g1 + s2 * g2) ** 2) for s1, s2 in itertools.product((1, -1), repeat=2))
    assert exact_ground_energy(m) == pytest.approx(expected, abs=1e-10)


def test_commuting_limit_is_exact_for_strong_coupling(rng):
    pos = [[0, 0, 0], [1, 0, 0]]
    em = [Emitter(p, rng.normal(size=3)) for p in pos]
    f = rng.normal(size=(2, 2, 3)) + 1j * rng.normal(size=(2, 2, 3))
    m = FockModel(em, 0.0, DiscreteModeSet([1.0, 1.7], 0.3 * f, pos), 22)
    assert abs(exact_ground_energy(m) - effective_ground_energy(m)) <= 1e-10


def test_fock_cutoff_convergence():
    m = pair(eps=0.2, n_max=20)
    energies = [exact_ground_energy(FockModel(m.emitters, 0.2, m.modes, n)) for n in (5, 10, 15, 20)]
    assert all(b <= a + 1e-14 for a, b in zip(energies, energies[1:]))
    assert fock_convergence(m) <= 1e-10


def test_self_energy_cancels():
    m = pair(eps=0.1, n_max=20)
    with_se = FockModel(m.emitters, 0.1, m.modes, 20, self_energy=True)
    assert with_se.self_energy_constant == pytest.approx(0.64)
    d0 = exact_ground_energy(m) - effective_ground_energy(m)
    d1 = exact_ground_energy(with_se) - effective_ground_energy(with_se)
    assert d1 == pytest.approx(d0, abs=1e-12)


def test_dimension_limits():
    with pytest.raises(DimensionError):
        FockModel(pair().emitters, 0.0, pair().modes, 30, dim_limit=100)
    with pytest.raises(DimensionError):
        FockModel(single().emitters + pair().emitters[1:], 0.0, single().modes, 5)
    with pytest.raises(ValueError):
        FockModel(single().emitters, 0.0, single().modes, 0)


def test_iterative_solver_matches_dense():
    m = pair(eps=0.1, n_max=20)
    assert exact_ground_energy(m, dense_limit=10) == pytest.approx(exact_ground_energy(m), abs=1e-10)


def test_traceout_sweep():
    grid = [0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3]
    rows = traceout_error_sweep(pair(), grid)
    assert [r.eps_over_omega for r in rows] == grid
    err = np.array([r.energy_error for r in rows])
    assert np.all(err >= 0)
    assert err[0] <= 1e-10
    assert err[4] / err[1] >= 5
    assert loglog_slope(grid[1:], err[1:]) >= 1


def test_single_emitter_error_is_sublinear():
    """Recorded behaviour: one emitter alone gives a slope just below one."""
    grid = [0.01, 0.02, 0.05, 0.1, 0.2, 0.3]
    err = [r.energy_error for r in traceout_error_sweep(single(g=0.4, n_max=30), grid)]
    assert 0.8 < loglog_slope(grid, err) < 1.0


def test_image_series_single_mirror_limit():
    cfg = ImageSeriesConfig(0.0, 1.0, 0.7, 0.0)
    r, rp = [0.1, 0.2, 0.3], [0.5, -0.1, 0.6]
    assert np.array_equal(image_series_static(cfg, r, rp), mirror_static_g(MirrorSpec(0.0, 0.7), r, rp).real.astype(complex))


def test_image_series_order_independence():
    cfg = ImageSeriesConfig(0.0, 1.0, 1.0, 1.0)
    a = image_series_static(cfg, [0, 0, 0.3], [0, 0, 0.6])
    b = image_series_static(cfg, [0, 0, 0.3], [0, 0, 0.6], reverse=True)
    assert np.max(np.abs(a - b)) <= 1e-12 * np.max(np.abs(a))
    assert np.all(np.isfinite(a)) and a[2, 2].real > 0


def test_image_series_mirror_symmetry():
    cfg = ImageSeriesConfig(0.0, 1.0, 1.0, 1.0)
    a = image_series_static(cfg, [0, 0, 0.3], [0.2, 0, 0.6])
    b = image_series_static(cfg, [0, 0, 0.7], [0.2, 0, 0.4])
    assert a[2, 2] == pytest.approx(b[2, 2], rel=1e-12)


def test_image_series_errors():
    with pytest.raises(GeometryError):
        ImageSeriesConfig(1.0, 1.0)
    cfg = ImageSeriesConfig(0.0, 1.0)
    with pytest.raises(GeometryError):
        image_series_static(cfg, [0, 0, 1.2], [0, 0, 0.5])
    tight = ImageSeriesConfig(0.0, 1.0, 1.0, 1.0, threshold=1e-30, max_images=400)
    with pytest.raises(ConvergenceError):
        image_series_static(tight, [0, 0, 0.3], [0, 0, 0.6])
