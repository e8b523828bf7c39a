import inspect

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cavityint import direct
from cavityint.core import CouplingMatrix, DimensionError, Emitter, channel_relative_error
from cavityint.direct import (
    DiscreteModeSet,
    SpectralCutoff,
    assemble_heff,
    coupling_from_modes,
    coupling_from_residue,
    coupling_from_spectrum,
    cutoff_kernel_closed_form,
    default_cutoff,
    modes_from_spectrum,
    truncation_report,
)
from cavityint.greens import (
    Drude,
    FreeSpace,
    ImageMirror,
    LayerStack,
    Layered,
    MirrorSpec,
    electrostatic_kernel,
    mirror_static_g,
)

from conftest import random_pair

Z = [0.0, 0.0, 1.0]


def test_single_mode_sum():
    pos = [[0, 0, 0], [1, 0, 0]]
    modes = DiscreteModeSet([1.0], [[[1, 0, 0], [1, 0, 0]]], pos)
    lam = coupling_from_modes(modes, pos)
    for i in range(2):
        for j in range(2):
            assert np.allclose(lam[i, j], np.diag([1.0, 0, 0]))


def test_uncoupled_emitter_row_vanishes(rng):
    pos = [[0, 0, 0], [1, 0, 0], [2, 0, 0]]
    f = rng.normal(size=(4, 3, 3)) + 1j * rng.normal(size=(4, 3, 3))
    f[:, 1] = 0
    lam = coupling_from_modes(DiscreteModeSet([1.0, 2.0, 3.0, 4.0], f, pos), pos)
    assert np.all(lam.blocks[1] == 0) and np.all(lam.blocks[:, 1] == 0)
    assert lam.symmetry_defect() < 1e-14


def test_mode_roster_mismatch():
    modes = DiscreteModeSet([1.0], [[[1, 0, 0]]], [[0, 0, 0]])
    with pytest.raises(DimensionError):
        coupling_from_modes(modes, [[0, 0, 0], [1, 0, 0]])


def test_residue_free_space_pair():
    lam = coupling_from_residue(FreeSpace(), [[0, 0, 0], Z])
    assert lam[0, 1][2, 2] == pytest.approx(2 / (8 * np.pi), rel=1e-15)
    assert lam[0, 1][0, 0] == pytest.approx(-1 / (8 * np.pi), rel=1e-15)
    assert np.all(lam[0, 0] == 0)


def test_residue_vacuum_stack_equals_free_space():
    pos = [[0, 0, 0.5], [0.4, 0.3, 0.9]]
    stack = LayerStack.half_space(direct_constant(1.0))
    a = coupling_from_residue(Layered(stack), pos)
    b = coupling_from_residue(FreeSpace(), pos)
    assert np.allclose(a.blocks, b.blocks, rtol=0, atol=1e-15)


def direct_constant(eps):
    from cavityint.greens import Constant

    return Constant(eps)


def test_residue_pec_mirror_self_term():
    g = ImageMirror(MirrorSpec(0.0, 1.0))
    lam = coupling_from_residue(g, [[0, 0, 0.5], [1, 0, 0.5]])
    assert lam[0, 0][2, 2] == pytest.approx(1 / (4 * np.pi), rel=1e-14)
    expected = electrostatic_kernel([0, 0, 0.5], [1, 0, 0.5]) + mirror_static_g(
        MirrorSpec(0.0, 1.0), [0, 0, 0.5], [1, 0, 0.5]
    )
    assert np.allclose(lam[0, 1], expected, atol=1e-16)


def test_spectrum_hard_zero_is_zero():
    lam = coupling_from_spectrum(FreeSpace(), [[0, 0, 0], Z], SpectralCutoff.hard(0.0))
    assert np.all(lam.blocks == 0)


def test_cutoff_validation():
    with pytest.raises(ValueError, match="cutoff frequency must be positive"):
        SpectralCutoff.gaussian(-1.0)
    with pytest.raises(ValueError):
        SpectralCutoff("box", 1.0)
    assert default_cutoff([[0, 0, 0], [0, 0, 2.0]]).frequency == pytest.approx(2 * np.pi)


@pytest.mark.parametrize("x", [0.25, 0.5, 1.0, 2.0, 3.0])
def test_closed_form_against_quadrature(x):
    lam = coupling_from_spectrum(FreeSpace(), [[0, 0, 0], Z], SpectralCutoff.from_rho_over_lambda(x, 1.0))
    ref = cutoff_kernel_closed_form(x, Z, rho=1.0)
    assert np.max(np.abs(lam[0, 1] - ref)) <= 1e-8 * np.max(np.abs(ref))


def test_closed_form_limits():
    assert np.all(cutoff_kernel_closed_form(0.0, Z) == 0)
    target = 3 * np.outer(Z, Z) - np.eye(3)
    assert np.max(np.abs(cutoff_kernel_closed_form(3.0, Z) - target)) <= 1e-15
    err = channel_relative_error(cutoff_kernel_closed_form(1.0, Z), target)
    assert err == pytest.approx(0.0038, abs=5e-4)


def test_spectrum_route_agrees_with_residue(rng):
    for _ in range(3):
        r, rp = random_pair(rng, 0.5, 2.0)
        pos = [r, rp]
        lam = coupling_from_spectrum(FreeSpace(), pos)
        res = coupling_from_residue(FreeSpace(), pos)
        assert np.linalg.norm(lam.blocks - res.blocks) <= 1e-8 * np.linalg.norm(res.blocks)
        assert lam.symmetry_defect() < 1e-10


def test_spectrum_route_agrees_with_residue_near_mirror():
    g = ImageMirror(MirrorSpec(0.0, 1.0))
    pos = [[0, 0, 0.6], [0.5, 0.2, 0.9]]
    lam = coupling_from_spectrum(g, pos, SpectralCutoff.from_rho_over_lambda(2.5, 0.5))
    res = coupling_from_residue(g, pos)
    assert np.linalg.norm(lam.blocks - res.blocks) <= 1e-8 * np.linalg.norm(res.blocks)


def test_modes_from_spectrum_reproduce_integral():
    """A Gauss-Legendre discretization of the spectrum, recast as explicit modes."""
    pos = [[0, 0, 0], [0, 0, 1.0]]
    cut = SpectralCutoff.from_rho_over_lambda(1.0, 1.0)
    x, w = np.polynomial.legendre.leggauss(120)
    nodes = 0.5 * cut.upper * (x + 1)
    weights = 0.5 * cut.upper * w
    modes = modes_from_spectrum(FreeSpace(), pos, nodes, weights, cutoff=cut)
    lam_modes = coupling_from_modes(modes, pos)
    lam_int = coupling_from_spectrum(FreeSpace(), pos, cut, self_free=True)
    assert np.linalg.norm(lam_modes.blocks - lam_int.blocks) <= 1e-2 * np.linalg.norm(lam_int.blocks)


def test_heff_single_mode():
    pos = [[0, 0, 0]]
    e = [Emitter(pos[0], [1, 0, 0])]
    lam = coupling_from_modes(DiscreteModeSet([2.0], [[[0.3, 0, 0]]], pos), pos)
    spec = assemble_heff(np.zeros((2, 2)), lam, e)
    assert spec.interaction() == pytest.approx(-0.09 / 2.0)


def test_heff_free_space_pair_double_count():
    e = [Emitter([0, 0, 0], Z), Emitter(Z, Z)]
    lam = coupling_from_residue(FreeSpace(), [x.position for x in e])
    spec = assemble_heff(0.0, lam, e)
    assert spec.interaction() == pytest.approx(-2 * 2 / (8 * np.pi), rel=1e-14)


def test_heff_zero_coupling_is_hle(rng):
    hle = rng.normal(size=(4, 4))
    hle = hle + hle.T
    e = [Emitter([0, 0, 0]), Emitter([1, 0, 0])]
    lam = CouplingMatrix(np.zeros((2, 2, 3, 3)), "modes")
    sx = np.array([[0, 1], [1, 0]])
    ops = [np.kron(sx, np.eye(2)), np.kron(np.eye(2), sx)]
    assert np.allclose(assemble_heff(hle, lam, e).operator(ops), hle)
    with pytest.raises(DimensionError):
        assemble_heff(hle, lam, e[:1])


def test_no_matter_energy_parameter_in_signatures():
    for name in ("coupling_from_modes", "coupling_from_spectrum", "coupling_from_residue", "truncation_report"):
        params = inspect.signature(getattr(direct, name)).parameters
        assert not any(p in params for p in ("epsilon", "eps", "energy", "splitting"))


def test_truncation_report_free_space():
    pos = [[0, 0, 0], Z]
    grid = [0.0] + [2 * np.pi * x for x in (0.5, 1.0, 2.0)]
    rep = truncation_report(FreeSpace(), pos, grid)
    errs = [r.rel_error for r in rep.rows]
    assert errs[0] == 1.0 and np.all(rep.rows[0].coupling.blocks == 0)
    assert errs[1] > errs[2] > errs[3]
    assert errs[3] <= 1e-8
    assert rep.cutoff_kind == "gaussian"
    with pytest.raises(ValueError):
        truncation_report(FreeSpace(), pos, [2.0, 1.0])


def test_hard_cutoff_does_not_converge_in_free_space():
    pos = [[0, 0, 0], Z]
    grid = [2 * np.pi * x for x in (2.0, 4.0, 8.0)]
    rep = truncation_report(FreeSpace(), pos, grid, kind="hard")
    assert min(r.rel_error for r in rep.rows) > 0.1


@pytest.mark.slow
def test_hard_cutoff_just_above_first_cavity_resonance():
    # Lossy metal mirrors keep the guided-mode poles off the real axis.
    g = Layered(LayerStack.cavity(Drude(100.0, 2.0), Drude(100.0, 2.0), 1.0))
    pos = [[0, 0, 0.3], [0, 0, 0.6]]
    rep = truncation_report(g, pos, [1.1 * np.pi], kind="hard", rtol=1e-6, atol=1e-10)
    row = rep.rows[0]
    assert row.rel_error > 0.1
    assert row.error_estimate < 1e-6


@settings(max_examples=25, deadline=None)
@given(
    st.lists(st.floats(-3, 3), min_size=3, max_size=3),
    st.lists(st.floats(-3, 3), min_size=3, max_size=3),
)
def test_residue_symmetry_property(a, b):
    a, b = np.array(a), np.array(b)
    if np.linalg.norm(a - b) < 1e-2:
        return
    lam = coupling_from_residue(FreeSpace(), [a, b])
    assert lam.symmetry_defect() <= 1e-10
    assert np.allclose(lam[0, 1], electrostatic_kernel(a, b), rtol=1e-12, atol=0)
