"""Acceptance criteria, one test each, with the stated tolerances and time budgets."""
import time

import numpy as np

from cavityint.core import Emitter, channel_relative_error
from cavityint.direct import (
    DiscreteModeSet,
    SpectralCutoff,
    coupling_from_residue,
    coupling_from_spectrum,
    cutoff_kernel_closed_form,
    truncation_report,
)
from cavityint.greens import (
    Constant,
    Drude,
    FreeSpace,
    ImageMirror,
    Layered,
    LayerStack,
    MirrorSpec,
    PerfectConductor,
    electrostatic_kernel,
)
from cavityint.mediator import (
    Mediator,
    assemble_hmp,
    d_matrix,
    planar_cavity_modes,
    relative_variation,
    resonance_sweep,
    scale_to_ratio,
)
from cavityint.oracle import FockModel, loglog_slope, traceout_error_sweep

from conftest import random_pair, record

Z = np.array([0.0, 0.0, 1.0])


def rel(a, b):
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))


def test_criterion_1_electrostatic_identity():
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        r, rp = random_pair(rng, 0.1, 10.0)
        lam = coupling_from_residue(FreeSpace(), [r, rp])
        worst = max(worst, rel(lam[0, 1], electrostatic_kernel(r, rp)))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-12 and dt < 1.0
    record(1, "residue equals electrostatic kernel", ok, f"max rel {worst:.2e} (<= 1e-12), {dt:.3f} s (< 1 s)")
    assert ok


def test_criterion_2_cutoff_convergence():
    t0 = time.perf_counter()
    pos = [np.zeros(3), Z]
    ref = coupling_from_residue(FreeSpace(), pos)[0, 1].real
    errs = {}
    for x in (1.0, 2.0):
        lam = coupling_from_spectrum(FreeSpace(), pos, SpectralCutoff.from_rho_over_lambda(x, 1.0))
        errs[x] = channel_relative_error(lam[0, 1].real, ref)
    dt = time.perf_counter() - t0
    ok = abs(errs[1.0] - 0.004) <= 0.0005 and errs[2.0] <= 1e-10 and dt < 60
    record(
        2,
        "Gaussian cutoff convergence",
        ok,
        f"rho/Lambda=1: {100 * errs[1.0]:.4f}% (0.4 +- 0.05%), rho/Lambda=2: {errs[2.0]:.2e} (<= 1e-10), {dt:.2f} s",
    )
    assert ok


def test_criterion_3_closed_form():
    t0 = time.perf_counter()
    worst = 0.0
    for x in (0.25, 0.5, 1.0, 2.0):
        lam = coupling_from_spectrum(FreeSpace(), [np.zeros(3), Z], SpectralCutoff.from_rho_over_lambda(x, 1.0))
        worst = max(worst, rel(lam[0, 1], cutoff_kernel_closed_form(x, Z, rho=1.0)))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-8 and dt < 60
    record(3, "closed-form cutoff kernel", ok, f"max rel {worst:.2e} (<= 1e-8), {dt:.2f} s")
    assert ok


def test_criterion_4_layered_residue_vs_images():
    t0 = time.perf_counter()
    cases = [
        ("PEC", PerfectConductor(), 1.0),
        ("Drude omega_p=1e3", Drude(1e3), 1.0),
        ("eps=3", Constant(3.0), 0.5),
    ]
    worst = {}
    for name, perm, f in cases:
        g_layer = Layered(LayerStack.half_space(perm))
        g_image = ImageMirror(MirrorSpec(0.0, f))
        w = 0.0
        for h in (0.25, 0.5, 1.0):
            pos = [[0, 0, h], [0.6, 0.2, h + 0.3]]
            w = max(w, rel(coupling_from_residue(g_layer, pos).blocks, coupling_from_residue(g_image, pos).blocks))
        worst[name] = w
    dt = time.perf_counter() - t0
    ok = max(worst.values()) <= 1e-5 and dt < 300
    detail = ", ".join(f"{k}: {v:.1e}" for k, v in worst.items())
    record(4, "layered residue vs image dipoles", ok, f"{detail} (<= 1e-5), {dt:.2f} s")
    assert ok


def test_criterion_5_d_matrix_triple_identity():
    rng = np.random.default_rng(5)
    t0 = time.perf_counter()
    worst = 0.0
    drawn = 0
    while drawn < 100:
        n, m = int(rng.integers(1, 6)), int(rng.integers(1, 21))
        pos = rng.uniform(-2, 2, size=(n, 3))
        meds = [
            Mediator(p, rng.normal(size=3) + 1j * rng.normal(size=3), rng.uniform(1, 2), 1.0) for p in pos
        ]
        fields = 0.05 * (rng.normal(size=(m, n, 3)) + 1j * rng.normal(size=(m, n, 3)))
        h = assemble_hmp(meds, DiscreteModeSet(rng.uniform(0.5, 5, m), fields, pos))
        if np.linalg.eigvalsh(h.matrix)[0] <= 0:
            continue  # only stable systems are in scope
        drawn += 1
        ds = [d_matrix(h, k) for k in ("eigensum", "inverse_block", "schur")]
        worst = max(worst, rel(ds[1], ds[0]), rel(ds[2], ds[0]))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-12 and dt < 10
    record(5, "D-matrix eigensum = inverse block = Schur", ok, f"max rel {worst:.2e} (<= 1e-12), {dt:.2f} s")
    assert ok


def test_criterion_6_non_enhancement_at_resonance():
    t0 = time.perf_counter()
    sweep = np.linspace(0.5, 1.5, 201)
    pos = [[0, 0, 0.37 * np.pi], [0, 0, 0.52 * np.pi]]
    meds = [Mediator(p, [1, 0, 0], 1.0, 0.3) for p in pos]
    modes = scale_to_ratio(meds, planar_cavity_modes(pos, 50), sweep[0], 0.02)
    rows = resonance_sweep(meds, modes, sweep)
    kappa = max(r.coupling_ratio for r in rows)
    v_exact = relative_variation([r.xi_normalized for r in rows])
    v_trunc = relative_variation([r.xi_truncated_normalized for r in rows])
    dt = time.perf_counter() - t0
    ok = v_exact <= 8e-4 and v_trunc > 0.5 and dt < 60
    record(
        6,
        "no resonant enhancement",
        ok,
        f"zeta/Omega={kappa:.3f}, exact variation {v_exact:.2e} (<= 8e-4), truncated {v_trunc:.3f} (> 0.5), {dt:.2f} s",
    )
    assert ok


def test_criterion_7_traceout_validation():
    t0 = time.perf_counter()
    floor = 0.0
    pos2 = [[0, 0, 0], [1, 0, 0]]
    em1 = [Emitter([0, 0, 0], [1, 0, 0])]
    em2 = [Emitter(p, [1, 0, 0]) for p in pos2]
    models = [
        FockModel(em1, 0.0, DiscreteModeSet([1.0], [[[0.4, 0, 0]]], [[0, 0, 0]]), 30),
        FockModel(em1, 0.0, DiscreteModeSet([1.0, 1.8], [[[0.3, 0, 0]], [[0.2, 0, 0]]], [[0, 0, 0]]), 30),
        FockModel(em2, 0.0, DiscreteModeSet([1.0], [[[0.4, 0, 0], [0.4, 0, 0]]], pos2), 30),
        FockModel(em2, 0.0, DiscreteModeSet([1.0, 1.8], [[[0.3, 0, 0], [0.25, 0, 0]], [[0.2, 0, 0], [-0.1, 0, 0]]], pos2), 30),
    ]
    for m in models:
        floor = max(floor, traceout_error_sweep(m, [0.0])[0].energy_error)
    grid = [0.01, 0.02, 0.05, 0.1, 0.2, 0.3]
    err = [r.energy_error for r in traceout_error_sweep(models[2], grid)]
    slope = loglog_slope(grid, err)
    decreasing = all(b > a for a, b in zip(err, err[1:]))
    dt = time.perf_counter() - t0
    ok = floor <= 1e-10 and slope >= 1 and decreasing and dt < 300
    record(
        7,
        "trace-out validation",
        ok,
        f"eps=0 max error {floor:.1e} (<= 1e-10), slope {slope:.3f} (>= 1) on two emitters/one mode, {dt:.2f} s",
    )
    assert ok


def test_criterion_8_truncation_study():
    t0 = time.perf_counter()
    grid = [2 * np.pi * x for x in (0.5, 1.0, 2.0)]
    rep = truncation_report(FreeSpace(), [np.zeros(3), Z], grid)
    e = [r.rel_error for r in rep.rows]
    dt = time.perf_counter() - t0
    ok = e[2] < e[1] < e[0] and dt < 60
    record(8, "truncation error ordering", ok, f"errors {e[0]:.2e} > {e[1]:.2e} > {e[2]:.2e}, {dt:.2f} s")
    assert ok
