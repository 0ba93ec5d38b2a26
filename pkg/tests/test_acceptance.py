"""One test per acceptance criterion; each prints a PASS/FAIL line before asserting."""

import numpy as np

from staticprop import absorption, wick
from staticprop.block_system import charge_positivity, resolvent_B, resolvent_B_dense
from staticprop.model import assemble_L, block_hamiltonian, build_model, hpos_schur_matrix, preset
from staticprop.numerics import WeightedSpace, hermitian_eig_weighted, hermitian_residual
from staticprop.propagators import (
    ALL_KINDS,
    SIGN,
    Kind,
    build_kernel,
    calibrate_sign,
    frequency_positivity,
    identity_suite,
    inverse_residual,
    scalar_reduce,
)
from staticprop.timegrid import TestFunction, TimeGrid, bump, random_bump

NAMES = ("M0", "M1", "M2")
GRID = TimeGrid(T=3.0)


def test_criterion_01_structure(systems, criterion):
    worst_l = worst_hb = 0.0
    exact = real = nonzero = True
    for name in NAMES:
        bs = systems[name]
        op = assemble_L(preset(name))
        scale_l = max(1.0, np.linalg.norm(op.matrix, 2))
        worst_l = max(worst_l, hermitian_residual(op.space.weight @ op.matrix) / scale_l)
        hb = bs.base.weight @ bs.H @ bs.B
        worst_hb = max(worst_hb, hermitian_residual(hb) / max(1.0, np.linalg.norm(hb, 2)))
        exact &= bool(np.array_equal(bs.Q @ bs.B, bs.H))
        vals = np.linalg.eigvals(bs.B)
        real &= bool(np.abs(vals.imag).max() <= 1e-10 * np.abs(vals).max())
        nonzero &= bool(np.abs(vals).min() > 1e-10)
    ok = worst_l <= 1e-10 and worst_hb <= 1e-10 and exact and real and nonzero
    criterion(1, "structure", ok, f"L herm {worst_l:.1e}, HB herm {worst_hb:.1e}, H = QB {exact}, "
                                  f"spec real {real}, 0 not in spec {nonzero}")
    assert ok


def test_criterion_02_hpos_equivalence(criterion):
    agree = []
    for name in ("M1", "M2"):
        m = preset(name)
        op = assemble_L(m)
        h = block_hamiltonian(op.matrix, m.V)
        space2 = WeightedSpace(np.kron(np.eye(2), op.space.weight))
        for c in (0.1, 0.5, 0.9):
            lhs = hermitian_eig_weighted(h - c * np.eye(2 * m.n), space2).values.min() > 0
            rhs = hermitian_eig_weighted(hpos_schur_matrix(op.matrix, m.V, c), op.space).values.min() > 0
            agree.append(lhs == rhs)
    ok = all(agree)
    criterion(2, "H positivity equivalence", ok, f"{sum(agree)}/{len(agree)} boolean agreements")
    assert ok


def test_criterion_03_factorized_resolvent(systems, splits, criterion):
    rng = np.random.default_rng(3)
    worst = 0.0
    count = 0
    for name in NAMES:
        bs, sp = systems[name], splits[name]
        zs = rng.uniform(-3, 3, 20) + 1j * rng.uniform(-1, 1, 20)
        for z in zs:
            if np.abs(sp.values - z).min() < 1e-3:
                continue
            dense = resolvent_B_dense(bs, z)
            fact = resolvent_B(bs, z, sp)
            worst = max(worst, np.linalg.norm(fact - dense) / np.linalg.norm(dense))
            count += 1
    ok = worst <= 1e-10 and count >= 20
    criterion(3, "factorized resolvent", ok, f"max relative {worst:.2e} over {count} points")
    assert ok


def test_criterion_04_identity_web(splits, criterion):
    rng = np.random.default_rng(4)
    worst = max(identity_suite(splits[name], rng.uniform(-10, 10, 32))["max_residual"] for name in NAMES)
    ok = worst <= 1e-10
    criterion(4, "identity web", ok, f"max relative residual {worst:.2e}")
    assert ok


def test_criterion_05_contracts_and_sign(systems, splits, criterion):
    rng = np.random.default_rng(5)
    worst = 0.0
    for name in NAMES:
        bs, sp = systems[name], splits[name]
        for kind in ALL_KINDS:
            k = build_kernel(sp, kind)
            worst = max(worst,
                        inverse_residual(k, random_bump(rng, 2 * bs.n), GRID, bs),
                        inverse_residual(scalar_reduce(k, bs), random_bump(rng, bs.n), GRID, bs))
    sign, _ = calibrate_sign()
    t = np.linspace(-6, 6, 61)
    bs0, sp0 = systems["M0"], splits["M0"]
    g_ret = scalar_reduce(build_kernel(sp0, Kind.RET), bs0)(t)[:, 0, 0]
    g_feyn = scalar_reduce(build_kernel(sp0, Kind.FEYN), bs0)(t)[:, 0, 0]
    closed = max(np.abs(g_ret - np.where(t >= 0, np.sin(t), 0.0)).max(),
                 np.abs(g_feyn - 0.5j * np.exp(-1j * np.abs(t))).max())
    ok = worst <= 1e-6 and sign == 1 and SIGN == 1 and closed <= 1e-8
    criterion(5, "inverse and bisolution contracts", ok,
              f"max residual {worst:.2e}, sign {sign:+d}, closed forms {closed:.1e}")
    assert ok


def test_criterion_06_positivity(systems, splits, criterion):
    rng = np.random.default_rng(6)
    min_charge = min(min(charge_positivity(splits[n])["min_eig_plus"],
                         charge_positivity(splits[n])["min_eig_minus"]) for n in NAMES)
    worst = np.inf
    for name in ("M1", "M2"):
        bs, sp = systems[name], splits[name]
        gs = [scalar_reduce(build_kernel(sp, k), bs) for k in (Kind.POS, Kind.NEG)]
        for _ in range(20):
            f = random_bump(rng, bs.n)
            worst = min(worst, *(frequency_positivity(g, f, GRID).real for g in gs))
    ok = min_charge >= -1e-10 and worst >= -1e-8
    criterion(6, "positivity", ok, f"min eig Q Pi {min_charge:.1e}, min (f|G f) {worst:.3e}")
    assert ok


def test_criterion_07_gap(systems, criterion):
    violations = 0
    details = []
    for name in ("M1", "M2"):
        C, vnorm = absorption.gap_constants(preset(name))
        for y in (0.0, 0.1, -0.1, 1.0, -1.0):
            got = absorption.shifted_generator(systems[name], 1j * y).min_abs_real()
            for c in (C / 4, C / 2, 0.5):
                violations += got < absorption.spectral_gap(C, c, vnorm)
        details.append(f"{name} alpha(C/2) {absorption.spectral_gap(C, C / 2, vnorm):.4f}")
    a1 = absorption.spectral_gap(1.0, 0.5, 0.0)
    a2 = absorption.spectral_gap(0.96, 0.5, 0.2)
    ok = violations == 0 and abs(a1 - 0.7071) < 1e-4 and abs(a2 - 0.5071) < 1e-4
    criterion(7, "gap", ok, f"{violations} violations, " + ", ".join(details) + f", M2 alpha(0.5) {a2:.4f}")
    assert ok


def test_criterion_08_projections(systems, criterion):
    dist = alg_contour = alg_oracle = 0.0
    bisected = True
    for name in NAMES:
        for y in (0.0, 0.1, -0.1, 1.0, -1.0):
            sg = absorption.shifted_generator(systems[name], 1j * y)
            cs, orc = absorption.contour_projections(sg), absorption.oracle_projections(sg)
            dist = max(dist, absorption.projection_distance(cs, orc))
            d = cs.diagnostics()
            alg_contour = max(alg_contour, d["idempotency"], d["completeness"], d["commutator"])
            d = orc.diagnostics()
            alg_oracle = max(alg_oracle, d["idempotency"], d["completeness"], d["commutator"])
            bis = orc.bisection()
            ranks = (np.trace(orc.pi_plus).real, np.trace(orc.pi_minus).real)
            bisected &= min(bis.values()) > 0 and np.allclose(ranks, systems[name].n, atol=1e-8)
    ok = dist <= 1e-6 and max(alg_contour, alg_oracle) <= 1e-8 and bisected
    criterion(8, "bisectorial projections", ok,
              f"contour vs oracle {dist:.1e}, algebra {max(alg_contour, alg_oracle):.1e}, bisection {bisected}")
    assert ok


def test_criterion_09_lap(systems, criterion):
    rng = np.random.default_rng(9)
    ratio, slopes = 0.0, []
    for name in NAMES:
        out = absorption.lap_sweep(systems[name], check=False)
        ratio = max(ratio, out["max_ratio"])
        slopes.append(out["slope"])
    res = max(absorption.resolvent_residual(systems[n], -0.05j, random_bump(rng, systems[n].n), GRID)
              for n in ("M1", "M2"))
    res0 = absorption.resolvent_residual(systems["M0"], 0.1j,
                                         TestFunction(np.array([1.0 + 0j]), bump(0.0, 1.0)), GRID)
    fourier = max(absorption.fourier_agreement(absorption.shifted_generator(systems["M0"], -0.2j), [1.0]),
                  absorption.fourier_agreement(absorption.shifted_generator(systems["M1"], 0.5j),
                                               [-1.0, 0.5, 1.0]),
                  absorption.fourier_agreement(absorption.shifted_generator(systems["M2"], -0.5j),
                                               [-1.0, 0.5, 1.0]))
    ok = (ratio <= 1 + 1e-6 and all(abs(s - 1) <= 0.1 for s in slopes)
          and max(res, res0) <= 1e-6 and fourier <= 1e-3)
    criterion(9, "limiting absorption", ok,
              f"max error/bound {ratio:.3f} at |t| >= 0.5, slopes {', '.join(f'{s:.3f}' for s in slopes)}, "
              f"resolvent {max(res, res0):.1e}, Fourier {fourier:.1e}")
    assert ok


def test_criterion_10_wick(systems, splits, criterion):
    times = np.linspace(-4, 4, 17)
    contraction = max(wick.contraction_check(wick.rotated_generator(splits[n], th), times, tol=np.inf)["max_norm"]
                      for n in NAMES for th in wick.CHECK_THETAS)
    decay = wick.riemannian_decay(splits["M1"], times)
    slopes = [s for n in NAMES for s in wick.wick_sweep(systems[n])["slopes"].values()]
    obstruction = min(wick.obstruction_norm(splits[n]) for n in NAMES)
    ok = (contraction <= 1 + 1e-12 and decay <= 1e-8 and all(abs(s - 1) <= 0.1 for s in slopes)
          and obstruction > 1)
    criterion(10, "Wick rotation", ok,
              f"max norm {contraction:.15f}, decay {decay:.1e}, slopes {min(slopes):.3f}..{max(slopes):.3f}, "
              f"obstruction {obstruction:.3f}")
    assert ok


def test_criterion_11_refinement(criterion):
    ns = np.array([8, 16, 32])
    dx = 8.0 / ns
    continuum = 1 + (2 * np.pi / 8) ** 2
    errors = []
    for n, d in zip(ns, dx):
        op = assemble_L(build_model(n, dx=d, Y=1.0))
        errors.append(abs(np.sort(hermitian_eig_weighted(op.matrix, op.space).values)[1] - continuum))
    slope = float(np.polyfit(np.log(dx), np.log(errors), 1)[0])
    ok = abs(slope - 2.0) <= 0.2
    criterion(11, "discretization refinement", ok, f"slope {slope:.4f}")
    assert ok
