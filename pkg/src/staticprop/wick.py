"""Wick rotation of the first-order generator.

B_theta = e^{-i theta} B keeps the eigenvectors of B and rotates its
spectrum. On the positive-frequency range e^{-itB_theta} decays for t > 0,
on the negative-frequency range for t < 0, which is exactly the split used
by the Feynman kernel; no other propagator survives the rotation.
"""

from dataclasses import dataclass

import numpy as np

from .block_system import spectral_split
from .errors import AngleOutOfRange, ContractionViolated
from .numerics import EigenData
from .parallel import ordered_map
from .propagators import Kind, PropagatorKernel, build_kernel

DEFAULT_THETAS = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)
DEFAULT_WICK_TIMES = (-2.0, -1.0, 1.0, 2.0)
CHECK_THETAS = (0.0, 0.1, np.pi / 4, np.pi / 2, np.pi)


@dataclass(frozen=True)
class RotatedGenerator:
    theta: float
    matrix: np.ndarray
    eig: EigenData
    split: object  # SpectralSplit of the unrotated B


def rotated_generator(split, theta):
    """B_theta = e^{-i theta} B for 0 <= theta <= pi."""
    theta = float(theta)
    if not 0.0 <= theta <= np.pi:
        raise AngleOutOfRange(f"theta must lie in [0, pi], got {theta}")
    phase = np.exp(-1j * theta)
    eig = EigenData(phase * split.eig.values, split.eig.vectors, split.eig.inverse_vectors)
    return RotatedGenerator(theta, phase * split.system.B, eig, split)


def semigroup(rg, t):
    """e^{-itB_theta} at times `t`."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    return rg.eig.function(np.exp(-1j * np.multiply.outer(t, rg.eig.values)))


def contraction_check(rg, times, tol=1e-12):
    """Energy norms of e^{-itB_theta} Pi^(+) (t >= 0) and e^{-itB_theta} Pi^(-) (t <= 0)."""
    split = rg.split
    en = split.system.energy
    rows = []
    for t, prop in zip(times, semigroup(rg, times)):
        p = split.pi_plus if t >= 0 else split.pi_minus
        rows.append({"theta": rg.theta, "t": float(t), "norm": en.operator_norm(prop @ p)})
    worst = max(r["norm"] for r in rows)
    if worst > 1.0 + tol:
        raise ContractionViolated(f"rotated semigroup norm {worst:.15f} exceeds 1 at theta={rg.theta}")
    strict = 0.0 < rg.theta < np.pi
    decays = all(r["norm"] < 1.0 for r in rows if r["t"] != 0.0) if strict else None
    return {"theta": rg.theta, "rows": rows, "max_norm": worst, "strict_decay": decays}


def feynman_kernel_theta(rg):
    """step(t) e^{-itB_theta} Pi^(+) - step(-t) e^{-itB_theta} Pi^(-)."""
    split = rg.split
    return PropagatorKernel(Kind.FEYN, rg.eig, split.pi_plus, -split.pi_minus, rg.matrix,
                            energy=split.system.energy, label=f"Feyn[theta={rg.theta:g}]")


def obstruction_norm(split, theta=np.pi / 4, t=-1.0):
    """||e^{-itB_theta} Pi^(+)||_en on the wrong half-line; exceeds 1 for 0 < theta < pi."""
    rg = rotated_generator(split, theta)
    return split.system.energy.operator_norm(semigroup(rg, t)[0] @ split.pi_plus)


def riemannian_decay(split, times):
    """max | ||E^F_{pi/2}(t)||_en - e^{-|t| r} | over `times`.

    r is the smallest positive eigenvalue of B for t > 0 and the smallest
    |negative eigenvalue| for t < 0.
    """
    kern = feynman_kernel_theta(rotated_generator(split, np.pi / 2))
    en = split.system.energy
    vals = split.eig.values
    rate_fwd = float(vals[vals > 0].min())
    rate_bwd = float(-vals[vals < 0].max())
    worst = 0.0
    for t in times:
        rate = rate_fwd if t >= 0 else rate_bwd
        worst = max(worst, abs(en.operator_norm(kern(t)) - np.exp(-abs(t) * rate)))
    return float(worst)


def wick_sweep(bs, thetas=DEFAULT_THETAS, times=DEFAULT_WICK_TIMES, u=None):
    """Error of E^F_theta(t) u against E^F(t) u as theta -> 0.

    Rows (theta, t, error, fittedK, slope): fittedK is
    error / (|t| theta ||u||_en max(1, ||B||_en)) and slope the log-log slope
    in theta of the error series at that t.
    """
    th = np.asarray(thetas, dtype=float)
    if np.any(th <= 0) or np.any(th > np.pi / 2) or np.any(np.diff(th) >= 0):
        raise ValueError("thetas must lie in (0, pi/2] and be strictly descending")
    split = spectral_split(bs)
    times = np.asarray(times, dtype=float)
    if u is None:
        u = np.random.default_rng(0).normal(size=2 * bs.n) + 0j
    u = np.asarray(u, dtype=complex)
    u = u / bs.en_norm(u)
    ref = build_kernel(split, Kind.FEYN)(times) @ u
    bnorm = max(1.0, float(np.abs(split.eig.values).max()))

    def one(theta):
        vals = feynman_kernel_theta(rotated_generator(split, theta))(times) @ u
        return [bs.en_norm(v - r) for v, r in zip(vals, ref)]

    errors = np.array(ordered_map(one, th))  # (theta, t)
    slopes = [float(np.polyfit(np.log(th), np.log(errors[:, j]), 1)[0]) for j in range(len(times))]
    rows = []
    for i, theta in enumerate(th):
        for j, t in enumerate(times):
            k = errors[i, j] / (abs(t) * theta * bnorm) if t != 0 else 0.0
            rows.append({"theta": float(theta), "t": float(t), "error": float(errors[i, j]),
                         "fittedK": float(k), "slope": slopes[j]})
    return {"rows": rows, "slopes": dict(zip(times.tolist(), slopes)),
            "fittedK": max(r["fittedK"] for r in rows), "b_norm": bnorm}


__all__ = [
    "CHECK_THETAS", "DEFAULT_THETAS", "DEFAULT_WICK_TIMES", "RotatedGenerator",
    "contraction_check", "feynman_kernel_theta", "obstruction_norm", "riemannian_decay",
    "rotated_generator", "semigroup", "wick_sweep",
]
