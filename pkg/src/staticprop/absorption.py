"""Absorption-shifted generator B_z = B - zZ and the limiting absorption principle.

For z on the imaginary axis B_z is no longer self-adjoint in the energy
product, but its spectrum stays out of a vertical strip |Re| < alpha. The
two halves of the spectrum give projections Pi_z^(+), Pi_z^(-), computed
here both by a contour integral along the imaginary axis and by grouping
eigenvalues (the oracle).

Branch convention: for Im z > 0 the eigenvalues in Ran Pi_z^(+) have
negative imaginary part, so e^{-itB_z} contracts there for t >= 0 and the
contractive kernel is

    E_z(t) = step(t) e^{-itB_z} Pi_z^(+) - step(-t) e^{-itB_z} Pi_z^(-),

which tends to the Feynman kernel as z = i eps, eps -> 0+. For Im z < 0 the
roles of Pi_z^(+) and Pi_z^(-) swap and the limit is the anti-Feynman kernel.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import sici

from .block_system import spectral_split
from .errors import (
    BadConstants,
    BoundViolated,
    ContractionViolated,
    GapViolated,
    SpectrumNearContour,
)
from .model import assemble_L
from .numerics import QUADRATURE_TOL, composite_gauss, general_eig
from .parallel import ordered_map
from .propagators import Kind, PropagatorKernel, ScalarPropagator, build_kernel, inverse_residual

DEFAULT_EPSILONS = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)
DEFAULT_LAP_TIMES = (-2.0, -1.0, -0.5, 0.5, 1.0, 2.0)
REAL_PART_TOL = 1e-10


@dataclass(frozen=True)
class ShiftedGenerator:
    system: object  # BlockSystem
    z: complex
    matrix: np.ndarray
    eig: object  # EigenData, general (non-normal)

    @property
    def values(self):
        return self.eig.values

    def min_abs_real(self):
        return float(np.abs(self.values.real).min())


def shifted_generator(bs, z):
    z = complex(z)
    m = bs.shifted(z)
    return ShiftedGenerator(system=bs, z=z, matrix=m, eig=general_eig(m))


def spectral_gap(C, c, vnorm):
    """Half-width alpha = -||V|| + sqrt(C - c + ||V||^2) of the spectrum-free strip.

    C is the lower bound of L - V^2 and 0 < c < C.
    """
    if not 0.0 < c < C:
        raise BadConstants(f"need 0 < c < C, got c={c}, C={C}")
    return float(-vnorm + np.sqrt(C - c + vnorm**2))


def gap_constants(model):
    """(C, ||V||) for a model: C = min eig(L - V^2), ||V|| = max |V|."""
    op = assemble_L(model)
    return op.lower_bound_c, float(np.abs(model.V).max())


@dataclass(frozen=True)
class BisectorialSplit:
    z: complex
    method: str  # "contour" or "oracle"
    pi_plus: np.ndarray
    pi_minus: np.ndarray
    generator: np.ndarray

    def diagnostics(self):
        b = self.generator
        ident = np.eye(b.shape[0])
        pp, pm = self.pi_plus, self.pi_minus
        bnorm = max(1.0, float(np.linalg.norm(b, 2)))
        return {
            "z": self.z,
            "method": self.method,
            "idempotency": float(max(np.linalg.norm(pp @ pp - pp, 2), np.linalg.norm(pm @ pm - pm, 2))),
            "completeness": float(np.linalg.norm(pp + pm - ident, 2)),
            "commutator": float(max(np.linalg.norm(pp @ b - b @ pp, 2),
                                    np.linalg.norm(pm @ b - b @ pm, 2)) / bnorm),
        }

    def bisection(self, tol=1e-8):
        """Minimum of +Re on Ran Pi^(+) and of -Re on Ran Pi^(-) (both should be > 0)."""
        out = {}
        for label, p, sign in (("plus", self.pi_plus, 1.0), ("minus", self.pi_minus, -1.0)):
            vals = np.linalg.eigvals(self.generator @ p)
            # Ran Pi consists of the eigenvalues that are not numerically zero
            kept = vals[np.abs(vals) > tol * max(1.0, np.abs(vals).max())]
            out[label] = float((sign * kept.real).min()) if kept.size else float("nan")
        return out


def _sign_masks(sg):
    re = sg.values.real
    if np.abs(re).min() < REAL_PART_TOL:
        raise GapViolated(f"B_z has an eigenvalue with |Re| < {REAL_PART_TOL:g}")
    return (re > 0).astype(float)


def oracle_projections(sg):
    """Pi_z^(+-) from the eigendecomposition, grouping by the sign of Re."""
    plus = sg.eig.function(_sign_masks(sg))
    ident = np.eye(plus.shape[0])
    return BisectorialSplit(sg.z, "oracle", plus, ident - plus, sg.matrix)


def _tail(b, tau, terms=4):
    """int_tau^inf 2B(B^2 + y^2)^{-1} dy, expanded in powers of B/tau."""
    out = np.zeros_like(b)
    power = b.copy()
    b2 = b @ b
    for k in range(terms):
        out += 2.0 * (-1) ** k * power / ((2 * k + 1) * tau ** (2 * k + 1))
        power = power @ b2
    return out


def contour_projections(sg, tau=None, n_quad=2000, nodes_per_panel=32, first_break=1e-3,
                        gap_tol=1e-8):
    """Pi_z^(+-) from the integral of the resolvent along the imaginary axis.

    Pi^(+) = 1/2 (1 + (1/pi) int_R (B_z - iy)^{-1} dy). Pairing y with -y gives
    the even integrand 2B(B^2 + y^2)^{-1}, integrated on [0, tau] with panels
    graded geometrically from `first_break`; the part beyond tau is added in
    closed form.
    """
    b = sg.matrix
    dim = b.shape[0]
    if tau is None:
        tau = 50.0 * float(np.linalg.norm(b, 2))
    panels = max(2, n_quad // (2 * nodes_per_panel))
    breaks = np.concatenate([[0.0], np.geomspace(first_break, tau, panels)])
    y, w = composite_gauss(breaks, nodes_per_panel)
    ident = np.eye(dim)
    shifted = np.concatenate([b[None] - 1j * y[:, None, None] * ident,
                              b[None] + 1j * y[:, None, None] * ident])
    smin = np.linalg.svd(shifted, compute_uv=False).min()
    if smin < gap_tol:
        raise GapViolated(f"a quadrature node lies within {smin:.2e} of the spectrum of B_z")
    inv = np.linalg.inv(shifted)
    paired = inv[: len(y)] + inv[len(y):]
    integral = np.einsum("k,kij->ij", w, paired) + _tail(b, tau)
    plus = 0.5 * (ident + integral / np.pi)
    return BisectorialSplit(sg.z, "contour", plus, ident - plus, b)


def projection_distance(a, b):
    return float(max(np.linalg.norm(a.pi_plus - b.pi_plus, 2), np.linalg.norm(a.pi_minus - b.pi_minus, 2)))


def projection_slope(bs, zs, tol=REAL_PART_TOL):
    """||Pi_z^(+) - Pi^(+)|| at each z and the log-log slope in |z|."""
    base = spectral_split(bs).pi_plus
    dist = [float(np.linalg.norm(oracle_projections(shifted_generator(bs, z)).pi_plus - base, 2))
            for z in zs]
    slope = float(np.polyfit(np.log(np.abs(zs)), np.log(dist), 1)[0])
    return dist, slope


def dissipativity_matrix(bs):
    """[[L + 2V^2, 2V], [2V, 1]]; its positivity gives dissipativity of B_z on Pi_z^(+-)."""
    n = bs.n
    v = bs.Vdiag
    return np.block([[bs.L + 2.0 * v @ v, 2.0 * v], [2.0 * v, np.eye(n)]])


@dataclass
class DissipativityReport:
    min_eig_matrix: float
    matrix_psd: bool
    z: complex
    max_im_plus: float  # should be <= 0 for Im z > 0
    min_im_minus: float  # should be >= 0 for Im z > 0
    samples: int
    ok: bool
    notes: list = field(default_factory=list)


def dissipativity_check(bs, z=0.1j, samples=100, rng=None, tol=1e-12):
    """Check the sign of Im(u | B_z u)_en on Ran Pi_z^(+-) for random u.

    For Im z > 0 it must be <= 0 on Ran Pi_z^(+) and >= 0 on Ran Pi_z^(-);
    for Im z < 0 the signs flip.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    base = bs.base
    m = dissipativity_matrix(bs)
    min_eig = float(np.linalg.eigvalsh(0.5 * (base.root @ m @ base.inv_root
                                              + (base.root @ m @ base.inv_root).conj().T)).min())
    sg = shifted_generator(bs, z)
    split = oracle_projections(sg)
    orient = 1.0 if complex(z).imag >= 0 else -1.0
    dim = 2 * bs.n
    u = rng.normal(size=(samples, dim)) + 1j * rng.normal(size=(samples, dim))
    vals = {}
    for label, p in (("plus", split.pi_plus), ("minus", split.pi_minus)):
        out = []
        for x in u:
            v = p @ x
            v = v / bs.en_norm(v)
            out.append(orient * bs.en_inner(v, sg.matrix @ v).imag)
        vals[label] = np.array(out)
    max_plus = float(vals["plus"].max())
    min_minus = float(vals["minus"].min())
    scale = max(1.0, float(np.abs(sg.values).max()))
    psd = min_eig >= -tol * scale
    report = DissipativityReport(
        min_eig_matrix=min_eig, matrix_psd=psd, z=complex(z),
        max_im_plus=max_plus, min_im_minus=min_minus, samples=samples,
        ok=bool(psd and max_plus <= tol * scale and min_minus >= -tol * scale),
    )
    if orient < 0:
        report.notes.append("Im z < 0: signs reported after multiplying by -1")
    return report


def feynman_kernel_z(sg, split=None, oracle_tol=1e-6):
    """Contractive inverse kernel of d/dt + iB_z (see the module docstring for the branch).

    The kernel is always evaluated in the eigenbasis of B_z. A supplied
    contour split is only cross-checked against the eigenvalue grouping.
    """
    oracle = oracle_projections(sg)
    if split is not None and split.method != "oracle":
        gap = projection_distance(split, oracle)
        if gap > oracle_tol:
            raise GapViolated(f"contour projections differ from the eigen split by {gap:.2e}")
    if sg.z.imag >= 0:
        fwd, bwd = oracle.pi_plus, -oracle.pi_minus
        kind = Kind.FEYN
    else:
        fwd, bwd = oracle.pi_minus, -oracle.pi_plus
        kind = Kind.AFEYN
    return PropagatorKernel(kind, sg.eig, fwd, bwd, sg.matrix,
                            energy=sg.system.energy, label=f"{kind.value}[z={sg.z}]")


def contraction_report(sg, times, tol=1e-10):
    """Energy norms of the semigroup on the contractive ranges at sampled times.

    The semigroup is restricted to Ran Pi_z (forward) and Ran of the
    complementary projection (backward). The full kernel norm is recorded too;
    it can exceed 1 slightly because Pi_z is an oblique projection.
    """
    bs = sg.system
    kernel = feynman_kernel_z(sg)
    en = bs.energy
    fwd_p = kernel.eig.function((kernel._fwd != 0).astype(float))
    bwd_p = np.eye(fwd_p.shape[0]) - fwd_p
    rows = []
    worst = 0.0
    for t in np.asarray(times, dtype=float):
        p = fwd_p if t >= 0 else bwd_p
        sem = kernel.eig.function(np.exp(-1j * t * kernel.values))
        restricted = _restricted_norm(en, sem, p)
        rows.append({"t": float(t), "restricted": restricted,
                     "kernel": en.operator_norm(kernel(t))})
        worst = max(worst, restricted)
    if worst > 1.0 + tol:
        raise ContractionViolated(f"semigroup norm {worst:.12f} exceeds 1 on its contractive range")
    return {"z": sg.z, "rows": rows, "max_restricted": worst,
            "max_kernel": max(r["kernel"] for r in rows)}


def _restricted_norm(space, a, p, tol=1e-10):
    """Operator norm of `a` restricted to Ran p, in the given weighted space."""
    r = space.root @ p
    u, s, _ = np.linalg.svd(r)
    basis = u[:, s > tol * s.max()]  # orthonormal basis of R Ran p
    return float(np.linalg.norm(space.root @ a @ space.inv_root @ basis, 2))


def lap_sweep(bs, epsilons=DEFAULT_EPSILONS, times=DEFAULT_LAP_TIMES, u=None, slope_time=1.0,
              slack=1e-6, check=True):
    """Error of E_{i eps}(t) u against the Feynman kernel, with the bound |t| eps ||u||_en.

    Returns the table rows (epsilon, t, error, bound, ratio) and the fitted
    log-log slope in eps at `slope_time` (which is added to `times` if absent).
    Raises BoundViolated when `check` is set and a row exceeds its bound.
    """
    eps = np.asarray(epsilons, dtype=float)
    if np.any(eps <= 0) or np.any(np.diff(eps) >= 0):
        raise ValueError("epsilons must be positive and strictly descending")
    times = np.asarray(sorted(set(float(t) for t in times) | {float(slope_time)}))
    if u is None:
        u = np.random.default_rng(0).normal(size=2 * bs.n) + 0j
    u = np.asarray(u, dtype=complex)
    u = u / bs.en_norm(u)
    split = spectral_split(bs)
    ref = build_kernel(split, Kind.FEYN)(times) @ u

    def one(e):
        kern = feynman_kernel_z(shifted_generator(bs, 1j * e))
        vals = kern(times) @ u
        return [bs.en_norm(v - r) for v, r in zip(vals, ref)]

    errors = ordered_map(one, eps)
    rows = []
    for e, errs in zip(eps, errors):
        for t, err in zip(times, errs):
            bound = abs(t) * e
            rows.append({"epsilon": float(e), "t": float(t), "error": float(err),
                         "bound": float(bound), "ratio": float(err / bound) if bound else 0.0})
    k = int(np.argmin(np.abs(times - slope_time)))
    series = np.array([errs[k] for errs in errors])
    slope = float(np.polyfit(np.log(eps), np.log(series), 1)[0])
    worst = max(r["ratio"] for r in rows)
    if check and worst > 1.0 + slack:
        raise BoundViolated(f"LAP error exceeds |t| eps ||u|| (worst ratio {worst:.6f})")
    return {"rows": rows, "slope": slope, "max_ratio": worst, "slope_time": float(times[k])}


def _fourier_tail(b, t, omega):
    """(1/2pi) int_{|w| > omega} e^{-iwt} (i/w)(1 + B/w + B^2/w^2) dw."""
    at = abs(t)
    sg = float(np.sign(t))
    x = omega * at
    si, _ = sici(x)
    rest = np.pi / 2 - si
    i1 = -2j * sg * rest
    i2 = 2.0 * (np.cos(x) / omega - at * rest)
    i3 = -2j * sg * (np.sin(x) / (2 * omega**2) + 0.5 * at * (np.cos(x) / omega - at * rest))
    ident = np.eye(b.shape[0])
    return (1j * i1 * ident + 1j * i2 * b + 1j * i3 * (b @ b)) / (2 * np.pi)


def fourier_oracle(sg, times, omega_max=100.0, n_omega=2**14, nodes_per_panel=16):
    """Kernel at `times` rebuilt from E_hat(w) = -i(B_z - w)^{-1} by Fourier inversion.

    E(t) = (1/2pi) int e^{-iwt} E_hat(w) dw on [-omega_max, omega_max] with a
    composite Gauss rule, plus the closed-form tail of the 1/w expansion.
    Needs Im z != 0 so that no eigenvalue of B_z sits near the real axis.
    """
    limit = 10.0 * omega_max / n_omega
    near = float(np.abs(sg.values.imag).min())
    if near < limit:
        raise SpectrumNearContour(
            f"eigenvalue of B_z within {near:.3g} of the real axis (need >= {limit:.3g})")
    panels = max(1, n_omega // nodes_per_panel)
    w_nodes, w_weights = composite_gauss(np.linspace(-omega_max, omega_max, panels + 1),
                                         nodes_per_panel)
    b = sg.matrix
    ident = np.eye(b.shape[0])
    e_hat = -1j * np.linalg.inv(b[None] - w_nodes[:, None, None] * ident)
    out = []
    for t in np.atleast_1d(np.asarray(times, dtype=float)):
        phase = w_weights * np.exp(-1j * w_nodes * t)
        out.append(np.einsum("k,kij->ij", phase, e_hat) / (2 * np.pi) + _fourier_tail(b, t, omega_max))
    return np.array(out)


def fourier_agreement(sg, times, **kw):
    """Max energy-norm distance between the Fourier rebuild and the kernel."""
    kern = feynman_kernel_z(sg)
    rebuilt = fourier_oracle(sg, times, **kw)
    direct = kern(np.asarray(times, dtype=float))
    en = sg.system.energy
    return float(max(en.operator_norm(a - b) for a, b in zip(rebuilt, direct)))


def resolvent_residual(bs, z, f, grid):
    """Grid norm of G~_z (K~ - z) f - f with G~_z the reduced contractive kernel.

    K~ = d^2/dt^2 + 2iV d/dt - V^2 + L. At z = 0 the Feynman kernel is used.
    """
    z = complex(z)
    if z == 0:
        kernel = build_kernel(spectral_split(bs), Kind.FEYN)
    else:
        kernel = feynman_kernel_z(shifted_generator(bs, z))
    weight = bs.base.weight[: bs.n, : bs.n]
    g = ScalarPropagator(kernel, bs.beta, weight, tilde=True)
    return inverse_residual(g, f, grid, bs, z=z)


__all__ = [
    "BisectorialSplit", "DEFAULT_EPSILONS", "DEFAULT_LAP_TIMES", "DissipativityReport",
    "QUADRATURE_TOL", "ShiftedGenerator", "contour_projections", "contraction_report",
    "dissipativity_check", "dissipativity_matrix", "feynman_kernel_z", "fourier_agreement",
    "fourier_oracle", "gap_constants", "lap_sweep", "oracle_projections", "projection_distance",
    "projection_slope", "resolvent_residual", "shifted_generator", "spectral_gap",
]
