"""The seven distinguished propagators of the first-order system and of K.

Each kernel has the form

    E(t) = e^{-itA} (step(t) F + step(-t) G)

for a generator A (B, an absorption-shifted B_z or a rotated B_theta) and a
pair of fixed matrices F, G built from the frequency projections. Kernels are
evaluated in the eigenbasis of A, so growing exponentials are never
multiplied against projections that are zero only up to rounding.

Inverse kernels are right-continuous at t = 0, E(0) := E(0+).
"""

from enum import Enum

import numpy as np

from .block_system import assemble_blocks, spectral_split
from .errors import GridTooCoarse
from .model import preset
from .numerics import QUADRATURE_TOL, STRUCTURAL_TOL
from .timegrid import TestFunction, TimeGrid, bump

# G = SIGN * i * beta^{1/2} pi_2 Q E iota_2 beta^{1/2} for inverses and the
# Pauli-Jordan bisolution. +1 is what makes K G^Ret f = f hold; see
# calibrate_sign().
SIGN = 1


class Kind(str, Enum):
    PJ = "PJ"
    RET = "Ret"
    ADV = "Adv"
    POS = "PosFreq"
    NEG = "NegFreq"
    FEYN = "Feyn"
    AFEYN = "AntiFeyn"

    @property
    def is_inverse(self):
        return self in (Kind.RET, Kind.ADV, Kind.FEYN, Kind.AFEYN)

    @property
    def is_bisolution(self):
        return not self.is_inverse


ALL_KINDS = tuple(Kind)


def _to_eigen_coords(eig, m, tol=1e-12):
    """V^{-1} M V, collapsed to its diagonal when it is diagonal."""
    mt = eig.inverse_vectors @ m @ eig.vectors
    d = np.diag(mt)
    scale = max(1.0, np.linalg.norm(mt))
    off = np.linalg.norm(mt - np.diag(d))
    if off <= tol * scale:
        # rounding residue must not switch on a masked exponential
        return np.where(np.abs(d) <= tol * scale, 0.0, d)
    return mt


def branch_matrices(kind, pi_plus, pi_minus):
    """(forward, backward) matrices for a kind, given the two projections."""
    ident = np.eye(pi_plus.shape[0])
    zero = np.zeros_like(ident)
    table = {
        Kind.PJ: (ident, ident),
        Kind.RET: (ident, zero),
        Kind.ADV: (zero, -ident),
        Kind.POS: (pi_plus, pi_plus),
        Kind.NEG: (-pi_minus, -pi_minus),
        Kind.FEYN: (pi_plus, -pi_minus),
        Kind.AFEYN: (pi_minus, -pi_plus),
    }
    return table[Kind(kind)]


def _forward_mask(t, left):
    t = np.asarray(t, dtype=float)
    return (t > 0) | ((t == 0) & (not left))


class _SpectralKernel:
    """Shared evaluation machinery: kernel(t) = left @ C(t) @ right."""

    def _init_spectral(self, eig, forward, backward, left, right):
        self.eig = eig
        self._fwd = _to_eigen_coords(eig, forward)
        self._bwd = _to_eigen_coords(eig, backward)
        self._left = left
        self._right = right

    @property
    def diagonal(self):
        return self._fwd.ndim == 1 and self._bwd.ndim == 1

    @property
    def values(self):
        return self.eig.values

    def coefficients(self, t, left=False):
        """Eigen-coordinate kernel C(t): shape (m, N) if diagonal else (m, N, N)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        fwd = _forward_mask(t, left)
        # exponentials are only formed for the branch that is actually used
        phase = -1j * np.multiply.outer(t, self.values)
        if self.diagonal:
            coef = np.where(fwd[:, None], self._fwd[None, :], self._bwd[None, :])
            nz = coef != 0
            return np.where(nz, np.exp(np.where(nz, phase, 0.0)) * coef, 0.0)
        expo = np.exp(phase)
        fwd_m = self._fwd if self._fwd.ndim == 2 else np.diag(self._fwd)
        bwd_m = self._bwd if self._bwd.ndim == 2 else np.diag(self._bwd)
        mats = np.where(fwd[:, None, None], fwd_m[None], bwd_m[None])
        return expo[:, :, None] * mats

    def __call__(self, t, left=False):
        """Kernel matrices at times `t` (a scalar returns a single matrix)."""
        scalar = np.ndim(t) == 0
        c = self.coefficients(t, left)
        if c.ndim == 2:
            out = np.einsum("ij,mj,jk->mik", self._left, c, self._right)
        else:
            out = np.einsum("ij,mjl,lk->mik", self._left, c, self._right)
        return out[0] if scalar else out

    def apply_coefficients(self, c, vec_eig):
        """C(t) applied to eigen-coordinate vectors (batched over the time axis)."""
        if c.ndim == 2:
            return c * vec_eig
        return np.einsum("mjk,mk->mj", c, vec_eig)


class PropagatorKernel(_SpectralKernel):
    """Kernel t -> E(t) of an inverse or bisolution of d/dt + iA."""

    def __init__(self, kind, eig, forward, backward, generator, energy=None, label=None):
        self.kind = Kind(kind)
        self.generator = generator
        self.energy = energy
        self.label = label or self.kind.value
        self._init_spectral(eig, forward, backward, eig.vectors, eig.inverse_vectors)

    @property
    def dim(self):
        return self.eig.dim

    def output_norm(self, v):
        return self.energy.norm(v) if self.energy is not None else float(np.linalg.norm(v))


class ScalarPropagator(_SpectralKernel):
    """Kernel t -> G(t) acting on spatial data, reduced from a block kernel."""

    def __init__(self, kernel, beta, weight, sign=SIGN, tilde=False):
        self.kind = kernel.kind
        self.sign = sign
        self.source = kernel
        self.weight = weight
        self.tilde = tilde
        n = kernel.dim // 2
        self.n = n
        sb = np.ones(n) if tilde else np.sqrt(beta)
        # frequency two-point functions carry no factor of i
        factor = 1.0 if self.kind in (Kind.POS, Kind.NEG) else sign * 1j
        left = factor * sb[:, None] * kernel.eig.vectors[:n, :]
        right = kernel.eig.inverse_vectors[:, n:] * sb[None, :]
        self.eig = kernel.eig
        self._fwd = kernel._fwd
        self._bwd = kernel._bwd
        self._left = left
        self._right = right

    @property
    def dim(self):
        return self.n

    def output_norm(self, v):
        return float(np.sqrt(max(np.vdot(v, self.weight @ v).real, 0.0)))


def build_kernel(split, kind):
    """Kernel of `kind` for the unshifted generator B."""
    fwd, bwd = branch_matrices(kind, split.pi_plus, split.pi_minus)
    return PropagatorKernel(kind, split.eig, fwd, bwd, split.system.B, energy=split.system.energy)


def all_kernels(split):
    return {k: build_kernel(split, k) for k in ALL_KINDS}


def kernel_eval(split, kind, t, left=False):
    """E^kind(t) for the system behind `split`; `left` selects the t = 0- limit."""
    return build_kernel(split, kind)(t, left=left)


def scalar_reduce(kernel, system, sign=SIGN):
    """G = sign * i * beta^{1/2} pi_2 Q E iota_2 beta^{1/2} (no i for PosFreq/NegFreq).

    pi_2 Q E iota_2 is the upper-right n x n block of E.
    """
    weight = system.base.weight[: system.n, : system.n]
    return ScalarPropagator(kernel, system.beta, weight, sign=sign)


# --------------------------------------------------------------------------
# convolution with split quadrature


def convolve_terms(kernel, times, terms, support, grid, density=None):
    """(kernel * g)(t) = int kernel(t - s) g(s) ds with g = sum_k p_k(s) v_k.

    `terms` is a list of (callable p_k, vector v_k). The s-integral is split
    at s = t so the kernel's jump or kink never sits inside a Gauss panel.
    """
    lo, hi = support
    right_vecs = [(p, kernel._right @ np.asarray(v, dtype=complex)) for p, v in terms]
    out = np.zeros((len(times), kernel._left.shape[0]), dtype=complex)
    for i, t in enumerate(np.asarray(times, dtype=float)):
        acc = np.zeros(kernel._right.shape[0], dtype=complex)
        for a, b in ((lo, min(t, hi)), (max(t, lo), hi)):
            if not b > a:
                continue
            s, w = grid.sub_rule(a, b, density)
            src = sum(np.multiply.outer(p(s), rv) for p, rv in right_vecs)
            c = kernel.coefficients(t - s, left=False)
            acc += w @ kernel.apply_coefficients(c, src)
        out[i] = kernel._left @ acc
    return out


def check_resolution(kernel, grid, f=None, min_density=16.0):
    """Nyquist-style sanity check of a grid against a kernel and a profile."""
    lam = float(np.abs(kernel.values).max())
    need = max(min_density, lam / np.pi)
    if f is not None:
        lo, hi = f.support
        need = max(need, 8.0 / (hi - lo))
        if not f.fits(grid):
            raise GridTooCoarse("test function support does not fit inside (-T, T)")
    if grid.quad_density < need:
        raise GridTooCoarse(
            f"quadrature density {grid.quad_density} below required {need:.3g} nodes per unit time")


def convolve(kernel, f, grid, times=None, min_density=16.0):
    """Trajectory (E f)(t) at the grid nodes (or at `times`)."""
    check_resolution(kernel, grid, f, min_density)
    times = grid.nodes if times is None else np.asarray(times, dtype=float)
    prof = f.profile
    return convolve_terms(kernel, times, [(prof, f.spatial)], f.support, grid,
                          grid.profile_density(prof))


def _d1(profile):
    return lambda s: profile.derivatives(s)[1]


def _d2(profile):
    return lambda s: profile.derivatives(s)[2]


def block_source_terms(B, f):
    """Terms of (d/dt + iB) h for h = profile * vector."""
    p = f.profile
    return [(_d1(p), f.spatial), (p, 1j * (B @ f.spatial))]


def kg_source_terms(system, f, z=0.0, tilde=False):
    """Terms of (K - z) f (or of (K~ - z) f when `tilde`) for separable f.

    K~ = d^2/dt^2 + 2iV d/dt - V^2 + L, and K = beta^{-1/2} K~ beta^{-1/2}.
    """
    p = f.profile
    n = system.n
    sb = np.ones(n) if tilde else np.sqrt(system.beta)
    g = f.spatial / sb
    v = system.V
    static = system.L @ g - (v**2) * g - z * g
    return [(_d2(p), g / sb), (_d1(p), 2j * v * g / sb), (p, static / sb)]


def inverse_residual(kernel, f, grid, system, z=0.0):
    """Weighted grid norm of E(d/dt + iB)f - f (or G K f - f).

    Time derivatives fall on the test function and are taken in closed
    form; the only numerical step is the s-quadrature. For bisolutions the
    target is 0 instead of f.
    """
    check_resolution(kernel, grid, f)
    times = grid.nodes
    if isinstance(kernel, ScalarPropagator):
        terms = kg_source_terms(system, f, z=z, tilde=kernel.tilde)
    else:
        terms = block_source_terms(kernel.generator, f)
    value = convolve_terms(kernel, times, terms, f.support, grid, grid.profile_density(f.profile))
    target = f.sample(times) if kernel.kind.is_inverse else 0.0
    return grid.weighted_norm(value - target, kernel.output_norm)


def calibrate_sign(grid=None):
    """Fix the sign in the reduction E -> G on the single-mode model.

    Returns the sign for which K G^Ret f = f and both residuals for the record.
    """
    bs = assemble_blocks(preset("M0"))
    split = spectral_split(bs)
    grid = grid or TimeGrid(T=3.0)
    f = TestFunction(np.array([1.0 + 0j]), bump(0.0, 1.0))
    ret = build_kernel(split, Kind.RET)
    res = {s: inverse_residual(scalar_reduce(ret, bs, sign=s), f, grid, bs) for s in (1, -1)}
    sign = min(res, key=res.get)
    return sign, res


# --------------------------------------------------------------------------
# identity web and structural properties

E_IDENTITIES = {
    "F = Adv + Pos": lambda E: E["Feyn"] - E["Adv"] - E["PosFreq"],
    "F = Ret + Neg": lambda E: E["Feyn"] - E["Ret"] - E["NegFreq"],
    "F + AF = Ret + Adv": lambda E: E["Feyn"] + E["AntiFeyn"] - E["Ret"] - E["Adv"],
    "Pos - Neg = PJ": lambda E: E["PosFreq"] - E["NegFreq"] - E["PJ"],
    "AF = Ret - Pos": lambda E: E["AntiFeyn"] - E["Ret"] + E["PosFreq"],
    "AF = Adv - Neg": lambda E: E["AntiFeyn"] - E["Adv"] + E["NegFreq"],
    "F - AF = Pos + Neg": lambda E: E["Feyn"] - E["AntiFeyn"] - E["PosFreq"] - E["NegFreq"],
    "PJ = Ret - Adv": lambda E: E["PJ"] - E["Ret"] + E["Adv"],
}

G_IDENTITIES = {
    "GF = GAdv + i GPos": lambda G: G["Feyn"] - G["Adv"] - 1j * G["PosFreq"],
    "GF = GRet + i GNeg": lambda G: G["Feyn"] - G["Ret"] - 1j * G["NegFreq"],
    "GF + GAF = GRet + GAdv": lambda G: G["Feyn"] + G["AntiFeyn"] - G["Ret"] - G["Adv"],
    "GPos - GNeg = -i GPJ": lambda G: G["PosFreq"] - G["NegFreq"] + 1j * G["PJ"],
    "GAF = GRet - i GPos": lambda G: G["AntiFeyn"] - G["Ret"] + 1j * G["PosFreq"],
    "GAF = GAdv - i GNeg": lambda G: G["AntiFeyn"] - G["Adv"] + 1j * G["NegFreq"],
    "GF - GAF = i GPos + i GNeg": lambda G: G["Feyn"] - G["AntiFeyn"] - 1j * (G["PosFreq"] + G["NegFreq"]),
    "GPJ = GRet - GAdv": lambda G: G["PJ"] - G["Ret"] + G["Adv"],
}


def _stack_norm(m):
    return np.linalg.norm(m, 2, axis=(-2, -1))


def identity_suite(split, times, sign=SIGN):
    """Check the relations between the seven propagators at sample times.

    Residuals are relative to ||e^{-itB}|| (E-level) and to the largest
    G-kernel norm at that time (G-level). Also checks the jump at t = 0.
    """
    times = np.asarray(times, dtype=float)
    bs = split.system
    kernels = all_kernels(split)
    E = {k.value: kernels[k](times) for k in ALL_KINDS}
    G = {k.value: scalar_reduce(kernels[k], bs, sign)(times) for k in ALL_KINDS}
    e_scale = _stack_norm(E["PJ"])
    g_scale = np.maximum(np.max([_stack_norm(g) for g in G.values()], axis=0), 1e-300)
    e_res = {name: float(np.max(_stack_norm(fn(E)) / e_scale)) for name, fn in E_IDENTITIES.items()}
    g_res = {name: float(np.max(_stack_norm(fn(G)) / g_scale)) for name, fn in G_IDENTITIES.items()}
    ident = np.eye(2 * bs.n)
    jumps = {}
    for k in ALL_KINDS:
        jump = kernels[k](0.0) - kernels[k](0.0, left=True)
        expected = ident if k.is_inverse else 0 * ident
        jumps[k.value] = float(np.linalg.norm(jump - expected))
    pj0 = float(np.linalg.norm(kernels[Kind.PJ](0.0) - ident))
    worst = max(max(e_res.values()), max(g_res.values()))
    return {
        "sign": sign,
        "e_level": e_res,
        "g_level": g_res,
        "jumps": jumps,
        "pj_at_zero": pj0,
        "max_residual": worst,
        "max_jump_error": max(jumps.values()),
    }


def support_violation(split):
    """Largest entry of E^Ret for t < 0 and of E^Adv for t > 0 (should be 0)."""
    t = np.linspace(0.1, 10.0, 25)
    ret = build_kernel(split, Kind.RET)(-t)
    adv = build_kernel(split, Kind.ADV)(t)
    return float(max(np.abs(ret).max(), np.abs(adv).max()))


def energy_isometry_defect(split, times, vectors):
    """max | ||e^{-itB} u||_en - ||u||_en | over samples."""
    pj = build_kernel(split, Kind.PJ)
    e = split.system.energy
    worst = 0.0
    for u in vectors:
        nu = e.norm(u)
        for m in pj(np.asarray(times, dtype=float)):
            worst = max(worst, abs(e.norm(m @ u) - nu) / nu)
    return worst


def two_point_hermiticity(split, times, sign=SIGN):
    """max ||(W G(t))^H - W G(-t)|| for G^(+) and G^(-), relative."""
    bs = split.system
    worst = 0.0
    for kind in (Kind.POS, Kind.NEG):
        g = scalar_reduce(build_kernel(split, kind), bs, sign)
        w = g.weight
        t = np.asarray(times, dtype=float)
        lhs = np.conj(np.swapaxes(w @ g(t), -1, -2))
        rhs = w @ g(-t)
        scale = max(np.abs(rhs).max(), 1e-300)
        worst = max(worst, float(np.abs(lhs - rhs).max() / scale))
    return worst


def frequency_positivity(g, f, grid):
    """Double quadrature of (f | G f) over spacetime for G = G^(+) or G^(-)."""
    if g.kind not in (Kind.POS, Kind.NEG):
        raise ValueError("frequency_positivity needs a PosFreq or NegFreq kernel")
    lo, hi = f.support
    s, w = grid.sub_rule(lo, hi, grid.profile_density(f.profile))
    phi = f.profile(s)
    row = np.conj(f.spatial) @ g.weight @ g._left  # f^H W left
    col = g._right @ f.spatial
    tau = np.subtract.outer(s, s).ravel()
    c = g.coefficients(tau)
    if c.ndim == 2:
        vals = c @ (row * col)
    else:
        vals = np.einsum("j,mjk,k->m", row, c, col)
    vals = vals.reshape(len(s), len(s))
    ws = w * phi
    return complex(ws @ vals @ ws)


def kernel_csv_rows(kernel, times):
    """Rows (t, row, col, re, im) in a fixed order."""
    mats = kernel(np.asarray(times, dtype=float))
    rows = []
    for t, m in zip(times, mats):
        for i in range(m.shape[0]):
            for j in range(m.shape[1]):
                rows.append((float(t), i, j, float(m[i, j].real), float(m[i, j].imag)))
    return rows


__all__ = [
    "ALL_KINDS", "Kind", "PropagatorKernel", "ScalarPropagator", "SIGN",
    "all_kernels", "branch_matrices", "build_kernel", "calibrate_sign", "check_resolution",
    "convolve", "convolve_terms", "frequency_positivity", "identity_suite",
    "inverse_residual", "kernel_eval", "scalar_reduce", "QUADRATURE_TOL", "STRUCTURAL_TOL",
]
