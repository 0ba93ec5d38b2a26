"""First-order form of the static Klein-Gordon equation.

Writing u_1 = u, u_2 = -(D_t + V)u turns the second-order equation into
(d/dt + iB)(u_1, u_2) = 0 with the block generator B = [[V, 1], [L, V]].
The charge matrix Q swaps the two components and H = QB is the classical
Hamiltonian; when H > 0 the energy product (u|v)_en = (u|Hv) makes B
self-adjoint, which is what every spectral construction below relies on.
"""

from dataclasses import dataclass

import numpy as np

from .errors import KernelDetected, NotPositive, SpectrumHit
from .model import assemble_L
from .numerics import (
    STRUCTURAL_TOL,
    WeightedSpace,
    hermitian_eig_weighted,
    hermitian_part,
    hermitian_residual,
)


@dataclass(frozen=True)
class BlockSystem:
    n: int
    L: np.ndarray
    V: np.ndarray  # node values of the electric potential
    B: np.ndarray
    Q: np.ndarray
    H: np.ndarray
    Z: np.ndarray
    base: WeightedSpace  # L^2(Sigma) + L^2(Sigma)
    energy: WeightedSpace  # weight base.weight @ H
    beta: np.ndarray

    @property
    def Vdiag(self):
        return np.diag(self.V).astype(complex)

    @property
    def energy_factor(self):
        """Principal square root of the energy Gram matrix."""
        return self.energy.root

    @property
    def min_eig_h(self):
        return float(hermitian_eig_weighted(self.H, self.base).values.min())

    def en_inner(self, u, v):
        return self.energy.inner(u, v)

    def en_norm(self, u):
        return self.energy.norm(u)

    def en_operator_norm(self, a):
        return self.energy.operator_norm(a)

    def shifted(self, z):
        """B_z = B - z Z."""
        return self.B - z * self.Z


def assemble_blocks(model, op=None, tol=STRUCTURAL_TOL):
    """Build B, Q, H, Z and the energy space for a model.

    Raises NotPositive when H is not positive definite.
    """
    if op is None:
        op = assemble_L(model)
    n = op.n
    L = op.matrix.astype(complex)
    eye = np.eye(n, dtype=complex)
    zero = np.zeros((n, n), dtype=complex)
    vm = np.diag(model.V).astype(complex)
    B = np.block([[vm, eye], [L, vm]])
    Q = np.block([[zero, eye], [eye, zero]])
    H = Q @ B
    Z = np.block([[zero, zero], [eye, zero]])
    base = WeightedSpace(np.kron(np.eye(2), op.space.weight))
    gram = base.weight @ H
    if hermitian_residual(gram) > tol:
        raise NotPositive("H is not Hermitian in L^2 + L^2")
    scale = max(1.0, float(np.linalg.norm(H, 2)))
    min_h = float(np.linalg.eigvalsh(hermitian_part(base.root @ H @ base.inv_root)).min())
    if min_h <= tol * scale:
        raise NotPositive(f"H is not positive definite (min eigenvalue {min_h:.3e})")
    return BlockSystem(
        n=n, L=L, V=np.asarray(model.V, dtype=float), B=B, Q=Q, H=H, Z=Z,
        base=base, energy=WeightedSpace(gram), beta=np.asarray(model.beta, dtype=float),
    )


@dataclass(frozen=True)
class SpectralSplit:
    """Frequency projections of B and its energy-space eigendata."""

    system: BlockSystem
    eig: object  # EigenData, B-eigenvectors orthonormal in the energy product
    pi_plus: np.ndarray
    pi_minus: np.ndarray

    @property
    def values(self):
        return self.eig.values

    @property
    def positive(self):
        return self.eig.values > 0.0

    def energy_representation(self):
        """B_hat = R B R^{-1}, Hermitian, with R the principal root of the energy Gram."""
        e = self.system.energy
        return hermitian_part(e.root @ self.system.B @ e.inv_root)

    def diagnostics(self):
        B = self.system.B
        ident = np.eye(B.shape[0])
        pp, pm = self.pi_plus, self.pi_minus
        adj = self.system.base.weight
        return {
            "completeness": float(np.linalg.norm(pp + pm - ident)),
            "idempotency": float(max(np.linalg.norm(pp @ pp - pp), np.linalg.norm(pm @ pm - pm))),
            "annihilation": float(max(np.linalg.norm(pp @ pm), np.linalg.norm(pm @ pp))),
            "commutator": float(max(np.linalg.norm(pp @ B - B @ pp), np.linalg.norm(pm @ B - B @ pm))),
            "energy_selfadjoint": float(max(
                np.linalg.norm(adj @ self.system.H @ p - (adj @ self.system.H @ p).conj().T)
                for p in (pp, pm))),
            "rank_plus": int(np.count_nonzero(self.positive)),
            "rank_minus": int(np.count_nonzero(~self.positive)),
        }


def spectral_split(bs, tol=1e-12):
    """Split the energy space by the sign of the spectrum of B.

    B has no kernel when H > 0; a numerically zero eigenvalue raises
    KernelDetected.
    """
    eig = hermitian_eig_weighted(bs.B, bs.energy)
    scale = float(np.abs(eig.values).max())
    if np.abs(eig.values).min() < tol * scale:
        raise KernelDetected(f"B has an eigenvalue within {tol:.0e} of zero")
    pos = (eig.values > 0.0).astype(float)
    pi_plus = eig.function(pos)
    ident = np.eye(bs.B.shape[0])
    return SpectralSplit(system=bs, eig=eig, pi_plus=pi_plus, pi_minus=ident - pi_plus)


def resolvent_B_dense(bs, z):
    return np.linalg.inv(bs.B - z * np.eye(bs.B.shape[0]))


def resolvent_B(bs, z, split=None, tol=STRUCTURAL_TOL):
    """(B - z)^{-1} through its triangular block factorization.

    The only inversion is of the n x n block N = L - (V - z)^2:

        (B - z)^{-1} = [[1, 0], [z - V, 1]] [[0, N^{-1}], [1, 0]] [[1, 0], [z - V, 1]]
    """
    if split is None:
        split = spectral_split(bs)
    scale = float(np.linalg.norm(bs.B, 2))
    if np.abs(split.values - z).min() < tol * scale:
        raise SpectrumHit(f"z = {z} lies on the spectrum of B")
    n = bs.n
    eye = np.eye(n, dtype=complex)
    zero = np.zeros((n, n), dtype=complex)
    a = bs.Vdiag - z * eye
    n_inv = np.linalg.inv(bs.L - a @ a)
    lower = np.block([[eye, zero], [-a, eye]])
    middle = np.block([[zero, n_inv], [eye, zero]])
    return lower @ middle @ lower


def in_resolvent_set(bs, z, tol=1e-8):
    """Membership test via the smallest singular value of L - (V - z)^2."""
    a = bs.Vdiag - z * np.eye(bs.n)
    smin = np.linalg.svd(bs.L - a @ a, compute_uv=False).min()
    return bool(smin > tol * max(1.0, float(np.linalg.norm(bs.L, 2))))


def charge_positivity(split, tol=STRUCTURAL_TOL):
    """Check that +Q Pi^(+) and -Q Pi^(-) are positive in the charge form."""
    bs = split.system
    w = bs.base.weight
    out = {}
    for label, sign, p in (("plus", 1.0, split.pi_plus), ("minus", -1.0, split.pi_minus)):
        form = sign * (w @ bs.Q @ p)
        out[f"hermitian_residual_{label}"] = float(np.linalg.norm(form - form.conj().T))
        out[f"min_eig_{label}"] = float(np.linalg.eigvalsh(hermitian_part(form)).min())
    out["completeness"] = float(np.linalg.norm(bs.Q @ split.pi_plus + bs.Q @ split.pi_minus - bs.Q))
    out["ok"] = (max(out["hermitian_residual_plus"], out["hermitian_residual_minus"]) <= tol
                 and min(out["min_eig_plus"], out["min_eig_minus"]) >= -tol)
    return out
