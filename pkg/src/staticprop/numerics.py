"""Dense complex linear algebra used throughout the package.

Everything here works on small dense matrices (a few hundred rows at most).
Matrix exponentials go through an eigendecomposition that is computed once
and reused for every time sample.
"""

from dataclasses import dataclass
from functools import cache, cached_property

import numpy as np
import scipy.linalg

from .errors import (
    BadInterval,
    DecompositionFailure,
    IllConditioned,
    NotHermitianInWeight,
)

STRUCTURAL_TOL = 1e-10
QUADRATURE_TOL = 1e-6


def as_matrix(a):
    """Return `a` as a finite 2-D complex array."""
    m = np.atleast_2d(np.asarray(a, dtype=complex))
    if m.ndim != 2 or min(m.shape) < 1:
        raise ValueError(f"expected a non-empty matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def hermitian_residual(m):
    """Relative distance of `m` from its conjugate transpose."""
    scale = np.linalg.norm(m)
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(m - m.conj().T) / scale)


def hermitian_part(m):
    return 0.5 * (m + m.conj().T)


def psd_sqrt(m):
    """Principal square root of a Hermitian positive definite matrix."""
    w, u = np.linalg.eigh(hermitian_part(m))
    if w.min() <= 0.0:
        raise np.linalg.LinAlgError("matrix is not positive definite")
    root = (u * np.sqrt(w)) @ u.conj().T
    inv_root = (u / np.sqrt(w)) @ u.conj().T
    return root, inv_root


@dataclass(frozen=True)
class WeightedSpace:
    """C^n with the inner product (u|v)_W = u^H W v."""

    weight: np.ndarray

    def __post_init__(self):
        w = as_matrix(self.weight)
        if w.shape[0] != w.shape[1]:
            raise ValueError("weight must be square")
        if hermitian_residual(w) > 1e-12:
            raise ValueError("weight is not Hermitian")
        if np.linalg.eigvalsh(hermitian_part(w)).min() <= 0.0:
            raise ValueError("weight is not positive definite")
        object.__setattr__(self, "weight", hermitian_part(w))

    @classmethod
    def identity(cls, dim):
        return cls(np.eye(dim))

    @property
    def dim(self):
        return self.weight.shape[0]

    @cached_property
    def _roots(self):
        return psd_sqrt(self.weight)

    @property
    def root(self):
        """Principal square root R with W = R^H R = R^2."""
        return self._roots[0]

    @property
    def inv_root(self):
        return self._roots[1]

    def inner(self, u, v):
        return np.vdot(u, self.weight @ v)

    def norm(self, u):
        return float(np.sqrt(max(self.inner(u, u).real, 0.0)))

    def operator_norm(self, a):
        """Operator norm of `a` as a map of this space into itself."""
        return float(np.linalg.norm(self.root @ a @ self.inv_root, 2))

    def adjoint(self, a):
        return np.linalg.solve(self.weight, a.conj().T @ self.weight)


def _as_space(weight, dim):
    if weight is None:
        return WeightedSpace.identity(dim)
    if isinstance(weight, WeightedSpace):
        return weight
    return WeightedSpace(weight)


@dataclass(frozen=True)
class EigenData:
    """Diagonalization A = V diag(values) V^{-1}."""

    values: np.ndarray
    vectors: np.ndarray
    inverse_vectors: np.ndarray

    @property
    def dim(self):
        return self.values.shape[0]

    def function(self, fvals):
        """Matrix V diag(fvals) V^{-1}; `fvals` may carry leading batch axes."""
        fvals = np.asarray(fvals)
        return np.einsum("ij,...j,jk->...ik", self.vectors, fvals, self.inverse_vectors)

    def reconstruct(self):
        return self.function(self.values)

    def residual(self, a):
        """Relative reconstruction error of `a`."""
        scale = max(np.linalg.norm(a), 1e-300)
        return float(np.linalg.norm(a - self.reconstruct()) / scale)


def hermitian_eig_weighted(a, weight=None, tol=STRUCTURAL_TOL):
    """Eigendecomposition of a matrix that is Hermitian in a weighted product.

    The problem is symmetrized with the principal root R of the weight,
    A_hat = R A R^{-1}, which is Hermitian exactly when W A is. Eigenvectors
    are returned W-orthonormal.

    Raises
    ------
    NotHermitianInWeight
        If ``W A`` deviates from Hermitian by more than `tol` (relative).
    DecompositionFailure
        If the Hermitian solver fails or the reconstruction is inaccurate.
    """
    a = as_matrix(a)
    space = _as_space(weight, a.shape[0])
    wa = space.weight @ a
    if hermitian_residual(wa) > tol:
        raise NotHermitianInWeight(
            f"W A is not Hermitian (relative residual {hermitian_residual(wa):.3e})"
        )
    a_hat = hermitian_part(space.root @ a @ space.inv_root)
    try:
        values, u = np.linalg.eigh(a_hat)
    except np.linalg.LinAlgError as exc:
        raise DecompositionFailure(str(exc)) from exc
    vectors = space.inv_root @ u
    inverse = u.conj().T @ space.root
    eig = EigenData(values.astype(float), vectors, inverse)
    if eig.residual(a) > tol:
        raise DecompositionFailure(f"reconstruction residual {eig.residual(a):.3e}")
    return eig


def general_eig(a, cond_bound=1e8, tol=1e-8):
    """Eigendecomposition of a (possibly non-normal) diagonalizable matrix.

    Raises IllConditioned when the eigenvector matrix has condition number
    above `cond_bound`.
    """
    a = as_matrix(a)
    try:
        values, vectors = scipy.linalg.eig(a)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise DecompositionFailure(str(exc)) from exc
    cond = np.linalg.cond(vectors)
    if not np.isfinite(cond) or cond > cond_bound:
        raise IllConditioned(f"eigenvector condition number {cond:.3e} exceeds {cond_bound:.1e}")
    eig = EigenData(values, vectors, np.linalg.inv(vectors))
    if eig.residual(a) > tol:
        raise DecompositionFailure(f"reconstruction residual {eig.residual(a):.3e}")
    return eig


def exp_coefficients(values, t):
    """e^{-i t lambda} for every time in `t` (leading axis) and eigenvalue."""
    t = np.asarray(t, dtype=float)
    return np.exp(-1j * np.multiply.outer(t, values))


def matrix_exp_action(a, t, u=None, *, eig=None, weight=None):
    """Compute e^{-i t A} U through an eigendecomposition of A.

    Pass a precomputed `eig` to avoid re-diagonalizing. Without one, A is
    diagonalized in `weight` if given, else with :func:`general_eig`.
    """
    if eig is None:
        eig = hermitian_eig_weighted(a, weight) if weight is not None else general_eig(a)
    prop = eig.function(exp_coefficients(eig.values, t))
    if u is None:
        return prop
    return prop @ np.asarray(u, dtype=complex)


@cache
def _legendre(n):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def quadrature(kind, a, b, n):
    """Nodes and weights of a basic rule on [a, b].

    ``kind`` is ``"trapezoid"`` or ``"gauss-legendre"``.
    """
    if not (np.isfinite(a) and np.isfinite(b)) or not a < b:
        raise BadInterval(f"need a < b, got [{a}, {b}]")
    if n < 2:
        raise BadInterval(f"need at least 2 nodes, got {n}")
    if kind == "trapezoid":
        nodes = np.linspace(a, b, n)
        h = (b - a) / (n - 1)
        weights = np.full(n, h)
        weights[[0, -1]] = 0.5 * h
    elif kind == "gauss-legendre":
        x, w = _legendre(n)
        nodes = 0.5 * (b - a) * x + 0.5 * (a + b)
        weights = 0.5 * (b - a) * w
    else:
        raise ValueError(f"unknown quadrature kind {kind!r}")
    return nodes, weights


def composite_gauss(breaks, nodes_per_panel=16):
    """Gauss-Legendre rule on consecutive panels [breaks[i], breaks[i+1]]."""
    breaks = np.asarray(breaks, dtype=float)
    pieces = [quadrature("gauss-legendre", lo, hi, nodes_per_panel)
              for lo, hi in zip(breaks[:-1], breaks[1:]) if hi > lo]
    if not pieces:
        return np.empty(0), np.empty(0)
    return (np.concatenate([p[0] for p in pieces]),
            np.concatenate([p[1] for p in pieces]))


def panel_rule(a, b, density=16.0, nodes_per_panel=16):
    """Composite Gauss rule on [a, b] with about `density` nodes per unit length.

    At least one panel is always used, so short intervals still get
    `nodes_per_panel` nodes.
    """
    if not b > a:
        return np.empty(0), np.empty(0)
    panels = max(1, int(np.ceil((b - a) * density / nodes_per_panel)))
    return composite_gauss(np.linspace(a, b, panels + 1), nodes_per_panel)
