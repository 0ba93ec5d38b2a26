"""1-D lattice discretization of the static spatial operator L.

The spatial slice is a ring (periodic) or an interval (Dirichlet) with n
nodes. Fields are sampled at nodes. The magnetic derivative uses link
variables exp(-i A dx) on each bond, so gauge covariance and hermiticity in
the weighted product hold to rounding error.
"""

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import InvalidField, LengthMismatch
from .numerics import STRUCTURAL_TOL, WeightedSpace, hermitian_eig_weighted, hermitian_residual

BOUNDARIES = ("periodic", "dirichlet")

PRESETS = {
    "M0": dict(n=1, dx=1.0, boundary="periodic", beta=1.0, g_sigma=1.0, A=0.0, Y=1.0, V=0.0),
    "M1": dict(n=8, dx=1.0, boundary="periodic", beta=1.0, g_sigma=1.0, A=0.0, Y=1.0, V=0.0),
    "M2": dict(n=8, dx=1.0, boundary="periodic", beta=1.0, g_sigma=1.0, A=0.0, Y=1.0, V=0.2),
}


@dataclass(frozen=True)
class SpatialModel:
    """Lattice and static coefficient fields.

    `beta` is the lapse factor in front of dt^2, `g_sigma` the spatial metric
    coefficient, `A` the magnetic potential, `Y` the scalar potential and
    `V` the electric potential (minus the time component of the gauge field).
    """

    n: int
    dx: float
    boundary: str
    beta: np.ndarray
    g_sigma: np.ndarray
    A: np.ndarray
    Y: np.ndarray
    V: np.ndarray
    name: str = "custom"

    @property
    def beta_bound(self):
        """Largest C with C <= beta <= 1/C."""
        return float(min(self.beta.min(), 1.0 / self.beta.max()))

    @property
    def measure(self):
        """Nodal weights of L^2(Sigma): sqrt(beta) sqrt(g_sigma) dx."""
        return np.sqrt(self.beta) * np.sqrt(self.g_sigma) * self.dx

    def describe(self):
        d = asdict(self)
        return {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in d.items()}


def _field(name, value, n, positive=False, nonnegative=False):
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full(n, float(arr))
    if arr.shape != (n,):
        raise LengthMismatch(f"field {name} has shape {arr.shape}, expected ({n},)")
    if not np.all(np.isfinite(arr)):
        raise InvalidField(f"field {name} has non-finite entries")
    if positive and np.any(arr <= 0.0):
        raise InvalidField(f"field {name} must be strictly positive")
    if nonnegative and np.any(arr < 0.0):
        raise InvalidField(f"field {name} must be nonnegative")
    arr.setflags(write=False)
    return arr


def build_model(n, dx=1.0, boundary="periodic", beta=1.0, g_sigma=1.0,
                A=0.0, Y=0.0, V=0.0, name="custom"):
    """Validate the fields and return a :class:`SpatialModel`.

    Scalar field values are broadcast to all `n` nodes.
    """
    n = int(n)
    if n < 1:
        raise InvalidField("lattice size n must be at least 1")
    if not dx > 0.0:
        raise InvalidField("spacing dx must be positive")
    if boundary not in BOUNDARIES:
        raise InvalidField(f"boundary must be one of {BOUNDARIES}, got {boundary!r}")
    return SpatialModel(
        n=n,
        dx=float(dx),
        boundary=boundary,
        beta=_field("beta", beta, n, positive=True),
        g_sigma=_field("g_sigma", g_sigma, n, positive=True),
        A=_field("A", A, n),
        Y=_field("Y", Y, n, nonnegative=True),
        V=_field("V", V, n),
        name=name,
    )


def preset(name, **overrides):
    """Named preset M0, M1 or M2, optionally with some fields replaced."""
    try:
        cfg = dict(PRESETS[name])
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    cfg.update(overrides)
    return build_model(name=name if not overrides else f"{name}*", **cfg)


@dataclass(frozen=True)
class SpatialOperator:
    matrix: np.ndarray
    space: WeightedSpace
    lower_bound_c: float

    @property
    def n(self):
        return self.matrix.shape[0]


def _links(m):
    """Bond list (left, right, coefficient, phase); `None` marks a ghost node."""
    coef = np.sqrt(m.beta * m.g_sigma) / m.g_sigma
    n = m.n
    links = []
    if m.boundary == "periodic":
        for j in range(n):
            k = (j + 1) % n
            links.append((j, k, 0.5 * (coef[j] + coef[k]), 0.5 * (m.A[j] + m.A[k])))
    else:
        links.append((None, 0, coef[0], m.A[0]))
        for j in range(n - 1):
            links.append((j, j + 1, 0.5 * (coef[j] + coef[j + 1]), 0.5 * (m.A[j] + m.A[j + 1])))
        links.append((n - 1, None, coef[-1], m.A[-1]))
    return links


def covariant_difference(m):
    """Bond-by-node matrix of (e^{-i A dx} u_{j+1} - u_j)/dx and bond coefficients."""
    links = _links(m)
    d = np.zeros((len(links), m.n), dtype=complex)
    c = np.empty(len(links))
    for row, (left, right, coef, a) in enumerate(links):
        if right is not None:
            d[row, right] += np.exp(-1j * a * m.dx) / m.dx
        if left is not None:
            d[row, left] -= 1.0 / m.dx
        c[row] = coef
    return d, c


def assemble_L(m):
    """Assemble L = beta^{1/2} Delta_A beta^{1/2} + beta Y on the lattice.

    The quadratic form sum_bonds c |D (beta^{1/2} u)|^2 dx is built first, so
    W L is Hermitian by construction (W the nodal measure).
    """
    d, c = covariant_difference(m)
    s = np.sqrt(m.beta)
    w = m.measure
    form = (s[:, None] * (d.conj().T @ (c[:, None] * m.dx * d))) * s[None, :]
    form = 0.5 * (form + form.conj().T) + np.diag(w * m.beta * m.Y)
    matrix = form / w[:, None]
    space = WeightedSpace(np.diag(w))
    shifted = matrix - np.diag(m.V**2)
    c_low = float(hermitian_eig_weighted(shifted, space).values.min())
    return SpatialOperator(matrix=matrix, space=space, lower_bound_c=c_low)


def block_hamiltonian(L, V):
    """The block matrix [[L, V], [V, 1]] (V given as a node vector)."""
    n = L.shape[0]
    vm = np.diag(V).astype(complex)
    return np.block([[L, vm], [vm, np.eye(n)]])


def _min_eig(a, space):
    return float(hermitian_eig_weighted(a, space).values.min())


def hpos_schur_matrix(L, V, c):
    """L - c - (1 - c)^{-1} V^2, the Schur block controlling H >= c."""
    return L - c * np.eye(L.shape[0]) - np.diag(V**2) / (1.0 - c)


def h_bound_from_L(L, V, space, tol=1e-13):
    """Largest C in [0, 1) with L - C - V^2/(1-C) >= 0, found by bisection.

    By the block LDL factorization of H - C this equals min(1, min eig H)
    whenever H > 0.
    """
    lo, hi = 0.0, 1.0
    if _min_eig(hpos_schur_matrix(L, V, 0.0), space) < 0.0:
        return float("nan")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _min_eig(hpos_schur_matrix(L, V, mid), space) >= 0.0:
            lo = mid
        else:
            hi = mid
    return lo


@dataclass
class AssumptionReport:
    beta_bound: float
    beta_bounds_ok: bool
    y_min: float
    y_nonnegative: bool
    l_hermitian_residual: float
    l_hermitian: bool
    min_eig_l_minus_v2: float
    h_positive: bool
    min_eig_h: float
    h_bound_from_l: float
    strong_h_positive: bool
    min_eig_l_minus_2v2: float
    dissipativity_ok: bool
    notes: list = field(default_factory=list)

    @property
    def ok(self):
        return (self.beta_bounds_ok and self.y_nonnegative and self.l_hermitian
                and self.h_positive and self.strong_h_positive)

    def as_dict(self):
        d = asdict(self)
        d["ok"] = self.ok
        return d


def check_assumptions(m, op=None, tol=STRUCTURAL_TOL):
    """Evaluate the standing assumptions on a model; never raises on failure."""
    if op is None:
        op = assemble_L(m)
    L, space = op.matrix, op.space
    scale = max(1.0, float(np.linalg.norm(L, 2)))
    herm = hermitian_residual(space.weight @ L)
    block_space = WeightedSpace(np.kron(np.eye(2), space.weight))
    h = block_hamiltonian(L, m.V)
    min_h = _min_eig(h, block_space)
    min_lv = op.lower_bound_c
    min_l2v = _min_eig(L - 2.0 * np.diag(m.V**2), space)
    report = AssumptionReport(
        beta_bound=m.beta_bound,
        beta_bounds_ok=m.beta_bound > 0.0,
        y_min=float(m.Y.min()),
        y_nonnegative=bool(m.Y.min() >= 0.0),
        l_hermitian_residual=herm,
        l_hermitian=herm <= tol,
        min_eig_l_minus_v2=min_lv,
        h_positive=min_lv > tol * scale,
        min_eig_h=min_h,
        h_bound_from_l=h_bound_from_L(L, m.V, space) if min_lv > tol * scale else float("nan"),
        strong_h_positive=min_h > tol * scale,
        min_eig_l_minus_2v2=min_l2v,
        dissipativity_ok=min_l2v >= -tol * scale,
    )
    if not report.h_positive:
        report.notes.append("L - V^2 is not positive: the energy space is degenerate")
    if not report.dissipativity_ok:
        report.notes.append("L - 2V^2 >= 0 fails: absorption results are not covered")
    return report
