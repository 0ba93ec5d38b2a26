"""Time quadrature grids and compactly supported test functions."""

from dataclasses import dataclass

import numpy as np

from .errors import BadInterval
from .numerics import panel_rule


def japanese_bracket(t):
    return np.sqrt(1.0 + np.asarray(t, dtype=float) ** 2)


@dataclass(frozen=True)
class TimeGrid:
    """Composite Gauss-Legendre rule on [-T, T].

    `density` is the number of output nodes per unit time and `s` the
    exponent of the <t>^{-s} weight used in grid norms. Convolution
    integrals use the finer `quad_density` / `quad_nodes` rule, because
    bump profiles need many more nodes than the output sampling does.
    """

    T: float
    density: float = 16.0
    s: float = 1.0
    nodes_per_panel: int = 16
    quad_density: float = 128.0
    quad_nodes: int = 32

    def __post_init__(self):
        if not self.T > 0.0:
            raise BadInterval("T must be positive")
        if not self.s > 0.5:
            raise ValueError("weight exponent s must exceed 1/2")
        if self.density < 1.0 or self.quad_density < 1.0:
            raise ValueError("density must be at least one node per unit time")

    @property
    def rule(self):
        return panel_rule(-self.T, self.T, self.density, self.nodes_per_panel)

    @property
    def nodes(self):
        return self.rule[0]

    @property
    def weights(self):
        return self.rule[1]

    def sub_rule(self, a, b, density=None):
        """Convolution rule on a sub-interval (at least `quad_density` nodes per unit)."""
        density = self.quad_density if density is None else max(density, self.quad_density)
        return panel_rule(a, b, density, self.quad_nodes)

    def profile_density(self, profile):
        """Quadrature density that keeps the node count per profile radius fixed."""
        return self.quad_density * max(1.0, 1.0 / profile.radius)

    def weighted_norm(self, values, pointwise_norm=None):
        """Discrete <t>^{-s} L^2 norm of samples taken at the grid nodes.

        `values` has the time axis first; `pointwise_norm` maps one sample to
        its (spatial or energy) norm and defaults to the Euclidean norm.
        """
        values = np.asarray(values)
        if pointwise_norm is None:
            sq = np.sum(np.abs(values.reshape(len(values), -1)) ** 2, axis=1)
        else:
            sq = np.array([pointwise_norm(v) ** 2 for v in values])
        w = self.weights * japanese_bracket(self.nodes) ** (-2.0 * self.s)
        return float(np.sqrt(np.sum(w * sq)))


@dataclass(frozen=True)
class Profile:
    """Scalar time profile with closed-form first and second derivatives."""

    kind: str
    center: float
    radius: float
    width: float = 0.0  # gaussian only

    def __post_init__(self):
        if self.kind not in ("bump", "gaussian"):
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if not self.radius > 0.0:
            raise ValueError("profile radius must be positive")
        if self.kind == "gaussian" and not self.width > 0.0:
            raise ValueError("gaussian profile needs a positive width")

    @property
    def support(self):
        return self.center - self.radius, self.center + self.radius

    def derivatives(self, t):
        """Values, first and second derivatives at times `t`."""
        t = np.asarray(t, dtype=float)
        if self.kind == "bump":
            x = (t - self.center) / self.radius
            inside = np.abs(x) < 1.0
            xi = np.where(inside, x, 0.0)
            q = 1.0 - xi**2
            f = np.where(inside, np.exp(-1.0 / q), 0.0)
            d1 = np.where(inside, f * (-2.0 * xi / q**2), 0.0) / self.radius
            d2 = np.where(inside, f * (6.0 * xi**4 - 2.0) / q**4, 0.0) / self.radius**2
            return f, d1, d2
        # gaussian truncated at the support radius; the cutoff jump is
        # exp(-radius^2 / (2 width^2)) and must be negligible for the caller
        x = (t - self.center) / self.width
        inside = np.abs(t - self.center) < self.radius
        g = np.where(inside, np.exp(-0.5 * x**2), 0.0)
        return g, -x * g / self.width, (x**2 - 1.0) * g / self.width**2

    def __call__(self, t):
        return self.derivatives(t)[0]

    def truncation_jump(self):
        if self.kind == "bump":
            return 0.0
        return float(np.exp(-0.5 * (self.radius / self.width) ** 2))


def bump(center=0.0, radius=1.0):
    return Profile("bump", float(center), float(radius))


def gaussian(center=0.0, width=0.25, cutoff=8.0):
    """Gaussian truncated at `cutoff` standard deviations."""
    return Profile("gaussian", float(center), float(cutoff * width), float(width))


@dataclass(frozen=True)
class TestFunction:
    """Separable test function f(t) = profile(t) * spatial."""

    __test__ = False  # not a pytest class

    spatial: np.ndarray
    profile: Profile

    @property
    def support(self):
        return self.profile.support

    def sample(self, t):
        """Values with shape (len(t), dim)."""
        return np.multiply.outer(self.profile(t), self.spatial)

    def sample_derivatives(self, t):
        f, d1, d2 = self.profile.derivatives(t)
        return tuple(np.multiply.outer(x, self.spatial) for x in (f, d1, d2))

    def fits(self, grid):
        lo, hi = self.support
        return -grid.T < lo and hi < grid.T


def random_bump(rng, dim, T=3.0, complex_spatial=True):
    """Random bump test function whose support lies inside (-T, T)."""
    radius = rng.uniform(0.3, min(1.5, 0.9 * T))
    center = rng.uniform(-T + radius + 0.05, T - radius - 0.05)
    spatial = rng.normal(size=dim)
    if complex_spatial:
        spatial = spatial + 1j * rng.normal(size=dim)
    return TestFunction(spatial.astype(complex), bump(center, radius))
