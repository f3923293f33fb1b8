"""
Time grids and the fully discrete function spaces.

States, adjoints and linearized states live in the dG(0)-in-time, P1-in-
space space: one nodal coefficient array per time slab J_n = (t_{n-1},
t_n], continuous from the left, so a field evaluated at t_n returns slab
n. Controls are constant on each slab-triangle cell. Projections onto
these spaces (L2 in space, endpoint sampling in time, space-time cell
means) are defined here as well.
"""

import numpy as np

from . import assembly
from .sparse import cg_solve

PROJECTION_TOL = 1e-12


def time_gauss(npoints):
    """Gauss-Legendre nodes and weights on [0, 1], weights summing to 1."""
    x, w = np.polynomial.legendre.leggauss(npoints)
    return 0.5 * (x + 1.0), 0.5 * w


class TimeGrid:
    """Partition 0 = t_0 < ... < t_N = T.

    Attributes
    ----------
    nodes : (N+1,) array
    steps : (N,) array of k_n = t_n - t_{n-1}
    k : float, the largest step
    c0 : float, quasi-uniformity constant with k <= c0 * k_n for all n
    """

    def __init__(self, nodes, c0=None):
        nodes = np.asarray(nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("need at least two time nodes")
        if nodes[0] != 0.0:
            raise ValueError("time grid must start at t=0")
        steps = np.diff(nodes)
        if np.any(steps <= 0.0):
            raise ValueError("time nodes must be strictly increasing")
        k = float(steps.max())
        if c0 is None:
            c0 = k / float(steps.min())
        else:
            c0 = float(c0)
            # Uniform grids have k == k_n, so the comparison is non-strict
            # up to roundoff.
            if k > c0 * steps.min() * (1.0 + 1e-12):
                raise ValueError(
                    "quasi-uniformity violated: k={} > c0*min step={}".format(
                        k, c0 * steps.min()))
        self.nodes = nodes
        self.steps = steps
        self.k = k
        self.c0 = c0
        for a in (self.nodes, self.steps):
            a.flags.writeable = False

    @classmethod
    def uniform(cls, T, N, c0=1.0):
        if not T > 0.0:
            raise ValueError("horizon must be positive")
        return cls(np.linspace(0.0, float(T), int(N) + 1), c0=c0)

    @property
    def N(self):
        return len(self.steps)

    @property
    def T(self):
        return float(self.nodes[-1])

    def slab_index(self, t):
        """0-based index of the slab whose interval contains t.

        Each J_n = (t_{n-1}, t_n]; t = 0 maps to the first slab.
        """
        n = np.searchsorted(self.nodes, t, side="left")
        return int(np.clip(n, 1, self.N)) - 1

    def gauss(self, npoints):
        """Per-slab Gauss nodes (N, npoints) and weights summing to k_n."""
        x, w = time_gauss(npoints)
        t = self.nodes[:-1, None] + self.steps[:, None] * x
        return t, self.steps[:, None] * w

    def __repr__(self):
        return "TimeGrid(N={}, T={}, k={:.6g}, c0={:.6g})".format(
            self.N, self.T, self.k, self.c0)


class DgField:
    """dG(0)-in-time, P1-in-space field: N slabs of nodal coefficients.

    `initial` optionally carries the nodal data the first slab jumps
    from (the projected initial condition of a forward solve).
    """

    def __init__(self, grid, slabs, initial=None):
        slabs = np.array(slabs, dtype=float)
        if slabs.ndim != 2 or slabs.shape[0] != grid.N:
            raise ValueError("expected {} slabs, got shape {}".format(
                grid.N, slabs.shape))
        self.grid = grid
        self.slabs = slabs
        self.initial = None if initial is None else np.array(initial, dtype=float)
        self.slabs.flags.writeable = False
        if self.initial is not None:
            self.initial.flags.writeable = False

    @property
    def num_nodal(self):
        return self.slabs.shape[1]

    @property
    def final(self):
        """Value at t = T (the last slab, by left continuity)."""
        return self.slabs[-1]

    def value_at(self, t):
        return self.slabs[self.grid.slab_index(t)]

    def __repr__(self):
        return "DgField(N={}, nodal={})".format(self.grid.N, self.num_nodal)


class ControlField:
    """Piecewise constant control: one value per (slab, triangle) cell."""

    def __init__(self, grid, slabs, admissible=False):
        slabs = np.array(slabs, dtype=float)
        if slabs.ndim != 2 or slabs.shape[0] != grid.N:
            raise ValueError("expected {} slabs, got shape {}".format(
                grid.N, slabs.shape))
        self.grid = grid
        self.slabs = slabs
        self.admissible = bool(admissible)
        self.slabs.flags.writeable = False

    @classmethod
    def zeros(cls, grid, mesh, admissible=False):
        return cls(grid, np.zeros((grid.N, mesh.num_triangles)),
                   admissible=admissible)

    @classmethod
    def constant(cls, grid, mesh, value, admissible=False):
        return cls(grid, np.full((grid.N, mesh.num_triangles), float(value)),
                   admissible=admissible)

    @property
    def num_cells(self):
        return self.slabs.shape[1]

    def value_at(self, t):
        return self.slabs[self.grid.slab_index(t)]

    def within_bounds(self, u_a, u_b):
        return bool(np.all(self.slabs >= u_a) and np.all(self.slabs <= u_b))

    def __repr__(self):
        return "ControlField(N={}, cells={}, admissible={})".format(
            self.grid.N, self.num_cells, self.admissible)


def flag_admissible(u, u_a, u_b):
    """Return u flagged admissible after validating the bounds."""
    if not u.within_bounds(u_a, u_b):
        raise ValueError("control violates bounds [{}, {}]".format(u_a, u_b))
    return ControlField(u.grid, u.slabs, admissible=True)


class ProblemConfig:
    """Data and tolerances of one control problem.

    Parameters
    ----------
    epsilon : float
        Interface width parameter, > 0.
    mu : float
        Tikhonov weight, > 0.
    T : float
        Time horizon, > 0.
    gamma : float
        Terminal tracking weight, >= 0.
    u_a, u_b : float
        Control bounds, u_a <= u_b (default unbounded).
    y0, yomega : callable f(x, y), nodal array, or None
        Initial state and terminal target (None means zero).
    yd : callable f(t, x, y), DgField, nodal array, or None
        Tracking target.
    newton_tol : float
        Absolute slab residual tolerance, dual (mass-weighted) norm.
    cg_tol : float
        Relative linear-solver tolerance.
    nonlinear : bool
        With False the cubic reaction term is dropped (heat equation
        regression mode).
    """

    def __init__(self, epsilon, mu, T, gamma=0.0, u_a=-np.inf, u_b=np.inf,
                 y0=None, yd=None, yomega=None, newton_tol=1e-10,
                 newton_max_iter=30, cg_tol=1e-10, cg_max_iter=None,
                 nonlinear=True):
        if not epsilon > 0.0:
            raise ValueError("epsilon must be positive")
        if not mu > 0.0:
            raise ValueError("mu must be positive")
        if not T > 0.0:
            raise ValueError("T must be positive")
        if gamma < 0.0:
            raise ValueError("gamma must be non-negative")
        if not u_a <= u_b:
            raise ValueError("bounds must satisfy u_a <= u_b")
        self.epsilon = float(epsilon)
        self.mu = float(mu)
        self.T = float(T)
        self.gamma = float(gamma)
        self.u_a = float(u_a)
        self.u_b = float(u_b)
        self.y0 = y0
        self.yd = yd
        self.yomega = yomega
        self.newton_tol = float(newton_tol)
        self.newton_max_iter = int(newton_max_iter)
        self.cg_tol = float(cg_tol)
        self.cg_max_iter = cg_max_iter
        self.nonlinear = bool(nonlinear)

    def check_grid(self, grid):
        if abs(grid.T - self.T) > 1e-12 * max(1.0, self.T):
            raise ValueError("grid horizon {} differs from problem T {}".format(
                grid.T, self.T))


def l2_project_space(mesh, f, tol=PROJECTION_TOL):
    """L2 projection of f onto the P1 space: (P_h f, w) = (f, w)."""
    M = assembly.assemble_mass(mesh)
    b = assembly.assemble_load(mesh, f)
    x, _ = cg_solve(M, b, tol=tol)
    return x


def spatial_data_nodal(mesh, data):
    """Nodal coefficients for y0/yomega-style data.

    Callables are L2-projected; arrays are taken as P1 interpolants
    (their own projection); None means zero.
    """
    if data is None:
        return np.zeros(mesh.num_vertices)
    if callable(data):
        return l2_project_space(mesh, data)
    data = np.asarray(data, dtype=float)
    if data.shape != (mesh.num_vertices,):
        raise ValueError("nodal data has length {}, mesh has {} vertices".format(
            data.shape, mesh.num_vertices))
    return data


def tracking_data(mesh, grid, data):
    """Normalize tracking data to ('slabs', array) or ('callable', f)."""
    if data is None:
        return "slabs", np.zeros((grid.N, mesh.num_vertices))
    if isinstance(data, DgField):
        if data.grid is not grid and not np.array_equal(data.grid.nodes,
                                                        grid.nodes):
            raise ValueError("tracking field lives on a different grid")
        return "slabs", data.slabs
    if callable(data):
        return "callable", data
    data = np.asarray(data, dtype=float)
    if data.shape == (mesh.num_vertices,):
        return "slabs", np.broadcast_to(data, (grid.N, mesh.num_vertices))
    if data.shape == (grid.N, mesh.num_vertices):
        return "slabs", data
    raise ValueError("tracking data shape {} fits neither nodal nor "
                     "slab layout".format(data.shape))


def interval_average_control(grid, mesh, f):
    """Project a space-time function to cell/interval means.

    u_{n,tau} is the average of f over J_n x tau: a degree-4 rule in
    space and 2-point Gauss in time, exact for the data this package
    pairs with controls.
    """
    rule = assembly.DEFAULT_NONLINEAR_RULE
    xq, yq = assembly.quadrature_points(mesh, rule)
    tg, tw = grid.gauss(2)
    slabs = np.empty((grid.N, mesh.num_triangles))
    for n in range(grid.N):
        acc = 0.0
        for g in range(tg.shape[1]):
            fq = np.asarray(f(tg[n, g], xq, yq), dtype=float)
            acc = acc + tw[n, g] * (fq @ rule.weights)
        slabs[n] = acc / grid.steps[n]
    return ControlField(grid, slabs)


def p_sigma_project(grid, mesh, y):
    """Slab n carries P_h of y sampled at the right endpoint t_n."""
    slabs = [l2_project_space(mesh, lambda X, Y: y(t, X, Y))
             for t in grid.nodes[1:]]
    return DgField(grid, np.array(slabs))


def r_sigma_project(grid, mesh, y):
    """Slab n carries P_h of y sampled at the left endpoint t_{n-1}."""
    slabs = [l2_project_space(mesh, lambda X, Y: y(t, X, Y))
             for t in grid.nodes[:-1]]
    return DgField(grid, np.array(slabs))


def control_inner(mesh, u, v):
    """L2(Omega_T) inner product of two cellwise-constant controls."""
    if u.grid is not v.grid and not np.array_equal(u.grid.nodes, v.grid.nodes):
        raise ValueError("controls live on different grids")
    areas, _ = assembly._geometry(mesh)
    return float(np.einsum("n,nt,t->", u.grid.steps, u.slabs * v.slabs, areas))


def control_norm(mesh, u):
    """L2(Omega_T) norm of a cellwise-constant control."""
    return np.sqrt(max(control_inner(mesh, u, u), 0.0))
