"""
Forward solvers for the fully discrete state scheme.

Each time slab of the backward-Euler / dG(0) scheme is a nonlinear
elliptic problem solved by a damped Newton method: warm start from the
previous slab, residual measured in the mass-weighted dual norm, step
halved (up to 8 times) whenever the residual fails to decrease. The
linearized and second-order linearized schemes reuse the same slab
matrices with the nonlinearity frozen at a given state trajectory.
"""

import numpy as np

from . import assembly
from .discretization import ControlField, DgField, spatial_data_nodal
from .sparse import SolverError, SparseMatrix, cg_solve

MAX_HALVINGS = 8


class NewtonReport:
    """Per-slab iteration log of one forward solve.

    Attributes
    ----------
    iterations : list of int
        Newton iterations per slab.
    residuals : list of float
        Final dual-norm residual per slab.
    dampings : list of int
        Step halvings spent per slab.
    """

    def __init__(self):
        self.iterations = []
        self.residuals = []
        self.dampings = []

    @property
    def total_iterations(self):
        return int(sum(self.iterations))

    def __repr__(self):
        return "NewtonReport(slabs={}, iterations={}, max residual={:.3e})".format(
            len(self.iterations), self.total_iterations,
            max(self.residuals) if self.residuals else 0.0)


class _SlabWorkspace:
    """Shared operators of one (mesh, grid, config) triple."""

    def __init__(self, mesh, grid, config):
        config.check_grid(grid)
        self.mesh = mesh
        self.grid = grid
        self.config = config
        self.M = assembly.assemble_mass(mesh)
        self.A = assembly.assemble_stiffness(mesh)
        self.interior = np.flatnonzero(~mesh.boundary_mask)
        self.Mcsr = self.M._csr
        self.Acsr = self.A._csr
        self.diag_interior = self.M.diagonal()[self.interior]

    def dual_norm(self, r_interior):
        """Mass-weighted dual norm, approximately the L2 norm of the
        Riesz representative of the residual functional."""
        return float(np.sqrt(np.sum(r_interior ** 2 / self.diag_interior)))

    def system_matrix(self, k, y=None):
        """M/k + A + eps^-2 (J_cubic(y) - M) restricted to interior DOFs."""
        cfg = self.config
        full = self.Mcsr / k + self.Acsr
        if cfg.nonlinear:
            Jc = assembly.assemble_cubic_jacobian(self.mesh, y)
            full = full + cfg.epsilon ** -2 * (Jc._csr - self.Mcsr)
        sub = full[self.interior][:, self.interior]
        return SparseMatrix(sub, symmetric=True)

    def solve_interior(self, matrix, rhs_interior):
        cfg = self.config
        x, _ = cg_solve(matrix, rhs_interior, tol=cfg.cg_tol,
                        max_iter=cfg.cg_max_iter)
        return x


def rhs_series(mesh, grid, u):
    """Interval-mean pairing loads (u_n, phi_i), one row per slab.

    Cellwise-constant controls pair exactly; functions of (t, x, y) are
    averaged with 2-point Gauss in time and the load rule in space.
    """
    if isinstance(u, ControlField):
        if not np.array_equal(u.grid.nodes, grid.nodes):
            raise ValueError("control lives on a different time grid")
        E = assembly.control_load_matrix(mesh)
        return u.slabs @ E.T
    if callable(u):
        tg, tw = grid.gauss(2)
        out = np.empty((grid.N, mesh.num_vertices))
        for n in range(grid.N):
            acc = 0.0
            for g in range(tg.shape[1]):
                t = tg[n, g]
                acc = acc + tw[n, g] * assembly.assemble_load(
                    mesh, lambda X, Y: u(t, X, Y))
            out[n] = acc / grid.steps[n]
        return out
    raise TypeError("control must be a ControlField or a callable f(t, x, y)")


def solve_state(mesh, grid, config, u):
    """March the nonlinear scheme forward from P_h-projected initial data.

    For every slab, y_n solves
        (y_n - y_{n-1})/k_n M + A y_n + eps^-2 (N(y_n) - M y_n) = b_n
    on interior DOFs with zero Dirichlet values.

    Returns
    -------
    (DgField, NewtonReport)
        The state trajectory (its `initial` attribute holds the projected
        initial data) and the Newton log.

    Raises
    ------
    SolverError
        If a slab's Newton iteration fails to reach the residual
        tolerance within the iteration budget.
    """
    ws = _SlabWorkspace(mesh, grid, config)
    cfg = config
    loads = rhs_series(mesh, grid, u)
    y0h = spatial_data_nodal(mesh, cfg.y0)
    inter = ws.interior

    report = NewtonReport()
    slabs = np.zeros((grid.N, mesh.num_vertices))
    y_prev = y0h
    eps2 = cfg.epsilon ** -2

    def residual(y_full, y_prev_full, k, b_full):
        r = ws.Mcsr @ ((y_full - y_prev_full) / k) + ws.Acsr @ y_full - b_full
        if cfg.nonlinear:
            r += eps2 * (assembly.assemble_cubic(mesh, y_full)
                         - ws.Mcsr @ y_full)
        return r[inter]

    for n in range(grid.N):
        k = grid.steps[n]
        b = loads[n]
        y = y_prev.copy()
        y[mesh.boundary_mask] = 0.0

        r = residual(y, y_prev, k, b)
        rnorm = ws.dual_norm(r)
        iters = 0
        halvings = 0
        while rnorm > cfg.newton_tol:
            if iters >= cfg.newton_max_iter:
                raise SolverError(
                    "slab {}: Newton stalled at residual {:.3e} "
                    "(tolerance {:.3e})".format(n + 1, rnorm, cfg.newton_tol))
            J = ws.system_matrix(k, y)
            delta = ws.solve_interior(J, -r)

            lam = 1.0
            for attempt in range(MAX_HALVINGS + 1):
                y_trial = y.copy()
                y_trial[inter] += lam * delta
                r_trial = residual(y_trial, y_prev, k, b)
                rnorm_trial = ws.dual_norm(r_trial)
                if rnorm_trial < rnorm or attempt == MAX_HALVINGS:
                    break
                lam *= 0.5
                halvings += 1
            y, r, rnorm = y_trial, r_trial, rnorm_trial
            iters += 1

        slabs[n] = y
        report.iterations.append(iters)
        report.residuals.append(rnorm)
        report.dampings.append(halvings)
        y_prev = y

    return DgField(grid, slabs, initial=y0h), report


def _march_linear(mesh, grid, config, y_sigma, rhs_rows):
    """Forward sweep of the scheme linearized about y_sigma."""
    ws = _SlabWorkspace(mesh, grid, config)
    inter = ws.interior
    slabs = np.zeros((grid.N, mesh.num_vertices))
    z_prev = np.zeros(mesh.num_vertices)
    for n in range(grid.N):
        k = grid.steps[n]
        J = ws.system_matrix(k, y_sigma.slabs[n])
        rhs = (ws.Mcsr @ (z_prev / k) + rhs_rows[n])[inter]
        z = np.zeros(mesh.num_vertices)
        z[inter] = ws.solve_interior(J, rhs)
        slabs[n] = z
        z_prev = z
    return DgField(grid, slabs)


def solve_linearized(mesh, grid, config, y_sigma, v):
    """Directional state derivative: the scheme with the cubic term
    replaced by its Jacobian at y_sigma, zero initial slab, RHS v."""
    rows = rhs_series(mesh, grid, v)
    return _march_linear(mesh, grid, config, y_sigma, rows)


def solve_second_linearized(mesh, grid, config, y_sigma, z_sigma):
    """Second directional derivative: same linearized operator, driven by
    -6 eps^-2 (y z^2, phi_i), zero initial slab."""
    if not config.nonlinear:
        return DgField(grid, np.zeros((grid.N, mesh.num_vertices)))
    c = -6.0 * config.epsilon ** -2
    rows = np.array([c * assembly.assemble_cubic_mixed(
        mesh, y_sigma.slabs[n], z_sigma.slabs[n]) for n in range(grid.N)])
    return _march_linear(mesh, grid, config, y_sigma, rows)
