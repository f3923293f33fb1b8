"""
Backward-in-time solver for the discrete adjoint scheme.

The terminal value is the plain nodal field gamma*(y_N - y_Omega_h); the
sweep then solves, for n = N down to 1,

    (phi_n - phi_{n+1}, w) + k_n (grad phi_n, grad w)
        + k_n eps^-2 ((3 y_n^2 - 1) phi_n, w) = int_{J_n} (y_n - y_d(t), w) dt,

one linear system per slab with the same frozen-coefficient matrix as the
linearized forward scheme. Slab n of the returned field carries phi_n,
the value at the slab's left endpoint.
"""

import numpy as np

from . import assembly
from .discretization import spatial_data_nodal, tracking_data, DgField
from .state import _SlabWorkspace


def tracking_loads(mesh, grid, config, y_sigma):
    """Per-slab loads int_{J_n} (y_n - y_d(t), phi_i) dt.

    Slab-constant parts pair exactly through the mass matrix; a callable
    y_d is integrated with 2-point Gauss in time and the load rule in
    space, matching the quadrature of the discrete cost.
    """
    M = assembly.assemble_mass(mesh)._csr
    kind, data = tracking_data(mesh, grid, config.yd)
    rows = np.empty((grid.N, mesh.num_vertices))
    if kind == "slabs":
        for n in range(grid.N):
            rows[n] = grid.steps[n] * (M @ (y_sigma.slabs[n] - data[n]))
        return rows
    tg, tw = grid.gauss(2)
    for n in range(grid.N):
        acc = grid.steps[n] * (M @ y_sigma.slabs[n])
        for g in range(tg.shape[1]):
            t = tg[n, g]
            acc = acc - tw[n, g] * assembly.assemble_load(
                mesh, lambda X, Y: data(t, X, Y))
        rows[n] = acc
    return rows


def solve_adjoint(mesh, grid, config, y_sigma):
    """Solve the adjoint scheme backward along a state trajectory.

    Returns the adjoint DgField; its `terminal` attribute holds the
    nodal terminal value gamma*(y_N - y_Omega_h) the sweep starts from.

    Raises
    ------
    SolverError
        If an inner linear solve fails.
    """
    ws = _SlabWorkspace(mesh, grid, config)
    inter = ws.interior
    loads = tracking_loads(mesh, grid, config, y_sigma)

    yomega_h = spatial_data_nodal(mesh, config.yomega)
    terminal = config.gamma * (y_sigma.final - yomega_h)

    slabs = np.zeros((grid.N, mesh.num_vertices))
    phi_next = terminal
    for n in range(grid.N - 1, -1, -1):
        k = grid.steps[n]
        J = ws.system_matrix(k, y_sigma.slabs[n])
        rhs = (ws.Mcsr @ phi_next + loads[n])[inter] / k
        phi = np.zeros(mesh.num_vertices)
        phi[inter] = ws.solve_interior(J, rhs)
        slabs[n] = phi
        phi_next = phi

    out = DgField(grid, slabs)
    out.terminal = terminal
    out.terminal.flags.writeable = False
    return out
