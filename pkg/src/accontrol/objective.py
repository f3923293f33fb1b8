"""
Discrete cost functional, its gradient on the control space, and the
second-derivative quadratic form.

The gradient is returned as cell/interval means, i.e. the Riesz
representative of the derivative restricted to the piecewise-constant
control space; pairing it with any control is then exact. Quadrature
choices mirror the adjoint solver so that finite differences of the cost
and the adjoint-based gradient agree to truncation level.
"""

import numpy as np

from . import assembly
from .adjoint import solve_adjoint
from .discretization import (ControlField, control_inner,
                             spatial_data_nodal, tracking_data)
from .state import solve_linearized, solve_state

CONE_INACTIVE = "inactive"
CONE_LOWER = "lower-active"
CONE_UPPER = "upper-active"
CONE_STRONG = "strongly-active"


def eval_cost(mesh, grid, config, y_sigma, u):
    """Discrete cost

        1/2 int ||y - y_d||^2 + gamma/2 ||y(T) - y_Omega_h||^2
            + mu/2 int ||u||^2.

    Slab-constant parts are integrated exactly; a callable y_d enters
    through 2-point Gauss in time, the load rule in space for the cross
    term and the degree-4 rule for its square.
    """
    config.check_grid(grid)
    if y_sigma.num_nodal != mesh.num_vertices:
        raise ValueError("state field does not match the mesh")
    M = assembly.assemble_mass(mesh)._csr
    steps = grid.steps

    kind, data = tracking_data(mesh, grid, config.yd)
    if kind == "slabs":
        d = y_sigma.slabs - data
        tracking = 0.5 * float(steps @ np.einsum("ni,ni->n", d, d @ M))
    else:
        rule = assembly.DEFAULT_NONLINEAR_RULE
        xq, yq = assembly.quadrature_points(mesh, rule)
        tg, tw = grid.gauss(2)
        tracking = 0.5 * float(steps @ np.einsum(
            "ni,ni->n", y_sigma.slabs, y_sigma.slabs @ M))
        for n in range(grid.N):
            for g in range(tg.shape[1]):
                t = tg[n, g]
                load = assembly.assemble_load(mesh, lambda X, Y: data(t, X, Y))
                ydq = np.asarray(data(t, xq, yq), dtype=float)
                tracking -= tw[n, g] * float(load @ y_sigma.slabs[n])
                tracking += 0.5 * tw[n, g] * assembly.integrate(
                    mesh, ydq ** 2, rule)

    yomega_h = spatial_data_nodal(mesh, config.yomega)
    dT = y_sigma.final - yomega_h
    terminal = 0.5 * config.gamma * float(dT @ (M @ dT))

    tikhonov = 0.5 * config.mu * control_inner(mesh, u, u)
    return tracking + terminal + tikhonov


def eval_gradient(mesh, grid, config, u, phi_sigma):
    """Riesz representative of the cost derivative in the control space.

    Entry (n, tau) is the mean of phi + mu*u over J_n x tau; the slab
    value of phi is constant in time, so the mean is the cell average of
    phi_n plus mu*u_{n,tau}.
    """
    config.check_grid(grid)
    means = np.array([assembly.cell_means(mesh, phi_sigma.slabs[n])
                      for n in range(grid.N)])
    return ControlField(u.grid, means + config.mu * u.slabs)


def derivative_pairing(mesh, g, v):
    """Exact duality product <J', v> = sum g_{n,tau} v_{n,tau} k_n |tau|."""
    return control_inner(mesh, g, v)


def eval_hessian_quadratic(mesh, grid, config, u, v, y_sigma=None,
                           phi_sigma=None, z_sigma=None):
    """Second-derivative quadratic form along direction v:

        int ||z||^2 + gamma ||z(T)||^2 + mu int ||v||^2
            - 6 eps^-2 int y z^2 phi,

    with the discrete state, adjoint and linearized fields substituted.
    Any field not supplied is solved for.
    """
    config.check_grid(grid)
    if y_sigma is None:
        y_sigma, _ = solve_state(mesh, grid, config, u)
    if phi_sigma is None:
        phi_sigma = solve_adjoint(mesh, grid, config, y_sigma)
    if z_sigma is None:
        z_sigma = solve_linearized(mesh, grid, config, y_sigma, v)

    M = assembly.assemble_mass(mesh)._csr
    steps = grid.steps
    z = z_sigma.slabs
    quad = float(steps @ np.einsum("ni,ni->n", z, z @ M))
    quad += config.gamma * float(z[-1] @ (M @ z[-1]))
    quad += config.mu * control_inner(mesh, v, v)
    if config.nonlinear:
        coupling = sum(
            steps[n] * float(assembly.assemble_cubic_mixed(
                mesh, y_sigma.slabs[n], z[n]) @ phi_sigma.slabs[n])
            for n in range(grid.N))
        quad -= 6.0 * config.epsilon ** -2 * coupling
    return quad


def critical_cone_classify(u, g, config, tol=None):
    """Label every control cell for the cone of critical directions.

    Cells at a bound are lower/upper-active; if the gradient there is
    larger than `tol` in magnitude the multiplier is nonzero and the
    admissible direction must vanish: strongly-active. Everything else
    is inactive. Default tol is 1e-8 times the gradient scale.
    """
    if tol is None:
        scale = float(np.max(np.abs(g.slabs))) if g.slabs.size else 1.0
        tol = 1e-8 * (scale if scale > 0.0 else 1.0)
    labels = np.full(u.slabs.shape, CONE_INACTIVE, dtype="<U15")
    at_lower = u.slabs == config.u_a
    at_upper = u.slabs == config.u_b
    strong = np.abs(g.slabs) > tol
    labels[at_lower] = CONE_LOWER
    labels[at_upper] = CONE_UPPER
    labels[(at_lower | at_upper) & strong] = CONE_STRONG
    return labels
