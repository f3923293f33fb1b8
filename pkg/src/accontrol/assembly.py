"""
P1 finite element assembly on triangle meshes.

All forms needed by the time-stepping schemes live here: mass and
stiffness matrices, the cubic term and its Jacobian, load vectors for
pointwise data, and the pairing operator for cellwise-constant controls.
Quadrature rules are stored in barycentric form with weights summing to
one, so element integrals are area * sum(w * f(x_q)). The cubic term
against P1 test functions is a degree-4 integrand, hence the 6-point rule
as the nonlinear default; smooth loads use the 3-point midpoint rule.
"""

import numpy as np
from scipy import sparse as sp

from .sparse import SparseMatrix

_MASS_LOCAL = np.array([[2.0, 1.0, 1.0],
                        [1.0, 2.0, 1.0],
                        [1.0, 1.0, 2.0]]) / 12.0


class QuadratureRule:
    """Quadrature on the reference triangle, barycentric points.

    Parameters
    ----------
    points : (nq, 3) array
        Barycentric coordinates of the nodes.
    weights : (nq,) array
        Positive weights summing to one.
    degree : int
        Largest polynomial degree integrated exactly.
    """

    def __init__(self, points, weights, degree):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        weights = np.asarray(weights, dtype=float)
        if np.any(weights <= 0.0):
            raise ValueError("quadrature weights must be positive")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError("quadrature weights must sum to one")
        if np.any(np.abs(points.sum(axis=1) - 1.0) > 1e-12):
            raise ValueError("barycentric coordinates must sum to one")
        self.points = points
        self.weights = weights
        self.degree = int(degree)

    def __repr__(self):
        return "QuadratureRule({} points, degree {})".format(
            len(self.weights), self.degree)


def midpoint_rule():
    """Edge-midpoint rule, 3 points, exact to degree 2."""
    pts = np.array([[0.5, 0.5, 0.0],
                    [0.0, 0.5, 0.5],
                    [0.5, 0.0, 0.5]])
    return QuadratureRule(pts, np.full(3, 1.0 / 3.0), 2)


def six_point_rule():
    """Two-orbit symmetric rule, 6 points, exact to degree 4."""
    a1, w1 = 0.816847572980459, 0.109951743655322
    a2, w2 = 0.108103018168070, 0.223381589678011
    b1 = 0.5 * (1.0 - a1)
    b2 = 0.5 * (1.0 - a2)
    pts = np.array([[a1, b1, b1], [b1, a1, b1], [b1, b1, a1],
                    [a2, b2, b2], [b2, a2, b2], [b2, b2, a2]])
    w = np.array([w1, w1, w1, w2, w2, w2])
    return QuadratureRule(pts, w, 4)


def collapsed_gauss_rule(degree):
    """Tensor Gauss rule mapped to the triangle, exact to `degree`.

    The square [0,1]^2 is collapsed through (s, t) -> (s, t*(1-s)); the
    extra (1-s) Jacobian raises the s-degree by one, so n Gauss points per
    direction give exactness 2n-2 in (x, y). Weights stay positive.
    """
    n = int(np.ceil((degree + 2) / 2))
    gx, gw = np.polynomial.legendre.leggauss(n)
    s = 0.5 * (gx + 1.0)
    w = 0.5 * gw
    S, T = np.meshgrid(s, s, indexing="ij")
    WS, WT = np.meshgrid(w, w, indexing="ij")
    x = S.ravel()
    y = (T * (1.0 - S)).ravel()
    weights = (WS * WT * (1.0 - S)).ravel()
    weights = weights / weights.sum()
    pts = np.column_stack([1.0 - x - y, x, y])
    return QuadratureRule(pts, weights, 2 * n - 2)


DEFAULT_LOAD_RULE = midpoint_rule()
DEFAULT_NONLINEAR_RULE = six_point_rule()
ORACLE_RULE = collapsed_gauss_rule(8)


def _geometry(mesh):
    """Areas and P1 gradients per triangle, cached on the mesh."""
    geom = getattr(mesh, "_p1_geometry", None)
    if geom is not None:
        return geom
    p = mesh.vertices[mesh.triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    two_area = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    if np.any(two_area <= 0.0):
        raise ValueError("mesh has non-positively oriented triangles")
    areas = 0.5 * two_area
    grads = np.empty((mesh.num_triangles, 3, 2))
    grads[:, 0, 0] = p[:, 1, 1] - p[:, 2, 1]
    grads[:, 0, 1] = p[:, 2, 0] - p[:, 1, 0]
    grads[:, 1, 0] = p[:, 2, 1] - p[:, 0, 1]
    grads[:, 1, 1] = p[:, 0, 0] - p[:, 2, 0]
    grads[:, 2, 0] = p[:, 0, 1] - p[:, 1, 1]
    grads[:, 2, 1] = p[:, 1, 0] - p[:, 0, 0]
    grads /= two_area[:, None, None]
    mesh._p1_geometry = (areas, grads)
    return mesh._p1_geometry


def quadrature_points(mesh, rule):
    """Physical coordinates of the rule's nodes on every triangle.

    Returns x and y arrays of shape (n_t, nq).
    """
    p = mesh.vertices[mesh.triangles]
    x = p[:, :, 0] @ rule.points.T
    y = p[:, :, 1] @ rule.points.T
    return x, y


def p1_at_quadrature(mesh, coeffs, rule):
    """Values of a P1 nodal field at the rule's nodes, shape (n_t, nq)."""
    coeffs = np.asarray(coeffs, dtype=float)
    return coeffs[mesh.triangles] @ rule.points.T


def p1_gradients(mesh, coeffs):
    """Per-triangle constant gradient of a P1 field, shape (n_t, 2)."""
    coeffs = np.asarray(coeffs, dtype=float)
    _, grads = _geometry(mesh)
    return np.einsum("ta,tad->td", coeffs[mesh.triangles], grads)


def integrate(mesh, cell_values, rule):
    """Integrate pointwise values (n_t, nq) over the mesh with `rule`."""
    areas, _ = _geometry(mesh)
    return float(areas @ (cell_values @ rule.weights))


def _scatter_matrix(mesh, local, symmetric=True):
    tri = mesh.triangles
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    return SparseMatrix.from_coo(mesh.num_vertices, rows, cols,
                                 local.ravel(), symmetric=symmetric)


def _scatter_vector(mesh, local):
    return np.bincount(mesh.triangles.ravel(), weights=local.ravel(),
                       minlength=mesh.num_vertices)


def assemble_mass(mesh, lumped=False):
    """Mass matrix M_ij = (phi_i, phi_j); SPD.

    With `lumped` the row sums are collected on the diagonal. That
    variant is experimental; every scheme here defaults to the consistent
    matrix.
    """
    areas, _ = _geometry(mesh)
    if lumped:
        local = np.zeros((mesh.num_triangles, 3, 3))
        local[:, np.arange(3), np.arange(3)] = areas[:, None] / 3.0
    else:
        local = areas[:, None, None] * _MASS_LOCAL
    return _scatter_matrix(mesh, local)


def assemble_stiffness(mesh):
    """Stiffness matrix A_ij = (grad phi_i, grad phi_j)."""
    areas, grads = _geometry(mesh)
    local = areas[:, None, None] * np.einsum("tad,tbd->tab", grads, grads)
    return _scatter_matrix(mesh, local)


def _nonlinear_rule(rule):
    if rule is None:
        return DEFAULT_NONLINEAR_RULE
    if rule.degree < 4:
        raise ValueError("cubic terms against P1 need a degree-4 rule, "
                         "got degree {}".format(rule.degree))
    return rule


def assemble_cubic(mesh, y, rule=None):
    """Load vector of the cubic term, N(y)_i = (y^3, phi_i)."""
    rule = _nonlinear_rule(rule)
    areas, _ = _geometry(mesh)
    yq = p1_at_quadrature(mesh, y, rule)
    local = areas[:, None] * ((yq ** 3 * rule.weights) @ rule.points)
    return _scatter_vector(mesh, local)


def assemble_cubic_jacobian(mesh, y, rule=None):
    """Jacobian of the cubic term, J_ij = (3 y^2 phi_j, phi_i); SPSD."""
    rule = _nonlinear_rule(rule)
    areas, _ = _geometry(mesh)
    yq = p1_at_quadrature(mesh, y, rule)
    coef = 3.0 * yq ** 2 * rule.weights
    local = areas[:, None, None] * np.einsum(
        "tq,qa,qb->tab", coef, rule.points, rule.points)
    return _scatter_matrix(mesh, local)


def assemble_cubic_mixed(mesh, y, z, rule=None):
    """Load vector (y z^2, phi_i), the second-derivative coupling term."""
    rule = _nonlinear_rule(rule)
    areas, _ = _geometry(mesh)
    yq = p1_at_quadrature(mesh, y, rule)
    zq = p1_at_quadrature(mesh, z, rule)
    local = areas[:, None] * ((yq * zq ** 2 * rule.weights) @ rule.points)
    return _scatter_vector(mesh, local)


def assemble_load(mesh, f, rule=None):
    """Load vector b_i = (f, phi_i) for a pointwise evaluable f(x, y)."""
    if rule is None:
        rule = DEFAULT_LOAD_RULE
    areas, _ = _geometry(mesh)
    xq, yq = quadrature_points(mesh, rule)
    fq = np.asarray(f(xq, yq), dtype=float)
    local = areas[:, None] * ((fq * rule.weights) @ rule.points)
    return _scatter_vector(mesh, local)


def control_load_matrix(mesh):
    """Pairing operator E with (u, phi_i) = (E u)_i for cellwise u.

    u is constant on each triangle, so (u, phi_i) = sum over adjacent
    triangles of u_tau * |tau| / 3, exactly. Returns an n_v-by-n_t scipy
    CSR matrix (rectangular, hence not a SparseMatrix).
    """
    areas, _ = _geometry(mesh)
    tri = mesh.triangles
    n_t = mesh.num_triangles
    rows = tri.ravel()
    cols = np.repeat(np.arange(n_t), 3)
    vals = np.repeat(areas / 3.0, 3)
    return sp.coo_matrix((vals, (rows, cols)),
                         shape=(mesh.num_vertices, n_t)).tocsr()


def cell_means(mesh, coeffs):
    """Mean of a P1 field over each triangle (exactly the vertex average)."""
    coeffs = np.asarray(coeffs, dtype=float)
    return coeffs[mesh.triangles].mean(axis=1)
