"""
Structured triangulations of axis-aligned rectangles.

Every cell of an nx-by-ny rectangular grid is split along the diagonal
running from its lower-left to its upper-right corner, which keeps the
shape-regularity ratio identical for all elements. Vertices are numbered
row-major with x fastest, triangles cell by cell with the lower triangle
first, and all triangles are oriented counterclockwise. The grid layout is
recorded on the mesh so point location and nested-refinement bookkeeping
stay O(1).
"""

import numpy as np


class Mesh:
    """Conforming right-triangle mesh of a rectangle.

    Attributes
    ----------
    vertices : (n_v, 2) float array
        Vertex coordinates.
    triangles : (n_t, 3) int array
        Vertex indices per triangle, counterclockwise.
    boundary_mask : (n_v,) bool array
        True for vertices on the rectangle border.
    h : float
        Maximum element diameter (longest edge).
    rect : tuple
        (x0, y0, x1, y1) of the underlying rectangle.
    cells_x, cells_y : int
        Grid cells per coordinate direction.
    """

    def __init__(self, vertices, triangles, rect, cells_x, cells_y):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64)
        self.rect = tuple(float(c) for c in rect)
        self.cells_x = int(cells_x)
        self.cells_y = int(cells_y)

        x0, y0, x1, y1 = self.rect
        tol = 1e-12 * max(x1 - x0, y1 - y0)
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        self.boundary_mask = ((np.abs(x - x0) <= tol) | (np.abs(x - x1) <= tol)
                              | (np.abs(y - y0) <= tol) | (np.abs(y - y1) <= tol))

        p = self.vertices[self.triangles]
        edges = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 1],
                          p[:, 0] - p[:, 2]])
        self.h = float(np.sqrt((edges ** 2).sum(axis=2)).max())

        for a in (self.vertices, self.triangles, self.boundary_mask):
            a.flags.writeable = False

    @property
    def num_vertices(self):
        return self.vertices.shape[0]

    @property
    def num_triangles(self):
        return self.triangles.shape[0]

    def __repr__(self):
        return "Mesh({} vertices, {} triangles, h={:.6g})".format(
            self.num_vertices, self.num_triangles, self.h)


def build_uniform_mesh(nx, ny, rect=(0.0, 0.0, 1.0, 1.0)):
    """Triangulate a rectangle into 2*nx*ny right triangles.

    Parameters
    ----------
    nx, ny : int
        Cells per direction, at least 1.
    rect : tuple
        (x0, y0, x1, y1) with x1 > x0 and y1 > y0.

    Returns
    -------
    Mesh
    """
    nx, ny = int(nx), int(ny)
    if nx < 1 or ny < 1:
        raise ValueError("need at least one cell per direction")
    x0, y0, x1, y1 = (float(c) for c in rect)
    if not (x1 > x0 and y1 > y0):
        raise ValueError("degenerate rectangle {}".format(rect))

    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    i, j = np.meshgrid(np.arange(nx), np.arange(ny))
    i, j = i.ravel(), j.ravel()
    v00 = j * (nx + 1) + i
    v10 = v00 + 1
    v01 = v00 + (nx + 1)
    v11 = v01 + 1
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    triangles = np.empty((2 * nx * ny, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper

    return Mesh(vertices, triangles, (x0, y0, x1, y1), nx, ny)


def refine_uniform(mesh):
    """Split every triangle into four via edge midpoints.

    Children of triangle t occupy slots 4t..4t+3, so the parent of a child
    is child // 4. The vertex set of the parent is preserved; midpoints are
    appended after it.
    """
    tri = mesh.triangles
    pairs = np.vstack([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
    pairs.sort(axis=1)
    edges, edge_of = np.unique(pairs, axis=0, return_inverse=True)

    mid = 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])
    vertices = np.vstack([mesh.vertices, mid])

    n_t = mesh.num_triangles
    off = mesh.num_vertices
    m01 = off + edge_of[:n_t]
    m12 = off + edge_of[n_t:2 * n_t]
    m20 = off + edge_of[2 * n_t:]
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]

    children = np.empty((4 * n_t, 3), dtype=np.int64)
    children[0::4] = np.column_stack([a, m01, m20])
    children[1::4] = np.column_stack([m01, b, m12])
    children[2::4] = np.column_stack([m20, m12, c])
    children[3::4] = np.column_stack([m01, m12, m20])

    return Mesh(vertices, children, mesh.rect,
                2 * mesh.cells_x, 2 * mesh.cells_y)


def triangle_areas(mesh):
    """Signed areas of all triangles (positive for counterclockwise)."""
    p = mesh.vertices[mesh.triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def locate_triangles(mesh, x, y):
    """Triangle index containing each point, via the structured layout."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x0, y0, x1, y1 = mesh.rect
    dx = (x1 - x0) / mesh.cells_x
    dy = (y1 - y0) / mesh.cells_y
    i = np.clip(((x - x0) / dx).astype(np.int64), 0, mesh.cells_x - 1)
    j = np.clip(((y - y0) / dy).astype(np.int64), 0, mesh.cells_y - 1)
    xi = (x - x0) / dx - i
    eta = (y - y0) / dy - j
    return 2 * (j * mesh.cells_x + i) + (eta > xi)


def eval_p1(mesh, coeffs, x, y):
    """Evaluate a P1 nodal field at arbitrary points of the rectangle."""
    coeffs = np.asarray(coeffs, dtype=float)
    t = locate_triangles(mesh, x, y)
    lam = _barycentric(mesh, t, x, y)
    vals = coeffs[mesh.triangles[t]]
    return (vals * lam).sum(axis=-1)


def eval_p1_gradient(mesh, coeffs, x, y):
    """Gradient of a P1 nodal field at arbitrary points (constant per cell)."""
    coeffs = np.asarray(coeffs, dtype=float)
    t = locate_triangles(mesh, x, y)
    p = mesh.vertices[mesh.triangles[t]]
    two_area = ((p[..., 1, 0] - p[..., 0, 0]) * (p[..., 2, 1] - p[..., 0, 1])
                - (p[..., 1, 1] - p[..., 0, 1]) * (p[..., 2, 0] - p[..., 0, 0]))
    gx = np.stack([p[..., 1, 1] - p[..., 2, 1],
                   p[..., 2, 1] - p[..., 0, 1],
                   p[..., 0, 1] - p[..., 1, 1]], axis=-1) / two_area[..., None]
    gy = np.stack([p[..., 2, 0] - p[..., 1, 0],
                   p[..., 0, 0] - p[..., 2, 0],
                   p[..., 1, 0] - p[..., 0, 0]], axis=-1) / two_area[..., None]
    vals = coeffs[mesh.triangles[t]]
    return (vals * gx).sum(axis=-1), (vals * gy).sum(axis=-1)


def _barycentric(mesh, t, x, y):
    p = mesh.vertices[mesh.triangles[t]]
    two_area = ((p[..., 1, 0] - p[..., 0, 0]) * (p[..., 2, 1] - p[..., 0, 1])
                - (p[..., 1, 1] - p[..., 0, 1]) * (p[..., 2, 0] - p[..., 0, 0]))
    l1 = ((x - p[..., 0, 0]) * (p[..., 2, 1] - p[..., 0, 1])
          - (y - p[..., 0, 1]) * (p[..., 2, 0] - p[..., 0, 0])) / two_area
    l2 = ((p[..., 1, 0] - p[..., 0, 0]) * (y - p[..., 0, 1])
          - (p[..., 1, 1] - p[..., 0, 1]) * (x - p[..., 0, 0])) / two_area
    return np.stack([1.0 - l1 - l2, l1, l2], axis=-1)
