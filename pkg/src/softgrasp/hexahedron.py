"""Trilinear 8-node hexahedron: shape functions, quadrature, face tables.

Node ordering follows the VTK hexahedron convention (cell type 12): nodes
0-3 are the bottom quad counter-clockwise seen from +zeta, nodes 4-7 the
matching top quad. Natural coordinates (xi, eta, zeta) live in [-1, 1]^3,
so a straight-sided cube element of edge h has det J = (h/2)^3 = h^3/8.

Everything here is vectorized over (elements, quadrature points); the
heavy per-step kernels in :mod:`softgrasp.fem` consume the precomputed
reference gradients produced by :func:`reference_operators`.
"""

from __future__ import annotations

import numpy as np

# Natural coordinates of the 8 corners, VTK ordering.
CORNERS = np.array([
    [-1.0, -1.0, -1.0],
    [+1.0, -1.0, -1.0],
    [+1.0, +1.0, -1.0],
    [-1.0, +1.0, -1.0],
    [-1.0, -1.0, +1.0],
    [+1.0, -1.0, +1.0],
    [+1.0, +1.0, +1.0],
    [-1.0, +1.0, +1.0],
])

# Local node quadruples of the 6 faces, wound counter-clockwise seen from
# outside the element (outward normal = right-hand rule on the winding).
FACES = np.array([
    [0, 3, 2, 1],   # zeta = -1
    [4, 5, 6, 7],   # zeta = +1
    [0, 1, 5, 4],   # eta  = -1
    [1, 2, 6, 5],   # xi   = +1
    [2, 3, 7, 6],   # eta  = +1
    [0, 4, 7, 3],   # xi   = -1
])

_G = 1.0 / np.sqrt(3.0)
# 2x2x2 Gauss points (full integration; all weights 1).
GAUSS_POINTS = CORNERS * _G
GAUSS_WEIGHTS = np.ones(8)

# 2x2 Gauss rule on a quad face, natural coords in [-1,1]^2.
QUAD_GAUSS = np.array([[-_G, -_G], [+_G, -_G], [+_G, +_G], [-_G, +_G]])


def shape_functions(xi):
    """Trilinear shape functions N_a(xi) for points xi of shape (..., 3)."""
    xi = np.asarray(xi, dtype=float)
    return 0.125 * ((1.0 + xi[..., None, 0] * CORNERS[:, 0])
                    * (1.0 + xi[..., None, 1] * CORNERS[:, 1])
                    * (1.0 + xi[..., None, 2] * CORNERS[:, 2]))


def shape_gradients(xi):
    """dN_a/dxi at points xi of shape (..., 3); result (..., 8, 3)."""
    xi = np.asarray(xi, dtype=float)
    x, y, z = xi[..., None, 0], xi[..., None, 1], xi[..., None, 2]
    cx, cy, cz = CORNERS[:, 0], CORNERS[:, 1], CORNERS[:, 2]
    g = np.empty(xi.shape[:-1] + (8, 3))
    g[..., 0] = 0.125 * cx * (1.0 + y * cy) * (1.0 + z * cz)
    g[..., 1] = 0.125 * cy * (1.0 + x * cx) * (1.0 + z * cz)
    g[..., 2] = 0.125 * cz * (1.0 + x * cx) * (1.0 + y * cy)
    return g


def jacobians(node_coords, xi):
    """Jacobians dX/dxi for element corner blocks.

    node_coords: (..., 8, 3) element corner coordinates.
    xi: (q, 3) evaluation points.
    Returns (..., q, 3, 3).
    """
    grads = shape_gradients(xi)                      # (q, 8, 3)
    return np.einsum('...aj,qak->...qjk', node_coords, grads)


def reference_operators(node_coords, xi=None):
    """Reference shape-function gradients and integration weights.

    node_coords: (m, 8, 3) reference corner coordinates per element.
    xi: quadrature points, default the 2x2x2 Gauss rule.

    Returns (grad0, wdetj):
      grad0: (m, q, 8, 3) with grad0[e, q, a, j] = dN_a/dX_j,
      wdetj: (m, q) quadrature weight times det J.

    Raises ValueError if any det J <= 0 (degenerate reference geometry).
    """
    if xi is None:
        xi = GAUSS_POINTS
        weights = GAUSS_WEIGHTS
    else:
        xi = np.atleast_2d(np.asarray(xi, dtype=float))
        weights = np.ones(len(xi))
    grads = shape_gradients(xi)                      # (q, 8, 3)
    jac = np.einsum('eaj,qak->eqjk', node_coords, grads)
    detj = np.linalg.det(jac)
    if np.any(detj <= 0.0):
        e, q = np.unravel_index(int(np.argmin(detj)), detj.shape)
        raise ValueError("non-positive reference Jacobian %.3e in element %d"
                         % (detj[e, q], e))
    jinv = np.linalg.inv(jac)
    grad0 = np.einsum('qak,eqkj->eqaj', grads, jinv)
    return grad0, weights[None, :] * detj


def element_volumes(node_coords):
    """Quadrature volume of each element block (m, 8, 3) -> (m,)."""
    jac = jacobians(node_coords, GAUSS_POINTS)
    return np.einsum('q,eq->e', GAUSS_WEIGHTS, np.linalg.det(jac))


def quad_shape_functions(xi2):
    """Bilinear quad shape functions at (q, 2) points; result (q, 4)."""
    xi2 = np.asarray(xi2, dtype=float)
    s = np.array([[-1.0, -1.0], [+1.0, -1.0], [+1.0, +1.0], [-1.0, +1.0]])
    return 0.25 * ((1.0 + xi2[..., None, 0] * s[:, 0])
                   * (1.0 + xi2[..., None, 1] * s[:, 1]))


def quad_area_elements(face_coords, xi2=None):
    """Surface Jacobian |x_,xi x x_,eta| for quad faces.

    face_coords: (..., 4, 3); xi2: (q, 2) points (default 2x2 Gauss).
    Returns (..., q).
    """
    if xi2 is None:
        xi2 = QUAD_GAUSS
    xi2 = np.asarray(xi2, dtype=float)
    s = np.array([[-1.0, -1.0], [+1.0, -1.0], [+1.0, +1.0], [-1.0, +1.0]])
    dxi = 0.25 * s[:, 0][None, :] * (1.0 + xi2[:, 1][:, None] * s[:, 1][None, :])
    deta = 0.25 * s[:, 1][None, :] * (1.0 + xi2[:, 0][:, None] * s[:, 0][None, :])
    t1 = np.einsum('...aj,qa->...qj', face_coords, dxi)
    t2 = np.einsum('...aj,qa->...qj', face_coords, deta)
    return np.linalg.norm(np.cross(t1, t2), axis=-1)


def quad_areas(face_coords):
    """Total area of quad faces (..., 4, 3) -> (...)."""
    return quad_area_elements(face_coords).sum(axis=-1)


def characteristic_lengths(node_coords):
    """CFL characteristic length per element: volume / largest face area."""
    vols = element_volumes(node_coords)
    face_coords = node_coords[:, FACES, :]           # (m, 6, 4, 3)
    areas = quad_areas(face_coords)                  # (m, 6)
    return vols / areas.max(axis=1)
