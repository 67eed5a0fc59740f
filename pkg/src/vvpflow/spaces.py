"""Lowest-order Whitney form spaces on tetrahedral meshes.

The three spaces form a discrete de Rham subcomplex

    V1 --curl--> V2 --div--> V3

* ``k=1``: edge elements.  Basis for edge (a, b), a < b:
  ``psi = lambda_a grad(lambda_b) - lambda_b grad(lambda_a)``.
  The degree of freedom is the tangential circulation along the edge,
  oriented from the low to the high vertex index.
* ``k=2``: face elements.  Basis for face (a, b, c), a < b < c:
  ``psi = 2 (lambda_a grad(lambda_b) x grad(lambda_c) + cyclic)``.
  The degree of freedom is the flux through the face, with the normal
  oriented by the right-hand rule on the ascending vertex order.
* ``k=3``: one degree of freedom per tet storing the cell integral of
  the field; the basis function is the cell indicator scaled by 1/|T|,
  so the mass matrix is diag(1/|T|) and the coefficient of a field p
  is the unsigned integral of p over the cell.

With these conventions the exterior-derivative matrices are integer
incidence matrices: ``D1`` maps circulations to fluxes of the curl
(Stokes), ``D2`` maps fluxes to cell integrals of the divergence
(divergence theorem), and ``D2 @ D1 = 0`` holds exactly in integer
arithmetic.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .mesh import (
    FACE_EDGE_SIGN,
    TET_EDGE_VERTS,
    TET_FACE_PARITY,
    TET_FACE_VERTS,
    SimplicialMesh3,
    mesh_size,
)
from .quadrature import QuadratureRule, edge_rule, tet_rule, triangle_rule

__all__ = [
    "FormSpace",
    "FormCoefficients",
    "ErrorNorms",
    "DeRhamComplex",
    "derivative_matrix",
    "mass_matrix",
    "interpolate",
    "evaluate",
    "error_norms",
]


@dataclass(eq=False, frozen=True)
class FormSpace:
    """A Whitney k-form space tied to one mesh.

    ``dof_entities[i]`` is the global simplex index carrying DOF i; at
    lowest order this is the identity map, kept explicit because callers
    index boundary data with it.
    """

    k: int
    ndof: int
    mesh: SimplicialMesh3
    dof_entities: np.ndarray
    boundary_dofs: np.ndarray

    def __post_init__(self):
        if self.k not in (1, 2, 3):
            raise ValueError("only k in {1, 2, 3} is supported")


@dataclass
class FormCoefficients:
    """Coefficient vector for a form space (see module docstring)."""

    space: FormSpace
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.space.ndof,):
            raise ValueError(
                f"coefficient vector has shape {self.values.shape}, "
                f"space expects ({self.space.ndof},)"
            )

    def copy(self):
        return FormCoefficients(self.space, self.values.copy())

    @classmethod
    def zeros(cls, space):
        return cls(space, np.zeros(space.ndof))


def form_space(mesh, k):
    if k == 1:
        n, bdry = mesh.n_edges, mesh.boundary_edges
    elif k == 2:
        n, bdry = mesh.n_faces, mesh.boundary_faces
    elif k == 3:
        n, bdry = mesh.n_tets, np.empty(0, dtype=np.int64)
    else:
        raise ValueError("only k in {1, 2, 3} is supported")
    return FormSpace(k, n, mesh, np.arange(n), bdry)


class TetGeometry:
    """Per-tet barycentric gradients and orientation data."""

    def __init__(self, mesh):
        self.mesh = mesh
        verts = mesh.vertices
        jac = verts[mesh.tets[:, 1:]] - verts[mesh.tets[:, :1]]
        grads = np.empty((mesh.n_tets, 4, 3))
        grads[:, 1:, :] = np.linalg.inv(jac).transpose(0, 2, 1)
        grads[:, 0, :] = -grads[:, 1:, :].sum(axis=1)
        self.grads = grads
        self.volumes = mesh.tet_volumes
        self.orientations = mesh.tet_orientations
        # Cross products of gradient pairs, indexed like the local edges.
        self.grad_cross = {
            (i, j): np.cross(grads[:, i, :], grads[:, j, :])
            for i in range(4)
            for j in range(4)
            if i != j
        }


class WhitneyTabulation:
    """Whitney basis values at one quadrature rule's points, all tets.

    psi1 : (T, 6, Q, 3) edge basis vectors
    psi2 : (T, 4, Q, 3) face basis vectors
    points : (T, Q, 3) physical quadrature points
    weights : (T, Q) physical quadrature weights (sum to |T| per tet)
    """

    def __init__(self, geometry, rule):
        if rule.dim != 3:
            raise ValueError("volume tabulation needs a tetrahedron rule")
        mesh = geometry.mesh
        lam = rule.points
        g = geometry.grads
        T, Q = mesh.n_tets, len(rule)

        psi1 = np.empty((T, 6, Q, 3))
        for e, (i, j) in enumerate(TET_EDGE_VERTS):
            psi1[:, e] = (
                lam[None, :, i, None] * g[:, None, j, :]
                - lam[None, :, j, None] * g[:, None, i, :]
            )
        psi2 = np.empty((T, 4, Q, 3))
        for f, (a, b, c) in enumerate(TET_FACE_VERTS):
            psi2[:, f] = 2.0 * (
                lam[None, :, a, None] * geometry.grad_cross[(b, c)][:, None, :]
                + lam[None, :, b, None] * geometry.grad_cross[(c, a)][:, None, :]
                + lam[None, :, c, None] * geometry.grad_cross[(a, b)][:, None, :]
            )
        self.rule = rule
        self.psi1 = psi1
        self.psi2 = psi2
        self.points = np.einsum("qi,tix->tqx", lam, mesh.vertices[mesh.tets])
        self.weights = 6.0 * geometry.volumes[:, None] * rule.weights[None, :]


def _scatter(local, rows, cols, shape):
    """Sum local element matrices into a CSR matrix.

    local : (T, a, b), rows : (T, a), cols : (T, b)
    """
    r = np.broadcast_to(rows[:, :, None], local.shape).ravel()
    c = np.broadcast_to(cols[:, None, :], local.shape).ravel()
    return sp.coo_matrix((local.ravel(), (r, c)), shape=shape).tocsr()


def derivative_matrix(space, mesh=None):
    """Signed integer incidence matrix for the exterior derivative.

    k=1 -> (F, E) curl matrix, k=2 -> (T, F) divergence matrix.  Entries
    are in {-1, 0, +1}; applying the matrix to a coefficient vector
    yields the coefficients of the derivative in the next space.
    """
    if mesh is not None and mesh is not space.mesh:
        raise ValueError("space was built on a different mesh")
    mesh = space.mesh
    if space.k == 1:
        rows = np.repeat(np.arange(mesh.n_faces), 3)
        cols = mesh.face_edges.ravel()
        data = np.tile(np.array(FACE_EDGE_SIGN, dtype=np.int64), mesh.n_faces)
        return sp.coo_matrix(
            (data, (rows, cols)), shape=(mesh.n_faces, mesh.n_edges)
        ).tocsr()
    if space.k == 2:
        rows = np.repeat(np.arange(mesh.n_tets), 4)
        cols = mesh.tet_faces.ravel()
        data = np.outer(
            mesh.tet_orientations, np.array(TET_FACE_PARITY, dtype=np.int64)
        ).ravel()
        return sp.coo_matrix(
            (data, (rows, cols)), shape=(mesh.n_tets, mesh.n_faces)
        ).tocsr()
    raise ValueError("exterior derivative of a 3-form is zero; no matrix")


def mass_matrix(space, quad=None, tabulation=None, mesh=None):
    """L2 Gram matrix of the Whitney basis.

    For k in {1, 2} the entries are integrals of basis products,
    evaluated with ``quad`` (exactness degree >= 2 required, which makes
    the result exact since the integrands are quadratics).  For k=3 the
    matrix is diag(1/|T|) in closed form.
    """
    if mesh is not None and mesh is not space.mesh:
        raise ValueError("space was built on a different mesh")
    mesh = space.mesh
    if space.k == 3:
        return sp.diags(1.0 / mesh.tet_volumes).tocsr()
    if tabulation is None:
        rule = tet_rule(2) if quad is None else quad
        if rule.exactness_degree < 2:
            raise ValueError("mass matrix needs quadrature exact to degree 2")
        tabulation = WhitneyTabulation(TetGeometry(mesh), rule)
    elif tabulation.rule.exactness_degree < 2:
        raise ValueError("mass matrix needs quadrature exact to degree 2")
    if space.k == 1:
        psi, idx = tabulation.psi1, mesh.tet_edges
    else:
        psi, idx = tabulation.psi2, mesh.tet_faces
    local = np.einsum("tq,teqx,tfqx->tef", tabulation.weights, psi, psi)
    return _scatter(local, idx, idx, (space.ndof, space.ndof))


def interpolate(fielddata, space, t=0.0, rule=None, mesh=None):
    """Canonical interpolation: evaluate the defining DOF functionals.

    ``fielddata(points, t)`` takes an (n, 3) array and returns (n, 3)
    vectors for k in {1, 2} or (n,) scalars for k=3.  Circulations are
    computed with a Gauss rule along each edge, fluxes with a triangle
    rule on each face, and cell integrals with a volume rule.
    """
    if mesh is not None and mesh is not space.mesh:
        raise ValueError("space was built on a different mesh")
    mesh = space.mesh
    if space.k == 1:
        rule = edge_rule(7) if rule is None else rule
        if rule.dim != 1:
            raise ValueError("k=1 interpolation needs an edge rule")
        a = mesh.vertices[mesh.edges[:, 0]]
        tang = mesh.vertices[mesh.edges[:, 1]] - a
        s = rule.points[:, 1]
        pts = a[:, None, :] + s[None, :, None] * tang[:, None, :]
        vals = np.asarray(fielddata(pts.reshape(-1, 3), t), dtype=float)
        vals = vals.reshape(mesh.n_edges, len(rule), 3)
        values = np.einsum("q,eqx,ex->e", rule.weights, vals, tang)
    elif space.k == 2:
        rule = triangle_rule(7) if rule is None else rule
        if rule.dim != 2:
            raise ValueError("k=2 interpolation needs a triangle rule")
        a = mesh.vertices[mesh.faces[:, 0]]
        u = mesh.vertices[mesh.faces[:, 1]] - a
        v = mesh.vertices[mesh.faces[:, 2]] - a
        # Unnormalized right-hand normal; |N| = 2 area, and the rule's
        # weights sum to 1/2, so flux = sum w F.N needs no extra factor.
        normal = np.cross(u, v)
        x1, x2 = rule.points[:, 1], rule.points[:, 2]
        pts = a[:, None, :] + x1[None, :, None] * u[:, None, :] + x2[None, :, None] * v[:, None, :]
        vals = np.asarray(fielddata(pts.reshape(-1, 3), t), dtype=float)
        vals = vals.reshape(mesh.n_faces, len(rule), 3)
        values = np.einsum("q,fqx,fx->f", rule.weights, vals, normal)
    else:
        rule = tet_rule(7) if rule is None else rule
        if rule.dim != 3:
            raise ValueError("k=3 interpolation needs a tetrahedron rule")
        pts = np.einsum("qi,tix->tqx", rule.points, mesh.vertices[mesh.tets])
        vals = np.asarray(fielddata(pts.reshape(-1, 3), t), dtype=float)
        vals = vals.reshape(mesh.n_tets, len(rule))
        w = 6.0 * mesh.tet_volumes[:, None] * rule.weights[None, :]
        values = np.sum(w * vals, axis=1)
    return FormCoefficients(space, values)


def evaluate(coeffs, tet, bary):
    """Evaluate a discrete form inside one tet at barycentric ``bary``.

    Returns a 3-vector for k in {1, 2} and the pointwise density
    (cell integral / |T|) for k=3.
    """
    space = coeffs.space
    mesh = space.mesh
    bary = np.asarray(bary, dtype=float)
    verts = mesh.vertices[mesh.tets[tet]]
    jac = verts[1:] - verts[0]
    grads = np.empty((4, 3))
    grads[1:] = np.linalg.inv(jac).T
    grads[0] = -grads[1:].sum(axis=0)
    if space.k == 1:
        out = np.zeros(3)
        for e, (i, j) in enumerate(TET_EDGE_VERTS):
            c = coeffs.values[mesh.tet_edges[tet, e]]
            out += c * (bary[i] * grads[j] - bary[j] * grads[i])
        return out
    if space.k == 2:
        out = np.zeros(3)
        for f, (a, b, c) in enumerate(TET_FACE_VERTS):
            w = coeffs.values[mesh.tet_faces[tet, f]]
            out += 2.0 * w * (
                bary[a] * np.cross(grads[b], grads[c])
                + bary[b] * np.cross(grads[c], grads[a])
                + bary[c] * np.cross(grads[a], grads[b])
            )
        return out
    return coeffs.values[tet] / mesh.tet_volumes[tet]


@dataclass(frozen=True)
class ErrorNorms:
    """Absolute and relative errors; ``graph`` adds the derivative term.

    graph is the H(curl) norm for k=1, H(div) for k=2, and equals the
    L2 norm for k=3 (the derivative of a 3-form vanishes).
    """

    l2: float
    graph: float
    rel_l2: float | None = None
    rel_graph: float | None = None


def error_norms(
    coeffs,
    exact,
    exact_derivative=None,
    t=0.0,
    quad=None,
    relative=True,
    tabulation=None,
    derivative=None,
):
    """L2 and graph-norm errors of a discrete form against analytic fields.

    ``exact(points, t)`` gives the field itself; ``exact_derivative`` the
    curl (k=1) or divergence (k=2).  A missing derivative field is
    treated as zero.  ``derivative`` may pass a precomputed incidence
    matrix; otherwise it is rebuilt.  Relative norms divide by the norms
    of the exact field and raise if those vanish.
    """
    space = coeffs.space
    mesh = space.mesh
    if tabulation is None:
        rule = tet_rule(6) if quad is None else quad
        tabulation = WhitneyTabulation(TetGeometry(mesh), rule)
    W = tabulation.weights
    pts = tabulation.points.reshape(-1, 3)

    def vec_at_points(tab_psi, idx, vals):
        return np.einsum("teqx,te->tqx", tab_psi, vals[idx])

    if space.k == 1:
        uh = vec_at_points(tabulation.psi1, mesh.tet_edges, coeffs.values)
    elif space.k == 2:
        uh = vec_at_points(tabulation.psi2, mesh.tet_faces, coeffs.values)
    else:
        dens = coeffs.values / mesh.tet_volumes
        uh = dens[:, None]

    if space.k == 3:
        uex = np.asarray(exact(pts, t), dtype=float).reshape(uh.shape[0], -1)
        err2 = float(np.sum(W * (uex - uh) ** 2))
        ex2 = float(np.sum(W * uex**2))
        derr2 = dex2 = 0.0
    else:
        uex = np.asarray(exact(pts, t), dtype=float).reshape(uh.shape)
        err2 = float(np.sum(W * np.sum((uex - uh) ** 2, axis=-1)))
        ex2 = float(np.sum(W * np.sum(uex**2, axis=-1)))
        D = derivative_matrix(space) if derivative is None else derivative
        dc = D @ coeffs.values
        if space.k == 1:
            dh = vec_at_points(tabulation.psi2, mesh.tet_faces, dc)
            if exact_derivative is None:
                dex = np.zeros_like(dh)
            else:
                dex = np.asarray(exact_derivative(pts, t), dtype=float).reshape(dh.shape)
            derr2 = float(np.sum(W * np.sum((dex - dh) ** 2, axis=-1)))
            dex2 = float(np.sum(W * np.sum(dex**2, axis=-1)))
        else:
            dh = (dc / mesh.tet_volumes)[:, None]
            if exact_derivative is None:
                dex = np.zeros((uh.shape[0], uh.shape[1]))
            else:
                dex = np.asarray(exact_derivative(pts, t), dtype=float)
                dex = dex.reshape(uh.shape[0], uh.shape[1])
            derr2 = float(np.sum(W * (dex - dh) ** 2))
            dex2 = float(np.sum(W * dex**2))

    l2 = np.sqrt(err2)
    graph = np.sqrt(err2 + derr2)
    if not relative:
        return ErrorNorms(l2, graph)
    denom_l2 = np.sqrt(ex2)
    denom_graph = np.sqrt(ex2 + dex2)
    if denom_l2 < 1e-300 or denom_graph < 1e-300:
        raise ValueError("relative error undefined: exact field has zero norm")
    return ErrorNorms(l2, graph, l2 / denom_l2, graph / denom_graph)


class DeRhamComplex:
    """The three Whitney spaces plus cached operators for one mesh.

    Builds the incidence matrices D1, D2 and the mass matrices M1, M2,
    M3 once; tabulations of the basis at volume rules of any degree are
    cached so repeated assembly (convection, loads) reuses them.
    """

    def __init__(self, mesh, quad_degree=4):
        if quad_degree < 3:
            raise ValueError("volume quadrature must be exact to degree >= 3")
        self.mesh = mesh
        self.geometry = TetGeometry(mesh)
        self.V1 = form_space(mesh, 1)
        self.V2 = form_space(mesh, 2)
        self.V3 = form_space(mesh, 3)
        self.quad_degree = quad_degree
        self._tabs = {}
        self.quad = self.tabulation(quad_degree).rule
        self.d1 = derivative_matrix(self.V1)
        self.d2 = derivative_matrix(self.V2)
        self.m1 = mass_matrix(self.V1, tabulation=self.tabulation(quad_degree))
        self.m2 = mass_matrix(self.V2, tabulation=self.tabulation(quad_degree))
        self.m3 = mass_matrix(self.V3)

    def space(self, k):
        return {1: self.V1, 2: self.V2, 3: self.V3}[k]

    def tabulation(self, degree=None):
        degree = self.quad_degree if degree is None else degree
        if degree not in self._tabs:
            self._tabs[degree] = WhitneyTabulation(self.geometry, tet_rule(degree))
        return self._tabs[degree]

    def interpolate(self, fielddata, k, t=0.0):
        return interpolate(fielddata, self.space(k), t=t)

    def error_norms(self, coeffs, exact, exact_derivative=None, t=0.0, degree=6, relative=True):
        return error_norms(
            coeffs,
            exact,
            exact_derivative,
            t=t,
            relative=relative,
            tabulation=self.tabulation(degree),
            derivative={1: self.d1, 2: self.d2, 3: None}[coeffs.space.k],
        )

    def divergence_max(self, u_values):
        """Sup norm of the pointwise divergence density of a 2-form."""
        return float(np.max(np.abs(self.d2 @ u_values) / self.mesh.tet_volumes))

    def mass(self, k):
        return {1: self.m1, 2: self.m2, 3: self.m3}[k]

    def norm(self, coeffs):
        """M-norm of a coefficient vector (the discrete L2 norm)."""
        v = coeffs.values
        return float(np.sqrt(v @ (self.mass(coeffs.space.k) @ v)))

    @property
    def h(self):
        return mesh_size(self.mesh)
