"""Conforming tetrahedral meshes with oriented skeletons.

Conventions used throughout the package:

* every simplex is stored with its vertex indices sorted ascending, and
  that ascending order is the canonical orientation of the simplex;
* edge tangents run from the low to the high vertex index;
* face normals follow the right-hand rule on the ascending vertex order;
* ``tet_volumes`` are positive, with the geometric orientation of the
  ascending vertex order kept separately in ``tet_orientations`` (+1 when
  the ascending order is right-handed, -1 otherwise).

Local numbering inside a tetrahedron (vertices 0 < 1 < 2 < 3 after the
global sort) lists edges as (0,1), (0,2), (0,3), (1,2), (1,3), (2,3) and
faces as (0,1,2), (0,1,3), (0,2,3), (1,2,3).  Because the global vertex
order is ascending inside every simplex, local-to-global DOF maps carry
no extra signs; all orientation bookkeeping lives in the incidence
matrices assembled by :mod:`vvpflow.spaces`.
"""
from __future__ import annotations

import itertools

import numpy as np

__all__ = [
    "SimplicialMesh3",
    "build_box_mesh",
    "boundary_skeleton",
    "mesh_size",
    "euler_characteristic",
    "read_tetmesh",
    "write_tetmesh",
]

TET_EDGE_VERTS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
TET_FACE_VERTS = ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3))
# (-1)**(position of the omitted vertex): faces above omit vertex 3,2,1,0.
TET_FACE_PARITY = (-1, 1, -1, 1)
FACE_EDGE_VERTS = ((1, 2), (0, 2), (0, 1))
FACE_EDGE_SIGN = (1, -1, 1)


class SimplicialMesh3:
    """Tetrahedral mesh with deduplicated edge/face skeletons.

    Parameters
    ----------
    vertices : (V, 3) float array
    tets : (T, 4) int array of vertex indices; rows are sorted ascending
        on construction.

    Attributes (all read-only by convention)
    ----------
    edges : (E, 2) ascending vertex pairs, lexicographically sorted
    faces : (F, 3) ascending vertex triples, lexicographically sorted
    tet_edges : (T, 6) global edge index per local edge
    tet_faces : (T, 4) global face index per local face
    face_edges : (F, 3) global edge index per local face edge
    face_tets : (F, 2) incident tets, -1 padding for boundary faces
    tet_volumes : (T,) positive volumes
    tet_orientations : (T,) +1 / -1 geometric orientation signs
    boundary_faces, boundary_edges, boundary_vertices : sorted index arrays
    boundary_face_signs : (n_bdry_faces,) +1 when the canonical face
        normal points out of the single incident tet, else -1
    """

    def __init__(self, vertices, tets):
        vertices = np.ascontiguousarray(vertices, dtype=float)
        tets = np.ascontiguousarray(tets, dtype=np.int64)
        if vertices.ndim != 2 or vertices.shape[1] != 3:
            raise ValueError("vertices must be an (V, 3) array")
        if tets.ndim != 2 or tets.shape[1] != 4:
            raise ValueError("tets must be a (T, 4) array")
        if tets.size and (tets.min() < 0 or tets.max() >= len(vertices)):
            raise ValueError("tet vertex index out of range")
        tets = np.sort(tets, axis=1)
        if np.any(np.diff(tets, axis=1) == 0):
            raise ValueError("degenerate tet with repeated vertex")

        self.vertices = vertices
        self.tets = tets
        self.n_vertices = len(vertices)
        self.n_tets = len(tets)

        jac = vertices[tets[:, 1:]] - vertices[tets[:, :1]]
        dets = np.linalg.det(jac)
        if np.any(np.abs(dets) < 1e-300):
            raise ValueError("degenerate tet with zero volume")
        self.tet_volumes = np.abs(dets) / 6.0
        self.tet_orientations = np.sign(dets).astype(np.int64)

        edge_rows = tets[:, TET_EDGE_VERTS].reshape(-1, 2)
        self.edges, edge_inv = np.unique(edge_rows, axis=0, return_inverse=True)
        self.tet_edges = edge_inv.reshape(self.n_tets, 6)
        self.n_edges = len(self.edges)

        face_rows = tets[:, TET_FACE_VERTS].reshape(-1, 3)
        self.faces, face_inv = np.unique(face_rows, axis=0, return_inverse=True)
        self.tet_faces = face_inv.reshape(self.n_tets, 4)
        self.n_faces = len(self.faces)

        self.face_edges = self._lookup_edges(self.faces[:, FACE_EDGE_VERTS])
        self.face_tets, counts = self._face_incidence()
        if np.any(counts > 2):
            raise ValueError("non-manifold mesh: face shared by > 2 tets")

        self.boundary_faces = np.flatnonzero(counts == 1)
        self.boundary_edges = np.unique(self.face_edges[self.boundary_faces])
        self.boundary_vertices = np.unique(self.faces[self.boundary_faces])
        self.boundary_face_signs = self._outward_signs()

    def _lookup_edges(self, pairs):
        """Map ascending vertex pairs to global edge indices."""
        key = self.edges[:, 0] * self.n_vertices + self.edges[:, 1]
        want = pairs[..., 0] * self.n_vertices + pairs[..., 1]
        idx = np.searchsorted(key, want)
        if np.any(key[idx] != want):
            raise ValueError("face edge missing from edge table")
        return idx

    def _face_incidence(self):
        flat_faces = self.tet_faces.ravel()
        flat_tets = np.repeat(np.arange(self.n_tets), 4)
        order = np.argsort(flat_faces, kind="stable")
        counts = np.bincount(flat_faces, minlength=self.n_faces)
        starts = np.concatenate([[0], np.cumsum(counts)])
        face_tets = np.full((self.n_faces, 2), -1, dtype=np.int64)
        sorted_tets = flat_tets[order]
        face_tets[:, 0] = sorted_tets[starts[:-1]]
        interior = counts == 2
        face_tets[interior, 1] = sorted_tets[starts[:-1][interior] + 1]
        return face_tets, counts

    def _outward_signs(self):
        """Outward-flux sign of each boundary face w.r.t. its tet."""
        signs = np.empty(len(self.boundary_faces), dtype=np.int64)
        for out, face in enumerate(self.boundary_faces):
            tet = self.face_tets[face, 0]
            local = int(np.flatnonzero(self.tet_faces[tet] == face)[0])
            signs[out] = TET_FACE_PARITY[local] * self.tet_orientations[tet]
        return signs

    def face_areas(self, faces=None):
        faces = self.faces if faces is None else self.faces[faces]
        a, b, c = (self.vertices[faces[:, i]] for i in range(3))
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)

    def __repr__(self):
        return (
            f"SimplicialMesh3(V={self.n_vertices}, E={self.n_edges}, "
            f"F={self.n_faces}, T={self.n_tets})"
        )


def build_box_mesh(nx, ny, nz, lo=(0.0, 0.0, 0.0), hi=(1.0, 1.0, 1.0)):
    """Kuhn triangulation of an axis-aligned box.

    Each of the nx*ny*nz hexahedral cells is split into the six
    tetrahedra spanned by the monotone vertex chains from its low corner
    to its high corner, which keeps shared cell faces conforming.
    """
    for n in (nx, ny, nz):
        if int(n) != n or n < 1:
            raise ValueError("cell counts must be positive integers")
    nx, ny, nz = int(nx), int(ny), int(nz)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if lo.shape != (3,) or hi.shape != (3,) or np.any(hi <= lo):
        raise ValueError("box corners must satisfy hi > lo componentwise")

    xs = np.linspace(lo[0], hi[0], nx + 1)
    ys = np.linspace(lo[1], hi[1], ny + 1)
    zs = np.linspace(lo[2], hi[2], nz + 1)
    verts = np.empty(((nx + 1) * (ny + 1) * (nz + 1), 3))
    verts[:, 0] = np.tile(xs, (ny + 1) * (nz + 1))
    verts[:, 1] = np.tile(np.repeat(ys, nx + 1), nz + 1)
    verts[:, 2] = np.repeat(zs, (nx + 1) * (ny + 1))

    def vid(i, j, k):
        return i + (nx + 1) * (j + (ny + 1) * k)

    ii, jj, kk = np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nz), indexing="ij")
    ii, jj, kk = ii.ravel(), jj.ravel(), kk.ravel()
    unit = np.eye(3, dtype=np.int64)
    chunks = []
    for perm in itertools.permutations(range(3)):
        steps = np.cumsum(unit[list(perm)], axis=0)
        chain = [vid(ii, jj, kk)]
        for s in steps:
            chain.append(vid(ii + s[0], jj + s[1], kk + s[2]))
        chunks.append(np.stack(chain, axis=1))
    tets = np.concatenate(chunks, axis=0)
    return SimplicialMesh3(verts, tets)


def boundary_skeleton(mesh):
    """Sorted index arrays (faces, edges, vertices) of the boundary."""
    return mesh.boundary_faces, mesh.boundary_edges, mesh.boundary_vertices


def mesh_size(mesh):
    """Longest edge length, the mesh-size parameter for convergence plots."""
    vec = mesh.vertices[mesh.edges[:, 1]] - mesh.vertices[mesh.edges[:, 0]]
    return float(np.linalg.norm(vec, axis=1).max())


def euler_characteristic(mesh):
    return mesh.n_vertices - mesh.n_edges + mesh.n_faces - mesh.n_tets


def write_tetmesh(path, mesh):
    """Write the plain-text format: header, vertex lines, tet lines."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"tetmesh {mesh.n_vertices} {mesh.n_tets}\n")
        for x, y, z in mesh.vertices:
            fh.write(f"{float(x)!r} {float(y)!r} {float(z)!r}\n")
        for row in mesh.tets:
            fh.write(f"{row[0]} {row[1]} {row[2]} {row[3]}\n")


def read_tetmesh(path):
    """Read the plain-text format written by :func:`write_tetmesh`.

    The format is one header line ``tetmesh <V> <T>``, then V lines of
    vertex coordinates and T lines of 0-based tet connectivity.
    """
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty mesh file")
    head = lines[0].split()
    if len(head) != 3 or head[0] != "tetmesh":
        raise ValueError(f"{path}: expected header 'tetmesh <V> <T>'")
    try:
        nv, nt = int(head[1]), int(head[2])
    except ValueError as exc:
        raise ValueError(f"{path}: bad counts in header") from exc
    if len(lines) != 1 + nv + nt:
        raise ValueError(
            f"{path}: expected {1 + nv + nt} lines for V={nv} T={nt}, "
            f"found {len(lines)}"
        )
    try:
        verts = np.array([[float(v) for v in ln.split()] for ln in lines[1 : 1 + nv]])
        tets = np.array(
            [[int(v) for v in ln.split()] for ln in lines[1 + nv :]], dtype=np.int64
        )
    except ValueError as exc:
        raise ValueError(f"{path}: malformed vertex or tet line") from exc
    if nv and verts.shape != (nv, 3):
        raise ValueError(f"{path}: vertex lines must hold 3 coordinates")
    if nt and tets.shape != (nt, 4):
        raise ValueError(f"{path}: tet lines must hold 4 vertex indices")
    return SimplicialMesh3(verts, tets)
