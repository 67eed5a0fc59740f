"""Assembly of the vorticity-velocity-pressure saddle system.

Unknown groups: ``u1`` vorticity (edge circulations), ``u2`` velocity
(face fluxes), ``u3`` total-head pressure (cell integrals), ``phi`` the
harmonic multiplier that absorbs the mean-pressure ambiguity when the
normal velocity is prescribed on the whole boundary.

The steady form assembled by :func:`assemble_B0` has rows

    tau-row :  M1 u1 - D1^T M2 u2                  = natural tangential term
    v-row   :  nu M2 D1 u1 - D2^T M3 u3            = load(f2) + natural pressure term
    q-row   :  M3 D2 u2 + M3 H phi                 = load(f3)
    chi-row :  H^T M3 u3                           = 0

and the transient step adds the mass-over-dt and linearized convection
blocks to the v-row (see :mod:`vvpflow.solver`).

Boundary conditions come in two independent channels per region: the
vorticity channel (essential tangential vorticity trace, or natural
tangential velocity) and the velocity/pressure channel (essential normal
velocity, or natural pressure trace).  Essential values are canonical
interpolants of analytic data and are imposed by elimination.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .linalg import BlockSystem
from .mesh import TET_EDGE_VERTS, TET_FACE_VERTS
from .quadrature import triangle_rule
from .spaces import _scatter, interpolate

__all__ = [
    "RegionBC",
    "BoundaryConditionSpec",
    "HarmonicSpace",
    "build_harmonic_space",
    "essential_constraints",
    "assemble_B0",
    "assemble_convection",
    "assemble_natural_bc",
    "assemble_load",
    "assemble_scalar_load",
    "NaturalBCCache",
]

ESSENTIAL = "essential"
NATURAL = "natural"


@dataclass(frozen=True)
class RegionBC:
    """Boundary conditions on one region of the boundary.

    vorticity_mode "essential": the tangential vorticity trace is
    prescribed; ``vorticity_data`` is the vorticity as a full vector
    field (only its tangential part enters the edge circulations).
    vorticity_mode "natural": the tangential velocity is prescribed
    weakly; ``vorticity_data`` is the velocity as a full vector field.

    velocity_mode "essential": the normal velocity is prescribed;
    ``velocity_data`` is the velocity as a full vector field (only the
    normal part enters the face fluxes).
    velocity_mode "natural": the pressure trace is prescribed weakly;
    ``velocity_data`` is a scalar field.

    ``where`` is a predicate on face centroids ((n, 3) -> bool mask);
    None marks the catch-all region for faces no other region claims.
    Missing data callables mean homogeneous data.
    """

    name: str = "all"
    vorticity_mode: str = ESSENTIAL
    velocity_mode: str = ESSENTIAL
    vorticity_data: object = None
    velocity_data: object = None
    where: object = None

    def __post_init__(self):
        for mode in (self.vorticity_mode, self.velocity_mode):
            if mode not in (ESSENTIAL, NATURAL):
                raise ValueError(f"unknown boundary mode {mode!r}")

    @property
    def solvable(self):
        """Essential vorticity with natural pressure leaves the nearby
        fluxes underdetermined at this order (the tangential-vorticity
        constraints remove exactly the test equations that would pin
        the fluxes the pressure condition leaves free), so that pairing
        is rejected at assembly.  Every other pairing is fine.
        """
        return not (
            self.vorticity_mode == ESSENTIAL and self.velocity_mode == NATURAL
        )


class BoundaryConditionSpec:
    """An ordered set of RegionBC whose regions partition the boundary."""

    def __init__(self, regions):
        if isinstance(regions, RegionBC):
            regions = (regions,)
        self.regions = tuple(regions)
        if not self.regions:
            raise ValueError("at least one boundary region is required")
        if sum(1 for r in self.regions if r.where is None) > 1:
            raise ValueError("at most one catch-all region (where=None) is allowed")

    def face_region_map(self, mesh):
        """Region index per boundary face; raises unless a partition."""
        bf = mesh.boundary_faces
        centroids = mesh.vertices[mesh.faces[bf]].mean(axis=1)
        owner = np.full(len(bf), -1, dtype=np.int64)
        claimed = np.zeros(len(bf), dtype=bool)
        catch_all = -1
        for r, region in enumerate(self.regions):
            if region.where is None:
                catch_all = r
                continue
            mask = np.asarray(region.where(centroids), dtype=bool)
            if mask.shape != (len(bf),):
                raise ValueError(f"region {region.name!r} predicate returned bad shape")
            if np.any(mask & claimed):
                raise ValueError(
                    f"region {region.name!r} overlaps another region; "
                    "regions must partition the boundary"
                )
            owner[mask] = r
            claimed |= mask
        if catch_all >= 0:
            owner[~claimed] = catch_all
        elif not np.all(claimed):
            raise ValueError("boundary faces left unclaimed by the region predicates")
        return owner

    @property
    def all_velocity_essential(self):
        return all(r.velocity_mode == ESSENTIAL for r in self.regions)


@dataclass(frozen=True)
class HarmonicSpace:
    """M3-orthonormal basis of the harmonic 3-form space.

    ``basis`` has shape (n_tets, dim); dim is 1 exactly when the normal
    velocity is essential on the whole boundary (the complement of the
    constrained divergence image is then the constants), else 0.
    """

    basis: np.ndarray

    @property
    def dim(self):
        return self.basis.shape[1]


def build_harmonic_space(complex_, bc, check_rank=False):
    """Harmonic 3-forms for the given boundary conditions.

    With ``check_rank=True`` the dimension is verified against a dense
    rank computation on the divergence matrix with constrained columns
    removed; this is the guard that fails loudly when an imported mesh
    is not simply connected in the way the analytic count assumes.
    """
    mesh = complex_.mesh
    if bc.all_velocity_essential:
        c = mesh.tet_volumes.astype(float)
        c = c / np.sqrt(mesh.tet_volumes.sum())
        basis = c[:, None]
    else:
        basis = np.zeros((mesh.n_tets, 0))
    if check_rank:
        owner = bc.face_region_map(mesh)
        essential_faces = mesh.boundary_faces[
            np.array(
                [bc.regions[o].velocity_mode == ESSENTIAL for o in owner], dtype=bool
            )
        ]
        keep = np.setdiff1d(np.arange(mesh.n_faces), essential_faces)
        rank = np.linalg.matrix_rank(complex_.d2[:, keep].toarray())
        expected = mesh.n_tets - rank
        if expected != basis.shape[1]:
            raise ValueError(
                f"harmonic space dimension mismatch: rank oracle gives "
                f"{expected}, analytic count gives {basis.shape[1]}; "
                "the mesh topology is not the expected contractible one"
            )
    return HarmonicSpace(basis)


def _region_faces(mesh, bc, owner, predicate):
    """Boundary faces whose region satisfies ``predicate(region)``."""
    mask = np.array([predicate(bc.regions[o]) for o in owner], dtype=bool)
    return mesh.boundary_faces[mask], mask


def essential_constraints(complex_, bc, t=0.0, f3_given=False, flux_correction=True):
    """Interpolated essential boundary values.

    Returns {"u1": (edge_indices, values), "u2": (face_indices, values)}
    with empty entries dropped.  When the normal velocity is essential on
    the whole boundary and no 3-form source is given, the face values
    are shifted by an area-weighted constant so the total boundary flux
    vanishes exactly; otherwise the harmonic multiplier would turn the
    quadrature-level compatibility defect of the interpolated data into
    a spurious constant divergence.
    """
    mesh = complex_.mesh
    owner = bc.face_region_map(mesh)
    out = {}

    edge_idx_parts, edge_val_parts = [], []
    for r, region in enumerate(bc.regions):
        if region.vorticity_mode != ESSENTIAL:
            continue
        faces = mesh.boundary_faces[owner == r]
        if len(faces) == 0:
            continue
        edges = np.unique(mesh.face_edges[faces])
        if region.vorticity_data is None:
            vals = np.zeros(len(edges))
        else:
            vals = interpolate(region.vorticity_data, complex_.V1, t=t).values[edges]
        edge_idx_parts.append(edges)
        edge_val_parts.append(vals)
    if edge_idx_parts:
        idx = np.concatenate(edge_idx_parts)
        vals = np.concatenate(edge_val_parts)
        # Seam edges can appear under two regions; keep the first.
        uniq, first = np.unique(idx, return_index=True)
        out["u1"] = (uniq, vals[first])

    face_idx_parts, face_val_parts = [], []
    for r, region in enumerate(bc.regions):
        if region.velocity_mode != ESSENTIAL:
            continue
        faces = mesh.boundary_faces[owner == r]
        if len(faces) == 0:
            continue
        if region.velocity_data is None:
            vals = np.zeros(len(faces))
        else:
            vals = interpolate(region.velocity_data, complex_.V2, t=t).values[faces]
        face_idx_parts.append(faces)
        face_val_parts.append(vals)
    if face_idx_parts:
        idx = np.concatenate(face_idx_parts)
        vals = np.concatenate(face_val_parts)
        if flux_correction and bc.all_velocity_essential and not f3_given:
            order = np.argsort(idx)
            idx, vals = idx[order], vals[order]
            signs = mesh.boundary_face_signs[
                np.searchsorted(mesh.boundary_faces, idx)
            ].astype(float)
            areas = mesh.face_areas(idx)
            defect = float(signs @ vals)
            vals = vals - signs * defect * areas / areas.sum()
        out["u2"] = (idx, vals)
    return out


class NaturalBCCache:
    """Face-quadrature tables for the natural boundary terms.

    Built once per (complex, boundary spec); per time level only the
    data fields are re-evaluated at the cached physical points.
    """

    def __init__(self, complex_, bc, degree=7):
        mesh = complex_.mesh
        owner = bc.face_region_map(mesh)
        self.rule = triangle_rule(degree)
        self.tangential = self._face_tables(
            complex_, owner, bc, lambda r: r.vorticity_mode == NATURAL
        )
        self.pressure = self._face_tables(
            complex_, owner, bc, lambda r: r.velocity_mode == NATURAL
        )

    def _face_tables(self, complex_, owner, bc, predicate):
        mesh = complex_.mesh
        sel = np.array([predicate(bc.regions[o]) for o in owner], dtype=bool)
        faces = mesh.boundary_faces[sel]
        tables = []
        if len(faces) == 0:
            return tables
        regions = owner[sel]
        rule = self.rule
        Q = len(rule)
        for r in np.unique(regions):
            rf = faces[regions == r]
            B = len(rf)
            tets = mesh.face_tets[rf, 0]
            tri = mesh.faces[rf]
            a = mesh.vertices[tri[:, 0]]
            u = mesh.vertices[tri[:, 1]] - a
            v = mesh.vertices[tri[:, 2]] - a
            sign = mesh.boundary_face_signs[np.searchsorted(mesh.boundary_faces, rf)]
            normal = np.cross(u, v) * sign[:, None].astype(float)
            nhat = normal / np.linalg.norm(normal, axis=1, keepdims=True)
            x1, x2 = rule.points[:, 1], rule.points[:, 2]
            points = (
                a[:, None, :]
                + x1[None, :, None] * u[:, None, :]
                + x2[None, :, None] * v[:, None, :]
            )
            # Barycentric coordinates of the face points inside the tet.
            loc = np.empty((B, 3), dtype=np.int64)
            for i in range(3):
                loc[:, i] = np.argmax(mesh.tets[tets] == tri[:, i : i + 1], axis=1)
            lam = np.zeros((B, Q, 4))
            for i in range(3):
                lam[np.arange(B), :, loc[:, i]] = rule.points[:, i][None, :]
            g = complex_.geometry.grads[tets]
            psi1 = np.empty((B, 6, Q, 3))
            for e, (i, j) in enumerate(TET_EDGE_VERTS):
                psi1[:, e] = (
                    lam[:, :, i, None] * g[:, None, j, :]
                    - lam[:, :, j, None] * g[:, None, i, :]
                )
            cross = {
                (i, j): np.cross(g[:, i, :], g[:, j, :])
                for i in range(4)
                for j in range(4)
                if i != j
            }
            psi2 = np.empty((B, 4, Q, 3))
            for f, (i, j, k) in enumerate(TET_FACE_VERTS):
                psi2[:, f] = 2.0 * (
                    lam[:, :, i, None] * cross[(j, k)][:, None, :]
                    + lam[:, :, j, None] * cross[(k, i)][:, None, :]
                    + lam[:, :, k, None] * cross[(i, j)][:, None, :]
                )
            tables.append(
                {
                    "region": int(r),
                    "faces": rf,
                    "tets": tets,
                    "points": points,
                    "normal": normal,
                    "nhat": nhat,
                    "psi1": psi1,
                    "psi2": psi2,
                    "edges": mesh.tet_edges[tets],
                    "fdofs": mesh.tet_faces[tets],
                }
            )
        return tables


def assemble_natural_bc(complex_, bc, t=0.0, cache=None):
    """Right-hand-side contributions of the natural boundary terms.

    Returns {"u1": vec, "u2": vec} (zero vectors when a channel has no
    natural regions).  The tangential-velocity data u enters the tau-row
    as + integral((n x u) . psi1), the boundary term of the weak curl;
    the pressure data h enters the v-row as - integral(h psi2 . n), the
    boundary term of the weak gradient; n is the outward unit normal.
    """
    if cache is None:
        cache = NaturalBCCache(complex_, bc)
    mesh = complex_.mesh
    w = cache.rule.weights
    rhs1 = np.zeros(mesh.n_edges)
    rhs2 = np.zeros(mesh.n_faces)
    for tab in cache.tangential:
        region = bc.regions[tab["region"]]
        pts = tab["points"]
        B, Q = pts.shape[0], pts.shape[1]
        if region.vorticity_data is None:
            continue
        uval = np.asarray(region.vorticity_data(pts.reshape(-1, 3), t), dtype=float)
        uval = uval.reshape(B, Q, 3)
        n_cross_u = np.cross(tab["normal"][:, None, :], uval)
        integrand = np.einsum("q,bqx,beqx->be", w, n_cross_u, tab["psi1"])
        np.add.at(rhs1, tab["edges"], integrand)
    for tab in cache.pressure:
        region = bc.regions[tab["region"]]
        pts = tab["points"]
        B, Q = pts.shape[0], pts.shape[1]
        if region.velocity_data is None:
            continue
        h = np.asarray(region.velocity_data(pts.reshape(-1, 3), t), dtype=float)
        h = h.reshape(B, Q)
        integrand = -np.einsum("q,bq,bfqx,bx->bf", w, h, tab["psi2"], tab["normal"])
        np.add.at(rhs2, tab["fdofs"], integrand)
    return {"u1": rhs1, "u2": rhs2}


def assemble_load(complex_, f2, t=0.0, degree=None):
    """Load vector <f2, psi2> over the velocity test space."""
    tab = complex_.tabulation(degree)
    mesh = complex_.mesh
    T, Q = tab.points.shape[0], tab.points.shape[1]
    vals = np.asarray(f2(tab.points.reshape(-1, 3), t), dtype=float).reshape(T, Q, 3)
    local = np.einsum("tq,tfqx,tqx->tf", tab.weights, tab.psi2, vals)
    vec = np.zeros(mesh.n_faces)
    np.add.at(vec, mesh.tet_faces, local)
    return vec


def assemble_scalar_load(complex_, f3, t=0.0, degree=None):
    """Load vector <f3, psi3>, i.e. cell averages of the scalar source."""
    tab = complex_.tabulation(degree)
    mesh = complex_.mesh
    T, Q = tab.points.shape[0], tab.points.shape[1]
    vals = np.asarray(f3(tab.points.reshape(-1, 3), t), dtype=float).reshape(T, Q)
    return np.sum(tab.weights * vals, axis=1) / mesh.tet_volumes


def assemble_convection(complex_, omega_values, u_values, theta=0.5, degree=None):
    """Linearized convection blocks of the v-row.

    A3[i, j] = theta    * integral((psi1_j x u_prev)   . psi2_i)
    A5[i, j] = (1-theta) * integral((omega_prev x psi2_j) . psi2_i)

    where u_prev / omega_prev are the discrete fields given by the
    coefficient vectors.  The integrands are cubic, so the default
    volume rule (degree >= 3) integrates them exactly.
    """
    tab = complex_.tabulation(degree)
    if tab.rule.exactness_degree < 3:
        raise ValueError("convection assembly needs quadrature exact to degree >= 3")
    mesh = complex_.mesh
    u_prev = np.einsum("tfqx,tf->tqx", tab.psi2, np.asarray(u_values)[mesh.tet_faces])
    w_prev = np.einsum("teqx,te->tqx", tab.psi1, np.asarray(omega_values)[mesh.tet_edges])

    local3 = theta * np.einsum(
        "tq,tjqx,tiqx->tij",
        tab.weights,
        np.cross(tab.psi1, u_prev[:, None, :, :]),
        tab.psi2,
    )
    local5 = (1.0 - theta) * np.einsum(
        "tq,tjqx,tiqx->tij",
        tab.weights,
        np.cross(w_prev[:, None, :, :], tab.psi2),
        tab.psi2,
    )
    a3 = _scatter(local3, mesh.tet_faces, mesh.tet_edges, (mesh.n_faces, mesh.n_edges))
    a5 = _scatter(local5, mesh.tet_faces, mesh.tet_faces, (mesh.n_faces, mesh.n_faces))
    return a3, a5


def assemble_B0(
    complex_,
    bc,
    nu=1.0,
    f2=None,
    f3=None,
    t=0.0,
    harmonic=None,
    load_degree=None,
    natural_cache=None,
    flux_correction=True,
):
    """The steady saddle system as a BlockSystem (see module docstring).

    ``harmonic`` may pass a prebuilt HarmonicSpace; ``load_degree``
    overrides the volume rule for the f2/f3 loads (gradient loads must
    be integrated exactly for pressure-robustness to hold discretely).
    """
    if nu <= 0:
        raise ValueError("viscosity must be positive")
    for region in bc.regions:
        if not region.solvable:
            raise ValueError(
                f"region {region.name!r} pairs essential vorticity with a "
                "natural pressure condition; the discrete system is singular "
                "for that pairing (use a natural tangential-velocity "
                "condition there instead)"
            )
    mesh = complex_.mesh
    if harmonic is None:
        harmonic = build_harmonic_space(complex_, bc)
    groups = {"u1": mesh.n_edges, "u2": mesh.n_faces, "u3": mesh.n_tets}
    if harmonic.dim:
        groups["phi"] = harmonic.dim
    system = BlockSystem(groups)

    m2d1 = complex_.m2 @ complex_.d1
    m3d2 = complex_.m3 @ complex_.d2
    system.add_block("u1", "u1", complex_.m1)
    system.add_block("u1", "u2", -m2d1.T)
    system.add_block("u2", "u1", nu * m2d1)
    system.add_block("u2", "u3", -m3d2.T)
    system.add_block("u3", "u2", m3d2)
    if harmonic.dim:
        m3h = complex_.m3 @ harmonic.basis
        system.add_block("u3", "phi", sp.csr_matrix(m3h))
        system.add_block("phi", "u3", sp.csr_matrix(m3h.T))

    if f2 is not None:
        system.add_rhs("u2", assemble_load(complex_, f2, t=t, degree=load_degree))
    if f3 is not None:
        system.add_rhs("u3", assemble_scalar_load(complex_, f3, t=t, degree=load_degree))

    natural = assemble_natural_bc(complex_, bc, t=t, cache=natural_cache)
    if np.any(natural["u1"]):
        system.add_rhs("u1", natural["u1"])
    if np.any(natural["u2"]):
        system.add_rhs("u2", natural["u2"])

    for group, (idx, vals) in essential_constraints(
        complex_,
        bc,
        t=t,
        f3_given=f3 is not None,
        flux_correction=flux_correction,
    ).items():
        system.constrain(group, idx, vals)
    return system
