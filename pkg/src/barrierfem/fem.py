"""P1 Galerkin assembly of residuals, Jacobians, barrier terms and energies.

For a state u_h = sum_i u_i phi_i the assembled objects are

    residual_i       = int [ a grad(u_h).grad(phi_i) + k(u_h) phi_i ]
                       + int_Robin (c u_h - g) phi_i - int source phi_i
    jacobian_ij      = int [ a grad(phi_j).grad(phi_i) + k'(u_h) phi_j phi_i ]
                       + int_Robin c phi_j phi_i
    barrier_vector_i = int u_h^-1 phi_i
    barrier_matrix_ij= int u_h^-2 phi_j phi_i

so the barrier Newton system reads

    [jacobian + mu * barrier_matrix] w = -[residual - mu * barrier_vector].

Dirichlet constraints are imposed by row/column reduction: constrained
rows and columns of the Jacobian become identity, constrained rows and
columns of the barrier matrix become zero, and constrained entries of
both vectors are zeroed, which keeps every matrix symmetric.

All integrals use the degree-5 rules from the quadrature module; the
negative-power and logarithm integrands are thereby approximated by a
finite sum with fixed positive weights.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from weakref import WeakKeyDictionary

import numpy as np

from .errors import CoefficientViolation, DimensionMismatch, NonpositiveState
from .linalg import SparseMatrix, add_scaled
from .mesh import Marker
from .problem import FeFunction, as_coefficients
from .quadrature import REFERENCE_MEASURE, facet_rule, quadrature_for

QUADRATURE_DEGREE = 5


class _Workspace:
    """Per-mesh geometry and quadrature tables reused across assemblies."""

    def __init__(self, mesh):
        self.mesh = mesh
        d = mesh.dim
        self.rule = quadrature_for(d, QUADRATURE_DEGREE)
        self.lam = self.rule.points                      # (Q, d+1)
        self.qw = self.rule.weights                      # (Q,)
        verts = mesh.vertices
        cells = mesh.cells
        self.cell_pts = verts[cells]                     # (M, d+1, d)
        edges = self.cell_pts[:, 1:, :] - self.cell_pts[:, :1, :]
        inv_t = np.transpose(np.linalg.inv(edges), (0, 2, 1))
        grads = np.empty((len(cells), d + 1, d))
        grads[:, 1:, :] = inv_t
        grads[:, 0, :] = -inv_t.sum(axis=1)
        self.grads = grads                               # (M, d+1, d)
        # bitwise-symmetric products: entry (i,j) and (j,i) are computed
        # with identical floating-point operations, so assembled matrices
        # satisfy A == A.T exactly
        self.grad_gram = np.einsum("mid,mjd->mij", grads, grads)
        self.phi2 = self.lam[:, :, None] * self.lam[:, None, :]   # (Q, d+1, d+1)
        self.scale = mesh.cell_volumes / REFERENCE_MEASURE[d]
        self.xq = np.einsum("qk,mkd->mqd", self.lam, self.cell_pts)
        self.xq_flat = self.xq.reshape(-1, d)
        rows = np.repeat(cells, d + 1, axis=1).ravel()
        cols = np.tile(cells, (1, d + 1)).ravel()
        self.mat_rows = rows
        self.mat_cols = cols

        markers, fidx = mesh.facet_arrays
        robin = (
            np.array([m == Marker.ROBIN for m in markers], dtype=bool)
            if len(fidx)
            else np.zeros(0, dtype=bool)
        )
        self.robin_idx = fidx[robin] if len(fidx) else fidx
        if len(self.robin_idx):
            frule = facet_rule(d, QUADRATURE_DEGREE)
            self.flam = frule.points                     # (Qf, d)
            self.fqw = frule.weights
            self.fphi2 = self.flam[:, :, None] * self.flam[:, None, :]
            meas = mesh.facet_measures[robin]
            self.fscale = meas / REFERENCE_MEASURE[d - 1]
            fpts = verts[self.robin_idx]                 # (B, d, dim)
            self.fxq = np.einsum("qk,fkd->fqd", self.flam, fpts)
            self.fxq_flat = self.fxq.reshape(-1, d)
            self.frows = np.repeat(self.robin_idx, d, axis=1).ravel()
            self.fcols = np.tile(self.robin_idx, (1, d)).ravel()

        dv = mesh.dirichlet_vertices()
        self.dirichlet_mask = np.zeros(mesh.num_vertices, dtype=bool)
        self.dirichlet_mask[dv] = True
        self.spec_fields = WeakKeyDictionary()

    def fields_for(self, spec):
        """Evaluate the u-independent coefficient fields once per spec."""
        cached = self.spec_fields.get(spec)
        if cached is not None:
            return cached
        diff = np.asarray(spec.diffusion(self.xq_flat), dtype=float)
        if np.any(diff <= 0):
            raise CoefficientViolation("diffusion must be > 0 at quadrature points")
        coeffs = [
            (p, np.asarray(c(self.xq_flat), dtype=float).reshape(self.xq.shape[:2]))
            for p, c in spec.power_terms
        ]
        source = (
            np.asarray(spec.source(self.xq_flat), dtype=float).reshape(self.xq.shape[:2])
            if spec.source is not None
            else None
        )
        fields = {
            "diffusion": diff.reshape(self.xq.shape[:2]),
            "coeffs": coeffs,
            "source": source,
        }
        if len(self.robin_idx):
            fields["robin_coeff"] = np.asarray(
                spec.robin_coeff(self.fxq_flat), dtype=float
            ).reshape(self.fxq.shape[:2])
            fields["robin_data"] = np.asarray(
                spec.robin_data(self.fxq_flat), dtype=float
            ).reshape(self.fxq.shape[:2])
        self.spec_fields[spec] = fields
        return fields


_workspaces = WeakKeyDictionary()


def workspace_for(mesh):
    ws = _workspaces.get(mesh)
    if ws is None:
        ws = _Workspace(mesh)
        _workspaces[mesh] = ws
    return ws


@dataclass
class AssembledSystem:
    """Matrices and vectors of one linearization point.

    barrier_matrix/barrier_vector are None when assembled with mu = 0;
    they do not depend on mu otherwise (mu only scales the combination).
    """

    jacobian: SparseMatrix
    barrier_matrix: object
    residual: np.ndarray
    barrier_vector: object
    dirichlet_mask: np.ndarray

    def system_matrix(self, mu):
        if mu == 0.0 or self.barrier_matrix is None:
            return self.jacobian
        return add_scaled(self.jacobian, mu, self.barrier_matrix)

    def residual_vector(self, mu):
        if mu == 0.0 or self.barrier_vector is None:
            return self.residual
        return self.residual - mu * self.barrier_vector


def _check_state(spec, mesh, u, mu):
    u = as_coefficients(u)
    if len(u) != mesh.num_vertices:
        raise DimensionMismatch(
            f"state has {len(u)} coefficients, mesh has {mesh.num_vertices} vertices"
        )
    if (mu > 0 or spec.positivity_required) and np.any(u <= 0):
        raise NonpositiveState(
            "state must be strictly positive at every vertex "
            f"(min = {u.min():.3e}, mu = {mu})"
        )
    return u


def _power_sum(coeffs, u, derivative=0):
    """sum_p c_p u^p, its u-derivative, or the antiderivative at quad points."""
    out = np.zeros_like(u)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for p, c in coeffs:
            if derivative == 0:
                out += c * u**p
            elif derivative == 1:
                out += p * c * u ** (p - 1)
            else:  # antiderivative
                out += c * u ** (p + 1) / (p + 1)
    return out


def _dedupe_csr(rows, cols, vals, n):
    """Deterministic duplicate summation (stable lexsort + reduceat).

    Keeps the left-to-right accumulation order identical for the (i, j)
    and (j, i) entry groups, which makes assembled matrices bitwise
    symmetric.
    """
    order = np.lexsort((cols, rows))
    r, c, v = rows[order], cols[order], vals[order]
    if len(r) == 0:
        return SparseMatrix.from_coo(r, c, v, n)
    new_group = np.flatnonzero((np.diff(r) != 0) | (np.diff(c) != 0)) + 1
    starts = np.concatenate([[0], new_group])
    return SparseMatrix.from_coo(
        r[starts], c[starts], np.add.reduceat(v, starts), n
    )


def _cell_contributions(ws, fields, u, chunk, need_matrix, need_barrier):
    """Vectors/local matrices for one slice of cells."""
    lam, qw = ws.lam, ws.qw
    scale = ws.scale[chunk]
    grads = ws.grads[chunk]
    cells = ws.mesh.cells[chunk]
    u_cells = u[cells]                                   # (m, d+1)
    uq = u_cells @ lam.T                                 # (m, Q)
    gradu = np.einsum("mk,mkd->md", u_cells, grads)      # (m, d)
    diff = fields["diffusion"][chunk]
    coeffs = [(p, c[chunk]) for p, c in fields["coeffs"]]

    diff_w = scale * (diff @ qw)                         # (m,)
    kq = _power_sum(coeffs, uq)
    if fields["source"] is not None:
        kq = kq - fields["source"][chunk]
    local_res = np.einsum("m,md,mkd->mk", diff_w, gradu, grads)
    local_res += np.einsum("m,q,mq,qk->mk", scale, qw, kq, lam)

    local_bar = None
    if need_barrier:
        with np.errstate(divide="ignore"):
            local_bar = np.einsum("m,q,mq,qk->mk", scale, qw, 1.0 / uq, lam)

    local_jac = local_m = None
    if need_matrix:
        kpq = _power_sum(coeffs, uq, derivative=1)
        local_jac = diff_w[:, None, None] * ws.grad_gram[chunk]
        local_jac += np.einsum("m,q,mq,qij->mij", scale, qw, kpq, ws.phi2)
        if need_barrier:
            with np.errstate(divide="ignore"):
                local_m = np.einsum("m,q,mq,qij->mij", scale, qw, uq**-2, ws.phi2)
    return cells, local_res, local_bar, local_jac, local_m


def _assemble(spec, mesh, u, mu, need_matrix, workers=1):
    u = _check_state(spec, mesh, u, mu)
    ws = workspace_for(mesh)
    fields = ws.fields_for(spec)
    need_barrier = mu > 0
    n = mesh.num_vertices
    d = mesh.dim

    if workers > 1 and mesh.num_cells >= workers:
        bounds = np.linspace(0, mesh.num_cells, workers + 1).astype(int)
        chunks = [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(
                pool.map(
                    lambda ch: _cell_contributions(
                        ws, fields, u, ch, need_matrix, need_barrier
                    ),
                    chunks,
                )
            )
    else:
        parts = [
            _cell_contributions(
                ws, fields, u, slice(None), need_matrix, need_barrier
            )
        ]

    residual = np.zeros(n)
    barrier_vec = np.zeros(n) if need_barrier else None
    jac_vals = []
    m_vals = []
    for cells, local_res, local_bar, local_jac, local_m in parts:
        residual += np.bincount(cells.ravel(), weights=local_res.ravel(), minlength=n)
        if need_barrier:
            barrier_vec += np.bincount(
                cells.ravel(), weights=local_bar.ravel(), minlength=n
            )
        if need_matrix:
            jac_vals.append(local_jac.reshape(-1))
            if need_barrier:
                m_vals.append(local_m.reshape(-1))

    # Robin boundary terms
    robin_rows = robin_vals = None
    if len(ws.robin_idx):
        u_f = u[ws.robin_idx]                            # (B, d)
        uqf = u_f @ ws.flam.T                            # (B, Qf)
        cf, gf = fields["robin_coeff"], fields["robin_data"]
        local = np.einsum("f,q,fq,qk->fk", ws.fscale, ws.fqw, cf * uqf - gf, ws.flam)
        residual += np.bincount(ws.robin_idx.ravel(), weights=local.ravel(), minlength=n)
        if need_matrix:
            robin_vals = np.einsum(
                "f,q,fq,qij->fij", ws.fscale, ws.fqw, cf, ws.fphi2
            ).reshape(-1)

    mask = ws.dirichlet_mask
    residual[mask] = 0.0
    if need_barrier:
        barrier_vec[mask] = 0.0

    jacobian = barrier_mat = None
    if need_matrix:
        rows = ws.mat_rows
        cols = ws.mat_cols
        vals = np.concatenate(jac_vals)
        if robin_vals is not None:
            rows = np.concatenate([rows, ws.frows])
            cols = np.concatenate([cols, ws.fcols])
            vals = np.concatenate([vals, robin_vals])
        keep = ~(mask[rows] | mask[cols])
        fixed = np.flatnonzero(mask)
        jacobian = _dedupe_csr(
            np.concatenate([rows[keep], fixed]),
            np.concatenate([cols[keep], fixed]),
            np.concatenate([vals[keep], np.ones(len(fixed))]),
            n,
        )
        if need_barrier:
            mvals = np.concatenate(m_vals)
            mkeep = ~(mask[ws.mat_rows] | mask[ws.mat_cols])
            barrier_mat = _dedupe_csr(
                ws.mat_rows[mkeep], ws.mat_cols[mkeep], mvals[mkeep], n
            )

    return AssembledSystem(jacobian, barrier_mat, residual, barrier_vec, mask.copy())


def assemble_residual(spec, mesh, u, mu=0.0, workers=1):
    """Residual vector G - mu*H with Dirichlet entries zeroed."""
    system = _assemble(spec, mesh, u, mu, need_matrix=False, workers=workers)
    return system.residual_vector(mu)


def assemble_jacobian(spec, mesh, u, mu=0.0, workers=1):
    """Full AssembledSystem at the state u (barrier parts only when mu > 0)."""
    return _assemble(spec, mesh, u, mu, need_matrix=True, workers=workers)


def compute_energy(spec, mesh, u, mu=0.0):
    """Total energy, including the -mu*int(ln u) barrier term when mu > 0."""
    u = _check_state(spec, mesh, u, mu)
    ws = workspace_for(mesh)
    fields = ws.fields_for(spec)

    u_cells = u[ws.mesh.cells]
    uq = u_cells @ ws.lam.T
    gradu = np.einsum("mk,mkd->md", u_cells, ws.grads)
    grad_sq = np.einsum("md,md->m", gradu, gradu)
    diff_w = ws.scale * (fields["diffusion"] @ ws.qw)
    total = 0.5 * float(diff_w @ grad_sq)

    density = _power_sum(fields["coeffs"], uq, derivative=-1)
    if fields["source"] is not None:
        density = density - fields["source"] * uq
    if mu > 0:
        with np.errstate(divide="ignore"):
            density = density - mu * np.log(uq)
    total += float(np.einsum("m,q,mq->", ws.scale, ws.qw, density))

    if len(ws.robin_idx):
        uqf = u[ws.robin_idx] @ ws.flam.T
        cf, gf = fields["robin_coeff"], fields["robin_data"]
        total += float(
            np.einsum("f,q,fq->", ws.fscale, ws.fqw, 0.5 * cf * uqf**2 - gf * uqf)
        )
    return total


def apply_dirichlet(u, mesh, spec):
    """Overwrite Dirichlet-vertex coefficients with the boundary data."""
    coeffs = as_coefficients(u).copy()
    dv = mesh.dirichlet_vertices()
    if dv.size:
        coeffs[dv] = spec.dirichlet_data(mesh.vertices[dv])
    return FeFunction(coeffs)


def l2_error(mesh, u, exact):
    """L2 norm of u_h - exact over the mesh (degree-5 quadrature)."""
    u = as_coefficients(u)
    ws = workspace_for(mesh)
    uq = u[ws.mesh.cells] @ ws.lam.T
    eq = np.asarray(exact(ws.xq_flat), dtype=float).reshape(uq.shape)
    return float(np.sqrt(np.einsum("m,q,mq->", ws.scale, ws.qw, (uq - eq) ** 2)))
