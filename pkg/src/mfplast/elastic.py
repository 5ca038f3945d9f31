"""Plane-strain Navier-Cauchy assembly and elastic field post-processing.

Interior rows discretize the displacement form of the momentum balance,
traction rows discretize (sigma(u) . n) componentwise, and essential rows are
identity rows.  Per boundary node the x- and y-equations carry independent
modes, so symmetry rollers combine an essential normal component with a
traction-free tangential component.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linsys
from .approx import WeightStore, apply
from .material import XX, YY, ZZ, XY, ElasticConstants
from .nodegen import NodeSet
from .geometry import TAG_CUTOUT, TAG_INNER, TAG_OUTER, TAG_SYM_X, TAG_SYM_Y

ESSENTIAL = 0
TRACTION = 1
SYMMETRY = 2  # zero normal derivative of the tangential displacement


class AssemblyError(ValueError):
    """Boundary-condition data inconsistent with the node set."""


@dataclass(frozen=True)
class BoundaryConditionSet:
    """Per boundary node, per displacement component: mode and full-load value.

    Traction values are GPa (surface traction at full load), essential values
    are mm (prescribed displacement).  Symmetry-mode components are the
    mirror-plane condition on the tangential displacement; their right-hand
    side is always zero.
    """

    mode_x: np.ndarray
    mode_y: np.ndarray
    value_x: np.ndarray
    value_y: np.ndarray

    def __post_init__(self):
        shapes = {a.shape for a in (self.mode_x, self.mode_y, self.value_x, self.value_y)}
        if len(shapes) != 1:
            raise AssemblyError("boundary condition arrays must share one shape")

    @property
    def n_boundary(self) -> int:
        return len(self.mode_x)


def boundary_conditions_from_tags(nodes: NodeSet, pressure: float) -> BoundaryConditionSet:
    """Standard benchmark conditions from boundary tags.

    inner-pressure: traction -p*n on both components; outer-free/cutout-free:
    traction-free; symmetry edges: essential zero normal displacement plus the
    mirror condition on the tangential component.  Sector corners (symmetry
    tag, arc normal) get the wall traction condition on the tangential
    component instead; the mirror row is rank-deficient there and the wall
    condition pins the radial stress.
    """
    nb = nodes.boundary_count
    mode_x = np.full(nb, TRACTION, dtype=np.uint8)
    mode_y = np.full(nb, TRACTION, dtype=np.uint8)
    value_x = np.zeros(nb)
    value_y = np.zeros(nb)
    for i in range(nb):
        tag = nodes.tags[i]
        nx, ny = nodes.normals[i]
        if tag == TAG_INNER:
            value_x[i] = -pressure * nx
            value_y[i] = -pressure * ny
        elif tag in (TAG_OUTER, TAG_CUTOUT):
            pass  # traction free
        elif tag == TAG_SYM_X:
            mode_x[i] = ESSENTIAL  # u_x = 0
            if abs(nx) < 0.5:  # corner owned by the x=0 edge, arc normal stored
                if float(nodes.normals[i] @ nodes.positions[i]) < 0:
                    value_y[i] = -pressure * ny  # inner (pressurized) wall corner
            else:
                mode_y[i] = SYMMETRY
        elif tag == TAG_SYM_Y:
            mode_y[i] = ESSENTIAL  # u_y = 0
            if abs(ny) < 0.5:  # corner owned by the y=0 edge
                if float(nodes.normals[i] @ nodes.positions[i]) < 0:
                    value_x[i] = -pressure * nx
            else:
                mode_x[i] = SYMMETRY
        else:
            raise AssemblyError(f"no boundary-condition rule for tag {tag!r}")
    return BoundaryConditionSet(mode_x, mode_y, value_x, value_y)


def assemble(
    nodes: NodeSet,
    weights: WeightStore,
    ec: ElasticConstants,
    bcs: BoundaryConditionSet,
) -> linsys.SparseSystem:
    """Assemble the 2N x 2N operator; rhs values are supplied per solve."""
    n = nodes.n
    nb = nodes.boundary_count
    if bcs.n_boundary != nb:
        raise AssemblyError(
            f"boundary condition count {bcs.n_boundary} != boundary nodes {nb}"
        )
    lam, mu = ec.lam, ec.mu
    st = weights.stencils
    nsten = st.shape[1]

    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    vals: list[np.ndarray] = []

    def add_block(row_idx, col_nodes, block_vals, row_offset, col_offset):
        rows.append(np.repeat(row_idx + row_offset, nsten))
        cols.append(col_nodes.ravel() + col_offset)
        vals.append(block_vals.ravel())

    interior = np.arange(nb, n)
    if len(interior):
        w_xx, w_yy, w_xy = weights.dxx[interior], weights.dyy[interior], weights.dxy[interior]
        sti = st[interior]
        add_block(interior, sti, (lam + 2 * mu) * w_xx + mu * w_yy, 0, 0)
        add_block(interior, sti, (lam + mu) * w_xy, 0, n)
        add_block(interior, sti, (lam + mu) * w_xy, n, 0)
        add_block(interior, sti, mu * w_xx + (lam + 2 * mu) * w_yy, n, n)

    bidx = np.arange(nb)
    for comp, modes in ((0, bcs.mode_x), (1, bcs.mode_y)):
        ess = bidx[modes == ESSENTIAL]
        if len(ess):
            rows.append(ess + comp * n)
            cols.append(ess + comp * n)
            vals.append(np.ones(len(ess)))
        sym = bidx[modes == SYMMETRY]
        if len(sym):
            # mirror plane: zero normal derivative of the tangential component
            w_n = weights.dy[sym] if comp == 0 else weights.dx[sym]
            add_block(sym, st[sym], mu * w_n, comp * n, comp * n)
        trac = bidx[modes == TRACTION]
        if len(trac):
            nx = nodes.normals[trac, 0][:, None]
            ny = nodes.normals[trac, 1][:, None]
            w_x, w_y = weights.dx[trac], weights.dy[trac]
            stb = st[trac]
            if comp == 0:
                # t_x = (lam+2mu) nx du/dx + mu ny du/dy + lam nx dv/dy + mu ny dv/dx
                add_block(trac, stb, (2 * mu + lam) * nx * w_x + mu * ny * w_y, 0, 0)
                add_block(trac, stb, lam * nx * w_y + mu * ny * w_x, 0, n)
            else:
                # t_y = mu nx du/dy + lam ny du/dx + mu nx dv/dx + (lam+2mu) ny dv/dy
                add_block(trac, stb, mu * nx * w_y + lam * ny * w_x, n, 0)
                add_block(trac, stb, mu * nx * w_x + (2 * mu + lam) * ny * w_y, n, n)

    return linsys.from_triplets(
        np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), 2 * n, n
    )


def build_rhs(
    nodes: NodeSet,
    bcs: BoundaryConditionSet,
    interior_force: np.ndarray,
    traction_rhs: np.ndarray,
    essential_rhs: np.ndarray,
) -> np.ndarray:
    """Right-hand side matching assemble()'s row layout.

    interior_force (N, 2) fills interior rows (boundary slots ignored),
    traction_rhs/essential_rhs (Nb, 2) fill boundary rows per component mode.
    """
    n = nodes.n
    nb = nodes.boundary_count
    rhs = np.zeros(2 * n)
    rhs[nb:n] = interior_force[nb:, 0]
    rhs[n + nb:] = interior_force[nb:, 1]
    for comp, modes in ((0, bcs.mode_x), (1, bcs.mode_y)):
        off = comp * n
        trac = modes == TRACTION
        ess = modes == ESSENTIAL
        rhs[off:off + nb][trac] = traction_rhs[trac, comp]
        rhs[off:off + nb][ess] = essential_rhs[ess, comp]
        # symmetry rows keep their homogeneous right-hand side
    return rhs


def solve_elastic(sys: linsys.SparseSystem, rhs: np.ndarray) -> np.ndarray:
    """Solve the factorized system; returns the displacement field (N, 2)."""
    x = linsys.solve(sys, rhs)
    n = sys.n_nodes
    return np.stack([x[:n], x[n:]], axis=1)


def strain_from_displacement(weights: WeightStore, du: np.ndarray) -> np.ndarray:
    """Small-strain tensor field (N, 4) from a displacement field (N, 2)."""
    st = weights.stencils
    du_x, du_y = du[:, 0], du[:, 1]
    exx = apply(weights.dx, st, du_x)
    eyy = apply(weights.dy, st, du_y)
    exy = 0.5 * (apply(weights.dy, st, du_x) + apply(weights.dx, st, du_y))
    out = np.zeros((len(du), 4))
    out[:, XX] = exx
    out[:, YY] = eyy
    out[:, XY] = exy
    return out


def stress_from_elastic_strain(ec: ElasticConstants, eps: np.ndarray) -> np.ndarray:
    """Isotropic Hooke's law sigma = 2 mu eps + lam tr(eps) I (plane strain)."""
    eps = np.asarray(eps, dtype=float)
    lam, mu = ec.lam, ec.mu
    tr = eps[..., XX] + eps[..., YY] + eps[..., ZZ]
    out = 2.0 * mu * eps
    for comp in (XX, YY, ZZ):
        out[..., comp] += lam * tr
    out[..., XY] = 2.0 * mu * eps[..., XY]
    return out


def elastic_strain_from_stress(ec: ElasticConstants, sigma: np.ndarray) -> np.ndarray:
    """Inverse constitutive map of stress_from_elastic_strain."""
    sigma = np.asarray(sigma, dtype=float)
    lam, mu = ec.lam, ec.mu
    tr = sigma[..., XX] + sigma[..., YY] + sigma[..., ZZ]
    coef = lam / (2.0 * mu * (3.0 * lam + 2.0 * mu))
    out = sigma / (2.0 * mu)
    for comp in (XX, YY, ZZ):
        out[..., comp] -= coef * tr
    return out


def boundary_stress_normal(nodes: NodeSet, sigma: np.ndarray) -> np.ndarray:
    """(sigma . n) at every boundary node, shape (Nb, 2)."""
    nb = nodes.boundary_count
    s = sigma[:nb]
    nx, ny = nodes.normals[:, 0], nodes.normals[:, 1]
    tx = s[:, XX] * nx + s[:, XY] * ny
    ty = s[:, XY] * nx + s[:, YY] * ny
    return np.stack([tx, ty], axis=1)


def export_fields_csv(path, nodes: NodeSet, u: np.ndarray, sigma: np.ndarray, epbar: np.ndarray) -> None:
    """Field CSV: positions, displacements, stresses, accumulated plastic strain."""
    from .material import von_mises

    vm = von_mises(sigma)
    isb = nodes.is_boundary().astype(int)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            "x_mm,y_mm,is_boundary,u_mm,v_mm,sigma_xx_gpa,sigma_yy_gpa,"
            "sigma_zz_gpa,sigma_xy_gpa,vm_stress_gpa,epbar\n"
        )
        for i in range(nodes.n):
            cells = [
                nodes.positions[i, 0], nodes.positions[i, 1], isb[i],
                u[i, 0], u[i, 1],
                sigma[i, XX], sigma[i, YY], sigma[i, ZZ], sigma[i, XY],
                vm[i], epbar[i],
            ]
            fh.write(",".join(repr(float(c)) if not isinstance(c, (int, np.integer)) else str(int(c)) for c in cells) + "\n")
