"""RBF-FD stencil weights: polyharmonic splines with monomial augmentation.

Per node, first and second derivative weights are obtained from the local
saddle-point system

    [ F  P ] [ w ]   [ l_f ]
    [ P' 0 ] [ l ] = [ l_p ]

with F the PHS interpolation matrix on the stencil, P the monomial matrix up
to total degree m, and right-hand sides evaluated analytically at the stencil
center.  Local coordinates are shifted to the center and scaled by the
stencil radius before assembly; weights are unscaled afterwards.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .nodegen import NodeSet

OPERATORS = ("dx", "dy", "dxx", "dyy", "dxy")
_ORDER = {"dx": 1, "dy": 1, "dxx": 2, "dyy": 2, "dxy": 2}

_CHUNK = 8192


class ApproxError(RuntimeError):
    """Degenerate stencil geometry or invalid basis configuration."""


@dataclass(frozen=True)
class BasisConfig:
    """PHS order k, augmentation degree m and stencil size n."""

    phs_order: int = 3
    monomial_degree: int = 3
    stencil_size: int = 20

    def __post_init__(self):
        if self.phs_order < 1:
            raise ApproxError("PHS order must be >= 1")
        if self.stencil_size < self.n_poly:
            raise ApproxError(
                f"stencil size {self.stencil_size} below monomial count {self.n_poly}"
            )

    @property
    def n_poly(self) -> int:
        m = self.monomial_degree
        return (m + 1) * (m + 2) // 2


@dataclass(frozen=True)
class WeightStore:
    """Per-node stencil index lists and the five derivative weight vectors."""

    stencils: np.ndarray  # (N, n) int
    dx: np.ndarray
    dy: np.ndarray
    dxx: np.ndarray
    dyy: np.ndarray
    dxy: np.ndarray

    def operator(self, name: str) -> np.ndarray:
        if name not in OPERATORS:
            raise KeyError(name)
        return getattr(self, name)


def build_stencils(nodes: NodeSet, n: int) -> np.ndarray:
    """n nearest neighbors (self included, self first) for every node."""
    if n > nodes.n:
        raise ValueError(f"stencil size {n} exceeds node count {nodes.n}")
    tree = cKDTree(nodes.positions)
    kq = min(nodes.n, n + 4)
    dist, idx = tree.query(nodes.positions, k=kq)
    if kq == 1:
        return idx[:, None]
    # deterministic tie handling: ascending (distance, index)
    keyed = np.empty(dist.shape, dtype=[("d", "f8"), ("i", "i8")])
    keyed["d"] = dist
    keyed["i"] = idx
    order = np.argsort(keyed, axis=1, order=("d", "i"))
    return np.take_along_axis(idx, order, axis=1)[:, :n]


def _monomial_exponents(m: int) -> np.ndarray:
    out = [(i, d - i) for d in range(m + 1) for i in range(d, -1, -1)]
    return np.array(out, dtype=int)


def _phs(r: np.ndarray, k: int) -> np.ndarray:
    if k % 2 == 1:
        return r**k
    with np.errstate(divide="ignore", invalid="ignore"):
        out = r**k * np.log(r)
    return np.where(r > 0, out, 0.0)


def _phs_rhs(d: np.ndarray, r: np.ndarray, k: int, op: str) -> np.ndarray:
    """Analytic value of (op applied to f(|x - x_j|)) at the stencil center.

    d = x_center - x_j in scaled local coordinates, r = |d|.  Entries at
    r = 0 take the radial limit 0.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        if k % 2 == 1:
            g1 = k * r ** (k - 2)             # coefficient of d_x in the gradient
            g2 = k * (k - 2) * r ** (k - 4)   # coefficient of d_x d_y in the Hessian
            if op == "dx":
                out = g1 * d[..., 0]
            elif op == "dy":
                out = g1 * d[..., 1]
            elif op == "dxx":
                out = g1 + g2 * d[..., 0] ** 2
            elif op == "dyy":
                out = g1 + g2 * d[..., 1] ** 2
            else:
                out = g2 * d[..., 0] * d[..., 1]
        else:
            ln = np.log(np.where(r > 0, r, 1.0))
            g1 = r ** (k - 2) * (k * ln + 1.0)
            g2 = r ** (k - 4) * (k * (k - 2) * ln + 2.0 * k - 2.0)
            if op == "dx":
                out = g1 * d[..., 0]
            elif op == "dy":
                out = g1 * d[..., 1]
            elif op == "dxx":
                out = g1 + g2 * d[..., 0] ** 2
            elif op == "dyy":
                out = g1 + g2 * d[..., 1] ** 2
            else:
                out = g2 * d[..., 0] * d[..., 1]
    return np.where(r > 0, out, 0.0)


def _poly_rhs(exps: np.ndarray, op: str) -> np.ndarray:
    """Analytic value of op applied to each monomial at the origin."""
    target = {"dx": (1, 0, 1.0), "dy": (0, 1, 1.0), "dxx": (2, 0, 2.0),
              "dyy": (0, 2, 2.0), "dxy": (1, 1, 1.0)}[op]
    out = np.zeros(len(exps))
    hit = (exps[:, 0] == target[0]) & (exps[:, 1] == target[1])
    out[hit] = target[2]
    return out


def _solve_block(local: np.ndarray, cfg: BasisConfig, ops, offset: int):
    """Solve the saddle-point systems for a (B, n, 2) block of local coords."""
    bsz, n, _ = local.shape
    k, m = cfg.phs_order, cfg.monomial_degree
    exps = _monomial_exponents(m)
    npoly = len(exps)

    diff = local[:, :, None, :] - local[:, None, :, :]
    rr = np.sqrt(np.sum(diff**2, axis=-1))
    size = n + npoly
    a = np.zeros((bsz, size, size))
    a[:, :n, :n] = _phs(rr, k)
    pmat = np.prod(local[:, :, None, :] ** exps[None, None, :, :], axis=-1)
    a[:, :n, n:] = pmat
    a[:, n:, :n] = np.transpose(pmat, (0, 2, 1))

    d = -local  # center minus stencil point
    r = np.sqrt(np.sum(local**2, axis=-1))
    rhs = np.zeros((bsz, size, len(ops)))
    for col, op in enumerate(ops):
        rhs[:, :n, col] = _phs_rhs(d, r, k, op)
        rhs[:, n:, col] = _poly_rhs(exps, op)[None, :]

    try:
        sol = np.linalg.solve(a, rhs)
    except np.linalg.LinAlgError:
        for i in range(bsz):
            try:
                np.linalg.solve(a[i], rhs[i])
            except np.linalg.LinAlgError:
                raise ApproxError(
                    f"singular stencil system at node {offset + i}"
                ) from None
        raise
    return sol[:, :n, :]


def _weights_for_ops(nodes: NodeSet, stencils: np.ndarray, cfg: BasisConfig, ops):
    pos = nodes.positions
    n_nodes, n = stencils.shape
    out = [np.empty((n_nodes, n)) for _ in ops]
    for lo in range(0, n_nodes, _CHUNK):
        hi = min(lo + _CHUNK, n_nodes)
        block = pos[stencils[lo:hi]]                       # (B, n, 2)
        center = pos[lo:hi][:, None, :]
        local = block - center
        rho = np.sqrt(np.max(np.sum(local**2, axis=-1), axis=1))
        if np.any(rho == 0):
            bad = lo + int(np.argmax(rho == 0))
            raise ApproxError(f"coincident stencil nodes at node {bad}")
        local = local / rho[:, None, None]
        w = _solve_block(local, cfg, ops, lo)
        for col, op in enumerate(ops):
            out[col][lo:hi] = w[:, :, col] / rho[:, None] ** _ORDER[op]
    return out


def compute_weights(nodes: NodeSet, stencils: np.ndarray, cfg: BasisConfig, operator: str) -> np.ndarray:
    """Weight vectors (N, n) for a single derivative operator."""
    if operator not in OPERATORS:
        raise KeyError(f"unknown operator {operator!r}")
    return _weights_for_ops(nodes, stencils, cfg, (operator,))[0]


def build_weight_store(nodes: NodeSet, cfg: BasisConfig | None = None) -> WeightStore:
    """Stencils plus all five derivative weight sets in one batched solve."""
    cfg = cfg or BasisConfig()
    stencils = build_stencils(nodes, cfg.stencil_size)
    ws = _weights_for_ops(nodes, stencils, cfg, OPERATORS)
    return WeightStore(stencils=stencils, dx=ws[0], dy=ws[1], dxx=ws[2], dyy=ws[3], dxy=ws[4])


def apply(weights: np.ndarray, stencils: np.ndarray, field: np.ndarray):
    """Evaluate sum_i w_i * g(x_i): scalar for one stencil, (N,) for all."""
    field = np.asarray(field)
    if weights.ndim == 1:
        return float(np.dot(weights, field[stencils]))
    return np.einsum("ij,ij->i", weights, field[stencils])


def dump_stencil_csv(nodes: NodeSet, store: WeightStore, node_index: int, path) -> None:
    """Debug dump of one node's stencil geometry and weights."""
    st = store.stencils[node_index]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("neighbor,x,y,w_dx,w_dy,w_dxx,w_dyy,w_dxy\n")
        for j, idx in enumerate(st):
            x, y = nodes.positions[idx]
            vals = ",".join(
                repr(float(store.operator(op)[node_index, j])) for op in OPERATORS
            )
            fh.write(f"{idx},{float(x)!r},{float(y)!r},{vals}\n")
