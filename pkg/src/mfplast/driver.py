"""Incremental load stepping with Picard-iterated plastic correction.

Each load step applies one partial load.  Within a step, the constant
elastic stiffness is re-solved against residual body forces and boundary
traction mismatches; after every solve the bulk state is updated, yielded
nodes are return-mapped, and the residual re-estimated, until the residual
drops below tolerance at every node.

The convergence measure is unit-free: interior residuals scale by
sigma_y0 / b (force density), boundary traction mismatches by sigma_y0.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import elastic, linsys, material
from .approx import WeightStore, apply
from .material import XX, YY, XY, MaterialModel, PointState
from .nodegen import NodeSet

log = logging.getLogger(__name__)


class ConvergenceError(RuntimeError):
    """Picard iteration exhausted J_max without meeting the tolerance."""

    def __init__(self, step: int, history: list[float]):
        self.step = step
        self.history = history
        super().__init__(
            f"load step {step}: Picard iteration not converged after "
            f"{len(history)} iterations (last residual {history[-1]:.3e})"
        )


@dataclass(frozen=True)
class LoadProgram:
    """Total inner-wall pressure applied over n_load equal partial loads."""

    pressure: float
    n_load: int = 1

    def __post_init__(self):
        if self.n_load < 1:
            raise ValueError("n_load must be >= 1")


@dataclass(frozen=True)
class SolverConfig:
    eps_tol: float = 1e-6
    i_max: int = 50        # return-mapping Newton cap
    j_max: int = 1000      # Picard iterations per load step (all set rounds)
    anderson_depth: int = 40   # history depth for Anderson-accelerated Picard
    explore_max: int = 30      # passes with a free plastic set before freezing
    set_updates_max: int = 30  # active-set correction rounds per load step

    def __post_init__(self):
        if self.eps_tol <= 0:
            raise ValueError("eps_tol must be positive")


@dataclass
class StepReport:
    step: int
    iterations: int
    """Number of corrective solves performed within the step."""
    final_residual: float
    trace: list[tuple[float, float, float]] = field(default_factory=list)
    """Residuals (total, interior, boundary) measured before each solve and
    once more at convergence."""


@dataclass
class RunReport:
    u: np.ndarray
    state: PointState
    steps: list[StepReport]
    return_mapping_used: bool

    @property
    def iterations_per_step(self) -> list[int]:
        return [s.iterations for s in self.steps]


def _divergence(nodes: NodeSet, weights: WeightStore, sigma: np.ndarray) -> np.ndarray:
    """RBF-FD divergence of a stress field at interior nodes (boundary zero)."""
    st = weights.stencils
    div_x = apply(weights.dx, st, sigma[:, XX]) + apply(weights.dy, st, sigma[:, XY])
    div_y = apply(weights.dx, st, sigma[:, XY]) + apply(weights.dy, st, sigma[:, YY])
    out = np.stack([div_x, div_y], axis=1)
    out[: nodes.boundary_count] = 0.0
    return out


def compute_residuum(nodes: NodeSet, weights: WeightStore, sigma: np.ndarray) -> np.ndarray:
    """Residual force density delta_r = -div(sigma) at interior nodes.

    Boundary slots are zero; their mismatch enters through the traction
    right-hand side instead.
    """
    return -_divergence(nodes, weights, sigma)


def boundary_residual(
    nodes: NodeSet,
    bcs: elastic.BoundaryConditionSet,
    sigma: np.ndarray,
    load_fraction: float,
) -> np.ndarray:
    """Traction right-hand side for a correction solve.

    Per traction-mode component: (accumulated target traction) minus the
    current boundary stress projected on the outward normal.  Essential-mode
    slots are returned as zero (their rhs comes from the essential mismatch).
    """
    target = np.stack([bcs.value_x, bcs.value_y], axis=1) * load_fraction
    mismatch = target - elastic.boundary_stress_normal(nodes, sigma)
    mismatch[:, 0][bcs.mode_x != elastic.TRACTION] = 0.0
    mismatch[:, 1][bcs.mode_y != elastic.TRACTION] = 0.0
    return mismatch


def _scaled_residuals(
    nodes: NodeSet,
    delta_r: np.ndarray,
    traction_mismatch: np.ndarray,
    essential_mismatch: np.ndarray,
    bcs: elastic.BoundaryConditionSet,
    sigma_y0: float,
    length_scale: float,
) -> tuple[float, float]:
    res_int = float(np.max(np.hypot(delta_r[:, 0], delta_r[:, 1]))) * length_scale / sigma_y0
    parts = [0.0]
    for comp, modes in ((0, bcs.mode_x), (1, bcs.mode_y)):
        trac = modes == elastic.TRACTION
        if np.any(trac):
            parts.append(np.max(np.abs(traction_mismatch[trac, comp])) / sigma_y0)
        ess = modes == elastic.ESSENTIAL
        if np.any(ess):
            parts.append(np.max(np.abs(essential_mismatch[ess, comp])) / length_scale)
    return res_int, max(parts)


def run(
    nodes: NodeSet,
    weights: WeightStore,
    mat: MaterialModel,
    bcs: elastic.BoundaryConditionSet,
    load: LoadProgram,
    cfg: SolverConfig | None = None,
) -> RunReport:
    """Drive the incremental elasto-plastic solution to the full load."""
    cfg = cfg or SolverConfig()
    ec = mat.elastic
    curve = mat.hardening
    mu = ec.mu
    sigma_y0 = curve.sigma_y0
    length_scale = float(np.max(np.hypot(nodes.positions[:, 0], nodes.positions[:, 1])))

    system = elastic.assemble(nodes, weights, ec, bcs)
    linsys.factorize(system)

    n = nodes.n
    u = np.zeros((n, 2))
    state = PointState.zeros(n)
    # Plastic stress deficit removed by return mapping across committed load
    # steps.  The solved field satisfies L u = applied exactly, so the
    # equilibrium defect of the total stress is div(sigma_p) - applied
    # without re-differentiating the displacement field.
    sigma_p = np.zeros((n, 4))
    applied = np.zeros((n, 2))
    essential_target = np.stack([bcs.value_x, bcs.value_y], axis=1)
    steps: list[StepReport] = []
    rm_used = False

    nb = nodes.boundary_count
    # marginal front nodes count as set violations only beyond this band
    kkt_band = 10.0 * cfg.eps_tol
    for step in range(1, load.n_load + 1):
        frac = step / load.n_load
        # Elastic predictor state frozen at the step start: every Picard pass
        # return-maps the full step increment from this state, so the bulk
        # state is a memoryless function of the current displacement.  The
        # pass is then a fixed-point map on (u, applied), accelerated with
        # Anderson mixing; affine combinations of iterates preserve the solve
        # identity L u = applied, and the converged state (zero defect) is
        # exactly the plain iteration's fixed point.
        #
        # Yielded-set chatter at the plastic front makes the map nonsmooth, so
        # once the set stabilizes it is frozen (signed multipliers keep the
        # map affine) and verified against the yield/positivity conditions at
        # convergence, updating the set and repeating when violated.
        eps_e0 = state.eps_e.copy()
        epbar0 = state.epbar.copy()
        u0 = u.copy()
        sigma_p_step = np.zeros((n, 4))
        trace: list[tuple[float, float, float]] = []
        converged = False
        hist_x: list[np.ndarray] = []
        hist_f: list[np.ndarray] = []
        x = np.concatenate([u.ravel(), applied.ravel()])
        frozen: np.ndarray | None = None
        prev_set: np.ndarray | None = None
        stable = 0
        set_rounds = 0
        dg_full = np.zeros(n)
        for j in range(cfg.j_max):
            u = x[: 2 * n].reshape(n, 2)
            applied = x[2 * n:].reshape(n, 2)

            d_eps = elastic.strain_from_displacement(weights, u - u0)
            state.eps_e = eps_e0 + d_eps
            state.epbar = epbar0.copy()
            state.sigma = elastic.stress_from_elastic_strain(ec, state.eps_e)

            phi = material.yield_function(state.sigma, epbar0, curve)
            if frozen is None:
                # free exploration finds the yielded set; freeze it once it
                # stops fluctuating (the set-verification rounds below correct
                # any remaining misclassification)
                mask = phi > 0
                if prev_set is not None:
                    changed = int(np.count_nonzero(mask ^ prev_set))
                    tol_changed = max(3, int(0.005 * max(1, np.count_nonzero(mask))))
                    stable = stable + 1 if changed <= tol_changed else 0
                prev_set = mask.copy()
                if np.any(mask) and (stable >= 2 or j >= cfg.explore_max):
                    frozen = mask.copy()
                    hist_x.clear()
                    hist_f.clear()
            else:
                mask = frozen

            sigma_p_step[:] = 0.0
            dg_full[:] = 0.0
            if np.any(mask):
                rm_used = True
                trial = state.sigma[mask]
                svm = material.von_mises(trial)
                dg = material.solve_multiplier(
                    svm, epbar0[mask], curve, mu, cfg.i_max, cfg.eps_tol
                )
                dg_full[mask] = dg
                sub = PointState(trial, state.eps_e[mask], epbar0[mask])
                upd = material.update_state(sub, dg, mu)
                sigma_p_step[mask] = trial - upd.sigma
                state.sigma[mask] = upd.sigma
                state.eps_e[mask] = upd.eps_e
                state.epbar[mask] = upd.epbar

            delta_r = _divergence(nodes, weights, sigma_p + sigma_p_step) - applied
            traction_rhs = boundary_residual(nodes, bcs, state.sigma, frac)
            essential_rhs = essential_target - u[:nb]
            res_int, res_bnd = _scaled_residuals(
                nodes, delta_r, traction_rhs, essential_rhs, bcs, sigma_y0, length_scale
            )
            trace.append((max(res_int, res_bnd), res_int, res_bnd))
            if log.isEnabledFor(logging.DEBUG) and (j % 10 == 0 or trace[-1][0] <= cfg.eps_tol):
                log.debug(
                    "step %d pass %d res=%.3e set=%s rounds=%d",
                    step, j, trace[-1][0],
                    "-" if frozen is None else int(frozen.sum()), set_rounds,
                )
            if max(res_int, res_bnd) <= cfg.eps_tol:
                if frozen is not None:
                    phi_new = material.yield_function(state.sigma, epbar0, curve)
                    drop = frozen & (3.0 * mu * dg_full < -kkt_band)
                    add = ~frozen & (phi_new > kkt_band)
                    if (np.any(drop) or np.any(add)) and set_rounds < cfg.set_updates_max:
                        log.debug(
                            "step %d pass %d set update: +%d -%d",
                            step, j, int(add.sum()), int(drop.sum()),
                        )
                        frozen = (frozen & ~drop) | add
                        hist_x.clear()
                        hist_f.clear()
                        set_rounds += 1
                        continue
                    selm = dg_full < 0
                    if np.any(selm):
                        # in-band negative multipliers: commit the elastic
                        # trial instead (keeps epbar monotone; the residual
                        # slack this leaves is bounded by the band width)
                        state.eps_e[selm] = eps_e0[selm] + d_eps[selm]
                        state.sigma[selm] = elastic.stress_from_elastic_strain(
                            ec, state.eps_e[selm]
                        )
                        state.epbar[selm] = epbar0[selm]
                        sigma_p_step[selm] = 0.0
                converged = True
                break

            rhs = elastic.build_rhs(nodes, bcs, delta_r, traction_rhs, essential_rhs)
            du = elastic.solve_elastic(system, rhs)
            f = np.concatenate([du.ravel(), delta_r.ravel()])
            x = _anderson_update(x, f, hist_x, hist_f, cfg.anderson_depth)

        u = x[: 2 * n].reshape(n, 2)
        applied = x[2 * n:].reshape(n, 2)
        if not converged:
            raise ConvergenceError(step, [t[0] for t in trace])
        sigma_p += sigma_p_step
        steps.append(StepReport(step, len(trace) - 1, trace[-1][0], trace))

    return RunReport(u=u, state=state, steps=steps, return_mapping_used=rm_used)


def _anderson_update(
    x: np.ndarray,
    f: np.ndarray,
    hist_x: list[np.ndarray],
    hist_f: list[np.ndarray],
    depth: int,
) -> np.ndarray:
    """One Anderson (type II) mixing step for the fixed point x = x + f(x)."""
    hist_x.append(x.copy())
    hist_f.append(f.copy())
    if len(hist_x) > depth + 1:
        hist_x.pop(0)
        hist_f.pop(0)
    m = len(hist_f) - 1
    if m == 0:
        return x + f
    df = np.stack([hist_f[i + 1] - hist_f[i] for i in range(m)], axis=1)
    dx = np.stack([hist_x[i + 1] - hist_x[i] for i in range(m)], axis=1)
    gamma, *_ = np.linalg.lstsq(df, f, rcond=None)
    return x + f - (dx + df) @ gamma
