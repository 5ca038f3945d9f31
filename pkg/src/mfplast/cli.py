"""Configuration parsing, benchmark presets, run orchestration and file output.

Configuration is flat key=value text plus command-line overrides; preset
cases pin the benchmark parameters and any field can be overridden.  Exit
codes: 0 success, 1 configuration error, 2 solver failure.
"""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import driver, elastic, linsys, nodegen, verify
from .approx import BasisConfig, build_weight_store
from .geometry import TAG_INNER, TAG_OUTER, Cutout, QuarterAnnulus
from .material import (
    TABLE_HARDENING_KNOTS,
    ElasticConstants,
    HardeningCurve,
    MaterialModel,
    von_mises,
)

CASES = ("elastic", "perfect-plastic", "linear-hardening", "irregular", "custom")


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


def _irregular_cutouts(a: float, b: float) -> tuple[Cutout, ...]:
    mid = 0.5 * (a + b)
    return (
        Cutout((mid * math.cos(math.pi / 16), mid * math.sin(math.pi / 16)), 20.0),
        Cutout((mid * math.cos(7 * math.pi / 16), mid * math.sin(7 * math.pi / 16)), 10.0),
        Cutout((0.8 * a * math.cos(math.pi / 4), 0.8 * a * math.sin(math.pi / 4)), 30.0,
               pressurized=True),
        Cutout((1.1 * b * math.cos(math.pi / 4), 1.1 * b * math.sin(math.pi / 4)), 50.0),
    )


@dataclass(frozen=True)
class RunConfig:
    case: str = "custom"
    a: float = 100.0
    b: float = 200.0
    e_modulus: float = 210.0
    nu: float = 0.3
    sigma_y0: float = 0.24
    hardening: str = "perfect"          # perfect | linear | piecewise
    hardening_slope: float = 0.0        # GPa, linear variant
    hardening_knots: tuple[tuple[float, float], ...] = ()
    pressure: float = 0.0
    n_load: int = 1
    h: float = 2.0
    seed: int = 1
    stencil_n: int = 20
    phs_k: int = 3
    monomial_m: int = 3
    eps_tol: float = 1e-6
    n_seg: int = 20
    with_cutouts: bool = False
    out: str = "out"
    export_matrix: bool = False

    def validate(self) -> "RunConfig":
        if self.case not in CASES:
            raise ConfigError(f"unknown case {self.case!r}; choose from {CASES}")
        if not (0.0 < self.nu < 0.5):
            raise ConfigError(f"Poisson ratio must lie in (0, 0.5), got {self.nu}")
        if self.a <= 0 or self.b <= self.a:
            raise ConfigError("need 0 < a < b")
        if self.h <= 0 or self.h >= 0.5 * (self.b - self.a):
            raise ConfigError("h must lie in (0, (b-a)/2)")
        if self.pressure < 0:
            raise ConfigError("pressure must be non-negative")
        if self.n_load < 1:
            raise ConfigError("n_load must be >= 1")
        if self.hardening not in ("perfect", "linear", "piecewise"):
            raise ConfigError(f"unknown hardening variant {self.hardening!r}")
        if self.hardening == "piecewise" and len(self.hardening_knots) < 2:
            raise ConfigError("piecewise hardening needs at least two knots")
        if self.eps_tol <= 0:
            raise ConfigError("eps_tol must be positive")
        return self

    def domain(self) -> QuarterAnnulus:
        cutouts = _irregular_cutouts(self.a, self.b) if self.with_cutouts else ()
        return QuarterAnnulus(self.a, self.b, cutouts)

    def material(self) -> MaterialModel:
        ec = ElasticConstants(self.e_modulus, self.nu)
        if self.hardening == "perfect":
            curve = HardeningCurve.perfect(self.sigma_y0)
        elif self.hardening == "linear":
            curve = HardeningCurve.linear(self.sigma_y0, self.hardening_slope)
        else:
            curve = HardeningCurve.piecewise(np.array(self.hardening_knots))
        return MaterialModel(ec, curve)

    def basis(self) -> BasisConfig:
        return BasisConfig(self.phs_k, self.monomial_m, self.stencil_n)


_PRESETS: dict[str, dict] = {
    "elastic": dict(pressure=0.05, n_load=1, h=2.0, hardening="perfect"),
    "perfect-plastic": dict(pressure=0.19, n_load=25, h=1.0, hardening="perfect"),
    "linear-hardening": dict(
        pressure=0.175, n_load=25, h=1.0, hardening="linear", hardening_slope=10.0
    ),
    "irregular": dict(
        pressure=0.13,
        n_load=10,
        h=1.0,
        hardening="piecewise",
        hardening_knots=tuple(map(tuple, TABLE_HARDENING_KNOTS.tolist())),
        with_cutouts=True,
    ),
    "custom": {},
}

_CONFIG_KEYS = {
    "case": str,
    "a": float,
    "b": float,
    "e_modulus": float,
    "nu": float,
    "sigma_y0": float,
    "hardening": str,
    "hardening_slope": float,
    "hardening_knots": str,
    "pressure": float,
    "n_load": int,
    "h": float,
    "seed": int,
    "stencil_n": int,
    "phs_k": int,
    "monomial_m": int,
    "eps_tol": float,
    "n_seg": int,
    "with_cutouts": bool,
    "out": str,
    "export_matrix": bool,
}


def _parse_knots(text: str) -> tuple[tuple[float, float], ...]:
    knots = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        try:
            ep, sy = part.split(":")
            knots.append((float(ep), float(sy)))
        except ValueError as exc:
            raise ConfigError(f"bad hardening knot {part!r} (want ep:sy;...)") from exc
    return tuple(knots)


def _coerce(key: str, raw: str):
    kind = _CONFIG_KEYS[key]
    if kind is bool:
        if raw.lower() in ("1", "true", "yes"):
            return True
        if raw.lower() in ("0", "false", "no"):
            return False
        raise ConfigError(f"bad boolean for {key}: {raw!r}")
    if key == "hardening_knots":
        return _parse_knots(raw)
    try:
        return kind(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc


def read_config_file(path) -> dict:
    values: dict = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = _coerce(key, raw)
    return values


def parse_config(
    case: str | None = None,
    config_path=None,
    overrides: dict | None = None,
) -> RunConfig:
    """Merge preset defaults, config-file values and overrides (in that order)."""
    file_values = read_config_file(config_path) if config_path else {}
    case = case or file_values.get("case")
    if case is None:
        raise ConfigError("no case given (use --case or a config file with case=...)")
    if case not in _PRESETS:
        raise ConfigError(f"unknown case {case!r}; choose from {CASES}")
    merged = dict(_PRESETS[case])
    merged["case"] = case
    for src in (file_values, overrides or {}):
        for key, val in src.items():
            if val is None:
                continue
            if key not in _CONFIG_KEYS:
                raise ConfigError(f"unknown configuration key {key!r}")
            merged[key] = val
    if case == "custom" and "pressure" not in merged:
        raise ConfigError("custom case requires a pressure")
    return RunConfig(**merged).validate()


# ---------------------------------------------------------------------------
# Run orchestration
# ---------------------------------------------------------------------------


@dataclass
class CaseResult:
    config: RunConfig
    nodes: nodegen.NodeSet
    report: driver.RunReport
    summary: dict = field(default_factory=dict)


def _tag_average(nodes, values, tag) -> float:
    sel = nodes.tags == tag
    return float(np.mean(values[: nodes.boundary_count][sel])) if np.any(sel) else math.nan


def solve_case(cfg: RunConfig) -> CaseResult:
    """Run the full pipeline for one configuration (no file output)."""
    domain = cfg.domain()
    nodes = nodegen.fill(domain, cfg.h, cfg.seed)
    weights = build_weight_store(nodes, cfg.basis())
    bcs = elastic.boundary_conditions_from_tags(nodes, cfg.pressure)
    mat = cfg.material()
    report = driver.run(
        nodes,
        weights,
        mat,
        bcs,
        driver.LoadProgram(cfg.pressure, cfg.n_load),
        driver.SolverConfig(eps_tol=cfg.eps_tol),
    )
    result = CaseResult(cfg, nodes, report)
    result.summary = _summarize(cfg, nodes, report)
    return result


def _summarize(cfg: RunConfig, nodes, report) -> dict:
    u_mag = np.hypot(report.u[:, 0], report.u[:, 1])
    vm = von_mises(report.state.sigma)
    iters = report.iterations_per_step
    summary = {
        "case": cfg.case,
        "n_nodes": nodes.n,
        "h_mm": cfg.h,
        "seed": cfg.seed,
        "pressure_gpa": cfg.pressure,
        "n_load": cfg.n_load,
        "max_abs_u_mm": float(np.max(u_mag)),
        "vm_inner_avg_gpa": _tag_average(nodes, vm, TAG_INNER),
        "vm_outer_avg_gpa": _tag_average(nodes, vm, TAG_OUTER),
        "u_inner_avg_mm": _tag_average(nodes, u_mag, TAG_INNER),
        "u_outer_avg_mm": _tag_average(nodes, u_mag, TAG_OUTER),
        "picard_iterations": ",".join(str(k) for k in iters),
        "avg_picard_iterations": float(np.mean(iters)),
        "final_residual": report.steps[-1].final_residual,
        "max_epbar": float(np.max(report.state.epbar)),
        "return_mapping_used": int(report.return_mapping_used),
    }
    imax = int(np.argmax(report.state.epbar))
    summary["max_epbar_x_mm"] = float(nodes.positions[imax, 0])
    summary["max_epbar_y_mm"] = float(nodes.positions[imax, 1])

    if cfg.case == "elastic":
        r = np.hypot(nodes.positions[:, 0], nodes.positions[:, 1])
        _, _, _, u_ref = verify.elastic_reference(
            r, cfg.pressure, cfg.a, cfg.b, cfg.e_modulus, cfg.nu
        )
        ref = u_ref[:, None] * nodes.positions / r[:, None]
        err = verify.error_norm(report.u, ref)
        summary["l2_error_mm"] = err.total
        summary["l2_error_per_node_mm"] = err.per_node
        rel = np.hypot(*(report.u - ref).T) / u_ref
        summary["max_rel_u_error"] = float(np.max(rel))
    elif not cfg.with_cutouts and report.return_mapping_used:
        try:
            front = verify.extract_front(nodes.positions, report.state.epbar, report.state.sigma)
            summary["front_c_mm"] = front.c
        except verify.VerifyError as exc:
            summary["front_error"] = str(exc)
    return summary


def _write_summary(path, summary: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for key, val in summary.items():
            fh.write(f"{key}={val}\n")


def _write_residual_csv(path, report) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("load_step,picard_iteration,residual,residual_interior,residual_boundary\n")
        for step in report.steps:
            for j, (tot, ri, rb) in enumerate(step.trace, 1):
                fh.write(f"{step.step},{j},{tot!r},{ri!r},{rb!r}\n")


def _write_comparison_csv(path, cfg: RunConfig, nodes, report) -> None:
    """Radial profiles, numerical vs closed form (long format per quantity)."""
    r = np.hypot(nodes.positions[:, 0], nodes.positions[:, 1])
    s_r, s_t, s_z = verify.to_cylindrical(report.state.sigma, nodes.positions)
    u_mag = np.hypot(report.u[:, 0], report.u[:, 1])
    if cfg.case == "elastic":
        ref = verify.elastic_reference(r, cfg.pressure, cfg.a, cfg.b, cfg.e_modulus, cfg.nu)
    else:
        c = verify.front_from_pressure(cfg.pressure, cfg.a, cfg.b, cfg.sigma_y0).c
        ref = verify.plastic_reference(
            r, c, cfg.pressure, cfg.a, cfg.b, cfg.sigma_y0, cfg.nu,
            cfg.material().elastic.mu,
        )
    quantities = (
        ("sigma_r_gpa", s_r, ref[0]),
        ("sigma_theta_gpa", s_t, ref[1]),
        ("sigma_z_gpa", s_z, ref[2]),
        ("u_mm", u_mag, ref[3]),
    )
    order = np.argsort(r)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("quantity,r_mm,numerical,analytical\n")
        for name, num, ana in quantities:
            for i in order:
                fh.write(f"{name},{float(r[i])!r},{float(num[i])!r},{float(ana[i])!r}\n")


def _write_front_shape_csv(path, cfg: RunConfig, nodes, report) -> None:
    segments = verify.front_shape(
        nodes.positions, report.state.epbar, report.state.sigma, cfg.n_seg
    )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("angle_rad,c_mm,ok\n")
        for seg in segments:
            mid = 0.5 * (seg.angle_lo + seg.angle_hi)
            fh.write(f"{mid!r},{seg.c!r},{int(seg.ok)}\n")


def run_case(cfg: RunConfig) -> CaseResult:
    """Solve one case and emit all artifacts into cfg.out."""
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    result = solve_case(cfg)
    nodes, report = result.nodes, result.report

    nodegen.export_csv(nodes, outdir / "nodes.csv")
    elastic.export_fields_csv(
        outdir / "fields.csv", nodes, report.u, report.state.sigma, report.state.epbar
    )
    _write_residual_csv(outdir / "residual.csv", report)
    if not cfg.with_cutouts:
        _write_comparison_csv(outdir / "comparison.csv", cfg, nodes, report)
        if report.return_mapping_used:
            _write_front_shape_csv(outdir / "front_shape.csv", cfg, nodes, report)
    if cfg.export_matrix:
        weights = build_weight_store(nodes, cfg.basis())
        bcs = elastic.boundary_conditions_from_tags(nodes, cfg.pressure)
        system = elastic.assemble(nodes, weights, cfg.material().elastic, bcs)
        linsys.export_matrix(system, outdir / "matrix.txt")
    _write_summary(outdir / "summary.txt", result.summary)
    return result


def sweep(cfg: RunConfig, axis: str, values) -> list[dict]:
    """Repeat the case along one axis; one row per run, failures recorded."""
    if axis not in ("h", "seed", "n_load"):
        raise ConfigError(f"sweep axis must be h, seed or n_load, got {axis!r}")
    if len(values) < 2:
        raise ConfigError("sweep needs at least two values")
    rows = []
    for val in values:
        sub = replace(cfg, **{axis: (int(val) if axis in ("seed", "n_load") else float(val))})
        row = {"axis": axis, "value": val}
        try:
            result = solve_case(sub.validate())
            row["status"] = "ok"
            row["n_nodes"] = result.summary["n_nodes"]
            row["max_abs_u_mm"] = result.summary["max_abs_u_mm"]
            row["avg_picard_iterations"] = result.summary["avg_picard_iterations"]
            if "l2_error_mm" in result.summary:
                row["l2_error_mm"] = result.summary["l2_error_mm"]
                row["l2_error_per_node_mm"] = result.summary["l2_error_per_node_mm"]
        except Exception as exc:  # noqa: BLE001 - sweep must continue
            row["status"] = f"failed: {exc}"
        rows.append(row)
    return rows


def _write_sweep_csv(path, rows) -> None:
    keys = ["axis", "value", "status", "n_nodes", "max_abs_u_mm",
            "avg_picard_iterations", "l2_error_mm", "l2_error_per_node_mm"]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(keys) + "\n")
        for row in rows:
            fh.write(",".join(str(row.get(k, "")) for k in keys) + "\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mfplast",
        description="Meshless elasto-plastic plane-strain solver (pressurized cylinder benchmarks)",
        exit_on_error=False,
    )
    parser.add_argument("--case", choices=CASES, help="benchmark preset")
    parser.add_argument("--config", help="key=value configuration file")
    parser.add_argument("--h", type=float, help="target node spacing [mm]")
    parser.add_argument("--seed", type=int, help="node generation seed")
    parser.add_argument("--n-load", type=int, dest="n_load", help="number of load steps")
    parser.add_argument("--pressure", type=float, help="inner pressure [GPa]")
    parser.add_argument("--eps-tol", type=float, dest="eps_tol", help="iteration tolerance")
    parser.add_argument("--n-seg", type=int, dest="n_seg", help="front-shape segments")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--sweep", choices=("h", "seed", "n_load"), help="sweep axis")
    parser.add_argument("--sweep-values", help="comma-separated sweep values")
    parser.add_argument("--export-matrix", action="store_true", default=None,
                        dest="export_matrix", help="write the assembled matrix")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except argparse.ArgumentError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1

    overrides = {
        key: getattr(args, key)
        for key in ("h", "seed", "n_load", "pressure", "eps_tol", "n_seg", "out",
                    "export_matrix")
        if getattr(args, key) is not None
    }
    try:
        cfg = parse_config(args.case, args.config, overrides)
        if args.sweep:
            if not args.sweep_values:
                raise ConfigError("--sweep requires --sweep-values")
            values = [float(v) for v in args.sweep_values.split(",") if v.strip()]
            rows = sweep(cfg, args.sweep, values)
            outdir = Path(cfg.out)
            outdir.mkdir(parents=True, exist_ok=True)
            _write_sweep_csv(outdir / "sweep.csv", rows)
            print(f"sweep written to {outdir / 'sweep.csv'}")
            return 0
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1

    try:
        result = run_case(cfg)
    except Exception as exc:  # solver failures exit 2
        print(f"solver error: {exc}", file=sys.stderr)
        return 2
    for key, val in result.summary.items():
        print(f"{key}={val}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
