"""Command-line front end.

Subcommands: spectrum, certify, sweep, check, export-domain.  All take a JSON
config (--config); unknown keys are rejected so stale configs fail fast.
Numeric output uses shortest round-trip float formatting and files are written
atomically (temp file + rename), so identical config and seed give
byte-identical artifacts.

Exit codes: 0 success / certified / all checks passed; 1 target or check
failed; 2 invalid configuration; 3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import domain as dom
from . import floquet as flq
from . import gaps as gp
from . import groups as grp
from . import repspace as rep
from . import spectral as sp
from .errors import ConfigError, ConvergenceError, GapforgeError

TOLERANCE_DEFAULTS = {
    "parseval": 1e-10,
    "intertwine": 1e-12,
    "energy": 1e-9,
    "interlace": 1e-9,
    "plancherel": None,   # resolved per group: 1e-12 finite, 1e-10 with a lattice part
    "union": 1e-8,
}

_CONFIG_KEYS = {
    "group", "chamber_size", "r", "port_width", "neck_length",
    "epsilon", "epsilon_grid", "dual_points", "k_max", "gap_target",
    "seed", "out_dir", "tolerances", "check_samples", "support_radius",
}


@dataclass
class RunConfig:
    group: grp.GroupSpec
    chamber_size: int = 8
    port_width: int = 1
    neck_length: int = 2
    epsilon: float | None = None
    epsilon_grid: list[float] | None = None
    dual_points: int = 8
    k_max: int = 6
    gap_target: int = 1
    seed: int = 0
    out_dir: str = "."
    tolerances: dict = field(default_factory=dict)
    check_samples: int = 100
    support_radius: int = 3

    def tolerance(self, name: str) -> float:
        if name in self.tolerances:
            return float(self.tolerances[name])
        value = TOLERANCE_DEFAULTS[name]
        if name == "plancherel" and value is None:
            return 1e-12 if self.group.abelian_rank == 0 else 1e-10
        return value

    def build_domain(self, epsilon: float) -> dom.DiscretizedDomain:
        return dom.build_domain(self.chamber_size, self.group.generator_count,
                                self.port_width, epsilon, self.neck_length)


def load_config(path: str) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "group" not in raw:
        raise ConfigError("config requires a 'group'")
    try:
        spec = grp.group_from_config(raw["group"])
    except (GapforgeError, ValueError) as exc:
        raise ConfigError(f"bad group: {exc}") from exc

    def as_int(key, default, lo, hi=None):
        value = raw.get(key, default)
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(f"{key} must be an integer")
        if value < lo or (hi is not None and value > hi):
            raise ConfigError(f"{key}={value} outside [{lo}, {hi if hi is not None else 'inf'}]")
        return value

    cfg = RunConfig(
        group=spec,
        chamber_size=as_int("chamber_size", 8, 2, 64),
        port_width=as_int("port_width", 1, 1, 16),
        neck_length=as_int("neck_length", 2, 1, 32),
        dual_points=as_int("dual_points", 8, 1, 64),
        k_max=as_int("k_max", 6, 1, 512),
        gap_target=as_int("gap_target", 1, 0, 512),
        seed=as_int("seed", 0, 0),
        check_samples=as_int("check_samples", 100, 1, 10000),
        support_radius=as_int("support_radius", 3, 0, 16),
        out_dir=raw.get("out_dir", "."),
    )
    if "r" in raw and raw["r"] != spec.generator_count:
        raise ConfigError(
            f"r={raw['r']} does not match the group's generator count "
            f"{spec.generator_count}")
    if "epsilon" in raw:
        eps = raw["epsilon"]
        if not isinstance(eps, (int, float)) or not 0.0 < float(eps) <= 1.0:
            raise ConfigError("epsilon must be a number in (0, 1]")
        cfg.epsilon = float(eps)
    if "epsilon_grid" in raw:
        grid_values = raw["epsilon_grid"]
        if (not isinstance(grid_values, list) or not grid_values
                or not all(isinstance(e, (int, float)) and 0.0 < float(e) <= 1.0
                           for e in grid_values)):
            raise ConfigError("epsilon_grid must be a non-empty list of numbers in (0, 1]")
        eps_list = [float(e) for e in grid_values]
        if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
            raise ConfigError("epsilon_grid must be strictly decreasing")
        cfg.epsilon_grid = eps_list
    if "tolerances" in raw:
        tols = raw["tolerances"]
        if not isinstance(tols, dict):
            raise ConfigError("tolerances must be an object")
        unknown_tols = set(tols) - set(TOLERANCE_DEFAULTS)
        if unknown_tols:
            raise ConfigError(f"unknown tolerance keys: {sorted(unknown_tols)}")
        for key, value in tols.items():
            if not isinstance(value, (int, float)) or value < 0:
                raise ConfigError(f"tolerance {key} must be a non-negative number")
        cfg.tolerances = {k: float(v) for k, v in tols.items()}
    return cfg


def _require_epsilon(cfg: RunConfig) -> float:
    if cfg.epsilon is None:
        raise ConfigError("this command requires 'epsilon' in the config")
    return cfg.epsilon


def _check_k_max(cfg: RunConfig, domain: dom.DiscretizedDomain) -> None:
    interior = len(domain.interior_indices())
    if cfg.k_max > interior:
        raise ConfigError(
            f"k_max={cfg.k_max} exceeds the Dirichlet matrix size {interior}")


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _pmap(fn, items, jobs: int):
    if jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# commands


def cmd_spectrum(cfg: RunConfig, out_dir: Path, jobs: int) -> int:
    eps = _require_epsilon(cfg)
    domain = cfg.build_domain(eps)
    _check_k_max(cfg, domain)
    grid = rep.sample_dual(cfg.group, cfg.dual_points)
    rows: list[tuple[int, str, np.ndarray]] = [
        (-1, "dirichlet", sp.eigen_solve(sp.assemble(domain, sp.dirichlet())).eigenvalues),
        (-1, "neumann", sp.eigen_solve(sp.assemble(domain, sp.neumann())).eigenvalues),
    ]
    fiber_rows = _pmap(
        lambda fiber: (fiber.z_id, "equivariant",
                       sp.eigen_solve(sp.assemble(domain, sp.equivariant(fiber))).eigenvalues),
        grid.fibers, jobs)
    rows.extend(fiber_rows)
    _atomic_write(out_dir / "spectra.csv", "\n".join(sp.spectrum_csv_rows(rows)) + "\n")
    print(f"wrote {out_dir / 'spectra.csv'} ({sum(len(r[2]) for r in rows)} eigenvalues)")
    return 0


def cmd_certify(cfg: RunConfig, out_dir: Path, jobs: int) -> int:
    eps = _require_epsilon(cfg)
    domain = cfg.build_domain(eps)
    _check_k_max(cfg, domain)
    intervals = gp.bracket(domain, cfg.k_max)
    report = gp.detect_gaps(intervals)
    report.witnesses = [gp.nonempty_band_witness(domain, cfg.group, k)
                        for k in range(1, cfg.k_max + 1)]
    grid = rep.sample_dual(cfg.group, cfg.dual_points)
    union = gp.union_inclusion_check(domain, grid, intervals, cfg.tolerance("union"))
    report.union_max_violation = union.max_violation
    doc = gp.gap_report_to_json_dict(report, eps)
    doc["gap_target"] = cfg.gap_target
    doc["certified"] = report.count >= cfg.gap_target
    _atomic_write(out_dir / "gaps.json", gp.gaps_json_text(doc))
    print(f"certified {report.count} gap(s), target {cfg.gap_target} "
          f"-> {'ok' if doc['certified'] else 'not met'}")
    return 0 if doc["certified"] else 1


def cmd_sweep(cfg: RunConfig, out_dir: Path, jobs: int) -> int:
    if cfg.epsilon_grid is None:
        raise ConfigError("sweep requires 'epsilon_grid' in the config")
    params = gp.DomainParams(cfg.chamber_size, cfg.port_width, cfg.neck_length)
    _check_k_max(cfg, cfg.build_domain(cfg.epsilon_grid[0]))
    result = gp.sweep_epsilon(params, cfg.group, cfg.epsilon_grid,
                              cfg.gap_target, cfg.k_max)
    _atomic_write(out_dir / "sweep.csv", "\n".join(gp.sweep_csv_rows(result)) + "\n")
    _atomic_write(out_dir / "sweep.json", gp.gaps_json_text(gp.sweep_to_json_dict(result)))
    grid = rep.sample_dual(cfg.group, cfg.dual_points)

    def band_file(idx_eps):
        idx, eps = idx_eps
        domain = cfg.build_domain(eps)
        bands = flq.build_bands(domain, grid, cfg.k_max)
        return (idx, "\n".join(flq.bands_csv_rows(bands)) + "\n")

    for idx, text in _pmap(band_file, list(enumerate(result.epsilon_grid)), jobs):
        _atomic_write(out_dir / f"bands_{idx:03d}.csv", text)
    print(f"sweep: achieved {result.achieved} gap(s); threshold epsilon = "
          f"{result.threshold_epsilon}")
    return 0


def cmd_check(cfg: RunConfig, out_dir: Path, jobs: int) -> int:
    eps = _require_epsilon(cfg)
    domain = cfg.build_domain(eps)
    _check_k_max(cfg, domain)
    grid = rep.sample_dual(cfg.group, cfg.dual_points)
    rng = np.random.default_rng(cfg.seed)
    abelian = cfg.group.finite_order == 1
    results = []

    def record(name, passed, residual, tolerance, skipped=False, detail=""):
        results.append({
            "name": name,
            "passed": bool(passed) or bool(skipped),
            "skipped": bool(skipped),
            "residual": None if residual is None else sp.format_float(residual),
            "tolerance": None if tolerance is None else sp.format_float(tolerance),
            "detail": detail,
        })

    # Plancherel on the group algebra
    tol = cfg.tolerance("plancherel")
    radius = min(cfg.support_radius, max((cfg.dual_points - 1) // 2, 0))
    ball = grp.word_ball(cfg.group, radius)
    worst = 0.0
    for _ in range(5):
        a = {g: complex(rng.standard_normal(), rng.standard_normal())
             for g in ball if rng.random() < 0.7}
        if not a:
            a = {grp.identity(cfg.group): 1.0 + 0j}
        norm = sum(abs(v) ** 2 for v in a.values())
        worst = max(worst, rep.plancherel_check(a, grid) / norm)
    record("plancherel", worst <= tol, worst, tol)

    # interlacing across all fibers
    tol = cfg.tolerance("interlace")
    reports = _pmap(lambda fiber: sp.interlace_check(domain, fiber, tol), grid.fibers, jobs)
    worst = max(max(r.max_lower_violation, r.max_upper_violation) for r in reports)
    record("interlacing", all(r.ok for r in reports), worst, tol)

    # spectral union inclusion
    tol = cfg.tolerance("union")
    intervals = gp.bracket(domain, cfg.k_max)
    union = gp.union_inclusion_check(domain, grid, intervals, tol)
    record("union_inclusion", union.ok, union.max_violation, tol,
           detail=f"{union.checked} eigenvalues checked")

    if abelian:
        patch = dom.build_cover_patch(domain, cfg.group, cfg.support_radius + 1)
        tol_p = cfg.tolerance("parseval")
        tol_i = cfg.tolerance("intertwine")
        tol_e = cfg.tolerance("energy")
        worst_p = worst_i = worst_e = 0.0
        small_ball = grp.word_ball(cfg.group, 1)
        for _ in range(cfg.check_samples):
            u = flq.random_cover_function(patch, cfg.support_radius, rng)
            norm2 = u.norm_squared()
            worst_p = max(worst_p, flq.parseval_check(u, grid) / norm2)
            gamma = small_ball[int(rng.integers(len(small_ball)))]
            fiber = grid.fibers[int(rng.integers(len(grid.fibers)))]
            inner = flq.random_cover_function(patch, cfg.support_radius - 1, rng) \
                if cfg.support_radius >= 1 else u
            worst_i = max(worst_i, flq.intertwine_check(inner, gamma, fiber.theta)
                          / np.sqrt(inner.norm_squared()))
            resid, q_cover = flq.energy_identity_check(u, grid, domain)
            if q_cover > 0:
                worst_e = max(worst_e, resid / q_cover)
        record("parseval", worst_p <= tol_p, worst_p, tol_p,
               detail=f"{cfg.check_samples} samples")
        record("intertwining", worst_i <= tol_i, worst_i, tol_i)
        record("energy_identity", worst_e <= tol_e, worst_e, tol_e)
    else:
        note = "torus transform checks apply to abelian groups only"
        record("parseval", True, None, None, skipped=True, detail=note)
        record("intertwining", True, None, None, skipped=True, detail=note)
        record("energy_identity", True, None, None, skipped=True, detail=note)

    doc = {"group": cfg.group.name, "epsilon": eps, "seed": cfg.seed, "checks": results}
    _atomic_write(out_dir / "checks.json", json.dumps(doc, indent=2, sort_keys=True) + "\n")
    failed = [r["name"] for r in results if not r["passed"]]
    for r in results:
        status = "skip" if r["skipped"] else ("pass" if r["passed"] else "FAIL")
        residual = "" if r["residual"] is None else f" residual={r['residual']}"
        print(f"[{status}] {r['name']}{residual}")
    if failed:
        print("failing properties: " + ", ".join(failed))
        return 1
    return 0


def cmd_export_domain(cfg: RunConfig, out_dir: Path, jobs: int) -> int:
    eps = _require_epsilon(cfg)
    domain = cfg.build_domain(eps)
    _atomic_write(out_dir / "domain.json", dom.domain_to_json(domain) + "\n")
    print(f"wrote {out_dir / 'domain.json'} ({domain.vertex_count} vertices)")
    return 0


_COMMANDS = {
    "spectrum": cmd_spectrum,
    "certify": cmd_certify,
    "sweep": cmd_sweep,
    "check": cmd_check,
    "export-domain": cmd_export_domain,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gapforge",
        description="Certify spectral gaps of periodic graph Laplacians by "
                    "Dirichlet/Neumann bracketing over representation fibers.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("spectrum", "write Dirichlet/Neumann/fiber spectra as CSV"),
        ("certify", "bracket the domain and certify spectral gaps"),
        ("sweep", "re-certify along a decreasing junction-parameter grid"),
        ("check", "run the full property suite against its tolerances"),
        ("export-domain", "write the discretized domain as JSON"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", default=None, help="output directory (default: config out_dir)")
        p.add_argument("--jobs", type=int, default=None,
                       help="worker threads (default: GAPFORGE_JOBS or 1)")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--tol", type=float, default=None,
                       help="override every check tolerance")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.tol is not None:
            cfg.tolerances = {name: args.tol for name in TOLERANCE_DEFAULTS}
        out_dir = Path(args.out if args.out is not None else cfg.out_dir)
        jobs = args.jobs if args.jobs is not None else int(os.environ.get("GAPFORGE_JOBS", "1"))
        return _COMMANDS[args.command](cfg, out_dir, max(1, jobs))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    except GapforgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
