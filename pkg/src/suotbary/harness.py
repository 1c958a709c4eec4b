"""Command-line harness: data generation, experiments, machine-readable traces.

Subcommands: gen | barycenter | compare | ablate-tau | gradcheck | suot.
All experiment commands are deterministic given (config, seed).  Exit codes:
0 ok, 1 numerical failure, 2 bad configuration.  The default output
directory comes from $SUOTBARY_OUTDIR (falling back to the current
directory) and can be overridden per command.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import spd
from .barycenter import (
    BarycenterProblem,
    OptimConfig,
    exact_geodesic_gd,
    exact_sgd,
    hybrid_gd,
    hybrid_sgd,
    numeric_gd_baseline,
    wasserstein_barycenter,
)
from .bures import sample_diagonal_spd, sample_spd, tangent_inner
from .errors import InvalidInput, SuotBaryError
from .gaussian import (
    GaussianMeasure,
    centered,
    load_measure,
    save_measure,
    w2_squared_cov,
)
from .oracle import OracleReport, fd_directional_derivative, reports_to_json
from .suot import solve_suot, suot_cost_centered, suot_gradient

#: Relaxation grid of the tau ablation (11 points).
TAU_ABLATION_GRID = (0.005, 0.01, 0.02, 0.05, 0.1, 0.5, 1.0, 5.0, 10.0, 50.0, 100.0)

TRACE_HEADER = ("iter", "loss", "grad_norm", "in_box", "ms")

_OPTIMIZERS = ("exact", "hybrid", "exact_sgd", "hybrid_sgd", "numeric")


@dataclass
class ExperimentConfig:
    """Validated experiment settings; unknown config keys are rejected."""

    name: str = "experiment"
    d: int = 5
    n: int = 20
    sigma: float = 0.5
    diagonal: bool = False
    tau: float = 1.0
    tau_grid: Optional[list] = None
    optimizer: str = "exact"
    eta: float = 0.1
    eta_grid: Optional[list] = None
    max_iters: int = 500
    tol: float = 1e-8
    rho: Optional[float] = None
    box_policy: str = "warn"
    momentum: float = 0.0
    seed: Optional[int] = None
    contamination: Optional[dict] = None
    outdir: str = field(
        default_factory=lambda: os.environ.get("SUOTBARY_OUTDIR", ".")
    )

    def __post_init__(self):
        if self.d < 1 or self.n < 1:
            raise InvalidInput("d and n must be positive")
        if self.sigma < 0:
            raise InvalidInput("sigma must be nonnegative")
        if self.tau <= 0:
            raise InvalidInput("tau must be positive")
        if self.optimizer not in _OPTIMIZERS:
            raise InvalidInput(f"unknown optimizer {self.optimizer!r}")
        if self.contamination is not None:
            unknown = set(self.contamination) - {"weight", "outlier_cov", "member"}
            if unknown:
                raise InvalidInput(f"unknown contamination keys {sorted(unknown)}")
            w = float(self.contamination.get("weight", 0.0))
            if not 0.0 <= w <= 1.0:
                raise InvalidInput("contamination weight must be in [0, 1]")

    @classmethod
    def from_sources(cls, config_path: Optional[str], overrides: dict):
        data: dict = {}
        if config_path:
            with open(config_path) as fh:
                data = json.load(fh)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidInput(f"unknown config keys {sorted(unknown)}")
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)

    def optim_config(self, eta=None, mode="deterministic") -> OptimConfig:
        return OptimConfig(
            eta=self.eta if eta is None else eta,
            max_iters=self.max_iters,
            tol=self.tol,
            rho=self.rho,
            box_policy=self.box_policy,
            mode=mode,
            momentum=self.momentum,
        )


def _require_seed(cfg: ExperimentConfig) -> int:
    if cfg.seed is None:
        raise InvalidInput("--seed is mandatory for experiment commands")
    return int(cfg.seed)


def _sample_cov(cfg: ExperimentConfig, index: int, seed: int):
    if cfg.diagonal:
        return sample_diagonal_spd(cfg.d, cfg.sigma, seed + index)
    return sample_spd(cfg.d, cfg.sigma, seed + index)


def _corpus_files(directory: Path) -> list[Path]:
    files = sorted(Path(directory).glob("measure_*.json"))
    if not files:
        raise InvalidInput(f"no measure_*.json files under {directory}")
    return files


def load_corpus(directory) -> list[GaussianMeasure]:
    return [load_measure(p) for p in _corpus_files(Path(directory))]


def cmd_gen(cfg: ExperimentConfig) -> int:
    """Sample a corpus; with a contamination spec, write clean and noisy."""
    seed = _require_seed(cfg)
    out = Path(cfg.outdir)
    clean_dir = out / "clean"
    clean_dir.mkdir(parents=True, exist_ok=True)
    covs = [_sample_cov(cfg, i, seed) for i in range(cfg.n)]
    for i, cov in enumerate(covs):
        save_measure(clean_dir / f"measure_{i:03d}.json", centered(cov))
    print(f"wrote {cfg.n} measures to {clean_dir}")

    if cfg.contamination is not None:
        noisy_dir = out / "contaminated"
        noisy_dir.mkdir(parents=True, exist_ok=True)
        w = float(cfg.contamination.get("weight", 0.0))
        member = int(cfg.contamination.get("member", 0))
        if not 0 <= member < cfg.n:
            raise InvalidInput(f"contaminated member {member} outside corpus")
        outlier = spd.matrix_from_json(cfg.contamination["outlier_cov"])
        if outlier.shape[0] != cfg.d:
            raise InvalidInput("outlier covariance dimension mismatch")
        for i, cov in enumerate(covs):
            if i == member:
                # second moment of the centered mixture
                cov = spd.symmetrize((1 - w) * cov + w * outlier)
            save_measure(noisy_dir / f"measure_{i:03d}.json", centered(cov))
        print(f"wrote contaminated corpus to {noisy_dir} (member {member}, w={w})")
    return 0


class _TraceWriter:
    """Streams trace rows to CSV, flushing after every iteration."""

    def __init__(self, path: Path):
        self._fh = open(path, "w", newline="")
        self._csv = csv.writer(self._fh)
        self._csv.writerow(TRACE_HEADER)
        self._fh.flush()

    def __call__(self, record, sigma) -> None:
        self._csv.writerow(
            [record.k, f"{record.loss:.17g}", f"{record.grad_norm:.17g}",
             int(record.in_box), f"{record.ms:.3f}"]
        )
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


def _run_optimizer(name, problem, config, init, seed):
    if name == "exact":
        return exact_geodesic_gd(problem, config, init)
    if name == "hybrid":
        return hybrid_gd(problem, config, init)
    if name == "numeric":
        return numeric_gd_baseline(problem, config, init)
    config = dataclasses.replace(config, mode="stochastic")
    if name == "exact_sgd":
        return exact_sgd(problem, config, init, seed)
    return hybrid_sgd(problem, config, init, seed)


def _run_optimizer_traced(name, problem, config, init, seed, trace_path):
    writer = _TraceWriter(trace_path)
    try:
        if name == "exact":
            return exact_geodesic_gd(problem, config, init, on_iteration=writer)
        if name == "hybrid":
            return hybrid_gd(problem, config, init, on_iteration=writer)
        if name == "numeric":
            return numeric_gd_baseline(problem, config, init, on_iteration=writer)
        config = dataclasses.replace(config, mode="stochastic")
        if name == "exact_sgd":
            return exact_sgd(problem, config, init, seed, on_iteration=writer)
        return hybrid_sgd(problem, config, init, seed, on_iteration=writer)
    finally:
        writer.close()


def cmd_barycenter(cfg: ExperimentConfig, corpus: str) -> int:
    """Run the selected optimizer over a corpus; write result + trace files."""
    seed = _require_seed(cfg)
    measures = load_corpus(corpus)
    problem = BarycenterProblem(measures, cfg.tau)
    out = Path(cfg.outdir)
    out.mkdir(parents=True, exist_ok=True)
    init = np.eye(problem.dim)

    etas = cfg.eta_grid if cfg.eta_grid else [cfg.eta]
    # configuration errors (bad eta, bad policy) must exit 2, so validate
    # all runs up front; numerical failures during a run exit 1
    for eta in etas:
        config = cfg.optim_config(eta=eta)
        if cfg.optimizer in ("exact", "exact_sgd") and not config.eta < 2:
            raise InvalidInput(f"exact method requires eta in (0, 2), got {eta}")
    status = 0
    for eta in etas:
        tag = f"{cfg.name}_{cfg.optimizer}_eta{eta:g}"
        trace_path = out / f"{tag}.trace.csv"
        summary = {"optimizer": cfg.optimizer, "eta": eta, "tau": cfg.tau}
        try:
            config = cfg.optim_config(eta=eta)
            result, trace = _run_optimizer_traced(
                cfg.optimizer, problem, config, init, seed, trace_path
            )
            spd.save_matrix(out / f"{tag}.result.json", result)
            summary.update(
                status=trace.status,
                iterations=len(trace.records) - 1,
                final_loss=trace.records[-1].loss,
            )
        except SuotBaryError as exc:
            summary.update(status="Error", error=str(exc))
            status = 1
        with open(out / f"{tag}.summary.json", "w") as fh:
            json.dump(summary, fh, indent=2)
        print(f"{tag}: {summary['status']}")
    return status


def _gaussian_density_grid(cov, lim: float, resolution: int):
    xs = np.linspace(-lim, lim, resolution)
    xx, yy = np.meshgrid(xs, xs)
    pts = np.stack([xx.ravel(), yy.ravel()], axis=1)
    prec = spd.inv_spd(cov)
    norm = 1.0 / (2 * np.pi * np.sqrt(np.linalg.det(cov)))
    dens = norm * np.exp(-0.5 * np.einsum("ni,ij,nj->n", pts, prec, pts))
    return pts[:, 0], pts[:, 1], dens


def _write_contour(path: Path, components, lim=6.0, resolution=61) -> None:
    """components: list of (weight, cov); density is the mixture density."""
    total = None
    for w, cov in components:
        x, y, dens = _gaussian_density_grid(cov, lim, resolution)
        total = w * dens if total is None else total + w * dens
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("x", "y", "density"))
        for xi, yi, di in zip(x, y, total):
            writer.writerow([f"{xi:.17g}", f"{yi:.17g}", f"{di:.17g}"])


def cmd_compare(cfg: ExperimentConfig, clean: str, contaminated: str) -> int:
    """Robustness comparison of plain vs relaxed barycenters.

    Computes the clean Wasserstein barycenter, then the Wasserstein and
    relaxed barycenters of the contaminated corpus, and reports squared
    distances to the clean reference.
    """
    _require_seed(cfg)
    clean_covs = [g.cov for g in load_corpus(clean)]
    noisy_covs = [g.cov for g in load_corpus(contaminated)]
    out = Path(cfg.outdir)
    out.mkdir(parents=True, exist_ok=True)

    b_clean = wasserstein_barycenter(clean_covs)
    b_wass = wasserstein_barycenter(noisy_covs)
    problem = BarycenterProblem([centered(c) for c in noisy_covs], cfg.tau)
    b_suot, _ = hybrid_gd(problem, cfg.optim_config(eta=1.0), np.eye(cfg.d))

    d_wass = w2_squared_cov(b_wass, b_clean)
    d_suot = w2_squared_cov(b_suot, b_clean)
    report = {
        "tau": cfg.tau,
        "w2sq_wasserstein_to_clean": d_wass,
        "w2sq_suot_to_clean": d_suot,
        "ratio_suot_over_wasserstein": d_suot / max(d_wass, 1e-300),
    }
    for label, m in (
        ("clean_barycenter", b_clean),
        ("wasserstein_barycenter", b_wass),
        ("suot_barycenter", b_suot),
    ):
        spd.save_matrix(out / f"{label}.json", m)
    with open(out / "compare_report.json", "w") as fh:
        json.dump(report, fh, indent=2)

    if cfg.d == 2:
        member = int((cfg.contamination or {}).get("member", 0))
        for i, cov in enumerate(clean_covs):
            _write_contour(out / f"contour_clean_{i:03d}.csv", [(1.0, cov)])
        for i, cov in enumerate(noisy_covs):
            comps = [(1.0, cov)]
            if cfg.contamination is not None and i == member:
                w = float(cfg.contamination.get("weight", 0.0))
                outlier = spd.matrix_from_json(cfg.contamination["outlier_cov"])
                comps = [(1 - w, clean_covs[i]), (w, outlier)]
            _write_contour(out / f"contour_noisy_{i:03d}.csv", comps)
        for label, m in (
            ("clean_bary", b_clean),
            ("wasserstein_bary", b_wass),
            ("suot_bary", b_suot),
        ):
            _write_contour(out / f"contour_{label}.csv", [(1.0, m)])
    print(json.dumps(report, indent=2))
    return 0


def cmd_ablate_tau(cfg: ExperimentConfig, corpus: str) -> int:
    """Distance of the relaxed barycenter to the plain one across tau."""
    _require_seed(cfg)
    covs = [g.cov for g in load_corpus(corpus)]
    out = Path(cfg.outdir)
    out.mkdir(parents=True, exist_ok=True)
    b_wass = wasserstein_barycenter(covs)
    grid = cfg.tau_grid if cfg.tau_grid else list(TAU_ABLATION_GRID)
    rows = []
    for tau in grid:
        problem = BarycenterProblem([centered(c) for c in covs], float(tau))
        # both the objective magnitude and the per-step contraction scale
        # with tau below 1, so the loss-change tolerance scales with tau^2
        config = dataclasses.replace(
            cfg.optim_config(eta=1.0),
            tol=cfg.tol * min(1.0, float(tau)) ** 2,
            max_iters=max(cfg.max_iters, 5000),
        )
        b_tau, _ = hybrid_gd(problem, config, np.eye(cfg.d))
        w2sq = w2_squared_cov(b_tau, b_wass)
        rows.append((float(tau), float(np.sqrt(w2sq)), w2sq))
    path = out / "ablate_tau.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("tau", "w2_dist", "w2sq_dist"))
        for tau, w2d, w2sq in rows:
            writer.writerow([f"{tau:.17g}", f"{w2d:.17g}", f"{w2sq:.17g}"])
    print(f"wrote {path}")
    return 0


def cmd_gradcheck(cfg: ExperimentConfig, instances: int = 10, h: float = 1e-5) -> int:
    """Finite-difference validation of the closed-form gradient."""
    seed = _require_seed(cfg)
    rng = np.random.default_rng(seed)
    reports: list[OracleReport] = []
    for i in range(instances):
        sa = sample_spd(cfg.d, cfg.sigma, seed + 2 * i)
        sb = sample_spd(cfg.d, cfg.sigma, seed + 2 * i + 1)
        x = spd.symmetrize(rng.normal(0, 1, (cfg.d, cfg.d)))
        g = suot_gradient(sa, sb, cfg.tau)
        closed = tangent_inner(sb, g, x)
        fd = fd_directional_derivative(
            lambda s: suot_cost_centered(sa, s, cfg.tau), sb, x, h=h
        )
        reports.append(
            OracleReport(f"d={cfg.d} tau={cfg.tau} i={i}", closed, fd, 1e-5)
        )
    out = Path(cfg.outdir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "gradcheck.json", "w") as fh:
        fh.write(reports_to_json(reports))
    failed = [r for r in reports if not r.passed]
    for r in reports:
        print(f"{r.instance}: rel={r.rel_error:.2e} {'ok' if r.passed else 'FAIL'}")
    return 1 if failed else 0


def cmd_suot(alpha_path: str, beta_path: str, tau: float, out: Optional[str]) -> int:
    """One-shot closed-form plan between two measure files."""
    alpha = load_measure(alpha_path)
    beta = load_measure(beta_path)
    plan = solve_suot(alpha, beta, tau)
    payload = {
        "tau": tau,
        "a_x": [float(v) for v in plan.a_x],
        "sigma_x": spd.matrix_to_json(plan.sigma_x),
        "k_xb_singular_values": [float(v) for v in np.diag(plan.k_xb)],
        "m_pi": plan.m_pi,
        "upsilon": plan.upsilon,
        "cost": plan.cost,
        "saturated": plan.saturated,
    }
    text = json.dumps(payload, indent=2)
    if out:
        Path(out).write_text(text)
    print(text)
    return 0


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--outdir")
    p.add_argument("--name")
    p.add_argument("-d", type=int, dest="d")
    p.add_argument("-n", type=int, dest="n")
    p.add_argument("--sigma", type=float)
    p.add_argument("--diagonal", action="store_const", const=True, default=None)
    p.add_argument("--tau", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--eta-grid", type=float, nargs="+", dest="eta_grid")
    p.add_argument("--tau-grid", type=float, nargs="+", dest="tau_grid")
    p.add_argument("--optimizer", choices=_OPTIMIZERS)
    p.add_argument("--max-iters", type=int, dest="max_iters")
    p.add_argument("--tol", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--box-policy", dest="box_policy",
                   choices=("assert", "warn", "clamp"))


def _config_from_args(args) -> ExperimentConfig:
    overrides = {
        k: getattr(args, k, None)
        for k in (
            "name", "d", "n", "sigma", "diagonal", "tau", "tau_grid",
            "optimizer", "eta", "eta_grid", "max_iters", "tol", "rho",
            "box_policy", "seed", "outdir",
        )
    }
    return ExperimentConfig.from_sources(args.config, overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="suotbary",
        description="Robust Gaussian barycenters via relaxed optimal transport",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="sample a measure corpus")
    _add_config_flags(p)

    p = sub.add_parser("barycenter", help="run a barycenter optimizer")
    _add_config_flags(p)
    p.add_argument("--corpus", required=True, help="directory of measure_*.json")

    p = sub.add_parser("compare", help="robustness comparison vs plain barycenter")
    _add_config_flags(p)
    p.add_argument("--clean", required=True)
    p.add_argument("--contaminated", required=True)

    p = sub.add_parser("ablate-tau", help="tau ablation of the relaxed barycenter")
    _add_config_flags(p)
    p.add_argument("--corpus", required=True)

    p = sub.add_parser("gradcheck", help="finite-difference gradient validation")
    _add_config_flags(p)
    p.add_argument("--instances", type=int, default=10)

    p = sub.add_parser("suot", help="one-shot plan between two measure files")
    p.add_argument("alpha")
    p.add_argument("beta")
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--out")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "suot":
            return cmd_suot(args.alpha, args.beta, args.tau, args.out)
        cfg = _config_from_args(args)
        if args.command == "gen":
            return cmd_gen(cfg)
        if args.command == "barycenter":
            return cmd_barycenter(cfg, args.corpus)
        if args.command == "compare":
            return cmd_compare(cfg, args.clean, args.contaminated)
        if args.command == "ablate-tau":
            return cmd_ablate_tau(cfg, args.corpus)
        if args.command == "gradcheck":
            return cmd_gradcheck(cfg, instances=args.instances)
        parser.error(f"unknown command {args.command}")
    except (InvalidInput, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SuotBaryError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
