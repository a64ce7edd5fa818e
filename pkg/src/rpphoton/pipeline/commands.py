"""Simulation, sampling and comparison commands behind the CLI."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..master import Model
from ..photon import CountSeries, SkellamParams, delta_n_sampled, monte_carlo_counts, sigma_delta_n, skellam_pmf
from ..spin import build_system, hyperfine_hamiltonian, zeeman_hamiltonian
from ..trajectory import (
    BinnedExpectation,
    DeltaN,
    StepSizeError,
    TimeGrid,
    Trajectory,
    bin_counts,
    default_step,
    delta_n_expected,
    integrate,
)
from .compare import ComparisonReport, GridMismatchError, compare_counts
from .config import ConfigError, RunConfig
from .csvio import IngestError, ingest_counts, read_table, write_csv

log = logging.getLogger(__name__)

MAX_HALVINGS = 8
TRAJECTORY_COLUMNS = ["t", "qs_expect", "trace", "p_coh", "tilde_norm"]


class IntegrationError(ArithmeticError):
    pass


@dataclass
class ModelRun:
    model: Model
    trajectory: Trajectory | None
    bins: BinnedExpectation
    delta_n: DeltaN | None


def _integrate_refining(system, H, rho0, spec, t_end, h) -> Trajectory:
    """Integrate, halving h on a step-size failure; halving keeps delta_t a multiple of h."""
    for _ in range(MAX_HALVINGS + 1):
        try:
            return integrate(system, H, rho0, spec, TimeGrid(0.0, t_end, h))
        except StepSizeError as exc:
            log.info("%s: %s; halving step", spec.kind.value, exc)
            h /= 2
    raise IntegrationError(f"{spec.kind.value}: step size still too large after {MAX_HALVINGS} halvings")


def run_models(config: RunConfig) -> dict[str, ModelRun]:
    k_S = config.k_S
    system = build_system(config.nuclei)
    H = zeeman_hamiltonian(system, config.omega1 * k_S, config.omega2 * k_S)
    if config.hyperfine:
        H = H + hyperfine_hamiltonian(system, [(e, n, A * k_S) for e, n, A in config.hyperfine])
    rho0 = system.singlet_density()
    delta_t = config.delta_t / k_S
    t_end = config.t_end / k_S
    if config.step is not None:
        h = config.step / k_S
    else:
        h = default_step(k_S, config.omega1 * k_S, config.omega2 * k_S, delta_t)

    def one(model: Model) -> ModelRun:
        if t_end <= 0:
            return ModelRun(model, None, BinnedExpectation(np.array([0.0]), np.array([])), None)
        if h > t_end:
            raise IntegrationError(f"step {h} exceeds t_end {t_end}")
        traj = _integrate_refining(system, H, rho0, config.model_spec(model), t_end, h)
        if traj.halted == "positivity":
            raise IntegrationError(
                f"{model.value}: positivity violated (min eigenvalue {traj.min_eigenvalue:.3e})"
            )
        bins = bin_counts(traj, delta_t, config.N0)
        dn = delta_n_expected(bins) if len(bins) >= 2 else None
        return ModelRun(model, traj, bins, dn)

    with ThreadPoolExecutor(max_workers=len(config.model_list)) as pool:
        runs = list(pool.map(one, config.model_list))
    return {r.model.value: r for r in runs}


def _meta(config: RunConfig, **extra) -> dict:
    return {"seed": config.seed, "config_hash": config.config_hash(), "k_S": config.k_S, **extra}


def write_simulation(config: RunConfig, runs: dict[str, ModelRun], out: Path) -> list[Path]:
    out = Path(out)
    paths = []
    for name, run in runs.items():
        traj = run.trajectory
        rows = []
        h = None
        if traj is not None:
            h = traj.h
            rows = zip(traj.times, traj.qs_expect, traj.trace, traj.p_coh, traj.tilde_norm)
        meta = _meta(config, model=name, step=h if h is not None else "none")
        if traj is not None and traj.halted:
            meta["halted"] = traj.halted
        paths.append(write_csv(out / f"trajectory_{name}.csv", TRAJECTORY_COLUMNS, rows, meta))

    names = list(runs)
    first = runs[names[0]]
    n_bins = len(first.bins)
    bin_rows = [
        [first.bins.starts[k]] + [runs[m].bins.N[k] for m in names] for k in range(n_bins)
    ]
    paths.append(
        write_csv(
            out / "bins.csv",
            ["t_bin"] + [f"N_{m}" for m in names],
            bin_rows,
            _meta(config, N0=config.N0, delta_t=config.delta_t / config.k_S),
        )
    )

    header = ["t_bin"]
    for m in names:
        header += [f"delta_n_fig_{m}", f"delta_n_text_{m}"]
    header += ["sigma_exact", "sigma_simplified"]
    dn_rows = []
    if first.delta_n is not None:
        N = first.bins.N
        for k in range(len(first.delta_n.t)):
            row = [first.delta_n.t[k]]
            for m in names:
                row += [runs[m].delta_n.fig[k], runs[m].delta_n.text[k]]
            if N[k] > 0:
                sig = sigma_delta_n(N[k], N[k + 1])
                row += [float(sig.exact), float(sig.simplified)]
            else:
                row += [float("nan"), float("nan")]
            dn_rows.append(row)
    paths.append(
        write_csv(out / "deltan.csv", header, dn_rows, _meta(config, sigma_model=names[0]))
    )
    return paths


def cmd_simulate(config: RunConfig) -> list[Path]:
    runs = run_models(config)
    return write_simulation(config, runs, Path(config.out))


def load_bins(path: Path) -> tuple[dict[str, str], BinnedExpectation, dict[str, np.ndarray]]:
    meta, cols = read_table(path)
    if "t_bin" not in cols:
        raise IngestError(f"{path}: missing t_bin column")
    starts = cols["t_bin"]
    width = float(meta.get("delta_t", "nan"))
    if not np.isfinite(width):
        width = float(starts[1] - starts[0]) if len(starts) > 1 else float("nan")
    edges = np.append(starts, starts[-1] + width) if len(starts) else np.array([0.0])
    models = {k[2:]: v for k, v in cols.items() if k.startswith("N_")}
    first = next(iter(models.values()), np.array([]))
    return meta, BinnedExpectation(edges, first), models


def _bins_for_sampling(config: RunConfig) -> dict[str, BinnedExpectation]:
    out = Path(config.out)
    bins_path = out / "bins.csv"
    if bins_path.exists():
        meta, binned, models = load_bins(bins_path)
        if meta.get("config_hash") == config.config_hash() and set(models) >= set(config.models):
            return {m: BinnedExpectation(binned.edges, models[m]) for m in config.models}
    runs = run_models(config)
    write_simulation(config, runs, out)
    return {m: r.bins for m, r in runs.items()}


def cmd_sample(config: RunConfig, trials: int | None = None) -> list[Path]:
    trials = config.trials if trials is None else trials
    if not isinstance(trials, int) or trials < 1:
        raise ConfigError("trials must be a positive integer")
    out = Path(config.out)
    paths = []
    for m, bins in _bins_for_sampling(config).items():
        if len(bins) == 0:
            series: list[CountSeries] = []
        else:
            series = monte_carlo_counts(bins, trials, config.seed)
        meta = _meta(config, model=m, trials=trials)
        rows = [(s.trial, t, n) for s in series for t, n in zip(s.starts, s.sampled)]
        paths.append(write_csv(out / f"counts_{m}.csv", ["trial", "t_bin", "n"], rows, meta))
        dn_rows = []
        for s in series:
            if len(s) < 2:
                continue
            dn = delta_n_sampled(s)
            dn_rows += [(s.trial, t, v, -v) for t, v in zip(s.starts[:-1], dn)]
        paths.append(
            write_csv(
                out / f"deltan_sampled_{m}.csv",
                ["trial", "t_bin", "delta_n_text", "delta_n_fig"],
                dn_rows,
                meta,
            )
        )
    return paths


def cmd_compare(predicted: Path, observed: Path, trial: int | None = None, report: Path | None = None) -> ComparisonReport:
    meta, binned, models = load_bins(Path(predicted))
    if not models:
        raise IngestError(f"{predicted}: no N_<model> columns")
    counts = ingest_counts(Path(observed), trial=trial)
    if len(counts) != len(binned.starts):
        raise GridMismatchError(
            f"observed trace has {len(counts)} bins, prediction has {len(binned.starts)}"
        )
    k_S = float(meta.get("k_S", 1.0))
    result = compare_counts(binned.starts, models, counts.starts, counts.sampled, k_S=k_S)
    if report is not None:
        Path(report).parent.mkdir(parents=True, exist_ok=True)
        Path(report).write_text(json.dumps(result.to_json_dict(), indent=2) + "\n")
    return result


def cmd_skellam(k: int, N1: float, N2: float) -> str:
    p = float(skellam_pmf(k, SkellamParams(N1, N2)))
    return f"{p:.15g}"


def cmd_ingest_check(path: Path, trial: int | None = None) -> str:
    s = ingest_counts(Path(path), trial=trial)
    width = s.edges[1] - s.edges[0]
    return (
        f"{path}: {len(s)} bins of width {width:.6g} starting at {s.starts[0]:.6g}; "
        f"total counts {int(s.sampled.sum())}"
        + (f"; trial {s.trial}" if s.trial is not None else "")
        + (f"; seed {s.seed}" if s.seed is not None else "")
    )
