"""End-to-end runs, sweeps over ``n`` and export of plot data.

One run goes data -> similarity graph -> normalized Laplacian -> spectrum ->
embedding -> (q-)means -> accuracy and cost report.  Every artifact written
is a deterministic function of the configuration.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np
from threadpoolctl import threadpool_limits

from qspectral import clustering, costmodel, datasets, graph, spectral
from qspectral.config import ConfigError, RunConfig
from qspectral.noise import keyed_rng

log = logging.getLogger(__name__)


class PipelineError(RuntimeError):
    """A numerical or data failure, labeled with the pipeline stage that raised it."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


class _Stage:
    def __init__(self, name):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and not isinstance(exc, PipelineError) and isinstance(exc, Exception):
            raise PipelineError(self.name, exc) from exc
        return False


@dataclass
class RunResult:
    record: dict
    data: datasets.DataMatrix
    graph: graph.SimilarityGraph
    embedding: spectral.Embedding
    clustering_input: np.ndarray
    clustering: clustering.ClusteringResult
    cost: costmodel.CostReport


# execution settings that cannot change any result; left out of the recorded config
EXECUTION_ONLY = ("output_dir", "workers")


def provenance(cfg: RunConfig) -> dict:
    """Resolved configuration as embedded in every output record."""
    out = cfg.to_dict()
    out["run"] = {k: v for k, v in out["run"].items() if k not in EXECUTION_ONLY}
    return out


def derive_seed(base_seed: int, n: int, repetition: int) -> int:
    return int(keyed_rng(base_seed, "run", (n, repetition)).integers(2**63))


def load_dataset(cfg: RunConfig, seed: int) -> datasets.DataMatrix:
    ds = cfg.dataset
    if ds.generator == "csv":
        return datasets.load_csv(ds.path)
    return datasets.make_circles(ds.n, ds.radius_inner, ds.radius_outer, ds.noise_sd, seed)


def _prepare_clustering_input(emb: spectral.Embedding, normalize_rows: bool, quantum: bool) -> np.ndarray:
    X = emb.vectors() if quantum else np.array(emb.rows)
    if not quantum:
        return X
    norms = np.linalg.norm(X, axis=1)
    live = norms > 0
    if normalize_rows:
        X = np.where(live[:, None], X / np.where(live, norms, 1.0)[:, None], X)
    elif live.any():
        # distance estimation assumes the smallest nonzero row norm is 1
        X = X / norms[live].min()
    return X


def _wc_report(X, centroids) -> dict:
    nearest = np.sqrt(clustering.sq_distances(X, centroids).min(axis=1))
    sep = clustering.sq_distances(centroids, centroids)
    k = centroids.shape[0]
    xi = float(np.sqrt(sep[np.triu_indices(k, 1)].min())) if k > 1 else 1.0
    beta = float(np.quantile(nearest, 0.9))
    norms = np.linalg.norm(X, axis=1)
    live = norms[norms > 0]
    eta_bound = float((live.max() / live.min()) ** 2) if live.size else 1.0
    rep = clustering.check_well_clusterable(X, centroids, xi=xi, beta=beta, lambda_frac=0.9, eta_bound=eta_bound)
    return rep.to_dict()


def run_pipeline(cfg: RunConfig, seed: Optional[int] = None) -> RunResult:
    """Execute one run; ``seed`` defaults to ``cfg.noise.seed`` and drives every random draw."""
    cfg = cfg.validate()
    seed = cfg.noise.seed if seed is None else int(seed)
    noise = replace(cfg.noise, seed=seed)
    quantum = noise.is_quantum
    k = cfg.spectral.k
    with threadpool_limits(limits=1):
        with _Stage("dataset"):
            S = load_dataset(cfg, seed)
            d_min = cfg.d_min
            if cfg.graph.rescale:
                factor = float(S.row_norms.min())
                S = datasets.rescale_min_norm(S)
                d_min = d_min / factor
            if k >= S.n:
                raise ValueError(f"k={k} must be smaller than n={S.n}")
        with _Stage("graph"):
            G = graph.build_adjacency(S, d_min, noise if quantum else None, workers=cfg.run.workers)
            view = graph.IncidenceView(G, noise.eps_B)
            L = graph.normalized_laplacian(view)
        with _Stage("spectral"):
            model = spectral.eigendecompose(L, gamma=cfg.spectral.gamma)
            if quantum:
                model = spectral.estimate_singular_values(
                    model, noise.eps_lambda, keyed_rng(seed, "eig"),
                    relative=noise.eps_lambda_mode == "relative",
                )
                emb = spectral.project_quantum(model, k, noise.norm_rel_err, keyed_rng(seed, "norm"))
            else:
                emb = spectral.project_classical(model, k)
        with _Stage("clustering"):
            X = _prepare_clustering_input(emb, cfg.spectral.normalize_rows, quantum)
            ccfg = clustering.ClusteringConfig(
                k=k, delta=noise.delta, max_iters=cfg.clustering.max_iters, tol=cfg.clustering.tol, seed=seed
            )
            result = clustering.qmeans(X, ccfg) if quantum else clustering.kmeans(X, ccfg)
            accuracy = None
            misclassified = None
            if S.ground_truth is not None:
                accuracy = clustering.clustering_accuracy(result.labels, S.ground_truth)
                misclassified = int(round((1 - accuracy) * S.n))
            wc = _wc_report(X, result.centroids)
        with _Stage("cost"):
            report = costmodel.build_report(
                n=S.n, d=S.d, k=k, m=G.m, iterations=result.iterations_used,
                points=S.points, view=view,
                # run-time parameters belong to the exact projected Laplacian, not to its noisy estimates
                lk_rows=model.eigenvectors[:, :k] * model.eigenvalues[:k] if quantum else None,
                lk_spectrum=model.eigenvalues[:k] if quantum else None,
                eps_dist=noise.eps_dist, eps_B=noise.eps_B, eps_lambda=noise.eps_lambda, delta=noise.delta,
                c_qram=cfg.cost.c_qram, classical_constants=tuple(cfg.cost.classical),
            )
    record = {
        "config": provenance(cfg),
        "seed": seed,
        "mode": noise.mode,
        "n": S.n,
        "d": S.d,
        "k": k,
        "d_min_effective": d_min,
        "edges": G.m,
        "components": G.n_components(),
        "accuracy": accuracy,
        "misclassified": misclassified,
        "clustering": result.to_dict(),
        "spectral": {
            "selected_indices": [int(i) for i in emb.indices],
            "nu": emb.nu,
            "lowest_eigenvalues": [float(v) for v in model.eigenvalues[: k + 3]],
            "selected_estimates": [float(v) for v in model.estimates[emb.indices]],
            "flagged_rows": int(emb.flagged.sum()) if emb.flagged is not None else 0,
        },
        "well_clusterability": wc,
        "cost": report.to_dict(),
    }
    return RunResult(record, S, G, emb, X, result, report)


def _json_safe(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return _json_safe(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dump_json(obj, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_json_safe(obj), indent=2, sort_keys=True) + "\n")
    return path


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v)) if math.isfinite(v) else "nan"
    return str(v)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def write_embedding_csv(emb: spectral.Embedding, labels, path) -> Path:
    header = [f"e{j}" for j in range(emb.k)] + ["norm"]
    quantum = emb.p00 is not None
    if quantum:
        header.append("p00")
    header.append("label")
    rows = []
    for i in range(emb.rows.shape[0]):
        row = list(emb.rows[i]) + [emb.row_norms[i]]
        if quantum:
            row.append(emb.p00[i])
        row.append(int(labels[i]))
        rows.append(row)
    return write_csv(path, header, rows)


def export_run(result: RunResult, outdir) -> list[Path]:
    """Write the JSON record plus the input-space, spectral-space and edge-list files."""
    outdir = Path(outdir)
    labels = result.clustering.labels
    S = result.data
    header = [f"x{j}" for j in range(S.d)] + ["true_label", "predicted_label"]
    truth = S.ground_truth if S.ground_truth is not None else [None] * S.n
    rows = [list(S.points[i]) + [truth[i], int(labels[i])] for i in range(S.n)]
    return [
        dump_json(result.record, outdir / "result.json"),
        write_csv(outdir / "points.csv", header, rows),
        write_embedding_csv(result.embedding, labels, outdir / "embedding.csv"),
        result.graph.write_edge_list(outdir / "edges.txt"),
    ]


# quantum_cost in the sweep table is the per-iteration cost times the iterations used
SWEEP_FIELDS = costmodel.CSV_FIELDS + (
    "mode", "repetition", "misclassified", "quantum_cost_per_iteration", "quantum_cost_general", "iterations",
)


def _sweep_row(record: dict, repetition: int) -> dict:
    cost = record["cost"]
    return {
        "n": record["n"], "d": record["d"], "k": record["k"], "m": record["edges"],
        "mu": cost["mu_B"], "eta_S": cost["eta_S"], "eta_Lk": cost["eta_Lk"], "kappa_Lk": cost["kappa_Lk"],
        "classical_cost": cost["classical_cost"], "quantum_cost": cost["quantum_cost_total"],
        "quantum_cost_per_iteration": cost["quantum_cost"],
        "accuracy": record["accuracy"], "seed": record["seed"], "mode": record["mode"],
        "repetition": repetition, "misclassified": record["misclassified"],
        "quantum_cost_general": cost["quantum_cost_general"], "iterations": cost["iterations"],
    }


def _sweep_job(args):
    cfg, n, rep = args
    cfg_n = replace(cfg, dataset=replace(cfg.dataset, n=n))
    seed = derive_seed(cfg.noise.seed, n, rep)
    return _sweep_row(run_pipeline(cfg_n, seed).record, rep)


@dataclass
class SweepResult:
    rows: list
    summary: dict


def summarize(rows: list, config: Optional[dict] = None) -> dict:
    """Accuracy mean/sd per ``n``, log-log cost slopes and the fitted crossover."""
    ns = sorted({r["n"] for r in rows})
    per_n = []
    for n in ns:
        sub = [r for r in rows if r["n"] == n]
        acc = np.array([r["accuracy"] for r in sub if r["accuracy"] is not None], dtype=float)
        q = np.array([r["quantum_cost"] for r in sub], dtype=float)
        q = q[np.isfinite(q)]
        per_n.append({
            "n": n,
            "runs": len(sub),
            "accuracy_mean": float(acc.mean()) if acc.size else None,
            "accuracy_sd": float(acc.std()) if acc.size else None,
            "accuracy_min": float(acc.min()) if acc.size else None,
            "classical_cost": float(np.mean([r["classical_cost"] for r in sub])),
            "quantum_cost_mean": float(q.mean()) if q.size else None,
            "quantum_cost_sd": float(q.std()) if q.size else None,
            "quantum_cost_defined": int(q.size),
        })
    x = [r["n"] for r in rows]
    c_fit = costmodel.loglog_slope(x, [r["classical_cost"] for r in rows])
    q_fit = costmodel.loglog_slope(x, [r["quantum_cost"] for r in rows])
    return {
        "config": config,
        "per_n": per_n,
        "classical_slope": c_fit[0],
        "classical_intercept": c_fit[1],
        "quantum_slope": q_fit[0],
        "quantum_intercept": q_fit[1],
        "crossover_n": costmodel.crossover_n(c_fit, q_fit),
    }


def run_sweep(cfg: RunConfig, workers: Optional[int] = None) -> SweepResult:
    """Run every ``(n, repetition)`` of the sweep; results do not depend on ``workers``."""
    cfg = cfg.validate()
    if not cfg.run.sweep:
        raise ConfigError("run.sweep is empty; set run.sweep = n1, n2, ...")
    jobs = [(cfg, n, rep) for n in cfg.run.sweep for rep in range(cfg.run.repetitions)]
    workers = cfg.run.workers if workers is None else workers
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            rows = list(pool.map(_sweep_job, jobs))
    else:
        rows = [_sweep_job(j) for j in jobs]
    return SweepResult(rows, summarize(rows, provenance(cfg)))


def cost_curves(rows: list) -> list:
    out = []
    for n in sorted({r["n"] for r in rows}):
        sub = [r for r in rows if r["n"] == n]
        q = np.array([r["quantum_cost"] for r in sub], dtype=float)
        q = q[np.isfinite(q)]
        out.append([n, float(np.mean([r["classical_cost"] for r in sub])),
                    float(q.mean()) if q.size else float("nan"),
                    float(q.std()) if q.size else float("nan")])
    return out


def export_sweep(sweep: SweepResult, outdir) -> list[Path]:
    outdir = Path(outdir)
    if not sweep.rows:
        log.warning("no sweep results to export")
        return []
    return [
        write_csv(outdir / "sweep.csv", SWEEP_FIELDS, [[r[f] for f in SWEEP_FIELDS] for r in sweep.rows]),
        dump_json(sweep.summary, outdir / "summary.json"),
        write_csv(outdir / "cost_curves.csv", ["n", "classical", "quantum_mean", "quantum_sd"], cost_curves(sweep.rows)),
    ]


def export_plotdata(results, outdir) -> list[Path]:
    """Plot-ready CSVs for a single run (points, embedding, edges) or a sweep (cost curves)."""
    if results is None or (isinstance(results, (list, tuple)) and not results):
        log.warning("no results to export")
        return []
    if isinstance(results, SweepResult):
        return export_sweep(results, outdir)
    if isinstance(results, RunResult):
        return export_run(results, outdir)
    paths = []
    for i, res in enumerate(results):
        paths += export_plotdata(res, Path(outdir) / f"run{i:03d}")
    return paths


def read_sweep_csv(path) -> list:
    rows = []
    with Path(path).open(newline="") as fh:
        for raw in csv.DictReader(fh):
            row = {}
            for key, value in raw.items():
                if key == "mode":
                    row[key] = value
                elif value == "":
                    row[key] = None
                elif key in ("n", "d", "k", "m", "seed", "repetition", "misclassified", "iterations"):
                    row[key] = int(value)
                else:
                    row[key] = float(value)
            rows.append(row)
    return rows
