"""Experiment harness: Monte-Carlo verification that OLS on the synthetic
ablated datasets converges to the closed-form penalized solutions, lambda
sweeps that trace how the two penalties respond to each augmentation mode,
and deterministic CSV/JSON report emission.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace as dc_replace

import numpy as np
from scipy.stats import spearmanr

from .attribution import AttributionConfig, as_contributions, integrated_gradients
from .augment import INVERTED_DROPOUT, MEAN_ABLATION, AugmentSpec, build_augmented
from .dataset import (
    CLASSIFICATION,
    REGRESSION,
    Dataset,
    SplitSpec,
    feature_stats,
    split,
    standardize,
)
from .linear import SingularModelError, fit_ccp, fit_ml2p, fit_ols
from .nn import (
    MlpModel,
    TrainConfig,
    TrainingDivergedError,
    evaluate,
    init,
    linear_as_mlp,
    train,
)
from .penalty import ccp_from_attributions, ml2p_from_avg_gradients
from ._streams import child_seed


# ---------------------------------------------------------------------------
# Theorem convergence
# ---------------------------------------------------------------------------


def _nanstat(fn, values) -> float:
    values = np.asarray(values, dtype=np.float64)
    if not np.any(np.isfinite(values)):
        return float("nan")
    return float(fn(values))


@dataclass
class ConvergenceRun:
    """Distances between the Monte-Carlo OLS fits and the closed-form target,
    one row per (seed, N), plus the worst elementwise residual of the
    augmented second moments against their almost-sure limits."""

    theorem: int
    mode: str
    lam: float
    n_schedule: tuple[int, ...]
    seeds: tuple[int, ...]
    target_beta: np.ndarray
    dist_l2: np.ndarray
    dist_linf: np.ndarray
    gram_resid: np.ndarray
    cross_resid: np.ndarray
    failures: list = field(default_factory=list)

    def median_l2(self) -> np.ndarray:
        return np.array([_nanstat(np.nanmedian, col) for col in self.dist_l2.T])

    def median_linf(self) -> np.ndarray:
        return np.array([_nanstat(np.nanmedian, col) for col in self.dist_linf.T])

    def loglog_slope(self) -> float:
        """Least-squares slope of log(median l2 distance) against log(N)."""
        med = self.median_l2()
        keep = np.isfinite(med) & (med > 0)
        if keep.sum() < 2:
            return float("nan")
        return float(np.polyfit(np.log(np.asarray(self.n_schedule)[keep]), np.log(med[keep]), 1)[0])

    def check(self, linf_tolerance: float = 0.02) -> tuple[bool, list[str]]:
        """Final-N accuracy and monotone median decay, as pass/fail messages."""
        problems = []
        final = self.dist_linf[:, -1]
        if not np.all(np.isfinite(final)):
            problems.append("some final-N fits failed")
        elif final.max() > linf_tolerance:
            problems.append(
                f"max final Linf distance {final.max():.4g} exceeds {linf_tolerance}"
            )
        med = self.median_l2()
        if np.any(np.diff(med) > 0):
            problems.append("median L2 distance is not non-increasing over the N schedule")
        return (not problems), problems


def _moment_limits(d: Dataset, mode: str, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """Almost-sure limits of the augmented per-row centered second moments."""
    stats = feature_stats(d)
    Xc = d.features - stats.means
    yc = d.response - d.response.mean()
    cov = Xc.T @ Xc / d.n
    cross = Xc.T @ yc / d.n
    if mode == MEAN_ABLATION:
        gram_limit = (1.0 - lam) ** 2 * cov + lam * (1.0 - lam) * np.diag(stats.variances)
        cross_limit = (1.0 - lam) * cross
    else:
        gram_limit = cov + (lam / (1.0 - lam)) * np.diag(stats.second_moments)
        cross_limit = cross.copy()
    return gram_limit, cross_limit


def _empirical_moments(aug: Dataset) -> tuple[np.ndarray, np.ndarray]:
    Xc = aug.features - aug.features.mean(axis=0)
    yc = aug.response - aug.response.mean()
    return Xc.T @ Xc / aug.n, Xc.T @ yc / aug.n


def _converge(d: Dataset, theorem: int, lam: float, n_schedule, seeds) -> ConvergenceRun:
    n_schedule = tuple(int(v) for v in n_schedule)
    if any(b <= a for a, b in zip(n_schedule, n_schedule[1:])):
        raise ValueError("N schedule must be strictly increasing")
    seeds = tuple(int(s) for s in seeds)
    if theorem == 1:
        mode = MEAN_ABLATION
        target = fit_ccp(d, lam).model.beta
    elif theorem == 2:
        mode = INVERTED_DROPOUT
        target = fit_ml2p(d, lam).model.beta
    else:
        raise ValueError("theorem must be 1 or 2")
    gram_limit, cross_limit = _moment_limits(d, mode, lam)

    shape = (len(seeds), len(n_schedule))
    dist_l2 = np.full(shape, np.nan)
    dist_linf = np.full(shape, np.nan)
    gram_resid = np.full(shape, np.nan)
    cross_resid = np.full(shape, np.nan)
    failures = []
    for i, seed in enumerate(seeds):
        for j, n_syn in enumerate(n_schedule):
            aug = build_augmented(d, AugmentSpec(mode, lam, n_syn, seed))
            gram, cross = _empirical_moments(aug)
            gram_resid[i, j] = np.abs(gram - gram_limit).max()
            cross_resid[i, j] = np.abs(cross - cross_limit).max()
            try:
                beta = fit_ols(aug).beta
            except SingularModelError as err:
                failures.append({"seed": seed, "N": n_syn, "error": str(err)})
                continue
            delta = beta - target
            dist_l2[i, j] = np.linalg.norm(delta)
            dist_linf[i, j] = np.abs(delta).max()
    return ConvergenceRun(
        theorem=theorem,
        mode=mode,
        lam=lam,
        n_schedule=n_schedule,
        seeds=seeds,
        target_beta=target,
        dist_l2=dist_l2,
        dist_linf=dist_linf,
        gram_resid=gram_resid,
        cross_resid=cross_resid,
        failures=failures,
    )


def converge_theorem1(d: Dataset, lam: float, n_schedule, seeds) -> ConvergenceRun:
    """Mean ablation: OLS on the synthetic set against the closed-form
    contribution-covariance solution."""
    return _converge(d, 1, lam, n_schedule, seeds)


def converge_theorem2(d: Dataset, lam: float, n_schedule, seeds) -> ConvergenceRun:
    """Inverted input dropout: OLS on the synthetic set against the
    closed-form second-moment-L2 solution."""
    return _converge(d, 2, lam, n_schedule, seeds)


@dataclass(frozen=True)
class MomentCheck:
    """Elementwise comparison of empirical augmented moments with their
    limits, in units of the Monte-Carlo standard error."""

    mode: str
    lam: float
    n_synthetic: int
    gram_sigmas: np.ndarray
    cross_sigmas: np.ndarray
    n_sigma: float

    @property
    def ok(self) -> bool:
        return bool(
            np.all(self.gram_sigmas <= self.n_sigma)
            and np.all(self.cross_sigmas <= self.n_sigma)
        )

    @property
    def worst_sigma(self) -> float:
        return float(max(self.gram_sigmas.max(), self.cross_sigmas.max()))


def check_moment_limits(
    d: Dataset, mode: str, lam: float, n_synthetic: int, seed: int, n_sigma: float = 3.0
) -> MomentCheck:
    """Verify the augmented Gram and cross moments against their limits,
    elementwise, within ``n_sigma`` empirical standard errors."""
    aug = build_augmented(d, AugmentSpec(mode, lam, n_synthetic, seed))
    gram_limit, cross_limit = _moment_limits(d, mode, lam)
    Xc = aug.features - aug.features.mean(axis=0)
    yc = aug.response - aug.response.mean()
    n_syn = aug.n
    k = aug.k

    gram_sigmas = np.zeros((k, k))
    for a in range(k):
        for b in range(a, k):
            products = Xc[:, a] * Xc[:, b]
            se = products.std() / math.sqrt(n_syn)
            err = abs(products.mean() - gram_limit[a, b])
            gram_sigmas[a, b] = gram_sigmas[b, a] = err / se if se > 0 else 0.0
    cross_sigmas = np.zeros(k)
    for a in range(k):
        products = Xc[:, a] * yc
        se = products.std() / math.sqrt(n_syn)
        err = abs(products.mean() - cross_limit[a])
        cross_sigmas[a] = err / se if se > 0 else 0.0
    return MomentCheck(
        mode=mode,
        lam=lam,
        n_synthetic=n_synthetic,
        gram_sigmas=gram_sigmas,
        cross_sigmas=cross_sigmas,
        n_sigma=n_sigma,
    )


# ---------------------------------------------------------------------------
# Lambda sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepCell:
    depth: int
    lam: float
    seed: int
    output_index: int
    metric: float
    ccp: float
    ml2p: float
    error: str | None = None


@dataclass
class SweepResult:
    dataset_id: str
    task: str
    mode: str
    depths: tuple[int, ...]
    lambda_grid: tuple[float, ...]
    seeds: tuple[int, ...]
    hidden_width: int
    cells: list[SweepCell] = field(default_factory=list)

    def output_indices(self) -> tuple[int, ...]:
        return tuple(sorted({c.output_index for c in self.cells}))

    def seed_values(self, fld: str, depth: int, lam: float, output_index: int) -> np.ndarray:
        vals = [
            getattr(c, fld)
            for c in self.cells
            if c.depth == depth and c.lam == lam and c.output_index == output_index
            and c.error is None
        ]
        return np.asarray(vals, dtype=np.float64)

    def mean_over_seeds(self, fld: str, depth: int, lam: float, output_index: int = 0) -> float:
        vals = self.seed_values(fld, depth, lam, output_index)
        return float(vals.mean()) if vals.size else float("nan")


def lambda_sweep(
    d: Dataset,
    depths,
    mode: str,
    lambda_grid,
    seeds,
    cfg: TrainConfig | None = None,
    *,
    dataset_id: str = "dataset",
    hidden_width: int = 100,
    attribution_steps: int = 100,
    depth0_closed_form: bool = True,
) -> SweepResult:
    """Train one model per (depth, lambda, seed), then score the test split:
    the task metric, CCP from integrated gradients (zero baseline on the
    standardized features) and ML2P from the path-averaged gradients.

    Per the experimental protocol, depth-0 regression models default to the
    closed-form solution equivalent to the requested augmentation mode; pass
    ``depth0_closed_form=False`` to train them with SGD instead.  Each seed
    drives the split, the initialization, the shuffling and the ablation
    masks; failed cells are recorded with their error instead of aborting
    the sweep.
    """
    cfg = cfg or TrainConfig()
    depths = tuple(int(v) for v in depths)
    lambda_grid = tuple(float(v) for v in lambda_grid)
    seeds = tuple(int(s) for s in seeds)
    if any(not 0.0 <= lam < 1.0 for lam in lambda_grid):
        raise ValueError("lambda grid values must lie in [0, 1)")
    if d.task == CLASSIFICATION:
        n_out = int(d.response.max()) + 1
        output_indices = tuple(range(n_out))
    else:
        n_out = 1
        output_indices = (0,)

    result = SweepResult(
        dataset_id=dataset_id,
        task=d.task,
        mode=mode,
        depths=depths,
        lambda_grid=lambda_grid,
        seeds=seeds,
        hidden_width=hidden_width,
    )
    for seed in seeds:
        d_train, d_val, d_test = split(d, SplitSpec(seed=seed))
        d_train, stats = standardize(d_train)
        d_val, _ = standardize(d_val, stats)
        d_test, _ = standardize(d_test, stats)
        test_stats = feature_stats(d_test.features)
        for depth in depths:
            for lam_index, lam in enumerate(lambda_grid):
                cell_seed = child_seed(seed, depth, lam_index)
                try:
                    model = _fit_cell(
                        d_train, d_val, depth, lam, mode, cfg, cell_seed,
                        hidden_width, n_out, depth0_closed_form,
                    )
                except (SingularModelError, TrainingDivergedError) as err:
                    for oi in output_indices:
                        result.cells.append(SweepCell(
                            depth=depth, lam=lam, seed=seed, output_index=oi,
                            metric=float("nan"), ccp=float("nan"), ml2p=float("nan"),
                            error=str(err),
                        ))
                    continue
                metrics = evaluate(model, d_test)
                metric = metrics.get("mse", metrics.get("accuracy"))
                for oi in output_indices:
                    attr = integrated_gradients(
                        model,
                        d_test.features,
                        AttributionConfig(steps=attribution_steps, output_index=oi),
                    )
                    result.cells.append(SweepCell(
                        depth=depth, lam=lam, seed=seed, output_index=oi,
                        metric=float(metric),
                        ccp=ccp_from_attributions(as_contributions(attr)),
                        ml2p=ml2p_from_avg_gradients(attr.avg_gradients, test_stats),
                    ))
    return result


def _fit_cell(
    d_train, d_val, depth, lam, mode, cfg, cell_seed, hidden_width, n_out, depth0_closed_form
) -> MlpModel:
    if depth == 0 and d_train.task == REGRESSION and depth0_closed_form:
        if lam == 0.0:
            fit = fit_ols(d_train)
            return linear_as_mlp(fit.beta, fit.intercept)
        solver = fit_ccp if mode == MEAN_ABLATION else fit_ml2p
        fit = solver(d_train, lam)
        return linear_as_mlp(fit.model.beta, fit.model.intercept)
    dims = [d_train.k] + [hidden_width] * depth + [n_out]
    model = init(dims, seed=cell_seed, task=d_train.task)
    run_cfg = dc_replace(
        cfg,
        seed=cell_seed,
        augment=AugmentSpec(mode, lam, 1, cell_seed),
    )
    trained, _ = train(model, d_train, d_val, run_cfg)
    return trained


@dataclass(frozen=True)
class TrendEntry:
    depth: int
    output_index: int
    spearman: float
    first_mean: float
    last_mean: float


def penalty_trend(sweep: SweepResult, penalty_field: str) -> dict:
    """Spearman rank correlation between lambda and the seed-averaged
    penalty, per (depth, output) and pooled over depths."""
    if penalty_field not in ("ccp", "ml2p"):
        raise ValueError("penalty_field must be 'ccp' or 'ml2p'")
    entries = []
    pooled_x = []
    pooled_y = []
    for depth in sweep.depths:
        for oi in sweep.output_indices():
            means = [
                sweep.mean_over_seeds(penalty_field, depth, lam, oi)
                for lam in sweep.lambda_grid
            ]
            rho = spearmanr(sweep.lambda_grid, means).statistic
            entries.append(TrendEntry(
                depth=depth, output_index=oi, spearman=float(rho),
                first_mean=means[0], last_mean=means[-1],
            ))
            pooled_x.extend(sweep.lambda_grid)
            pooled_y.extend(means)
    pooled = float(spearmanr(pooled_x, pooled_y).statistic) if len(pooled_x) > 1 else float("nan")
    return {"per_depth": entries, "pooled_spearman": pooled}


@dataclass
class CrossTrendReport:
    """The "reverse is not true" diagnostics: under mean ablation the
    second-moment penalty should rise with lambda, while inverted dropout
    pushes the covariance penalty's magnitude toward zero."""

    ml2p_under_mean_ablation: list[TrendEntry]
    ccp_abs_under_dropout: list[dict]
    zero_contrast: bool

    def ml2p_rises(self, min_spearman: float = 0.5) -> bool:
        return all(e.spearman >= min_spearman for e in self.ml2p_under_mean_ablation)

    def ccp_contracts(self) -> bool:
        return all(row["abs_last"] <= row["abs_first"] for row in self.ccp_abs_under_dropout)


def cross_trend_check(sweep_mada: SweepResult, sweep_iid: SweepResult) -> CrossTrendReport:
    """Compare the two modes' sweeps on the same grid."""
    same_shape = (
        sweep_mada.depths == sweep_iid.depths
        and sweep_mada.lambda_grid == sweep_iid.lambda_grid
        and sweep_mada.seeds == sweep_iid.seeds
    )
    if not same_shape:
        raise ValueError("sweeps must share depths, lambda grid and seeds")

    ml2p_trend = penalty_trend(sweep_mada, "ml2p")["per_depth"]
    lam_first, lam_last = sweep_iid.lambda_grid[0], sweep_iid.lambda_grid[-1]
    ccp_rows = []
    for depth in sweep_iid.depths:
        for oi in sweep_iid.output_indices():
            ccp_rows.append({
                "depth": depth,
                "output_index": oi,
                "abs_first": abs(sweep_iid.mean_over_seeds("ccp", depth, lam_first, oi)),
                "abs_last": abs(sweep_iid.mean_over_seeds("ccp", depth, lam_last, oi)),
            })

    cells_a = [(c.depth, c.lam, c.seed, c.output_index, c.metric, c.ccp, c.ml2p)
               for c in sweep_mada.cells]
    cells_b = [(c.depth, c.lam, c.seed, c.output_index, c.metric, c.ccp, c.ml2p)
               for c in sweep_iid.cells]
    return CrossTrendReport(
        ml2p_under_mean_ablation=ml2p_trend,
        ccp_abs_under_dropout=ccp_rows,
        zero_contrast=cells_a == cells_b,
    )


# ---------------------------------------------------------------------------
# Report emission
# ---------------------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))  # plain-float repr even for numpy scalars
    return str(value)


def _csv_lines(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def _stderr(values: np.ndarray) -> float:
    values = values[np.isfinite(values)]
    if values.size <= 1:
        return 0.0
    return float(values.std(ddof=1) / math.sqrt(values.size))


def _sweep_rows(result: SweepResult):
    header = ["kind", "dataset", "task", "mode", "depth", "lambda", "seed",
              "output_index", "metric", "ccp", "ml2p",
              "metric_stderr", "ccp_stderr", "ml2p_stderr", "error"]
    rows = []
    for c in result.cells:
        rows.append(["cell", result.dataset_id, result.task, result.mode, c.depth,
                     c.lam, c.seed, c.output_index, c.metric, c.ccp, c.ml2p,
                     "", "", "", c.error or ""])
    for depth in result.depths:
        for lam in result.lambda_grid:
            for oi in result.output_indices():
                means = []
                stderrs = []
                for fld in ("metric", "ccp", "ml2p"):
                    vals = result.seed_values(fld, depth, lam, oi)
                    means.append(float(vals.mean()) if vals.size else float("nan"))
                    stderrs.append(_stderr(vals))
                rows.append(["aggregate", result.dataset_id, result.task, result.mode,
                             depth, lam, "", oi, means[0], means[1], means[2],
                             stderrs[0], stderrs[1], stderrs[2], ""])
    return header, rows


def _convergence_rows(run: ConvergenceRun):
    header = ["kind", "theorem", "mode", "lambda", "N", "seed",
              "dist_l2", "dist_linf", "gram_resid", "cross_resid",
              "dist_l2_median", "dist_linf_median", "dist_l2_stderr", "dist_linf_stderr"]
    rows = []
    for i, seed in enumerate(run.seeds):
        for j, n_syn in enumerate(run.n_schedule):
            rows.append(["cell", run.theorem, run.mode, run.lam, n_syn, seed,
                         float(run.dist_l2[i, j]), float(run.dist_linf[i, j]),
                         float(run.gram_resid[i, j]), float(run.cross_resid[i, j]),
                         "", "", "", ""])
    for j, n_syn in enumerate(run.n_schedule):
        rows.append(["aggregate", run.theorem, run.mode, run.lam, n_syn, "",
                     _nanstat(np.nanmean, run.dist_l2[:, j]),
                     _nanstat(np.nanmean, run.dist_linf[:, j]),
                     _nanstat(np.nanmean, run.gram_resid[:, j]),
                     _nanstat(np.nanmean, run.cross_resid[:, j]),
                     _nanstat(np.nanmedian, run.dist_l2[:, j]),
                     _nanstat(np.nanmedian, run.dist_linf[:, j]),
                     _stderr(run.dist_l2[:, j]),
                     _stderr(run.dist_linf[:, j])])
    return header, rows


def _cross_rows(report: CrossTrendReport):
    header = ["kind", "depth", "output_index", "ml2p_mada_spearman",
              "ml2p_mada_first", "ml2p_mada_last", "ccp_iid_abs_first",
              "ccp_iid_abs_last", "zero_contrast"]
    ccp_by_key = {(r["depth"], r["output_index"]): r for r in report.ccp_abs_under_dropout}
    rows = []
    for entry in report.ml2p_under_mean_ablation:
        ccp = ccp_by_key.get((entry.depth, entry.output_index), {})
        rows.append(["cross", entry.depth, entry.output_index, entry.spearman,
                     entry.first_mean, entry.last_mean,
                     ccp.get("abs_first", float("nan")),
                     ccp.get("abs_last", float("nan")),
                     report.zero_contrast])
    return header, rows


def render_report(result, fmt: str = "csv") -> str:
    """Serialize a harness result deterministically (re-rendering the same
    result is byte-identical)."""
    if isinstance(result, SweepResult):
        header, rows = _sweep_rows(result)
        meta = {
            "type": "sweep", "dataset": result.dataset_id, "task": result.task,
            "mode": result.mode, "depths": list(result.depths),
            "lambda_grid": list(result.lambda_grid), "seeds": list(result.seeds),
            "hidden_width": result.hidden_width,
        }
    elif isinstance(result, ConvergenceRun):
        header, rows = _convergence_rows(result)
        meta = {
            "type": "convergence", "theorem": result.theorem, "mode": result.mode,
            "lambda": result.lam, "n_schedule": list(result.n_schedule),
            "seeds": list(result.seeds), "target_beta": result.target_beta.tolist(),
            "failures": result.failures,
        }
    elif isinstance(result, CrossTrendReport):
        header, rows = _cross_rows(result)
        meta = {"type": "cross_trend", "zero_contrast": result.zero_contrast}
    else:
        raise TypeError(f"cannot render a report for {type(result).__name__}")

    if fmt == "csv":
        return _csv_lines(header, rows)
    if fmt == "json":
        payload = {
            "meta": meta,
            "columns": header,
            "rows": [[None if (isinstance(v, float) and math.isnan(v)) else v for v in row]
                     for row in rows],
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"
    raise ValueError(f"format must be 'csv' or 'json', got {fmt!r}")


def emit_report(result, fmt: str = "csv", path=None):
    """Write the rendered report to ``path`` and return the path."""
    if path is None:
        raise ValueError("emit_report needs an output path")
    text = render_report(result, fmt)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def sweep_from_payload(payload: dict) -> SweepResult:
    """Rebuild a :class:`SweepResult` from its JSON report payload."""
    meta = payload["meta"]
    if meta.get("type") != "sweep":
        raise ValueError("payload is not a sweep report")
    columns = payload["columns"]
    col = {name: i for i, name in enumerate(columns)}
    result = SweepResult(
        dataset_id=meta["dataset"],
        task=meta["task"],
        mode=meta["mode"],
        depths=tuple(meta["depths"]),
        lambda_grid=tuple(meta["lambda_grid"]),
        seeds=tuple(meta["seeds"]),
        hidden_width=meta["hidden_width"],
    )
    for row in payload["rows"]:
        if row[col["kind"]] != "cell":
            continue

        def num(name):
            value = row[col[name]]
            return float("nan") if value is None else float(value)

        result.cells.append(SweepCell(
            depth=int(row[col["depth"]]),
            lam=float(row[col["lambda"]]),
            seed=int(row[col["seed"]]),
            output_index=int(row[col["output_index"]]),
            metric=num("metric"),
            ccp=num("ccp"),
            ml2p=num("ml2p"),
            error=(row[col["error"]] or None),
        ))
    return result
