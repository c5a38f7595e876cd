"""
Scoring of decompositions against known mixture ground truth.
"""

import logging
import os
from dataclasses import dataclass
from functools import partial

import numpy as np
import pandas as pd

from pxrdsep.algorithms.peaks import detect_peaks, match_peaks, peak_metrics
from pxrdsep.errors import DegenerateInput, GridMismatch
from pxrdsep.evaluation.retrieval import retrieve_topk
from pxrdsep.io.common import parallel_map
from pxrdsep.io.patterns import write_pattern_text
from pxrdsep.pattern import DiffractionPattern
from pxrdsep.training.losses import LossWeights, separation_costs
from pxrdsep.training.pit import best_assignment
from pxrdsep.utils.stats import pearson

logger = logging.getLogger("ps.evaluation")

COMPONENT_COLUMNS = [
    "sample",
    "K",
    "target",
    "slot",
    "component_id",
    "pearson",
    "peak_shift",
    "fwhm_error",
    "n_pairs",
    "n_unmatched",
    "top1",
    "top10",
    "fraction_true",
    "fraction_pred",
]
SAMPLE_COLUMNS = ["sample", "K", "mix_l1", "fraction_mae", "n_active", "count_correct"]


@dataclass(frozen=True)
class EvalConfig:
    """
    Evaluation settings.

    Attributes
    ----------
    tau : float
        Activity threshold for the predicted phase count
    min_height : float
        Peak detection threshold as a fraction of the pattern maximum
    min_separation : float
        Minimum peak distance in degrees
    match_tol : float
        Peak matching tolerance in degrees
    candidates : int
        Cosine shortlist size M of retrieval
    top_k : int
        Retrieval depth counted as a Top-k hit
    n_mixtures : int
        Test mixtures drawn when none are supplied
    use_ema : bool
        Evaluate the averaged weights of a checkpoint
    plot_data : bool
        Write per-sample overlay files
    """

    tau: float = 0.5
    min_height: float = 0.05
    min_separation: float = 0.2
    match_tol: float = 0.5
    candidates: int = 64
    top_k: int = 10
    n_mixtures: int = 32
    use_ema: bool = True
    plot_data: bool = True

    def __post_init__(self):
        if not 1 <= self.top_k <= self.candidates:
            raise ValueError(
                f"top_k ({self.top_k}) must lie within "
                f"[1, candidates={self.candidates}]"
            )
        if self.match_tol <= 0.0 or self.min_separation <= 0.0:
            raise ValueError("match_tol and min_separation must be positive")


def estimate_fractions(components, references):
    """
    Phase fractions from decomposed components.

    Each component is fit to its reference pattern by a least-squares scale
    and the scales are normalized to sum to one.

    Parameters
    ----------
    components : np.ndarray
        (N, L) predicted per-phase contributions
    references : np.ndarray
        (N, L) single-phase reference patterns

    Returns
    -------
    np.ndarray
        (N,) fractions; NaN when every scale is zero
    """
    components = np.atleast_2d(np.asarray(components, dtype=np.float64))
    references = np.atleast_2d(np.asarray(references, dtype=np.float64))
    if components.shape != references.shape:
        raise GridMismatch(
            f"Components {components.shape} and references {references.shape} differ"
        )
    energy = np.einsum("kl,kl->k", references, references)
    dot = np.einsum("kl,kl->k", components, references)
    with np.errstate(divide="ignore", invalid="ignore"):
        scales = np.maximum(np.where(energy > 0.0, dot / energy, 0.0), 0.0)
    total = scales.sum()
    if total <= 0.0:
        return np.full(len(scales), np.nan)
    return scales / total


def fraction_mae(estimated, true):
    """Mean absolute difference of two fraction vectors (NaN if undefined)"""
    estimated = np.asarray(estimated, dtype=np.float64)
    true = np.asarray(true, dtype=np.float64) / np.sum(true)
    if np.any(np.isnan(estimated)):
        return np.nan
    return float(np.mean(np.abs(estimated - true)))


def _safe_pearson(a, b):
    try:
        return pearson(a, b)
    except DegenerateInput:
        return np.nan


def _score_sample(item, cfg, weights, index):
    """Rows of one sample: a list of component rows and one sample row"""
    number, sample, prediction = item
    grid = sample.mixed.grid
    prediction = np.maximum(np.asarray(prediction, dtype=np.float64), 0.0)
    if prediction.ndim != 2 or prediction.shape[1] != grid.length:
        raise GridMismatch(
            f"Prediction of shape {prediction.shape} does not fit grid {grid}"
        )
    targets = sample.contributions
    N = sample.active_count
    assignment, _ = best_assignment(separation_costs(prediction, targets, weights))
    matched = prediction[list(assignment)]
    references = sample.component_matrix()[:N]
    fractions = estimate_fractions(matched, references)
    true_fractions = sample.weights / sample.weights.sum()

    rows = []
    for k, slot in enumerate(assignment):
        pred, truth = matched[k], targets[k]
        pred_peaks = detect_peaks(
            DiffractionPattern.on_grid(grid, pred), cfg.min_height, cfg.min_separation
        )
        true_peaks = detect_peaks(
            DiffractionPattern.on_grid(grid, truth), cfg.min_height, cfg.min_separation
        )
        pairs = match_peaks(pred_peaks, true_peaks, cfg.match_tol)
        shift, width = peak_metrics(pairs)

        top1 = top10 = np.nan
        if index is not None:
            top1 = top10 = 0.0
            if np.any(pred > 0.0):
                M = min(cfg.candidates, len(index))
                ids = retrieve_topk(pred, index, M=M, k=min(cfg.top_k, M))
                top1 = float(ids[0] == sample.component_ids[k])
                top10 = float(sample.component_ids[k] in ids)

        rows.append(
            {
                "sample": number,
                "K": N,
                "target": k,
                "slot": slot,
                "component_id": sample.component_ids[k],
                "pearson": _safe_pearson(pred, truth),
                "peak_shift": shift,
                "fwhm_error": width,
                "n_pairs": len(pairs),
                "n_unmatched": len(true_peaks) - len(pairs),
                "top1": top1,
                "top10": top10,
                "fraction_true": float(true_fractions[k]),
                "fraction_pred": float(fractions[k]),
            }
        )

    residual = prediction.sum(axis=0) - sample.mixed.intensities
    summary = {
        "sample": number,
        "K": N,
        "mix_l1": float(np.mean(np.abs(residual))),
        "fraction_mae": fraction_mae(fractions, sample.weights),
        "n_active": np.nan,
        "count_correct": np.nan,
    }
    return rows, summary


@dataclass(frozen=True)
class EvalReport:
    """
    Per-component and per-sample scores of an evaluation run.

    Attributes
    ----------
    components : pd.DataFrame
        One row per ground-truth phase with its matched slot and metrics
    samples : pd.DataFrame
        One row per mixture with reconstruction and fraction errors
    """

    components: pd.DataFrame
    samples: pd.DataFrame

    def per_k(self):
        """
        Aggregate table indexed by K with an ``all`` row.

        Means skip undefined (NaN) values; the ``n_undefined_*`` columns
        count what was skipped. Retrieval hit rates are percentages.
        """
        def aggregate(components, samples):
            row = {
                "n_samples": len(samples),
                "n_components": len(components),
                "pearson": components["pearson"].mean(),
                "peak_shift": components["peak_shift"].mean(),
                "fwhm_error": components["fwhm_error"].mean(),
                "top1": 100.0 * components["top1"].mean(),
                "top10": 100.0 * components["top10"].mean(),
                "mix_l1": samples["mix_l1"].mean(),
                "fraction_mae": samples["fraction_mae"].mean(),
                "count_accuracy": 100.0 * samples["count_correct"].mean(),
                "n_undefined_pearson": int(components["pearson"].isna().sum()),
                "n_undefined_peaks": int(components["peak_shift"].isna().sum()),
            }
            return row

        rows = {}
        sample_groups = dict(tuple(self.samples.groupby("K")))
        for K, group in self.components.groupby("K"):
            rows[str(K)] = aggregate(group, sample_groups[K])
        rows["all"] = aggregate(self.components, self.samples)
        return pd.DataFrame.from_dict(rows, orient="index")

    def summary(self):
        """Overall aggregates as a plain dict"""
        return self.per_k().loc["all"].to_dict()

    def to_text(self):
        table = self.per_k()
        return table.to_string(float_format=lambda v: f"{v:.4f}")

    def to_keyvalue(self):
        """``key=value`` lines, one per (K, metric)"""
        lines = []
        for K, row in self.per_k().iterrows():
            for name, value in row.items():
                lines.append(f"{K}.{name}={float(value):.10g}")
        return "\n".join(lines) + "\n"

    def write(self, directory):
        """Write ``report.txt``, ``summary.txt`` and the raw tables"""
        os.makedirs(directory, exist_ok=True)
        with open(os.path.join(directory, "report.txt"), "w") as f:
            f.write(self.to_text() + "\n")
        with open(os.path.join(directory, "summary.txt"), "w") as f:
            f.write(self.to_keyvalue())
        self.components.to_csv(
            os.path.join(directory, "components.csv"), index=False, float_format="%.10g"
        )
        self.samples.to_csv(
            os.path.join(directory, "samples.csv"), index=False, float_format="%.10g"
        )


def predict(model, samples, tau=None):
    """
    Decompose every mixture with a network.

    Returns
    -------
    list of DecompositionResult
    """
    return [model.decompose(s.mixed.intensities, tau) for s in samples]


def write_plot_data(directory, sample, prediction, assignment):
    """
    Overlay files of one sample: ``truth_k`` and ``pred_k`` per phase plus
    ``mixture`` and ``reconstruction``.
    """
    os.makedirs(directory, exist_ok=True)
    grid = sample.mixed.grid
    prediction = np.maximum(np.asarray(prediction, dtype=np.float64), 0.0)
    for k, slot in enumerate(assignment):
        write_pattern_text(
            DiffractionPattern.on_grid(grid, sample.contributions[k]),
            os.path.join(directory, f"truth_{k}.txt"),
            header=f"id={sample.component_ids[k]}",
        )
        write_pattern_text(
            DiffractionPattern.on_grid(grid, prediction[slot]),
            os.path.join(directory, f"pred_{k}.txt"),
            header=f"slot={slot}",
        )
    write_pattern_text(sample.mixed, os.path.join(directory, "mixture.txt"))
    write_pattern_text(
        DiffractionPattern.on_grid(grid, prediction.sum(axis=0)),
        os.path.join(directory, "reconstruction.txt"),
    )


def evaluate_run(predictions, samples, index=None, cfg=None, weights=None,
                 plot_dir=None, threads=1):
    """
    Score decompositions of test mixtures.

    Predictions are aligned to the ground-truth contributions with the
    separation loss, then scored by Pearson correlation, matched-peak
    position and width deviations, retrieval hits and phase fractions.

    Parameters
    ----------
    predictions : Decomposer or list
        A network, or per-sample (K_max, L) arrays or DecompositionResults
    samples : list of MixtureSample
        Test mixtures with ground truth
    index : RetrievalIndex (optional)
        References for Top-k scoring; retrieval columns are NaN without it
    cfg : EvalConfig
        Evaluation settings
    weights : LossWeights
        Weights of the alignment cost
    plot_dir : str (optional)
        Directory receiving per-sample overlay files
    threads : int
        Samples scored in parallel (requires ray)

    Returns
    -------
    EvalReport

    Raises
    ------
    GridMismatch
        If a prediction or the index does not share the mixture grid
    """
    cfg = EvalConfig() if cfg is None else cfg
    weights = LossWeights() if weights is None else weights
    samples = list(samples)
    if hasattr(predictions, "decompose"):
        predictions = predict(predictions, samples, cfg.tau)
    predictions = list(predictions)
    if len(predictions) != len(samples):
        raise GridMismatch(
            f"{len(predictions)} predictions for {len(samples)} mixtures"
        )
    if index is not None and samples:
        if not index.grid.is_compatible(samples[0].mixed.grid):
            raise GridMismatch(
                f"Index grid {index.grid} differs from mixture grid "
                f"{samples[0].mixed.grid}"
            )

    active_counts = []
    arrays = []
    for prediction in predictions:
        if hasattr(prediction, "components"):
            active_counts.append(len(prediction.active))
            prediction = prediction.components
        else:
            active_counts.append(None)
        arrays.append(np.asarray(prediction, dtype=np.float64))

    items = list(zip(range(len(samples)), samples, arrays))
    score = partial(_score_sample, cfg=cfg, weights=weights, index=index)
    scored = parallel_map(score, items, threads)

    component_rows, sample_rows = [], []
    for (rows, summary), n_active, sample in zip(scored, active_counts, samples):
        if n_active is not None:
            summary["n_active"] = n_active
            summary["count_correct"] = float(n_active == sample.active_count)
        component_rows.extend(rows)
        sample_rows.append(summary)

    if plot_dir is not None and cfg.plot_data:
        for (rows, summary), sample, prediction in zip(scored, samples, arrays):
            assignment = [row["slot"] for row in rows]
            directory = os.path.join(plot_dir, f"sample_{summary['sample']:05d}")
            write_plot_data(directory, sample, prediction, assignment)

    report = EvalReport(
        components=pd.DataFrame(component_rows, columns=COMPONENT_COLUMNS),
        samples=pd.DataFrame(sample_rows, columns=SAMPLE_COLUMNS),
    )
    logger.info(f"Evaluated {len(samples)} mixtures")
    return report
