from pxrdsep.algorithms.peaks import (
    PeakMeasurement,
    detect_peaks,
    match_peaks,
    peak_metrics,
)
from pxrdsep.evaluation.report import (
    EvalConfig,
    EvalReport,
    estimate_fractions,
    evaluate_run,
    fraction_mae,
    predict,
    write_plot_data,
)
from pxrdsep.evaluation.retrieval import (
    RetrievalIndex,
    aligned_pearson,
    build_index,
    read_index_file,
    retrieve_scored,
    retrieve_topk,
    write_index,
)
from pxrdsep.utils.stats import pearson
