"""Event-prediction core: penalized feature selection, encoding, random forest.

Thin re-export of the compiled module; everything here is deterministic
given its seed arguments, and file-based entry points read and write the
same formats as the `adpred` command-line tool.
"""

from ._adpred import (
    __version__,
    auc_pr,
    chi2_cdf,
    chi2_quantile,
    chi2_sf,
    chi2_test,
    cross_validate_csv,
    evaluate_csv,
    generate_csv,
    metrics_from_counts,
    mi_adj,
    mutual_information,
    p_adj,
    p_adj_soft,
    rank_csv,
    score_csv,
    train_csv,
    wilcoxon,
)

__all__ = [
    "__version__",
    "auc_pr",
    "chi2_cdf",
    "chi2_quantile",
    "chi2_sf",
    "chi2_test",
    "cross_validate_csv",
    "evaluate_csv",
    "generate_csv",
    "metrics_from_counts",
    "mi_adj",
    "mutual_information",
    "p_adj",
    "p_adj_soft",
    "rank_csv",
    "score_csv",
    "train_csv",
    "wilcoxon",
]
