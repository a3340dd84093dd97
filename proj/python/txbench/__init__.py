"""Python access to the txbench core: chemistry, alignment, metrics, prompts and agent replay."""

from ._core import (
    Catalog,
    auroc,
    bin_label,
    canonical_smiles,
    compare_columns,
    compare_pairs,
    fingerprint_hex,
    pearson,
    percent_identity,
    replay_agent,
    spearman,
    tanimoto,
    unbin_label,
    wilcoxon,
)

__all__ = [
    "Catalog",
    "auroc",
    "bin_label",
    "canonical_smiles",
    "compare_columns",
    "compare_pairs",
    "fingerprint_hex",
    "pearson",
    "percent_identity",
    "replay_agent",
    "spearman",
    "tanimoto",
    "unbin_label",
    "wilcoxon",
]
