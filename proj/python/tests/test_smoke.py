import math
import os
from pathlib import Path

import pytest

import txbench

FIXTURES = Path(os.environ.get("TXBENCH_FIXTURES_DIR", Path(__file__).resolve().parents[2] / "fixtures"))
TABLES = FIXTURES / "reference_tables"


def test_chemistry():
    assert txbench.canonical_smiles("OCC") == txbench.canonical_smiles("CCO")
    assert txbench.tanimoto("CCO", "OCC") == 1.0
    assert 0.0 <= txbench.tanimoto("CCO", "c1ccccc1") < 1.0
    assert len(txbench.fingerprint_hex("CCO")) == 2048 // 4
    with pytest.raises(Exception):
        txbench.canonical_smiles("C1CC")


def test_alignment():
    assert txbench.percent_identity("MKV", "MRV") == pytest.approx(2 / 3)
    assert txbench.percent_identity("ACGT", "ACGT", kind="nucleotide") == 1.0
    with pytest.raises(ValueError):
        txbench.percent_identity("ACGT", "ACGT", kind="rna")


def test_metrics():
    assert txbench.auroc([False, True, True], [0.4, 0.35, 0.8]) == 0.5
    assert txbench.spearman([1, 2, 3, 4], [10, 20, 30, 40]) == pytest.approx(1.0)
    w = txbench.wilcoxon([1, 2, 3, -1, 5])
    assert w["w_plus"] == 13.5 and w["w_minus"] == 1.5 and w["exact"]


def test_binning_round_trip():
    lo, hi = -7.8, -3.5
    for y in (lo, hi, -5.0, -4.123):
        assert abs(txbench.unbin_label(txbench.bin_label(y, lo, hi), lo, hi) - y) <= (hi - lo) / 2000 + 1e-12


def test_catalog_and_prompt():
    catalog = txbench.Catalog(FIXTURES / "tasks.json")
    assert "bbb" in catalog.task_ids()
    assert catalog.counts("ames") == {"train": 5093, "valid": 728, "test": 1457}
    assert catalog.render_prompt("bbb") == (FIXTURES / "prompts" / "bbb_zero_shot.txt").read_text()
    with pytest.raises(IndexError):
        catalog.render_prompt("bbb", 10**6)


def test_compare_tables():
    pairs = txbench.compare_pairs(TABLES / "txgemma_27b_predict_vs_txllm_m.tsv")
    wide = txbench.compare_columns(TABLES / "tdc_results.tsv", "txgemma_27b_predict", "txllm_m")
    assert pairs["wins_a"] == wide["wins_a"]
    assert pairs["wins_b"] == wide["wins_b"]
    assert 0.0 < pairs["wilcoxon"]["p_value"] < 1.0
    assert not math.isnan(wide["median_relative_change"])


def test_agent_replay():
    ep = txbench.replay_agent(FIXTURES / "agent" / "candidate_choice" / "script.json", FIXTURES / "tools")
    assert [s["tool"] for s in ep["steps"]] == ["SMILES to Description", "SMILES to Description", "ClinicalTox"]
    assert "Candidate B" in ep["final_response"]
