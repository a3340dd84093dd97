#!/usr/bin/env python3
"""Regenerate the synthetic task datasets under fixtures/data.

The public TDC files are not redistributed here. Each dataset keeps the
published train/valid/test sizes and is filled with generated drug-like
SMILES and seeded random labels. Output is deterministic.
"""

import argparse
import json
import random
from pathlib import Path

CORES = [
    "c1ccc({0})cc1",
    "c1cc({0})cc({1})c1",
    "c1ccc({0})c({1})c1",
    "c1ccc2c(c1)cc({0})[nH]2",
    "C1CCN({0})CC1",
    "c1cnc({0})nc1",
    "c1ccc({0})nc1",
    "O=C1CN=C(c2ccccc2)c2cc({0})ccc2N1{1}",
    "C1CC({0})CCC1{1}",
    "c1csc({0})c1",
    "c1cc({0})oc1",
    "O=C(N{0})c1ccc({1})cc1",
    "C1CN({0})CCN1{1}",
    "c1ccc2ncc({0})cc2c1",
    "N#Cc1c(N{0})sc2c1CCCC2",
    "c1cc({0})c2ccccc2n1",
]

SUBSTITUENTS = [
    "C", "CC", "CCC", "C(C)C", "O", "OC", "N", "NC", "N(C)C", "F", "Cl", "Br",
    "C(F)(F)F", "C#N", "C(=O)O", "C(=O)N", "C(=O)OC", "S(=O)(=O)C", "S(=O)(=O)N",
    "[N+](=O)[O-]", "CO", "CCN(CC)CC", "C(=O)C", "OCC", "NC(=O)C", "CC(=O)O",
    "C=C", "C#C", "CCl", "CF", "c1ccccc1", "C1CC1", "C1CCOCC1", "N1CCOCC1",
    "N1CCCC1", "CCO", "CCCN", "OC(F)(F)F", "c1ccncc1", "CC#N",
]

# Nearest-neighbour shots and query of the 10-shot BBB example prompt.
BBB_QUERY = "CN1C(=O)CN=C(C2=CCCCC2)c2cc(Cl)ccc21"
BBB_SHOTS = [
    "CN1C(=O)CN=C(c2ccccc2)c2cc(Cl)ccc21",
    "CN1C(=O)CN=C(c2ccccc2F)c2cc(Cl)ccc21",
    "CN1C(=S)CN=C(c2ccccc2)c2cc(Cl)ccc21",
    "CP(C)(=O)CN1C(=O)CN=C(c2ccccc2)c2cc(Cl)ccc21",
    "CN1C(=O)CN=C(c2ccccc2)c2cc([N+](=O)[O-])ccc21",
    "CCN(CC)CCN1C(=O)CN=C(c2ccccc2F)c2cc(Cl)ccc21",
    "O=C1CN=C(c2ccccc2)c2cc(Cl)ccc2N1CC1CC1",
    "C#CCN1C(=O)CN=C(c2ccccc2)c2cc(Cl)ccc21",
    "O=C1CN=C(c2ccccc2)c2cc(Cl)ccc2N1CC(F)(F)F",
    "CCS(=O)(=O)CCN1C(=O)CN=C(c2ccccc2F)c2cc(Cl)ccc21",
]


def molecule(rng):
    core = rng.choice(CORES)
    # The benzodiazepine core is kept away from the BBB example neighbourhood.
    while core.startswith("O=C1CN=C"):
        core = rng.choice(CORES)
    subs = []
    for _ in range(2):
        s = rng.choice(SUBSTITUENTS)
        if rng.random() < 0.25:
            inner = rng.choice(CORES[:3]).format(rng.choice(SUBSTITUENTS), rng.choice(SUBSTITUENTS))
            s = "C" + inner
        subs.append(s)
    return core.format(*subs)


def unique_molecules(rng, n, exclude):
    seen = set(exclude)
    out = []
    while len(out) < n:
        m = molecule(rng)
        if m not in seen:
            seen.add(m)
            out.append(m)
    return out


def write_task(path, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("split\tfeature_1\tlabel\n")
        for split, smiles, label in rows:
            f.write(f"{split}\t{smiles}\t{label}\n")


def make_task(task, seed):
    rng = random.Random(seed)
    n_train, n_valid, n_test = task["expected_counts"]
    total = n_train + n_valid + n_test
    planted = BBB_SHOTS + [BBB_QUERY] if task["task_id"] == "bbb" else []
    mols = unique_molecules(rng, total - len(planted), planted)
    regression = task["kind"] == "regression"

    def label():
        if regression:
            return f"{rng.uniform(-7.8, -3.5):.3f}"
        return "1" if rng.random() < 0.5 else "0"

    splits = ["train"] * n_train + ["valid"] * n_valid + ["test"] * n_test
    rows = [[s, None, label()] for s in splits]
    it = iter(mols)
    if task["task_id"] == "bbb":
        rows[n_train + n_valid][1:] = [BBB_QUERY, "1"]
        slots = sorted(rng.sample(range(n_train), len(BBB_SHOTS)))
        for slot, shot in zip(slots, BBB_SHOTS):
            rows[slot][1:] = [shot, "1"]
    for r in rows:
        if r[1] is None:
            r[1] = next(it)
    return rows


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--fixtures", default=str(Path(__file__).resolve().parent.parent / "fixtures"))
    ap.add_argument("--seed", type=int, default=20250101)
    args = ap.parse_args()
    root = Path(args.fixtures)
    tasks = json.loads((root / "tasks.json").read_text())
    (root / "data").mkdir(exist_ok=True)
    for i, task in enumerate(tasks):
        rows = make_task(task, args.seed + i)
        write_task(root / task["data"], rows)
        print(f"{task['task_id']}: {len(rows)} rows")


if __name__ == "__main__":
    main()
