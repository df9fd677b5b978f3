#!/usr/bin/env python3
"""Convert the Planetoid citation files (ind.<name>.x, .tx, .allx, .y, .ty,
.ally, .graph, .test.index) into the edges.tsv / features.csv / labels.txt /
meta.json directory read by `dpgnn`.

    python3 tools/convert_planetoid.py --raw planetoid/data --name cora --out data/cora

Needs numpy and scipy (the .x files are pickled scipy matrices).
"""

import argparse
import json
import pickle
import sys
from pathlib import Path

import numpy as np
import scipy.sparse as sp


def load_pickle(path):
    with open(path, "rb") as f:
        return pickle.load(f, encoding="latin1")


def load_planetoid(raw, name):
    parts = {k: load_pickle(raw / f"ind.{name}.{k}") for k in ("x", "y", "tx", "ty", "allx", "ally", "graph")}
    test_index = [int(line) for line in (raw / f"ind.{name}.test.index").read_text().split()]
    test_sorted = np.sort(test_index)

    tx, ty = parts["tx"], parts["ty"]
    if name == "citeseer":
        # some test ids have no features or label; pad them with zero rows
        full = range(test_sorted.min(), test_sorted.max() + 1)
        tx_ext = sp.lil_matrix((len(full), tx.shape[1]))
        tx_ext[test_sorted - test_sorted.min(), :] = tx
        ty_ext = np.zeros((len(full), ty.shape[1]))
        ty_ext[test_sorted - test_sorted.min(), :] = ty
        tx, ty = tx_ext, ty_ext

    features = sp.vstack((parts["allx"], tx)).tolil()
    features[test_index, :] = features[test_sorted, :]
    onehot = np.vstack((parts["ally"], ty))
    onehot[test_index, :] = onehot[test_sorted, :]
    # padded rows have no label; argmax puts them in class 0
    labels = onehot.argmax(axis=1)

    n = features.shape[0]
    edges = set()
    for src, dsts in parts["graph"].items():
        for dst in dsts:
            if src != dst and src < n and dst < n:
                edges.add((min(src, dst), max(src, dst)))
    return features.tocsr(), labels, sorted(edges)


def write_dataset(out, name, features, labels, edges):
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "edges.tsv", "w") as f:
        for i, j in edges:
            f.write(f"{i}\t{j}\n")
    np.savetxt(out / "features.csv", features.toarray(), fmt="%g", delimiter=",")
    np.savetxt(out / "labels.txt", labels, fmt="%d")
    meta = {
        "name": name,
        "num_classes": int(labels.max()) + 1,
        "num_features": int(features.shape[1]),
        "num_nodes": int(features.shape[0]),
    }
    (out / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    return meta


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--raw", type=Path, required=True, help="directory holding the ind.<name>.* files")
    ap.add_argument("--name", required=True, choices=["cora", "citeseer", "pubmed"])
    ap.add_argument("--out", type=Path, required=True)
    args = ap.parse_args(argv)

    features, labels, edges = load_planetoid(args.raw, args.name)
    meta = write_dataset(args.out, args.name, features, labels, edges)
    print(f"{args.name}: {meta['num_nodes']} nodes, {len(edges)} edges, "
          f"{meta['num_features']} features, {meta['num_classes']} classes -> {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
