#!/usr/bin/env python3
"""Convert a Planetoid citation dataset (cora, citeseer, pubmed) to the n2g layout.

Input is the directory holding the usual ind.<name>.{x,y,tx,ty,allx,ally,graph,test.index}
files. The standard split is kept: the first len(y) nodes train, the next 500
validate, test.index tests. Test ids missing from the feature files (citeseer)
become zero-feature, unlabeled nodes.

    convert_planetoid.py --name cora --raw planetoid/data --out data/cora
"""

import argparse
import pickle
import struct
import sys
from pathlib import Path

import numpy as np
import scipy.sparse as sp

EXPECTED = {
    "cora": (2708, 1433, 7),
    "citeseer": (3327, 3703, 6),
    "pubmed": (19717, 500, 3),
}


def load_pickle(path):
    with open(path, "rb") as fh:
        return pickle.load(fh, encoding="latin1")


def read_planetoid(raw, name):
    parts = {key: load_pickle(raw / f"ind.{name}.{key}") for key in ("x", "y", "tx", "ty", "allx", "ally", "graph")}
    test_index = [int(line) for line in (raw / f"ind.{name}.test.index").read_text().split()]

    tx, ty = parts["tx"], parts["ty"]
    lo, hi = min(test_index), max(test_index)
    full_range = hi - lo + 1
    if full_range != len(test_index):
        tx_ext = sp.lil_matrix((full_range, tx.shape[1]))
        # Rows go in sorted-index slots here; the reorder below moves them home.
        slots = np.sort(test_index) - lo
        tx_ext[slots, :] = tx
        tx = tx_ext
        ty_ext = np.zeros((full_range, ty.shape[1]))
        ty_ext[slots, :] = ty
        ty = ty_ext

    features = sp.vstack((parts["allx"], tx)).tolil()
    labels = np.vstack((parts["ally"], ty))
    order = np.sort(test_index)
    features[test_index, :] = features[order, :]
    labels[test_index, :] = labels[order, :]

    n = features.shape[0]
    edges = set()
    for u, nbrs in parts["graph"].items():
        for v in nbrs:
            if u != v and u < n and v < n:
                edges.add((min(u, v), max(u, v)))

    classes = np.where(labels.sum(axis=1) > 0, labels.argmax(axis=1), -1)
    train = list(range(len(parts["y"])))
    val = list(range(len(parts["y"]), len(parts["y"]) + 500))
    return np.asarray(features.todense(), dtype=np.float32), sorted(edges), classes, labels.shape[1], train, val, sorted(test_index)


def write_dataset(out, name, features, edges, classes, num_classes, train, val, test):
    out.mkdir(parents=True, exist_ok=True)
    n, f = features.shape
    with open(out / "meta.tsv", "w") as fh:
        fh.write(f"name\t{name}\nnode_count\t{n}\nf\t{f}\nclasses\t{num_classes}\ntask\ttransductive\n")
        fh.write(f"labels\tsingle\ntrain_count\t{len(train)}\nval_count\t{len(val)}\ntest_count\t{len(test)}\n")
    with open(out / "features.bin", "wb") as fh:
        fh.write(struct.pack("<QQ", n, f))
        fh.write(features.astype("<f4").tobytes())
    with open(out / "edges.tsv", "w") as fh:
        fh.writelines(f"{u}\t{v}\n" for u, v in edges)
    with open(out / "labels.tsv", "w") as fh:
        fh.writelines(f"{v}\t{c}\n" for v, c in enumerate(classes) if c >= 0)
    with open(out / "splits.tsv", "w") as fh:
        for split, ids in (("train", train), ("val", val), ("test", test)):
            fh.writelines(f"{v}\t{split}\n" for v in ids)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--name", required=True, choices=sorted(EXPECTED))
    ap.add_argument("--raw", required=True, type=Path, help="directory with the ind.<name>.* files")
    ap.add_argument("--out", required=True, type=Path)
    ap.add_argument("--no-check", action="store_true", help="skip the node/feature/class count check")
    args = ap.parse_args()

    features, edges, classes, num_classes, train, val, test = read_planetoid(args.raw, args.name)
    shape = (features.shape[0], features.shape[1], num_classes)
    if not args.no_check and shape != EXPECTED[args.name]:
        sys.exit(f"{args.name}: got nodes/features/classes {shape}, expected {EXPECTED[args.name]}")
    write_dataset(args.out, args.name, features, edges, classes, num_classes, train, val, test)
    print(f"{args.name}: {shape[0]} nodes, {len(edges)} edges, {shape[1]} features, {shape[2]} classes, "
          f"{len(train)}/{len(val)}/{len(test)} split -> {args.out}")


if __name__ == "__main__":
    main()
