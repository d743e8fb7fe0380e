#!/usr/bin/env python3
"""Convert the GraphSAGE release of PPI to the n2g layout (inductive, multi-label).

Input is the directory holding ppi-G.json, ppi-feats.npy, ppi-id_map.json and
ppi-class_map.json. Nodes flagged test or val go to those splits, every other
node trains. Edges are kept as listed; the loader builds one graph per split.

    convert_ppi.py --raw ppi --out data/ppi
"""

import argparse
import json
import struct
import sys
from pathlib import Path

import numpy as np


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--raw", required=True, type=Path)
    ap.add_argument("--out", required=True, type=Path)
    ap.add_argument("--prefix", default="ppi")
    args = ap.parse_args()

    raw, p = args.raw, args.prefix
    graph = json.loads((raw / f"{p}-G.json").read_text())
    id_map = {str(k): int(v) for k, v in json.loads((raw / f"{p}-id_map.json").read_text()).items()}
    class_map = {str(k): v for k, v in json.loads((raw / f"{p}-class_map.json").read_text()).items()}
    feats = np.load(raw / f"{p}-feats.npy").astype(np.float32)

    n = len(id_map)
    if feats.shape[0] != n:
        sys.exit(f"feature rows {feats.shape[0]} != id_map size {n}")
    num_classes = len(next(iter(class_map.values())))

    split = ["train"] * n
    for node in graph["nodes"]:
        idx = id_map[str(node["id"])]
        if node.get("test", False):
            split[idx] = "test"
        elif node.get("val", False):
            split[idx] = "val"

    # node-link format: links refer to positions in the nodes list
    position_to_id = [id_map[str(node["id"])] for node in graph["nodes"]]
    edges = set()
    for link in graph["links"]:
        u, v = position_to_id[link["source"]], position_to_id[link["target"]]
        if u != v:
            edges.add((min(u, v), max(u, v)))

    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    counts = {s: split.count(s) for s in ("train", "val", "test")}
    with open(out / "meta.tsv", "w") as fh:
        fh.write(f"name\tppi\nnode_count\t{n}\nf\t{feats.shape[1]}\nclasses\t{num_classes}\ntask\tinductive\n")
        fh.write(f"labels\tmulti\ntrain_count\t{counts['train']}\nval_count\t{counts['val']}\n")
        fh.write(f"test_count\t{counts['test']}\n")
    with open(out / "features.bin", "wb") as fh:
        fh.write(struct.pack("<QQ", n, feats.shape[1]))
        fh.write(feats.astype("<f4").tobytes())
    with open(out / "edges.tsv", "w") as fh:
        fh.writelines(f"{u}\t{v}\n" for u, v in sorted(edges))
    with open(out / "labels.tsv", "w") as fh:
        for key, flags in sorted(class_map.items(), key=lambda kv: id_map[kv[0]]):
            on = ",".join(str(c) for c, bit in enumerate(flags) if bit)
            fh.write(f"{id_map[key]}\t{on}\n")
    with open(out / "splits.tsv", "w") as fh:
        fh.writelines(f"{v}\t{s}\n" for v, s in enumerate(split))
    print(f"ppi: {n} nodes, {len(edges)} edges, {feats.shape[1]} features, {num_classes} classes, "
          f"{counts['train']}/{counts['val']}/{counts['test']} split -> {out}")


if __name__ == "__main__":
    main()
