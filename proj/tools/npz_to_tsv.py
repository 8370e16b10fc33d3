#!/usr/bin/env python3
"""Convert a citation-graph .npz bundle to the TSV layout the CLI reads.

Expects the widely used CSR archive layout: adj_{data,indices,indptr,shape},
attr_{data,indices,indptr,shape}, labels, and optionally idx_to_node /
class_names. Writes edges.tsv, features.tsv, labels.tsv into the output
directory. Only needs numpy.

    python3 tools/npz_to_tsv.py cora_ml.npz data/cora_ml
"""

import argparse
import os
import sys

import numpy as np


def csr_rows(data, indices, indptr):
    for row in range(len(indptr) - 1):
        lo, hi = indptr[row], indptr[row + 1]
        yield row, indices[lo:hi], data[lo:hi]


def load_csr(z, prefix):
    try:
        return (z[prefix + "_data"], z[prefix + "_indices"], z[prefix + "_indptr"],
                z[prefix + "_shape"])
    except KeyError as e:
        sys.exit(f"archive lacks {e.args[0]}; not the expected CSR layout")


def fmt(v):
    return f"{float(v):.17g}"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("npz", help="input .npz archive")
    ap.add_argument("out_dir", help="directory for the three TSV files")
    args = ap.parse_args()

    z = np.load(args.npz, allow_pickle=True)
    adj = load_csr(z, "adj")
    attr = load_csr(z, "attr")
    labels = z["labels"]
    n = int(adj[3][0])
    if len(labels) != n:
        sys.exit(f"label count {len(labels)} != node count {n}")

    if "idx_to_node" in z:
        mapping = z["idx_to_node"].item()
        node_name = [str(mapping[i]) for i in range(n)]
    else:
        node_name = [str(i) for i in range(n)]
    if "class_names" in z:
        class_name = [str(c) for c in z["class_names"]]
    else:
        class_name = [f"c{k}" for k in range(int(labels.max()) + 1)]

    os.makedirs(args.out_dir, exist_ok=True)

    with open(os.path.join(args.out_dir, "labels.tsv"), "w") as f:
        for i in range(n):
            f.write(f"{node_name[i]}\t{class_name[int(labels[i])]}\n")

    # symmetrize: citation links are often stored one-way
    pair_weight = {}
    for u, cols, vals in csr_rows(*adj[:3]):
        for v, w in zip(cols, vals):
            if u == v:
                continue
            key = (u, v) if u < v else (v, u)
            pair_weight[key] = max(pair_weight.get(key, 0.0), float(w))
    with open(os.path.join(args.out_dir, "edges.tsv"), "w") as f:
        for (u, v), w in sorted(pair_weight.items()):
            if w == 1.0:
                f.write(f"{node_name[u]}\t{node_name[v]}\n")
            else:
                f.write(f"{node_name[u]}\t{node_name[v]}\t{fmt(w)}\n")

    with open(os.path.join(args.out_dir, "features.tsv"), "w") as f:
        for i, cols, vals in csr_rows(*attr[:3]):
            for j, w in zip(cols, vals):
                if w != 0.0:
                    f.write(f"{node_name[i]}\t{int(j)}\t{fmt(w)}\n")

    print(f"wrote {args.out_dir}/{{edges,features,labels}}.tsv "
          f"({n} nodes, {len(pair_weight)} edges)")


if __name__ == "__main__":
    main()
