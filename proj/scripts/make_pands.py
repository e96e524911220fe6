#!/usr/bin/env python3
"""Write PANDS v1 dataset files from raw citation-network sources.

Reads the Planetoid pickles for citeseer and pubmed, and the LINQS
cora.content / cora.cites pair for cora (with a seeded 20-per-class split).
"""
import argparse
import json
import pickle
import struct
import sys
import zlib
from pathlib import Path

import numpy as np
import scipy.sparse as sp


def write_pands(path, n_nodes, n_classes, edges, features, labels, train, val, test):
    """edges: iterable of (u, v) with u < v; features: scipy sparse (n_nodes x n_features)."""
    feats = sp.csr_matrix(features, dtype=np.float64)
    feats.sum_duplicates()
    feats.sort_indices()
    feats.eliminate_zeros()
    coo = feats.tocoo()
    trip = np.zeros(coo.nnz, dtype=[("r", "<u4"), ("c", "<u4"), ("v", "<f8")])
    trip["r"], trip["c"], trip["v"] = coo.row, coo.col, coo.data
    edges = np.asarray(sorted(edges), dtype="<u4").reshape(-1, 2)
    payloads = [
        ("edges", 8, edges.tobytes()),
        ("features", 16, trip.tobytes()),
        ("labels", 4, np.asarray(labels, dtype="<i4").tobytes()),
        ("train", 4, np.asarray(sorted(train), dtype="<u4").tobytes()),
        ("val", 4, np.asarray(sorted(val), dtype="<u4").tobytes()),
        ("test", 4, np.asarray(sorted(test), dtype="<u4").tobytes()),
    ]
    sections, offset = {}, 0
    for name, rec, data in payloads:
        sections[name] = {"offset": offset, "bytes": len(data), "count": len(data) // rec,
                          "crc32": zlib.crc32(data) & 0xFFFFFFFF}
        offset += len(data)
    header = {"format": "PANDS", "version": 1, "n_nodes": int(n_nodes),
              "n_features": int(feats.shape[1]), "n_classes": int(n_classes),
              "sections": sections}
    with open(path, "wb") as f:
        f.write(json.dumps(header, sort_keys=True, separators=(",", ":")).encode() + b"\n")
        for _, _, data in payloads:
            f.write(data)


def undirected(pairs):
    out = set()
    for u, v in pairs:
        if u != v:
            out.add((min(u, v), max(u, v)))
    return out


def load_planetoid(src, name):
    def load(ext):
        with open(src / f"ind.{name}.{ext}", "rb") as f:
            return pickle.load(f, encoding="latin1")

    x, y, tx, ty, allx, ally, graph = (load(e) for e in ("x", "y", "tx", "ty", "allx", "ally", "graph"))
    test_idx = [int(l) for l in (src / f"ind.{name}.test.index").read_text().split()]
    test_range = np.sort(test_idx)
    if name == "citeseer":
        # isolated test nodes are missing from tx/ty; give them empty rows
        full = range(test_range.min(), test_range.max() + 1)
        tx_ext = sp.lil_matrix((len(full), tx.shape[1]))
        tx_ext[test_range - test_range.min(), :] = tx
        tx = tx_ext
        ty_ext = np.zeros((len(full), ty.shape[1]))
        ty_ext[test_range - test_range.min(), :] = ty
        ty = ty_ext
    features = sp.vstack((allx, tx)).tolil()
    features[test_idx, :] = features[test_range, :]
    onehot = np.vstack((ally, ty))
    onehot[test_idx, :] = onehot[test_range, :]
    n = features.shape[0]
    labels = np.where(onehot.sum(1) > 0, onehot.argmax(1), -1)
    train = range(len(y))
    val = range(len(y), len(y) + 500)
    test = test_range.tolist()
    # A few masked nodes carry an all-zero label row; the reference pipeline
    # reads them as class 0 through argmax.
    for i in list(train) + list(val) + test:
        if labels[i] < 0:
            labels[i] = 0
    edges = undirected((u, v) for u, nbrs in graph.items() for v in nbrs if u < n and v < n)
    return n, onehot.shape[1], edges, features.tocsr(), labels, train, val, test


def load_linqs_cora(src, seed):
    ids, rows, classes = {}, [], []
    for line in (src / "cora.content").read_text().splitlines():
        parts = line.split()
        ids[parts[0]] = len(ids)
        rows.append([float(v) for v in parts[1:-1]])
        classes.append(parts[-1])
    names = sorted(set(classes))
    labels = np.array([names.index(c) for c in classes])
    features = sp.csr_matrix(np.array(rows))
    edges = undirected((ids[a], ids[b]) for a, b in
                       (l.split() for l in (src / "cora.cites").read_text().splitlines())
                       if a in ids and b in ids)
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(labels))
    train, per_class = [], {c: 0 for c in range(len(names))}
    for i in order:
        if per_class[labels[i]] < 20:
            per_class[labels[i]] += 1
            train.append(int(i))
    rest = [int(i) for i in order if int(i) not in set(train)]
    return len(labels), len(names), edges, features, labels, train, rest[:500], rest[500:1500]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--src", type=Path, required=True, help="directory with cora/ citeseer/ pubmed/")
    ap.add_argument("--out", type=Path, required=True)
    ap.add_argument("--cora-seed", type=int, default=0)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for name in ("cora", "citeseer", "pubmed"):
        d = args.src / name
        if (d / f"ind.{name}.x").exists():
            data = load_planetoid(d, name)
        elif (d / "cora.content").exists():
            data = load_linqs_cora(d, args.cora_seed)
        else:
            print(f"skip {name}: no source files", file=sys.stderr)
            continue
        n, c, edges, feats, labels, train, val, test = data
        write_pands(args.out / f"{name}.pands", n, c, edges, feats, labels, train, val, test)
        print(f"{name}: {n} nodes, {len(edges)} edges, {c} classes, "
              f"masks {len(list(train))}/{len(list(val))}/{len(test)}")


if __name__ == "__main__":
    main()
