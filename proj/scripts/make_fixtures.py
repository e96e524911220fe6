#!/usr/bin/env python3
"""Regenerate the small PANDS files under tests/fixtures."""
import sys
from pathlib import Path

import numpy as np
import scipy.sparse as sp

sys.path.insert(0, str(Path(__file__).resolve().parent))
from make_pands import write_pands  # noqa: E402

out = Path(__file__).resolve().parent.parent / "tests" / "fixtures"
out.mkdir(parents=True, exist_ok=True)

# Triangle with one-hot features and one node per split.
write_pands(out / "k3.pands", 3, 3, [(0, 1), (0, 2), (1, 2)], sp.identity(3),
            [0, 1, 2], [0], [1], [2])

# Three-block stochastic block model with class-correlated sparse features.
rng = np.random.default_rng(7)
n, classes, per = 90, 3, 30
labels = np.repeat(np.arange(classes), per)
edges = set()
for i in range(n):
    for j in range(i + 1, n):
        p = 0.12 if labels[i] == labels[j] else 0.01
        if rng.random() < p:
            edges.add((i, j))
n_feat = 24
feats = np.zeros((n, n_feat))
for i in range(n):
    own = rng.choice(np.arange(labels[i] * 8, labels[i] * 8 + 8), size=2, replace=False)
    noise = rng.choice(n_feat, size=2, replace=False)
    feats[i, own] = 1.0
    feats[i, noise] = 1.0
order = rng.permutation(n)
train = []
for c in range(classes):
    train += [int(i) for i in order if labels[i] == c][:4]
rest = [int(i) for i in order if int(i) not in train]
write_pands(out / "sbm.pands", n, classes, sorted(edges), sp.csr_matrix(feats), labels.tolist(),
            train, rest[:24], rest[24:])
print("wrote", out / "k3.pands", out / "sbm.pands")
