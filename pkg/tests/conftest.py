"""Shared helpers: hand-built trees, an independent Walsh transform, and
random tree growth used by several suites."""

from __future__ import annotations

import numpy as np
import pytest

from fct.hoeffding import HoeffdingTree, _Node
from fct.stream import Schema


def schema_of(d: int) -> Schema:
    return Schema(tuple(f"x{i + 1}" for i in range(d)))


def manual_tree(d: int, structure) -> HoeffdingTree:
    """Build a tree with an explicit shape, bypassing training.

    ``structure`` is either an int class label (a leaf) or a triple
    ``(attr, zero_branch, one_branch)``.
    """
    tree = HoeffdingTree(schema_of(d))

    def build(spec, banned: frozenset) -> tuple[_Node, int]:
        node = _Node(d, banned)
        if isinstance(spec, int):
            node.counts[spec] = 1
            return node, 1
        attr, zero, one = spec
        node.split_attribute = attr
        node.frozen_counts = np.zeros(2, dtype=np.int64)
        left, nl = build(zero, banned | {attr})
        right, nr = build(one, banned | {attr})
        node.children = [left, right]
        return node, nl + nr + 1

    tree.root, tree.node_count = build(structure, frozenset())
    return tree


# The three-attribute worked example: attribute x3 at the root, x3=0 is
# class 1, x3=1 tests x1 (0 -> class 1, 1 -> class 0).
def worked_example_tree() -> HoeffdingTree:
    return manual_tree(3, (2, 1, (0, 1, 0)))


def all_inputs(d: int) -> np.ndarray:
    """All 2^d bit vectors; row i has bit a equal to (i >> a) & 1."""
    idx = np.arange(1 << d, dtype=np.uint32)
    return ((idx[:, None] >> np.arange(d)) & 1).astype(np.uint8)


def walsh_brute_force(f_values: np.ndarray) -> np.ndarray:
    """Independent transform oracle: in-place integer butterfly over 2^d
    function values ordered as in :func:`all_inputs`, scaled by 2^-d.

    Output index j (bit a of j <-> attribute a) holds the coefficient of the
    parity (-1)^(j.x) basis function.
    """
    vals = f_values.astype(np.int64).copy()
    n = len(vals)
    h = 1
    while h < n:
        for start in range(0, n, 2 * h):
            a = vals[start:start + h].copy()
            b = vals[start + h:start + 2 * h].copy()
            vals[start:start + h] = a + b
            vals[start + h:start + 2 * h] = a - b
        h *= 2
    return vals / n


def grow_random_tree(seed: int, d: int | None = None,
                     n_instances: int | None = None) -> HoeffdingTree:
    """Train a tree on a noiseless random threshold concept over random bits.

    The label is 1 when a random positive linear form of the features clears
    a random cut, so every attribute carries some marginal signal and greedy
    induction produces trees of varied shape and depth. Deterministic per
    seed.
    """
    rng = np.random.default_rng(seed)
    if d is None:
        d = int(rng.integers(3, 13))
    if n_instances is None:
        n_instances = int(rng.integers(2000, 8000))
    # heavy-tailed weights so some attribute dominates at each context and
    # greedy gain comparisons actually resolve within the training budget;
    # the dominance scale itself varies to mix stumpy and bushy shapes
    w = np.exp(rng.normal(0.0, rng.uniform(0.8, 2.2), size=d))
    cut = rng.uniform(0.25, 0.75) * w.sum()
    tree = HoeffdingTree(schema_of(d))
    X = rng.integers(0, 2, size=(n_instances, d)).astype(np.uint8)
    y = (X @ w > cut).astype(int)
    for x, label in zip(X, y):
        tree.train(x, int(label))
    return tree


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
