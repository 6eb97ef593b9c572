"""Seeded k-fold splits and training subsamples."""

from __future__ import annotations

from typing import List, Sequence, TypeVar

import numpy as np

from ..exceptions import InvalidArgumentError

T = TypeVar("T")


def kfold_split(items: Sequence[T], k: int, seed: int) -> List[List[T]]:
    """Shuffle once with ``seed`` and cut into ``k`` folds whose sizes differ by at most one."""
    n = len(items)
    if not 2 <= k <= n:
        raise InvalidArgumentError(f"k must lie in [2, {n}], got {k}")
    order = np.random.default_rng(seed).permutation(n)
    return [[items[i] for i in part] for part in np.array_split(order, k)]


def train_test_folds(items: Sequence[T], k: int, seed: int):
    """Yield ``(train, test)`` pairs, each fold held out once."""
    folds = kfold_split(items, k, seed)
    for i, test in enumerate(folds):
        train = [x for j, fold in enumerate(folds) if j != i for x in fold]
        yield train, test


def subsample_training(items: Sequence[T], n: int, seed: int) -> List[T]:
    """``n`` items drawn uniformly without replacement, in their original order."""
    if not 0 <= n <= len(items):
        raise InvalidArgumentError(f"cannot draw {n} of {len(items)} items")
    chosen = np.sort(np.random.default_rng(seed).choice(len(items), size=n, replace=False))
    return [items[i] for i in chosen]


__all__ = ["kfold_split", "subsample_training", "train_test_folds"]
