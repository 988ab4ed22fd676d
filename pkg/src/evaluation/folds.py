"""
Subject-independent fold plans
"""
import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from sklearn.model_selection import KFold, StratifiedKFold

from config import settings
from src.exceptions import FoldError
from src.grad.rng import derive_seed

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Fold:
    index: int
    train_ids: Tuple[str, ...]
    test_ids: Tuple[str, ...]


@dataclass(frozen=True)
class FoldPlan:
    k: int
    seed: int
    repeat: int
    folds: Tuple[Fold, ...]

    def __iter__(self):
        return iter(self.folds)

    def __len__(self) -> int:
        return len(self.folds)

    def check_partition(self, subject_ids: Sequence[str]) -> None:
        """Raise FoldError unless test sets partition the subjects without leakage"""
        seen: List[str] = []
        for fold in self.folds:
            leaked = set(fold.train_ids) & set(fold.test_ids)
            if leaked:
                raise FoldError(f"repeat {self.repeat} fold {fold.index}: subjects in train and test {sorted(leaked)}")
            if set(fold.train_ids) | set(fold.test_ids) != set(subject_ids):
                raise FoldError(f"repeat {self.repeat} fold {fold.index}: train and test do not cover every subject")
            seen.extend(fold.test_ids)
        if sorted(seen) != sorted(subject_ids):
            raise FoldError(f"repeat {self.repeat}: test sets do not partition the subjects")


def subject_kfold(subject_ids: Sequence[str],
                  labels: Sequence[int],
                  k: int = settings.N_FOLDS,
                  seed: int = settings.SEED,
                  repeat: int = 0) -> FoldPlan:
    """Stratified k-fold split over subjects

    Shuffling uses the ("folds", repeat) stream of ``seed``. When a class has
    fewer than ``k`` subjects stratification is impossible and a plain
    shuffled k-fold is used instead.
    """
    ids = np.asarray(list(subject_ids), dtype=object)
    y = np.asarray(labels, dtype=np.int64)
    if len(ids) != len(y):
        raise FoldError(f"{len(ids)} subjects but {len(y)} labels")
    if len(set(ids.tolist())) != len(ids):
        raise FoldError("duplicate subject ids")
    if k < 2:
        raise FoldError(f"need at least 2 folds, got {k}")
    if len(ids) < k:
        raise FoldError(f"fewer subjects ({len(ids)}) than folds ({k})")
    classes, counts = np.unique(y, return_counts=True)
    if len(classes) < 2:
        raise FoldError("need at least one subject of each class")

    random_state = derive_seed(seed, "folds", repeat) % (2 ** 32)
    if counts.min() >= k:
        splitter = StratifiedKFold(n_splits=k, shuffle=True, random_state=random_state)
        splits = splitter.split(np.zeros(len(ids)), y)
    else:
        logger.warning(f"Smallest class has {counts.min()} subjects (< {k} folds); folds are not stratified")
        splitter = KFold(n_splits=k, shuffle=True, random_state=random_state)
        splits = splitter.split(np.zeros(len(ids)))

    folds = tuple(
        Fold(index=i, train_ids=tuple(ids[train].tolist()), test_ids=tuple(ids[test].tolist()))
        for i, (train, test) in enumerate(splits)
    )
    plan = FoldPlan(k=k, seed=seed, repeat=repeat, folds=folds)
    plan.check_partition(ids.tolist())
    return plan
