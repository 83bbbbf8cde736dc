"""J-fold cross-fitting: train on each fold's complement, evaluate in-fold."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TooFewRows


@dataclass(frozen=True)
class CrossFitPlan:
    """A random partition of row indices into J validation folds.

    Fold sizes differ by at most one; the assignment is deterministic given
    the seed. Training set T_j is the complement of validation set V_j.
    """

    n: int
    folds: int
    assignment: np.ndarray
    seed: int

    def __post_init__(self):
        arr = np.asarray(self.assignment, dtype=int)
        arr.setflags(write=False)
        object.__setattr__(self, "assignment", arr)

    def val_indices(self, j: int) -> np.ndarray:
        return np.nonzero(self.assignment == j)[0]

    def train_indices(self, j: int) -> np.ndarray:
        return np.nonzero(self.assignment != j)[0]


def make_plan(n: int, folds: int, seed: int) -> CrossFitPlan:
    """Uniform random partition of {0..n-1} into ``folds`` validation sets."""
    if folds > n:
        raise TooFewRows(f"cannot split {n} rows into {folds} folds")
    if folds < 2:
        raise TooFewRows("cross-fitting needs at least 2 folds")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    assignment = np.empty(n, dtype=int)
    assignment[perm] = np.arange(n) % folds
    return CrossFitPlan(n=n, folds=folds, assignment=assignment, seed=seed)


def crossfit_predict(dataset, plan: CrossFitPlan, fit_fn, predict_fn) -> np.ndarray:
    """Out-of-fold predictions: row i is predicted by the model trained on
    T_{j(i)}, so no prediction depends on the row's own target.

    ``fit_fn(dataset, train_idx) -> model``; ``predict_fn(model, dataset,
    idx) -> values``. Learner errors propagate tagged with the fold index.
    """
    out = None
    for j in range(plan.folds):
        tr = plan.train_indices(j)
        va = plan.val_indices(j)
        try:
            model = fit_fn(dataset, tr)
            values = np.asarray(predict_fn(model, dataset, va), dtype=float)
        except Exception as exc:
            try:
                tagged = type(exc)(f"fold {j}: {exc}")
            except Exception:  # exception type with a custom signature
                raise exc
            raise tagged from exc
        if out is None:
            out = np.empty(plan.n, dtype=values.dtype if values.ndim == 1 else float)
        out[va] = values
    return out
