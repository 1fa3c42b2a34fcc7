"""Sequentially orthogonalized PLS for two predictor blocks.

Procedure: fit PLS1 on block 1; orthogonalize centered block 2 against the
block-1 score space; fit PLS1 on the orthogonalized block against the
block-1 residual; predictions are the sum of the two block predictions.
New samples are orthogonalized through the stored regression of block 2 on
the training scores, so block order (here: spatial first, spectral second)
is part of the model.

Because block 2 only ever sees what block 1 could not explain, rescaling
either block by a positive constant leaves predictions unchanged.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .pls import (
    CvCurve,
    DataBlock,
    FoldSpec,
    PlsError,
    PlsModel,
    ResponseVector,
    check_aligned,
    pls_fit,
    pls_predict,
    read_model,
    save_model,
)

_MAGIC = b"SOPL"
_VERSION = 1


@dataclass(frozen=True)
class SoplsModel:
    """Two-block fusion model; ``block2`` is None when a2 = 0."""

    block1: PlsModel
    x2_mean: np.ndarray
    ortho_map: np.ndarray            # a1 x p2: regression of centered X2 on T1
    block2: PlsModel | None

    @property
    def a1(self) -> int:
        return self.block1.n_lv

    @property
    def a2(self) -> int:
        return 0 if self.block2 is None else self.block2.n_lv


@dataclass(frozen=True)
class LvGrid:
    """RMSECV over the (a1, a2) grid, a1 and a2 starting at 0."""

    rmsecv: np.ndarray
    fold_spec: str
    seed: int
    selected: tuple[int, int]
    pure_block2: bool    # selected model uses no block-1 factors


def _residual(y: ResponseVector, model: PlsModel, X: DataBlock) -> np.ndarray:
    return y.y - pls_predict(model, X)


def sopls_fit(X1: DataBlock, X2: DataBlock, y: ResponseVector,
              a1: int, a2: int) -> SoplsModel:
    """Fit the two-block model with a1 >= 1 block-1 and a2 >= 0 block-2 LVs."""
    check_aligned(X1, y)
    check_aligned(X2, y)
    if a1 < 1:
        raise PlsError("a1 must be >= 1")
    if a2 < 0 or (a2 > 0 and a2 > min(X2.n - 1, X2.p)):
        raise PlsError(f"a2={a2} out of range 0..min(n-1, p2)")

    block1 = pls_fit(X1, y, a1)
    x2_mean = X2.X.mean(axis=0)
    X2c = X2.X - x2_mean
    T1 = block1.scores
    ortho_map = np.linalg.solve(T1.T @ T1, T1.T @ X2c)
    X2perp = X2c - T1 @ ortho_map

    block2 = None
    if a2 > 0:
        r = _residual(y, block1, X1)
        if np.ptp(r) > 0 and np.linalg.norm(X2perp.T @ (r - r.mean())) > 1e-12:
            block2 = pls_fit(DataBlock(X2.ids, X2perp, X2.tag),
                             ResponseVector(y.ids, r), a2)
    return SoplsModel(block1, x2_mean, ortho_map, block2)


def sopls_predict(model: SoplsModel, X1: DataBlock, X2: DataBlock) -> np.ndarray:
    """Sum of block predictions on new samples."""
    if X2.p != model.x2_mean.shape[0]:
        raise PlsError(
            f"block 2 has {X2.p} columns, model expects {model.x2_mean.shape[0]}"
        )
    yhat = pls_predict(model.block1, X1)
    if model.block2 is not None:
        T1_new = (X1.X - model.block1.x_mean) @ model.block1.weights
        X2perp_new = (X2.X - model.x2_mean) - T1_new @ model.ortho_map
        yhat = yhat + pls_predict(model.block2, X2perp_new)
    return yhat


def _prefix_predict(state, Xnew, a):
    """Prediction with the first a factors (nesting); a capped at achieved."""
    x_mean, y_mean, W, q, achieved = state
    aa = min(a, achieved)
    if aa == 0:
        return np.full(Xnew.shape[0], y_mean)
    beta = W[:, :aa] @ q[:aa]
    return y_mean + (Xnew - x_mean) @ beta


def _safe_fit(Xmat, yvec, A_max):
    """Fit tolerating degenerate responses; returns prefix-prediction state."""
    y_mean = float(yvec.mean())
    if A_max == 0 or np.ptp(yvec) == 0:
        return Xmat.mean(axis=0), y_mean, None, None, 0
    ids = tuple(str(i) for i in range(Xmat.shape[0]))
    try:
        m = pls_fit(DataBlock(ids, Xmat), ResponseVector(ids, yvec), A_max)
    except PlsError:
        return Xmat.mean(axis=0), y_mean, None, None, 0
    return m.x_mean, m.y_mean, m.weights, m.y_loadings, m.n_lv


def sopls_cv(X1: DataBlock, X2: DataBlock, y: ResponseVector,
             A1_max: int, A2_max: int, folds: FoldSpec) -> LvGrid:
    """RMSECV for every (a1, a2) pair with full per-fold refit.

    a1 = 0 rows are pure block-2 models (reported for diagnostics); the
    (0, 0) cell is the training-mean predictor and is never selected.
    Ties break toward smaller a1 + a2, then smaller a1.
    """
    check_aligned(X1, y)
    check_aligned(X2, y)
    n = X1.n
    assignments = folds.assignments(n)
    need = max(A1_max, A2_max) + 1
    for held in assignments:
        if n - len(held) < need:
            raise PlsError(
                f"fold leaves {n - len(held)} training samples, need >= {need}"
            )

    sq = np.zeros((A1_max + 1, A2_max + 1))
    for held in assignments:
        train = np.setdiff1d(np.arange(n), held)
        X1tr, X2tr, ytr = X1.X[train], X2.X[train], y.y[train]
        X1h, X2h, yh = X1.X[held], X2.X[held], y.y[held]

        # a1 = 0: block 2 predicts y directly
        st = _safe_fit(X2tr, ytr, A2_max)
        sq[0, 0] += np.sum((yh - ytr.mean()) ** 2)
        for a2 in range(1, A2_max + 1):
            pred = _prefix_predict(st, X2h, a2)
            sq[0, a2] += np.sum((yh - pred) ** 2)

        ids_tr = tuple(str(i) for i in train)
        m1 = pls_fit(DataBlock(ids_tr, X1tr), ResponseVector(ids_tr, ytr), A1_max)
        x2_mean = X2tr.mean(axis=0)
        X2c_tr = X2tr - x2_mean
        X1c_h = X1h - m1.x_mean
        for a1 in range(1, A1_max + 1):
            aa1 = min(a1, m1.n_lv)
            beta1 = m1.weights[:, :aa1] @ m1.y_loadings[:aa1]
            pred1_tr = m1.y_mean + (X1tr - m1.x_mean) @ beta1
            pred1_h = m1.y_mean + X1c_h @ beta1
            r_tr = ytr - pred1_tr

            T1 = m1.scores[:, :aa1]
            G = np.linalg.solve(T1.T @ T1, T1.T @ X2c_tr)
            X2perp_tr = X2c_tr - T1 @ G
            T1_h = X1c_h @ m1.weights[:, :aa1]
            X2perp_h = (X2h - x2_mean) - T1_h @ G

            sq[a1, 0] += np.sum((yh - pred1_h) ** 2)
            st2 = _safe_fit(X2perp_tr, r_tr, A2_max)
            for a2 in range(1, A2_max + 1):
                pred2_h = _prefix_predict(st2, X2perp_h, a2)
                sq[a1, a2] += np.sum((yh - pred1_h - pred2_h) ** 2)

    rmsecv = np.sqrt(sq / n)
    selected = select_grid(rmsecv)
    return LvGrid(rmsecv, folds.describe(), folds.seed, selected,
                  pure_block2=selected[0] == 0)


def select_grid(rmsecv: np.ndarray) -> tuple[int, int]:
    """Grid argmin excluding (0, 0); ties break toward smaller a1 + a2,
    then smaller a1."""
    best = None
    for a1 in range(rmsecv.shape[0]):
        for a2 in range(rmsecv.shape[1]):
            if a1 == 0 and a2 == 0:
                continue
            key = (rmsecv[a1, a2], a1 + a2, a1)
            if best is None or key < best[0]:
                best = (key, (a1, a2))
    if best is None:
        raise PlsError("empty grid")
    return best[1]


def save_sopls(model: SoplsModel) -> bytes:
    """Serialize to the versioned "SOPL" binary layout."""
    b1 = save_model(model.block1)
    a1, p2 = model.ortho_map.shape
    parts = [
        _MAGIC,
        struct.pack("<IIIB", _VERSION, a1, p2, 1 if model.block2 is not None else 0),
        b1,
        np.asarray(model.x2_mean, dtype="<f8").tobytes(),
        np.asarray(model.ortho_map, dtype="<f8").tobytes(),
    ]
    if model.block2 is not None:
        parts.append(save_model(model.block2))
    return b"".join(parts)


def load_sopls(data: bytes) -> SoplsModel:
    if data[:4] != _MAGIC:
        raise PlsError(f"bad model magic {data[:4]!r}")
    version, a1, p2, has_b2 = struct.unpack_from("<IIIB", data, 4)
    if version != _VERSION:
        raise PlsError(f"unsupported model version {version}")
    off = 17
    block1, off = read_model(data, off)
    x2_mean = np.frombuffer(data, dtype="<f8", count=p2, offset=off).copy()
    off += 8 * p2
    ortho_map = np.frombuffer(data, dtype="<f8", count=a1 * p2, offset=off)
    ortho_map = ortho_map.reshape(a1, p2).copy()
    off += 8 * a1 * p2
    block2 = None
    if has_b2:
        block2, off = read_model(data, off)
    if off != len(data):
        raise PlsError(f"{len(data) - off} trailing bytes after model")
    return SoplsModel(block1, x2_mean, ortho_map, block2)
