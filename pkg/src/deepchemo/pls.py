"""PLS1 regression with cross-validated latent-variable selection.

Fitting uses the SIMPLS construction for a single response: latent
directions are extracted from the covariance vector X'y with an
orthonormalized loading basis, giving mutually orthogonal score columns
and a direct intercept-augmented coefficient vector, so prediction is
simply [1 X] @ beta.  Data are mean-centered, never autoscaled.

Cross-validation refits per fold (centering included).  k-fold assignment
is a seeded shuffle (numpy PCG64, default seed 42) followed by a
contiguous split, recorded in the returned curve for audit.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

DEFAULT_SEED = 42
_MAGIC = b"PLS1"
_VERSION = 1


class PlsError(ValueError):
    pass


@dataclass(frozen=True)
class DataBlock:
    """n x p predictor matrix with unique sample ids and a block tag."""

    ids: tuple
    X: np.ndarray
    tag: str = ""

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim != 2:
            raise PlsError(f"X must be 2-D, got shape {X.shape}")
        ids = tuple(str(i) for i in self.ids)
        if len(ids) != X.shape[0]:
            raise PlsError(f"{len(ids)} ids for {X.shape[0]} rows")
        if len(set(ids)) != len(ids):
            raise PlsError("sample ids must be unique")
        if X.shape[0] < 2:
            raise PlsError("need at least 2 samples")
        if not np.all(np.isfinite(X)):
            raise PlsError("X contains non-finite values")
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "X", X)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def take(self, rows) -> "DataBlock":
        rows = np.asarray(rows)
        return DataBlock(tuple(self.ids[i] for i in rows), self.X[rows], self.tag)


@dataclass(frozen=True)
class ResponseVector:
    """Reference values aligned with a DataBlock by id."""

    ids: tuple
    y: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=np.float64).reshape(-1)
        ids = tuple(str(i) for i in self.ids)
        if len(ids) != y.shape[0]:
            raise PlsError(f"{len(ids)} ids for {y.shape[0]} responses")
        if len(set(ids)) != len(ids):
            raise PlsError("sample ids must be unique")
        if not np.all(np.isfinite(y)):
            raise PlsError("y contains non-finite values")
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "y", y)

    def take(self, rows) -> "ResponseVector":
        rows = np.asarray(rows)
        return ResponseVector(tuple(self.ids[i] for i in rows), self.y[rows])


def check_aligned(X: DataBlock, y: ResponseVector) -> None:
    if X.ids != y.ids:
        bad = set(X.ids).symmetric_difference(y.ids)
        if bad:
            raise PlsError(f"ids do not align; offending ids: {sorted(bad)[:10]}")
        raise PlsError("ids do not align: same sets, different order")


@dataclass(frozen=True)
class PlsModel:
    """Fitted PLS1 artifact; prediction is [1 X] @ beta_aug."""

    n_lv: int
    x_mean: np.ndarray
    y_mean: float
    weights: np.ndarray      # p x A, applied to centered X to get scores
    x_loadings: np.ndarray   # p x A
    y_loadings: np.ndarray   # A
    scores: np.ndarray       # n x A training scores
    beta_aug: np.ndarray     # p + 1, intercept first
    tag: str = ""

    @property
    def p(self) -> int:
        return self.x_mean.shape[0]


@dataclass(frozen=True)
class FoldSpec:
    """Cross-validation layout: leave-one-out or seeded k-fold."""

    kind: str = "loo"
    k: int = 0
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.kind not in ("loo", "kfold"):
            raise PlsError(f"unknown fold kind {self.kind!r}")
        if self.kind == "kfold" and self.k < 2:
            raise PlsError(f"k-fold needs k >= 2, got {self.k}")

    def assignments(self, n: int) -> list:
        """Held-out index arrays, one per fold."""
        if self.kind == "loo":
            return [np.array([i]) for i in range(n)]
        if self.k > n:
            raise PlsError(f"k={self.k} folds but only {n} samples")
        perm = np.random.default_rng(self.seed).permutation(n)
        return [np.sort(chunk) for chunk in np.array_split(perm, self.k)]

    def describe(self) -> str:
        return "loo" if self.kind == "loo" else f"kfold:{self.k}:{self.seed}"


@dataclass(frozen=True)
class CvCurve:
    """RMSECV per latent-variable count, with the audited fold layout."""

    rmsecv: np.ndarray
    folds: tuple
    fold_spec: str
    seed: int = DEFAULT_SEED


def pls_fit(X: DataBlock, y: ResponseVector, A: int) -> PlsModel:
    """Fit a mean-centered PLS1 model with A latent variables.

    Extraction stops early if the residual covariance direction degenerates
    (norm below 1e-12); the model records the achieved count.
    """
    check_aligned(X, y)
    n, p = X.X.shape
    if not 1 <= A <= min(n - 1, p):
        raise PlsError(f"A={A} out of range 1..min(n-1, p)={min(n - 1, p)}")
    if np.ptp(y.y) == 0:
        raise PlsError("response has zero variance")

    x_mean = X.X.mean(axis=0)
    y_mean = float(y.y.mean())
    Xc = X.X - x_mean
    yc = y.y - y_mean

    W = np.zeros((p, A))
    P = np.zeros((p, A))
    q = np.zeros(A)
    T = np.zeros((n, A))
    V = np.zeros((p, A))  # orthonormal basis of x-loadings

    s = Xc.T @ yc
    achieved = 0
    for a in range(A):
        if np.linalg.norm(s) < 1e-12:
            break
        r = s.copy()
        t = Xc @ r
        norm_t = np.linalg.norm(t)
        if norm_t < 1e-12:
            break
        t /= norm_t
        r /= norm_t
        p_vec = Xc.T @ t
        v = p_vec - V[:, :a] @ (V[:, :a].T @ p_vec)
        norm_v = np.linalg.norm(v)
        if norm_v < 1e-12:
            break
        W[:, a] = r
        P[:, a] = p_vec
        q[a] = yc @ t
        T[:, a] = t
        V[:, a] = v / norm_v
        s = s - V[:, a] * (V[:, a] @ s)
        achieved = a + 1

    if achieved == 0:
        raise PlsError("could not extract any latent variable (X'y is null)")

    W, P, q, T = W[:, :achieved], P[:, :achieved], q[:achieved], T[:, :achieved]
    beta = W @ q
    beta_aug = np.concatenate([[y_mean - x_mean @ beta], beta])
    return PlsModel(achieved, x_mean, y_mean, W, P, q, T, beta_aug, X.tag)


def pls_predict(model: PlsModel, X: DataBlock | np.ndarray) -> np.ndarray:
    """Predict via the intercept-augmented coefficients."""
    mat = X.X if isinstance(X, DataBlock) else np.asarray(X, dtype=np.float64)
    if mat.shape[1] != model.p:
        raise PlsError(f"block has {mat.shape[1]} columns, model expects {model.p}")
    return model.beta_aug[0] + mat @ model.beta_aug[1:]


def cross_validate(X: DataBlock, y: ResponseVector, A_max: int,
                   folds: FoldSpec) -> CvCurve:
    """RMSECV for A in 1..A_max with full per-fold refit.

    Factor nesting makes one A_max-factor fit per fold sufficient: the
    A-factor coefficients are prefix sums of the weight/loading columns.
    """
    check_aligned(X, y)
    n = X.n
    assignments = folds.assignments(n)
    for held in assignments:
        n_train = n - len(held)
        if n_train < A_max + 1:
            raise PlsError(
                f"fold leaves {n_train} training samples, need >= {A_max + 1}"
            )

    sq_err = np.zeros(A_max)
    count = 0
    for held in assignments:
        train = np.setdiff1d(np.arange(n), held)
        model = pls_fit(X.take(train), y.take(train), A_max)
        Xh = X.X[held] - model.x_mean
        for a in range(1, A_max + 1):
            aa = min(a, model.n_lv)  # degenerate fits reuse the last achieved beta
            beta = model.weights[:, :aa] @ model.y_loadings[:aa]
            pred = model.y_mean + Xh @ beta
            sq_err[a - 1] += np.sum((y.y[held] - pred) ** 2)
        count += len(held)

    return CvCurve(np.sqrt(sq_err / count), tuple(assignments),
                   folds.describe(), folds.seed)


def select_lv(curve: CvCurve) -> int:
    """Latent-variable count at the RMSECV minimum; ties go to fewer LVs."""
    if len(curve.rmsecv) == 0:
        raise PlsError("empty CV curve")
    return int(np.argmin(curve.rmsecv)) + 1


def metrics(y, yhat) -> tuple[float | None, float]:
    """Pearson correlation and RMSE.

    Returns (r, rmse); r is None when either argument has zero variance.
    """
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    yhat = np.asarray(yhat, dtype=np.float64).reshape(-1)
    if y.shape != yhat.shape or y.shape[0] < 2:
        raise PlsError(f"metrics needs equal lengths >= 2, got {y.shape} and {yhat.shape}")
    rmse = float(np.sqrt(np.mean((y - yhat) ** 2)))
    dy = y - y.mean()
    dh = yhat - yhat.mean()
    denom = np.sqrt(np.sum(dy ** 2) * np.sum(dh ** 2))
    if denom == 0:
        return None, rmse
    return float(np.sum(dy * dh) / denom), rmse


def save_model(model: PlsModel) -> bytes:
    """Serialize to the versioned "PLS1" binary layout (little-endian f64)."""
    n, A = model.scores.shape
    tag = model.tag.encode("utf-8")
    parts = [
        _MAGIC,
        struct.pack("<IIII", _VERSION, A, model.p, n),
        struct.pack("<H", len(tag)),
        tag,
    ]
    for arr in (model.x_mean, [model.y_mean], model.weights, model.x_loadings,
                model.y_loadings, model.scores, model.beta_aug):
        parts.append(np.asarray(arr, dtype="<f8").tobytes())
    return b"".join(parts)


def read_model(data: bytes, offset: int = 0) -> tuple[PlsModel, int]:
    """Parse a "PLS1" payload starting at ``offset``; returns (model, end)."""
    if data[offset:offset + 4] != _MAGIC:
        raise PlsError(f"bad model magic {data[offset:offset + 4]!r}")
    version, A, p, n = struct.unpack_from("<IIII", data, offset + 4)
    if version != _VERSION:
        raise PlsError(f"unsupported model version {version}")
    off = offset + 20
    (tag_len,) = struct.unpack_from("<H", data, off)
    off += 2
    tag = data[off:off + tag_len].decode("utf-8")
    off += tag_len

    def grab(count, shape):
        nonlocal off
        arr = np.frombuffer(data, dtype="<f8", count=count, offset=off)
        off += 8 * count
        return arr.reshape(shape).copy()

    total = p + 1 + 2 * p * A + A + n * A + p + 1
    if off + 8 * total > len(data):
        raise PlsError("truncated model payload")
    x_mean = grab(p, (p,))
    y_mean = float(grab(1, (1,))[0])
    W = grab(p * A, (p, A))
    P = grab(p * A, (p, A))
    q = grab(A, (A,))
    T = grab(n * A, (n, A))
    beta_aug = grab(p + 1, (p + 1,))
    return PlsModel(A, x_mean, y_mean, W, P, q, T, beta_aug, tag), off


def load_model(data: bytes) -> PlsModel:
    model, end = read_model(data)
    if end != len(data):
        raise PlsError(f"{len(data) - end} trailing bytes after model")
    return model
