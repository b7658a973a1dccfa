"""Feed-forward QSAR regression on fingerprint or latent features.

Hyperparameters are found by seeded random search with 3-fold CV on the
training set; the final model is the mean of the 10 fold models of a
10-fold CV, evaluated on the held-out test set.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import encdec
from .datasets import QsarRecord, QsarTable, SequenceTooLong, TokenNotInCharset
from .molsim import morgan_fingerprint
from .nn.optim import AdamState, adam_step, sgd_step

log = logging.getLogger(__name__)

FEATURE_KINDS = ("ecfp4_1024", "latent")

_SELU_ALPHA = 1.6732632423543772
_SELU_SCALE = 1.0507009873554805


class FeaturizationError(ValueError):
    def __init__(self, row: int, smiles: str, cause: Exception):
        super().__init__(f"row {row} ({smiles}): {type(cause).__name__}: {cause}")
        self.row = row
        self.smiles = smiles
        self.cause = cause


@dataclass
class FeatureMatrix:
    rows: np.ndarray  # [n, dim] float64
    kind: str
    index: list[int]  # table rows the feature rows come from

    @property
    def dimension(self) -> int:
        return self.rows.shape[1]


def featurize(
    records: QsarTable | Sequence[QsarRecord],
    kind: str,
    model: Optional[encdec.SeqModel] = None,
    skip_unencodable: bool = False,
) -> FeatureMatrix:
    """One feature row per record.

    For the latent kind, molecules the model cannot tokenize raise
    :class:`FeaturizationError` unless ``skip_unencodable`` is set, in which
    case they are left out and ``index`` tells which rows survived.
    """
    records = list(records.records if isinstance(records, QsarTable) else records)
    if kind == "ecfp4_1024":
        rows = np.array([morgan_fingerprint(r.mol, 2, 1024).bits for r in records], dtype=np.float64)
        return FeatureMatrix(rows.reshape(len(records), 1024), kind, list(range(len(records))))
    if kind != "latent":
        raise ValueError(f"unknown feature kind {kind!r}; expected one of {FEATURE_KINDS}")
    if model is None:
        raise ValueError("latent features need a trained model")
    keep = []
    for k, r in enumerate(records):
        try:
            model.charset.encode(r.smiles, model.config.max_len)
        except (TokenNotInCharset, SequenceTooLong) as exc:
            if not skip_unencodable:
                raise FeaturizationError(k, r.smiles, exc) from exc
            continue
        keep.append(k)
    if not keep:
        return FeatureMatrix(np.zeros((0, model.config.bottleneck_dim)), kind, [])
    Z = encdec.encode(model, [records[k].smiles for k in keep]).astype(np.float64)
    return FeatureMatrix(Z, kind, keep)


# ---------------------------------------------------------------- hyperparameters

INIT_SCHEMES = ("glorot_uniform", "he_normal", "lecun_normal")


@dataclass(frozen=True)
class HyperParams:
    input_dropout: float = 0.0
    units: int = 256
    l2: float = 1e-4
    maxnorm: float = 3.0
    init: str = "glorot_uniform"
    batch_norm: bool = False
    activation: str = "relu"
    dropout: float = 0.1
    hidden_layers: int = 2
    lr: float = 1e-3
    optimizer: str = "adam"

    def __post_init__(self):
        if self.batch_norm:
            raise ValueError("batch normalization is not available in the reduced search space")
        checks = [
            (0.0 <= self.input_dropout <= 0.95, "input_dropout"),
            (2 <= self.units <= 1024, "units"),
            (1e-6 <= self.l2 <= 0.1, "l2"),
            (0.5 <= self.maxnorm <= 6.0, "maxnorm"),
            (self.init in INIT_SCHEMES, "init"),
            (self.activation in ("relu", "selu"), "activation"),
            (0.0 <= self.dropout <= 0.95, "dropout"),
            (1 <= self.hidden_layers <= 6, "hidden_layers"),
            (1e-5 <= self.lr <= 0.1, "lr"),
            (self.optimizer in ("adam", "sgd"), "optimizer"),
        ]
        for ok, name in checks:
            if not ok:
                raise ValueError(f"hyperparameter {name}={getattr(self, name)!r} out of bounds")


def sample_hyperparams(rng: np.random.Generator) -> HyperParams:
    """Uniform draw from the search bounds; lr and l2 log-uniform."""
    return HyperParams(
        input_dropout=float(rng.uniform(0.0, 0.95)),
        units=int(rng.integers(2, 1025)),
        l2=float(math.exp(rng.uniform(math.log(1e-6), math.log(0.1)))),
        maxnorm=float(rng.uniform(0.5, 6.0)),
        init=INIT_SCHEMES[int(rng.integers(len(INIT_SCHEMES)))],
        activation=("relu", "selu")[int(rng.integers(2))],
        dropout=float(rng.uniform(0.0, 0.95)),
        hidden_layers=int(rng.integers(1, 7)),
        lr=float(math.exp(rng.uniform(math.log(1e-5), math.log(0.1)))),
        optimizer=("adam", "sgd")[int(rng.integers(2))],
    )


# ---------------------------------------------------------------- MLP


def _init_weight(rng: np.random.Generator, scheme: str, fan_in: int, fan_out: int) -> np.ndarray:
    if scheme == "glorot_uniform":
        lim = math.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-lim, lim, (fan_in, fan_out))
    if scheme == "he_normal":
        return rng.normal(0.0, math.sqrt(2.0 / fan_in), (fan_in, fan_out))
    return rng.normal(0.0, math.sqrt(1.0 / fan_in), (fan_in, fan_out))


def _act(name: str, a: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(a, 0.0)
    return _SELU_SCALE * np.where(a > 0, a, _SELU_ALPHA * np.expm1(np.minimum(a, 0.0)))


def _act_grad(name: str, a: np.ndarray) -> np.ndarray:
    if name == "relu":
        return (a > 0).astype(a.dtype)
    return _SELU_SCALE * np.where(a > 0, 1.0, _SELU_ALPHA * np.exp(np.minimum(a, 0.0)))


class Mlp:
    """Dense regression network with dropout, L2 and max-norm constraints."""

    def __init__(self, n_in: int, hp: HyperParams, rng: np.random.Generator, dtype=np.float64):
        self.hp = hp
        sizes = [n_in] + [hp.units] * hp.hidden_layers + [1]
        self.params: dict[str, np.ndarray] = {}
        for k in range(len(sizes) - 1):
            scheme = hp.init if k < hp.hidden_layers else "glorot_uniform"
            self.params[f"W{k}"] = _init_weight(rng, scheme, sizes[k], sizes[k + 1]).astype(dtype)
            self.params[f"b{k}"] = np.zeros(sizes[k + 1], dtype=dtype)
        self.n_layers = len(sizes) - 1

    def forward(self, X: np.ndarray, rng: Optional[np.random.Generator] = None):
        """Forward pass; dropout is active only when ``rng`` is given."""
        hp = self.hp
        cache = []
        h = X
        if rng is not None and hp.input_dropout > 0:
            keep = 1.0 - hp.input_dropout
            h = h * (rng.random(h.shape) < keep) / keep
        for k in range(self.n_layers):
            a = h @ self.params[f"W{k}"] + self.params[f"b{k}"]
            if k == self.n_layers - 1:
                cache.append((h, a, None))
                return a[:, 0], cache
            out = _act(hp.activation, a)
            mask = None
            if rng is not None and hp.dropout > 0:
                keep = 1.0 - hp.dropout
                mask = (rng.random(out.shape) < keep) / keep
                out = out * mask
            cache.append((h, a, mask))
            h = out
        raise AssertionError("unreachable")

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.forward(X)[0]

    def loss_and_grads(self, X: np.ndarray, y: np.ndarray, rng: Optional[np.random.Generator] = None):
        """Mean squared error plus ``l2 * sum(W**2)`` over hidden kernels."""
        pred, cache = self.forward(X, rng)
        n = len(y)
        diff = pred - y
        loss = float(diff @ diff) / n
        grads = {}
        d = (2.0 / n) * diff[:, None]
        for k in range(self.n_layers - 1, -1, -1):
            h, a, mask = cache[k]
            if k < self.n_layers - 1:
                if mask is not None:
                    d = d * mask
                d = d * _act_grad(self.hp.activation, a)
            W = self.params[f"W{k}"]
            grads[f"W{k}"] = h.T @ d
            grads[f"b{k}"] = d.sum(axis=0)
            if k < self.n_layers - 1:
                loss += self.hp.l2 * float(np.sum(W * W))
                grads[f"W{k}"] += 2.0 * self.hp.l2 * W
            if k > 0:
                d = d @ W.T
        return loss, grads

    def apply_maxnorm(self) -> None:
        for k in range(self.n_layers - 1):
            W = self.params[f"W{k}"]
            norms = np.sqrt((W * W).sum(axis=0))
            scale = np.minimum(1.0, self.hp.maxnorm / np.maximum(norms, 1e-12))
            W *= scale


@dataclass
class _Scaler:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "_Scaler":
        std = X.std(axis=0)
        return cls(X.mean(axis=0), np.where(std > 1e-12, std, 1.0))

    def __call__(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.std


@dataclass
class FittedModel:
    net: Mlp
    x_scaler: _Scaler
    y_mean: float
    y_std: float
    best_epoch: int

    def predict(self, X) -> np.ndarray:
        Xs = self.x_scaler(np.asarray(X, dtype=np.float64)).astype(self.net.params["W0"].dtype)
        return self.net.predict(Xs).astype(np.float64) * self.y_std + self.y_mean


def fit_mlp(
    X: np.ndarray,
    y: np.ndarray,
    hp: HyperParams,
    seed: int = 0,
    epochs: int = 100,
    batch_size: int = 64,
    X_val: Optional[np.ndarray] = None,
    y_val: Optional[np.ndarray] = None,
    patience: int = 20,
) -> FittedModel:
    """Train one network. Features and targets are standardized on ``X``/``y``
    and training runs in float32. A constant target yields a model that
    predicts that constant.

    With validation data the parameters from the best validation epoch are
    kept and training stops after ``patience`` epochs without improvement.
    """
    rng = np.random.default_rng(seed)
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    xs = _Scaler.fit(X)
    y_mean = float(y.mean())
    y_std = float(y.std())
    Xs = xs(X).astype(np.float32)
    ys = ((y - y_mean) / (y_std or 1.0)).astype(np.float32)
    net = Mlp(X.shape[1], hp, rng, dtype=np.float32)
    opt = AdamState(lr=hp.lr)
    fitted = FittedModel(net, xs, y_mean, y_std, 0)
    if y_std == 0.0:
        return fitted
    best = (math.inf, None, 0)
    stale = 0
    # divergent trials (large sgd steps) overflow; they are scored as inf and lose
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(1, epochs + 1):
            order = rng.permutation(len(ys))
            for start in range(0, len(order), batch_size):
                idx = order[start : start + batch_size]
                _, grads = net.loss_and_grads(Xs[idx], ys[idx], rng)
                if not all(np.all(np.isfinite(g)) for g in grads.values()):
                    break
                if hp.optimizer == "adam":
                    adam_step(opt, net.params, grads)
                else:
                    sgd_step(hp.lr, net.params, grads)
                net.apply_maxnorm()
            if X_val is None:
                continue
            err = rmse(y_val, fitted.predict(X_val))
            if not math.isfinite(err):
                break
            if err < best[0]:
                best = (err, {k: v.copy() for k, v in net.params.items()}, epoch)
                stale = 0
            else:
                stale += 1
                if stale >= patience:
                    break
    if best[1] is not None:
        net.params = best[1]
        fitted.best_epoch = best[2]
    else:
        fitted.best_epoch = epochs
    return fitted


# ---------------------------------------------------------------- metrics and CV


def rmse(y, pred) -> float:
    y = np.asarray(y, dtype=np.float64)
    pred = np.asarray(pred, dtype=np.float64)
    if not np.all(np.isfinite(pred)):
        return math.inf
    return float(np.sqrt(np.mean((y - pred) ** 2)))


def r2_score(y, pred) -> Optional[float]:
    """Squared Pearson correlation; None when either side is constant."""
    y = np.asarray(y, dtype=np.float64)
    pred = np.asarray(pred, dtype=np.float64)
    if not np.all(np.isfinite(pred)):
        return None
    dy = y - y.mean()
    dp = pred - pred.mean()
    syy, spp = float(dy @ dy), float(dp @ dp)
    if syy <= 1e-24 or spp <= 1e-24:
        return None
    r = float(dy @ dp) / math.sqrt(syy * spp)
    return r * r


def kfold_indices(n: int, folds: int, seed: int = 0) -> list[np.ndarray]:
    """Disjoint, exhaustive, seed-deterministic folds."""
    if not 2 <= folds <= n:
        raise ValueError(f"need 2 <= folds <= n, got folds={folds}, n={n}")
    order = np.random.default_rng(seed).permutation(n)
    return [np.sort(part) for part in np.array_split(order, folds)]


@dataclass
class Trial:
    hp: HyperParams
    cv_rmse: float
    fold_rmse: list[float]


@dataclass
class SearchResult:
    best: HyperParams
    trials: list[Trial]

    @property
    def best_trial(self) -> Trial:
        return min(self.trials, key=lambda t: t.cv_rmse)

    def to_json(self) -> list[dict]:
        return [{"hp": asdict(t.hp), "cv_rmse": t.cv_rmse, "fold_rmse": t.fold_rmse} for t in self.trials]


def cross_validate(X, y, hp: HyperParams, folds: int = 3, seed: int = 0, **fit_kw) -> Trial:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    parts = kfold_indices(len(y), folds, seed)
    errs = []
    for k, val in enumerate(parts):
        tr = np.setdiff1d(np.arange(len(y)), val)
        m = fit_mlp(X[tr], y[tr], hp, seed=seed * 1000 + k, X_val=X[val], y_val=y[val], **fit_kw)
        errs.append(rmse(y[val], m.predict(X[val])))
    return Trial(hp, float(np.mean(errs)), errs)


def random_search(X, y, n_trials: int = 30, folds: int = 3, seed: int = 0, **fit_kw) -> SearchResult:
    """Seeded random search; the winner minimizes mean CV RMSE (first wins ties)."""
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    rng = np.random.default_rng(seed)
    trials = []
    for t in range(n_trials):
        hp = sample_hyperparams(rng)
        t0 = time.perf_counter()
        trials.append(cross_validate(X, y, hp, folds, seed=seed + t, **fit_kw))
        log.info("trial %d/%d: %d x %d %s %s lr %.1e -> cv rmse %.3f (%.1f s)", t + 1, n_trials, hp.hidden_layers,
                 hp.units, hp.activation, hp.optimizer, hp.lr, trials[-1].cv_rmse, time.perf_counter() - t0)
    best = min(trials, key=lambda tr: tr.cv_rmse)
    return SearchResult(best.hp, trials)


@dataclass
class QsarResult:
    r2: Optional[float]
    rmse: float
    fold_metrics: list[dict]
    predictions: np.ndarray  # ensemble predictions on the test set
    fold_predictions: np.ndarray = field(repr=False)  # [folds, n_test]

    @property
    def degenerate(self) -> bool:
        return self.r2 is None

    def to_dict(self) -> dict:
        return {"r2": self.r2, "rmse": self.rmse, "degenerate": self.degenerate, "folds": self.fold_metrics}


def train_eval(X_train, y_train, X_test, y_test, hp: HyperParams, folds: int = 10, seed: int = 0, **fit_kw) -> QsarResult:
    """K-fold ensemble: each fold model trains on the other folds (early
    stopping on its own fold); test predictions are the plain mean."""
    X_train = np.asarray(X_train, dtype=np.float64)
    y_train = np.asarray(y_train, dtype=np.float64)
    X_test = np.asarray(X_test, dtype=np.float64)
    y_test = np.asarray(y_test, dtype=np.float64)
    preds, metrics = [], []
    for k, val in enumerate(kfold_indices(len(y_train), folds, seed)):
        tr = np.setdiff1d(np.arange(len(y_train)), val)
        m = fit_mlp(X_train[tr], y_train[tr], hp, seed=seed * 1000 + k, X_val=X_train[val], y_val=y_train[val], **fit_kw)
        preds.append(m.predict(X_test))
        metrics.append({"fold": k, "val_rmse": rmse(y_train[val], m.predict(X_train[val])), "best_epoch": m.best_epoch})
    P = np.stack(preds)
    ens = P.mean(axis=0)
    return QsarResult(r2_score(y_test, ens), rmse(y_test, ens), metrics, ens, P)


# ---------------------------------------------------------------- pipeline


def run_qsar(
    table: QsarTable,
    model: Optional[encdec.SeqModel] = None,
    n_trials: int = 30,
    seed: int = 0,
    search_folds: int = 3,
    ensemble_folds: int = 10,
    **fit_kw,
) -> dict:
    """Search hyperparameters on ECFP4 features, then evaluate ECFP4 and (if
    a model is given) latent features with those same hyperparameters.

    When latent features are requested, molecules the model cannot encode
    are removed from both feature kinds so the comparison is paired.
    """
    train = table.part("train")
    test = table.part("test")
    kinds = ["ecfp4_1024"] + (["latent"] if model is not None else [])
    if model is not None:
        lat_tr = featurize(train, "latent", model, skip_unencodable=True)
        lat_te = featurize(test, "latent", model, skip_unencodable=True)
        train = [train[i] for i in lat_tr.index]
        test = [test[i] for i in lat_te.index]
    feats = {"ecfp4_1024": (featurize(train, "ecfp4_1024"), featurize(test, "ecfp4_1024"))}
    if model is not None:
        feats["latent"] = (
            FeatureMatrix(lat_tr.rows, "latent", list(range(len(train)))),
            FeatureMatrix(lat_te.rows, "latent", list(range(len(test)))),
        )
    y_tr = np.array([r.value for r in train])
    y_te = np.array([r.value for r in test])
    search = random_search(feats["ecfp4_1024"][0].rows, y_tr, n_trials, search_folds, seed, **fit_kw)
    report = {
        "dataset": table.name,
        "seed": seed,
        "n_train": len(train),
        "n_test": len(test),
        "dropped_unparseable": len(table.dropped),
        "notes": list(table.notes),
        "hyperparameters": asdict(search.best),
        "search": search.to_json(),
        "results": {},
        "_predictions": {},
    }
    for kind in kinds:
        Xtr, Xte = feats[kind]
        res = train_eval(Xtr.rows, y_tr, Xte.rows, y_te, search.best, ensemble_folds, seed, **fit_kw)
        report["results"][kind] = res.to_dict()
        report["_predictions"][kind] = res.predictions
    report["_test_smiles"] = [r.smiles for r in test]
    report["_test_values"] = y_te
    return report


def write_report(report: dict, json_path, csv_path=None, meta: Optional[dict] = None) -> None:
    public = {k: v for k, v in report.items() if not k.startswith("_")}
    public["meta"] = meta or {}
    with open(json_path, "w") as fh:
        json.dump(public, fh, indent=1, sort_keys=True)
    if csv_path is None:
        return
    kinds = sorted(report["_predictions"])
    with open(csv_path, "w", newline="") as fh:
        if meta:
            fh.write("# " + json.dumps(meta, sort_keys=True) + "\n")
        w = csv.writer(fh)
        w.writerow(["smiles", "value"] + [f"pred_{k}" for k in kinds])
        for i, s in enumerate(report["_test_smiles"]):
            w.writerow([s, repr(float(report["_test_values"][i]))] + [repr(float(report["_predictions"][k][i])) for k in kinds])
