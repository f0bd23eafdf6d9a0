"""From-scratch recurrent classifiers over band-power sequences.

Single-direction LSTM and BiLSTM (50 hidden units per direction), a dense
softmax head, categorical cross-entropy, inverted dropout on the recurrent
output, Adam, and full backpropagation through time. Everything is plain
numpy in double precision so the analytic gradients can be checked against
central finite differences.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import N_BANDS, derive_rng
from .errors import DegenerateLabels, NonFiniteInput

HIDDEN_UNITS = 50
NUM_CLASSES = 2
INIT_RANGE = 0.08
FORGET_BIAS = 1.0

GATE_KEYS = ("i", "f", "o", "c")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.001
    epochs: int = 50
    batch_size: int = 32
    dropout_rate: float = 0.2
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    hidden: int = HIDDEN_UNITS
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.learning_rate < 1:
            raise ValueError("learning rate must be in (0, 1)")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not 0 <= self.dropout_rate < 1:
            raise ValueError("dropout rate must be in [0, 1)")


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def init_lstm_params(input_dim: int, hidden: int, rng: np.random.Generator) -> dict:
    params = {}
    for g in GATE_KEYS:
        params[f"W{g}"] = rng.uniform(-INIT_RANGE, INIT_RANGE, (hidden, input_dim))
        params[f"U{g}"] = rng.uniform(-INIT_RANGE, INIT_RANGE, (hidden, hidden))
        params[f"b{g}"] = rng.uniform(-INIT_RANGE, INIT_RANGE, hidden)
    params["bf"] = params["bf"] + FORGET_BIAS  # standard forget-gate bias init
    return params


def init_head_params(feature_dim: int, rng: np.random.Generator) -> dict:
    return {
        "W": rng.uniform(-INIT_RANGE, INIT_RANGE, (NUM_CLASSES, feature_dim)),
        "b": rng.uniform(-INIT_RANGE, INIT_RANGE, NUM_CLASSES),
    }


def _as_batch(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 2:
        x = x[None]
    if not np.all(np.isfinite(x)):
        raise NonFiniteInput("sequence contains non-finite values")
    return x


def lstm_forward(params: dict, x: np.ndarray):
    """Run the recurrence; returns (last hidden state, cache for BPTT).

    x is (T, D) for a single sequence or (B, T, D) for a batch; the hidden
    output matches ((H,) or (B, H)). Initial hidden and cell state are zero.
    """
    single = np.asarray(x).ndim == 2
    xb = _as_batch(x)
    B, T, _ = xb.shape
    H = params["Wi"].shape[0]
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    steps = []
    for t in range(T):
        xt = xb[:, t]
        i = sigmoid(xt @ params["Wi"].T + h @ params["Ui"].T + params["bi"])
        f = sigmoid(xt @ params["Wf"].T + h @ params["Uf"].T + params["bf"])
        o = sigmoid(xt @ params["Wo"].T + h @ params["Uo"].T + params["bo"])
        g = np.tanh(xt @ params["Wc"].T + h @ params["Uc"].T + params["bc"])
        c_new = f * c + i * g
        h_new = o * np.tanh(c_new)
        steps.append({"x": xt, "h_prev": h, "c_prev": c, "i": i, "f": f, "o": o, "g": g, "c": c_new})
        h, c = h_new, c_new
    cache = {"steps": steps, "B": B}
    return (h[0] if single else h), cache


def lstm_backward(params: dict, cache: dict, dh_last: np.ndarray) -> dict:
    """BPTT from a gradient on the final hidden state; returns param grads."""
    steps = cache["steps"]
    B = cache["B"]
    dh = dh_last.reshape(B, -1)
    dc = np.zeros_like(dh)
    grads = {k: np.zeros_like(v) for k, v in params.items()}
    for step in reversed(steps):
        i, f, o, g, c = step["i"], step["f"], step["o"], step["g"], step["c"]
        tanh_c = np.tanh(c)
        do = dh * tanh_c
        dc = dc + dh * o * (1 - tanh_c**2)
        di = dc * g
        dg = dc * i
        df = dc * step["c_prev"]
        dc_prev = dc * f
        # pre-activation gradients
        da_i = di * i * (1 - i)
        da_f = df * f * (1 - f)
        da_o = do * o * (1 - o)
        da_g = dg * (1 - g**2)
        for key, da in zip(GATE_KEYS, (da_i, da_f, da_o, da_g)):
            grads[f"W{key}"] += da.T @ step["x"]
            grads[f"U{key}"] += da.T @ step["h_prev"]
            grads[f"b{key}"] += da.sum(axis=0)
        dh = (
            da_i @ params["Ui"]
            + da_f @ params["Uf"]
            + da_o @ params["Uo"]
            + da_g @ params["Uc"]
        )
        dc = dc_prev
    return grads


def bilstm_forward(params: dict, x: np.ndarray):
    """Concatenate the forward pass and the reversed-sequence pass."""
    single = np.asarray(x).ndim == 2
    xb = _as_batch(x)
    h_fwd, cache_fwd = lstm_forward(params["forward"], xb)
    h_bwd, cache_bwd = lstm_forward(params["backward"], xb[:, ::-1])
    h = np.concatenate([h_fwd, h_bwd], axis=1)
    return (h[0] if single else h), {"forward": cache_fwd, "backward": cache_bwd}


def bilstm_backward(params: dict, cache: dict, dh_last: np.ndarray) -> dict:
    B = cache["forward"]["B"]
    dh = dh_last.reshape(B, -1)
    H = dh.shape[1] // 2
    return {
        "forward": lstm_backward(params["forward"], cache["forward"], dh[:, :H]),
        "backward": lstm_backward(params["backward"], cache["backward"], dh[:, H:]),
    }


def softmax_cross_entropy(logits: np.ndarray, labels) -> tuple[np.ndarray, np.ndarray]:
    """Stable softmax + cross-entropy; accepts one sample or a batch.

    Returns (per-sample loss, probabilities).
    """
    single = np.asarray(logits).ndim == 1
    z = np.atleast_2d(np.asarray(logits, dtype=float))
    if not np.all(np.isfinite(z)):
        raise NonFiniteInput("non-finite logits")
    y = np.atleast_1d(np.asarray(labels, dtype=int))
    z = z - z.max(axis=1, keepdims=True)
    expz = np.exp(z)
    probs = expz / expz.sum(axis=1, keepdims=True)
    losses = -np.log(probs[np.arange(len(y)), y])
    if single:
        return losses[0], probs[0]
    return losses, probs


def _softmax_grad(probs: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """d(mean loss)/d logits for a batch."""
    d = probs.copy()
    d[np.arange(len(labels)), labels] -= 1.0
    return d / len(labels)


@dataclass
class SequenceClassifier:
    kind: str  # "lstm" | "bilstm"
    recurrent: dict
    head: dict
    band_mean: np.ndarray
    band_scale: np.ndarray
    config: TrainConfig
    curve: list = field(default_factory=list)  # (epoch, loss, train_accuracy)

    def feature_dim(self) -> int:
        return self.head["W"].shape[1]

    def hidden_states(self, X):
        Z = (np.asarray(X, dtype=float) - self.band_mean) / self.band_scale
        if self.kind == "lstm":
            h, cache = lstm_forward(self.recurrent, Z)
        else:
            h, cache = bilstm_forward(self.recurrent, Z)
        return h, cache

    def predict_proba(self, X):
        h, _ = self.hidden_states(_as_batch(X))
        logits = h @ self.head["W"].T + self.head["b"]
        _, probs = softmax_cross_entropy(logits, np.zeros(len(logits), dtype=int))
        return probs

    def predict(self, X):
        return self.predict_proba(X)[:, 1] >= 0.5


def _recurrent_forward(kind, params, Z):
    return lstm_forward(params, Z) if kind == "lstm" else bilstm_forward(params, Z)


def _recurrent_backward(kind, params, cache, dh):
    return (
        lstm_backward(params, cache, dh)
        if kind == "lstm"
        else bilstm_backward(params, cache, dh)
    )


def loss_and_grads(kind, recurrent, head, Z, y, dropout_mask=None):
    """Mean cross-entropy over the batch plus gradients for all parameters."""
    h, cache = _recurrent_forward(kind, recurrent, Z)
    h_used = h * dropout_mask if dropout_mask is not None else h
    logits = h_used @ head["W"].T + head["b"]
    losses, probs = softmax_cross_entropy(logits, y)
    dlogits = _softmax_grad(probs, y)
    head_grads = {"W": dlogits.T @ h_used, "b": dlogits.sum(axis=0)}
    dh = dlogits @ head["W"]
    if dropout_mask is not None:
        dh = dh * dropout_mask
    rec_grads = _recurrent_backward(kind, recurrent, cache, dh)
    return float(np.mean(losses)), rec_grads, head_grads


# parameter tree <-> flat vector helpers (serialization + gradient checking)

def _tree_items(tree, prefix=""):
    for key in sorted(tree):
        value = tree[key]
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            yield from _tree_items(value, prefix=f"{name}/")
        else:
            yield name, value


def tree_to_vector(tree) -> np.ndarray:
    return np.concatenate([v.ravel() for _, v in _tree_items(tree)])


def vector_to_tree(vector: np.ndarray, template) -> dict:
    out = {}
    offset = 0

    def fill(src, dst):
        nonlocal offset
        for key in sorted(src):
            value = src[key]
            if isinstance(value, dict):
                dst[key] = {}
                fill(value, dst[key])
            else:
                size = value.size
                dst[key] = vector[offset : offset + size].reshape(value.shape)
                offset += size

    fill(template, out)
    return out


class Adam:
    """Standard Adam over a parameter tree."""

    def __init__(self, config: TrainConfig):
        self.config = config
        self.t = 0
        self.m = None
        self.v = None

    def step(self, params_vec: np.ndarray, grads_vec: np.ndarray) -> np.ndarray:
        cfg = self.config
        if self.m is None:
            self.m = np.zeros_like(params_vec)
            self.v = np.zeros_like(params_vec)
        self.t += 1
        self.m = cfg.beta1 * self.m + (1 - cfg.beta1) * grads_vec
        self.v = cfg.beta2 * self.v + (1 - cfg.beta2) * grads_vec**2
        m_hat = self.m / (1 - cfg.beta1**self.t)
        v_hat = self.v / (1 - cfg.beta2**self.t)
        return params_vec - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.epsilon)


def _init_model(kind: str, input_dim: int, config: TrainConfig, rng) -> tuple[dict, dict]:
    if kind == "lstm":
        recurrent = init_lstm_params(input_dim, config.hidden, rng)
        feat = config.hidden
    elif kind == "bilstm":
        recurrent = {
            "forward": init_lstm_params(input_dim, config.hidden, rng),
            "backward": init_lstm_params(input_dim, config.hidden, rng),
        }
        feat = 2 * config.hidden
    else:
        raise ValueError(f"unknown model kind {kind!r}")
    head = init_head_params(feat, rng)
    return recurrent, head


def train(kind: str, X, y, config: TrainConfig = TrainConfig()) -> SequenceClassifier:
    """Mini-batch BPTT training, deterministic per config.seed.

    X is (N, T, 8); y is boolean (N,). Inputs are standardized per band with
    statistics from this training set; dropout is applied to the recurrent
    output during training only (inverted scaling).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=bool)
    if y.all() or (~y).all():
        raise DegenerateLabels("both classes must be present")
    labels = y.astype(int)
    band_mean = X.reshape(-1, X.shape[-1]).mean(axis=0)
    scale = X.reshape(-1, X.shape[-1]).std(axis=0)
    band_scale = np.where(scale > 0, scale, 1.0)
    Z = (X - band_mean) / band_scale

    rng = derive_rng(config.seed)
    recurrent, head = _init_model(kind, X.shape[-1], config, rng)
    template = {"recurrent": recurrent, "head": head}
    vec = tree_to_vector(template)
    opt = Adam(config)
    n = len(Z)
    curve = []
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            tree = vector_to_tree(vec, template)
            mask = None
            if config.dropout_rate > 0:
                keep = 1.0 - config.dropout_rate
                feat = tree["head"]["W"].shape[1]
                mask = (rng.random((len(idx), feat)) < keep) / keep
            _, rec_g, head_g = loss_and_grads(
                kind, tree["recurrent"], tree["head"], Z[idx], labels[idx], dropout_mask=mask
            )
            gvec = tree_to_vector({"recurrent": rec_g, "head": head_g})
            vec = opt.step(vec, gvec)
        tree = vector_to_tree(vec, template)
        loss, _, _ = loss_and_grads(kind, tree["recurrent"], tree["head"], Z, labels)
        h, _ = _recurrent_forward(kind, tree["recurrent"], Z)
        logits = h @ tree["head"]["W"].T + tree["head"]["b"]
        acc = float(np.mean((logits[:, 1] >= logits[:, 0]) == y))
        curve.append((epoch, loss, acc))

    tree = vector_to_tree(vec, template)
    return SequenceClassifier(
        kind=kind,
        recurrent=tree["recurrent"],
        head=tree["head"],
        band_mean=band_mean,
        band_scale=band_scale,
        config=config,
        curve=curve,
    )


def grad_check(
    kind: str,
    sequence=None,
    label: int = 1,
    n_coords: int = 200,
    step: float = 1e-5,
    seed: int = 0,
    hidden: int = HIDDEN_UNITS,
) -> float:
    """Max relative error between BPTT gradients and central differences.

    Dropout is off; everything runs in float64. At least n_coords randomly
    chosen parameter coordinates are perturbed.
    """
    rng = derive_rng(seed)
    if sequence is None:
        sequence = rng.normal(size=(1, 12, N_BANDS))
    Z = _as_batch(sequence)
    config = TrainConfig(hidden=hidden, dropout_rate=0.0, seed=seed)
    recurrent, head = _init_model(kind, Z.shape[-1], config, rng)
    template = {"recurrent": recurrent, "head": head}
    y = np.array([label])

    _, rec_g, head_g = loss_and_grads(kind, recurrent, head, Z, y)
    analytic = tree_to_vector({"recurrent": rec_g, "head": head_g})
    vec = tree_to_vector(template)

    coords = rng.choice(vec.size, size=min(n_coords, vec.size), replace=False)
    max_rel = 0.0
    for c in coords:
        for sign, store in ((+1, "hi"), (-1, "lo")):
            bumped = vec.copy()
            bumped[c] += sign * step
            tree = vector_to_tree(bumped, template)
            loss, _, _ = loss_and_grads(kind, tree["recurrent"], tree["head"], Z, y)
            if store == "hi":
                loss_hi = loss
            else:
                loss_lo = loss
        numeric = (loss_hi - loss_lo) / (2 * step)
        denom = max(abs(analytic[c]), abs(numeric), 1e-6)
        max_rel = max(max_rel, abs(analytic[c] - numeric) / denom)
    return max_rel


def head_grad_check(n_coords: int = 60, step: float = 1e-6, seed: int = 0) -> float:
    """Finite-difference check of the dense + softmax head alone."""
    rng = derive_rng(seed)
    feat = 10
    head = init_head_params(feat, rng)
    h = rng.normal(size=(1, feat))
    y = np.array([1])

    def loss_of(head_tree):
        logits = h @ head_tree["W"].T + head_tree["b"]
        losses, _ = softmax_cross_entropy(logits, y)
        return float(np.mean(losses))

    logits = h @ head["W"].T + head["b"]
    losses, probs = softmax_cross_entropy(logits, y)
    dlogits = _softmax_grad(probs, y)
    analytic = tree_to_vector({"W": dlogits.T @ h, "b": dlogits.sum(axis=0)})
    vec = tree_to_vector(head)
    coords = rng.choice(vec.size, size=min(n_coords, vec.size), replace=False)
    max_rel = 0.0
    for c in coords:
        hi, lo = vec.copy(), vec.copy()
        hi[c] += step
        lo[c] -= step
        numeric = (loss_of(vector_to_tree(hi, head)) - loss_of(vector_to_tree(lo, head))) / (2 * step)
        denom = max(abs(analytic[c]), abs(numeric), 1e-8)
        max_rel = max(max_rel, abs(analytic[c] - numeric) / denom)
    return max_rel


# serialization

def model_to_json(model: SequenceClassifier) -> dict:
    def dump(tree):
        out = {}
        for key in sorted(tree):
            v = tree[key]
            out[key] = dump(v) if isinstance(v, dict) else {
                "shape": list(v.shape),
                "data": v.ravel().tolist(),  # row-major
            }
        return out

    return {
        "format_version": 1,
        "kind": model.kind,
        "recurrent": dump(model.recurrent),
        "head": dump(model.head),
        "band_mean": model.band_mean.tolist(),
        "band_scale": model.band_scale.tolist(),
        "config": {
            "learning_rate": model.config.learning_rate,
            "epochs": model.config.epochs,
            "batch_size": model.config.batch_size,
            "dropout_rate": model.config.dropout_rate,
            "hidden": model.config.hidden,
            "seed": model.config.seed,
        },
        "final_loss": model.curve[-1][1] if model.curve else None,
        "final_train_accuracy": model.curve[-1][2] if model.curve else None,
    }


def model_from_json(doc: dict) -> SequenceClassifier:
    def load(tree):
        out = {}
        for key, v in tree.items():
            if "shape" in v and "data" in v:
                out[key] = np.array(v["data"]).reshape(v["shape"])
            else:
                out[key] = load(v)
        return out

    return SequenceClassifier(
        kind=doc["kind"],
        recurrent=load(doc["recurrent"]),
        head=load(doc["head"]),
        band_mean=np.array(doc["band_mean"]),
        band_scale=np.array(doc["band_scale"]),
        config=TrainConfig(**doc["config"]),
    )


def save_model(model: SequenceClassifier, path) -> None:
    Path(path).write_text(json.dumps(model_to_json(model)))


def load_model(path) -> SequenceClassifier:
    return model_from_json(json.loads(Path(path).read_text()))


def write_loss_curve(model: SequenceClassifier, path) -> None:
    with open(path, "w") as f:
        f.write("epoch,loss,train_accuracy\n")
        for epoch, loss, acc in model.curve:
            f.write(f"{epoch},{loss:.8f},{acc:.6f}\n")
