"""Transparent classifiers over binary attribute vectors: from-scratch
multinomial logistic regression trained by full-batch gradient descent on
cross-entropy, and a Bernoulli Naive Bayes baseline.

The logistic loss is the summed negative log-likelihood of the true classes
plus an optional l2 penalty; the analytic gradient is checked against finite
differences in the test suite. Training starts from zero weights, so the
convex objective makes the fit fully deterministic.
"""

from __future__ import annotations

import shlex
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import AttributeVector, AttributeVocabulary, ClassVocabulary
from .errors import FormatError, NumericError, ValidationError

STABLE_LEARNING_RATE = 0.5  # stable default for the per-sample-scaled step
MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = STABLE_LEARNING_RATE
    max_epochs: int = 5000
    loss_tolerance: float = 1e-9
    l2_penalty: float = 1e-4
    seed: int = 0  # unused by full-batch descent; reserved for subsampling

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be positive")
        if self.max_epochs < 1:
            raise ValidationError("max_epochs must be >= 1")
        if self.loss_tolerance < 0 or self.l2_penalty < 0:
            raise ValidationError("tolerance and penalty must be non-negative")


@dataclass(frozen=True)
class LogRegModel:
    """Weight matrix of shape (K classes, K_att attributes) plus vocabularies.

    With use_bias the input vector is augmented with a constant 1 and the
    weights carry one extra trailing column.
    """

    weights: np.ndarray
    class_vocab: ClassVocabulary
    attr_vocab: AttributeVocabulary
    use_bias: bool = False
    l2_penalty: float = 0.0

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        expected = (len(self.class_vocab),
                    len(self.attr_vocab) + (1 if self.use_bias else 0))
        if w.shape != expected:
            raise ValidationError(
                f"weight shape {w.shape} does not match vocabularies {expected}")
        if not np.all(np.isfinite(w)):
            raise ValidationError("weights must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n_classes(self) -> int:
        return len(self.class_vocab)

    @property
    def n_attrs(self) -> int:
        return len(self.attr_vocab)


def softmax(scores: np.ndarray) -> np.ndarray:
    """Stabilized softmax along the last axis; positive outputs summing to 1."""
    scores = np.asarray(scores, dtype=np.float64)
    shifted = scores - scores.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def sigmoid_predict(theta: np.ndarray, z: AttributeVector) -> float:
    """Binary logistic probability 1 / (1 + exp(-theta . z))."""
    theta = np.asarray(theta, dtype=np.float64)
    x = z.as_array()
    if theta.shape != x.shape:
        raise ValidationError(
            f"weight shape {theta.shape} does not match input {x.shape}")
    t = float(theta @ x)
    # evaluate the branch that keeps the exponent non-positive
    if t >= 0:
        return 1.0 / (1.0 + np.exp(-t))
    e = np.exp(t)
    return e / (1.0 + e)


def _design_matrix(model_or_flag, X) -> np.ndarray:
    use_bias = (model_or_flag.use_bias
                if isinstance(model_or_flag, LogRegModel) else model_or_flag)
    rows = [x.as_array() if isinstance(x, AttributeVector) else
            np.asarray(x, dtype=np.float64) for x in X]
    mat = np.stack(rows)
    if use_bias:
        mat = np.hstack([mat, np.ones((mat.shape[0], 1))])
    return mat


def loss(model: LogRegModel, X, y) -> float:
    """Summed cross-entropy of the true classes, plus l2 * ||w||^2."""
    if len(X) == 0:
        raise ValidationError("empty batch")
    if len(X) != len(y):
        raise ValidationError("X and y lengths differ")
    mat = _design_matrix(model, X)
    probs = softmax(mat @ model.weights.T)
    nll = -float(np.sum(np.log(probs[np.arange(len(y)), np.asarray(y)])))
    return nll + model.l2_penalty * float(np.sum(model.weights ** 2))


def gradient(model: LogRegModel, X, y) -> np.ndarray:
    """Analytic gradient of loss() with respect to the weight matrix."""
    if len(X) == 0:
        raise ValidationError("empty batch")
    if len(X) != len(y):
        raise ValidationError("X and y lengths differ")
    mat = _design_matrix(model, X)
    y = np.asarray(y)
    probs = softmax(mat @ model.weights.T)  # (N, K)
    onehot = np.zeros_like(probs)
    onehot[np.arange(len(y)), y] = 1.0
    grad = -(onehot - probs).T @ mat  # (K, D)
    return grad + 2.0 * model.l2_penalty * model.weights


def train_logreg(X, y, class_vocab: ClassVocabulary,
                 attr_vocab: AttributeVocabulary,
                 cfg: TrainConfig = TrainConfig(),
                 use_bias: bool = False) -> LogRegModel:
    """Fit by full-batch gradient descent from zero weights.

    The step is cfg.learning_rate scaled by 1/N so the default stays stable
    regardless of batch size (the loss itself is a sum). Stops when the loss
    decrease falls below cfg.loss_tolerance or at max_epochs; raises on
    sustained divergence.
    """
    y = list(y)
    present = set(y)
    missing = [c for c in range(len(class_vocab)) if c not in present]
    if missing:
        raise ValidationError(
            f"classes absent from training labels: {missing}")
    n = len(y)
    dim = len(attr_vocab) + (1 if use_bias else 0)
    mat = _design_matrix(use_bias, X)
    yarr = np.asarray(y)
    idx = np.arange(n)
    weights = np.zeros((len(class_vocab), dim))

    def batch_loss(w):
        probs = softmax(mat @ w.T)
        nll = -float(np.sum(np.log(probs[idx, yarr])))
        return nll + cfg.l2_penalty * float(np.sum(w ** 2))

    def batch_grad(w):
        probs = softmax(mat @ w.T)
        onehot = np.zeros_like(probs)
        onehot[idx, yarr] = 1.0
        return -(onehot - probs).T @ mat + 2.0 * cfg.l2_penalty * w

    prev = batch_loss(weights)
    step = cfg.learning_rate / n
    increases = 0
    for _ in range(cfg.max_epochs):
        # overflow on a divergent trajectory is reported as NumericError
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            weights = weights - step * batch_grad(weights)
            cur = batch_loss(weights)
        if not np.isfinite(cur):
            raise NumericError("loss became non-finite; "
                               "try a smaller learning_rate")
        if cur > prev:
            increases += 1
            if increases >= 10:
                raise NumericError(
                    "loss increased for 10 consecutive epochs; "
                    "try a smaller learning_rate")
        else:
            increases = 0
            if prev - cur < cfg.loss_tolerance:
                prev = cur
                break
        prev = cur
    return LogRegModel(weights, class_vocab, attr_vocab, use_bias,
                       cfg.l2_penalty)


def score_linear(model: LogRegModel, z: AttributeVector) -> np.ndarray:
    """Per-class linear scores w @ z; shares its argmax with predict_proba."""
    x = _design_matrix(model, [z])[0]
    return model.weights @ x


def predict_proba(model: LogRegModel, z: AttributeVector) -> np.ndarray:
    return softmax(score_linear(model, z))


def predict(model: LogRegModel, z: AttributeVector) -> int:
    """Argmax class; exact score ties resolve to the lowest class id."""
    return int(np.argmax(score_linear(model, z)))


def accuracy(model: LogRegModel, X, y) -> float:
    hits = sum(1 for z, label in zip(X, y) if predict(model, z) == label)
    return hits / len(y)


# ---------------------------------------------------------------------------
# Bernoulli Naive Bayes baseline


@dataclass(frozen=True)
class NaiveBayesModel:
    log_prior: np.ndarray  # (K,)
    log_on: np.ndarray  # (K, K_att) log P(bit=1 | class)
    log_off: np.ndarray  # (K, K_att) log P(bit=0 | class)
    class_vocab: ClassVocabulary
    attr_vocab: AttributeVocabulary

    def __post_init__(self):
        for name in ("log_prior", "log_on", "log_off"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if abs(float(np.exp(self.log_prior).sum()) - 1.0) > 1e-9:
            raise ValidationError("class priors must sum to 1")


def train_nb(X, y, class_vocab: ClassVocabulary,
             attr_vocab: AttributeVocabulary,
             alpha: float = 1.0) -> NaiveBayesModel:
    """Fit class-conditional independent Bernoulli bits with Laplace-alpha
    smoothing."""
    if alpha <= 0:
        raise ValidationError("alpha must be positive")
    y = np.asarray(list(y))
    mat = _design_matrix(False, X)
    k, d = len(class_vocab), len(attr_vocab)
    counts = np.zeros(k)
    on = np.zeros((k, d))
    for c in range(k):
        rows = mat[y == c]
        if len(rows) == 0:
            raise ValidationError(f"class {c} absent from training labels")
        counts[c] = len(rows)
        on[c] = rows.sum(axis=0)
    p_on = (on + alpha) / (counts[:, None] + 2.0 * alpha)
    return NaiveBayesModel(np.log(counts / counts.sum()), np.log(p_on),
                           np.log1p(-p_on), class_vocab, attr_vocab)


def nb_log_posterior(model: NaiveBayesModel, z: AttributeVector) -> np.ndarray:
    x = z.as_array()
    return (model.log_prior + model.log_on @ x + model.log_off @ (1.0 - x))


def predict_nb(model: NaiveBayesModel, z: AttributeVector) -> int:
    return int(np.argmax(nb_log_posterior(model, z)))


def accuracy_nb(model: NaiveBayesModel, X, y) -> float:
    hits = sum(1 for z, label in zip(X, y) if predict_nb(model, z) == label)
    return hits / len(y)


# ---------------------------------------------------------------------------
# model save format: versioned text, full decimal precision via repr()


def save_model(model: LogRegModel, path) -> None:
    lines = [f"logreg-model v{MODEL_FORMAT_VERSION}"]
    for i, name in enumerate(model.class_vocab.names):
        lines.append(f"class {i} {_q(name)}")
    for i, name in enumerate(model.attr_vocab.names, start=1):
        lines.append(f"attr {i} {_q(name)}")
    lines.append(f"bias {int(model.use_bias)}")
    lines.append(f"l2 {repr(model.l2_penalty)}")
    for k in range(model.weights.shape[0]):
        row = " ".join(repr(float(v)) for v in model.weights[k])
        lines.append(f"row {k} {row}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_model(path) -> LogRegModel:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != f"logreg-model v{MODEL_FORMAT_VERSION}":
        raise FormatError("unrecognized model header", str(path), 1)
    classes, attrs = {}, {}
    use_bias, l2 = False, 0.0
    rows = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        tokens = shlex.split(line)
        kind = tokens[0]
        try:
            if kind == "class":
                classes[int(tokens[1])] = tokens[2]
            elif kind == "attr":
                attrs[int(tokens[1])] = tokens[2]
            elif kind == "bias":
                use_bias = bool(int(tokens[1]))
            elif kind == "l2":
                l2 = float(tokens[1])
            elif kind == "row":
                rows[int(tokens[1])] = [float(v) for v in tokens[2:]]
            else:
                raise FormatError(f"unknown record kind {kind!r}",
                                  str(path), lineno)
        except (IndexError, ValueError) as exc:
            raise FormatError(f"malformed {kind} record: {exc}",
                              str(path), lineno)
    class_vocab = ClassVocabulary(tuple(classes[i] for i in sorted(classes)))
    attr_vocab = AttributeVocabulary(tuple(attrs[i] for i in sorted(attrs)))
    weights = np.asarray([rows[k] for k in sorted(rows)])
    return LogRegModel(weights, class_vocab, attr_vocab, use_bias, l2)


def _q(name: str) -> str:
    return shlex.quote(name)
