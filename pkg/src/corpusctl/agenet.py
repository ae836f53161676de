"""Recording-year estimation from speaker embeddings.

A deliberately simple model: softmax logistic regression trained with
deterministic full-batch gradient descent (backtracking on any loss
increase), so runs are reproducible and the analytic gradient can be
checked against central differences entry by entry.

On the real corpus this probe reaches macro-F1 0.63 / R-squared 0.77 with
pretrained speaker embeddings; those numbers need the real embeddings and
are documented as the reference result, not asserted by tests.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CorpusctlError, ValidationError

__all__ = [
    "EmbeddingSample",
    "SoftmaxModel",
    "EvalMetrics",
    "TrainingError",
    "softmax",
    "train",
    "evaluate",
    "grad_check",
    "stratified_split",
    "load_embeddings",
]


class TrainingError(CorpusctlError):
    pass


@dataclass(frozen=True)
class EmbeddingSample:
    vector: np.ndarray
    year: int


@dataclass
class SoftmaxModel:
    weights: np.ndarray  # (K, d)
    bias: np.ndarray  # (K,)
    class_years: tuple[int, ...]

    def logits(self, x: np.ndarray) -> np.ndarray:
        return x @ self.weights.T + self.bias

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return softmax(self.logits(x))

    def predict_year(self, x: np.ndarray) -> np.ndarray:
        years = np.array(self.class_years)
        return years[np.argmax(self.logits(x), axis=1)]

    def expected_year(self, x: np.ndarray) -> np.ndarray:
        years = np.array(self.class_years, dtype=np.float64)
        return self.predict_proba(x) @ years

    def save(self, path: str | Path) -> None:
        data = {
            "weights": self.weights.tolist(),
            "bias": self.bias.tolist(),
            "class_years": list(self.class_years),
        }
        Path(path).write_text(json.dumps(data), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "SoftmaxModel":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            weights=np.array(data["weights"], dtype=np.float64),
            bias=np.array(data["bias"], dtype=np.float64),
            class_years=tuple(data["class_years"]),
        )


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def _design(samples: list[EmbeddingSample], class_years: tuple[int, ...]):
    x = np.vstack([np.asarray(s.vector, dtype=np.float64) for s in samples])
    index = {year: k for k, year in enumerate(class_years)}
    y = np.zeros((len(samples), len(class_years)))
    for row, sample in enumerate(samples):
        y[row, index[sample.year]] = 1.0
    return x, y


def _loss_and_grads(w, b, x, y, l2):
    logits = x @ w.T + b
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1)) + logits.max(axis=1)
    ce = float(np.mean(log_z - (logits * y).sum(axis=1)))
    loss = ce + 0.5 * l2 * float(np.sum(w * w))
    probs = softmax(logits)
    g = (probs - y) / x.shape[0]
    grad_w = g.T @ x + l2 * w
    grad_b = g.sum(axis=0)
    return loss, grad_w, grad_b


def loss_value(model: SoftmaxModel, samples: list[EmbeddingSample], l2: float = 0.0) -> float:
    x, y = _design(samples, model.class_years)
    return _loss_and_grads(model.weights, model.bias, x, y, l2)[0]


def train(
    samples: list[EmbeddingSample],
    learning_rate: float = 0.5,
    epochs: int = 300,
    l2: float = 1e-4,
    seed: int = 0,
) -> tuple[SoftmaxModel, list[float]]:
    """Full-batch gradient descent on mean cross-entropy + L2 on the weights.

    Any step that would increase the loss is retried with a halved step
    size (which then sticks), so the returned loss trace is non-increasing.
    Initialization is N(0, 0.01) from the seeded generator.
    """
    if learning_rate <= 0:
        raise ValueError("learning_rate must be > 0")
    class_years = tuple(sorted({s.year for s in samples}))
    if not class_years:
        raise ValidationError("no samples")
    counts = {year: 0 for year in class_years}
    for s in samples:
        counts[s.year] += 1
    empty = [year for year, c in counts.items() if c == 0]
    if empty:
        raise ValidationError(f"classes without samples: {empty}")

    x, y = _design(samples, class_years)
    rng = np.random.default_rng(seed)
    w = rng.normal(0.0, 0.01, size=(len(class_years), x.shape[1]))
    b = rng.normal(0.0, 0.01, size=len(class_years))

    loss, grad_w, grad_b = _loss_and_grads(w, b, x, y, l2)
    trace = [loss]
    step = learning_rate
    for epoch in range(epochs):
        if not np.isfinite(loss):
            raise TrainingError(f"loss diverged (non-finite) at epoch {epoch}")
        accepted = False
        for _ in range(60):
            w_new = w - step * grad_w
            b_new = b - step * grad_b
            new_loss, new_gw, new_gb = _loss_and_grads(w_new, b_new, x, y, l2)
            if np.isfinite(new_loss) and new_loss <= loss:
                w, b = w_new, b_new
                loss, grad_w, grad_b = new_loss, new_gw, new_gb
                accepted = True
                break
            step /= 2
        if not accepted:
            break  # step underflowed; we are at numerical convergence
        trace.append(loss)
    return SoftmaxModel(weights=w, bias=b, class_years=class_years), trace


@dataclass(frozen=True)
class EvalMetrics:
    macro_f1: float
    r_squared: float
    r_squared_expected: float
    accuracy: float

    def to_json(self) -> dict:
        return {
            "macro_f1": self.macro_f1,
            "r_squared": self.r_squared,
            "r_squared_expected": self.r_squared_expected,
            "accuracy": self.accuracy,
        }


def _macro_f1(true_years, pred_years, class_years) -> float:
    scores = []
    for year in class_years:
        tp = int(np.sum((pred_years == year) & (true_years == year)))
        fp = int(np.sum((pred_years == year) & (true_years != year)))
        fn = int(np.sum((pred_years != year) & (true_years == year)))
        if tp + fp + fn == 0:
            continue  # class absent from both truth and predictions
        scores.append(2 * tp / (2 * tp + fp + fn))
    return float(np.mean(scores)) if scores else 0.0


def _r_squared(true_years: np.ndarray, predicted: np.ndarray) -> float:
    ss_res = float(np.sum((true_years - predicted) ** 2))
    ss_tot = float(np.sum((true_years - true_years.mean()) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res == 0.0 else 0.0
    return 1.0 - ss_res / ss_tot


def evaluate(model: SoftmaxModel, samples: list[EmbeddingSample]) -> EvalMetrics:
    """Macro-F1 over year classes plus R-squared of the year-as-number fit.

    R-squared treats the argmax class year as a numeric prediction of the
    true year; the probability-weighted expected year is reported alongside
    since either reading is defensible.
    """
    if not samples:
        raise ValidationError("evaluate needs at least one sample")
    x = np.vstack([np.asarray(s.vector, dtype=np.float64) for s in samples])
    true_years = np.array([s.year for s in samples])
    pred_years = model.predict_year(x)
    return EvalMetrics(
        macro_f1=_macro_f1(true_years, pred_years, model.class_years),
        r_squared=_r_squared(true_years, pred_years.astype(np.float64)),
        r_squared_expected=_r_squared(true_years, model.expected_year(x)),
        accuracy=float(np.mean(pred_years == true_years)),
    )


def grad_check(
    model: SoftmaxModel,
    samples: list[EmbeddingSample],
    epsilon: float = 1e-5,
    l2: float = 0.0,
    max_samples: int = 64,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    The comparison scale is floored at 1e-6 so an entry whose true gradient
    is exactly zero (symmetric data, or a converged model) is not judged by
    dividing finite-difference noise by itself; a genuinely wrong gradient
    still fails by orders of magnitude.
    """
    if not 0 < epsilon <= 1e-3:
        raise ValueError("epsilon must be in (0, 1e-3]")
    subset = samples[:max_samples]
    x, y = _design(subset, model.class_years)
    w = model.weights.astype(np.float64).copy()
    b = model.bias.astype(np.float64).copy()
    _, grad_w, grad_b = _loss_and_grads(w, b, x, y, l2)

    worst = 0.0

    def probe(array, grad, index):
        nonlocal worst
        original = array[index]
        array[index] = original + epsilon
        up = _loss_and_grads(w, b, x, y, l2)[0]
        array[index] = original - epsilon
        down = _loss_and_grads(w, b, x, y, l2)[0]
        array[index] = original
        numeric = (up - down) / (2 * epsilon)
        analytic = grad[index]
        scale = max(abs(numeric), abs(analytic), 1e-6)
        worst = max(worst, abs(numeric - analytic) / scale)

    for index in np.ndindex(w.shape):
        probe(w, grad_w, index)
    for index in np.ndindex(b.shape):
        probe(b, grad_b, index)
    return worst


def stratified_split(
    samples: list[EmbeddingSample], test_fraction: float = 0.2, seed: int = 0
) -> tuple[list[EmbeddingSample], list[EmbeddingSample]]:
    """Seeded per-class shuffle and split; every class keeps >= 1 train sample."""
    rng = np.random.default_rng(seed)
    train_set: list[EmbeddingSample] = []
    test_set: list[EmbeddingSample] = []
    by_year: dict[int, list[EmbeddingSample]] = {}
    for sample in samples:
        by_year.setdefault(sample.year, []).append(sample)
    for year in sorted(by_year):
        group = by_year[year]
        order = rng.permutation(len(group))
        n_test = min(len(group) - 1, int(round(len(group) * test_fraction)))
        for pos, idx in enumerate(order):
            (test_set if pos < n_test else train_set).append(group[idx])
    return train_set, test_set


def load_embeddings(path: str | Path) -> list[EmbeddingSample]:
    """Read NDJSON rows of {snippet_id, year, vector}."""
    samples = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        data = json.loads(line)
        samples.append(EmbeddingSample(np.array(data["vector"], dtype=np.float64), int(data["year"])))
    return samples
