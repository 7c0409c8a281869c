"""Desk-scale reference implementation of the fine-tuning mathematics.

A toy next-token model (a bigram table: one-hot context feature -> vocabulary
logits) is trained with a frozen base matrix and a trainable low-rank adapter,
exercising the full chain: softmax probabilities, summed negative
log-likelihood over output tokens, analytic adapter gradients, SGD/AdamW
updates with a linearly decaying learning rate, periodic validation, and
early stopping. Small enough that every gradient can be checked against
central finite differences.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import EmptyDataset, ShapeMismatch, ZeroProbability


@dataclass(frozen=True)
class Vocabulary:
    tokens: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.tokens)) != len(self.tokens):
            raise ValueError("vocabulary tokens must be unique")

    def __len__(self) -> int:
        return len(self.tokens)

    def index(self, token: str) -> int:
        return self.tokens.index(token)


@dataclass
class ToyModel:
    """Base weight matrix W (m output logits x n context features); frozen
    during adapter training."""

    W: np.ndarray
    frozen: bool = True

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=float)
        if self.W.ndim != 2:
            raise ShapeMismatch("W must be a 2-d matrix")
        if not np.all(np.isfinite(self.W)):
            raise ValueError("W entries must be finite")

    @property
    def shape(self) -> tuple[int, int]:
        return self.W.shape


@dataclass
class LoraAdapter:
    """Low-rank update pair: effective delta is (alpha / r) * B @ A."""

    A: np.ndarray  # r x n
    B: np.ndarray  # m x r
    rank: int
    alpha: float

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        self.B = np.asarray(self.B, dtype=float)
        if self.A.shape[0] != self.rank or self.B.shape[1] != self.rank:
            raise ShapeMismatch("A must be r x n and B must be m x r")

    @property
    def scaling(self) -> float:
        return self.alpha / self.rank

    def delta(self) -> np.ndarray:
        return self.scaling * (self.B @ self.A)

    @classmethod
    def initialize(cls, m: int, n: int, rank: int, alpha: float, seed: int = 0,
                   init_sigma: float = 0.02) -> "LoraAdapter":
        """Gaussian A, zero B: the delta starts exactly at zero, so training
        begins from the unmodified base model."""
        if rank > min(m, n):
            raise ShapeMismatch(f"rank {rank} exceeds min(m, n) = {min(m, n)}")
        rng = np.random.default_rng(seed)
        return cls(
            A=rng.normal(0.0, init_sigma, size=(rank, n)),
            B=np.zeros((m, rank)),
            rank=rank,
            alpha=alpha,
        )

    def to_json(self) -> str:
        return json.dumps(
            {"r": self.rank, "alpha": self.alpha,
             "A": self.A.tolist(), "B": self.B.tolist()}
        )

    @classmethod
    def from_json(cls, text: str) -> "LoraAdapter":
        raw = json.loads(text)
        return cls(A=np.array(raw["A"]), B=np.array(raw["B"]),
                   rank=int(raw["r"]), alpha=float(raw["alpha"]))


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 2e-4
    total_iterations: int = 3000
    eval_every: int = 100
    early_stop_patience: int = 3
    max_seq_tokens: int = 2048
    optimizer: str = "adamw"  # or "sgd"
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.01
    min_improvement: float = 1e-6

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative (0 freezes the adapter)")
        if min(self.total_iterations, self.eval_every, self.max_seq_tokens) <= 0:
            raise ValueError("total_iterations, eval_every, and max_seq_tokens "
                             "must be positive")
        if not 3 <= self.early_stop_patience <= 5:
            raise ValueError("early_stop_patience must lie in 3..5")
        if self.optimizer not in ("adamw", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


@dataclass(frozen=True)
class TrainingExample:
    """One output sequence as parallel (context feature, target token) steps."""

    context_ids: tuple[int, ...]
    target_ids: tuple[int, ...]

    def __post_init__(self):
        if len(self.context_ids) != len(self.target_ids):
            raise ShapeMismatch("one context per target step")

    def truncated(self, max_tokens: int) -> "TrainingExample":
        return TrainingExample(self.context_ids[:max_tokens], self.target_ids[:max_tokens])


@dataclass
class LossReport:
    train_losses: list[float] = field(default_factory=list)
    val_evals: list[tuple[int, float]] = field(default_factory=list)  # (iteration, loss)
    stop_iteration: int = 0
    stop_reason: str = ""

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["iteration", "train_loss", "val_loss"])
        val_at = dict(self.val_evals)
        for i, loss in enumerate(self.train_losses, start=1):
            writer.writerow([i, f"{loss:.12g}",
                             f"{val_at[i]:.12g}" if i in val_at else ""])
        return buf.getvalue()


# -- core math -----------------------------------------------------------------

def softmax(logits: np.ndarray) -> np.ndarray:
    """Stable softmax: max-subtracted, positive components summing to 1."""
    z = np.asarray(logits, dtype=float)
    if not np.all(np.isfinite(z)):
        raise ValueError("logits must be finite")
    shifted = z - z.max()
    expz = np.exp(shifted)
    return expz / expz.sum()


def cross_entropy_loss(
    prob_steps: Sequence[np.ndarray], true_token_indices: Sequence[int]
) -> float:
    """Summed negative natural-log probability of the true token at each step."""
    if len(prob_steps) != len(true_token_indices) or not prob_steps:
        raise ShapeMismatch("one probability vector per true token, at least one step")
    total = 0.0
    for probs, idx in zip(prob_steps, true_token_indices):
        p = np.asarray(probs, dtype=float)
        if not 0 <= idx < p.shape[0]:
            raise IndexError(f"true token index {idx} outside vocabulary of {p.shape[0]}")
        if p[idx] == 0.0:
            raise ZeroProbability(f"true token at index {idx} has probability 0")
        total -= float(np.log(p[idx]))
    return total


def effective_weights(model: ToyModel, adapter: LoraAdapter) -> np.ndarray:
    m, n = model.shape
    if adapter.B.shape[0] != m or adapter.A.shape[1] != n:
        raise ShapeMismatch(
            f"adapter ({adapter.B.shape[0]}x{adapter.A.shape[1]}) does not match W ({m}x{n})"
        )
    return model.W + adapter.delta()


def trainable_param_count(m: int, n: int, rank: int) -> tuple[int, int]:
    """(adapter parameter count, full-matrix parameter count)."""
    if min(m, n, rank) <= 0:
        raise ValueError("dimensions must be positive")
    return rank * (m + n), m * n


def linear_lr(step: int, total_steps: int, eta0: float) -> float:
    """Linearly decaying rate: eta0 at step 0 down to 0 at total_steps."""
    if not 0 <= step <= total_steps:
        raise ValueError(f"step {step} outside [0, {total_steps}]")
    return eta0 * (1.0 - step / total_steps)


# -- optimizers ------------------------------------------------------------------

def sgd_step(
    params: Sequence[np.ndarray], grads: Sequence[np.ndarray], eta: float
) -> list[np.ndarray]:
    if len(params) != len(grads):
        raise ShapeMismatch("one gradient per parameter array")
    out = []
    for p, g in zip(params, grads):
        if p.shape != g.shape:
            raise ShapeMismatch(f"param {p.shape} vs grad {g.shape}")
        out.append(p - eta * g)
    return out


@dataclass
class AdamMoments:
    m: list[np.ndarray]
    v: list[np.ndarray]

    @classmethod
    def zeros_like(cls, params: Sequence[np.ndarray]) -> "AdamMoments":
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params])


def adamw_step(
    params: Sequence[np.ndarray],
    grads: Sequence[np.ndarray],
    moments: AdamMoments,
    config: TrainConfig,
    step_index: int,
    eta: float | None = None,
) -> tuple[list[np.ndarray], AdamMoments]:
    """Bias-corrected adaptive update with decoupled weight decay."""
    if step_index < 1:
        raise ValueError("step_index starts at 1")
    if len(params) != len(grads):
        raise ShapeMismatch("one gradient per parameter array")
    lr = config.learning_rate if eta is None else eta
    new_params, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, moments.m, moments.v):
        if p.shape != g.shape:
            raise ShapeMismatch(f"param {p.shape} vs grad {g.shape}")
        m1 = config.beta1 * m + (1 - config.beta1) * g
        v1 = config.beta2 * v + (1 - config.beta2) * g * g
        m_hat = m1 / (1 - config.beta1**step_index)
        v_hat = v1 / (1 - config.beta2**step_index)
        updated = p - lr * (m_hat / (np.sqrt(v_hat) + config.eps) + config.weight_decay * p)
        new_params.append(updated)
        new_m.append(m1)
        new_v.append(v1)
    return new_params, AdamMoments(new_m, new_v)


# -- loss + gradients over a batch -------------------------------------------------

def batch_loss(
    W_eff: np.ndarray, examples: Sequence[TrainingExample]
) -> float:
    """Summed sequence loss across the batch."""
    total = 0.0
    for ex in examples:
        probs = [softmax(W_eff[:, c]) for c in ex.context_ids]
        total += cross_entropy_loss(probs, ex.target_ids)
    return total


def batch_loss_and_grads(
    model: ToyModel, adapter: LoraAdapter, examples: Sequence[TrainingExample]
) -> tuple[float, np.ndarray, np.ndarray]:
    """Loss plus analytic adapter gradients.

    With one-hot contexts the per-step gradient w.r.t. the effective weight
    column is (p - onehot(target)); scaling and the low-rank factorization
    route it into A and B.
    """
    W_eff = effective_weights(model, adapter)
    scale = adapter.scaling
    dA = np.zeros_like(adapter.A)
    dB = np.zeros_like(adapter.B)
    total = 0.0
    for ex in examples:
        for ctx, tgt in zip(ex.context_ids, ex.target_ids):
            p = softmax(W_eff[:, ctx])
            if p[tgt] <= 0.0:
                raise ZeroProbability(f"true token {tgt} has probability 0")
            total -= float(np.log(p[tgt]))
            g = p.copy()
            g[tgt] -= 1.0
            dB += scale * np.outer(g, adapter.A[:, ctx])
            dA[:, ctx] += scale * (adapter.B.T @ g)
    return total, dA, dB


def grad_check(
    model: ToyModel,
    adapter: LoraAdapter,
    batch: Sequence[TrainingExample],
    eps: float = 1e-5,
) -> float:
    """Max relative error of analytic adapter gradients vs central finite
    differences over every entry of A and B."""
    if not 1e-7 <= eps <= 1e-3:
        raise ValueError("eps must lie in [1e-7, 1e-3]")
    _, dA, dB = batch_loss_and_grads(model, adapter, batch)
    worst = 0.0
    for matrix, grad in ((adapter.A, dA), (adapter.B, dB)):
        it = np.nditer(matrix, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = matrix[idx]
            matrix[idx] = orig + eps
            up = batch_loss(effective_weights(model, adapter), batch)
            matrix[idx] = orig - eps
            down = batch_loss(effective_weights(model, adapter), batch)
            matrix[idx] = orig
            numeric = (up - down) / (2 * eps)
            denom = max(abs(grad[idx]), abs(numeric), 1e-8)
            worst = max(worst, abs(grad[idx] - numeric) / denom)
    return worst


# -- training loop ------------------------------------------------------------------

def train(
    train_set: Sequence[TrainingExample],
    val_set: Sequence[TrainingExample],
    model: ToyModel,
    adapter: LoraAdapter,
    config: TrainConfig,
) -> tuple[LossReport, LoraAdapter]:
    """Full-batch adapter training with periodic validation and early stopping.

    The base matrix is never touched; only A and B move. Runs are
    deterministic for a fixed config (the adapter seed lives in
    LoraAdapter.initialize, the loop itself draws no randomness).
    """
    if not train_set:
        raise EmptyDataset("training set is empty")
    train_set = [ex.truncated(config.max_seq_tokens) for ex in train_set]
    val_set = [ex.truncated(config.max_seq_tokens) for ex in val_set]

    params = [adapter.A.copy(), adapter.B.copy()]
    moments = AdamMoments.zeros_like(params)
    report = LossReport()
    best_val = np.inf
    misses = 0
    current = LoraAdapter(params[0], params[1], adapter.rank, adapter.alpha)

    for t in range(1, config.total_iterations + 1):
        loss, dA, dB = batch_loss_and_grads(model, current, train_set)
        report.train_losses.append(loss)
        lr = linear_lr(t - 1, config.total_iterations, config.learning_rate)
        if config.optimizer == "sgd":
            params = sgd_step(params, [dA, dB], lr)
        else:
            params, moments = adamw_step(params, [dA, dB], moments, config, t, eta=lr)
        current = LoraAdapter(params[0], params[1], adapter.rank, adapter.alpha)

        if val_set and t % config.eval_every == 0:
            val_loss = batch_loss(effective_weights(model, current), val_set)
            report.val_evals.append((t, val_loss))
            if best_val - val_loss > config.min_improvement:
                best_val = val_loss
                misses = 0
            else:
                misses += 1
                if misses >= config.early_stop_patience:
                    report.stop_iteration = t
                    report.stop_reason = "early_stop"
                    return report, current

    report.stop_iteration = config.total_iterations
    report.stop_reason = "max_iterations"
    return report, current


# -- worked demo scenario -------------------------------------------------------------
#
# A 5-word vocabulary (three emotion words plus "not"/"present") whose bigram
# table starts from a weakly differentiated probability profile; fine-tuning
# the adapter sharpens it toward the target sequence "joy present".

DEMO_TOKENS = ("joy", "anger", "discontent", "not", "present")
_DEMO_START_PROBS = (0.30, 0.25, 0.20, 0.20, 0.05)   # next-token probs after <start>
_DEMO_AFTER_JOY_PROBS = (0.05, 0.05, 0.05, 0.40, 0.45)  # next-token probs after "joy"


def demo_vocabulary() -> Vocabulary:
    return Vocabulary(DEMO_TOKENS)


def demo_pretrained_model() -> ToyModel:
    """Bigram table over contexts [<start>] + vocabulary whose first two
    context columns reproduce the demo probability profile (log-probs as
    logits); unused contexts stay at uniform zero logits."""
    vocab = demo_vocabulary()
    m, n = len(vocab), len(vocab) + 1
    W = np.zeros((m, n))
    W[:, 0] = np.log(_DEMO_START_PROBS)
    W[:, 1 + vocab.index("joy")] = np.log(_DEMO_AFTER_JOY_PROBS)
    return ToyModel(W=W, frozen=True)


def demo_example() -> TrainingExample:
    """The target output sequence "joy present": step 1 conditions on
    <start> (context 0), step 2 on "joy" (context 1 + joy index)."""
    vocab = demo_vocabulary()
    joy, present = vocab.index("joy"), vocab.index("present")
    return TrainingExample(context_ids=(0, 1 + joy), target_ids=(joy, present))


def run_demo(config: TrainConfig | None = None) -> tuple[LossReport, LoraAdapter, ToyModel]:
    """Train the demo adapter; the single worked example serves as both
    training and validation data."""
    config = config or TrainConfig()
    model = demo_pretrained_model()
    m, n = model.shape
    adapter = LoraAdapter.initialize(m, n, rank=min(16, m, n), alpha=32.0, seed=config.seed)
    example = demo_example()
    report, trained = train([example], [example], model, adapter, config)
    return report, trained, model
