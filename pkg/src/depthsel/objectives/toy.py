"""Desk-scale transformer stand-in for real calibration models.

A small causal transformer with seeded random weights, a seeded token corpus
and seeded multiple-choice items. Removing a block makes it an identity on
the residual stream (attention and MLP skipped, stream untouched), which is
the standard depth-pruning semantics. Everything is float64 numpy, generated
in a fixed traversal order, so identical seeds give identical losses across
runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ItemMalformed
from ..masks import LayerMask
from ..seeding import derive_rng
from .base import Objective


@dataclass
class ToyModelConfig:
    depth: int = 12
    model_dim: int = 64
    heads: int = 4
    vocab: int = 256
    context: int = 128
    corpus_sequences: int = 32
    task_items: int = 64
    task_choices: int = 4
    prompt_len: int = 16
    completion_len: int = 4
    init_std: float = 0.08
    seed: int = 0

    def __post_init__(self):
        if self.model_dim % self.heads != 0:
            raise ValueError("model_dim must be divisible by heads")
        if self.prompt_len + self.completion_len > self.context:
            raise ValueError("prompt + completion exceeds context length")
        if self.task_choices < 2:
            raise ValueError("need at least one incorrect choice per item")


@dataclass
class TaskItem:
    prompt: np.ndarray
    correct: np.ndarray
    incorrect: list[np.ndarray] = field(default_factory=list)


class ToyModel:
    """Seeded weights + seeded calibration data behind two loss functions."""

    def __init__(self, config: ToyModelConfig):
        self.config = config
        c = config
        wrng = derive_rng(c.seed, "toy-weights")
        std = c.init_std
        d, v = c.model_dim, c.vocab

        # Fixed draw order: embeddings, positions, per-block attn then mlp, head.
        self.embed = wrng.normal(0.0, std, size=(v, d))
        self.pos = wrng.normal(0.0, std, size=(c.context, d))
        self.blocks = []
        for _ in range(c.depth):
            blk = {
                "wq": wrng.normal(0.0, std, size=(d, d)),
                "wk": wrng.normal(0.0, std, size=(d, d)),
                "wv": wrng.normal(0.0, std, size=(d, d)),
                "wo": wrng.normal(0.0, std, size=(d, d)),
                "w1": wrng.normal(0.0, std, size=(d, 4 * d)),
                "w2": wrng.normal(0.0, std, size=(4 * d, d)),
            }
            self.blocks.append(blk)
        self.head = wrng.normal(0.0, std, size=(d, v))

        crng = derive_rng(c.seed, "toy-corpus")
        self.corpus = crng.integers(0, v, size=(c.corpus_sequences, c.context), dtype=np.int64)

        trng = derive_rng(c.seed, "toy-tasks")
        self.tasks: list[TaskItem] = []
        for _ in range(c.task_items):
            prompt = trng.integers(0, v, size=c.prompt_len, dtype=np.int64)
            correct = trng.integers(0, v, size=c.completion_len, dtype=np.int64)
            incorrect = [
                trng.integers(0, v, size=c.completion_len, dtype=np.int64)
                for _ in range(c.task_choices - 1)
            ]
            self.tasks.append(TaskItem(prompt=prompt, correct=correct, incorrect=incorrect))

    @property
    def depth(self) -> int:
        return self.config.depth

    # -- forward pass ----------------------------------------------------------
    # Projections run on (batch*seq, dim) views: one large GEMM per weight
    # matrix instead of a stack of small ones.

    def _block_forward(self, x: np.ndarray, blk: dict) -> np.ndarray:
        h = x + self._attend(_layer_norm(x), blk)
        b, t, d = h.shape
        flat = _layer_norm(h).reshape(b * t, d)
        mlp = (np.maximum(flat @ blk["w1"], 0.0) @ blk["w2"]).reshape(b, t, d)
        return h + mlp

    def _attend(self, x: np.ndarray, blk: dict) -> np.ndarray:
        c = self.config
        b, t, d = x.shape
        hn, hd = c.heads, d // c.heads
        flat = x.reshape(b * t, d)

        def split(m):
            return (flat @ m).reshape(b, t, hn, hd).transpose(0, 2, 1, 3)

        q, k, v = split(blk["wq"]), split(blk["wk"]), split(blk["wv"])
        scores = q @ k.transpose(0, 1, 3, 2) / np.sqrt(hd)
        scores = scores + self._causal_bias(t)
        attn = _softmax(scores)
        out = (attn @ v).transpose(0, 2, 1, 3).reshape(b * t, d)
        return (out @ blk["wo"]).reshape(b, t, d)

    def _causal_bias(self, t: int) -> np.ndarray:
        cached = getattr(self, "_bias_cache", None)
        if cached is None or cached.shape[0] != t:
            bias = np.zeros((t, t))
            bias[np.triu_indices(t, k=1)] = -np.inf
            self._bias_cache = bias
            cached = bias
        return cached

    def _head_logits(self, x: np.ndarray) -> np.ndarray:
        b, t, d = x.shape
        return (_layer_norm(x).reshape(b * t, d) @ self.head).reshape(b, t, -1)

    def logits(self, tokens: np.ndarray, removed: tuple[int, ...] = ()) -> np.ndarray:
        gone = set(removed)
        x = self.embed[tokens] + self.pos[: tokens.shape[1]]
        for i, blk in enumerate(self.blocks):
            if i in gone:
                continue
            x = self._block_forward(x, blk)
        return self._head_logits(x)

    def logits_dense(self, tokens: np.ndarray) -> np.ndarray:
        """Forward with no masking code path; used as the identity reference."""
        x = self.embed[tokens] + self.pos[: tokens.shape[1]]
        for blk in self.blocks:
            x = self._block_forward(x, blk)
        return self._head_logits(x)

    # -- losses ----------------------------------------------------------------

    def perplexity(self, removed: tuple[int, ...] = ()) -> float:
        logp = _log_softmax(self.logits(self.corpus, removed))
        targets = self.corpus[:, 1:]
        rows = np.arange(self.corpus.shape[0])[:, None]
        cols = np.arange(targets.shape[1])[None, :]
        token_logp = logp[rows, cols, targets]
        return float(np.exp(-np.mean(token_logp)))

    def margin(self, removed: tuple[int, ...] = ()) -> float:
        """Mean over items of (mean incorrect log-likelihood - correct log-likelihood).

        Lower is better: a model that strongly separates correct from
        incorrect answers drives this far negative.
        """
        c = self.config
        seqs = []
        for item in self.tasks:
            if len(item.incorrect) == 0:
                raise ItemMalformed("task item has no incorrect completions")
            seqs.append(np.concatenate([item.prompt, item.correct]))
            for wrong in item.incorrect:
                seqs.append(np.concatenate([item.prompt, wrong]))
        batch = np.stack(seqs)
        logp = _log_softmax(self.logits(batch, removed))
        # Completion token at position p is predicted by logits at p-1.
        pos = np.arange(c.prompt_len - 1, c.prompt_len + c.completion_len - 1)
        targets = batch[:, c.prompt_len : c.prompt_len + c.completion_len]
        scores = logp[np.arange(batch.shape[0])[:, None], pos[None, :], targets].sum(axis=1)
        per_item = scores.reshape(len(self.tasks), len(self.tasks[0].incorrect) + 1)
        correct = per_item[:, 0]
        wrong_mean = per_item[:, 1:].mean(axis=1)
        return float(np.mean(wrong_mean - correct))

    def angular_proxy(self) -> list[float]:
        """Mean angular distance between each block's input and output stream.

        One dense forward over the corpus; blocks that barely rotate the
        residual stream score low and are the cheap removal candidates.
        """
        x = self.embed[self.corpus] + self.pos[: self.corpus.shape[1]]
        angles = []
        for blk in self.blocks:
            y = self._block_forward(x, blk)
            num = np.sum(x * y, axis=-1)
            den = np.linalg.norm(x, axis=-1) * np.linalg.norm(y, axis=-1)
            cos = np.clip(num / np.maximum(den, 1e-30), -1.0, 1.0)
            angles.append(float(np.mean(np.arccos(cos))))
            x = y
        return angles


class ToyObjective(Objective):
    """Cached evaluator over a ToyModel; kind selects the loss."""

    def __init__(self, model: ToyModel, metric: str, eval_budget=None, clock=None, name=None):
        if metric not in ("perplexity", "margin"):
            raise ValueError(f"unknown toy metric {metric!r}")
        self.kind = f"toy-{metric}"
        super().__init__(depth=model.depth, eval_budget=eval_budget, clock=clock, name=name)
        self.model = model
        self.metric = metric
        self._proxy: list[float] | None = None

    def _compute_loss(self, mask: LayerMask) -> float:
        if self.metric == "perplexity":
            return self.model.perplexity(mask.removed)
        return self.model.margin(mask.removed)

    def proxy_scores(self, rng) -> list[float]:
        if self._proxy is None:
            self._proxy = self.model.angular_proxy()
        return list(self._proxy)


def _layer_norm(x: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    mu = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    return (x - mu) / np.sqrt(var + eps)


def _softmax(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _log_softmax(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
