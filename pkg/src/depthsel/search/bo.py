"""Prior-guided Bayesian optimization with a Hamming-kernel GP surrogate."""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import ndtr

from ..masks import LayerMask, enumerate_masks, make_mask, mask_key
from .common import best_of, evaluate_candidates, prior_probs
from .result import StepRecord

_SQRT_2PI = math.sqrt(2.0 * math.pi)


class HammingGP:
    """Exact GP regression with kernel exp(-hamming(S, S') / length_scale).

    Masks are uint64 bitboards; the Cholesky factor grows by rank-1 updates as
    observations arrive. A singular update escalates diagonal jitter and
    refactorizes.
    """

    def __init__(self, capacity: int, length_scale: float, noise: float):
        self.length_scale = length_scale
        self.noise = noise
        self.bits = np.zeros(capacity, dtype=np.uint64)
        self.y = np.zeros(capacity, dtype=np.float64)
        self._chol = np.zeros((capacity, capacity), dtype=np.float64)
        self.n = 0
        self._jitter = 0.0

    def kernel_to(self, bits: np.ndarray) -> np.ndarray:
        """Cross-kernel matrix between observations and query bitboards."""
        h = np.bitwise_count(self.bits[: self.n, None] ^ bits[None, :]).astype(np.float64)
        return np.exp(-h / self.length_scale)

    def add(self, bits: int, y: float) -> None:
        i = self.n
        self.bits[i] = bits
        self.y[i] = y
        diag = 1.0 + self.noise + self._jitter
        if i == 0:
            self._chol[0, 0] = math.sqrt(diag)
            self.n = 1
            return
        col = self.kernel_to(np.array([bits], dtype=np.uint64))[:, 0]
        l_row = solve_triangular(self._chol[:i, :i], col, lower=True, check_finite=False)
        rest = diag - float(l_row @ l_row)
        if rest <= 1e-12:
            self.n += 1
            self._refactor()
            return
        self._chol[i, :i] = l_row
        self._chol[i, i] = math.sqrt(rest)
        self.n += 1

    def _refactor(self) -> None:
        # Singular surrogate: escalate jitter until the factorization succeeds.
        jitter = max(self._jitter * 10.0, 1e-10)
        h = np.bitwise_count(self.bits[: self.n, None] ^ self.bits[None, : self.n]).astype(np.float64)
        gram = np.exp(-h / self.length_scale)
        while True:
            try:
                self._chol[: self.n, : self.n] = np.linalg.cholesky(
                    gram + (self.noise + jitter) * np.eye(self.n)
                )
                self._jitter = jitter
                return
            except np.linalg.LinAlgError:
                jitter *= 10.0
                if jitter > 1.0:
                    raise

    def posterior(self, query_bits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        n = self.n
        chol = self._chol[:n, :n]
        y_mean = float(self.y[:n].mean())
        y_scale = float(self.y[:n].std()) or 1.0
        y_norm = (self.y[:n] - y_mean) / y_scale
        rhs = np.column_stack([y_norm, self.kernel_to(query_bits)])
        solved = solve_triangular(chol, rhs, lower=True, check_finite=False)
        w, v = solved[:, 0], solved[:, 1:]
        mu = v.T @ w
        var = 1.0 + self.noise + self._jitter - np.sum(v * v, axis=0)
        return mu * y_scale + y_mean, np.maximum(var, 0.0) * y_scale * y_scale

    def acquisition(self, query_bits: np.ndarray) -> np.ndarray:
        """Expected improvement under the current posterior, in one pass."""
        mu, var = self.posterior(query_bits)
        return expected_improvement(mu, var, self.best_observed())

    def best_observed(self) -> float:
        return float(self.y[: self.n].min())


def expected_improvement(mu: np.ndarray, var: np.ndarray, best: float) -> np.ndarray:
    """EI for minimization; exactly zero where predictive variance vanishes."""
    improvement = best - mu
    sigma = np.sqrt(var)
    if sigma.size and sigma.min() > 0.0:
        z = improvement / sigma
        return improvement * ndtr(z) + sigma * (np.exp(-0.5 * z * z) / _SQRT_2PI)
    safe = np.where(sigma > 0, sigma, 1.0)
    z = np.where(sigma > 0, improvement / safe, 0.0)
    pdf = np.exp(-0.5 * z * z) / _SQRT_2PI
    ei = improvement * ndtr(z) + sigma * pdf
    return np.where(sigma > 0, ei, np.maximum(improvement, 0.0))


def bo(objective, k: int, cfg, rng) -> tuple[LayerMask, list[StepRecord]]:
    """Trials of EI-maximizing acquisitions over a candidate pool.

    The pool mixes every cardinality-preserving swap of the incumbent with
    fresh prior-guided samples; duplicates of evaluated masks are dropped and
    re-drawn, so exactly `trials` distinct masks get evaluated. When the whole
    space holds no more than `trials` masks the search degenerates to
    exhaustive enumeration.
    """
    depth = objective.depth
    trials = cfg.bo.trials
    space = math.comb(depth, k)
    if space <= trials or k == 0 or k == depth:
        scored = evaluate_candidates(objective, enumerate_masks(depth, k))
        loss, mask = best_of(scored)
        steps = [StepRecord(step=1, candidates=len(scored), best_key=mask_key(mask), best_loss=loss)]
        return mask, steps

    scores = objective.single_layer_scores()
    log_prior = np.log(prior_probs(scores, None))
    gp = HammingGP(capacity=trials, length_scale=cfg.bo.length_scale, noise=cfg.bo.surrogate_noise)
    seen: set[int] = set()
    best_loss: float | None = None
    best_mask: LayerMask | None = None
    incumbent_bits = 0
    steps = []

    def sample_bits(count: int) -> np.ndarray:
        keys = log_prior[None, :] + rng.gumbel(size=(count, depth))
        top = np.argpartition(-keys, k - 1, axis=1)[:, :k].astype(np.uint64)
        return np.bitwise_or.reduce(np.left_shift(np.uint64(1), top), axis=1)

    def observe(bits: int, pool_size: int) -> None:
        nonlocal best_loss, best_mask, incumbent_bits
        mask = _mask_from_bits(depth, bits)
        loss = objective.evaluate(mask).loss
        gp.add(bits, loss)
        seen.add(bits)
        if best_loss is None or (loss, mask) < (best_loss, best_mask):
            best_loss, best_mask, incumbent_bits = loss, mask, bits
        steps.append(
            StepRecord(step=gp.n, candidates=pool_size, best_key=mask_key(best_mask), best_loss=best_loss)
        )

    while len(seen) < cfg.bo.random_inits:
        bits = int(sample_bits(1)[0])
        if bits not in seen:
            observe(bits, pool_size=1)

    while len(seen) < trials:
        neighbors = _neighbor_bits(depth, incumbent_bits)
        fresh = sample_bits(cfg.bo.candidate_pool)
        pool = np.unique(np.concatenate([neighbors, fresh]))  # ascending: deterministic tie order
        candidates = pool[[int(b) not in seen for b in pool]]
        if candidates.size == 0:
            candidates = _fresh_random_bits(depth, k, seen, rng)
        mu, var = gp.posterior(candidates)
        ei = expected_improvement(mu, var, gp.best_observed())
        pick = int(np.argmax(ei))  # first max wins ties over the ascending pool
        observe(int(candidates[pick]), pool_size=int(candidates.size))

    return best_mask, steps


def _mask_from_bits(depth: int, bits: int) -> LayerMask:
    removed = tuple(i for i in range(depth) if bits >> i & 1)
    return LayerMask(depth, removed)


def _neighbor_bits(depth: int, bits: int) -> np.ndarray:
    removed = [i for i in range(depth) if bits >> i & 1]
    kept = [i for i in range(depth) if not bits >> i & 1]
    out = []
    for drop in removed:
        base = bits & ~(1 << drop)
        for add in kept:
            out.append(base | 1 << add)
    return np.array(out, dtype=np.uint64)


def _fresh_random_bits(depth: int, k: int, seen: set, rng) -> np.ndarray:
    for _ in range(10_000):
        bits = 0
        for i in rng.choice(depth, size=k, replace=False).tolist():
            bits |= 1 << i
        if bits not in seen:
            return np.array([bits], dtype=np.uint64)
    for mask in enumerate_masks(depth, k):
        if mask.bits() not in seen:
            return np.array([mask.bits()], dtype=np.uint64)
    raise RuntimeError("no unevaluated mask left")
