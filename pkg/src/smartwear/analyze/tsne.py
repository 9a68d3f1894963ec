"""Exact O(N^2) t-SNE.

Affinities are calibrated per point by bisection on the Gaussian precision so
that the Shannon-entropy perplexity of each conditional distribution matches
the target.  Optimisation follows the reference recipe: early exaggeration,
momentum switch, and per-parameter adaptive gains.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np


class DegenerateInput(ValueError):
    pass


@dataclass(frozen=True)
class TsneConfig:
    perplexity: float = 30.0
    iterations: int = 1000
    learning_rate: float = 200.0
    exaggeration: float = 12.0
    exaggeration_iters: int = 250
    momentum_initial: float = 0.5
    momentum_final: float = 0.8
    seed: int = 0
    perplexity_tol: float = 1e-6

    def __post_init__(self):
        if self.perplexity < 2:
            raise ValueError("perplexity must be at least 2")
        if self.iterations <= self.exaggeration_iters:
            raise ValueError("iterations must exceed the exaggeration phase")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")


@dataclass
class TsneResult:
    embedding: np.ndarray
    kl_history: np.ndarray
    perplexity: float
    P: np.ndarray


def effective_perplexity(perplexity: float, n: int) -> float:
    """Target clamped below N/3 (and never below 1, the single-neighbour limit)."""
    return float(max(1.0, min(perplexity, (n - 1) / 3.0)))


def squared_distances(X):
    X = np.asarray(X, dtype=np.float64)
    sq = np.einsum("ij,ij->i", X, X)
    D = sq[:, None] + sq[None, :] - 2.0 * X @ X.T
    np.fill_diagonal(D, 0.0)
    return np.maximum(D, 0.0)


def _row_entropy(d, beta):
    """Conditional row and its natural-log entropy for precision ``beta``."""
    logits = -beta * (d - d.min())
    p = np.exp(logits)
    s = p.sum()
    p /= s
    H = np.log(s) - beta * np.dot(d - d.min(), p)
    return p, H


def conditional_probabilities(D, perplexity, tol=1e-6, max_iter=200):
    """Row-stochastic P_{j|i} and the achieved perplexity of each row."""
    n = D.shape[0]
    P = np.zeros((n, n))
    achieved = np.zeros(n)
    target = np.log(perplexity)
    for i in range(n):
        d = np.delete(D[i], i)
        if n == 2:
            P[i, 1 - i] = 1.0
            achieved[i] = 1.0
            continue
        scale = np.median(d[d > 0]) if np.any(d > 0) else 1.0
        beta, lo, hi = 1.0 / scale, 0.0, np.inf
        for _ in range(max_iter):
            p, H = _row_entropy(d, beta)
            if abs(np.exp(H) - perplexity) < tol:
                break
            if H > target:
                lo = beta
                beta = beta * 2 if hi == np.inf else (beta + hi) / 2
            else:
                hi = beta
                beta = (beta + lo) / 2
        P[i, np.arange(n) != i] = p
        achieved[i] = np.exp(H)
    return P, achieved


def joint_probabilities(X, perplexity=30.0, tol=1e-6):
    """Symmetrised P = (P_{j|i} + P_{i|j}) / 2N; returns (P, per-row perplexity)."""
    X = np.asarray(X, dtype=np.float64)
    n = len(X)
    if n < 2:
        raise ValueError("need at least two points")
    D = squared_distances(X)
    if not np.any(D > 0):
        raise DegenerateInput("all points are identical")
    Pc, achieved = conditional_probabilities(D, effective_perplexity(perplexity, n), tol)
    P = (Pc + Pc.T) / (2.0 * n)
    return P, achieved


def _q_and_num(Y):
    num = 1.0 / (1.0 + squared_distances(Y))
    np.fill_diagonal(num, 0.0)
    return num / num.sum(), num


def kl_divergence(P, Q):
    mask = P > 0
    return float(np.sum(P[mask] * np.log(P[mask] / np.maximum(Q[mask], 1e-300))))


def tsne(features, cfg: TsneConfig = TsneConfig()) -> TsneResult:
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("features must be N x D")
    n = len(X)
    if n < 10:
        raise ValueError(f"t-SNE needs at least 10 points, got {n}")
    P, _ = joint_probabilities(X, cfg.perplexity, cfg.perplexity_tol)
    P = np.maximum(P, 1e-12)
    P /= P.sum()

    rng = np.random.default_rng(cfg.seed)
    Y = rng.normal(0.0, 1e-4, size=(n, 2))
    velocity = np.zeros_like(Y)
    gains = np.ones_like(Y)
    history = np.zeros(cfg.iterations)
    for it in range(cfg.iterations):
        early = it < cfg.exaggeration_iters
        Pe = P * cfg.exaggeration if early else P
        Q, num = _q_and_num(Y)
        W = (Pe - Q) * num
        grad = 4.0 * (np.diag(W.sum(axis=1)) - W) @ Y
        momentum = cfg.momentum_initial if early else cfg.momentum_final
        same = np.sign(grad) == np.sign(velocity)
        gains = np.where(same, gains * 0.8, gains + 0.2)
        np.maximum(gains, 0.01, out=gains)
        velocity = momentum * velocity - cfg.learning_rate * gains * grad
        Y = Y + velocity
        Y -= Y.mean(axis=0)
        history[it] = kl_divergence(P, Q)
    return TsneResult(Y, history, effective_perplexity(cfg.perplexity, n), P)


def write_embedding_csv(Y, labels, path, ids=None):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["window_id", "class_id", "x", "y"])
        for i, (lab, (x, y)) in enumerate(zip(labels, Y)):
            w.writerow([ids[i] if ids is not None else i, int(lab), repr(float(x)), repr(float(y))])
