"""Epoch loop: per-epoch corruption resampling, batched gradients, adam/sgd.

Users are shuffled with an epoch-indexed RNG, corruption is redrawn every
epoch, and within a batch the per-user gradients are accumulated in
ascending user index so results are bit-identical regardless of thread
count. Item embeddings are fixed and never updated.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field

import numpy as np

from amarec.model import (
    AmaConfig,
    PARAM_NAMES,
    corrupt,
    gradients,
    init_params,
    save_model,
)


@dataclass(frozen=True)
class TrainConfig:
    model: AmaConfig = field(default_factory=AmaConfig)
    learning_rate: float = 1e-3
    batch_size: int = 512
    optimizer: str = "adam"
    checkpoint_every: int = 0   # 0 disables periodic checkpoints
    eval_every: int = 0         # 0 disables validation logging
    checkpoint_path: str = ""

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class TrainLog:
    records: list = field(default_factory=list)  # (epoch, mean objective, seconds)

    def append(self, epoch, objective, seconds):
        self.records.append((epoch, objective, seconds))

    def save_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["epoch", "objective", "seconds"])
            w.writerows(self.records)

    def save_json(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(
                [{"epoch": e, "objective": o, "seconds": s} for e, o, s in self.records],
                fh, indent=2,
            )
            fh.write("\n")


class AdamState:
    """Standard adam moments, one pair of buffers per parameter."""

    def __init__(self, params, beta1=0.9, beta2=0.999, eps=1e-8):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m = {k: np.zeros_like(getattr(params, k)) for k in PARAM_NAMES}
        self.v = {k: np.zeros_like(getattr(params, k)) for k in PARAM_NAMES}


def adam_step(params, grads, state, lr):
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    for k in PARAM_NAMES:
        g = grads[k]
        state.m[k] = b1 * state.m[k] + (1 - b1) * g
        state.v[k] = b2 * state.v[k] + (1 - b2) * g * g
        m_hat = state.m[k] / (1 - b1 ** state.t)
        v_hat = state.v[k] / (1 - b2 ** state.t)
        arr = getattr(params, k)
        arr -= lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return params


def sgd_step(params, grads, state, lr):
    for k in PARAM_NAMES:
        arr = getattr(params, k)
        arr -= lr * grads[k]
    return params


class NonFiniteObjective(RuntimeError):
    def __init__(self, epoch, batch, value):
        super().__init__(f"non-finite objective {value} at epoch {epoch}, batch {batch}")
        self.epoch, self.batch = epoch, batch


def train(data, V, cfg, params=None, callback=None):
    """Train on data.train with fixed item embeddings V.

    Returns (AmaParameters, TrainLog). Users whose corrupted row is empty
    are skipped for that epoch. ``callback(epoch, params)`` runs after each
    epoch when given (used for validation-based checkpoint selection).
    """
    mcfg = cfg.model
    train_mat = data.train
    m, n = train_mat.shape
    if V.shape != (n, mcfg.h):
        raise ValueError(f"embeddings shape {V.shape} != ({n}, {mcfg.h})")

    if params is None:
        params = init_params(n, mcfg, np.random.default_rng(mcfg.seed))
    state = AdamState(params) if cfg.optimizer == "adam" else None
    step = adam_step if cfg.optimizer == "adam" else sgd_step

    rows = [train_mat.indices[train_mat.indptr[i]:train_mat.indptr[i + 1]] for i in range(m)]
    dense = np.zeros(n)

    log = TrainLog()
    for epoch in range(mcfg.epochs):
        t0 = time.perf_counter()
        rng = np.random.default_rng([mcfg.seed, epoch])
        order = rng.permutation(m)
        total, counted = 0.0, 0
        for start in range(0, m, cfg.batch_size):
            batch = np.sort(order[start:start + cfg.batch_size])
            acc = {k: np.zeros_like(getattr(params, k)) for k in PARAM_NAMES}
            used = 0
            for u in batch:
                obs = rows[u]
                if obs.size == 0:
                    continue
                mask = corrupt(obs, mcfg.rho, rng)
                if mask.size == 0:
                    continue
                dense[obs] = 1.0
                g = gradients(dense, mask, params, V, mcfg, include_regularizer=False)
                dense[obs] = 0.0
                for k in PARAM_NAMES:
                    acc[k] += g[k]
                total += g["loss"]
                counted += 1
                used += 1
            if used == 0:
                continue
            acc["S"] += 2.0 * mcfg.lam * params.S   # regularizer once per step
            params = step(params, acc, state, cfg.learning_rate)
        objective = (total / counted if counted else 0.0) + mcfg.lam * float(
            np.sum(params.S * params.S)
        )
        if not np.isfinite(objective):
            raise NonFiniteObjective(epoch, start // cfg.batch_size, objective)
        log.append(epoch, objective, time.perf_counter() - t0)
        if cfg.checkpoint_every and cfg.checkpoint_path and (epoch + 1) % cfg.checkpoint_every == 0:
            save_model(params, mcfg, cfg.checkpoint_path)
        if callback is not None:
            callback(epoch, params)
    return params, log


def mean_objective(data, V, cfg, params, rng=None):
    """Mean per-user objective on uncorrupted rows; cheap training diagnostics."""
    mcfg = cfg.model
    train_mat = data.train
    m, n = train_mat.shape
    dense = np.zeros(n)
    total, counted = 0.0, 0
    from amarec.model import loss as _loss

    for u in range(m):
        obs = train_mat.indices[train_mat.indptr[u]:train_mat.indptr[u + 1]]
        if obs.size == 0:
            continue
        dense[obs] = 1.0
        val, _ = _loss(dense, obs, params, V, mcfg)
        dense[obs] = 0.0
        total += val
        counted += 1
    return total / max(counted, 1)
