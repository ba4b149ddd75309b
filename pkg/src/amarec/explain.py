"""Attention-based explanation reports for a trained model.

Three views: per-user attention weights with recommendation-to-mode
attribution, a histogram of how many distinct preference modes each user's
top-K recommendations draw from, and the corpus-level top items per mode
ranked by aggregated attention mass.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from amarec.evaluation import rank_topk
from amarec.model import attend, decode_maxout, encode, keys_values


@dataclass(frozen=True)
class UserExplanation:
    user: int
    attention: np.ndarray        # d x n_obs
    observed: np.ndarray         # the observed item indices (mask)
    recommendations: list        # (item, source mode, per-mode scores) per top-K slot

    def to_json(self, item_ids=None):
        def name(j):
            return item_ids[j] if item_ids is not None else int(j)

        payload = {
            "user": self.user,
            "modes": [
                sorted(
                    ((name(j), float(w)) for j, w in zip(self.observed.tolist(), row)),
                    key=lambda t: -t[1],
                )
                for row in self.attention
            ],
            "recommendations": [
                {"item": name(j), "mode": int(l), "per_mode_scores": [float(s) for s in ps]}
                for j, l, ps in self.recommendations
            ],
        }
        return json.dumps(payload, indent=2) + "\n"


def _user_state(params, V, cfg, obs):
    K, Vt = keys_values(V, params)
    A = attend(K, params.Q, obs, cfg.kappa)
    U = encode(A, Vt[obs], params.B)
    return A, U


def explain_user(params, V, cfg, train_row, user, k=10):
    """Attention weights and mode attribution for one user's top-k list.

    Attention uses the full uncorrupted train row as the mask; the top-k
    list excludes train items.
    """
    obs = np.asarray(train_row, dtype=np.intp)
    if obs.size == 0:
        raise ValueError(f"user {user} has an empty interaction history")
    A, U = _user_state(params, V, cfg, obs)
    per_mode = U @ params.S.T
    pred = decode_maxout(U, params.S)
    top = rank_topk(pred.scores, obs, k)
    recs = [(int(j), int(pred.mode_of[j]), per_mode[:, j].copy()) for j in top]
    return UserExplanation(user=user, attention=A, observed=obs, recommendations=recs)


def mode_usage(params, V, cfg, data, k=10):
    """Histogram over users of distinct argmax modes among top-k recommendations.

    Returns a length-d array; entry c-1 counts users whose top-k list draws
    from exactly c distinct modes.
    """
    train = data.train
    d = params.Q.shape[0]
    hist = np.zeros(d, dtype=np.int64)
    for u in range(train.shape[0]):
        obs = train.indices[train.indptr[u]:train.indptr[u + 1]]
        if obs.size == 0:
            continue
        exp = explain_user(params, V, cfg, obs, u, k)
        used = len({mode for _, mode, _ in exp.recommendations})
        hist[used - 1] += 1
    return hist


def mode_top_items(params, V, cfg, data, n_top=10):
    """Top items per mode by attention mass summed over users.

    Returns, per mode, a list of (item, aggregated attention, popularity
    rank, popularity count); popularity is the train interaction count with
    rank 1 for the most popular item (ascending index on ties).
    """
    train = data.train
    d = params.Q.shape[0]
    n = train.shape[1]
    agg = np.zeros((d, n))
    for u in range(train.shape[0]):
        obs = train.indices[train.indptr[u]:train.indptr[u + 1]]
        if obs.size == 0:
            continue
        A, _ = _user_state(params, V, cfg, obs)
        np.add.at(agg, (slice(None), obs), A)

    counts = np.asarray(train.sum(axis=0)).ravel().astype(np.int64)
    pop_order = np.lexsort((np.arange(n), -counts))
    pop_rank = np.empty(n, dtype=np.int64)
    pop_rank[pop_order] = np.arange(1, n + 1)

    result = []
    for l in range(d):
        top = np.lexsort((np.arange(n), -agg[l]))[:n_top]
        result.append(
            [(int(j), float(agg[l, j]), int(pop_rank[j]), int(counts[j])) for j in top]
        )
    return result


def save_histogram_csv(hist, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["modes_used", "num_users"])
        for c, v in enumerate(hist.tolist(), start=1):
            w.writerow([c, v])


def save_mode_top_items_csv(top_items, path, item_ids=None):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["mode", "rank", "item_id", "aggregated_attention",
                    "popularity_rank", "popularity_count"])
        for l, rows in enumerate(top_items):
            for rank, (j, score, prank, pcount) in enumerate(rows, start=1):
                item = item_ids[j] if item_ids is not None else j
                w.writerow([l, rank, item, f"{score:.10g}", prank, pcount])


def user_explanation_dot(exp, item_ids=None, min_weight=0.05):
    """DOT graph of the observed-items / modes / recommendations tripartite layout."""
    def name(j):
        return str(item_ids[j]) if item_ids is not None else str(j)

    lines = ["digraph explanation {", "  rankdir=LR;"]
    for j in exp.observed.tolist():
        lines.append(f'  "obs_{j}" [label="{name(j)}", shape=box];')
    for l in range(exp.attention.shape[0]):
        lines.append(f'  "mode_{l}" [label="preference {l}", shape=ellipse];')
    for rank, (j, _, _) in enumerate(exp.recommendations):
        lines.append(f'  "rec_{j}" [label="{name(j)}", shape=box, style=rounded];')
    for l, row in enumerate(exp.attention):
        for j, w in zip(exp.observed.tolist(), row):
            if w >= min_weight:
                lines.append(f'  "obs_{j}" -> "mode_{l}" [penwidth={1 + 4 * w:.2f}];')
    for j, l, _ in exp.recommendations:
        lines.append(f'  "mode_{l}" -> "rec_{j}";')
    lines.append("}")
    return "\n".join(lines) + "\n"
