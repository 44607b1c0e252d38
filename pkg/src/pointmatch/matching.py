"""Training-time matcher: distance/confidence cost matrix, one-to-one and
hybrid one-to-many Hungarian matching, and the associated classification,
regression and combined losses."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .assignment import solve_min_cost
from .types import CostMatrix, LabeledPoint, PredictedPoint

LOG_CLAMP = 1e-12

# defaults: distance weight 0.05, background weight 0.5, foreground weight 10,
# regression weight 2e-3, one-to-many branch weight 0.5
DEFAULT_TAU = 0.05
DEFAULT_BG_WEIGHT = 0.5
DEFAULT_FG_WEIGHT = 10.0
DEFAULT_REG_WEIGHT = 2e-3
DEFAULT_ONE2MANY_WEIGHT = 0.5


def default_class_weights(num_classes: int) -> tuple[float, ...]:
    """Background weight 0.5, all foreground classes weighted 10."""
    return (DEFAULT_BG_WEIGHT,) + (DEFAULT_FG_WEIGHT,) * num_classes


@dataclass(frozen=True)
class MatchConfig:
    """Hyperparameters for training-time matching and losses."""

    tau: float = DEFAULT_TAU
    beta: int = 1
    class_weights: tuple[float, ...] = field(default_factory=lambda: default_class_weights(1))
    reg_weight: float = DEFAULT_REG_WEIGHT
    one2many_weight: float = DEFAULT_ONE2MANY_WEIGHT

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.beta < 1:
            raise ValueError("beta must be >= 1")
        if len(self.class_weights) < 2 or any(w <= 0 for w in self.class_weights):
            raise ValueError("class_weights must cover background plus classes, all > 0")
        if self.reg_weight < 0 or self.one2many_weight < 0:
            raise ValueError("loss weights must be non-negative")


@dataclass(frozen=True)
class MatchOutcome:
    """Matched (gt-index, proposal-index) pairs plus the leftover proposals
    treated as background."""

    matched: tuple[tuple[int, int], ...]
    negatives: tuple[int, ...]


@dataclass(frozen=True)
class LossBreakdown:
    cls_1v1: float
    reg_1v1: float
    cls_1vN: float
    reg_1vN: float
    combined: float


def build_cost_matrix(
    gts: list[LabeledPoint],
    preds: list[PredictedPoint],
    tau: float = DEFAULT_TAU,
) -> CostMatrix:
    """Pairwise cost: tau * euclidean distance minus the proposal's
    confidence for the ground-truth class. Shape N x M."""
    n, m = len(gts), len(preds)
    values = np.zeros((n, m))
    if n and m:
        gxy = np.array([[g.x, g.y] for g in gts])
        pxy = np.array([[p.x, p.y] for p in preds])
        dist = np.linalg.norm(gxy[:, None, :] - pxy[None, :, :], axis=2)
        conf = np.empty((n, m))
        for i, g in enumerate(gts):
            for j, p in enumerate(preds):
                if g.class_id > p.num_classes:
                    raise ValueError(
                        f"gt class {g.class_id} outside prediction confidence vector "
                        f"({p.num_classes} classes)"
                    )
                conf[i, j] = p.confidences[g.class_id]
        values = tau * dist - conf
    return CostMatrix(values)


def _outcome_from_pairs(pairs, num_preds) -> MatchOutcome:
    matched_cols = {c for _, c in pairs}
    negatives = tuple(j for j in range(num_preds) if j not in matched_cols)
    return MatchOutcome(matched=tuple(sorted(pairs)), negatives=negatives)


def match_one_to_one(
    gts: list[LabeledPoint],
    preds: list[PredictedPoint],
    config: MatchConfig = MatchConfig(),
) -> MatchOutcome:
    """Optimal one-to-one assignment of every ground truth to a proposal."""
    n, m = len(gts), len(preds)
    if n > m:
        raise ValueError(f"insufficient proposals: {n} ground truths but only {m} proposals")
    costs = build_cost_matrix(gts, preds, config.tau)
    assignment = solve_min_cost(costs)
    return _outcome_from_pairs(assignment.pairs, m)


def match_hybrid(
    gts: list[LabeledPoint],
    preds: list[PredictedPoint],
    config: MatchConfig = MatchConfig(),
) -> tuple[MatchOutcome, MatchOutcome]:
    """One-to-one matching plus a one-to-many matching obtained by
    replicating each ground-truth row beta times in the cost matrix.

    Ground truth i occupies the beta consecutive rows starting at i * beta.
    If N * beta exceeds M, all proposals are consumed and a warning is
    emitted.
    """
    n, m = len(gts), len(preds)
    one2one = match_one_to_one(gts, preds, config)
    if config.beta == 1:
        return one2one, one2one
    if n * config.beta > m:
        warnings.warn(
            f"replicated targets ({n}x{config.beta}) exceed proposals ({m}); "
            "all proposals will be matched",
            stacklevel=2,
        )
    costs = build_cost_matrix(gts, preds, config.tau)
    replicated = CostMatrix(np.repeat(costs.values, config.beta, axis=0))
    assignment = solve_min_cost(replicated)
    pairs = [(row // config.beta, col) for row, col in assignment.pairs]
    return one2one, _outcome_from_pairs(pairs, m)


def classification_loss(
    outcome: MatchOutcome,
    gts: list[LabeledPoint],
    preds: list[PredictedPoint],
    class_weights: tuple[float, ...],
) -> float:
    """Weighted negative log-likelihood averaged over all proposals.

    Matched proposals are scored on their ground truth's class, negatives
    on the background class (index 0). Confidences are clamped at 1e-12
    before the log.
    """
    m = len(preds)
    if m == 0:
        return 0.0
    total = 0.0
    for gt_idx, pred_idx in outcome.matched:
        cls = gts[gt_idx].class_id
        c = max(preds[pred_idx].confidences[cls], LOG_CLAMP)
        total -= class_weights[cls] * math.log(c)
    for pred_idx in outcome.negatives:
        c = max(preds[pred_idx].confidences[0], LOG_CLAMP)
        total -= class_weights[0] * math.log(c)
    return total / m


def regression_loss(
    outcome: MatchOutcome,
    gts: list[LabeledPoint],
    preds: list[PredictedPoint],
) -> float:
    """Mean squared euclidean distance over matched pairs (0 if none)."""
    if not outcome.matched:
        return 0.0
    total = 0.0
    for gt_idx, pred_idx in outcome.matched:
        g, p = gts[gt_idx], preds[pred_idx]
        total += (g.x - p.x) ** 2 + (g.y - p.y) ** 2
    return total / len(outcome.matched)


def combined_loss(
    gts: list[LabeledPoint],
    preds: list[PredictedPoint],
    config: MatchConfig = MatchConfig(),
) -> LossBreakdown:
    """Hybrid matching followed by both loss branches:
    combined = (cls_1v1 + reg_weight * reg_1v1)
             + one2many_weight * (cls_1vN + reg_weight * reg_1vN).
    """
    one2one, one2many = match_hybrid(gts, preds, config)
    cls_1v1 = classification_loss(one2one, gts, preds, config.class_weights)
    reg_1v1 = regression_loss(one2one, gts, preds)
    cls_1vn = classification_loss(one2many, gts, preds, config.class_weights)
    reg_1vn = regression_loss(one2many, gts, preds)
    combined = (cls_1v1 + config.reg_weight * reg_1v1) + config.one2many_weight * (
        cls_1vn + config.reg_weight * reg_1vn
    )
    return LossBreakdown(
        cls_1v1=cls_1v1,
        reg_1v1=reg_1v1,
        cls_1vN=cls_1vn,
        reg_1vN=reg_1vn,
        combined=combined,
    )
