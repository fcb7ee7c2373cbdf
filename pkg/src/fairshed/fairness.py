"""Fairness indices, price of fairness, and the eps_max bisection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conic import ShedVector, build_mls, build_fair_mls, extract_shed, kappa
from .scenario import DamagedNetwork
from .solver import SolveSettings, SolveStatus, solve

__all__ = [
    "FairnessReport",
    "gini",
    "jain",
    "pof",
    "variance_bound_gap",
    "eps_max",
]


@dataclass(frozen=True)
class FairnessReport:
    """Per-scenario, per-variant fairness summary."""

    scenario_ordinal: int
    variant: str  # baseline | weighted | pnorm(p) | eps(e) | weighted_eps(e)
    status: str
    total_shed: float
    shed: ShedVector | None
    gini: float | None
    jain: float | None
    pof: float | None  # None marks "undefined" (zero baseline)


def gini(x) -> float:
    """Pairwise-difference dispersion: 0 = all equal, 1 = one-hot.

    Zero vectors return 0 by convention (an all-equal burden).
    """
    v = np.asarray(x, dtype=float)
    n = len(v)
    if n < 2:
        raise ValueError("gini needs at least two components")
    total = float(v.sum())
    if total == 0.0:
        return 0.0
    diffs = float(np.abs(v[:, None] - v[None, :]).sum()) / 2.0  # i < j pairs
    return diffs / ((n - 1) * total)


def jain(x) -> float:
    """Throughput-fairness index in [1/n, 1]: 1 = all equal, 1/n = one-hot.

    Zero vectors return 1 by convention.
    """
    v = np.asarray(x, dtype=float)
    n = len(v)
    if n < 1:
        raise ValueError("jain needs a nonempty vector")
    total = float(v.sum())
    if total == 0.0:
        return 1.0
    return total * total / (n * float(v @ v))


def pof(fair_total: float, baseline_total: float, threshold: float = 1e-6) -> float | None:
    """Relative increase of total shed versus the matched baseline.

    Returns None (undefined) when the baseline is at or below the shed
    threshold; raises on negative totals.
    """
    if fair_total < 0 or baseline_total < 0:
        raise ValueError("shed totals cannot be negative")
    if baseline_total <= threshold:
        return None
    return (fair_total - baseline_total) / baseline_total


def variance_bound_gap(d: ShedVector, epsilon: float) -> float:
    """Slack of the fairness variance bound: (n/kappa^2 - 1) mu^2 - sigma^2.

    Moments are taken over the n components (population convention); the
    bound is a consequence of the fairness cone, so the gap must be >= -1e-9
    on every optimal eps-fair solution.
    """
    v = d.values
    n = len(v)
    kap = kappa(epsilon, n)
    mu = float(v.mean())
    sigma2 = float(v.var())
    return (n / kap**2 - 1.0) * mu * mu - sigma2


def eps_max(
    dnet: DamagedNetwork,
    weights=None,
    tol: float = 1e-3,
    settings: SolveSettings | None = None,
) -> float:
    """Largest epsilon with a feasible eps-fair program, by bisection.

    Maintains a (feasible, infeasible) bracket on [0, 1] and returns the
    feasible low end once the bracket is narrower than ``tol``; returns 1.0
    outright when the fully-fair program is feasible.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    base = solve(build_mls(dnet, weights), settings)
    if base.status is not SolveStatus.OPTIMAL:
        raise ValueError(f"baseline MLS not solvable: {base.status.name}")

    def feasible(eps: float) -> bool:
        res = solve(build_fair_mls(dnet, eps, weights), settings)
        # ambiguous terminations count as infeasible-side to keep the
        # bracket conservative
        return res.status is SolveStatus.OPTIMAL

    if feasible(1.0):
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo
