"""The proposed estimator: ESPRIT, Gamma-beta gate, ESPRIT-AC, gate, remove and re-estimate.

Flow for a record x with p components::

    f_init = ESPRIT(x)             -> return if Gamma_beta(x) > 0
    f_zp   = ESPRIT-AC(x)          -> return descend(f_zp) if Gamma_beta(zero_pad(x)) > 0
    f      = remove_reestimate(descend(f_zp)) -> return descend(f)
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import SinestError
from .likelihood import likelihood_cost, notch_filter, try_descend
from .linalg import as_snapshots, fb_covariance, herm_eig, zero_pad
from .subspace import (
    Branch,
    FrequencyEstimate,
    GammaBetaReport,
    esprit,
    esprit_ac,
    gamma_from_eigenvalues,
)

log = logging.getLogger(__name__)


class Variant(str, enum.Enum):
    PROPOSED = "proposed"
    # remove-and-re-estimate seeded from ESPRIT and re-estimating with ESPRIT
    ESPRIT_RR = "esprit-rr"
    # ESPRIT-AC followed by descent only, no second gate, no remove/re-estimate
    ESPRIT_AC_DESCENT = "esprit-ac-descent"


@dataclass(frozen=True)
class CascadeConfig:
    m: int
    beta: float
    p: int
    max_rr_iters: int = 5
    variant: Variant = Variant.PROPOSED
    refine_esprit: bool = False  # descend after the ESPRIT branch as well
    esprit_method: str = "ls"
    force_branch: Branch | None = None  # skip the gates (ablation / tracing)

    def __post_init__(self):
        if self.p < 1:
            raise ValueError(f"p: must be >= 1, got {self.p}")
        if not self.p < self.m:
            raise ValueError(f"m: window {self.m} must exceed p={self.p}")
        if not self.beta > 0:
            raise ValueError(f"beta: must be positive, got {self.beta}")
        if self.max_rr_iters < 1:
            raise ValueError(f"max_rr_iters: must be >= 1, got {self.max_rr_iters}")
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.force_branch is not None:
            object.__setattr__(self, "force_branch", Branch(self.force_branch))


@dataclass
class CascadeTrace:
    branch_taken: Branch
    gamma: GammaBetaReport | None = None
    gamma_zp: GammaBetaReport | None = None
    rr_iterations: int = 0
    costs_per_iteration: list[float] = field(default_factory=list)
    failed: bool = False
    note: str = ""

    CSV_HEADER = ("branch", "gamma_db", "gamma_zp_db", "rr_iterations", "final_cost")

    def csv_row(self, final_cost: float | None) -> tuple:
        return (
            self.branch_taken.value,
            _fmt(self.gamma.gamma_db if self.gamma else math.nan),
            _fmt(self.gamma_zp.gamma_db if self.gamma_zp else math.nan),
            str(self.rr_iterations),
            _fmt(math.nan if final_cost is None else final_cost),
        )


def _fmt(v: float) -> str:
    return repr(float(v))


def _gamma(xs, cfg: CascadeConfig, padded: bool) -> GammaBetaReport:
    data = zero_pad(xs, cfg.m) if padded else xs
    lam = herm_eig(fb_covariance(data, cfg.m)).eigenvalues
    return gamma_from_eigenvalues(lam, cfg.p, cfg.beta)


def _reestimator(cfg: CascadeConfig):
    if cfg.variant is Variant.ESPRIT_RR:
        return esprit
    return esprit_ac


def remove_reestimate(x, f_start, cfg: CascadeConfig, history: list | None = None) -> FrequencyEstimate:
    """Iteratively remove p-2 components, re-estimate the other two, keep the best.

    Starts from descend(x, f_start). Every iteration tries all C(p, 2)
    partitions in lexicographic order of the kept index set; the first
    minimum-cost candidate wins. Iteration stops once the best candidate
    no longer lowers the cost. Costs of each iterate (plus the rejected
    final candidate) are appended to ``history`` when given.
    """
    xs = as_snapshots(x)
    p = cfg.p
    current = try_descend(xs, f_start)
    if current.cost is None:
        raise SinestError("starting point for remove/re-estimate is degenerate")
    costs = [current.cost]
    if p < 3:
        if history is not None:
            history.extend(costs)
        return current
    reestimate = _reestimator(cfg)
    iterations = 0
    for _ in range(cfg.max_rr_iters):
        iterations += 1
        f = current.frequencies
        best = None
        for kept in combinations(range(p), p - 2):
            removed = [i for i in range(p) if i not in kept]
            try:
                filtered = notch_filter(xs, f[list(kept)])
                pair = reestimate(filtered, 2, cfg.m, cfg.esprit_method).frequencies
                start = f.copy()
                start[removed] = pair
                cand = try_descend(xs, start)
            except SinestError as exc:
                log.debug("partition %s skipped: %s", kept, exc)
                continue
            if cand.cost is not None and (best is None or cand.cost < best.cost):
                best = cand
        if best is None:
            break
        costs.append(best.cost)
        if best.cost >= current.cost:
            break
        current = best
    if history is not None:
        history.extend(costs)
    return current


def estimate(x, cfg: CascadeConfig) -> tuple[FrequencyEstimate, CascadeTrace]:
    """Run the cascade on a record; returns the estimate and its branch trace."""
    xs = as_snapshots(x)
    if xs.shape[0] < cfg.m:
        raise ValueError(f"m: window {cfg.m} exceeds the record length {xs.shape[0]}")
    trace = CascadeTrace(Branch.ESPRIT)
    best = None
    try:
        f_init = esprit(xs, cfg.p, cfg.m, cfg.esprit_method)
        best = f_init
        trace.gamma = _gamma(xs, cfg, padded=False)
        forced = cfg.force_branch
        if forced is Branch.ESPRIT or (forced is None and trace.gamma.passed):
            if cfg.refine_esprit:
                return try_descend(xs, f_init.frequencies, Branch.ESPRIT), trace
            cost = likelihood_cost(xs, f_init.frequencies) if _distinct(f_init) else None
            return FrequencyEstimate(f_init.frequencies, Branch.ESPRIT, cost), trace

        if cfg.variant is Variant.ESPRIT_RR:
            trace.branch_taken = Branch.ESPRIT_AC_RR
            start = f_init.frequencies
        else:
            f_zp = esprit_ac(xs, cfg.p, cfg.m, cfg.esprit_method)
            trace.branch_taken = Branch.ESPRIT_AC
            best = f_zp
            if cfg.variant is Variant.ESPRIT_AC_DESCENT:
                return try_descend(xs, f_zp.frequencies, Branch.ESPRIT_AC), trace
            trace.gamma_zp = _gamma(xs, cfg, padded=True)
            if forced is Branch.ESPRIT_AC or (forced is None and trace.gamma_zp.passed):
                return try_descend(xs, f_zp.frequencies, Branch.ESPRIT_AC), trace
            trace.branch_taken = Branch.ESPRIT_AC_RR
            start = f_zp.frequencies

        if cfg.p < 3:
            # two components: descent alone removes the zero-padding bias
            return try_descend(xs, start, Branch.ESPRIT_AC_RR), trace
        history: list[float] = []
        refined = remove_reestimate(xs, start, cfg, history)
        trace.costs_per_iteration = history
        trace.rr_iterations = max(len(history) - 1, 0)
        best = refined
        final = try_descend(xs, refined.frequencies, Branch.ESPRIT_AC_RR)
        if final.cost is not None and refined.cost is not None and final.cost > refined.cost:
            final = FrequencyEstimate(refined.frequencies, Branch.ESPRIT_AC_RR, refined.cost)
        return final, trace
    except SinestError as exc:
        if best is None:
            raise
        trace.failed = True
        trace.note = str(exc)
        log.debug("cascade fell back to best estimate so far: %s", exc)
        return FrequencyEstimate(best.frequencies, trace.branch_taken, best.cost), trace


def _distinct(est: FrequencyEstimate) -> bool:
    f = est.frequencies
    return f.size < 2 or np.min(np.diff(np.append(f, f[0] + 1.0))) > 1e-9
