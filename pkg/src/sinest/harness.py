"""Monte Carlo sweeps: trial generation, error pairing, MSE/bias/branch aggregation, CSV output."""

from __future__ import annotations

import csv
import enum
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .cascade import CascadeConfig, Variant, estimate
from .doa import ArrayScenario, synthesize_snapshots
from .errors import SinestError
from .likelihood import default_grid, likelihood_cost, fast_ml, mle_grid, periodogram_peaks
from .signal import TWO_PI, Scenario, as_rng, random_scenario, synthesize, trial_seed, wrapped_error
from .subspace import Branch, FrequencyEstimate, default_window, esprit, esprit_ac

log = logging.getLogger(__name__)

BRANCHES = (Branch.ESPRIT, Branch.ESPRIT_AC, Branch.ESPRIT_AC_RR)

# spawn-key streams for counter-based seeding
_SCENARIO_STREAM, _PHASE_STREAM, _NOISE_STREAM = 0, 1, 2


class Method(str, enum.Enum):
    ESPRIT = "esprit"
    ESPRIT_AC = "esprit-ac"
    PROPOSED = "proposed"
    MLE_GRID = "ml"
    FAST_ML = "fast-ml"
    ESPRIT_RR = "esprit-rr"
    ESPRIT_AC_DESCENT = "esprit-ac-descent"

    @property
    def is_cascade(self) -> bool:
        return self in (Method.PROPOSED, Method.ESPRIT_RR, Method.ESPRIT_AC_DESCENT)


_VARIANTS = {
    Method.PROPOSED: Variant.PROPOSED,
    Method.ESPRIT_RR: Variant.ESPRIT_RR,
    Method.ESPRIT_AC_DESCENT: Variant.ESPRIT_AC_DESCENT,
}


# -- scenario sources -------------------------------------------------------

@dataclass(frozen=True)
class FixedSource:
    """The same scenario every trial, optionally with fresh uniform phases per trial."""

    scenario: Scenario
    random_phase: bool = False
    n_scenarios: int = 1

    @property
    def p(self) -> int:
        return self.scenario.p

    @property
    def n(self) -> int:
        return self.scenario.n

    def draw(self, master: int, r: int, t: int) -> Scenario:
        if not self.random_phase:
            return self.scenario
        rng = as_rng(trial_seed(master, _PHASE_STREAM, r, t))
        return self.scenario.with_phases(rng.uniform(0.0, TWO_PI, self.scenario.p))


@dataclass(frozen=True)
class RandomSource:
    """``n_scenarios`` random parameter draws, each reused for every noise trial."""

    p: int
    n: int
    n_scenarios: int

    def draw(self, master: int, r: int, t: int) -> Scenario:
        return random_scenario(self.p, self.n, trial_seed(master, _SCENARIO_STREAM, r))


@dataclass(frozen=True)
class ArraySource:
    scenario: ArrayScenario
    n_scenarios: int = 1

    @property
    def p(self) -> int:
        return self.scenario.p

    @property
    def n(self) -> int:
        return self.scenario.m_ant

    def draw(self, master: int, r: int, t: int) -> ArrayScenario:
        return self.scenario


# -- settings and records ---------------------------------------------------

@dataclass(frozen=True)
class EstimatorSettings:
    m: int | None = None
    beta: float = 0.72
    grid: int | None = None
    max_rr_iters: int = 5
    refine_esprit: bool = False

    def window(self, n: int, p: int) -> int:
        return self.m if self.m is not None else default_window(n, p)


@dataclass(frozen=True)
class TrialSummary:
    scenario_id: int
    trial_index: int
    trial_seed: str
    method: Method
    snr_db: float
    f_true: np.ndarray
    f_est: np.ndarray  # reordered to pair with f_true
    wrapped_errors: np.ndarray
    cost: float | None
    branch: Branch | None
    failed: bool = False


def pair_estimates(f_est, f_true) -> np.ndarray:
    """Permutation ``perm`` minimizing sum wrapped_error(f_est[perm[i]], f_true[i])^2."""
    fe = np.asarray(f_est, dtype=float)
    ft = np.asarray(f_true, dtype=float)
    if fe.shape != ft.shape:
        raise ValueError(f"length mismatch: {fe.size} estimates for {ft.size} true values")
    cost = wrapped_error(fe[None, :], ft[:, None]) ** 2  # rows: true, cols: estimates
    rows, cols = linear_sum_assignment(np.atleast_2d(cost))
    perm = np.empty(ft.size, dtype=int)
    perm[rows] = cols
    return perm


def run_method(method: Method, x, p: int, settings: EstimatorSettings) -> tuple[FrequencyEstimate, Branch | None]:
    """One estimator on one record."""
    xs = np.asarray(x)
    n = xs.shape[0]
    m = settings.window(n, p)
    if method is Method.ESPRIT:
        return _with_cost(xs, esprit(xs, p, m)), None
    if method is Method.ESPRIT_AC:
        return _with_cost(xs, esprit_ac(xs, p, m)), None
    if method.is_cascade:
        cfg = CascadeConfig(m=m, beta=settings.beta, p=p, max_rr_iters=settings.max_rr_iters,
                            variant=_VARIANTS[method], refine_esprit=settings.refine_esprit)
        est, trace = estimate(xs, cfg)
        return est, trace.branch_taken
    if method is Method.MLE_GRID:
        return mle_grid(xs, p, settings.grid or default_grid(p)), None
    if method is Method.FAST_ML:
        return fast_ml(xs, p, periodogram_peaks(xs, p)), None
    raise ValueError(f"unknown method {method}")


def _with_cost(x, est: FrequencyEstimate) -> FrequencyEstimate:
    try:
        return est.with_cost(likelihood_cost(x, est.frequencies))
    except SinestError:
        return est


def _synthesize(source, scen, snr: float, master: int, r: int, t: int):
    seed = trial_seed(master, _NOISE_STREAM, r, t)
    if isinstance(source, ArraySource):
        return synthesize_snapshots(scen.with_snr(snr), seed)
    return synthesize(scen.with_snr(snr), seed)


def _true_frequencies(scen) -> np.ndarray:
    if isinstance(scen, ArrayScenario):
        return np.sort(scen.spatial_frequencies)
    return np.asarray(scen.frequencies)


def run_trial(source, methods: Sequence[Method], snr: float, master: int, r: int, t: int,
              settings: EstimatorSettings) -> list[TrialSummary]:
    scen = source.draw(master, r, t)
    x = _synthesize(source, scen, snr, master, r, t)
    f_true = _true_frequencies(scen)
    seed_id = f"{master}:{r}:{t}"
    out = []
    for method in methods:
        try:
            est, branch = run_method(method, x, source.p, settings)
        except (SinestError, np.linalg.LinAlgError, ValueError) as exc:
            log.debug("trial %s method %s failed: %s", seed_id, method.value, exc)
            nan = np.full(f_true.size, np.nan)
            out.append(TrialSummary(r, t, seed_id, method, snr, f_true, nan, nan, None, None, True))
            continue
        perm = pair_estimates(est.frequencies, f_true)
        f_est = est.frequencies[perm]
        out.append(TrialSummary(r, t, seed_id, method, snr, f_true, f_est,
                                wrapped_error(f_est, f_true), est.cost, branch))
    return out


def _run_chunk(args) -> list[TrialSummary]:
    source, methods, snr, master, rs, trials, settings = args
    out = []
    for r in rs:
        for t in range(trials):
            out.extend(run_trial(source, methods, snr, master, r, t, settings))
    return out


# -- aggregation -------------------------------------------------------------

@dataclass
class MethodStats:
    overall_mse: float
    avg_bias: float
    mse_stderr: float
    component_mse: np.ndarray
    component_bias: np.ndarray
    n_trials: int
    n_failed: int
    branch_fractions: np.ndarray | None  # (esprit, esprit-ac, rr) or None

    @classmethod
    def from_trials(cls, trials: Sequence[TrialSummary], p: int, cascade: bool) -> "MethodStats":
        ok = [s for s in trials if not s.failed]
        n_failed = len(trials) - len(ok)
        if ok:
            err = np.array([s.wrapped_errors for s in ok])
            sq = err ** 2
            comp_mse = sq.mean(axis=0)
            comp_bias = err.mean(axis=0)
            per_trial = sq.sum(axis=1)
            stderr = float(per_trial.std(ddof=1) / math.sqrt(len(ok))) if len(ok) > 1 else math.nan
        else:
            comp_mse = comp_bias = np.full(p, np.nan)
            stderr = math.nan
        fractions = None
        if cascade:
            counts = np.array([sum(s.branch is b for s in ok) for b in BRANCHES], dtype=float)
            fractions = counts / counts.sum() if counts.sum() > 0 else np.full(3, np.nan)
        return cls(float(np.sum(comp_mse)), float(np.mean(comp_bias)), stderr, comp_mse, comp_bias,
                   len(trials), n_failed, fractions)


@dataclass
class SweepResult:
    snr_grid: np.ndarray
    methods: list[Method]
    stats: dict[Method, list[MethodStats]]
    trial_count: int
    trials: list[TrialSummary] = field(default_factory=list)

    def overall_mse(self, method: Method) -> np.ndarray:
        return np.array([s.overall_mse for s in self.stats[Method(method)]])

    def avg_bias(self, method: Method) -> np.ndarray:
        return np.array([s.avg_bias for s in self.stats[Method(method)]])

    def mse_stderr(self, method: Method) -> np.ndarray:
        return np.array([s.mse_stderr for s in self.stats[Method(method)]])

    def branch_fractions(self, method: Method = Method.PROPOSED) -> np.ndarray:
        return np.array([s.branch_fractions for s in self.stats[Method(method)]])

    CSV_HEADER = ("snr_db", "method", "overall_mse", "avg_bias", "n_trials", "n_failed",
                  "frac_branch_esprit", "frac_branch_espritac", "frac_branch_rr")

    def to_csv(self, fh=None) -> str:
        buf = io.StringIO() if fh is None else fh
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.CSV_HEADER)
        for i, snr in enumerate(self.snr_grid):
            for method in self.methods:
                st = self.stats[method][i]
                fr = st.branch_fractions if st.branch_fractions is not None else np.full(3, np.nan)
                w.writerow([_num(snr), method.value, _num(st.overall_mse), _num(st.avg_bias),
                            st.n_trials, st.n_failed, *(_num(v) for v in fr)])
        return buf.getvalue() if fh is None else ""

    def trials_csv(self, fh=None) -> str:
        buf = io.StringIO() if fh is None else fh
        w = csv.writer(buf, lineterminator="\n")
        p = self.trials[0].f_true.size if self.trials else 0
        w.writerow(["scenario_id", "trial_seed", "method", "snr_db",
                    *(f"f_true_{i}" for i in range(p)), *(f"f_est_{i}" for i in range(p)),
                    "cost", "branch"])
        for s in self.trials:
            w.writerow([s.scenario_id, s.trial_seed, s.method.value, _num(s.snr_db),
                        *(_num(v) for v in s.f_true), *(_num(v) for v in s.f_est),
                        _num(math.nan if s.cost is None else s.cost),
                        s.branch.value if s.branch else ""])
        return buf.getvalue() if fh is None else ""


def _num(v) -> str:
    """Shortest round-trip decimal."""
    return repr(float(v))


def run_sweep(source, methods: Sequence[Method | str], snr_grid: Sequence[float], trials: int,
              seed: int, settings: EstimatorSettings | None = None, jobs: int = 1,
              keep_trials: bool = False,
              progress: Callable[[float, list[MethodStats]], None] | None = None) -> SweepResult:
    """Monte Carlo sweep over ``snr_grid``.

    Every (scenario r, trial t) pair gets its own counter-derived noise
    stream, shared across SNR points. Results do not depend on ``jobs``.
    """
    if trials < 1:
        raise ValueError(f"trials: must be >= 1, got {trials}")
    methods = [Method(m) for m in methods]
    if not methods:
        raise ValueError("methods: at least one method is required")
    settings = settings or EstimatorSettings()
    snrs = np.asarray(snr_grid, dtype=float)
    n_scen = source.n_scenarios
    stats: dict[Method, list[MethodStats]] = {m: [] for m in methods}
    kept: list[TrialSummary] = []
    jobs = max(1, int(jobs))
    pool = ProcessPoolExecutor(max_workers=jobs) if jobs > 1 else None
    try:
        for snr in snrs:
            if pool is None:
                summaries = _run_chunk((source, methods, float(snr), seed, range(n_scen), trials, settings))
            else:
                bounds = np.linspace(0, n_scen, min(n_scen, jobs * 4) + 1).astype(int)
                chunks = [(source, methods, float(snr), seed, range(a, b), trials, settings)
                          for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
                summaries = [s for part in pool.map(_run_chunk, chunks) for s in part]
            point = []
            for method in methods:
                sel = [s for s in summaries if s.method is method]
                st = MethodStats.from_trials(sel, source.p, method.is_cascade)
                stats[method].append(st)
                point.append(st)
            if keep_trials:
                kept.extend(summaries)
            if progress is not None:
                progress(float(snr), point)
    finally:
        if pool is not None:
            pool.shutdown()
    return SweepResult(snrs, methods, stats, n_scen * trials, kept)


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    underflow: int
    overflow: int

    @property
    def total(self) -> int:
        return int(self.counts.sum()) + self.underflow + self.overflow

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bin_lo", "bin_hi", "count"])
        w.writerow(["-inf", _num(self.edges[0]), self.underflow])
        for lo, hi, c in zip(self.edges[:-1], self.edges[1:], self.counts):
            w.writerow([_num(lo), _num(hi), int(c)])
        w.writerow([_num(self.edges[-1]), "inf", self.overflow])
        return buf.getvalue()


def histogram(values, bins: int, value_range: tuple[float, float]) -> Histogram:
    """Uniform-bin counts over ``value_range``; values outside go to under/overflow."""
    if bins < 2:
        raise ValueError(f"bins: need at least 2, got {bins}")
    lo, hi = map(float, value_range)
    if not hi > lo:
        raise ValueError(f"range: upper bound must exceed lower ({lo}, {hi})")
    v = np.asarray(values, dtype=float).ravel()
    v = v[~np.isnan(v)]
    counts, edges = np.histogram(v, bins=bins, range=(lo, hi))
    return Histogram(edges, counts, int(np.sum(v < lo)), int(np.sum(v > hi)))
