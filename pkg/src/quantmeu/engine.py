"""Simulation-to-decision pipeline.

Builds the simulated training table, fits quantile networks for the
posterior and for the utility distribution, evaluates expected utility
as an integral of the quantile function over tau, and maximizes it over
a one-dimensional decision interval.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import net as netmod
from .errors import DataError, DomainError, NumericError, ShapeError, SimulationError
from .models import ModelSpec, RandomSource, UtilitySpec, simulate_pairs
from .net import DenseNet, TrainConfig
from .tables import TrainingTable

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class QuantileNet:
    """Trained conditional quantile map; tau is the final input coordinate."""

    net: DenseNet
    role: str
    conditioning_dim: int
    trained: bool = True

    def __post_init__(self):
        if self.role not in ("posterior", "utility"):
            raise ValueError(f"unknown role {self.role!r}")
        if self.net.input_dim != self.conditioning_dim + 1:
            raise ShapeError("net input dim must equal conditioning_dim + 1")

    def evaluate(self, cond, taus) -> np.ndarray:
        """Quantile values at one conditioning point across many tau."""
        cond = np.asarray(cond, dtype=np.float64).reshape(-1)
        if cond.shape[0] != self.conditioning_dim:
            raise ShapeError(
                f"conditioning point has length {cond.shape[0]}, expected "
                f"{self.conditioning_dim}")
        taus = np.asarray(taus, dtype=np.float64).reshape(-1)
        if taus.size == 0:
            raise DataError("tau grid must be nonempty")
        if np.any(taus <= 0.0) or np.any(taus >= 1.0):
            raise DomainError("all tau must be strictly inside (0,1)")
        X = np.empty((taus.size, self.conditioning_dim + 1))
        X[:, :-1] = cond
        X[:, -1] = taus
        return self.net.predict(X)

    def quantile_curve(self, cond, taus) -> np.ndarray:
        """Monotone-rearranged quantile values over a sorted tau grid."""
        taus = np.sort(np.asarray(taus, dtype=np.float64).reshape(-1))
        return np.sort(self.evaluate(cond, taus))


def _midpoint_grid(M: int) -> np.ndarray:
    return (np.arange(M) + 0.5) / M


def build_training_table(model: ModelSpec, utility: Optional[UtilitySpec] = None,
                         decisions=None, N: int = 1000,
                         rng: Optional[RandomSource] = None,
                         sorted_pairing: bool = False) -> TrainingTable:
    """Simulate N rows of (theta, summary[, decision, utility], tau).

    Each row gets an independent tau ~ U(0,1). With a utility present the
    decision grid is cycled so every decision receives an equal share of
    rows. When sorted_pairing is on, rows sharing a conditioning value
    (the decision when utility is present, otherwise the summary) have
    their taus re-paired so ranks of tau match ranks of the target.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if utility is not None and decisions is None:
        raise DataError("a decision grid is required when a utility is supplied")
    rng = rng or RandomSource()

    pairs = simulate_pairs(model, N, rng)
    theta = np.array([p[0] for p in pairs])
    summary = np.array([np.atleast_1d(model.summary(p[1])) for p in pairs],
                       dtype=np.float64)
    tau = rng.uniform(N)

    decision = None
    utility_col = None
    if utility is not None:
        grid = np.asarray(decisions, dtype=np.float64).reshape(-1)
        if grid.size == 0:
            raise DataError("decision grid must be nonempty")
        lo, hi = utility.decision_domain
        if np.any(grid < lo) or np.any(grid > hi):
            raise DomainError("decision grid leaves the declared domain")
        decision = grid[np.arange(N) % grid.size]
        utility_col = np.empty(N)
        for i in range(N):
            try:
                u = float(utility.evaluate(decision[i], theta[i]))
            except Exception as exc:
                raise SimulationError(f"utility evaluation failed at row {i}: {exc}",
                                      index=i) from exc
            if not math.isfinite(u):
                raise SimulationError(f"utility at row {i} is non-finite", index=i)
            utility_col[i] = u

    if sorted_pairing:
        if utility is not None:
            keys = decision
            target = utility_col
        else:
            keys = summary[:, 0] if summary.shape[1] == 1 else [tuple(r) for r in summary]
            target = theta
        keys = np.asarray(keys) if not isinstance(keys, list) else np.array(
            keys, dtype=object)
        for key in np.unique(keys) if keys.dtype != object else set(keys.tolist()):
            idx = np.nonzero(keys == key)[0]
            if idx.size < 2:
                continue
            order = np.argsort(target[idx], kind="stable")
            tau[idx[order]] = np.sort(tau[idx])

    provenance = {"model": model.name, "N": int(N), "seed": int(rng.seed),
                  "stream": int(rng.stream), "sorted_pairing": bool(sorted_pairing)}
    return TrainingTable(theta=theta, summary=summary, tau=tau,
                         decision=decision, utility=utility_col,
                         provenance=provenance)


def train_posterior_net(table: TrainingTable, config: Optional[TrainConfig] = None,
                        hidden=netmod.DEFAULT_HIDDEN):
    """Fit H(summary, tau) -> theta quantiles on the table."""
    config = config or TrainConfig()
    X, y, tau = table.posterior_design()
    layer_sizes = (X.shape[1],) + tuple(hidden) + (1,)
    base = DenseNet.initialized(layer_sizes, seed=config.seed)
    trained, history = netmod.train(base, X, y, tau, config)
    qnet = QuantileNet(net=trained, role="posterior",
                       conditioning_dim=table.summary_dim)
    return qnet, history


def train_utility_net(table: TrainingTable, config: Optional[TrainConfig] = None,
                      hidden=netmod.DEFAULT_HIDDEN):
    """Fit G(decision, tau) -> utility quantiles on the table."""
    if not table.has_utility:
        raise DataError("table has no decision/utility columns")
    config = config or TrainConfig()
    X, y, tau = table.utility_design()
    layer_sizes = (X.shape[1],) + tuple(hidden) + (1,)
    base = DenseNet.initialized(layer_sizes, seed=config.seed)
    trained, history = netmod.train(base, X, y, tau, config)
    qnet = QuantileNet(net=trained, role="utility", conditioning_dim=1)
    return qnet, history


def _as_condition(qnet: QuantileNet, y_obs, summary=None) -> np.ndarray:
    if summary is not None:
        return np.atleast_1d(np.asarray(summary(y_obs), dtype=np.float64))
    cond = np.asarray(y_obs, dtype=np.float64).reshape(-1)
    if cond.shape[0] != qnet.conditioning_dim:
        raise ShapeError(
            f"observed condition has length {cond.shape[0]} but the net expects "
            f"{qnet.conditioning_dim}; pass a summary callable for raw data")
    return cond


def posterior_sample(H: QuantileNet, y_obs, M: int = 1000,
                     rng: Optional[RandomSource] = None, summary=None,
                     taus=None, sorted_grid: bool = False) -> np.ndarray:
    """Draw M posterior values H(S(y_obs), tau) with tau ~ U(0,1).

    `y_obs` is either the summary value itself or raw data paired with a
    `summary` callable. Supplying `taus` overrides the random draw. With
    `sorted_grid` the taus are sorted and the outputs monotone-rearranged.
    """
    if not H.trained:
        raise DataError("posterior net has not been trained")
    if H.role != "posterior":
        raise ValueError("posterior_sample needs a posterior-role net")
    cond = _as_condition(H, y_obs, summary)
    if taus is None:
        if M < 1:
            raise ValueError("M must be >= 1")
        if rng is None:
            raise ValueError("an explicit RandomSource (or taus) is required")
        taus = rng.uniform(M)
    else:
        taus = np.asarray(taus, dtype=np.float64).reshape(-1)
        if taus.size == 0:
            raise DataError("tau grid must be nonempty")
    if sorted_grid:
        return H.quantile_curve(cond, taus)
    return H.evaluate(cond, taus)


def compose_utility_samples(H: QuantileNet, utility: UtilitySpec, d: float,
                            y_obs, taus, summary=None) -> np.ndarray:
    """Utility draws U(d, H(S(y_obs), tau_i)) for each tau_i."""
    if not H.trained:
        raise DataError("posterior net has not been trained")
    taus = np.asarray(taus, dtype=np.float64).reshape(-1)
    if taus.size == 0:
        raise DataError("tau grid must be nonempty")
    theta = posterior_sample(H, y_obs, summary=summary, taus=taus)
    out = np.empty(taus.size)
    for i, th in enumerate(theta):
        out[i] = float(utility.evaluate(d, th))
    if not np.all(np.isfinite(out)):
        raise NumericError("composed utility produced non-finite values")
    return out


def expected_utility(quantile_source, d: Optional[float] = None,
                     y_obs=None, M: int = 1024, scheme: str = "uniform_grid",
                     rng: Optional[RandomSource] = None, summary=None):
    """Estimate E(U) as the integral of the quantile function over (0,1).

    `quantile_source` is a utility-role QuantileNet (conditioned on d), a
    posterior-role QuantileNet (conditioned on y_obs), or any callable
    mapping a tau array to quantile values. The uniform_grid scheme
    averages the M midpoints (i-1/2)/M and is deterministic (SE 0); the
    random scheme draws tau i.i.d. and reports the MC standard error.
    """
    if M < 2:
        raise ValueError("M must be >= 2")
    if scheme == "uniform_grid":
        taus = _midpoint_grid(M)
    elif scheme == "random":
        if rng is None:
            raise ValueError("the random scheme needs a RandomSource")
        taus = rng.uniform(M)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")

    if isinstance(quantile_source, QuantileNet):
        if quantile_source.role == "utility":
            if d is None:
                raise ValueError("a decision value is required for a utility net")
            values = quantile_source.quantile_curve([d], taus)
        else:
            if y_obs is None:
                raise ValueError("y_obs is required for a posterior net")
            cond = _as_condition(quantile_source, y_obs, summary)
            values = quantile_source.quantile_curve(cond, taus)
    else:
        values = np.asarray(quantile_source(np.sort(taus)), dtype=np.float64).reshape(-1)
        if values.shape[0] != M:
            raise ShapeError("quantile source returned a wrong-length vector")
    if not np.all(np.isfinite(values)):
        raise NumericError("quantile source produced non-finite values")

    estimate = float(values.mean())
    if scheme == "uniform_grid":
        return estimate, 0.0
    se = float(values.std(ddof=1) / math.sqrt(M))
    return estimate, se


@dataclass
class OptimizationResult:
    """Grid curve of EU estimates and the maximizing decision."""

    best_decision: float
    best_eu: float
    curve: list
    refine_trace: list = field(default_factory=list)
    ties_detected: bool = False
    config: dict = field(default_factory=dict)
    seed: Optional[int] = None

    def to_document(self) -> dict:
        return {
            "best_decision": self.best_decision,
            "best_eu": self.best_eu,
            "curve": [{"d": d, "eu": eu, "se": se} for d, eu, se in self.curve],
            "config": dict(self.config, ties_detected=self.ties_detected,
                           refine_trace=[[d, eu] for d, eu in self.refine_trace]),
            "seed": self.seed,
        }

    def save_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_document(), fh, indent=1)

    def curve_to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["d", "eu", "se"])
            for d, eu, se in self.curve:
                writer.writerow([format(d, ".17g"), format(eu, ".17g"),
                                 format(se, ".17g")])


def optimize_decision(eu_evaluator: Callable, domain, grid_size: int = 101,
                      refine: bool = True, xtol: float = 1e-9,
                      config: Optional[dict] = None,
                      seed: Optional[int] = None) -> OptimizationResult:
    """Maximize an EU evaluator d -> (estimate, se) over an interval.

    Evaluates a uniform grid, breaks exact ties toward the smallest
    decision, and (optionally) refines with golden-section search inside
    the best grid cell and its neighbors. The evaluator is responsible
    for holding its tau scheme fixed across calls so the comparison uses
    common random numbers.
    """
    lo, hi = float(domain[0]), float(domain[1])
    if not lo < hi:
        raise DomainError(f"domain ({lo}, {hi}) is not a proper interval")
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")

    def call(d: float):
        try:
            est, se = eu_evaluator(d)
        except Exception as exc:
            exc.args = (f"EU evaluator failed at d={d!r}: {exc}",)
            raise
        if not math.isfinite(est):
            raise NumericError(f"EU estimate at d={d!r} is non-finite")
        return float(est), float(se)

    grid = np.linspace(lo, hi, grid_size)
    curve = [(float(d),) + call(float(d)) for d in grid]
    eus = np.array([c[1] for c in curve])
    best_idx = int(np.argmax(eus))
    ties = bool(np.count_nonzero(eus == eus[best_idx]) > 1)
    if ties:
        best_idx = int(np.nonzero(eus == eus[best_idx])[0][0])
    best_d, best_eu, best_se = curve[best_idx]

    trace = []
    if refine:
        a = grid[max(best_idx - 1, 0)]
        b = grid[min(best_idx + 1, grid_size - 1)]

        def f(d: float) -> float:
            est, se = call(d)
            trace.append((float(d), est))
            return est

        if b > a:
            c = b - _INVPHI * (b - a)
            e = a + _INVPHI * (b - a)
            fc, fe = f(c), f(e)
            tol = max(xtol, 1e-15 * max(abs(a), abs(b), 1.0))
            while (b - a) > tol:
                if fc > fe:
                    b, e, fe = e, c, fc
                    c = b - _INVPHI * (b - a)
                    fc = f(c)
                else:
                    a, c, fc = c, e, fe
                    e = a + _INVPHI * (b - a)
                    fe = f(e)
            cand_d, cand_eu = (c, fc) if fc >= fe else (e, fe)
            if cand_eu > best_eu:
                cand_eu2, cand_se = call(cand_d)
                if cand_eu2 > best_eu:
                    curve.append((float(cand_d), cand_eu2, cand_se))
                    curve.sort(key=lambda row: row[0])
                    best_d, best_eu = float(cand_d), cand_eu2

    cfg = dict(config or {})
    cfg.setdefault("domain", [lo, hi])
    cfg.setdefault("grid_size", int(grid_size))
    cfg.setdefault("refine", bool(refine))
    return OptimizationResult(best_decision=float(best_d), best_eu=float(best_eu),
                              curve=curve, refine_trace=trace,
                              ties_detected=ties, config=cfg, seed=seed)
