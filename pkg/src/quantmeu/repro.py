"""End-to-end preset pipelines with pass/fail reports and figure artifacts.

Each runner writes CSV panel data, SVG plots, and a JSON report whose
checks mirror the package's acceptance thresholds. `structural_only`
skips network training and keeps only the closed-form artifacts, which
is enough for format/shape verification.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import presets
from .analytic import (cara_normal_eu, conjugate_posterior, kelly_weight,
                       prior_to_posterior_survival_check, wang_params)
from .engine import (build_training_table, expected_utility, optimize_decision,
                     posterior_sample, train_posterior_net, train_utility_net)
from .errors import DataError
from .models import RandomSource, summary_mean
from .net import TrainConfig, save_net
from .special import normal_cdf
from .svgplot import Series, VLine, line_plot


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    threshold: float
    comparison: str = "<"
    detail: str = ""


@dataclass
class ReproReport:
    experiment: str
    checks: list = field(default_factory=list)
    artifacts: list = field(default_factory=list)
    elapsed_seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name, value, threshold, comparison="<", detail=""):
        value = float(value)
        ok = {"<": value < threshold, "<=": value <= threshold,
              ">": value > threshold, ">=": value >= threshold}[comparison]
        self.checks.append(Check(name=name, passed=bool(ok), value=value,
                                 threshold=float(threshold),
                                 comparison=comparison, detail=detail))

    def to_document(self) -> dict:
        return {
            "experiment": self.experiment,
            "passed": self.passed,
            "elapsed_seconds": self.elapsed_seconds,
            "checks": [asdict(c) for c in self.checks],
            "artifacts": self.artifacts,
        }

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_document(), fh, indent=1)


def ks_distance(samples, cdf) -> float:
    """Kolmogorov-Smirnov distance between a sample and a reference CDF."""
    x = np.sort(np.asarray(samples, dtype=np.float64).reshape(-1))
    if x.size == 0:
        raise DataError("empty sample")
    n = x.size
    F = np.asarray(cdf(x), dtype=np.float64)
    upper = np.max(np.arange(1, n + 1) / n - F)
    lower = np.max(F - np.arange(0, n) / n)
    return float(max(upper, lower))


def _normal_pdf(x, mean, sd):
    z = (np.asarray(x, dtype=np.float64) - mean) / sd
    return np.exp(-0.5 * z * z) / (sd * math.sqrt(2.0 * math.pi))


def _write_csv(path, header, columns):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in zip(*columns):
            writer.writerow([format(v, ".17g") for v in row])


def _merge(base: dict, override: Optional[dict]) -> dict:
    out = dict(base)
    for key, val in (override or {}).items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = val
    return out


def run_normal_normal(outdir, overrides: Optional[dict] = None,
                      structural_only: bool = False) -> ReproReport:
    """Conjugate-model reproduction: panel data, distortion identity, and
    (unless structural_only) the trained-posterior recovery checks."""
    t0 = time.perf_counter()
    os.makedirs(outdir, exist_ok=True)
    config = _merge(presets.get_preset(presets.NORMAL_NORMAL), overrides)
    report = ReproReport(experiment=presets.NORMAL_NORMAL)

    model = presets.build_normal_normal(config)
    y_obs = presets.generate_observed_data(config)
    post = conjugate_posterior(model, y_obs)
    w = wang_params(model, y_obs)
    alpha = math.sqrt(model.prior_variance)
    sigma = math.sqrt(model.likelihood_variance)
    true_theta = float(config["model"]["true_theta"])

    theta = np.arange(-15.0, 15.0 + 1e-9, 0.05)
    prior_pdf = _normal_pdf(theta, model.prior_mean, alpha)
    lik_pdf = _normal_pdf(theta, true_theta, sigma)
    post_pdf = _normal_pdf(theta, post.mu_star, post.sigma_star)
    p_model = os.path.join(outdir, "panel_model.csv")
    _write_csv(p_model, ["theta", "prior", "likelihood", "posterior"],
               [theta, prior_pdf, lik_pdf, post_pdf])
    s_model = os.path.join(outdir, "panel_model.svg")
    line_plot(s_model,
              [Series(theta, prior_pdf, "prior"),
               Series(theta, lik_pdf, "likelihood", dashed=True),
               Series(theta, post_pdf, "posterior")],
              title="Model densities", xlabel="theta", ylabel="density")

    p = np.linspace(1e-4, 1.0 - 1e-4, 601)
    g_vals = w(p)
    p_dist = os.path.join(outdir, "panel_distortion.csv")
    _write_csv(p_dist, ["p", "g"], [p, g_vals])
    s_dist = os.path.join(outdir, "panel_distortion.svg")
    line_plot(s_dist,
              [Series(p, g_vals, "g(p)"), Series(p, p, "identity", dashed=True)],
              title="Distortion function", xlabel="p", ylabel="g(p)")

    prior_surv = normal_cdf(-(theta - model.prior_mean) / alpha)
    post_surv = normal_cdf(-(theta - post.mu_star) / post.sigma_star)
    p_surv = os.path.join(outdir, "panel_survival.csv")
    _write_csv(p_surv, ["theta", "prior_survival", "posterior_survival",
                        "distorted_prior_survival"],
               [theta, prior_surv, post_surv, w(prior_surv)])
    s_surv = os.path.join(outdir, "panel_survival.svg")
    line_plot(s_surv,
              [Series(theta, prior_surv, "prior survival"),
               Series(theta, post_surv, "posterior survival")],
              title="Survival functions", xlabel="theta", ylabel="1 - CDF")
    report.artifacts += [p_model, s_model, p_dist, s_dist, p_surv, s_surv]

    report.add("distortion_nondecreasing",
               float(np.min(np.diff(g_vals))), 0.0, comparison=">=",
               detail="min forward difference of g on the panel grid")
    # strict increase is only checkable away from the regions where g has
    # saturated to 0 or 1 in double precision
    interior = np.diff(g_vals[(g_vals > 1e-9) & (g_vals < 1.0 - 1e-9)])
    report.add("distortion_strictly_increasing",
               float(np.min(interior)) if interior.size else math.inf,
               0.0, comparison=">",
               detail="min forward difference where g is away from 0 and 1")
    grid = np.arange(-10.0, 10.0 + 1e-9, 0.01)
    report.add("survival_identity_max_discrepancy",
               prior_to_posterior_survival_check(grid, model, y_obs), 1e-9)
    sigma_star_exact = math.sqrt(alpha ** 2 * sigma ** 2
                                 / (sigma ** 2 + model.n * alpha ** 2))
    report.add("sigma_star_matches_closed_form",
               abs(post.sigma_star - sigma_star_exact), 1e-12,
               detail=f"sigma_star={post.sigma_star:.6f}")

    if not structural_only:
        sim = config["simulate"]
        rng = RandomSource(seed=int(sim["seed"]))
        table = build_training_table(model.spec(), N=int(sim["N"]), rng=rng,
                                     sorted_pairing=bool(sim["sorted_pairing"]))
        H, _ = train_posterior_net(table, TrainConfig(**config["train"]))
        net_path = os.path.join(outdir, "posterior_net.json")
        save_net(H.net, net_path)
        report.artifacts.append(net_path)

        M = int(config["posterior"]["M"])
        draw_rng = RandomSource(seed=int(config["posterior"]["sample_seed"]),
                                stream=1)
        s_obs = summary_mean(y_obs)
        draws = posterior_sample(H, [s_obs], M=M, rng=draw_rng)
        d_path = os.path.join(outdir, "posterior_draws.csv")
        _write_csv(d_path, ["theta"], [draws])
        report.artifacts.append(d_path)

        report.add("posterior_ks_distance", ks_distance(draws, post.cdf), 0.05,
                   detail=f"M={M}, summary={s_obs:.4f}")
        report.add("posterior_mean_abs_error",
                   abs(float(draws.mean()) - post.mu_star),
                   0.1 * post.sigma_star,
                   detail=f"net mean={draws.mean():.4f}, oracle={post.mu_star:.4f}")
        report.add("posterior_sd_ratio_error",
                   abs(float(draws.std(ddof=1)) / post.sigma_star - 1.0), 0.1,
                   detail=f"net sd={draws.std(ddof=1):.4f}, oracle={post.sigma_star:.4f}")

    report.elapsed_seconds = time.perf_counter() - t0
    report.save(os.path.join(outdir, "report.json"))
    report.artifacts.append(os.path.join(outdir, "report.json"))
    return report


def run_portfolio(outdir, overrides: Optional[dict] = None,
                  structural_only: bool = False,
                  write_table: bool = False) -> ReproReport:
    """Portfolio reproduction: EU curves with the 0.4 marker and (unless
    structural_only) the trained-utility-net weight recovery check."""
    t0 = time.perf_counter()
    os.makedirs(outdir, exist_ok=True)
    config = _merge(presets.get_preset(presets.PORTFOLIO), overrides)
    report = ReproReport(experiment=presets.PORTFOLIO)

    problem = presets.build_portfolio(config)
    grid = presets.decision_grid(config)
    kelly = kelly_weight(problem)
    analytic_curve = cara_normal_eu(grid, problem)

    a_csv = os.path.join(outdir, "eu_curve_analytic.csv")
    _write_csv(a_csv, ["d", "eu", "se"],
               [grid, analytic_curve, np.zeros_like(grid)])
    report.artifacts.append(a_csv)

    report.add("analytic_curve_strictly_concave",
               float(np.max(np.diff(analytic_curve, 2))), 0.0,
               detail="max second difference over the weight grid")
    report.add("kelly_weight_abs_error", abs(float(kelly) - 0.40), 1e-12,
               detail=f"kelly={float(kelly):.6f}")

    series = [Series(grid, analytic_curve, "analytic EU", dashed=True)]
    vlines = [VLine(float(kelly), label=f"{float(kelly):.2f}", color="#d62728")]

    if not structural_only:
        sim = config["simulate"]
        rng = RandomSource(seed=int(sim["seed"]))
        spec = presets.portfolio_model_spec(problem)
        utility = problem.utility_spec()
        table = build_training_table(spec, utility=utility, decisions=grid,
                                     N=int(sim["N"]), rng=rng,
                                     sorted_pairing=bool(sim["sorted_pairing"]))
        if write_table:
            t_path = os.path.join(outdir, "table.csv")
            table.to_csv(t_path)
            report.artifacts.append(t_path)
        G, _ = train_utility_net(table, TrainConfig(**config["train"]))
        net_path = os.path.join(outdir, "utility_net.json")
        save_net(G.net, net_path)
        report.artifacts.append(net_path)

        eu_cfg = config["eu"]

        def evaluator(d):
            return expected_utility(G, d=d, M=int(eu_cfg["M"]),
                                    scheme=eu_cfg["scheme"])

        opt_cfg = config["optimize"]
        result = optimize_decision(evaluator, problem.weight_domain,
                                   grid_size=int(opt_cfg["grid_size"]),
                                   refine=bool(opt_cfg["refine"]),
                                   config={"preset": presets.PORTFOLIO,
                                           "M": int(eu_cfg["M"]),
                                           "scheme": eu_cfg["scheme"]},
                                   seed=int(sim["seed"]))
        r_json = os.path.join(outdir, "result.json")
        result.save_json(r_json)
        c_csv = os.path.join(outdir, "eu_curve.csv")
        result.curve_to_csv(c_csv)
        report.artifacts += [r_json, c_csv]

        curve = np.array([[d, eu] for d, eu, _ in result.curve])
        series.insert(0, Series(curve[:, 0], curve[:, 1], "net EU"))
        vlines.append(VLine(result.best_decision,
                            label=f"est {result.best_decision:.3f}",
                            color="#2ca02c"))
        report.add("weight_abs_error", abs(result.best_decision - float(kelly)),
                   0.05, comparison="<=",
                   detail=f"best_decision={result.best_decision:.4f}")
        report.add("pipeline_elapsed_seconds", time.perf_counter() - t0, 300.0)

    svg = os.path.join(outdir, "eu_curve.svg")
    line_plot(svg, series, title="Expected utility vs portfolio weight",
              xlabel="weight", ylabel="expected utility", vlines=vlines)
    report.artifacts.append(svg)

    report.elapsed_seconds = time.perf_counter() - t0
    report.save(os.path.join(outdir, "report.json"))
    report.artifacts.append(os.path.join(outdir, "report.json"))
    return report


RUNNERS = {
    presets.NORMAL_NORMAL: run_normal_normal,
    presets.PORTFOLIO: run_portfolio,
}
