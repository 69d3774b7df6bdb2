"""Acceptance suite: every gate criterion as a callable with a fixed seed.

Seeds follow one convention, seed = criterion number (no per-criterion
tuning), so each criterion is a deterministic computation whose pass/fail
status is reproducible.  ``run_acceptance`` prints one line per criterion and
is wired to the CLI ``check`` subcommand; the pytest module asserts each
criterion individually.

Two criteria carry known caveats, documented in their detail strings: the
weak-reinforcement limit tolerance (criterion 10) is analytically out of
reach of the stated probe point, and the decay-slope window (criterion 8) sits
on the edge of its band at the stated box scale.  They are implemented
exactly as stated and allowed to fail honestly.
"""

from __future__ import annotations

import math
import os
import tempfile
import time
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from . import bounds
from .betafield import beta_from_u, sample_beta_sequential
from .coarse import coarsen, standard_partition
from .experiments import default_config, run_experiment, rng_streams
from .greens import ufield_from_sample
from .lattice import LatticeParams, build_finite_box
from .walk import environment_escape_probability, simulate_vrjp


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    elapsed_s: float


def _rows_by_stat(record, statistic: str, scale: str | None = None) -> list:
    return [
        r for r in record.rows
        if r.statistic == statistic and (scale is None or r.vertex_or_scale == scale)
    ]


def criterion_1_gamma_law(workers: int = 1) -> tuple[bool, str]:
    config = default_config("gamma_law", seed=1, workers=workers)
    record = run_experiment(config)
    ks = _rows_by_stat(record, "ks_stat")[0].value
    ok = ks < 0.04 and record.wall_clock_s < 120.0
    return ok, f"KS(1/(2G(d,d)) vs Gamma(1/2)) = {ks:.4f} (< 0.04), wall = {record.wall_clock_s:.1f}s (< 120)"


def criterion_2_ward(workers: int = 1) -> tuple[bool, str]:
    config = default_config("ward", seed=2, workers=workers)
    record = run_experiment(config)
    z = _rows_by_stat(record, "max_abs_z")[0].value
    return z < 4.0, f"max |mean e^u - 1| / group-se over 10 vertices = {z:.2f} (< 4); rho = {config.rho}"


def criterion_3_sampler_equivalence(workers: int = 1) -> tuple[bool, str]:
    config = default_config("sampler_crosscheck", seed=3, workers=workers)
    record = run_experiment(config)
    p = _rows_by_stat(record, "ks_pvalue")[0].value
    return p > 0.01, f"two-sample KS p (sequential vs Gibbs, e^u at site 1) = {p:.4f} (> 0.01)"


def criterion_4_coarse_law(workers: int = 1) -> tuple[bool, str]:
    config = default_config("coarse_check", seed=4, workers=workers)
    record = run_experiment(config)
    p = _rows_by_stat(record, "ks_pvalue", scale="1")[0].value
    return p > 0.01, f"two-sample KS p (fine block average vs merged graph, scale 1) = {p:.4f} (> 0.01)"


def criterion_5_roundtrip() -> tuple[bool, str]:
    box = build_finite_box(LatticeParams(rho=4.0, wbar=1.0, n=6))
    worst = 0.0
    for i in range(100):
        sample = sample_beta_sequential(box, rng_streams(5, i))
        field = ufield_from_sample(sample)
        back = beta_from_u(field.u, field.g_pin, box)
        rel = float(np.max(np.abs(back.beta - sample.beta) / np.abs(sample.beta)))
        worst = max(worst, rel)
    return worst < 1e-8, f"max relative reconstruction error over 100 samples = {worst:.2e} (< 1e-8)"


def criterion_6_pathsum() -> tuple[bool, str]:
    rng = rng_streams(6, 0)
    worst = 0.0
    bounded = True
    for _ in range(1000):
        k = int(rng.integers(0, 6))
        n = k + int(rng.integers(1, 13))
        a = rng.uniform(0.0, 4.0, size=n - k)
        res = bounds.pathsum_exact(k, n, a)
        denom = max(1.0, abs(res.exact))
        worst = max(worst, abs(res.exact - res.closed_form) / denom)
        bounded &= res.exact <= res.product_form * (1.0 + 1e-12)
    ok = worst <= 1e-12 and bounded
    return ok, f"max |enumeration - closed form| (rel) = {worst:.2e} (<= 1e-12); dominated by all-(1+A) product: {bounded}"


def criterion_7_recursion(n: int = 5, s: float = 0.25, replicas: int = 1000) -> tuple[bool, str]:
    details = []
    ok = True
    for case_idx, (rho, wbar) in enumerate(((4.0, 1.0), (2.0, 0.1))):
        params = LatticeParams(rho=rho, wbar=wbar, n=n)
        box = build_finite_box(params)
        bp = bounds.BoundParams(s=s, rho=rho, wbar=wbar)
        mean_p, se_p, mean_b, se_b = {}, {}, {}, {}
        for k in range(n):
            graph = coarsen(box, standard_partition(n, k))
            vp = graph.vertex_of_label(f"B{k}'")
            vb = graph.vertex_of_label(f"B{k}")
            rng = rng_streams(7, case_idx * n + k)
            vals = np.empty((replicas, 2))
            for r in range(replicas):
                field = ufield_from_sample(sample_beta_sequential(graph, rng))
                vals[r] = np.exp(s * field.u[[vp, vb]])
            mean_p[k], mean_b[k] = vals.mean(axis=0)
            se_p[k], se_b[k] = vals.std(axis=0, ddof=1) / math.sqrt(replicas)
        worst_ratio = 0.0
        for k in range(n):
            moments = [mean_b[ell] + 1.96 * se_b[ell] for ell in range(k + 1, n)] + [1.0]
            rhs = bounds.recursion_rhs(k, n, bp, moments)
            lhs = mean_p[k] - 1.96 * se_p[k]
            ok &= lhs <= rhs
            worst_ratio = max(worst_ratio, mean_p[k] / rhs)
        details.append(f"rho={rho} wbar={wbar}: max LHS/RHS = {worst_ratio:.3f}")
    return ok, "MC moment <= recursion bound at 95% for all scales; " + "; ".join(details)


def criterion_8_decay_slope(workers: int = 8) -> tuple[bool, str]:
    config = default_config("decay_slope", seed=8, workers=workers)
    start = time.perf_counter()
    record = run_experiment(config)
    elapsed = time.perf_counter() - start
    ratio = _rows_by_stat(record, "slope_ratio")[0].value
    deep = _rows_by_stat(record, "slope_deep")[0].value
    target = _rows_by_stat(record, "slope_target")[0].value
    ok = 0.7 <= ratio <= 1.3 and elapsed < 600.0
    return ok, (
        f"fit slope / (-s log 2rho) = {ratio:.3f} (need 0.7..1.3), deep-window ratio = "
        f"{deep / target:.3f}, wall = {elapsed:.0f}s (< 600); known edge case, see README"
    )


def criterion_9_phase_transition(workers: int = 1) -> tuple[bool, str]:
    rec = run_experiment(default_config("recurrence_scan", seed=9, workers=workers))
    medians = [r.value for r in _rows_by_stat(rec, "escape_median")]
    slope = _rows_by_stat(rec, "log_median_slope")[0].value
    monotone = all(b < a for a, b in zip(medians, medians[1:]))
    ok1 = monotone and slope < -0.1
    tr = run_experiment(default_config("transience_scan", seed=90, workers=workers))
    ratio = _rows_by_stat(tr, "min_over_first")[0].value
    ok2 = ratio >= 0.5
    return ok1 and ok2, (
        f"rho=4: medians decreasing = {monotone}, log-median slope = {slope:.2f} (< -0.1); "
        f"rho=sqrt2: min/first = {ratio:.2f} (>= 0.5)"
    )


def criterion_10_constants() -> tuple[bool, str]:
    worst = 0.0
    for i in range(1, 10):
        s = round(0.05 * i, 2)
        canonical = bounds.const_c_s(s) ** s
        quad = bounds.cs_power_quadrature(s)
        worst = max(worst, abs(canonical - quad) / canonical)
    dual_ok = worst < 1e-6
    c_limit = bounds.const_c_wbar_s(1e-9, 0.25)
    limit_ok = abs(c_limit - 2.0) < 1e-6
    detail = (
        f"c_s dual-oracle max rel diff = {worst:.1e} (< 1e-6): {'ok' if dual_ok else 'FAIL'}; "
        f"|c(1e-9, 0.25) - 2| = {abs(c_limit - 2.0):.2e} (< 1e-6): {'ok' if limit_ok else 'FAIL'}"
    )
    if not limit_ok:
        detail += (
            " [the displayed formula approaches 2 only like (wbar)^s: at wbar = 1e-9 the gap "
            "is >= 1.7e-3 for every s in (0, 1/2); see README]"
        )
    return dual_ok and limit_ok, detail


def criterion_11_vrjp_consistency(runs: int = 10_000) -> tuple[bool, str]:
    box = build_finite_box(LatticeParams(rho=4.0, wbar=1.0, n=2))
    rng = rng_streams(11, 0)
    returned = 0
    for _ in range(runs):
        tr = simulate_vrjp(box, 0, ("hit", box.boundary), rng)
        returned += bool(np.any(tr.states[1:-1] == 0))
    p_direct = returned / runs
    rng2 = rng_streams(11, 1)
    p_mixture = float(
        np.mean([1.0 - environment_escape_probability(box, 0, box.boundary, rng2) for _ in range(runs)])
    )
    diff = abs(p_direct - p_mixture)
    return diff < 0.02, (
        f"P(return before boundary): direct walk = {p_direct:.4f}, conductance mixture = "
        f"{p_mixture:.4f}, |diff| = {diff:.4f} (< 0.02)"
    )


def criterion_12_determinism() -> tuple[bool, str]:
    from click.testing import CliRunner

    from .cli import main as cli_main

    runner = CliRunner()
    digests = []
    with tempfile.TemporaryDirectory() as tmp:
        for tag, workers in (("a", 1), ("b", 2), ("c", 2)):
            outdir = os.path.join(tmp, tag)
            result = runner.invoke(
                cli_main,
                ["figure1", "--seed", "7", "--workers", str(workers), "--out", outdir],
                catch_exceptions=False,
            )
            if result.exit_code != 0:
                return False, f"CLI run failed (exit {result.exit_code}): {result.output[-200:]}"
            with open(os.path.join(outdir, "figure1.csv"), "rb") as fh:
                digests.append(fh.read())
    ok = digests[0] == digests[1] == digests[2]
    return ok, f"figure1 --seed 7 CSV byte-identical across runs and worker counts (1, 2, 2): {ok}"


_CRITERIA: list[tuple[int, str, Callable[[], tuple[bool, str]]]] = [
    (1, "pivot Gamma(1/2) law", criterion_1_gamma_law),
    (2, "unit mean of e^u", criterion_2_ward),
    (3, "sequential vs Gibbs equivalence", criterion_3_sampler_equivalence),
    (4, "coarse-grain law preservation", criterion_4_coarse_law),
    (5, "potential/field round trip", criterion_5_roundtrip),
    (6, "path-sum identity", criterion_6_pathsum),
    (7, "recursive moment inequality", criterion_7_recursion),
    (8, "decay-slope sandwich", criterion_8_decay_slope),
    (9, "phase-transition diagnostic", criterion_9_phase_transition),
    (10, "closed-form constants", criterion_10_constants),
    (11, "walk vs mixture consistency", criterion_11_vrjp_consistency),
    (12, "seeded determinism", criterion_12_determinism),
]


def run_acceptance(numbers: Iterable[int] | None = None, echo=print) -> list[CriterionResult]:
    """Run the requested criteria (all by default), printing one line each."""
    wanted = set(numbers) if numbers is not None else {num for num, _, _ in _CRITERIA}
    results = []
    for number, name, fn in _CRITERIA:
        if number not in wanted:
            continue
        start = time.perf_counter()
        try:
            passed, detail = fn()
        except Exception as exc:  # a crashed criterion is a failed criterion
            passed, detail = False, f"crashed: {type(exc).__name__}: {exc}"
        elapsed = time.perf_counter() - start
        results.append(CriterionResult(number, name, passed, detail, elapsed))
        echo(f"{'PASS' if passed else 'FAIL'} criterion {number:2d} [{name}] {detail} ({elapsed:.1f}s)")
    return results
