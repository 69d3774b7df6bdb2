"""Experiment execution: replica-parallel Monte Carlo with canonical aggregation.

Each replica runs in its own deterministically derived stream and returns
plain numbers; aggregation is a single fold over the results in replica
order, so the output is byte-identical for any worker count.  Worker
failures never abort a run: the failing replica is recorded in the record's
``failures`` list and excluded from the statistics.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import scipy.stats

from .. import bounds
from ..betafield import gibbs_chain, sample_beta_sequential
from ..errors import NumericalError
from ..coarse import coarsen, standard_partition
from ..greens import assemble_H, green, ufield_from_sample, ufield_pinned
from ..lattice import LatticeParams, build_finite_box
from ..robust import group_se, mom_estimate
from ..walk import conductances, escape_probability
from .config import (
    FIGURE1_RHOS,
    ExperimentConfig,
    RunRecord,
    StatRow,
    representative_site,
)
from .rng import aux_stream, resolve_seed, rng_streams, stream_fingerprint

CODE_VERSION = "0.1.0"


def _build_graph(spec: dict):
    params = LatticeParams(
        rho=spec["rho"], wbar=spec["wbar"], n=spec["n"], q_exponent=spec.get("q", 0)
    )
    box = build_finite_box(params)
    if spec.get("kind", "box") == "box":
        return box
    return coarsen(box, standard_partition(spec["n"], spec["k"]))


def _env_worker(args: tuple) -> tuple:
    """One sampled environment; returns only the numbers the experiment asked for."""
    payload, seed, idx = args
    try:
        graph = _build_graph(payload["graph"])
        rng = rng_streams(seed, idx)
        sample = sample_beta_sequential(graph, rng)
        pin = payload["pin"] if payload["pin"] >= 0 else graph.boundary
        field = ufield_from_sample(sample, pin=pin)
        out: dict = {}
        if "exp_su_at" in payload:
            s = payload["s"]
            out["exp_su"] = [float(np.exp(s * field.u[v])) for v in payload["exp_su_at"]]
        if "exp_u_at" in payload:
            out["exp_u"] = [float(np.exp(field.u[v])) for v in payload["exp_u_at"]]
        if payload.get("want_gamma"):
            out["gamma"] = field.gamma
        if "block_avgs" in payload:
            out["blocks"] = [float(np.exp(field.u[list(b)]).mean()) for b in payload["block_avgs"]]
        if payload.get("escape_to_boundary"):
            network = conductances(field, graph)
            out["escape"] = escape_probability(network, pin, graph.boundary)
        return ("ok", idx, out)
    except Exception as exc:  # worker failures are data, not crashes
        return ("error", idx, f"replica {idx}: {type(exc).__name__}: {exc}")


def _run_tasks(payload: dict, seed: int, indices, workers: int):
    args = [(payload, seed, i) for i in indices]
    if workers <= 1:
        results = [_env_worker(a) for a in args]
    else:
        chunk = max(1, len(args) // (workers * 4))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_env_worker, args, chunksize=chunk))
    ok = [r[2] for r in results if r[0] == "ok"]
    failures = [r[2] for r in results if r[0] == "error"]
    if not ok:
        raise NumericalError(f"all {len(failures)} replicas failed; first: {failures[0]}")
    return ok, failures


def _mom_rows(values, stat: str, scale: str, rho: float) -> list[StatRow]:
    est = mom_estimate(np.asarray(values))
    return [
        StatRow(
            statistic=stat,
            vertex_or_scale=scale,
            rho=rho,
            value=est.estimate,
            stderr=est.robust_se,
            ci_lo=est.ci_lo,
            ci_hi=est.ci_hi,
        ),
        StatRow(
            statistic=stat + "_mean",
            vertex_or_scale=scale,
            rho=rho,
            value=est.mean,
            stderr=est.se_mean,
        ),
    ]


def _fit_slope(xs, ys) -> float:
    return float(np.polyfit(np.asarray(xs, dtype=float), np.asarray(ys, dtype=float), 1)[0])


# --- individual experiments -------------------------------------------------


def _run_figure1(config: ExperimentConfig, seed: int):
    """Quarter-moment of the field pinned at site 1 vs scale, one series per rho."""
    n, s, reps = config.n, config.s, config.replicas
    verts = [representative_site(k) - 1 for k in range(1, n + 1)]
    rows: list[StatRow] = []
    failures: list[str] = []
    for rho_idx, rho in enumerate(FIGURE1_RHOS):
        payload = {
            "graph": {"rho": rho, "wbar": config.wbar, "n": n, "q": config.q_exponent if rho == 2 else 0},
            "pin": 0,
            "s": s,
            "exp_su_at": verts,
        }
        indices = range(rho_idx * reps, rho_idx * reps + reps)
        ok, fail = _run_tasks(payload, seed, indices, config.workers)
        failures.extend(fail)
        rows.append(StatRow(statistic="frac_moment", vertex_or_scale="0", rho=rho, value=1.0, stderr=0.0))
        per_k = np.array([o["exp_su"] for o in ok])
        for col, k in enumerate(range(1, n + 1)):
            rows.extend(_mom_rows(per_k[:, col], "frac_moment", str(k), rho))
    return rows, failures, len(FIGURE1_RHOS) * reps


def _run_gamma_law(config: ExperimentConfig, seed: int):
    """Distribution of the pivot 1/(2 G(boundary, boundary)) against Gamma(1/2, 1)."""
    payload = {
        "graph": {"rho": config.rho, "wbar": config.wbar, "n": config.n, "q": config.q_exponent},
        "pin": -1,
        "want_gamma": True,
    }
    ok, failures = _run_tasks(payload, seed, range(config.replicas), config.workers)
    gam = np.array([o["gamma"] for o in ok])
    ks = scipy.stats.kstest(gam, scipy.stats.gamma(a=0.5).cdf)
    rows = [
        StatRow(statistic="ks_stat", rho=config.rho, value=float(ks.statistic)),
        StatRow(statistic="ks_pvalue", rho=config.rho, value=float(ks.pvalue)),
        StatRow(statistic="gamma_mean", rho=config.rho, value=float(gam.mean()),
                stderr=float(gam.std(ddof=1) / np.sqrt(len(gam)))),
        StatRow(statistic="n_effective", rho=config.rho, value=float(len(gam))),
    ]
    return rows, failures, config.replicas


def _run_ward(config: ExperimentConfig, seed: int):
    """Mean of e^{u_i} (pinned at the boundary) against its exact value 1."""
    n_sites = 2**config.n
    n_pick = min(10, n_sites)
    picker = aux_stream(seed, "ward-vertices")
    verts = sorted(int(v) for v in picker.choice(n_sites, size=n_pick, replace=False))
    payload = {
        "graph": {"rho": config.rho, "wbar": config.wbar, "n": config.n, "q": config.q_exponent},
        "pin": -1,
        "exp_u_at": verts,
    }
    ok, failures = _run_tasks(payload, seed, range(config.replicas), config.workers)
    vals = np.array([o["exp_u"] for o in ok])
    rows = []
    zs = []
    for col, v in enumerate(verts):
        col_vals = vals[:, col]
        mean = float(col_vals.mean())
        se = group_se(col_vals)
        z = abs(mean - 1.0) / se if se > 0 else 0.0
        zs.append(z)
        rows.append(StatRow(statistic="exp_u_mean", vertex_or_scale=str(v + 1), rho=config.rho,
                            value=mean, stderr=se))
        est = mom_estimate(col_vals)
        rows.append(StatRow(statistic="exp_u_mom", vertex_or_scale=str(v + 1), rho=config.rho,
                            value=est.estimate, stderr=est.robust_se,
                            ci_lo=est.ci_lo, ci_hi=est.ci_hi))
    rows.append(StatRow(statistic="max_abs_z", rho=config.rho, value=float(max(zs))))
    return rows, failures, config.replicas


def _run_coarse_check(config: ExperimentConfig, seed: int):
    """Fine block-averaged field vs the field sampled on the merged graph, all scales."""
    n, reps = config.n, config.replicas
    blocks = [tuple(range(2**k, 2 ** (k + 1))) for k in range(n)]  # block Bk, sibling of site 1's
    fine_payload = {
        "graph": {"rho": config.rho, "wbar": config.wbar, "n": n, "q": config.q_exponent},
        "pin": -1,
        "block_avgs": blocks,
    }
    ok_fine, failures = _run_tasks(fine_payload, seed, range(reps), config.workers)
    fine = np.array([o["blocks"] for o in ok_fine])
    rows = []
    for k in range(n):
        coarse_payload = {
            "graph": {"kind": "coarse", "rho": config.rho, "wbar": config.wbar, "n": n,
                      "q": config.q_exponent, "k": k},
            "pin": -1,
            # sorted by smallest member the sibling block Bk is always vertex 1
            "exp_u_at": [1],
        }
        indices = range((k + 1) * reps, (k + 1) * reps + reps)
        ok_coarse, fail = _run_tasks(coarse_payload, seed, indices, config.workers)
        failures.extend(fail)
        coarse = np.array([o["exp_u"][0] for o in ok_coarse])
        ks = scipy.stats.ks_2samp(fine[:, k], coarse)
        rows.append(StatRow(statistic="ks_stat", vertex_or_scale=str(k), rho=config.rho,
                            value=float(ks.statistic)))
        rows.append(StatRow(statistic="ks_pvalue", vertex_or_scale=str(k), rho=config.rho,
                            value=float(ks.pvalue)))
    return rows, failures, (n + 1) * reps


def _run_decay_slope(config: ExperimentConfig, seed: int):
    """Fit of log E e^{s u} (pinned at site 1) against the scale of the vertex."""
    n, s = config.n, config.s
    verts = [representative_site(k) - 1 for k in range(1, n + 1)]
    payload = {
        "graph": {"rho": config.rho, "wbar": config.wbar, "n": n, "q": config.q_exponent},
        "pin": 0,
        "s": s,
        "exp_su_at": verts,
    }
    ok, failures = _run_tasks(payload, seed, range(config.replicas), config.workers)
    per_k = np.array([o["exp_su"] for o in ok])
    rows = []
    est_mom, est_mean = [], []
    for col, k in enumerate(range(1, n + 1)):
        e = mom_estimate(per_k[:, col])
        est_mom.append(e.estimate)
        est_mean.append(e.mean)
        rows.extend(_mom_rows(per_k[:, col], "frac_moment", str(k), config.rho))
    ks = list(range(1, n + 1))
    slope = _fit_slope(ks, np.log(est_mom))
    slope_mean = _fit_slope(ks, np.log(est_mean))
    deep = [k for k in ks if k >= (n + 1) // 2]
    slope_deep = _fit_slope(deep, np.log([est_mom[k - 1] for k in deep]))
    target = -s * np.log(2.0 * config.rho)
    rows += [
        StatRow(statistic="slope", rho=config.rho, value=slope),
        StatRow(statistic="slope_mean", rho=config.rho, value=slope_mean),
        StatRow(statistic="slope_deep", rho=config.rho, value=slope_deep),
        StatRow(statistic="slope_target", rho=config.rho, value=float(target)),
        StatRow(statistic="slope_ratio", rho=config.rho, value=float(slope / target)),
    ]
    return rows, failures, config.replicas


def _run_escape_scan(config: ExperimentConfig, seed: int):
    """Escape-probability distribution vs box scale (recurrence/transience diagnostic)."""
    reps = config.replicas
    n_values = list(range(3, config.n + 1)) or [config.n]
    rows = []
    failures: list[str] = []
    medians = []
    for n_idx, n in enumerate(n_values):
        payload = {
            "graph": {"rho": config.rho, "wbar": config.wbar, "n": n, "q": config.q_exponent},
            "pin": 0,
            "escape_to_boundary": True,
        }
        indices = range(n_idx * reps, n_idx * reps + reps)
        ok, fail = _run_tasks(payload, seed, indices, config.workers)
        failures.extend(fail)
        vals = np.array([o["escape"] for o in ok])
        q25, med, q75 = np.quantile(vals, [0.25, 0.5, 0.75])
        medians.append(float(med))
        scale = str(n)
        rows += [
            StatRow(statistic="escape_median", vertex_or_scale=scale, rho=config.rho, value=float(med)),
            StatRow(statistic="escape_q25", vertex_or_scale=scale, rho=config.rho, value=float(q25)),
            StatRow(statistic="escape_q75", vertex_or_scale=scale, rho=config.rho, value=float(q75)),
            StatRow(statistic="escape_mean", vertex_or_scale=scale, rho=config.rho, value=float(vals.mean()),
                    stderr=float(vals.std(ddof=1) / np.sqrt(len(vals)))),
        ]
    if len(n_values) > 1:
        rows.append(StatRow(statistic="log_median_slope", rho=config.rho,
                            value=_fit_slope(n_values, np.log(medians))))
        rows.append(StatRow(statistic="min_over_first", rho=config.rho,
                            value=float(min(medians) / medians[0])))
    return rows, failures, len(n_values) * reps


def _run_bounds_table(config: ExperimentConfig, seed: int):
    """Closed-form constants and bounds on a standard grid (no Monte Carlo)."""
    rows = []
    for s in [round(0.05 * i, 2) for i in range(1, 10)]:
        canonical = bounds.const_c_s(s) ** s
        rows += [
            StatRow(statistic="cs_pow_s", vertex_or_scale=f"s={s}", rho=config.rho, value=canonical),
            StatRow(statistic="cs_pow_s_quadrature", vertex_or_scale=f"s={s}", rho=config.rho,
                    value=bounds.cs_power_quadrature(s)),
            StatRow(statistic="cs_pow_s_tail_integral", vertex_or_scale=f"s={s}", rho=config.rho,
                    value=bounds.cs_double_integral(s)),
        ]
    for wbar in (1e-6, 1e-3, 0.1, 1.0, 10.0):
        rows.append(StatRow(statistic="c_wbar_s", vertex_or_scale=f"wbar={wbar}", rho=config.rho,
                            value=bounds.const_c_wbar_s(wbar, config.s)))
    rows.append(StatRow(statistic="wbar_threshold", rho=config.rho,
                        value=bounds.wbar_threshold(config.s)))
    rows.append(StatRow(statistic="critical_factor", rho=config.rho,
                        value=bounds.critical_factor(config.wbar, config.s)))
    bp = bounds.BoundParams(s=config.s, rho=config.rho, wbar=config.wbar)
    for k in range(config.n):
        rows.append(StatRow(statistic="product_bound", vertex_or_scale=str(k), rho=config.rho,
                            value=bounds.product_bound(k, config.n, bp)))
        moments = [1.0] * (config.n - k)
        rows.append(StatRow(statistic="recursion_rhs_unit", vertex_or_scale=str(k), rho=config.rho,
                            value=bounds.recursion_rhs(k, config.n, bp, moments)))
    m = max(1, config.n // 2)
    rows.append(StatRow(statistic="two_particle_bound", vertex_or_scale=f"k=0,m={m}", rho=config.rho,
                        value=bounds.twoparticle_bound(0, m, config.n, bp)))
    return rows, [], 0


def _run_sampler_crosscheck(config: ExperimentConfig, seed: int):
    """Two-sample comparison of the exact sampler against the Gibbs chain."""
    payload = {
        "graph": {"rho": config.rho, "wbar": config.wbar, "n": config.n, "q": config.q_exponent},
        "pin": -1,
        "exp_u_at": [0],
    }
    ok, failures = _run_tasks(payload, seed, range(config.replicas), config.workers)
    seq_vals = np.array([o["exp_u"][0] for o in ok])

    graph = _build_graph(payload["graph"])
    diag: dict = {}
    chain = gibbs_chain(graph, aux_stream(seed, "gibbs-chain"), config.replicas,
                        burn_in=50, thin=5, diagnostics=diag)
    gib_vals = np.empty(len(chain))
    for r, beta in enumerate(chain):
        field = ufield_pinned(green(assemble_H(beta, graph)), graph.boundary)
        gib_vals[r] = np.exp(field.u[0])
    ks = scipy.stats.ks_2samp(seq_vals, gib_vals)
    rows = [
        StatRow(statistic="ks_stat", rho=config.rho, value=float(ks.statistic)),
        StatRow(statistic="ks_pvalue", rho=config.rho, value=float(ks.pvalue)),
        StatRow(statistic="sequential_median", rho=config.rho, value=float(np.median(seq_vals))),
        StatRow(statistic="gibbs_median", rho=config.rho, value=float(np.median(gib_vals))),
        StatRow(statistic="gibbs_reinits", rho=config.rho, value=float(diag.get("reinit_count", 0))),
    ]
    return rows, failures, config.replicas


_RUNNERS = {
    "figure1": _run_figure1,
    "gamma_law": _run_gamma_law,
    "ward": _run_ward,
    "coarse_check": _run_coarse_check,
    "decay_slope": _run_decay_slope,
    "recurrence_scan": _run_escape_scan,
    "transience_scan": _run_escape_scan,
    "bounds_table": _run_bounds_table,
    "sampler_crosscheck": _run_sampler_crosscheck,
}


def run_experiment(config: ExperimentConfig) -> RunRecord:
    """Execute one experiment and, when an output directory is set, persist the
    record before any derived artifact is produced."""
    # capacity is an eager validation error, not a per-replica one
    build_finite_box(
        LatticeParams(rho=config.rho, wbar=config.wbar, n=config.n, q_exponent=config.q_exponent)
    )
    seed = resolve_seed(config.seed)
    start = time.perf_counter()
    rows, failures, n_streams = _RUNNERS[config.experiment](config, seed)
    elapsed = time.perf_counter() - start
    record = RunRecord(
        config=config,
        resolved_seed=seed,
        replica_seeds=[stream_fingerprint(seed, i) for i in range(min(n_streams, config.replicas))],
        rows=rows,
        wall_clock_s=elapsed,
        code_version=CODE_VERSION,
        failures=failures,
    )
    if config.output_dir is not None:
        from .report import write_run_record

        write_run_record(record, config.output_dir)
    return record
