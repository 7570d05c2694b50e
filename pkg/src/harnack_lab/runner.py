"""Experiment orchestration: deterministic seeding, fan-out, report files.

(config, seed) -> outputs is a pure function up to the timestamp field.
Per-check seeds come from a labeled hash of the master seed; checks may run
on a thread pool, but results are assembled in configuration order, so the
worker count never changes the output.
"""

import csv
import hashlib
import json
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone

import numpy as np

from .config import ConfigError, space_time_function_from_config, test_function_from_config
from .coupling import CouplingKind
from .errors import EstimatorError
from .estimate import (
    KrylovParams,
    default_probe_family,
    estimate_kappa,
)
from .model import check_hypotheses
from .paths import TimeGrid, simulate_path
from .svg import line_plot
from .verify import (
    Verdict,
    check_girsanov_consistency,
    check_harnack,
    check_krylov,
    check_shift_harnack,
    check_shift_log_harnack,
    check_variance_gradient,
    check_weight_moment_bound,
)

__all__ = ["derive_seed", "run_experiment", "sweep", "worker_count"]

THREADS_ENV = "HARNACK_LAB_THREADS"


def derive_seed(master_seed, label):
    """Stable 63-bit seed from (master seed, label)."""
    digest = hashlib.sha256(f"{master_seed}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "little") >> 1


def worker_count(override=None):
    if override is not None:
        return max(1, int(override))
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def _krylov_params(config, kappa):
    cfg = config.krylov
    drift = config.drift
    alpha = cfg.get("alpha", drift.p_exponent / 2.0)
    beta = cfg.get("beta", drift.q_exponent / 2.0)
    if alpha <= 1.0 or beta <= 1.0:
        alpha, beta = 2.0, 2.0
    return KrylovParams(
        alpha=float(alpha),
        beta=float(beta),
        kappa=float(kappa),
        lam=float(cfg.get("lambda", 1.0)),
        dim_d=drift.dim_d,
    )


def provision_kappa(config):
    """Resolve the Krylov constant: explicit value or empirical estimate."""
    if config.kappa != "estimate":
        return float(config.kappa), "config"
    probe_params = _krylov_params(config, kappa=1.0)
    d = config.drift.dim_d
    kappa = estimate_kappa(
        config.drift,
        config.diffusion,
        config.T,
        probe_params,
        default_probe_family(config.T, d),
        n_samples=min(config.n_samples, 20000),
        grid=TimeGrid(config.T, min(config.n_steps, 256)),
        seed=derive_seed(config.seed, "kappa"),
    )
    return kappa, "estimate"


def _run_check(chk, config, kappa, seed):
    name = chk["check"]
    drift, diff, T = config.drift, config.diffusion, config.T
    grid = TimeGrid(T, config.n_steps)
    n = config.n_samples
    x = np.asarray(chk.get("x", [0.0] * drift.dim_d), dtype=float)
    y = np.asarray(chk.get("y", [0.0] * drift.dim_d), dtype=float)
    if name == "harnack":
        f = test_function_from_config(chk["f"])
        return check_harnack(f, drift, diff, x, y, float(chk["p"]), T, n,
                             kappa, grid, seed)
    if name == "weight_moment_bound":
        return check_weight_moment_bound(drift, diff, x, y, float(chk["p"]),
                                         T, kappa, n, grid, seed)
    if name == "girsanov_consistency":
        f = test_function_from_config(chk["f"])
        kind = CouplingKind(chk.get("kind", "harnack"))
        return check_girsanov_consistency(f, drift, diff, x, y, T, n, grid,
                                          seed, kind=kind)
    if name == "shift_log_harnack":
        f = test_function_from_config(chk["f"])
        return check_shift_log_harnack(f, chk.get("variant", "ii"), drift,
                                       diff, x, y, T, kappa, n, grid, seed)
    if name == "shift_power_harnack":
        f = test_function_from_config(chk["f"])
        return check_shift_harnack(f, chk.get("variant", "ii"),
                                   float(chk["p"]), drift, diff, x, y, T,
                                   kappa, n, grid, seed)
    if name == "krylov":
        f = space_time_function_from_config(chk["f"])
        params = _krylov_params(config, kappa)
        return check_krylov(f, drift, diff, x, T, params, n, grid, seed)
    if name == "variance_gradient":
        f = test_function_from_config(chk["f"])
        return check_variance_gradient(f, drift, diff, x, y, T, kappa, n,
                                       grid, seed)
    raise ConfigError(f"unknown check {name!r}")


def _hypotheses_dict(report):
    return {
        "lqp_norm_of_b": report.lqp_norm_of_b,
        "K_profile": [list(pair) for pair in report.K_profile],
        "K_lq_norm": report.K_lq_norm,
        "admissible_pq": report.admissible_pq,
        "h2_ok": report.h2_ok,
        "empirical_translation_ratios": [
            list(pair) for pair in report.empirical_translation_ratios
        ],
        "k_is_analytic": report.k_is_analytic,
        "notes": list(report.notes),
    }


def _config_hash(config):
    canonical = json.dumps(config.raw, sort_keys=True).encode()
    return hashlib.sha256(canonical).hexdigest()


def _dump_paths(config, out_dir, count=64):
    """Binary dump: header (d, m, n_steps, count as little-endian uint32),
    then per path the states then the increments as little-endian doubles."""
    d, m = config.diffusion.dims
    grid = TimeGrid(config.T, config.n_steps)
    count = min(count, config.n_samples)
    x0 = np.zeros(d)
    path_file = os.path.join(out_dir, "paths.bin")
    with open(path_file, "wb") as fh:
        fh.write(struct.pack("<4I", d, m, grid.n_steps, count))
        for sid in range(count):
            sp = simulate_path(config.drift, config.diffusion, x0, grid, sid,
                               config.seed)
            fh.write(sp.states.astype("<f8").tobytes())
            fh.write(sp.increments.astype("<f8").tobytes())
    return path_file


def _write_summary_csv(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["name", "lhs", "rhs", "margin", "stderr", "verdict",
                        "constants"])
        for row in rows:
            writer.writerow(row)


def run_experiment(config, out_dir=None, workers=None):
    """Run hypotheses, kappa provisioning and all configured checks.

    Returns (exit_status, report dict); writes report.json and summary.csv
    into the output directory.  Exit status is 0 iff no check is violated
    beyond its confidence interval and no estimator failed.
    """
    out_dir = out_dir or config.out_dir
    os.makedirs(out_dir, exist_ok=True)

    hyp = check_hypotheses(
        config.drift, config.diffusion, config.T,
        probe_displacements=[np.full(config.drift.dim_d, v / np.sqrt(config.drift.dim_d))
                             for v in (0.05, 0.1, 0.2, 0.5)],
    )
    kappa, kappa_source = provision_kappa(config)

    results = [None] * len(config.checks)
    errors = []

    def job(i):
        chk = config.checks[i]
        seed = derive_seed(config.seed, f"check:{i}:{chk['check']}")
        return _run_check(chk, config, kappa, seed)

    with ThreadPoolExecutor(max_workers=worker_count(workers)) as pool:
        futures = {i: pool.submit(job, i) for i in range(len(config.checks))}
        for i in range(len(config.checks)):
            try:
                results[i] = futures[i].result()
            except (EstimatorError, ValueError) as exc:
                errors.append((config.checks[i]["check"], str(exc)))
                results[i] = None

    check_dicts = []
    rows = []
    violated = False
    for i, rep in enumerate(results):
        if rep is None:
            name, msg = config.checks[i]["check"], dict(errors)[config.checks[i]["check"]]
            check_dicts.append({"name": name, "error": msg})
            rows.append([name, "", "", "", "", "Error", msg])
            continue
        d = rep.to_dict()
        check_dicts.append(d)
        rows.append([
            rep.name, f"{rep.lhs:.10g}", f"{rep.rhs:.10g}",
            f"{rep.margin:.10g}", f"{rep.margin_stderr:.10g}", rep.verdict,
            json.dumps(d["constants"], sort_keys=True),
        ])
        if rep.verdict == Verdict.VIOLATED:
            violated = True

    status = 1 if (violated or errors) else 0
    report = {
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "seed": config.seed,
        "config": config.raw,
        "config_hash": _config_hash(config),
        "kappa": kappa,
        "kappa_source": kappa_source,
        "hypotheses": _hypotheses_dict(hyp),
        "checks": check_dicts,
        "exit_status": status,
    }
    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")
    _write_summary_csv(os.path.join(out_dir, "summary.csv"), rows)
    if config.dump_paths:
        _dump_paths(config, out_dir)
    return status, report


def _with_parameter(chk, parameter, value):
    chk = dict(chk)
    if parameter == "displacement":
        x = np.asarray(chk.get("x", [0.0]), dtype=float)
        y = np.asarray(chk.get("y", [0.0]), dtype=float)
        direction = y - x
        norm = np.linalg.norm(direction)
        if norm == 0:
            direction = np.zeros_like(x)
            direction[0] = 1.0
        else:
            direction = direction / norm
        chk["y"] = (x + value * direction).tolist()
    elif parameter == "p":
        chk["p"] = value
    elif parameter != "T":
        raise ConfigError("sweep parameter must be displacement, p, or T")
    return chk


def sweep(config, parameter, values, out_dir=None, workers=None):
    """One report per grid value of the swept parameter, plus CSV and SVG.

    Sweeps the displacement magnitude |x - y| (or |y|), the Harnack power
    p, or the horizon T, across every configured check.
    """
    values = list(values)
    if not values:
        raise ConfigError("sweep needs a nonempty grid of values")
    if not config.checks:
        raise ConfigError("sweep needs at least one configured check")
    out_dir = out_dir or config.out_dir
    os.makedirs(out_dir, exist_ok=True)
    kappa, _ = provision_kappa(config)

    rows = []
    margin_series = []
    factor_series = []
    threshold = None
    for v in values:
        run_cfg = config
        if parameter == "T":
            import copy

            run_cfg = copy.copy(config)
            run_cfg.T = float(v)
        for i, chk in enumerate(config.checks):
            chk_v = _with_parameter(chk, parameter, float(v))
            seed = derive_seed(config.seed, f"sweep:{v}:{i}:{chk['check']}")
            rep = _run_check(chk_v, run_cfg, kappa, seed)
            rows.append([
                f"{v:.10g}", rep.name, f"{rep.lhs:.10g}", f"{rep.rhs:.10g}",
                f"{rep.margin:.10g}", f"{rep.margin_stderr:.10g}", rep.verdict,
            ])
            if i == 0:
                margin_series.append((float(v), rep.margin))
                factor = rep.constant_used.get("factor")
                if factor is not None:
                    factor_series.append((float(v), factor))
                for key in ("threshold_dist_sq", "threshold_y_sq"):
                    if key in rep.constant_used:
                        threshold = float(np.sqrt(rep.constant_used[key]))

    csv_path = os.path.join(out_dir, "sweep.csv")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["value", "name", "lhs", "rhs", "margin", "stderr",
                        "verdict"])
        writer.writerows(rows)

    series = {"margin": tuple(zip(*margin_series))}
    if factor_series:
        series["factor"] = tuple(zip(*factor_series))
    vlines = []
    if parameter == "displacement" and threshold is not None:
        vlines.append((threshold, "admissibility threshold"))
    svg_path = os.path.join(out_dir, "sweep.svg")
    line_plot(svg_path, series, x_label=parameter, y_label="value",
              title=f"sweep of {config.checks[0]['check']}", vlines=vlines)
    return csv_path, svg_path
