"""jlab: reproducible experiment runner.

    jlab <sample|dimension|recurrence|covariance|verify|oracle>
         --config PATH [--seed N] [--workers N] [--out DIR]

Artifacts (CSV/JSON) land in --out, then $JLAB_OUT, then ./jlab-out.
Exit codes: 0 all checks pass, 1 check failure, 2 config error,
3 numeric failure.  Identical config + seed give byte-identical artifacts
regardless of --workers; wall-clock timing goes to a separate
timing.json that is excluded from that guarantee.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numba
import numpy as np
import scipy

from . import __version__, circle_oracle, thermo
from .config import ConfigError, ExperimentConfig, load_config
from .empirical_measure import EmpiricalMeasure, RadiusSchedule, local_dimension
from .julia_sampler import inverse_iteration_sample
from .recurrence import (
    compare_rate_dimension,
    recurrence_rate,
    return_time,
    return_time_table,
)
from .roots import RootFindingError


@dataclass
class Check:
    name: str
    ok: bool
    detail: str


def _fmt(x) -> str:
    if isinstance(x, np.floating):
        x = float(x)
    elif isinstance(x, np.integer):
        x = int(x)
    if isinstance(x, float):
        return repr(x)  # shortest round-trip form, stable across runs
    return str(x)


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def _write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=1)
        fh.write("\n")


def _schedule(cfg: ExperimentConfig) -> RadiusSchedule:
    return RadiusSchedule(r0=cfg.schedule.r0, count=cfg.schedule.k_max)


def _build_sample(cfg: ExperimentConfig, seed: int):
    return inverse_iteration_sample(
        cfg.map,
        count=cfg.sampler.count,
        burn_in=cfg.sampler.burn_in,
        seed=seed,
        start=cfg.sampler.start,
    )


def _probe_points(points: np.ndarray, n_probes: int) -> np.ndarray:
    """Deterministic spread of probe indices through the sample."""
    n = len(points)
    idx = (np.arange(n_probes, dtype=np.int64) * n) // n_probes + n // (2 * n_probes)
    return points[np.clip(idx, 0, n - 1)]


def run_sample(cfg: ExperimentConfig, seed: int, workers: int, out: Path) -> tuple[list[Check], dict]:
    sample = _build_sample(cfg, seed)
    _write_csv(
        out / "sample.csv",
        ["re", "im"],
        ((float(z.real), float(z.imag)) for z in sample.points),
    )
    results = {
        "count": int(len(sample.points)),
        "burn_in": cfg.sampler.burn_in,
    }
    checks = [Check("sample_bounded_orbits", True, "validation passed at construction")]
    return checks, results


def run_dimension(cfg: ExperimentConfig, seed: int, workers: int, out: Path) -> tuple[list[Check], dict]:
    n = cfg.thermo.period_n
    lo, hi = cfg.thermo.s_bracket
    logs = thermo.periodic_log_multipliers(cfg.map, n)
    s_grid = np.linspace(lo, hi, 21)
    curve = [(float(s), thermo.pressure_from_log_multipliers(logs, float(s), n)) for s in s_grid]
    _write_csv(out / "pressure_curve.csv", ["s", "P_n"], curve)
    decreasing = all(b < a for (_, a), (_, b) in zip(curve, curve[1:]))

    s_star = thermo.hausdorff_dimension(cfg.map, n, cfg.thermo.tol, s_hi=hi)

    sample = _build_sample(cfg, seed)
    sched = _schedule(cfg)
    mu = EmpiricalMeasure(sample.points, cell_size=sched.r_min)
    probes = _probe_points(sample.points, cfg.thermo.local_dimension_probes)
    rows = []
    slopes = []
    for z in probes:
        est = local_dimension(mu, complex(z), sched)
        rows.append(
            (
                float(z.real), float(z.imag),
                est.d_lower, est.slope, est.d_upper, est.slope_stderr,
            )
        )
        slopes.append(est.slope)
    _write_csv(
        out / "local_dimension.csv",
        ["probe_re", "probe_im", "d_lower", "d_slope", "d_upper", "slope_stderr"],
        rows,
    )
    mean_dim = float(np.mean(slopes))
    consistency = abs(s_star - mean_dim)
    checks = [
        Check("pressure_strictly_decreasing", decreasing, f"grid of {len(curve)} s values"),
        Check(
            "bowen_vs_local_dimension",
            consistency <= cfg.thermo.consistency_tol,
            f"|s* - mean d| = {consistency:.4f} (tol {cfg.thermo.consistency_tol})",
        ),
    ]
    results = {
        "period_n": n,
        "bowen_dimension": s_star,
        "bowen_tol": cfg.thermo.tol,
        "mean_local_dimension": mean_dim,
        "local_dimension_stderr": float(np.std(slopes, ddof=1) / math.sqrt(len(slopes))) if len(slopes) > 1 else 0.0,
    }
    return checks, results


def run_recurrence(cfg: ExperimentConfig, seed: int, workers: int, out: Path) -> tuple[list[Check], dict]:
    sample = _build_sample(cfg, seed)
    sched = _schedule(cfg)
    probes = list(_probe_points(sample.points, cfg.recurrence.probes))
    rows = []
    rates = []
    for z in probes:
        record = return_time_table(cfg.map, complex(z), sched, cfg.recurrence.n_max)
        for r, tau in record.rows:
            rows.append(
                (
                    float(z.real), float(z.imag), r,
                    tau.n if tau.is_finite else "inf",
                    not tau.is_finite,
                )
            )
        est = recurrence_rate(
            cfg.map, complex(z), sched, cfg.recurrence.n_max, statistic=cfg.recurrence.statistic
        )
        rates.append(
            {
                "probe": [float(z.real), float(z.imag)],
                "R_lower": est.R_lower,
                "R_upper": est.R_upper,
                "R_slope": est.slope,
                "R_stderr": est.slope_stderr,
                "truncated": est.truncated,
            }
        )
    _write_csv(out / "recurrence.csv", ["probe_re", "probe_im", "r", "tau", "truncated"], rows)
    _write_json(out / "rates.json", rates)
    checks = [Check("rates_estimated", len(rates) == len(probes), f"{len(rates)} probes")]
    results = {"n_probes": len(probes), "n_max": cfg.recurrence.n_max}
    return checks, results


def run_covariance(cfg: ExperimentConfig, seed: int, workers: int, out: Path) -> tuple[list[Check], dict]:
    obs_name = cfg.covariance.observable
    if obs_name not in thermo.OBSERVABLES:
        raise ConfigError(f"covariance.observable: unknown observable {obs_name!r}")
    f = thermo.OBSERVABLES[obs_name]
    sample = _build_sample(cfg, seed)
    z0 = complex(sample.points[0])
    lo, hi = cfg.covariance.n_range
    entries = thermo.covariance_series(
        cfg.map, z0, f, f, list(range(lo, hi + 1)), cfg.covariance.length
    )
    _write_csv(
        out / "covariance.csv",
        ["n", "cov", "stderr"],
        ((e.n, e.cov, e.stderr) for e in entries),
    )
    floor = 3.0 * float(np.median([e.stderr for e in entries]))
    seq = thermo.DecaySequence(
        theta=np.abs(np.array([e.cov for e in entries])), n_offset=lo
    )
    cls = thermo.decay_fit(seq, noise_floor=floor)
    _write_json(out / "classification.json", cls.to_jsonable())
    checks = []
    if cfg.covariance.expected_class is not None:
        checks.append(
            Check(
                "decay_classification",
                cls.kind == cfg.covariance.expected_class,
                f"classified {cls.kind!r}, expected {cfg.covariance.expected_class!r}",
            )
        )
    results = {
        "observable": obs_name,
        "orbit_length": cfg.covariance.length,
        "noise_floor": floor,
        "classification": cls.to_jsonable(),
    }
    return checks, results


def run_verify(cfg: ExperimentConfig, seed: int, workers: int, out: Path) -> tuple[list[Check], dict]:
    sample = _build_sample(cfg, seed)
    sched = _schedule(cfg)
    mu = EmpiricalMeasure(sample.points, cell_size=sched.r_min)
    probes = list(_probe_points(sample.points, cfg.recurrence.probes))
    probes.extend(complex(p) for p in cfg.recurrence.periodic_probes)
    report = compare_rate_dimension(
        cfg.map,
        mu,
        probes,
        sched,
        cfg.recurrence.n_max,
        tol=cfg.recurrence.tol,
        statistic=cfg.recurrence.statistic,
        workers=workers,
    )
    _write_json(out / "comparison_report.json", report.to_jsonable())
    checks = [
        Check(
            "rate_equals_dimension",
            report.pass_fraction_lower >= cfg.recurrence.pass_fraction_min,
            f"pass fraction {report.pass_fraction_lower:.3f} "
            f">= {cfg.recurrence.pass_fraction_min} on |R_lower - d_lower| <= {cfg.recurrence.tol}",
        )
    ]
    if cfg.recurrence.periodic_probes:
        flagged = sum(
            1
            for row in report.rows[-len(cfg.recurrence.periodic_probes):]
            if row.status == "periodic"
        )
        checks.append(
            Check(
                "periodic_probes_flagged",
                flagged == len(cfg.recurrence.periodic_probes),
                f"{flagged}/{len(cfg.recurrence.periodic_probes)} flagged as measure-zero exceptions",
            )
        )
    results = {
        "pass_fraction_lower": report.pass_fraction_lower,
        "pass_fraction_upper": report.pass_fraction_upper,
        "n_periodic": report.n_periodic,
        "n_errors": report.n_errors,
        "tol": cfg.recurrence.tol,
    }
    return checks, results


def run_oracle(cfg: ExperimentConfig, seed: int, workers: int, out: Path) -> tuple[list[Check], dict]:
    d = cfg.map.degree
    coeffs = cfg.map.numerator.coeffs / cfg.map.denominator.coeffs[0]
    is_power = (
        cfg.map.is_polynomial
        and coeffs[-1] == 1.0
        and not np.any(coeffs[:-1] != 0)
    )
    if not is_power:
        raise ConfigError("oracle: the exact circle oracle only models T(z) = z^d")

    rng = np.random.Generator(np.random.Philox(key=np.array([seed, 0x0AC1E], dtype=np.uint64)))

    # return-time agreement on rational angles, inside the float-orbit
    # validity horizon (~52/log2(d) steps; beyond it the float orbit has
    # diverged from the true one and no metric convention can agree)
    n_trials = 1000
    n_max = 40
    r = 0.08
    hw = Fraction(circle_oracle.chord_to_arc_halfwidth(r)).limit_denominator(10 ** 12)
    agree = 0
    considered = 0
    csv_rows = []
    for _ in range(n_trials):
        q = int(rng.integers(10 ** 6, 10 ** 7))
        p = int(rng.integers(1, q))
        theta = circle_oracle.RationalAngle(p, q)
        exact = circle_oracle.oracle_return_time(theta, d, hw, n_max)
        z = circle_oracle.angle_to_complex(theta)
        euclid = return_time(cfg.map, z, z, r, n_max)
        # ambiguity margin: exclude trials whose exact orbit grazes the arc edge
        ambiguous = False
        cur = theta
        target = theta.as_fraction()
        for _n in range(1, n_max + 1):
            cur = circle_oracle.oracle_step(cur, d)
            gap = abs(float(circle_oracle.circle_distance(cur.as_fraction(), target)) - float(hw))
            if gap < 1e-4:
                ambiguous = True
                break
        csv_rows.append(
            (
                float(target), r,
                euclid.n if euclid.is_finite else "inf",
                exact.n if exact.is_finite else "inf",
                ambiguous,
                True,
            )
        )
        if ambiguous:
            continue
        considered += 1
        agree += (exact.n == euclid.n)
    _write_csv(
        out / "oracle_return_times.csv",
        ["theta", "r", "tau_euclid", "tau_exact", "ambiguous", "exact"],
        csv_rows,
    )
    mismatch = 1.0 - agree / considered if considered else math.nan

    # Haar ball measures against exact arc measures
    sample = _build_sample(cfg, seed)
    sched = _schedule(cfg)
    mu = EmpiricalMeasure(sample.points, cell_size=sched.r_min)
    nn = mu.total
    worst_z = 0.0
    arc_rows = []
    for _ in range(100):
        center = float(rng.random())
        radius = float(10 ** rng.uniform(-3, -0.5))
        z = circle_oracle.angle_to_complex(center)
        exact_measure = circle_oracle.arc_measure_of_chord(radius)
        count = mu.ball_count(z, radius)
        sigma = math.sqrt(nn * exact_measure * (1.0 - exact_measure))
        zscore = abs(count - nn * exact_measure) / sigma
        worst_z = max(worst_z, zscore)
        arc_rows.append((center, radius, count / nn, exact_measure, zscore, True))
    _write_csv(
        out / "oracle_arc_measures.csv",
        ["theta", "r", "ball_measure", "arc_measure", "z_score", "exact"],
        arc_rows,
    )

    # angle uniformity
    angles = np.sort(np.mod(np.angle(sample.points[: 10 ** 5]) / (2 * np.pi), 1.0))
    m = len(angles)
    ks = max(
        float(np.max(np.arange(1, m + 1) / m - angles)),
        float(np.max(angles - np.arange(0, m) / m)),
    )

    checks = [
        Check("oracle_return_time_agreement", mismatch < 0.02, f"mismatch fraction {mismatch:.4f} on {considered} trials"),
        Check("oracle_arc_measure_3sigma", worst_z < 3.0, f"worst |z|-score {worst_z:.2f} over 100 arcs"),
        Check("oracle_angle_uniformity", ks <= 0.01, f"KS statistic {ks:.5f}"),
    ]
    results = {
        "return_time_mismatch": mismatch,
        "trials_considered": considered,
        "worst_arc_zscore": worst_z,
        "ks_statistic": ks,
    }
    return checks, results


_SUBCOMMANDS = {
    "sample": run_sample,
    "dimension": run_dimension,
    "recurrence": run_recurrence,
    "covariance": run_covariance,
    "verify": run_verify,
    "oracle": run_oracle,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="jlab", description=__doc__.split("\n")[0])
    parser.add_argument("subcommand", choices=sorted(_SUBCOMMANDS))
    parser.add_argument("--config", required=True, help="experiment config (JSON)")
    parser.add_argument("--seed", type=int, default=None, help="override sampler seed")
    parser.add_argument("--workers", type=int, default=1, help="worker threads (never changes results)")
    parser.add_argument("--out", default=None, help="output directory (default $JLAB_OUT or ./jlab-out)")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    out_dir = args.out or cfg.output or os.environ.get("JLAB_OUT") or "jlab-out"
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seed = args.seed if args.seed is not None else cfg.sampler.seed

    t0 = time.time()
    try:
        checks, results = _SUBCOMMANDS[args.subcommand](cfg, seed, max(1, args.workers), out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RootFindingError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    wall = time.time() - t0

    report = {
        "subcommand": args.subcommand,
        "seed": seed,
        "versions": {
            "julialab": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "numba": numba.__version__,
        },
        "results": results,
        "checks": [{"name": c.name, "pass": c.ok, "detail": c.detail} for c in checks],
    }
    _write_json(out / "report.json", report)
    # wall clock is run-dependent diagnostics, kept out of the deterministic report
    _write_json(out / "timing.json", {"wall_clock_s": wall, "workers": args.workers})

    for c in checks:
        print(f"{'PASS' if c.ok else 'FAIL'} {c.name}: {c.detail}")
    print(f"artifacts in {out}")
    return 0 if all(c.ok for c in checks) else 1


if __name__ == "__main__":
    sys.exit(main())
