"""
Monte Carlo driver: scenario synthesis, per-trial solves, RMSE / success-rate
aggregation and CSV output.

Every trial draws from its own generator seeded by
``SeedSequence([seed, N, L, sigma_index, trial])``, so results do not depend
on execution order and trials can be farmed out to worker processes.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.spatial.transform import Rotation

from . import almanac as alm
from .availability import assess
from .config import ExperimentConfig
from .errors import Rtk5gError, ScenarioError
from .hybrid import StateVector, make_data, solve
from .observation import (CommonErrors, NoiseConfig, Scenario, double_difference,
                          generate_5g, generate_raw)

CSV_HEADER = ["N", "L", "sigma_m", "trials", "rmse_float_m", "rmse_fixed_m", "success_rate", "status"]
MIN_BS_DISTANCE = 1.0  # m


@dataclass(frozen=True)
class Sky:
    """Visible satellites at the configured epoch, highest elevation first."""

    user: np.ndarray
    prns: tuple
    positions: np.ndarray
    elevations: np.ndarray


def user_position(config: ExperimentConfig) -> np.ndarray:
    if config.user_ecef is not None:
        return np.asarray(config.user_ecef, dtype=float)
    return alm.llh_to_ecef(*config.user_llh)


@lru_cache(maxsize=16)
def _sky(almanac_path, epoch, user, mask_deg) -> Sky:
    text = alm.default_almanac_text() if almanac_path is None else open(almanac_path).read()
    entries = alm.parse_yuma(text)
    prns, pos = alm.propagate_all(entries, epoch)
    user = np.array(user)
    vis = alm.visible_satellites(pos, user, math.radians(mask_deg))
    el = alm.elevations(pos, user)
    return Sky(user, tuple(prns[i] for i in vis), pos[vis], el[vis])


def sky_view(config: ExperimentConfig) -> Sky:
    return _sky(config.almanac_path, float(config.epoch), tuple(user_position(config)), float(config.mask_deg))


def trial_rng(seed: int, N: int, L: int, sigma_index: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, N, L, sigma_index, trial]))


def build_scenario(config: ExperimentConfig, N: int, L: int, rng: np.random.Generator,
                   sigma: Optional[float] = None, sky: Optional[Sky] = None) -> Scenario:
    """Scenario with the N highest satellites and L randomly posed 5G BSs."""
    sky = sky_view(config) if sky is None else sky
    if N > len(sky.prns):
        raise ScenarioError(f"requested N={N} satellites but only {len(sky.prns)} are visible")
    p_u = sky.user
    half = config.bs_box / 2.0
    bs_pos = np.zeros((L, 3))
    for i in range(L):
        while True:
            offset = rng.uniform(-half, half, 3)
            if np.linalg.norm(offset) >= MIN_BS_DISTANCE:
                break
        bs_pos[i] = p_u + offset
    bs_rot = Rotation.random(L, random_state=rng).as_matrix().reshape(L, 3, 3) if L else np.zeros((0, 3, 3))
    sigma = config.sigma_list[0] if sigma is None else sigma
    noise = NoiseConfig(sigma, config.code_ratio * sigma, config.sigma_az, config.sigma_el, config.sigma_tau)
    r = config.ambiguity_range
    common = CommonErrors(
        iono=rng.uniform(1.0, 15.0, N),
        tropo=rng.uniform(2.0, 15.0, N),
        sat_clock=rng.uniform(-5e-4, 5e-4, N),
        user_clock=float(rng.uniform(-1e-3, 1e-3)),
        base_clock=float(rng.uniform(-1e-3, 1e-3)),
    )
    return Scenario(
        p_u=p_u.copy(),
        p_b=p_u + np.asarray(config.baseline, dtype=float),
        bs_positions=bs_pos,
        bs_rotations=bs_rot,
        sat_positions=sky.positions[:N].copy(),
        truth_ambiguities=rng.integers(-r, r + 1, N),
        clock_bias=float(rng.uniform(0.0, config.clock_cycle)),
        clock_cycle=config.clock_cycle,
        noise=noise,
        common_errors=common,
    )


@dataclass
class TrialResult:
    float_error: float
    fixed_error: float
    ambiguity_success: bool
    converged: bool
    iterations: int


def run_trial(config: ExperimentConfig, N: int, L: int, sigma: float, rng, sky=None,
              add_noise: bool = True) -> TrialResult:
    scen = build_scenario(config, N, L, rng, sigma, sky)
    dd = fg = None
    if N >= 2:
        raw_u, raw_b = generate_raw(scen, rng, add_noise)
        dd = double_difference(raw_u, raw_b, 0)
    if L >= 1:
        fg = generate_5g(scen, rng, add_noise)
    data = make_data(dd, fg, scen.bs_positions, scen.bs_rotations, config.epsilon,
                     config.w2_norm, config.clock_cycle, n_sat=N)
    truth = StateVector(scen.p_u, scen.truth_dd_ambiguities(0) if N >= 2 else np.zeros(0),
                        scen.clock_bias if L else None)
    try:
        rep = solve(data, truth, rng, config.method)
    except Rtk5gError:
        return TrialResult(math.inf, math.inf, False, False, 0)
    return TrialResult(
        float(np.linalg.norm(rep.x_float.p_u - scen.p_u)),
        float(np.linalg.norm(rep.x_fixed.p_u - scen.p_u)),
        bool(rep.success) and rep.converged,
        rep.converged,
        rep.float_diag.iterations + rep.fixed_diag.iterations,
    )


@dataclass
class Row:
    N: int
    L: int
    sigma_m: float
    trials: int
    rmse_float_m: float
    rmse_fixed_m: float
    success_rate: float
    status: str
    converged_fraction: float = float("nan")
    se_fixed_m: float = float("nan")
    se_float_m: float = float("nan")


def rmse_with_se(errors):
    """RMSE and its delta-method standard error."""
    e2 = np.asarray(errors, dtype=float) ** 2
    n = len(e2)
    if n == 0:
        return float("nan"), float("nan")
    mse = e2.mean()
    rmse = math.sqrt(mse)
    if n < 2 or rmse == 0.0:
        return rmse, 0.0
    return rmse, float(e2.std(ddof=1) / math.sqrt(n) / (2.0 * rmse))


def aggregate(N, L, sigma, results) -> Row:
    conv = [r for r in results if r.converged]
    rf, sef = rmse_with_se([r.float_error for r in conv])
    rx, sex = rmse_with_se([r.fixed_error for r in conv])
    succ = sum(r.ambiguity_success for r in results) / len(results)
    return Row(N, L, sigma, len(results), rf, rx, succ, "ok", len(conv) / len(results), sex, sef)


def _run_cell(args):
    config, N, L, sigma_index, trial_ids = args
    sigma = config.sigma_list[sigma_index]
    sky = sky_view(config)
    return [run_trial(config, N, L, sigma, trial_rng(config.seed, N, L, sigma_index, t), sky)
            for t in trial_ids]


def run_cell(config: ExperimentConfig, N: int, L: int, sigma_index: int, jobs: int = 1):
    """All trials of one (N, L, sigma) combination, in trial order."""
    ids = list(range(config.trials))
    if jobs <= 1:
        return _run_cell((config, N, L, sigma_index, ids))
    chunks = [ids[i::jobs] for i in range(jobs)]
    with ProcessPoolExecutor(jobs) as ex:
        parts = list(ex.map(_run_cell, [(config, N, L, sigma_index, c) for c in chunks]))
    out = [None] * len(ids)
    for chunk, res in zip(chunks, parts):
        for t, r in zip(chunk, res):
            out[t] = r
    return out


def run_monte_carlo(config: ExperimentConfig, jobs: int = 1, progress=None) -> list[Row]:
    rows = []
    sigmas = sorted(enumerate(config.sigma_list), key=lambda p: p[1])
    for N in sorted(config.N_list):
        for L in sorted(config.L_list):
            for si, sigma in sigmas:
                if not assess(N, L).localizable:
                    rows.append(Row(N, L, sigma, config.trials, float("nan"), float("nan"), 0.0,
                                    "nonlocalizable", 0.0))
                    continue
                results = run_cell(config, N, L, si, jobs)
                row = aggregate(N, L, sigma, results)
                rows.append(row)
                if progress is not None:
                    progress(row)
    return rows


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{v:.6g}"


def emit_csv(rows, sink) -> None:
    """Write the aggregate table (6 significant digits) to a text sink."""
    w = csv.writer(sink, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([_fmt(getattr(r, k)) for k in CSV_HEADER])


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    emit_csv(rows, buf)
    return buf.getvalue()


def parse_csv(text: str) -> list[Row]:
    reader = csv.DictReader(io.StringIO(text))
    out = []
    for rec in reader:
        out.append(Row(int(rec["N"]), int(rec["L"]), float(rec["sigma_m"]), int(rec["trials"]),
                       float(rec["rmse_float_m"]), float(rec["rmse_fixed_m"]),
                       float(rec["success_rate"]), rec["status"]))
    return out
