"""Monte Carlo campaigns, distributional limit checks, the q=1 regression and
the deterministic self-test.

Reports are plain dicts with a fixed key order; ``report_json`` and
``report_csv`` serialize them byte-for-byte reproducibly.  Wall-clock time is
added only on request, since it would break that property.
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import stats
from scipy.linalg import toeplitz

from . import chaos_oracle, gaussian, hermite, quadvar, volterra
from .params import ModelParams, as_grid, derive_exponents, kernel_power_product

SPECTRAL_TERMS = 1 << 16  # Kronecker terms kept by the d >= 2 reference
STREAM_REFERENCE = 1 << 20


@dataclass(frozen=True)
class ExperimentConfig:
    params: ModelParams
    N_list: tuple[tuple[int, ...], ...]
    oversample: int = 8
    replicas: int = 2000
    root_seed: int = 0
    method: str = "rank"
    output_path: str | None = None
    reference_factor: int = 8
    workers: int = 1

    def __post_init__(self):
        d = self.params.d
        object.__setattr__(self, "N_list", tuple(as_grid(N, d) for N in self.N_list))
        if not self.N_list:
            raise ValueError("N_list is empty")
        if self.replicas < 1:
            raise ValueError(f"replicas must be >= 1, got {self.replicas}")
        if self.oversample < 2:
            raise ValueError(f"oversample m must be >= 2, got {self.oversample}")
        if self.method not in ("rank", "kernel"):
            raise ValueError(f"method must be 'rank' or 'kernel', got {self.method!r}")
        for N in self.N_list:
            n = tuple(self.oversample * Nj for Nj in N)
            try:
                gaussian.GridSpec(n)
            except MemoryError as exc:
                raise ValueError(f"infeasible: simulation grid m*N = {n} exceeds the memory cap") from exc
            if self.method == "kernel":
                if self.params.q != 2 or d != 1:
                    raise ValueError("infeasible: kernel method needs q=2, d=1")
                if n[0] > hermite.DIRECT_KERNEL_MAX_N:
                    raise ValueError(f"infeasible: kernel method needs m*N <= {hermite.DIRECT_KERNEL_MAX_N}, got {n[0]}")

    def echo(self) -> dict:
        return {**self.params.as_dict(), "N_list": [list(N) for N in self.N_list], "oversample": self.oversample,
                "replicas": self.replicas, "root_seed": self.root_seed, "method": self.method,
                "reference_factor": self.reference_factor}


def replica_seed(root_seed: int, stream: int, r: int) -> int:
    return gaussian.mix_seed(gaussian.mix_seed(root_seed, stream), r)


# --- statistics ---

def ks_distance(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov statistic ``sup |F_a - F_b|``."""
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise ValueError("ks_distance needs two non-empty samples")
    pts = np.concatenate([a, b])
    Fa = np.searchsorted(a, pts, side="right") / a.size
    Fb = np.searchsorted(b, pts, side="right") / b.size
    return float(np.max(np.abs(Fa - Fb)))


def ks_normal_distance(x) -> float:
    """One-sample KS distance to the normal law with fitted mean and variance."""
    x = np.asarray(x, dtype=float)
    return float(stats.kstest(x, "norm", args=(x.mean(), x.std(ddof=1))).statistic)


def moment_summary(x, prefix: str = "") -> dict:
    """Mean, variance and skewness, each with a standard error from the replica spread."""
    x = np.asarray(x, dtype=float)
    R = x.size
    mean = float(np.mean(x))
    c = x - mean
    m2 = float(np.mean(c**2))
    m4 = float(np.mean(c**4))
    var = m2 * R / (R - 1) if R > 1 else 0.0
    skew = float(stats.skew(x)) if R > 2 and m2 > 0 else 0.0
    se_skew = math.sqrt(6.0 * R * (R - 1) / ((R - 2) * (R + 1) * (R + 3))) if R > 2 else math.inf
    return {
        f"{prefix}mean": mean,
        f"{prefix}mean_se": math.sqrt(var / R),
        f"{prefix}var": var,
        f"{prefix}var_se": math.sqrt(max(m4 - m2 * m2, 0.0) / R),
        f"{prefix}skew": skew,
        f"{prefix}skew_se": se_skew,
    }


# --- simulation pipelines ---

def _simulate(params: ModelParams, n: tuple[int, ...], seed: int, method: str) -> hermite.SampleField:
    if method == "kernel":
        return hermite.simulate_direct_kernel(params, n[0], seed)
    return hermite.simulate_hermite_rank(params, n, seed)


def _replica_qv(params: ModelParams, N: tuple[int, ...], m: int, method: str, seed: int) -> float:
    field = _simulate(params, tuple(m * Nj for Nj in N), seed, method)
    return quadratic_variation_of(field, N)


def quadratic_variation_of(field: hermite.SampleField, N) -> float:
    return quadvar.quadratic_variation(hermite.box_increments(field, N), field.params.H)


def sample_statistics(params: ModelParams, N, m: int, replicas: int, root_seed: int, stream: int = 0,
                      method: str = "rank", workers: int = 1) -> np.ndarray:
    """``V_N`` of independent replicas simulated at resolution ``m * N``."""
    N = as_grid(N, params.d)
    seeds = [replica_seed(root_seed, stream, r) for r in range(replicas)]
    fn = _QVTask(params, N, m, method)
    return np.array(gaussian.replica_map(fn, seeds, workers))


@dataclass(frozen=True)
class _QVTask:
    # picklable per-replica callable for worker processes
    params: ModelParams
    N: tuple[int, ...]
    m: int
    method: str

    def __call__(self, seed: int) -> float:
        return _replica_qv(self.params, self.N, self.m, self.method, seed)


def unit_point_samples(params: ModelParams, n, replicas: int, root_seed: int, stream: int = 0) -> np.ndarray:
    """``Z(1)`` of Hermite-rank fields at resolution ``n`` (sum of normalized cells).

    Plain pairwise summation: deterministic for a fixed layout, and exact
    rounding buys nothing for a Monte Carlo mean.
    """
    n = as_grid(n, params.d)
    gaussian.GridSpec(n)
    return np.array([np.sum(hermite.hermite_rank_cells(params, n, replica_seed(root_seed, stream, r)))
                     for r in range(replicas)])


# --- Rosenblatt reference ---

@lru_cache(maxsize=8)
def _normalized_spectrum(h: float, n: int) -> np.ndarray:
    # eigenvalues of the order-2 matched substrate covariance, unit l2 norm
    rho = gaussian.axis_autocovariance("matched", h, 2, n)
    lam = np.linalg.eigvalsh(toeplitz(rho))[::-1]
    return lam / math.sqrt(math.fsum(lam * lam))


def rosenblatt_reference(H_rosenblatt, n, replicas: int, root_seed: int, stream: int = STREAM_REFERENCE,
                         method: str = "auto") -> np.ndarray:
    """Samples of the standard Rosenblatt sheet at the point 1.

    ``method="field"`` sums an order-2 Hermite-rank field at resolution ``n``.
    ``method="spectral"`` draws the same sum from its eigen-expansion
    ``sum_a lam_a (xi_a^2 - 1) / sqrt(2)`` over products of per-axis
    eigenvalues: products of the leading ``K`` eigenvalues of each axis are kept
    (``K**d <= SPECTRAL_TERMS``) and the rest replaced by a Gaussian of equal
    variance.  ``"auto"`` uses the field for
    d = 1 and the expansion otherwise.
    """
    params = derive_exponents(2, H_rosenblatt)
    n = as_grid(n, params.d)
    if method == "auto":
        method = "field" if params.d == 1 else "spectral"
    if method == "field":
        return unit_point_samples(params, n, replicas, root_seed, stream)
    if method != "spectral":
        raise ValueError(f"unknown reference method {method!r}")
    K = max(1, int(math.floor(SPECTRAL_TERMS ** (1.0 / params.d) + 1e-9)))
    spectra = [_normalized_spectrum(h, nj)[:K] for h, nj in zip(params.H, n)]
    weights = spectra[0]
    kept = math.fsum(spectra[0] ** 2)
    for s in spectra[1:]:
        weights = np.multiply.outer(weights, s)
        kept *= math.fsum(s**2)
    weights = weights.ravel()
    tail_sd = math.sqrt(max(1.0 - kept, 0.0))
    out = np.empty(replicas)
    for r in range(replicas):
        rng = gaussian.make_rng(replica_seed(root_seed, stream, r))
        xi = rng.standard_normal(weights.size)
        out[r] = float(weights @ (xi * xi - 1.0)) / math.sqrt(2.0) + tail_sd * rng.standard_normal()
    return out


# --- experiments ---

def _finish(report: dict, config: ExperimentConfig | None, started: float, timing: bool) -> dict:
    report["generator"] = gaussian.GENERATOR_ID
    if timing:
        report["wall_clock_seconds"] = time.perf_counter() - started
    if config is not None and config.output_path:
        write_report(report, config.output_path)
    return report


def run_limit_experiment(config: ExperimentConfig, timing: bool = False,
                         reference_method: str = "auto") -> dict:
    """``T_N`` moments per ``N`` and KS distances to a Rosenblatt reference.

    The reference is simulated at ``reference_factor`` times the finest
    simulation resolution, with index ``H'' = 2H' - 1``.
    """
    started = time.perf_counter()
    params = config.params
    if params.q < 2:
        raise ValueError("limit experiment needs q >= 2; use run_q1_regression for q = 1")
    finest = [max(N[j] for N in config.N_list) * config.oversample for j in range(params.d)]
    n_ref = tuple(config.reference_factor * nj for nj in finest)
    ref = rosenblatt_reference(params.H_rosenblatt, n_ref, config.replicas, config.root_seed,
                               method=reference_method)
    records = []
    for k, N in enumerate(config.N_list):
        V = sample_statistics(params, N, config.oversample, config.replicas, config.root_seed, stream=k,
                              method=config.method, workers=config.workers)
        T = quadvar.statistic_multiplier(N, params) * V
        rec = {f"N{j + 1}": Nj for j, Nj in enumerate(N)}
        rec.update(moment_summary(V, "V_"))
        rec.update(moment_summary(T, "T_"))
        rec["ks_reference"] = ks_distance(T, ref)
        records.append(rec)
    report = {"experiment": "limit", "config": config.echo(), "H_rosenblatt": list(params.H_rosenblatt),
              "reference_resolution": list(n_ref), "reference": moment_summary(ref), "records": records}
    return _finish(report, config, started, timing)


def q1_statistic(V: np.ndarray, N: int, H: float) -> tuple[np.ndarray, str]:
    """Scaled centered sum ``sum_i [N^{2H} dZ_i^2 - 1] = N * V`` for q = 1, d = 1."""
    S = N * np.asarray(V)
    if H < 0.75:
        return S / math.sqrt(N), "N^-1/2"
    if H > 0.75:
        return S * N ** (1.0 - 2.0 * H), "N^(1-2H)"
    return S / math.sqrt(N * math.log(N)), "(N log N)^-1/2"


def run_q1_regression(config: ExperimentConfig, timing: bool = False) -> dict:
    """Regression of the classical fractional-Brownian quadratic variation regimes."""
    started = time.perf_counter()
    params = config.params
    if params.q != 1 or params.d != 1:
        raise ValueError("q1 regression needs q = 1 and d = 1")
    H = params.H[0]
    records = []
    for k, N in enumerate(config.N_list):
        V = sample_statistics(params, N, config.oversample, config.replicas, config.root_seed, stream=k,
                              method=config.method, workers=config.workers)
        S, scaling = q1_statistic(V, N[0], H)
        rec = {"N1": N[0], "scaling": scaling}
        rec.update(moment_summary(S, "S_"))
        rec["ks_normal"] = ks_normal_distance(S)
        if H < 0.75:
            rec["regime"], rec["gate"], rec["passed"] = "gaussian", "ks_normal <= 0.05", rec["ks_normal"] <= 0.05
        elif H > 0.75:
            rec["regime"], rec["gate"], rec["passed"] = "rosenblatt", "|skew| >= 0.3", abs(rec["S_skew"]) >= 0.3
        else:
            rec["regime"], rec["gate"], rec["passed"] = "boundary", "none", None
        records.append(rec)
    report = {"experiment": "q1_regression", "config": config.echo(), "records": records}
    return _finish(report, config, started, timing)


# --- self-test ---

def _gate(name: str, value: float, threshold: float, ok: bool) -> dict:
    return {"gate": name, "value": float(value), "threshold": float(threshold), "passed": bool(ok)}


def selftest(seed: int = 0) -> dict:
    """Fast deterministic gates over every module.

    Random inputs derive from ``seed``, so two runs with the same seed give
    identical reports.
    """
    rng = gaussian.make_rng(seed)
    gates = []

    worst = 0.0
    for _ in range(20):
        h = rng.uniform(0.55, 0.97)
        u, v = rng.uniform(0.01, 1.0, size=2)
        if abs(u - v) < 1e-3:
            continue
        val = volterra.kernel_inner_product(u, v, h)
        worst = max(worst, abs(val / volterra.covariance_density(u, v, h) - 1.0))
    gates.append(_gate("kernel_identity_rel_err", worst, 1e-4, worst <= 1e-4))

    worst = 0.0
    for _ in range(50):
        q = int(rng.integers(2, 6))
        d = int(rng.integers(1, 4))
        H = rng.uniform(0.51, 0.99, size=d)
        p = derive_exponents(q, H)
        alt = 2.0 * p.b_qH**4 * kernel_power_product(p, 2 * q) * chaos_oracle.limit_constant_f3(p)
        worst = max(worst, abs(alt / p.c1_H - 1.0))
    gates.append(_gate("c1_f3_identity_rel_err", worst, 1e-12, worst <= 1e-12))

    worst = 0.0
    for N in (2, 5, 16):
        h = 0.85
        a, b = 2.0 * h - 2.0, 2.0 * h - 2.0
        fast = chaos_oracle.displacement_sum(chaos_oracle.displacement_table(a, b, N).values, N)
        slow = chaos_oracle.brute_force_displacement_sum(a, b, N)
        worst = max(worst, abs(fast - slow) / abs(slow))
    gates.append(_gate("displacement_reduction_rel_err", worst, 1e-12, worst <= 1e-12))

    p = derive_exponents(2, 0.7)
    ratio = chaos_oracle.normalized_ratio(64, p)
    gates.append(_gate("normalized_ratio_N64", ratio, 0.85, 0.85 <= ratio <= 1.05))

    z = unit_point_samples(p, 1024, 400, seed, stream=1)
    dev = abs(float(np.mean(z * z)) - 1.0) / (float(np.std(z * z, ddof=1)) / math.sqrt(z.size))
    gates.append(_gate("unit_variance_z_score", dev, 4.0, dev <= 4.0))

    a = gaussian.sample_sheet_increments(gaussian.GridSpec((16, 16)), (0.7, 0.6), seed).values
    b = gaussian.sample_sheet_increments(gaussian.GridSpec((16, 16)), (0.7, 0.6), seed).values
    gates.append(_gate("determinism_max_abs_diff", float(np.max(np.abs(a - b))), 0.0, np.array_equal(a, b)))

    return {"experiment": "selftest", "seed": int(seed), "generator": gaussian.GENERATOR_ID,
            "passed": all(g["passed"] for g in gates), "gates": gates}


# --- serialization ---

def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, allow_nan=True) + "\n"


def _rows(report: dict) -> list[dict]:
    if "records" in report:
        return report["records"]
    if "gates" in report:
        return report["gates"]
    if "rows" in report:
        return report["rows"]
    return [report]


def rows_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    if rows:
        keys = list(rows[0])
        for row in rows[1:]:
            keys += [k for k in row if k not in keys]
        w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: _fmt(row.get(k, "")) for k in keys})
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (list, tuple)):
        return " ".join(str(x) for x in v)
    return v


def report_csv(report: dict) -> str:
    return rows_csv(_rows(report))


def write_report(report: dict, path, fmt: str | None = None) -> None:
    from pathlib import Path

    path = Path(path)
    fmt = fmt or ("csv" if path.suffix == ".csv" else "json")
    text = report_csv(report) if fmt == "csv" else report_json(report)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
