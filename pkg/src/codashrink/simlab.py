"""Random generation, Monte Carlo oracles and the sparsity/sample-size benchmark.

Randomness
----------
Every stream is a ``numpy.random.Generator`` over the counter-based
``Philox`` bit generator, keyed by ``SeedSequence([seed, tag, *indices])``.
Tag 0 draws scenario truths, tag 1 draws replicate samples, so each
replicate's counts depend only on ``(seed, scenario, size, replicate)`` and
not on execution order or thread count.  Byte-identical output additionally
assumes the same numpy release (its multinomial and gamma samplers are part
of the stream definition); this package was pinned against numpy 2.2.
"""
from __future__ import annotations

import csv
import io
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Iterable, TextIO

import numpy as np
from numpy.typing import ArrayLike

from .errors import DegenerateInput, InvalidParameter, OracleStarved
from .infogeo import as_dirichlet
from .shrinkage import exp_shrink, shrink, sq_error_loss
from .simplex import _interior, as_composition, clr

__all__ = [
    "ESTIMATORS",
    "SimScenario",
    "SimConfig",
    "SimRecord",
    "McMoments",
    "QuartileSummary",
    "stream",
    "resolve_threads",
    "sample_dirichlet",
    "sample_multinomial",
    "sample_poisson_vector",
    "mc_clr_moments",
    "scenario_truth",
    "run_benchmark",
    "summarize_quartiles",
    "write_records_csv",
    "records_to_csv",
    "read_records_csv",
]

ESTIMATORS = ("empirical", "shrinkage", "exp_shrinkage")
CSV_HEADER = ("scenario", "n", "replicate", "estimator", "mse", "weight")
THREADS_ENV = "CODASHRINK_THREADS"

_TRUTH_TAG = 0
_REPLICATE_TAG = 1


@dataclass(frozen=True)
class SimScenario:
    label: str
    dim: int
    support_size: int
    dirichlet_alpha0: float

    def __post_init__(self):
        if not self.label:
            raise InvalidParameter("label: must be non-empty")
        if int(self.dim) < 2:
            raise InvalidParameter("dim: must be at least 2")
        if not 2 <= int(self.support_size) <= int(self.dim):
            raise InvalidParameter("support_size: must satisfy 2 <= support_size <= dim")
        if not (math.isfinite(self.dirichlet_alpha0) and self.dirichlet_alpha0 > 0):
            raise InvalidParameter("dirichlet_alpha0: must be positive")


DEFAULT_SCENARIOS = (
    SimScenario("A", 100, 100, 1.0),
    SimScenario("B", 100, 50, 0.5),
    SimScenario("C", 100, 20, 0.5),
)


@dataclass(frozen=True)
class SimConfig:
    scenarios: tuple[SimScenario, ...] = DEFAULT_SCENARIOS
    sample_sizes: tuple[int, ...] = (20, 100, 500)
    replicates: int = 500
    seed: int = 0

    def __post_init__(self):
        if not self.scenarios:
            raise InvalidParameter("scenarios: at least one scenario is required")
        labels = [s.label for s in self.scenarios]
        if len(set(labels)) != len(labels):
            raise InvalidParameter("scenarios: labels must be unique")
        if not self.sample_sizes or any(int(n) < 2 for n in self.sample_sizes):
            raise InvalidParameter("sample_sizes: every size must be at least 2")
        if int(self.replicates) < 1:
            raise InvalidParameter("replicates: must be at least 1")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidParameter("seed: must be an unsigned 64-bit integer")

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        """Build a config from a JSON-style mapping; fields mirror the dataclass."""
        known = {"scenarios", "sample_sizes", "replicates", "seed"}
        extra = set(data) - known
        if extra:
            raise InvalidParameter(f"{sorted(extra)[0]}: unknown field")
        kwargs = {}
        if "scenarios" in data:
            try:
                kwargs["scenarios"] = tuple(
                    SimScenario(
                        label=str(s["label"]),
                        dim=int(s["dim"]),
                        support_size=int(s["support_size"]),
                        dirichlet_alpha0=float(s["dirichlet_alpha0"]),
                    )
                    for s in data["scenarios"]
                )
            except (KeyError, TypeError) as exc:
                raise InvalidParameter(f"scenarios: malformed entry ({exc})") from None
        for key, conv in (("replicates", int), ("seed", int)):
            if key in data:
                try:
                    kwargs[key] = conv(data[key])
                except (TypeError, ValueError):
                    raise InvalidParameter(f"{key}: expected an integer") from None
        if "sample_sizes" in data:
            try:
                kwargs["sample_sizes"] = tuple(int(n) for n in data["sample_sizes"])
            except (TypeError, ValueError):
                raise InvalidParameter("sample_sizes: expected a list of integers") from None
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return {
            "scenarios": [asdict(s) for s in self.scenarios],
            "sample_sizes": list(self.sample_sizes),
            "replicates": self.replicates,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class SimRecord:
    scenario: str
    n: int
    replicate: int
    estimator: str
    mse: float
    weight: float


@dataclass(frozen=True)
class McMoments:
    mean: np.ndarray
    variance: np.ndarray
    std_error: np.ndarray
    replicates_used: int
    rejected_zero_draws: int


@dataclass(frozen=True)
class QuartileSummary:
    scenario: str
    n: int
    estimator: str
    count: int
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float


def stream(seed: int, *indices: int) -> np.random.Generator:
    """Independent Philox generator keyed by a seed and integer indices."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, indices)])))


def resolve_threads(threads: int | None = None) -> int:
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        if env:
            try:
                threads = int(env)
            except ValueError:
                raise InvalidParameter(f"{THREADS_ENV} must be an integer, got {env!r}") from None
        else:
            threads = os.cpu_count() or 1
    return max(1, int(threads))


def sample_dirichlet(alpha: ArrayLike, rng: np.random.Generator) -> np.ndarray:
    """Draw from Dirichlet(alpha) by closing independent gamma variates.

    Gammas are handled on the log scale (with the ``G(a+1) U**(1/a)`` boost for
    ``a < 1``) so that small concentrations do not underflow to exact zeros.
    """
    a = as_dirichlet(alpha)
    small = a < 1.0
    log_g = np.log(rng.standard_gamma(np.where(small, a + 1.0, a)))
    if np.any(small):
        u = rng.random(int(small.sum()))
        log_g[small] += np.log(u) / a[small]
    log_g -= log_g.max()
    w = np.exp(log_g)
    q = w / w.sum()
    if np.any(q == 0):
        raise DegenerateInput("concentration too small for an interior draw in double precision")
    return q


def sample_multinomial(q: ArrayLike, n_total: int, rng: np.random.Generator) -> np.ndarray:
    q = as_composition(q)
    n_total = int(n_total)
    if n_total < 1:
        raise DegenerateInput("n_total must be at least 1")
    return rng.multinomial(n_total, q).astype(np.int64)


def sample_poisson_vector(lam: ArrayLike, rng: np.random.Generator) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    if lam.ndim != 1 or not np.all(np.isfinite(lam)) or np.any(lam <= 0):
        raise InvalidParameter("rates must be a vector of positive numbers")
    return rng.poisson(lam).astype(np.int64)


def mc_clr_moments(
    q: ArrayLike,
    n_total: int,
    replicates: int,
    rng: np.random.Generator,
    *,
    batch_size: int = 50_000,
) -> McMoments:
    """Monte Carlo mean and variance of ``clr(q_hat)`` under multinomial sampling.

    Draws that contain a zero count are discarded (clr is undefined there) and
    tallied, so the conditioning this introduces stays visible.

    Raises
    ------
    OracleStarved
        If fewer than two draws survive.
    """
    q = _interior(q)
    n_total, replicates = int(n_total), int(replicates)
    if n_total < 1 or replicates < 1:
        raise InvalidParameter("n_total and replicates must be positive")
    D = q.shape[0]
    count, mean, m2 = 0, np.zeros(D), np.zeros(D)
    rejected = 0
    remaining = replicates
    while remaining:
        size = min(batch_size, remaining)
        remaining -= size
        draws = rng.multinomial(n_total, q, size=size)
        keep = np.all(draws > 0, axis=1)
        rejected += int(size - keep.sum())
        if not keep.any():
            continue
        c = clr(draws[keep].astype(float))
        m_b = c.shape[0]
        mean_b = c.mean(axis=0)
        m2_b = np.sum((c - mean_b) ** 2, axis=0)
        # Chan et al. pairwise combination
        delta = mean_b - mean
        tot = count + m_b
        mean = mean + delta * (m_b / tot)
        m2 = m2 + m2_b + delta**2 * (count * m_b / tot)
        count = tot
    if count < 2:
        raise OracleStarved(
            f"only {count} of {replicates} draws were free of zeros; increase n_total"
        )
    var = m2 / (count - 1)
    return McMoments(mean, var, np.sqrt(var / count), count, rejected)


def scenario_truth(scenario: SimScenario, seed: int, index: int) -> np.ndarray:
    """The fixed true composition of a scenario: Dirichlet on the first `support_size` parts."""
    rng = stream(seed, _TRUTH_TAG, index)
    q = np.zeros(scenario.dim)
    q[: scenario.support_size] = sample_dirichlet(
        np.full(scenario.support_size, scenario.dirichlet_alpha0), rng
    )
    return q


def _run_cell(args) -> list[SimRecord]:
    seed, s_idx, k_idx, label, n, replicates, truth = args
    out = []
    for r in range(replicates):
        rng = stream(seed, _REPLICATE_TAG, s_idx, k_idx, r)
        counts = sample_multinomial(truth, n, rng)
        emp = counts / counts.sum()
        sh = shrink(counts)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            es = exp_shrink(counts)
        out.append(SimRecord(label, n, r, "empirical", sq_error_loss(emp, truth), math.nan))
        out.append(SimRecord(label, n, r, "shrinkage", sq_error_loss(sh.estimate, truth), sh.weight))
        out.append(SimRecord(label, n, r, "exp_shrinkage", sq_error_loss(es.estimate, truth), es.weight))
    return out


def run_benchmark(cfg: SimConfig | None = None, *, threads: int | None = None) -> list[SimRecord]:
    """Score the three estimators on repeated multinomial samples of fixed truths.

    For each scenario one truth is drawn; then for every sample size and
    replicate a count vector is sampled and the empirical, mixture-shrinkage
    (optimal weight, uniform target) and exponential-shrinkage (optimal power,
    uniform target on the observed parts) estimates are scored by summed
    squared error against the truth.  Records come back ordered by
    (scenario, size, replicate, estimator) whatever the thread count.
    """
    cfg = cfg or SimConfig()
    truths = [scenario_truth(s, cfg.seed, i) for i, s in enumerate(cfg.scenarios)]
    tasks = [
        (cfg.seed, s_idx, k_idx, s.label, int(n), int(cfg.replicates), truths[s_idx])
        for s_idx, s in enumerate(cfg.scenarios)
        for k_idx, n in enumerate(cfg.sample_sizes)
    ]
    n_threads = min(resolve_threads(threads), len(tasks))
    if n_threads == 1:
        chunks = [_run_cell(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            chunks = list(pool.map(_run_cell, tasks))
    return [rec for chunk in chunks for rec in chunk]


def summarize_quartiles(records: Iterable[SimRecord]) -> list[QuartileSummary]:
    """Five-number summary of MSE per (scenario, n, estimator).

    Quartiles use linear interpolation between order statistics, so an even
    number of records has the midpoint of the middle two as its median.
    """
    groups: dict[tuple[str, int, str], list[float]] = {}
    for rec in records:
        groups.setdefault((rec.scenario, rec.n, rec.estimator), []).append(rec.mse)
    if not groups:
        raise DegenerateInput("no records to summarize")
    out = []
    for (scenario, n, est), values in groups.items():
        v = np.asarray(values)
        q0, q1, q2, q3, q4 = np.quantile(v, [0.0, 0.25, 0.5, 0.75, 1.0])
        out.append(QuartileSummary(scenario, n, est, v.size, q0, q1, q2, q3, q4))
    return out


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_records_csv(records: Iterable[SimRecord], fh: TextIO) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in records:
        writer.writerow([r.scenario, r.n, r.replicate, r.estimator, _fmt(r.mse), _fmt(r.weight)])


def records_to_csv(records: Iterable[SimRecord]) -> str:
    buf = io.StringIO()
    write_records_csv(records, buf)
    return buf.getvalue()


def read_records_csv(fh: TextIO) -> list[SimRecord]:
    reader = csv.reader(fh)
    header = next(reader)
    if tuple(header) != CSV_HEADER:
        raise InvalidParameter(f"unexpected header {header}")
    return [
        SimRecord(row[0], int(row[1]), int(row[2]), row[3], float(row[4]), float(row[5]))
        for row in reader
    ]
