"""Data generator and Monte Carlo harness for relative bias and coverage."""

from __future__ import annotations

import csv
import io
import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import optimize
from scipy.special import expit, ndtr

from .mediation import (MediationParams, mediator_residual_variance, outcome_residual_variance)
from .netcore import ActorData, AdjacencyMatrix
from .sampler import ChainConfig, NumericalError, run_chain

log = logging.getLogger(__name__)

PATH_LEVELS = {0.0: 0.0, 0.0196: 0.14, 0.1521: 0.39, 0.3481: 0.59}
GRID_DIMS = (2, 3)
GRID_SIZES = (50, 100, 150, 200, 250, 300)
GRID_CPRIME = (0.0, 0.14)
TARGETS = ("med", "direct", "total")
CLIP = 20.0


def path_coefficient(med_level: float) -> float:
    """Undivided per-dimension path value for a population mediation effect."""
    for med, coef in PATH_LEVELS.items():
        if math.isclose(med, med_level, abs_tol=1e-9):
            return coef
    if med_level < 0:
        raise ValueError("mediation level must be nonnegative")
    return math.sqrt(med_level)


@dataclass(frozen=True)
class SimCondition:
    dim: int
    n: int
    med_level: float
    c_prime: float
    n_reps: int = 50
    base_seed: int = 0

    def __post_init__(self):
        if self.dim < 1 or self.n <= self.dim + 2 or self.n_reps < 1:
            raise ValueError(f"invalid condition {self}")
        self.truth()  # feasibility check

    def paths(self) -> np.ndarray:
        return np.full(self.dim, path_coefficient(self.med_level) / math.sqrt(self.dim))

    def truth(self) -> MediationParams:
        a = self.paths()
        b = a.copy()
        s1 = np.array([mediator_residual_variance(v) for v in a])
        s2 = outcome_residual_variance(a, b, self.c_prime)
        return MediationParams(np.zeros(self.dim), 0.0, a, b, self.c_prime, 0.0, s1, s2)

    def true_effects(self) -> dict:
        e = self.truth().effects()
        return {"med": e.med, "direct": e.direct, "total": e.total}

    def key(self) -> dict:
        return {"D": self.dim, "n": self.n, "med_true": self.med_level, "c_prime": self.c_prime}


def full_grid(n_reps: int = 500, base_seed: int = 0) -> list[SimCondition]:
    """All 2 x 6 x 4 x 2 conditions of the full design."""
    return [SimCondition(d, n, med, c, n_reps, base_seed)
            for d, n, med, c in itertools.product(GRID_DIMS, GRID_SIZES, PATH_LEVELS, GRID_CPRIME)]


def _sample_network(z: np.ndarray, alpha: float, rng) -> AdjacencyMatrix:
    n = z.shape[0]
    diff = z[:, None, :] - z[None, :, :]
    p = expit(alpha - np.sqrt((diff ** 2).sum(-1)))
    iu = np.triu_indices(n, 1)
    m = np.zeros((n, n), dtype=np.int8)
    m[iu] = rng.random(len(iu[0])) < p[iu]
    return AdjacencyMatrix(m + m.T)


def generate_dataset(cond: SimCondition, seed) -> tuple[AdjacencyMatrix, ActorData, MediationParams]:
    """Draw X ~ N(0,1), positions, network and a continuous outcome from the model."""
    rng = np.random.default_rng(seed)
    truth = cond.truth()
    x = rng.standard_normal(cond.n)
    z = truth.i1 + np.outer(x, truth.a) + rng.standard_normal((cond.n, cond.dim)) * np.sqrt(truth.sigma1_sq)
    net = _sample_network(z, truth.alpha, rng)
    y = truth.i2 + z @ truth.b + truth.c_prime * x + rng.standard_normal(cond.n) * math.sqrt(truth.sigma2_sq)
    return net, ActorData(x, y), truth


def generate_positions(cond: SimCondition, seed) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    truth = cond.truth()
    x = rng.standard_normal(cond.n)
    z = np.outer(x, truth.a) + rng.standard_normal((cond.n, cond.dim)) * np.sqrt(truth.sigma1_sq)
    return x, z


def generate_empirical_replica(seed, n: int = 162, dim: int = 5, target_density: float = 0.162,
                               a_d: float = 0.3, b_d: float = -0.3, c_prime: float = -0.5):
    """Synthetic stand-in for a binary-outcome study network.

    Unit-variance positions as in :func:`generate_dataset`; alpha is solved so
    the expected tie density hits ``target_density``; Y is binary through the
    probit link. Returns ``(net, data, truth)``.
    """
    rng = np.random.default_rng(seed)
    a = np.full(dim, a_d)
    b = np.full(dim, b_d)
    s1 = np.array([mediator_residual_variance(v) for v in a])
    x = rng.standard_normal(n)
    z = np.outer(x, a) + rng.standard_normal((n, dim)) * np.sqrt(s1)
    diff = z[:, None, :] - z[None, :, :]
    dist = np.sqrt((diff ** 2).sum(-1))[np.triu_indices(n, 1)]
    alpha = optimize.brentq(lambda al: expit(al - dist).mean() - target_density, -50.0, 50.0)
    net = _sample_network(z, alpha, rng)
    y = (rng.random(n) < ndtr(z @ b + c_prime * x)).astype(float)
    truth = MediationParams(np.zeros(dim), 0.0, a, b, c_prime, alpha, s1, 1.0)
    return net, ActorData(x, y), truth


# ---------------------------------------------------------------- evaluation

def relative_bias(mean_estimate: float, truth: float) -> float:
    """Relative bias in percent; absolute bias x 100 when the truth is zero."""
    if truth != 0:
        return (mean_estimate - truth) / abs(truth) * 100.0
    return (mean_estimate - truth) * 100.0


def coverage_rate(intervals, truth: float) -> float:
    intervals = list(intervals)
    if not intervals:
        raise ValueError("no intervals given")
    hits = sum(1 for lo, hi in intervals if lo <= truth <= hi)
    return 100.0 * hits / len(intervals)


def replication_seeds(base_seed: int, rep: int) -> tuple[int, np.random.SeedSequence]:
    """Generator seed ``base_seed + rep`` and a separate stream for the chain."""
    gen_seed = base_seed + rep
    chain_seed = np.random.SeedSequence([gen_seed, 0x5EED])
    return gen_seed, chain_seed


_SUMMARY_NAMES = {"med": "med", "direct": "c_prime", "total": "tot"}


def run_replication(cond: SimCondition, rep: int, chain_cfg: ChainConfig) -> dict:
    gen_seed, chain_seq = replication_seeds(cond.base_seed, rep)
    rec = {"rep": rep, "seed": gen_seed, "ok": True, "error": ""}
    try:
        net, data, _ = generate_dataset(cond, gen_seed)
        cfg = ChainConfig(**{**asdict(chain_cfg), "seed": int(chain_seq.generate_state(1, np.uint64)[0])})
        res = run_chain(net, data, cond.dim, cfg)
        for target, col in _SUMMARY_NAMES.items():
            s = res.summary[col]
            rec[f"{target}_mean"] = s.mean
            rec[f"{target}_lo"] = s.ci_lower
            rec[f"{target}_hi"] = s.ci_upper
        rec["rhat_med"] = res.summary["med"].rhat
    except (NumericalError, ValueError, np.linalg.LinAlgError) as exc:
        rec.update(ok=False, error=f"{type(exc).__name__}: {exc}")
    return rec


@dataclass
class TargetReport:
    relative_bias_percent: float
    coverage_percent: float
    mean_ci_width: float
    mean_estimate: float
    truth: float


@dataclass
class SimReport:
    condition: SimCondition
    targets: dict[str, TargetReport]
    replications: list[dict]
    n_failed: int = 0
    chain: dict = field(default_factory=dict)

    def rows(self, clip: bool = False) -> list[dict]:
        out = []
        for t, r in self.targets.items():
            rb = r.relative_bias_percent
            if clip:
                rb = float(np.clip(rb, -CLIP, CLIP))
            out.append({**self.condition.key(), "target": t, "rel_bias": rb,
                        "coverage": r.coverage_percent, "mean_ci_width": r.mean_ci_width,
                        "n_failed": self.n_failed})
        return out


def aggregate(cond: SimCondition, records: list[dict]) -> SimReport:
    """Deterministic reduction over replications sorted by index."""
    records = sorted(records, key=lambda r: r["rep"])
    ok = [r for r in records if r["ok"]]
    truths = cond.true_effects()
    targets = {}
    for t in TARGETS:
        if ok:
            means = np.array([r[f"{t}_mean"] for r in ok])
            iv = [(r[f"{t}_lo"], r[f"{t}_hi"]) for r in ok]
            targets[t] = TargetReport(
                relative_bias_percent=relative_bias(float(means.mean()), truths[t]),
                coverage_percent=coverage_rate(iv, truths[t]),
                mean_ci_width=float(np.mean([hi - lo for lo, hi in iv])),
                mean_estimate=float(means.mean()), truth=truths[t])
        else:
            nan = float("nan")
            targets[t] = TargetReport(nan, nan, nan, nan, truths[t])
    return SimReport(cond, targets, records, n_failed=len(records) - len(ok))


def _rep_task(args):
    return run_replication(*args)


def run_condition(cond: SimCondition, chain_cfg: ChainConfig, threads: int = 1) -> SimReport:
    tasks = [(cond, r, chain_cfg) for r in range(cond.n_reps)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(_rep_task, tasks))
    else:
        records = [_rep_task(t) for t in tasks]
    report = aggregate(cond, records)
    report.chain = asdict(chain_cfg)
    if report.n_failed:
        log.warning("%d of %d replications failed for %s", report.n_failed, cond.n_reps, cond.key())
    return report


def run_grid(grid: list[SimCondition], chain_cfg: ChainConfig, threads: int = 1) -> list[SimReport]:
    if not grid:
        raise ValueError("empty simulation grid")
    reports = []
    for cond in grid:
        try:
            reports.append(run_condition(cond, chain_cfg, threads))
        except Exception as exc:  # noqa: BLE001 - one bad condition must not sink the grid
            log.error("condition %s failed: %s", cond.key(), exc)
            failed = [{"rep": r, "seed": cond.base_seed + r, "ok": False, "error": str(exc)}
                      for r in range(cond.n_reps)]
            reports.append(aggregate(cond, failed))
    return reports


def estimate_runtime(grid: list[SimCondition], chain_cfg: ChainConfig) -> float:
    """Rough single-core seconds: a fixed per-iteration cost plus one per dyad and dimension."""
    per_iter = [1.5e-4 + 8e-9 * c.n * c.n * c.dim for c in grid]
    return float(sum(c.n_reps * chain_cfg.n_iter * t for c, t in zip(grid, per_iter)))


# ---------------------------------------------------------------- output

GRID_COLUMNS = ["D", "n", "med_true", "c_prime", "target", "rel_bias", "coverage",
                "mean_ci_width", "n_failed"]
REP_COLUMNS = ["D", "n", "med_true", "c_prime", "rep", "seed", "ok", "error",
               *(f"{t}_{s}" for t in TARGETS for s in ("mean", "lo", "hi")), "rhat_med"]


def _fmt(v):
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    return str(v)


def grid_csv(reports: list[SimReport], clip: bool = False) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(GRID_COLUMNS)
    for rep in reports:
        for row in rep.rows(clip=clip):
            w.writerow([_fmt(row[c]) for c in GRID_COLUMNS])
    return buf.getvalue()


def replications_csv(reports: list[SimReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REP_COLUMNS)
    for rep in reports:
        key = rep.condition.key()
        for r in rep.replications:
            rec = {**key, **r}
            w.writerow([_fmt(rec.get(c, "")) for c in REP_COLUMNS])
    return buf.getvalue()


def load_grid(spec) -> list[SimCondition]:
    """Conditions from a list of ``{D, n, med, c_prime}`` records."""
    out = []
    for k, item in enumerate(spec):
        try:
            out.append(SimCondition(int(item["D"]), int(item["n"]), float(item["med"]),
                                    float(item["c_prime"])))
        except KeyError as exc:
            raise ValueError(f"grid entry {k} lacks field {exc}") from None
    return out
