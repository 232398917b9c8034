"""Latent space model: distances, likelihood, edge prediction and BIC dimension selection."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from . import _kernels
from .netcore import AdjacencyMatrix

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LatentConfiguration:
    """N x D matrix of actor positions."""

    positions: np.ndarray

    def __post_init__(self):
        z = np.array(self.positions, dtype=float, copy=True)
        if z.ndim == 1:
            z = z[:, None]
        if z.ndim != 2:
            raise ValueError("positions must be an N x D matrix")
        if not np.isfinite(z).all():
            raise ValueError("positions must be finite")
        if z.shape[1] < 1 or z.shape[1] >= z.shape[0]:
            raise ValueError(f"latent dimension must satisfy 1 <= D < N, got D={z.shape[1]}, N={z.shape[0]}")
        z.setflags(write=False)
        object.__setattr__(self, "positions", z)

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    def distance_matrix(self) -> np.ndarray:
        diff = self.positions[:, None, :] - self.positions[None, :, :]
        return np.sqrt((diff ** 2).sum(-1))


@dataclass(frozen=True)
class LsmFit:
    config: LatentConfiguration
    alpha: float
    log_likelihood: float
    bic: float


@dataclass(frozen=True)
class PredictionRates:
    """In-sample dyad classification rates; ``None`` where undefined."""

    fpr: float | None
    fnr: float | None
    correct: float


def euclidean_distance(z_i, z_j) -> float:
    z_i = np.atleast_1d(np.asarray(z_i, dtype=float))
    z_j = np.atleast_1d(np.asarray(z_j, dtype=float))
    if z_i.shape != z_j.shape:
        raise ValueError(f"dimension mismatch: {z_i.shape} vs {z_j.shape}")
    return float(np.sqrt(np.sum((z_i - z_j) ** 2)))


def edge_probability(alpha, dist):
    """Tie probability logistic(alpha - dist)."""
    return expit(np.subtract(alpha, dist))


def _positions(config) -> np.ndarray:
    return np.asarray(getattr(config, "positions", config), dtype=float)


def network_log_likelihood(net: AdjacencyMatrix, config, alpha: float) -> float:
    """Bernoulli log likelihood summed over the upper-triangle dyads."""
    z = _positions(config)
    if z.ndim == 1:
        z = z[:, None]
    if z.shape[0] != net.n_actors:
        raise ValueError(f"configuration has {z.shape[0]} actors, network has {net.n_actors}")
    iu = np.triu_indices(net.n_actors, 1)
    m_upper = net.entries[iu].astype(float)
    dist = _kernels.pair_distances(np.ascontiguousarray(z))
    return float(_kernels.dyad_loglik(dist, m_upper, float(alpha)))


def prediction_rates(net: AdjacencyMatrix, config, alpha: float,
                     threshold: float = 0.5) -> PredictionRates:
    z = _positions(config)
    iu = np.triu_indices(net.n_actors, 1)
    m = net.entries[iu].astype(bool)
    dist = _kernels.pair_distances(np.ascontiguousarray(z.reshape(net.n_actors, -1)))
    pred = edge_probability(alpha, dist) > threshold
    n_edges = m.sum()
    n_non = (~m).sum()
    fp = np.sum(pred & ~m)
    fn = np.sum(~pred & m)
    fpr = float(fp / n_non) if n_non else None
    fnr = float(fn / n_edges) if n_edges else None
    return PredictionRates(fpr=fpr, fnr=fnr, correct=float(1.0 - (fp + fn) / m.size))


def n_lsm_parameters(n_actors: int, dim: int) -> int:
    return n_actors * dim + 1


def bic(fit: LsmFit | float, net: AdjacencyMatrix, dim: int | None = None) -> float:
    """BIC = -2 logL + p log(n_dyads) with p = N*D + 1.

    Accepts an :class:`LsmFit`, or a raw log likelihood together with ``dim``.
    """
    if isinstance(fit, LsmFit):
        loglik, dim = fit.log_likelihood, fit.config.dim
    else:
        loglik = float(fit)
        if dim is None:
            raise ValueError("dim is required when passing a bare log likelihood")
    n = net.n_actors
    return -2.0 * loglik + n_lsm_parameters(n, dim) * math.log(n * (n - 1) / 2)


def fit_lsm(net: AdjacencyMatrix, dim: int, cfg=None) -> LsmFit:
    """Fit the latent space model alone by MCMC, positions under a N(0, I) prior.

    Posterior-mean positions are averaged after Procrustes alignment of each
    retained draw to the highest-likelihood draw.
    """
    from .sampler import ChainConfig, run_chain
    from .transforms import procrustes_align

    if cfg is None:
        cfg = ChainConfig(n_iter=3000, burn_in=1000)
    result = run_chain(net, None, dim, cfg, outcome="none", keep_positions=True)
    zs = result.positions
    ll = result.draws["log_lik"][result.retained_index]
    ref = zs[int(np.argmax(ll))]
    aligned = np.mean([procrustes_align(z, ref) for z in zs], axis=0)
    alpha = float(result.summary["alpha"].mean)
    config = LatentConfiguration(aligned)
    loglik = network_log_likelihood(net, config, alpha)
    return LsmFit(config=config, alpha=alpha, log_likelihood=loglik,
                  bic=bic(loglik, net, dim))


@dataclass
class DimensionRow:
    dim: int
    fpr: float | None = None
    fnr: float | None = None
    correct: float | None = None
    bic: float | None = None
    error: str | None = None


def select_dimension(net: AdjacencyMatrix, d_candidates, fit_budget=None):
    """Fit each candidate dimension and return ``(best_d, table)``.

    ``best_d`` minimises BIC, ties going to the smaller dimension. A candidate
    whose fit fails is recorded with its error and skipped.
    """
    cands = sorted(set(int(d) for d in d_candidates))
    if not cands:
        raise ValueError("no candidate dimensions given")
    if any(d < 1 or d >= net.n_actors for d in cands):
        raise ValueError(f"candidate dimensions must lie in [1, N-1], got {cands}")
    table = []
    for d in cands:
        row = DimensionRow(dim=d)
        try:
            fit = fit_lsm(net, d, fit_budget)
            rates = prediction_rates(net, fit.config, fit.alpha)
            row.fpr, row.fnr, row.correct, row.bic = rates.fpr, rates.fnr, rates.correct, fit.bic
        except (ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
            log.warning("dimension %d failed: %s", d, exc)
            row.error = str(exc)
        table.append(row)
    ok = [r for r in table if r.bic is not None]
    if not ok:
        raise RuntimeError("every candidate dimension failed to fit")
    best = min(ok, key=lambda r: (r.bic, r.dim))
    return best.dim, table
