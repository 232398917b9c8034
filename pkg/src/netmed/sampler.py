"""Metropolis-within-Gibbs sampler for the latent space mediation model.

Each iteration runs, in order: positions (random-walk Metropolis per actor),
latent probit outcomes when the outcome is binary, i1, i2, alpha (random-walk
Metropolis), a, b, c', the mediator residual variances and the outcome
residual variance. Everything except positions and alpha is an exact
conjugate draw.
"""

from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import optimize, stats
from scipy.sparse.csgraph import shortest_path

from . import _kernels
from .mediation import MediationParams
from .netcore import ActorData, AdjacencyMatrix

log = logging.getLogger(__name__)

OUTCOME_MODES = ("continuous", "binary", "none")
MIN_RETAINED = 100
RHAT_WARN = 1.1


class NumericalError(RuntimeError):
    """Non-finite log posterior or parameter during sampling."""


@dataclass
class ChainConfig:
    n_iter: int = 20000
    burn_in: int = 6000
    seed: int = 0
    thin: int = 1
    adapt: bool = True
    z_scale: float = 0.5
    alpha_scale: float = 0.05
    adapt_window: int = 50
    z_target: float = 0.30
    alpha_target: float = 0.44
    clamp_positions: bool = False

    def __post_init__(self):
        if self.n_iter < 1 or self.thin < 1:
            raise ValueError("n_iter and thin must be positive")
        if not 0 <= self.burn_in < self.n_iter:
            raise ValueError(f"burn_in ({self.burn_in}) must be below n_iter ({self.n_iter})")
        if self.z_scale <= 0 or self.alpha_scale <= 0:
            raise ValueError("proposal scales must be positive")


@dataclass(frozen=True)
class PriorSpec:
    coef_sd: float = 1000.0
    ig_shape: float = 0.001
    ig_rate: float = 0.001

    def __post_init__(self):
        if min(self.coef_sd, self.ig_shape, self.ig_rate) <= 0:
            raise ValueError("prior hyperparameters must be positive")

    @property
    def coef_prec(self) -> float:
        return 1.0 / self.coef_sd ** 2


@dataclass
class ChainModel:
    """Fixed data of a chain, pre-arranged for the update functions."""

    net: AdjacencyMatrix
    x: np.ndarray | None
    y: np.ndarray | None
    dim: int
    outcome: str

    def __post_init__(self):
        self.M = np.ascontiguousarray(self.net.entries, dtype=np.float64)
        self.m_upper = self.M[np.triu_indices(self.n, 1)]

    @property
    def n(self) -> int:
        return self.net.n_actors

    @property
    def mediation(self) -> bool:
        return self.outcome != "none"


@dataclass
class ChainState:
    params: MediationParams
    z: np.ndarray
    y_star: np.ndarray | None = None
    iteration: int = 0
    z_scales: np.ndarray | None = None
    alpha_scale: float = 0.05
    z_accepted: np.ndarray | None = None
    alpha_accepted: int = 0
    z_window: np.ndarray | None = None
    alpha_window: int = 0
    window_len: int = 0
    log_lik: float = float("nan")
    dist: np.ndarray | None = field(default=None, repr=False)
    sp: np.ndarray | None = field(default=None, repr=False)
    sp_buf: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        n = self.z.shape[0]
        self.refresh_cache()
        if self.z_scales is None:
            self.z_scales = np.full(n, 0.5)
        if self.z_accepted is None:
            self.z_accepted = np.zeros(n, dtype=np.int64)
        if self.z_window is None:
            self.z_window = np.zeros(n, dtype=np.int64)

    def refresh_cache(self) -> None:
        """Recompute cached distances and softplus terms from ``z`` and alpha."""
        n = self.z.shape[0]
        self.z = np.ascontiguousarray(self.z, dtype=float)
        self.dist = np.empty((n, n))
        self.sp = np.empty((n, n))
        self.sp_buf = np.empty((n, n))
        _kernels.fill_cache(self.z, self.params.alpha, self.dist, self.sp)


@dataclass(frozen=True)
class ParamSummary:
    mean: float
    ci_lower: float
    ci_upper: float
    sd: float
    ess: float
    mcse: float
    rhat: float

    def to_dict(self, full: bool = False) -> dict:
        d = {"mean": self.mean, "ci_lower": self.ci_lower, "ci_upper": self.ci_upper}
        if full:
            d.update(sd=self.sd, ess=self.ess, mcse=self.mcse, rhat=self.rhat)
        return d


@dataclass
class PosteriorSummary:
    params: dict[str, ParamSummary]
    level: float
    n_retained: int
    acceptance: dict[str, float] = field(default_factory=dict)

    def __getitem__(self, name: str) -> ParamSummary:
        return self.params[name]

    def __contains__(self, name: str) -> bool:
        return name in self.params

    def max_rhat(self, names=None) -> float:
        names = names or list(self.params)
        vals = [self.params[n].rhat for n in names if np.isfinite(self.params[n].rhat)]
        return max(vals) if vals else float("nan")


class ChainDraws:
    """Per-iteration parameter records as a 2-d array with named columns."""

    def __init__(self, columns, values):
        self.columns = list(columns)
        self.values = np.asarray(values, dtype=float)
        self._index = {c: k for k, c in enumerate(self.columns)}

    def __len__(self):
        return self.values.shape[0]

    def __getitem__(self, name: str) -> np.ndarray:
        return self.values[:, self._index[name]]

    def __contains__(self, name):
        return name in self._index

    def rows(self, index) -> "ChainDraws":
        return ChainDraws(self.columns, self.values[index])

    def to_csv(self, path, start: int = 0, thin: int = 1, iteration_offset: int = 0) -> None:
        """Write rows from ``start`` on with an ``iter`` column (1-based)."""
        idx = np.arange(start, len(self), thin)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iter", *self.columns])
            for k in idx:
                w.writerow([k + 1 + iteration_offset, *(repr(float(v)) for v in self.values[k])])

    @classmethod
    def from_csv(cls, path) -> "ChainDraws":
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
        header, body = rows[0], rows[1:]
        vals = np.array([[float(v) for v in r] for r in body]).reshape(len(body), len(header))
        if header[0] == "iter":
            return cls(header[1:], vals[:, 1:])
        return cls(header, vals)


@dataclass
class ChainResult:
    draws: ChainDraws
    summary: PosteriorSummary
    state: ChainState
    config: ChainConfig
    retained_index: np.ndarray
    positions: np.ndarray | None = None
    warnings: list[str] = field(default_factory=list)


# ---------------------------------------------------------------- diagnostics

def effective_sample_size(chain) -> float:
    """ESS from the initial-positive-sequence autocorrelation estimate."""
    x = np.asarray(chain, dtype=float)
    n = len(x)
    if n < 4 or np.ptp(x) == 0:
        return float(n)
    xc = x - x.mean()
    f = np.fft.rfft(xc, 2 * n)
    acov = np.fft.irfft(f * np.conj(f))[:n] / n
    rho = acov / acov[0]
    tau = 1.0
    for k in range(1, n - 1, 2):
        pair = rho[k] + rho[k + 1]
        if pair <= 0:
            break
        tau += 2 * pair
    return float(n / max(tau, 1e-12))


def split_rhat(chain) -> float:
    x = np.asarray(chain, dtype=float)
    h = len(x) // 2
    if h < 2:
        return float("nan")
    parts = np.stack([x[:h], x[h:2 * h]])
    w = parts.var(axis=1, ddof=1).mean()
    if w == 0:
        return 1.0 if np.ptp(parts.mean(axis=1)) == 0 else float("inf")
    b = h * parts.mean(axis=1).var(ddof=1)
    var_hat = (h - 1) / h * w + b / h
    return float(np.sqrt(var_hat / w))


def summarize(draws: ChainDraws, burn_in: int, level: float = 0.95, thin: int = 1,
              acceptance: dict | None = None) -> PosteriorSummary:
    """Posterior mean and equal-tail credible interval of every column.

    Quantiles use linear interpolation between order statistics.
    """
    if not 0 < level < 1:
        raise ValueError("credible level must be in (0, 1)")
    idx = np.arange(burn_in, len(draws), thin)
    if len(idx) < MIN_RETAINED:
        raise ValueError(f"only {len(idx)} retained draws; at least {MIN_RETAINED} required")
    tail = (1.0 - level) / 2.0
    out = {}
    for name in draws.columns:
        v = draws[name][idx]
        lo, hi = np.quantile(v, [tail, 1.0 - tail])
        ess = effective_sample_size(v)
        sd = float(v.std(ddof=1))
        out[name] = ParamSummary(mean=float(v.mean()), ci_lower=float(lo), ci_upper=float(hi),
                                 sd=sd, ess=ess, mcse=sd / math.sqrt(ess), rhat=split_rhat(v))
    return PosteriorSummary(out, level, len(idx), dict(acceptance or {}))


# ---------------------------------------------------------------- initialisation

def classical_mds(dist: np.ndarray, dim: int) -> np.ndarray:
    n = dist.shape[0]
    J = np.eye(n) - 1.0 / n
    B = -0.5 * J @ (dist ** 2) @ J
    w, v = np.linalg.eigh(B)
    order = np.argsort(w)[::-1][:dim]
    return v[:, order] * np.sqrt(np.clip(w[order], 0.0, None))


def graph_distance_matrix(net: AdjacencyMatrix) -> np.ndarray:
    """Shortest-path hop counts; disconnected pairs get (max finite + 1)."""
    sp = shortest_path(net.entries.astype(float), method="D", unweighted=True, directed=False)
    finite = sp[np.isfinite(sp)]
    sp[~np.isfinite(sp)] = (finite.max() if finite.size else 0.0) + 1.0
    return sp


def initial_positions(net: AdjacencyMatrix, dim: int, rng) -> tuple[np.ndarray, float]:
    """MDS start from graph distances, rescaled jointly with alpha by maximum likelihood."""
    z0 = classical_mds(graph_distance_matrix(net), dim)
    z0 = z0 + 1e-3 * rng.standard_normal(z0.shape)
    z0 = z0 / max(np.sqrt((z0 ** 2).sum(1).mean()), 1e-12)
    iu = np.triu_indices(net.n_actors, 1)
    m_upper = net.entries[iu].astype(float)
    d0 = _kernels.pair_distances(np.ascontiguousarray(z0))
    dens = np.clip(m_upper.mean(), 0.5 / len(m_upper), 1 - 0.5 / len(m_upper))

    def negll(theta):
        return -_kernels.dyad_loglik(np.exp(theta[0]) * d0, m_upper, theta[1])

    start = np.array([0.0, math.log(dens / (1 - dens)) + d0.mean()])
    res = optimize.minimize(negll, start, method="Nelder-Mead",
                            options={"xatol": 1e-4, "fatol": 1e-6, "maxiter": 2000})
    log_s, alpha = res.x if np.all(np.isfinite(res.x)) else start
    log_s = float(np.clip(log_s, -5.0, 5.0))
    return np.exp(log_s) * z0, float(alpha)


def _ols(design, target):
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    resid = target - design @ coef
    return coef, resid


def initial_state(model: ChainModel, cfg: ChainConfig, rng, init_positions=None) -> ChainState:
    n, d = model.n, model.dim
    if init_positions is None:
        z, alpha = initial_positions(model.net, d, rng)
    else:
        z = np.array(np.asarray(getattr(init_positions, "positions", init_positions), dtype=float)
                     .reshape(n, d))
        dist = _kernels.pair_distances(np.ascontiguousarray(z))
        res = optimize.minimize_scalar(lambda al: -_kernels.dyad_loglik(dist, model.m_upper, al),
                                       bounds=(-50, 50), method="bounded")
        alpha = float(res.x)
    z = np.ascontiguousarray(z, dtype=float)
    y_star = None
    if not model.mediation:
        params = MediationParams(np.zeros(d), 0.0, np.zeros(d), np.zeros(d), 0.0, alpha,
                                 np.ones(d), 1.0)
    else:
        x = model.x
        ones = np.ones(n)
        coef, resid = _ols(np.column_stack([ones, x]), z)
        i1, a = coef[0], coef[1]
        s1 = np.maximum(resid.var(axis=0), 1e-2)
        if model.outcome == "binary":
            y_star = np.where(model.y > 0.5, 0.5, -0.5)
            target = y_star
        else:
            target = model.y
        coef, resid = _ols(np.column_stack([ones, z, x]), target)
        i2, b, c = coef[0], coef[1:d + 1], coef[d + 1]
        s2 = 1.0 if model.outcome == "binary" else max(resid.var(), 1e-2)
        params = MediationParams(i1, i2, a, b, c, alpha, s1, s2)
    return ChainState(params=params, z=z, y_star=y_star,
                      z_scales=np.full(n, cfg.z_scale), alpha_scale=cfg.alpha_scale)


# ---------------------------------------------------------------- update steps

def _outcome(state: ChainState, model: ChainModel) -> np.ndarray:
    return state.y_star if model.outcome == "binary" else model.y


def update_positions(state: ChainState, model: ChainModel, rng, active=None) -> ChainState:
    """Random-walk Metropolis update of each actor's position, one actor at a time."""
    p = state.params
    n, d = state.z.shape
    if model.mediation:
        prior_mean = p.i1[None, :] + np.outer(model.x, p.a)
        prior_prec = 1.0 / p.sigma1_sq
        resid = _outcome(state, model) - p.i2 - p.c_prime * model.x
        out_prec = 1.0 / p.sigma2_sq
    else:
        prior_mean = np.zeros((n, d))
        prior_prec = np.ones(d)
        resid = np.zeros(n)
        out_prec = 0.0
    noise = rng.standard_normal((n, d))
    log_u = np.log(rng.random(n))
    if active is None:
        active = np.ones(n, dtype=np.bool_)
    before = state.z_accepted.copy()
    _kernels.position_sweep(state.z, model.M, state.dist, state.sp, p.alpha,
                            np.ascontiguousarray(prior_mean),
                            prior_prec, model.mediation, resid, p.b, out_prec,
                            state.z_scales, noise, log_u, np.asarray(active, dtype=np.bool_),
                            state.z_accepted)
    state.z_window += state.z_accepted - before
    return state


def update_alpha(state: ChainState, model: ChainModel, priors: PriorSpec, rng) -> ChainState:
    """Random-walk Metropolis update of the network intercept."""
    al = state.params.alpha
    prop = al + state.alpha_scale * rng.standard_normal()
    ll_old, ll_new = _kernels.alpha_move(model.M, state.dist, state.sp, state.sp_buf, al, prop)
    delta = ll_new - ll_old - 0.5 * priors.coef_prec * (prop ** 2 - al ** 2)
    if math.log(rng.random()) < delta:
        state.params.alpha = prop
        state.sp, state.sp_buf = state.sp_buf, state.sp
        state.alpha_accepted += 1
        state.alpha_window += 1
        ll_old = ll_new
    state.log_lik = float(ll_old)
    return state


def _normal_draw(rng, prec, lin):
    """Draw from N(lin/prec, 1/prec)."""
    return lin / prec + rng.standard_normal(np.shape(prec)) / np.sqrt(prec)


def draw_i1(state, model, priors, rng):
    p = state.params
    r = state.z - np.outer(model.x, p.a)
    prec = model.n / p.sigma1_sq + priors.coef_prec
    p.i1 = _normal_draw(rng, prec, r.sum(axis=0) / p.sigma1_sq)


def draw_i2(state, model, priors, rng):
    p = state.params
    r = _outcome(state, model) - state.z @ p.b - p.c_prime * model.x
    prec = model.n / p.sigma2_sq + priors.coef_prec
    p.i2 = float(_normal_draw(rng, prec, r.sum() / p.sigma2_sq))


def draw_a(state, model, priors, rng):
    p = state.params
    x = model.x
    r = state.z - p.i1[None, :]
    prec = (x @ x) / p.sigma1_sq + priors.coef_prec
    p.a = _normal_draw(rng, prec, (x @ r) / p.sigma1_sq)


def draw_b(state, model, priors, rng):
    p = state.params
    Z = state.z
    r = _outcome(state, model) - p.i2 - p.c_prime * model.x
    P = Z.T @ Z / p.sigma2_sq + priors.coef_prec * np.eye(model.dim)
    L = np.linalg.cholesky(P)
    mean = np.linalg.solve(L.T, np.linalg.solve(L, Z.T @ r / p.sigma2_sq))
    p.b = mean + np.linalg.solve(L.T, rng.standard_normal(model.dim))


def draw_c_prime(state, model, priors, rng):
    p = state.params
    x = model.x
    r = _outcome(state, model) - p.i2 - state.z @ p.b
    prec = (x @ x) / p.sigma2_sq + priors.coef_prec
    p.c_prime = float(_normal_draw(rng, prec, (x @ r) / p.sigma2_sq))


def update_regression_blocks(state: ChainState, model: ChainModel, priors: PriorSpec,
                             rng) -> ChainState:
    """Conjugate Gibbs draws of i1, i2, a, b and c' given positions and variances."""
    draw_i1(state, model, priors, rng)
    draw_i2(state, model, priors, rng)
    draw_a(state, model, priors, rng)
    draw_b(state, model, priors, rng)
    draw_c_prime(state, model, priors, rng)
    return state


def _inv_gamma(rng, shape, rate):
    return rate / rng.gamma(shape, 1.0, size=np.shape(rate))


def draw_sigma1(state, model, priors, rng):
    p = state.params
    r = state.z - p.i1[None, :] - np.outer(model.x, p.a)
    p.sigma1_sq = _inv_gamma(rng, priors.ig_shape + model.n / 2.0,
                             priors.ig_rate + 0.5 * (r ** 2).sum(axis=0))


def draw_sigma2(state, model, priors, rng):
    p = state.params
    r = _outcome(state, model) - p.i2 - state.z @ p.b - p.c_prime * model.x
    p.sigma2_sq = float(_inv_gamma(rng, priors.ig_shape + model.n / 2.0,
                                   priors.ig_rate + 0.5 * r @ r))


def update_variances(state: ChainState, model: ChainModel, priors: PriorSpec, rng) -> ChainState:
    """Inverse-gamma Gibbs draws of the residual variances.

    The outcome variance stays fixed at 1 for a binary (probit) outcome.
    """
    draw_sigma1(state, model, priors, rng)
    if model.outcome == "continuous":
        draw_sigma2(state, model, priors, rng)
    return state


def truncated_normal(rng, mean, positive):
    """Unit-variance normal draws centred at ``mean``, truncated to [0, inf) where
    ``positive`` is true and to (-inf, 0) elsewhere."""
    mean = np.asarray(mean, dtype=float)
    lo = np.where(positive, -mean, -np.inf)
    hi = np.where(positive, np.inf, -mean)
    return mean + stats.truncnorm.rvs(lo, hi, random_state=rng)


def update_latent_outcomes(state: ChainState, model: ChainModel, rng) -> ChainState:
    p = state.params
    mean = p.i2 + state.z @ p.b + p.c_prime * model.x
    state.y_star = truncated_normal(rng, mean, model.y > 0.5)
    return state


def adapt_step_sizes(state: ChainState, window: int | None = None, z_target: float = 0.30,
                     alpha_target: float = 0.44, factor: float = 1.1) -> ChainState:
    """Nudge proposal scales toward the target acceptance rates and reset the window."""
    window = window or state.window_len
    if window <= 0:
        return state
    z_rate = state.z_window / window
    state.z_scales = np.where(z_rate > z_target, state.z_scales * factor, state.z_scales / factor)
    if state.alpha_window / window > alpha_target:
        state.alpha_scale *= factor
    else:
        state.alpha_scale /= factor
    state.z_window[:] = 0
    state.alpha_window = 0
    state.window_len = 0
    return state


# ---------------------------------------------------------------- driver

def param_columns(dim: int, outcome: str) -> list[str]:
    if outcome == "none":
        return ["alpha", "log_lik"]
    dd = range(1, dim + 1)
    return ([f"i1_{k}" for k in dd] + ["i2", "alpha"] + [f"a_{k}" for k in dd]
            + [f"b_{k}" for k in dd] + ["c_prime"] + [f"sigma1_sq_{k}" for k in dd]
            + ["sigma2_sq", "med", "tot", "log_lik"])


def _record(state: ChainState, outcome: str) -> list[float]:
    p = state.params
    if outcome == "none":
        return [p.alpha, state.log_lik]
    med = float(p.a @ p.b)
    tot = med + p.c_prime
    return [*p.i1, p.i2, p.alpha, *p.a, *p.b, p.c_prime, *p.sigma1_sq, p.sigma2_sq, med, tot,
            state.log_lik]


def build_model(net: AdjacencyMatrix, data: ActorData | None, dim: int,
                outcome: str = "continuous") -> ChainModel:
    if outcome not in OUTCOME_MODES:
        raise ValueError(f"outcome must be one of {OUTCOME_MODES}, got {outcome!r}")
    if not 1 <= dim < net.n_actors:
        raise ValueError(f"latent dimension must satisfy 1 <= D < N (D={dim}, N={net.n_actors})")
    if outcome == "none":
        return ChainModel(net, None, None, dim, outcome)
    if data is None:
        raise ValueError("actor data required for mediation fits")
    data.check_matches(net)
    if np.ptp(data.x) == 0:
        raise ValueError("covariate x is constant; the mediation model is not identified")
    if outcome == "binary" and not data.is_binary:
        raise ValueError("binary outcome mode requires y in {0, 1}")
    return ChainModel(net, np.asarray(data.x, float), np.asarray(data.y, float), dim, outcome)


def run_chain(net: AdjacencyMatrix, data: ActorData | None, dim: int,
              cfg: ChainConfig | None = None, priors: PriorSpec | None = None,
              outcome: str = "continuous", init_positions=None,
              keep_positions: bool = False, level: float = 0.95) -> ChainResult:
    """Run one chain and summarise the draws retained after burn-in.

    ``outcome="none"`` fits the latent space model alone with standard-normal
    positions. ``cfg.clamp_positions`` holds positions at ``init_positions``.
    """
    cfg = cfg or ChainConfig()
    priors = priors or PriorSpec()
    model = build_model(net, data, dim, outcome)
    if cfg.clamp_positions and init_positions is None:
        raise ValueError("clamp_positions requires init_positions")
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    state = initial_state(model, cfg, rng, init_positions)

    columns = param_columns(dim, outcome)
    values = np.empty((cfg.n_iter, len(columns)))
    retained = np.arange(cfg.burn_in, cfg.n_iter, cfg.thin)
    positions = np.empty((len(retained), model.n, dim)) if keep_positions else None
    k_pos = 0
    notes: list[str] = []

    for it in range(cfg.n_iter):
        state.iteration = it + 1
        if not cfg.clamp_positions:
            update_positions(state, model, rng)
        if model.outcome == "binary":
            update_latent_outcomes(state, model, rng)
        if model.mediation:
            draw_i1(state, model, priors, rng)
            draw_i2(state, model, priors, rng)
        update_alpha(state, model, priors, rng)
        if model.mediation:
            draw_a(state, model, priors, rng)
            draw_b(state, model, priors, rng)
            draw_c_prime(state, model, priors, rng)
            update_variances(state, model, priors, rng)
        state.window_len += 1

        row = _record(state, outcome)
        if not np.all(np.isfinite(row)) or not np.all(np.isfinite(state.z)):
            bad = [c for c, v in zip(columns, row) if not np.isfinite(v)]
            raise NumericalError(f"non-finite state at iteration {it + 1}: {bad or ['positions']}")
        values[it] = row
        if keep_positions and it >= cfg.burn_in and (it - cfg.burn_in) % cfg.thin == 0:
            positions[k_pos] = state.z
            k_pos += 1

        if cfg.adapt and it < cfg.burn_in and state.window_len >= cfg.adapt_window:
            adapt_step_sizes(state, cfg.adapt_window, cfg.z_target, cfg.alpha_target)
        if it + 1 == cfg.burn_in:
            state.z_accepted[:] = 0
            state.alpha_accepted = 0

    n_post = cfg.n_iter - cfg.burn_in
    acceptance = {"alpha": state.alpha_accepted / n_post}
    if not cfg.clamp_positions:
        acceptance["z"] = float(state.z_accepted.mean() / n_post)
        if cfg.adapt and np.any(state.z_accepted == 0):
            msg = f"{int(np.sum(state.z_accepted == 0))} actors accepted no position moves after burn-in"
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
            notes.append(msg)
    if cfg.adapt and state.alpha_accepted == 0:
        msg = "alpha accepted no moves after burn-in"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        notes.append(msg)

    draws = ChainDraws(columns, values)
    summary = summarize(draws, cfg.burn_in, level, cfg.thin, acceptance)
    watch = [c for c in ("med", "c_prime", "tot", "alpha") if c in summary]
    rhat = summary.max_rhat(watch)
    if np.isfinite(rhat) and rhat > RHAT_WARN:
        msg = f"split R-hat {rhat:.3f} exceeds {RHAT_WARN} for invariant parameters"
        log.warning(msg)
        notes.append(msg)
    return ChainResult(draws=draws, summary=summary, state=state, config=cfg,
                       retained_index=retained, positions=positions, warnings=notes)


def config_dict(cfg: ChainConfig, priors: PriorSpec | None = None) -> dict:
    d = asdict(cfg)
    if priors is not None:
        d["priors"] = asdict(priors)
    return d
