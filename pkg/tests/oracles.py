"""Independent reference computations shared by the unit and acceptance tests."""

import math

import numpy as np
from scipy import integrate
from scipy.special import expit, log_expit

from netmed.mediation import MediationParams
from netmed.netcore import ActorData, AdjacencyMatrix
from netmed.sampler import (ChainConfig, ChainModel, ChainState, PriorSpec, run_chain,
                            update_positions)

# ---------------------------------------------------------------- two-actor toy
# Actor 1 sits still at TOY_ANCHOR; actor 0 moves. Its target density is
# tie likelihood x mediator prior x outcome term, all in one dimension.
TOY_ANCHOR = 0.5
TOY = dict(alpha=1.0, i1=0.0, a=0.5, x0=1.0, sigma1_sq=1.0, i2=0.0, b=0.8, c_prime=0.0,
           y0=1.0, sigma2_sq=0.5)
TOY_RANGE = (-4.0, 5.0)


def toy_log_density(z):
    t = TOY
    d = np.abs(z - TOY_ANCHOR)
    tie = log_expit(t["alpha"] - d)
    prior = -0.5 * (z - t["i1"] - t["a"] * t["x0"]) ** 2 / t["sigma1_sq"]
    resid = t["y0"] - t["i2"] - t["b"] * z - t["c_prime"] * t["x0"]
    return tie + prior - 0.5 * resid ** 2 / t["sigma2_sq"]


def _whole_line(f):
    # split at the kink of |z - anchor|
    return (integrate.quad(f, -np.inf, TOY_ANCHOR)[0] + integrate.quad(f, TOY_ANCHOR, np.inf)[0])


def toy_grid_posterior(n_bins=100):
    """Bin edges and bin probabilities of the toy target by adaptive quadrature."""
    edges = np.linspace(*TOY_RANGE, n_bins + 1)
    dens = lambda z: math.exp(toy_log_density(z))  # noqa: E731
    mass = np.array([integrate.quad(dens, lo, hi, points=[TOY_ANCHOR] if lo < TOY_ANCHOR < hi else None)[0]
                     for lo, hi in zip(edges[:-1], edges[1:])])
    return edges, mass / _whole_line(dens)


def toy_grid_mean():
    dens = lambda z: math.exp(toy_log_density(z))  # noqa: E731
    return _whole_line(lambda z: z * dens(z)) / _whole_line(dens)


def toy_chain(n_updates, seed=0, scale=1.2):
    t = TOY
    net = AdjacencyMatrix([[0, 1], [1, 0]])
    model = ChainModel(net, np.array([t["x0"], 0.0]), np.array([t["y0"], 0.0]), 1, "continuous")
    params = MediationParams([t["i1"]], t["i2"], [t["a"]], [t["b"]], t["c_prime"], t["alpha"],
                             [t["sigma1_sq"]], t["sigma2_sq"])
    state = ChainState(params=params, z=np.array([[0.0], [TOY_ANCHOR]]),
                       z_scales=np.array([scale, scale]))
    rng = np.random.default_rng(seed)
    active = np.array([True, False])
    out = np.empty(n_updates)
    for k in range(n_updates):
        update_positions(state, model, rng, active)
        out[k] = state.z[0, 0]
    return out, state


def total_variation(samples, edges, probs):
    hist, _ = np.histogram(samples, bins=edges)
    # mass outside the grid counts fully against the chain
    outside = 1.0 - hist.sum() / len(samples)
    return 0.5 * (np.abs(hist / len(samples) - probs).sum() + outside + (1.0 - probs.sum()))


# ---------------------------------------------------------------- conjugate regression

def conjugate_moments(design, target, ig_shape, ig_rate):
    """Posterior moments of (beta, sigma^2) for y ~ N(X beta, sigma^2) with a flat
    prior on beta and IG(shape, rate) on sigma^2.

    Marginally beta is multivariate t with centre the OLS fit and scale
    E[sigma^2] (X'X)^-1; sigma^2 is IG(shape + (n-p)/2, rate + SSR/2).
    """
    n, p = design.shape
    xtx = design.T @ design
    beta = np.linalg.solve(xtx, design.T @ target)
    ssr = float(np.sum((target - design @ beta) ** 2))
    shape = ig_shape + (n - p) / 2.0
    rate = ig_rate + ssr / 2.0
    s2_mean = rate / (shape - 1.0)
    beta_sd = np.sqrt(s2_mean * np.diag(np.linalg.inv(xtx)))
    s2_sd = s2_mean / math.sqrt(shape - 2.0)
    return {"beta": beta, "beta_sd": beta_sd, "sigma2": s2_mean, "sigma2_sd": s2_sd}


def conjugate_fixture(n=50, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    z = 0.3 + 0.6 * x + 0.8 * rng.standard_normal(n)
    y = 0.1 + 0.5 * z + 0.2 * x + rng.standard_normal(n)
    dist = np.abs(z[:, None] - z[None])
    m = np.triu(rng.random((n, n)) < expit(-dist), 1).astype(int)
    return AdjacencyMatrix(m + m.T), ActorData(x, y), z[:, None]


def conjugate_run(n_iter=20000, burn_in=6000, seed=3):
    """Clamped-position chain and the closed-form answer for the mediator block."""
    net, data, z = conjugate_fixture()
    priors = PriorSpec()
    res = run_chain(net, data, 1, ChainConfig(n_iter=n_iter, burn_in=burn_in, seed=seed,
                                              clamp_positions=True),
                    priors=priors, init_positions=z)
    design = np.column_stack([np.ones(len(data.x)), data.x])
    exact = conjugate_moments(design, z[:, 0], priors.ig_shape, priors.ig_rate)
    return res, exact


def conjugate_checks(res, exact):
    """(name, sampled mean, exact mean, mcse) for i1, a and sigma1^2."""
    s = res.summary
    return [("i1", s["i1_1"].mean, exact["beta"][0], s["i1_1"].mcse),
            ("a", s["a_1"].mean, exact["beta"][1], s["a_1"].mcse),
            ("sigma1_sq", s["sigma1_sq_1"].mean, exact["sigma2"], s["sigma1_sq_1"].mcse)]
