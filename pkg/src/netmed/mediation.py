"""Mediation model over latent positions: effects, generator variances, densities."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr


class InfeasibleConditionError(ValueError):
    """Generator parameters imply a nonpositive residual variance."""


@dataclass
class MediationParams:
    """Parameters of the latent space model plus the mediation regressions.

    Vectors ``i1``, ``a``, ``b`` and ``sigma1_sq`` have one entry per latent
    dimension.
    """

    i1: np.ndarray
    i2: float
    a: np.ndarray
    b: np.ndarray
    c_prime: float
    alpha: float
    sigma1_sq: np.ndarray
    sigma2_sq: float

    def __post_init__(self):
        self.i1 = np.atleast_1d(np.asarray(self.i1, dtype=float))
        self.a = np.atleast_1d(np.asarray(self.a, dtype=float))
        self.b = np.atleast_1d(np.asarray(self.b, dtype=float))
        self.sigma1_sq = np.atleast_1d(np.asarray(self.sigma1_sq, dtype=float))
        self.i2 = float(self.i2)
        self.c_prime = float(self.c_prime)
        self.alpha = float(self.alpha)
        self.sigma2_sq = float(self.sigma2_sq)
        d = len(self.a)
        if not (len(self.i1) == len(self.b) == len(self.sigma1_sq) == d):
            raise ValueError("i1, a, b and sigma1_sq must share the latent dimension")
        if np.any(self.sigma1_sq <= 0) or self.sigma2_sq <= 0:
            raise ValueError("residual variances must be strictly positive")

    @property
    def dim(self) -> int:
        return len(self.a)

    def copy(self) -> "MediationParams":
        return MediationParams(self.i1.copy(), self.i2, self.a.copy(), self.b.copy(),
                               self.c_prime, self.alpha, self.sigma1_sq.copy(), self.sigma2_sq)

    def effects(self) -> "EffectEstimates":
        med = mediation_effect(self.a, self.b)
        return EffectEstimates(med=med, direct=self.c_prime, total=total_effect(med, self.c_prime))

    def to_dict(self) -> dict:
        return {"i1": self.i1.tolist(), "i2": self.i2, "a": self.a.tolist(), "b": self.b.tolist(),
                "c_prime": self.c_prime, "alpha": self.alpha,
                "sigma1_sq": self.sigma1_sq.tolist(), "sigma2_sq": self.sigma2_sq}

    @classmethod
    def from_dict(cls, d: dict) -> "MediationParams":
        keys = ("i1", "i2", "a", "b", "c_prime", "alpha", "sigma1_sq", "sigma2_sq")
        return cls(**{k: d[k] for k in keys})


@dataclass(frozen=True)
class EffectEstimates:
    med: float
    direct: float
    total: float

    def to_dict(self) -> dict:
        return {"med": self.med, "direct": self.direct, "total": self.total}


def mediation_effect(a, b) -> float:
    """Network mediation effect: the inner product of the two path vectors."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if a.shape != b.shape:
        raise ValueError(f"path vectors differ in length: {a.shape} vs {b.shape}")
    return float(a @ b)


def total_effect(med: float, c_prime: float) -> float:
    return c_prime + med


def mediator_residual_variance(a_d: float) -> float:
    """Residual variance that gives a unit-variance mediator when var(X)=1."""
    if abs(a_d) >= 1:
        raise InfeasibleConditionError(
            f"|a_d| = {abs(a_d):.4g} >= 1 leaves no room for mediator residual variance")
    return 1.0 - a_d * a_d


def outcome_residual_variance(a, b, c_prime: float) -> float:
    """Residual variance 1 - (a.b + c')^2 - sum_d b_d^2 (1 - a_d^2) for a unit-variance Y."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if a.shape != b.shape:
        raise ValueError("path vectors differ in length")
    v = 1.0 - (a @ b + c_prime) ** 2 - np.sum(b * b * (1.0 - a * a))
    if v <= 0:
        raise InfeasibleConditionError(
            f"outcome residual variance 1 - (sum a_d b_d + c')^2 - sum b_d^2 (1 - a_d^2) "
            f"= {v:.4g} is not positive (a={a.tolist()}, b={b.tolist()}, c'={c_prime})")
    return float(v)


def _norm_logpdf(v, mean, var):
    return -0.5 * (np.log(2 * np.pi * var) + (v - mean) ** 2 / var)


def mediation_log_density(params: MediationParams, x, z, y) -> float:
    """Joint Gaussian log density of positions and continuous outcome given X."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z = np.asarray(getattr(z, "positions", z), dtype=float).reshape(len(x), -1)
    if z.shape[1] != params.dim or len(y) != len(x):
        raise ValueError("inconsistent shapes for x, z, y and params")
    mu_z = params.i1[None, :] + np.outer(x, params.a)
    lz = _norm_logpdf(z, mu_z, params.sigma1_sq[None, :]).sum()
    mu_y = params.i2 + z @ params.b + params.c_prime * x
    ly = _norm_logpdf(y, mu_y, params.sigma2_sq).sum()
    return float(lz + ly)


def linear_predictor(params: MediationParams, z, x):
    z = np.asarray(z, dtype=float)
    return params.i2 + z @ params.b + params.c_prime * np.asarray(x, dtype=float)


def probit_outcome_probability(params: MediationParams, z_i, x_i) -> float:
    """P(Y_i = 1) under the probit outcome model, with unit-variance residual."""
    return float(ndtr(linear_predictor(params, np.atleast_1d(z_i), x_i)))
