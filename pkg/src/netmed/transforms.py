"""Isometries of the latent space and the least-squares refit used to check effect invariance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import orthogonal_procrustes

from .lsm import LatentConfiguration
from .mediation import mediation_effect

ORTHO_TOL = 1e-10


class RankDeficientError(ValueError):
    pass


@dataclass(frozen=True)
class Isometry:
    """The map z -> R z + t with R orthogonal (rotation or reflection)."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        R = np.atleast_2d(np.asarray(self.rotation, dtype=float))
        t = np.atleast_1d(np.asarray(self.translation, dtype=float))
        if R.shape != (len(t), len(t)):
            raise ValueError(f"rotation {R.shape} does not match translation length {len(t)}")
        if np.max(np.abs(R.T @ R - np.eye(len(t)))) > ORTHO_TOL:
            raise ValueError("rotation matrix is not orthogonal")
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @property
    def dim(self) -> int:
        return len(self.translation)

    @classmethod
    def identity(cls, dim: int) -> "Isometry":
        return cls(np.eye(dim), np.zeros(dim))

    @classmethod
    def translation_only(cls, t) -> "Isometry":
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return cls(np.eye(len(t)), t)

    @classmethod
    def reflection(cls, dim: int, axis: int = -1) -> "Isometry":
        """Reflection about the hyperplane orthogonal to coordinate ``axis``."""
        R = np.eye(dim)
        R[axis, axis] = -1.0
        return cls(R, np.zeros(dim))

    def then(self, other: "Isometry") -> "Isometry":
        """Composition: apply ``self`` first, then ``other``."""
        return Isometry(other.rotation @ self.rotation,
                        other.rotation @ self.translation + other.translation)

    def apply_points(self, z: np.ndarray) -> np.ndarray:
        return z @ self.rotation.T + self.translation


def random_orthogonal(dim: int, rng=None) -> np.ndarray:
    """Haar-distributed orthogonal matrix via QR with sign-corrected diagonal."""
    rng = np.random.default_rng(rng)
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    return q * np.sign(np.diag(r))


def random_isometry(dim: int, rng=None, translation_scale: float = 3.0) -> Isometry:
    rng = np.random.default_rng(rng)
    return Isometry(random_orthogonal(dim, rng), translation_scale * rng.standard_normal(dim))


def apply_isometry(config, iso: Isometry) -> LatentConfiguration:
    z = np.asarray(getattr(config, "positions", config), dtype=float)
    if z.ndim == 1:
        z = z[:, None]
    if z.shape[1] != iso.dim:
        raise ValueError(f"configuration has D={z.shape[1]}, isometry has D={iso.dim}")
    return LatentConfiguration(iso.apply_points(z))


def procrustes_align(z: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """Rotate/reflect and translate ``z`` to best match ``ref`` in least squares."""
    zc = z - z.mean(axis=0)
    rc = ref - ref.mean(axis=0)
    R, _ = orthogonal_procrustes(zc, rc)
    return zc @ R + ref.mean(axis=0)


def _lstsq(design: np.ndarray, target: np.ndarray) -> np.ndarray:
    if np.linalg.matrix_rank(design) < design.shape[1]:
        raise RankDeficientError("design matrix is rank deficient (constant x or collinear positions?)")
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    return coef


def refit_paths(config, x, y):
    """Least-squares path estimates ``(a_hat, b_hat, c_hat)``.

    ``a_hat[d]`` regresses position coordinate d on x (with intercept);
    ``(b_hat, c_hat)`` regress y on all coordinates and x (with intercept).
    """
    z = np.asarray(getattr(config, "positions", config), dtype=float)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if z.ndim == 1:
        z = z[:, None]
    n, d = z.shape
    if len(x) != n or len(y) != n:
        raise ValueError("x and y must have one entry per actor")
    if n <= d + 2:
        raise ValueError(f"need N > D + 2 observations, got N={n}, D={d}")
    ones = np.ones(n)
    a_hat = _lstsq(np.column_stack([ones, x]), z)[1]
    coef = _lstsq(np.column_stack([ones, z, x]), y)
    return a_hat, coef[1:d + 1], float(coef[d + 1])


def invariance_check(config, x, y, iso: Isometry) -> tuple[float, float]:
    """Absolute change in refit mediation effect and direct effect under ``iso``."""
    a0, b0, c0 = refit_paths(config, x, y)
    a1, b1, c1 = refit_paths(apply_isometry(config, iso), x, y)
    return abs(mediation_effect(a1, b1) - mediation_effect(a0, b0)), abs(c1 - c0)


def invariance_suite(n_isometries: int = 1000, n_instances: int = 20, n_actors: int = 60,
                     dim: int = 3, seed: int = 0) -> dict:
    """Apply random isometries to random instances and report the worst deltas."""
    rng = np.random.default_rng(seed)
    instances = []
    for _ in range(n_instances):
        x = rng.standard_normal(n_actors)
        z = 0.5 * np.outer(x, rng.standard_normal(dim)) + rng.standard_normal((n_actors, dim))
        y = z @ rng.standard_normal(dim) + 0.3 * x + rng.standard_normal(n_actors)
        instances.append((z, x, y))
    max_med = max_direct = 0.0
    for k in range(n_isometries):
        z, x, y = instances[k % n_instances]
        dm, dc = invariance_check(z, x, y, random_isometry(dim, rng))
        max_med, max_direct = max(max_med, dm), max(max_direct, dc)
    return {"n_isometries": n_isometries, "n_instances": n_instances,
            "max_delta_med": max_med, "max_delta_direct": max_direct}
