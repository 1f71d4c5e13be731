"""Seeded image corruption: additive Gaussian and salt-and-pepper."""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidProbabilityError, NegativeInputError
from .rng import make_rng

GAUSSIAN_LEVEL_DEFAULT = 0.10
SALT_PEPPER_LEVEL_DEFAULT = 0.2


@dataclass(frozen=True)
class NoiseSpec:
    kind: str  # "gaussian" | "salt-pepper"
    level: float
    seed: int
    gaussian_scale: str = "per-pixel"  # or "total"

    def __post_init__(self):
        if self.kind not in ("gaussian", "salt-pepper"):
            raise ValueError("unknown noise kind %r" % self.kind)
        if self.level < 0:
            raise NegativeInputError("level must be nonnegative")
        if self.kind == "salt-pepper" and 2 * self.level > 1:
            raise InvalidProbabilityError("salt-pepper needs 2*level <= 1")

    def apply(self, x) -> np.ndarray:
        if self.kind == "gaussian":
            return add_gaussian(x, self.level, self.seed, scale=self.gaussian_scale)
        return add_salt_pepper(x, self.level, self.seed)


def add_gaussian(x, sigma_rel: float, seed: int, scale: str = "per-pixel") -> np.ndarray:
    """Additive i.i.d. Gaussian noise, deterministic in seed, unclamped.

    With scale="per-pixel" (default) the per-pixel standard deviation is
    sigma_rel * ||x|| / sqrt(d); "total" uses sigma_rel * ||x|| directly.
    """
    if sigma_rel < 0:
        raise NegativeInputError("sigma_rel must be nonnegative")
    x = np.asarray(x, dtype=np.float64)
    if sigma_rel == 0:
        return x.copy()
    sigma = sigma_rel * float(np.linalg.norm(x))
    if scale == "per-pixel":
        sigma /= np.sqrt(x.size)
    elif scale != "total":
        raise ValueError("scale must be 'per-pixel' or 'total'")
    rng = make_rng(seed)
    return x + sigma * rng.standard_normal(x.size).reshape(x.shape)


def add_salt_pepper(x, p: float, seed: int) -> np.ndarray:
    """Set each pixel to 1 with probability p and to 0 with probability p."""
    if not 0.0 <= p <= 0.5:
        raise InvalidProbabilityError("p must be in [0, 0.5]")
    x = np.asarray(x, dtype=np.float64)
    out = x.copy()
    if p == 0:
        return out
    u = make_rng(seed).random(x.size).reshape(x.shape)
    out[u < p] = 1.0
    out[(u >= p) & (u < 2 * p)] = 0.0
    return out
