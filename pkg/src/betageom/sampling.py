"""Seeded random variates for the beta and beta-geometric laws.

Beta-geometric delays are drawn in two stages: a per-couple fecundability
from the beta law, then a geometric delay given that fecundability. Streams
are keyed by ``(base_seed, stream_id)`` on a counter-based Philox generator,
so replicate ``i`` of a simulation draws the same numbers whichever worker
runs it, and in whatever order.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .model import BetaGeometricLaw, BetaLaw, GeometricLaw

__all__ = ["DEFAULT_SEED", "SeedSpec", "generator", "sample_beta", "sample_bg", "sample_geometric"]

DEFAULT_SEED = 20240101
_U64 = 1 << 64


@dataclass(frozen=True)
class SeedSpec:
    base_seed: int = DEFAULT_SEED
    stream_id: int = 0

    def __post_init__(self):
        for name in ("base_seed", "stream_id"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or not 0 <= value < _U64:
                raise DomainError(f"{name} must be an unsigned 64-bit integer, got {value!r}")


def generator(seed):
    """Fresh :class:`numpy.random.Generator` for one stream."""
    ss = np.random.SeedSequence(int(seed.base_seed), spawn_key=(int(seed.stream_id),))
    return np.random.Generator(np.random.Philox(ss))


def _check_count(count):
    if not isinstance(count, (int, np.integer)) or count < 1:
        raise DomainError(f"count must be a positive integer, got {count!r}")


def _geometric_by_inversion(rng, theta):
    # 1 - U lies in (0, 1], so the log is finite
    u = 1.0 - rng.random(np.shape(theta))
    with np.errstate(divide="ignore"):
        x = np.floor(np.log(u) / np.log1p(-theta))
    x = np.where(theta >= 1.0, 0.0, x)
    return np.minimum(x, np.iinfo(np.int64).max // 2).astype(np.int64)


def sample_beta(law, seed, count):
    if not isinstance(law, BetaLaw):
        raise DomainError("sample_beta needs a BetaLaw")
    _check_count(count)
    return generator(seed).beta(law.alpha, law.beta, size=count)


def sample_geometric(law, seed, count):
    """Geometric delays on x >= 0 by inversion, floor(ln U / ln(1 - theta))."""
    if not isinstance(law, GeometricLaw):
        raise DomainError("sample_geometric needs a GeometricLaw")
    _check_count(count)
    theta = np.full(count, float(law.theta))
    return _geometric_by_inversion(generator(seed), theta)


def sample_bg(law, seed, count):
    """Beta-geometric delays: theta_i ~ Beta(alpha, beta), then X_i | theta_i ~ Geometric."""
    if not isinstance(law, BetaGeometricLaw):
        raise DomainError("sample_bg needs a BetaGeometricLaw")
    _check_count(count)
    rng = generator(seed)
    theta = rng.beta(law.alpha, law.beta, size=count)
    return _geometric_by_inversion(rng, theta)
