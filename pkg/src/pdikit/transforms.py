"""Constraint transforms between unconstrained and constrained parameter space.

Samplers walk in unconstrained R^d; models live on products of identity,
positive, and simplex blocks. Each block maps back and forth and reports the
log-absolute-Jacobian of the unconstrained -> constrained direction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["IdentityBlock", "PositiveBlock", "SimplexBlock", "BlockTransform"]


@dataclass(frozen=True)
class IdentityBlock:
    size: int

    @property
    def unconstrained_size(self) -> int:
        return self.size

    @property
    def constrained_size(self) -> int:
        return self.size

    def constrain(self, z):
        return np.asarray(z, dtype=np.float64)

    def unconstrain(self, theta):
        return np.asarray(theta, dtype=np.float64)

    def log_jacobian(self, z):
        return 0.0


@dataclass(frozen=True)
class PositiveBlock:
    """Componentwise exp/log for positivity constraints."""

    size: int

    @property
    def unconstrained_size(self) -> int:
        return self.size

    @property
    def constrained_size(self) -> int:
        return self.size

    def constrain(self, z):
        return np.exp(z)

    def unconstrain(self, theta):
        theta = np.asarray(theta, dtype=np.float64)
        if np.any(theta <= 0):
            raise ValueError("positive block requires strictly positive values")
        return np.log(theta)

    def log_jacobian(self, z):
        return float(np.sum(z))


@dataclass(frozen=True)
class SimplexBlock:
    """Stick-breaking map from K-1 unconstrained values to a K-simplex.

    Each z_k is squashed through a logistic with a -log(K-k) offset so z = 0
    lands on the uniform simplex. The Jacobian is triangular, so its log-abs
    determinant is the sum of the per-stick diagonal terms.
    """

    size: int  # number of simplex components K

    def __post_init__(self):
        if self.size < 2:
            raise ValueError("simplex block needs at least 2 components")

    @property
    def unconstrained_size(self) -> int:
        return self.size - 1

    @property
    def constrained_size(self) -> int:
        return self.size

    def constrain(self, z):
        z = np.asarray(z, dtype=np.float64)
        x = np.empty(self.size)
        stick = 1.0
        for k in range(self.size - 1):
            u = _sigmoid(z[k] - np.log(self.size - 1 - k))
            x[k] = stick * u
            stick *= 1.0 - u
        x[-1] = stick
        return x

    def unconstrain(self, theta):
        theta = np.asarray(theta, dtype=np.float64)
        if np.any(theta <= 0) or abs(theta.sum() - 1.0) > 1e-8:
            raise ValueError("simplex block requires positive values summing to 1")
        z = np.empty(self.size - 1)
        stick = 1.0
        for k in range(self.size - 1):
            u = theta[k] / stick
            z[k] = np.log(u) - np.log1p(-u) + np.log(self.size - 1 - k)
            stick -= theta[k]
        return z

    def log_jacobian(self, z):
        z = np.asarray(z, dtype=np.float64)
        total = 0.0
        log_stick = 0.0
        for k in range(self.size - 1):
            a = z[k] - np.log(self.size - 1 - k)
            # log u + log(1-u) for u = sigmoid(a), computed stably
            total += log_stick - np.logaddexp(0.0, -a) - np.logaddexp(0.0, a)
            log_stick += -np.logaddexp(0.0, a)  # log(1 - u)
        return float(total)


def _sigmoid(a: float) -> float:
    if a >= 0:
        return 1.0 / (1.0 + np.exp(-a))
    e = np.exp(a)
    return e / (1.0 + e)


@dataclass(frozen=True)
class BlockTransform:
    """Concatenation of constraint blocks covering a full parameter vector."""

    blocks: tuple

    def __init__(self, blocks):
        object.__setattr__(self, "blocks", tuple(blocks))

    @property
    def unconstrained_dim(self) -> int:
        return sum(b.unconstrained_size for b in self.blocks)

    @property
    def constrained_dim(self) -> int:
        return sum(b.constrained_size for b in self.blocks)

    def constrain(self, z):
        z = np.asarray(z, dtype=np.float64)
        out = np.empty(self.constrained_dim)
        i = j = 0
        for b in self.blocks:
            out[j : j + b.constrained_size] = b.constrain(z[i : i + b.unconstrained_size])
            i += b.unconstrained_size
            j += b.constrained_size
        return out

    def unconstrain(self, theta):
        theta = np.asarray(theta, dtype=np.float64)
        out = np.empty(self.unconstrained_dim)
        i = j = 0
        for b in self.blocks:
            out[i : i + b.unconstrained_size] = b.unconstrain(
                theta[j : j + b.constrained_size]
            )
            i += b.unconstrained_size
            j += b.constrained_size
        return out

    def log_jacobian(self, z):
        z = np.asarray(z, dtype=np.float64)
        total = 0.0
        i = 0
        for b in self.blocks:
            total += b.log_jacobian(z[i : i + b.unconstrained_size])
            i += b.unconstrained_size
        return float(total)
