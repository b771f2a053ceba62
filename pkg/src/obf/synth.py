"""Seeded generator for correlated two-class screening benchmarks.

The data model mixes four feature roles:

* global markers    -- equicorrelated blocks whose mean vector (and possibly
                       variance scale) differs between the classes;
* heterogeneous markers -- blocks shifted only inside one of two hidden
                       subclasses of class 1, half the blocks per group using
                       each subclass orientation;
* low-variance nulls -- equicorrelated blocks identically distributed in
                       both classes;
* high-variance nulls -- independent two-component Gaussian mixtures with a
                       fresh mixing weight per feature, identical in both
                       classes.

Blocked roles are spread evenly over parameter groups, each group scaling the
shared equicorrelation matrix by its own class-0/class-1 variance pair.

Determinism contract: output is a pure function of (config, n, seed),
bit-identical across platforms, runs, and thread counts. Each block (and
each high-variance feature) draws from its own counter-based stream, so
generation order never matters; see ``rng`` for the exact bit derivations.
Stream layout: (seed, 0) drives the column placement permutation,
(seed, 1, b) the b-th correlated block, (seed, 2, h) the h-th high-variance
feature. Within a block, normals fill row-major (sample-major) order.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigInvalid, NotPD
from .rng import Stream

GLOBAL = "GLOBAL"
HETERO = "HETERO"
LOWVAR_NULL = "LOWVAR_NULL"
HIGHVAR_NULL = "HIGHVAR_NULL"

FULL_GROUP_SIGMAS = ((0.16, 0.16), (0.49, 0.49), (0.09, 0.25), (0.49, 0.64))
DESK_GROUP_SIGMAS = ((0.16, 0.16), (0.09, 0.25))


@dataclass(frozen=True)
class SynthConfig:
    n_features: int
    n_global: int
    n_hetero: int
    n_lowvar: int
    n_highvar: int
    block_size: int = 5
    rho: float = 0.8
    n_groups: int = 4
    group_sigmas: tuple = FULL_GROUP_SIGMAS
    n_subclasses: int = 2
    mu1_pattern: str = "harmonic"

    def validate(self) -> None:
        counts = (self.n_global, self.n_hetero, self.n_lowvar, self.n_highvar)
        if any(c < 0 for c in counts) or self.n_features <= 0:
            raise ConfigInvalid("feature counts must be non-negative")
        if sum(counts) != self.n_features:
            raise ConfigInvalid("role counts must sum to n_features")
        k, g = self.block_size, self.n_groups
        if k < 1 or g < 1:
            raise ConfigInvalid("block_size and n_groups must be positive")
        for name, c in (("n_global", self.n_global), ("n_hetero", self.n_hetero),
                        ("n_lowvar", self.n_lowvar)):
            if c % k != 0:
                raise ConfigInvalid(f"{name} must be divisible by block_size")
            if (c // k) % g != 0:
                raise ConfigInvalid(f"{name} blocks must split evenly over groups")
        if self.n_highvar % g != 0:
            raise ConfigInvalid("n_highvar must be divisible by n_groups")
        if self.n_hetero and (self.n_hetero // (k * g)) % 2 != 0:
            raise ConfigInvalid(
                "hetero blocks per group must be even (two orientation halves)"
            )
        if k > 1 and not (-1.0 / (k - 1) < self.rho < 1.0):
            raise ConfigInvalid("rho outside the positive-definite range")
        if len(self.group_sigmas) != g:
            raise ConfigInvalid("group_sigmas must have one (s0, s1) pair per group")
        for pair in self.group_sigmas:
            if len(pair) != 2 or pair[0] <= 0.0 or pair[1] <= 0.0:
                raise ConfigInvalid("group variance pairs must be positive")
        if self.n_subclasses < 1:
            raise ConfigInvalid("n_subclasses must be positive")
        if self.n_hetero and self.n_subclasses != 2:
            raise ConfigInvalid("heterogeneous markers require exactly 2 subclasses")
        if self.mu1_pattern != "harmonic":
            raise ConfigInvalid(f"unknown mu1_pattern {self.mu1_pattern!r}")

    def mu1(self) -> np.ndarray:
        """Shifted-class mean vector [1, 1/2, ..., 1/k]."""
        return 1.0 / np.arange(1, self.block_size + 1, dtype=np.float64)

    def to_dict(self) -> dict:
        return {
            "n_features": self.n_features,
            "n_global": self.n_global,
            "n_hetero": self.n_hetero,
            "n_lowvar": self.n_lowvar,
            "n_highvar": self.n_highvar,
            "block_size": self.block_size,
            "rho": self.rho,
            "n_groups": self.n_groups,
            "group_sigmas": [list(p) for p in self.group_sigmas],
            "n_subclasses": self.n_subclasses,
            "mu1_pattern": self.mu1_pattern,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SynthConfig":
        d = dict(d)
        if "group_sigmas" in d:
            d["group_sigmas"] = tuple(tuple(p) for p in d["group_sigmas"])
        return cls(**d)

    def digest(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def full_config() -> SynthConfig:
    """Full-size benchmark: 20000 features, 100 markers, four groups."""
    return SynthConfig(
        n_features=20000, n_global=20, n_hetero=80,
        n_lowvar=11900, n_highvar=8000,
        block_size=5, rho=0.8, n_groups=4,
        group_sigmas=FULL_GROUP_SIGMAS,
    )


def desk_config() -> SynthConfig:
    """Small benchmark that keeps the role ratios: 2000 features, 50 markers.

    Two parameter groups (one equal-variance pair, one variance-split pair)
    keep every role divisible over groups at this size.
    """
    return SynthConfig(
        n_features=2000, n_global=10, n_hetero=40,
        n_lowvar=1150, n_highvar=800,
        block_size=5, rho=0.8, n_groups=2,
        group_sigmas=DESK_GROUP_SIGMAS,
    )


def _cholesky_lower(a: np.ndarray) -> np.ndarray:
    """Row-by-row lower Cholesky with plain loops (bit-stable, tiny k)."""
    n = a.shape[0]
    low = np.zeros_like(a)
    for i in range(n):
        for j in range(i + 1):
            acc = a[i, j]
            for t in range(j):
                acc -= low[i, t] * low[j, t]
            if i == j:
                if acc <= 0.0:
                    raise NotPD("covariance matrix is not positive definite")
                low[i, i] = math.sqrt(acc)
            else:
                low[i, j] = acc / low[j, j]
    return low


def block_covariance(k: int, rho: float, sigma: float):
    """Equicorrelated k x k covariance (diagonal sigma, off-diagonal
    sigma * rho) and its lower Cholesky factor."""
    cov = np.full((k, k), sigma * rho, dtype=np.float64)
    np.fill_diagonal(cov, sigma)
    return cov, _cholesky_lower(cov)


def _correlate(z: np.ndarray, low: np.ndarray) -> np.ndarray:
    """Apply the Cholesky factor to iid normals row-wise, BLAS-free."""
    n, k = z.shape
    out = np.zeros((n, k), dtype=np.float64)
    for j in range(k):
        col = out[:, j]
        for t in range(j + 1):
            col += low[j, t] * z[:, t]
    return out


@dataclass
class LabeledMatrix:
    values: np.ndarray
    labels: np.ndarray
    truth: tuple
    seed: int
    config_digest: str
    subclass: Optional[np.ndarray] = field(default=None, repr=False)


def truth_set(matrix: LabeledMatrix) -> frozenset:
    """Column indices of the true markers."""
    return frozenset(
        f for f, tag in enumerate(matrix.truth) if tag in (GLOBAL, HETERO)
    )


def _canonical_blocks(config: SynthConfig):
    """Deterministic (role, group, orientation) list of correlated blocks.

    Blocks cycle over groups so each group gets the same count per role; the
    per-group hetero sequence is split into two halves, the first shifting
    subclass 1 and the second shifting subclass 0.
    """
    g = config.n_groups
    k = config.block_size
    blocks = []
    for b in range(config.n_global // k):
        blocks.append((GLOBAL, b % g, None))
    hb = config.n_hetero // k
    per_group = hb // g if g else 0
    for b in range(hb):
        orientation = 1 if (b // g) < per_group // 2 else 0
        blocks.append((HETERO, b % g, orientation))
    for b in range(config.n_lowvar // k):
        blocks.append((LOWVAR_NULL, b % g, None))
    return blocks


def generate(config: SynthConfig, n: int, seed: int) -> LabeledMatrix:
    """Draw an n-sample labeled matrix; a pure function of (config, n, seed).

    Rows 0..n/2-1 are class 0 and the rest class 1; within class 1 the first
    ceil(n1 / 2) rows form subclass 0 (the extra point lands there when n1 is
    odd). Column positions of all features are scattered by the placement
    permutation, with role tags recorded per column.
    """
    config.validate()
    if n < 4 or n % 2 != 0:
        raise ConfigInvalid("n must be an even integer >= 4")
    n0 = n // 2
    n1 = n - n0
    labels = np.zeros(n, dtype=np.int8)
    labels[n0:] = 1

    # subclass ids within class 1 (-1 elsewhere)
    subclass = np.full(n, -1, dtype=np.int8)
    n_sub0 = (n1 + 1) // 2
    subclass[n0:n0 + n_sub0] = 0
    subclass[n0 + n_sub0:] = 1

    k = config.block_size
    mu1 = config.mu1()
    chol_cache: dict[float, np.ndarray] = {}

    def chol(sigma: float) -> np.ndarray:
        if sigma not in chol_cache:
            chol_cache[sigma] = block_covariance(k, config.rho, sigma)[1]
        return chol_cache[sigma]

    perm = Stream(seed, 0).permutation(config.n_features)
    values = np.empty((n, config.n_features), dtype=np.float64)
    truth = [""] * config.n_features

    blocks = _canonical_blocks(config)
    col = 0
    for b, (role, group, orientation) in enumerate(blocks):
        sigma0, sigma1 = config.group_sigmas[group]
        z = Stream(seed, 1, b).normals(n * k).reshape(n, k)
        x = _correlate(z, chol(sigma0))
        if role == GLOBAL:
            shifted = labels == 1
        elif role == HETERO:
            shifted = subclass == orientation
        else:
            shifted = None
        if shifted is not None and np.any(shifted):
            x[shifted] = _correlate(z[shifted], chol(sigma1)) + mu1
        cols = perm[col:col + k]
        values[:, cols] = x
        for c in cols:
            truth[c] = role
        col += k

    for h in range(config.n_highvar):
        sigma0, sigma1 = config.group_sigmas[h % config.n_groups]
        stream = Stream(seed, 2, h)
        p = stream.uniforms(1)[0]
        comp = stream.uniforms(n) < p
        z = stream.normals(n)
        column = np.where(comp, math.sqrt(sigma0) * z, 1.0 + math.sqrt(sigma1) * z)
        c = perm[col]
        values[:, c] = column
        truth[c] = HIGHVAR_NULL
        col += 1

    return LabeledMatrix(
        values=values,
        labels=labels,
        truth=tuple(truth),
        seed=seed,
        config_digest=config.digest(),
        subclass=subclass,
    )
