"""System parameters and the cyclic index algebra shared by every module.

Sub-file indices live in Z_K. User ids are recovered from sub-file index
sums by multiplying with the inverse of ``k`` modulo ``K``.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence


class InvalidParams(ValueError):
    """Parameters outside the model (K < 2, k not in [1, K], z < 2, ...)."""


class UnsupportedParameters(InvalidParams):
    """Valid instance the delivery scheme cannot serve (gcd(k, K) != 1 with kz < K)."""


class InvalidDemands(ValueError):
    pass


@dataclass(frozen=True)
class SystemParams:
    """A multi-access instance: N files, K users/caches, k sub-files per cache, z caches per user."""

    num_files: int
    num_users: int
    cache_subfiles: int
    access_degree: int

    def __post_init__(self):
        N, K, k, z = self.num_files, self.num_users, self.cache_subfiles, self.access_degree
        if N < 1:
            raise InvalidParams(f"need at least one file, got N={N}")
        if K < 2:
            raise InvalidParams(f"need at least two users, got K={K}")
        if not 1 <= k <= K:
            raise InvalidParams(f"cache_subfiles k={k} must lie in [1, {K}]")
        if not 2 <= z <= K:
            raise InvalidParams(f"access degree z={z} must lie in [2, {K}]")
        if k * z < K and math.gcd(k, K) != 1:
            raise UnsupportedParameters(
                f"gcd(k, K) = gcd({k}, {K}) = {math.gcd(k, K)}; delivery requires k invertible mod K"
            )

    # Short aliases matching the usual notation.
    @property
    def N(self) -> int:
        return self.num_files

    @property
    def K(self) -> int:
        return self.num_users

    @property
    def k(self) -> int:
        return self.cache_subfiles

    @property
    def z(self) -> int:
        return self.access_degree

    @property
    def kz(self) -> int:
        return self.cache_subfiles * self.access_degree

    @property
    def gamma(self) -> Fraction:
        return Fraction(self.cache_subfiles, self.num_users)

    @property
    def deficit(self) -> int:
        """Number of sub-files each user must receive, K - kz (may be <= 0)."""
        return self.num_users - self.kz

    def __str__(self):
        return f"N={self.N} K={self.K} k={self.k} z={self.z}"


def mod_index(x: int, K: int) -> int:
    return x % K


def resolve_user(x: int, params: SystemParams) -> int:
    """Return the user alpha with k * alpha = x (mod K)."""
    K, k = params.K, params.k
    try:
        inv = pow(k, -1, K)
    except ValueError:
        raise UnsupportedParameters(f"k={k} is not invertible modulo K={K}") from None
    return (inv * x) % K


def accessible_subfiles(alpha: int, params: SystemParams) -> tuple[int, ...]:
    """Sub-file indices reachable by user ``alpha``: the window k*alpha .. k*(alpha+z)-1 (mod K)."""
    K = params.K
    start = params.k * alpha
    return tuple((start + i) % K for i in range(min(params.kz, K)))


def missing_subfiles(alpha: int, params: SystemParams) -> tuple[int, ...]:
    K = params.K
    start = params.k * (alpha + params.z)
    return tuple((start + i) % K for i in range(max(params.deficit, 0)))


def check_demands(demands: Sequence[int], params: SystemParams) -> tuple[int, ...]:
    d = tuple(int(x) for x in demands)
    if len(d) != params.K:
        raise InvalidDemands(f"demand vector has length {len(d)}, expected K={params.K}")
    bad = [x for x in d if not 0 <= x < params.N]
    if bad:
        raise InvalidDemands(f"file indices {bad} outside [0, {params.N - 1}]")
    return d


def worst_case_demands(params: SystemParams, seed: int | None = None) -> tuple[int, ...]:
    """Distinct demands: a seeded permutation of the library truncated to K users."""
    if params.N < params.K:
        raise InvalidDemands(f"distinct demands need N >= K (N={params.N}, K={params.K})")
    files = list(range(params.N))
    random.Random(seed).shuffle(files)
    return tuple(files[: params.K])


def default_demands(params: SystemParams) -> tuple[int, ...]:
    return tuple(a % params.N for a in range(params.K))
