"""Closed-form rates, baselines, bounds, sub-packetization and memory-sharing envelopes.

All quantities are exact ``Fraction`` values; rendering to decimals happens
only at output time.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .delivery import round_structure
from .params import InvalidParams, SystemParams


class DomainError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class RatePoint:
    gamma: Fraction
    rate: Fraction


def _check(K: int, k: int, z: int):
    if K < 2 or not 1 <= k <= K or z < 2:
        raise InvalidParams(f"need K >= 2, 1 <= k <= K, z >= 2 (got K={K}, k={k}, z={z})")


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def rate_new(K: int, k: int, z: int) -> Fraction:
    """Achievable delivery rate of the multi-access scheme at gamma = k/K."""
    _check(K, k, z)
    kz = k * z
    m = K - kz
    if m <= 0:
        return Fraction(0)
    if m == 1:
        return Fraction(1, K)
    if m % 2 == 0:
        return 2 * sum(Fraction(1, 1 + _ceil_div(kz, r)) for r in range(m // 2 + 1, m + 1))
    head = Fraction(1, _ceil_div(2 * kz, m + 1) + 1)
    return head + sum(Fraction(2, 1 + _ceil_div(kz, r)) for r in range((m + 3) // 2, m + 1))


def rate_ic(K: int, k: int, z: int) -> Fraction:
    """Index-coding baseline K(1 - z*gamma)^2, zero once kz >= K."""
    _check(K, k, z)
    m = K - k * z
    return Fraction(m * m, K) if m > 0 else Fraction(0)


def rate_lb(K: int, z: int, gamma) -> Fraction:
    """Lower bound under uncoded placement; defined only for z >= K/2."""
    if 2 * z < K:
        raise DomainError(f"lower bound needs z >= K/2 (K={K}, z={z})")
    g = Fraction(gamma)
    if g < 0:
        raise DomainError("gamma must be non-negative")
    c = Fraction((K - z) * (K - z + 1), 2 * K)
    if g <= Fraction(1, K):
        return K - (K - c) * K * g
    if g <= Fraction(2, K):
        return c * (2 - K * g)
    return Fraction(0)


def theorem2_check(K: int, k: int, z: int) -> bool:
    return rate_new(K, k, z) <= rate_ic(K, k, z)


def corollary2_check(K: int, k: int) -> bool:
    """With z = K-1 the rate is 1/K for k = 1 and 0 otherwise."""
    expected = Fraction(1, K) if k == 1 else Fraction(0)
    return rate_new(K, k, K - 1) == expected


def subpacketization_new(K: int, k: int, z: int) -> tuple[int, int]:
    """(K * largest part count of any round, K * lcm of all part counts)."""
    shapes = round_structure(SystemParams(K, K, k, z))
    counts = [s.part_count for s in shapes] or [1]
    return K * max(counts), K * math.lcm(*counts)


def subpacketization_ic(K: int, k: int, z: int) -> int:
    _check(K, k, z)
    m = K - k * z
    if m < 0:
        raise InvalidParams(f"baseline sub-packetization undefined for kz > K (K={K}, k={k}, z={z})")
    value = Fraction(math.comb(m + k - 1, k - 1) * K, k)
    if value.denominator != 1:
        raise InvalidParams(f"C({m + k - 1},{k - 1})*K/k = {value} is not an integer")
    return int(value)


def _cross(o: RatePoint, a: RatePoint, b: RatePoint) -> Fraction:
    return (a.gamma - o.gamma) * (b.rate - o.rate) - (a.rate - o.rate) * (b.gamma - o.gamma)


def convex_envelope(points: Iterable[RatePoint]) -> list[RatePoint]:
    """Strict vertices of the lower convex hull, ascending in gamma (collinear points dropped)."""
    best: dict[Fraction, Fraction] = {}
    for p in points:
        if p.gamma not in best or p.rate < best[p.gamma]:
            best[p.gamma] = p.rate
    hull: list[RatePoint] = []
    for g in sorted(best):
        p = RatePoint(g, best[g])
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], p) <= 0:
            hull.pop()
        hull.append(p)
    return hull


def envelope_points(K: int, z: int, supported_only: bool = True) -> list[RatePoint]:
    """The no-cache point (0, K) plus (k/K, rate_new) for each k.

    With ``supported_only`` the cache sizes whose delivery needs gcd(k, K) = 1
    but violate it are left out.
    """
    pts = [RatePoint(Fraction(0), Fraction(K))]
    for k in range(1, K + 1):
        if supported_only and k * z < K and math.gcd(k, K) != 1:
            continue
        pts.append(RatePoint(Fraction(k, K), rate_new(K, k, z)))
    return pts


def envelope_value(hull: Sequence[RatePoint], gamma) -> Fraction:
    g = Fraction(gamma)
    for a, b in zip(hull, hull[1:]):
        if a.gamma <= g <= b.gamma:
            return a.rate + (b.rate - a.rate) * (g - a.gamma) / (b.gamma - a.gamma)
    if hull and g == hull[0].gamma:
        return hull[0].rate
    raise DomainError(f"gamma={g} outside the envelope's range")


@dataclass(frozen=True)
class SweepRow:
    K: int
    k: int
    z: int
    gamma: Fraction
    rate_new: Fraction
    rate_ic: Fraction
    rate_lb: Fraction | None
    subpack_new_max: int
    subpack_new_lcm: int
    subpack_ic: int | None


CSV_HEADER = ["K", "k", "z", "gamma", "rate_new", "rate_ic", "rate_lb",
              "subpack_new_max", "subpack_new_lcm", "subpack_ic"]


def sweep_row(K: int, k: int, z: int) -> SweepRow:
    SystemParams(K, K, k, z)  # validates, including the gcd restriction
    gamma = Fraction(k, K)
    lb = rate_lb(K, z, gamma) if 2 * z >= K else None
    try:
        ic_sp = subpacketization_ic(K, k, z)
    except InvalidParams:
        ic_sp = None
    sp_max, sp_lcm = subpacketization_new(K, k, z)
    return SweepRow(K, k, z, gamma, rate_new(K, k, z), rate_ic(K, k, z), lb, sp_max, sp_lcm, ic_sp)


def sweep(K: int, k_range: Iterable[int] | None = None, z_range: Iterable[int] | None = None) -> list[SweepRow]:
    """One row per (k, z) the scheme supports, in (k, z) order."""
    ks = range(1, K + 1) if k_range is None else k_range
    zs = list(range(2, K + 1) if z_range is None else z_range)
    rows = []
    for k in ks:
        for z in zs:
            try:
                rows.append(sweep_row(K, k, z))
            except InvalidParams:
                continue
    return rows


def fmt_decimal(x) -> str:
    return "" if x is None else f"{float(x):.6g}"


def rows_to_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([r.K, r.k, r.z, fmt_decimal(r.gamma), fmt_decimal(r.rate_new), fmt_decimal(r.rate_ic),
                    fmt_decimal(r.rate_lb), r.subpack_new_max, r.subpack_new_lcm,
                    "" if r.subpack_ic is None else r.subpack_ic])
    return buf.getvalue()
