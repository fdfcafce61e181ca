"""Uncoded placement: cache c keeps sub-files k*c .. k*c+k-1 (mod K) of every file."""

from __future__ import annotations

from dataclasses import dataclass

from .params import SystemParams


@dataclass(frozen=True)
class CacheContents:
    # caches[c] lists the sub-file indices cache c stores for every file
    caches: tuple[tuple[int, ...], ...]

    def __getitem__(self, c: int) -> tuple[int, ...]:
        return self.caches[c]

    def __len__(self):
        return len(self.caches)

    def lines(self) -> list[str]:
        return [f"M_{c} = {{{','.join(map(str, s))}}}" for c, s in enumerate(self.caches)]


def place(params: SystemParams) -> CacheContents:
    K, k = params.K, params.k
    return CacheContents(tuple(tuple((k * c + j) % K for j in range(k)) for c in range(K)))


def user_view(alpha: int, contents: CacheContents, params: SystemParams) -> tuple[int, ...]:
    """Union of the caches alpha .. alpha+z-1, in window order without repeats."""
    K = params.K
    seen: dict[int, None] = {}
    for c in range(alpha, alpha + params.z):
        for s in contents[c % K]:
            seen.setdefault(s)
    return tuple(seen)
