"""Per-user decoding.

Two independent routes recover a user's missing parts:

* ``peel`` scans the schedule and, for every symbol with exactly one term
  outside the user's cache view, cancels the cache-resident terms.
* ``lemma_decode_map`` names, in closed form, which symbol carries each
  missing part; ``lemma_decode`` then cancels that symbol's other terms.

The two must agree part for part.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .delivery import TransmissionSchedule, Variant, part_range, round_structure, start_round
from .params import SystemParams, UnsupportedParameters, accessible_subfiles, missing_subfiles

PartKey = tuple[int, int, int]  # (subfile, part, part_count)
SymbolKey = tuple[int, int, Variant]  # (round_r, shift_j, variant)


class DecodeError(RuntimeError):
    pass


class DecodeIncomplete(DecodeError):
    pass


class DecodeConflict(DecodeError):
    pass


class CacheView:
    """Byte content a user can read: whole sub-files of every file, for sub-files in its view."""

    def __init__(self, alpha: int, params: SystemParams, files: np.ndarray):
        self.alpha = alpha
        self.params = params
        self.file_size = files.shape[1]
        self.subfiles = frozenset(accessible_subfiles(alpha, params))
        K = params.K
        self._data = {s: files[:, part_range(self.file_size, K, s, 0, 1)].copy() for s in self.subfiles}

    def __contains__(self, subfile: int) -> bool:
        return subfile in self.subfiles

    def subfile(self, file: int, subfile: int) -> np.ndarray:
        return self._data[subfile][file]

    def part(self, file: int, subfile: int, part: int, part_count: int) -> np.ndarray:
        sub = self._data[subfile][file]
        n = len(sub) // part_count
        return sub[part * n:(part + 1) * n]


@dataclass
class DecodePlan:
    user: int
    entries: dict[PartKey, SymbolKey] = field(default_factory=dict)

    def rows(self, schedule: TransmissionSchedule | None = None):
        """(user, subfile, part, source) rows in plan order; source is a symbol label if a schedule is given."""
        out = []
        for (sub, part, _q), key in self.entries.items():
            src = schedule.find(key).label if schedule is not None else key
            out.append((self.user, sub, part, src))
        return out


@dataclass
class PeelResult:
    user: int
    parts: dict[PartKey, bytes]
    sources: dict[PartKey, SymbolKey]
    passes: int


def _unknown_terms(sym, view: CacheView, demanded: int, recovered):
    return [
        t for t in sym.terms
        if t.subfile not in view
        and not (t.file == demanded and (t.subfile, t.part, t.part_count) in recovered)
    ]


def _cancel(sym, target, view: CacheView, recovered, demanded: int) -> np.ndarray:
    acc = np.frombuffer(sym.payload, dtype=np.uint8).copy()
    for t in sym.terms:
        if t is target:
            continue
        if t.subfile in view:
            acc ^= view.part(t.file, t.subfile, t.part, t.part_count)
        else:
            acc ^= np.frombuffer(recovered[(t.subfile, t.part, t.part_count)], dtype=np.uint8)
    return acc


def peel(alpha: int, params: SystemParams, demands: Sequence[int],
         schedule: TransmissionSchedule, view: CacheView, max_passes: int | None = None) -> PeelResult:
    """Recover every part of alpha's demanded file that can be isolated, iterating to a fixpoint."""
    demanded = demands[alpha]
    recovered: dict[PartKey, bytes] = {}
    sources: dict[PartKey, SymbolKey] = {}
    passes = 0
    while max_passes is None or passes < max_passes:
        passes += 1
        progress = False
        for sym in schedule.symbols:
            if sym.payload is None:
                raise DecodeError("schedule has no payloads; run encode_payloads first")
            unknown = _unknown_terms(sym, view, demanded, recovered)
            if len(unknown) != 1:
                continue
            target = unknown[0]
            key = (target.subfile, target.part, target.part_count)
            value = _cancel(sym, target, view, recovered, demanded).tobytes()
            if target.file != demanded:
                # the single unknown term is someone else's; nothing learned for alpha
                continue
            if key in recovered:
                if recovered[key] != value:
                    raise DecodeConflict(f"user {alpha}: sources disagree on part {key}")
                continue
            recovered[key] = value
            sources[key] = sym.key
            progress = True
        if not progress:
            break
    return PeelResult(alpha, recovered, sources, passes)


def assemble(alpha: int, params: SystemParams, demands: Sequence[int],
             view: CacheView, parts: dict[PartKey, bytes]) -> bytes:
    demanded = demands[alpha]
    by_sub: dict[int, dict[int, dict[int, bytes]]] = {}
    for (sub, part, q), value in parts.items():
        by_sub.setdefault(sub, {}).setdefault(q, {})[part] = value
    chunks = []
    for s in range(params.K):
        if s in view:
            chunks.append(view.subfile(demanded, s).tobytes())
            continue
        for q, got in sorted(by_sub.get(s, {}).items()):
            if len(got) == q:
                chunks.append(b"".join(got[i] for i in range(q)))
                break
        else:
            have = sorted(by_sub.get(s, {}).get(q, {}) for q in by_sub.get(s, {}))
            raise DecodeIncomplete(
                f"user {alpha}: sub-file {s} of file {demanded} not recovered (have parts {have})"
            )
    return b"".join(chunks)


def peel_decode(alpha: int, params: SystemParams, demands: Sequence[int],
                schedule: TransmissionSchedule, view: CacheView) -> bytes:
    result = peel(alpha, params, demands, schedule, view)
    return assemble(alpha, params, demands, view, result.parts)


def lemma_decode_map(alpha: int, params: SystemParams) -> DecodePlan:
    """Closed-form source symbol for every part of every sub-file alpha is missing."""
    if params.deficit < 1:
        raise UnsupportedParameters("no delivery rounds when kz >= K")
    K, k, z = params.K, params.k, params.z
    t = start_round(params)
    plan = DecodePlan(alpha)
    e = plan.entries
    low = k * alpha          # first accessible sub-file
    high = k * (alpha + z) - 1  # last accessible sub-file
    for shape in round_structure(params):
        r, p, q = shape.r, shape.p, shape.part_count
        if shape.kind == "base":
            s = (low - t) % K
            for l in range(p):
                e[(s, l, q)] = (r, (low - (l + 1) * t) % K, Variant.SINGLE)
            continue
        s1 = (low - r) % K
        s2 = (high + r) % K
        if shape.kind == "even":
            h = p // 2
            for l in range(h):
                e[(s1, l, q)] = (r, (low - (l + 1) * r) % K, Variant.SINGLE)
            for l in range(h):
                e[(s2, l, q)] = (r, (high - (l + h - 1) * r) % K, Variant.SINGLE)
        else:
            h = (p - 1) // 2
            for l in range(h):
                e[(s1, l, q)] = (r, (low - (l + 1) * r) % K, Variant.FIRST)
            for l in range(h, p):
                e[(s1, l, q)] = (r, (low - (l - h + 1) * r) % K, Variant.SECOND)
            for l in range(h + 1):
                e[(s2, l, q)] = (r, (high - (l + h - 1) * r) % K, Variant.FIRST)
            for l in range(h + 1, p):
                e[(s2, l, q)] = (r, (high - (l - 1) * r) % K, Variant.SECOND)
    return plan


def verify_plan_consistency(plan: DecodePlan, schedule: TransmissionSchedule,
                            alpha: int, params: SystemParams) -> bool:
    """True iff each mapped symbol holds the keyed part as its only term outside alpha's view."""
    view = set(accessible_subfiles(alpha, params))
    tiles: dict[int, set[tuple[int, int]]] = {}
    for sub, part, q in plan.entries:
        tiles.setdefault(sub, set()).add((part, q))
    if set(tiles) != set(missing_subfiles(alpha, params)):
        return False
    for got in tiles.values():
        counts = {q for _, q in got}
        if len(counts) != 1 or {part for part, _ in got} != set(range(counts.pop())):
            return False
    index = schedule._index()
    for (sub, part, q), key in plan.entries.items():
        sym = index.get(key)
        if sym is None:
            return False
        outside = [t for t in sym.terms if t.subfile not in view]
        if len(outside) != 1:
            return False
        t = outside[0]
        if (t.subfile, t.part, t.part_count, t.user) != (sub, part, q, alpha):
            return False
    return True


def lemma_decode(alpha: int, params: SystemParams, demands: Sequence[int],
                 schedule: TransmissionSchedule, view: CacheView,
                 plan: DecodePlan | None = None) -> dict[PartKey, bytes]:
    """Recover each planned part from its lemma-mapped symbol alone."""
    plan = plan or lemma_decode_map(alpha, params)
    index = schedule._index()
    out = {}
    for key, skey in plan.entries.items():
        sym = index[skey]
        target = next(
            (t for t in sym.terms if (t.subfile, t.part, t.part_count) == key and t.user == alpha), None
        )
        if target is None:
            raise DecodeError(f"user {alpha}: symbol {sym.label} does not carry part {key}")
        out[key] = _cancel(sym, target, view, {}, demands[alpha]).tobytes()
    return out
