"""Delivery: the coded transmissions for a demand vector.

Rounds run over r = t, t+1, ... with p = ceil(kz/r) + 1.  When K - kz is
even, t = (K-kz)/2 + 1 and every round serves two missing sub-files per
user.  When K - kz is odd, t = (K-kz+1)/2 and round t serves the single
middle sub-file k*alpha - t with K symbols of p terms.

Every index sum is reduced mod K.  A term whose sub-file is reached
"forward" from shift j belongs to the user alpha with k*alpha = (i+1)r + j;
a term reached "backward" belongs to the user with
k*alpha = (i-1)r + j + 1 - kz, i.e. the user for which the sub-file is
k(alpha+z) + r - 1.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .params import SystemParams, check_demands, resolve_user


class SizeMismatch(ValueError):
    pass


class Variant(str, enum.Enum):
    SINGLE = "single"
    FIRST = "first"
    SECOND = "second"


@dataclass(frozen=True)
class TermRef:
    subfile: int
    part: int
    part_count: int
    user: int
    file: int

    def __str__(self):
        return f"W[{self.subfile},{self.part}]^{self.file}"


@dataclass(frozen=True)
class CodedSymbol:
    round_r: int
    stage: int  # r - t, the superscript used in listings
    shift_j: int
    variant: Variant
    part_count: int
    terms: tuple[TermRef, ...]
    size: Fraction
    payload: bytes | None = None

    @property
    def key(self) -> tuple[int, int, Variant]:
        return (self.round_r, self.shift_j, self.variant)

    @property
    def label(self) -> str:
        if self.variant is Variant.SINGLE:
            return f"T[{self.shift_j}]^{self.stage}"
        idx = 1 if self.variant is Variant.FIRST else 2
        return f"T[{self.shift_j},{idx}]^{self.stage}"

    def __str__(self):
        return f"{self.label} = " + " + ".join(map(str, self.terms))


@dataclass(frozen=True)
class Round:
    r: int
    p: int
    part_count: int
    symbols: tuple[CodedSymbol, ...]


@dataclass(frozen=True)
class TransmissionSchedule:
    params: SystemParams
    demands: tuple[int, ...]
    t: int | None
    rounds: tuple[Round, ...] = field(default=())

    @property
    def symbols(self) -> Iterator[CodedSymbol]:
        for rnd in self.rounds:
            yield from rnd.symbols

    @property
    def total_rate(self) -> Fraction:
        return schedule_rate(self)

    @property
    def part_counts(self) -> list[int]:
        return [rnd.part_count for rnd in self.rounds]

    def find(self, key) -> CodedSymbol:
        return self._index()[key]

    def _index(self) -> dict:
        # cached lazily; frozen dataclass, so go through object.__setattr__
        idx = self.__dict__.get("_symbol_index")
        if idx is None:
            idx = {s.key: s for s in self.symbols}
            object.__setattr__(self, "_symbol_index", idx)
        return idx


@dataclass(frozen=True)
class RoundShape:
    r: int
    p: int
    part_count: int
    kind: str  # "base" (odd case, r = t), "even" (p even), "odd" (p odd)

    @property
    def num_symbols_per_shift(self) -> int:
        return 2 if self.kind == "odd" else 1


def start_round(params: SystemParams) -> int | None:
    m = params.deficit
    if m <= 0:
        return None
    return m // 2 + 1 if m % 2 == 0 else (m + 1) // 2


def round_structure(params: SystemParams) -> list[RoundShape]:
    """Shape of every delivery round; empty when kz >= K."""
    m, kz = params.deficit, params.kz
    t = start_round(params)
    if t is None:
        return []
    last = t + (m - 2) // 2 if m % 2 == 0 else t + (m - 1) // 2
    shapes = []
    for r in range(t, last + 1):
        p = -(-kz // r) + 1
        if m % 2 == 1 and r == t:
            shapes.append(RoundShape(r, p, p, "base"))
        elif p % 2 == 0:
            shapes.append(RoundShape(r, p, p // 2, "even"))
        else:
            shapes.append(RoundShape(r, p, p, "odd"))
    return shapes


def _round_terms(shape: RoundShape, j: int, t: int, params: SystemParams):
    """Yield (variant, [(subfile, part, user_index_sum), ...]) for shift j."""
    r, p = shape.r, shape.p
    back = 1 - params.kz

    def fwd(i, part):
        return (i * r + j, part, (i + 1) * r + j)

    def bwd(i, part):
        return (i * r + j, part, (i - 1) * r + j + back)

    if shape.kind == "base":
        yield Variant.SINGLE, [(i * t + j, i, (i + 1) * t + j) for i in range(p)]
    elif shape.kind == "even":
        h = p // 2
        yield Variant.SINGLE, [fwd(i, i) for i in range(h)] + [bwd(i, i - h) for i in range(h, p)]
    else:
        h = (p - 1) // 2
        yield Variant.FIRST, [fwd(i, i) for i in range(h)] + [bwd(i, i - h) for i in range(h, p)]
        yield Variant.SECOND, [fwd(i, h + i) for i in range(h + 1)] + [bwd(i, i) for i in range(h + 1, p)]


def build_schedule(params: SystemParams, demands: Sequence[int]) -> TransmissionSchedule:
    d = check_demands(demands, params)
    K = params.K
    t = start_round(params)
    rounds = []
    for shape in round_structure(params):
        size = Fraction(1, K * shape.part_count)
        symbols = []
        for j in range(K):
            for variant, raw in _round_terms(shape, j, t, params):
                terms = []
                for sub, part, x in raw:
                    user = resolve_user(x, params)
                    terms.append(TermRef(sub % K, part, shape.part_count, user, d[user]))
                symbols.append(
                    CodedSymbol(shape.r, shape.r - t, j, variant, shape.part_count, tuple(terms), size)
                )
        rounds.append(Round(shape.r, shape.p, shape.part_count, tuple(symbols)))
    return TransmissionSchedule(params, d, t, tuple(rounds))


def schedule_rate(schedule: TransmissionSchedule) -> Fraction:
    return sum((s.size for s in schedule.symbols), Fraction(0))


def granularity(schedule: TransmissionSchedule) -> int:
    """Smallest file length (in bytes) that every part boundary divides: K * lcm(part_counts)."""
    return schedule.params.K * math.lcm(1, *schedule.part_counts)


def part_range(file_size: int, K: int, subfile: int, part: int, part_count: int) -> slice:
    sub_len = file_size // K
    part_len = sub_len // part_count
    start = subfile * sub_len + part * part_len
    return slice(start, start + part_len)


def _as_matrix(files) -> np.ndarray:
    if isinstance(files, np.ndarray):
        return files
    rows = [np.frombuffer(bytes(f), dtype=np.uint8) for f in files]
    if len({len(r) for r in rows}) > 1:
        raise SizeMismatch("files must all have the same length")
    return np.stack(rows)


def encode_payloads(schedule: TransmissionSchedule, files) -> TransmissionSchedule:
    """Return a copy of ``schedule`` whose symbols carry XOR payloads over ``files``."""
    data = _as_matrix(files)
    F = data.shape[1]
    g = granularity(schedule)
    if F == 0 or F % g:
        raise SizeMismatch(f"file size {F} is not a positive multiple of K*lcm(part counts) = {g}")
    K = schedule.params.K
    rounds = []
    for rnd in schedule.rounds:
        symbols = []
        for sym in rnd.symbols:
            acc = np.zeros(F // (K * sym.part_count), dtype=np.uint8)
            for term in sym.terms:
                acc ^= data[term.file, part_range(F, K, term.subfile, term.part, term.part_count)]
            symbols.append(replace(sym, payload=acc.tobytes()))
        rounds.append(replace(rnd, symbols=tuple(symbols)))
    return replace(schedule, rounds=tuple(rounds))


def format_schedule(schedule: TransmissionSchedule) -> str:
    return "".join(f"{s}\n" for s in schedule.symbols)


def schedule_to_dict(schedule: TransmissionSchedule) -> dict:
    p = schedule.params
    return {
        "params": {"N": p.N, "K": p.K, "k": p.k, "z": p.z},
        "demands": list(schedule.demands),
        "t": schedule.t,
        "rate": str(schedule_rate(schedule)),
        "rounds": [
            {
                "r": rnd.r,
                "p": rnd.p,
                "part_count": rnd.part_count,
                "symbols": [
                    {
                        "label": s.label,
                        "round_r": s.round_r,
                        "stage": s.stage,
                        "shift_j": s.shift_j,
                        "variant": s.variant.value,
                        "size": str(s.size),
                        "terms": [
                            {"subfile": x.subfile, "part": x.part, "part_count": x.part_count,
                             "user": x.user, "file": x.file}
                            for x in s.terms
                        ],
                        **({"payload": s.payload.hex()} if s.payload is not None else {}),
                    }
                    for s in rnd.symbols
                ],
            }
            for rnd in schedule.rounds
        ],
    }


def schedule_to_json(schedule: TransmissionSchedule) -> str:
    return json.dumps(schedule_to_dict(schedule), indent=2)
