"""End-to-end trials: synthesize files, place, deliver, decode, and account for every byte sent."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .decoder import CacheView, DecodeError, peel, assemble
from .delivery import TransmissionSchedule, build_schedule, encode_payloads, granularity
from .params import SystemParams, check_demands, worst_case_demands
from .analysis import rate_new


@dataclass(frozen=True)
class FileStore:
    files: np.ndarray  # shape (N, F), uint8
    granularity: int

    @property
    def file_size(self) -> int:
        return self.files.shape[1]

    def __post_init__(self):
        F = self.files.shape[1]
        if F <= 0 or F % self.granularity:
            raise ValueError(f"file size {F} is not a positive multiple of {self.granularity}")


def synthesize_files(params: SystemParams, schedule_granularity: int, seed=None, scale: int = 1) -> FileStore:
    if scale < 1:
        raise ValueError("scale must be >= 1")
    rng = np.random.default_rng(seed)
    F = schedule_granularity * scale
    files = rng.integers(0, 256, size=(params.N, F), dtype=np.uint8)
    return FileStore(files, schedule_granularity)


@dataclass
class Failure:
    user: int
    detail: str


@dataclass
class Report:
    params: SystemParams
    demands: tuple[int, ...]
    per_user_success: list[bool]
    measured_rate: Fraction
    formula_rate: Fraction
    symbols_sent: int
    bytes_sent: int
    file_size: int
    failures: list[Failure] = field(default_factory=list)
    single_pass: bool = True

    @property
    def ok(self) -> bool:
        return all(self.per_user_success) and self.measured_rate == self.formula_rate


def _first_mismatch(params: SystemParams, got: bytes, want: bytes) -> str:
    F = len(want)
    sub = F // params.K
    for i, (a, b) in enumerate(zip(got, want)):
        if a != b:
            return f"sub-file {i // sub}, byte offset {i % sub}"
    return f"length {len(got)} != {F}"


def run_decode(params: SystemParams, demands: Sequence[int], schedule: TransmissionSchedule,
               store: FileStore) -> tuple[list[bool], list[Failure], bool]:
    success, failures, single = [], [], True
    for alpha in range(params.K):
        view = CacheView(alpha, params, store.files)
        want = store.files[demands[alpha]].tobytes()
        try:
            res = peel(alpha, params, demands, schedule, view, max_passes=1)
            got = assemble(alpha, params, demands, view, res.parts)
        except DecodeError:
            single = False
            try:
                res = peel(alpha, params, demands, schedule, view)
                got = assemble(alpha, params, demands, view, res.parts)
            except DecodeError as exc2:
                success.append(False)
                failures.append(Failure(alpha, str(exc2)))
                continue
        if got == want:
            success.append(True)
        else:
            success.append(False)
            failures.append(Failure(alpha, "mismatch at " + _first_mismatch(params, got, want)))
    return success, failures, single


def end_to_end(params: SystemParams, demands: Sequence[int], seed=None, scale: int = 1) -> Report:
    d = check_demands(demands, params)
    schedule = build_schedule(params, d)
    store = synthesize_files(params, granularity(schedule), seed, scale)
    coded = encode_payloads(schedule, store.files)
    symbols = list(coded.symbols)
    bytes_sent = sum(len(s.payload) for s in symbols)
    success, failures, single = run_decode(params, d, coded, store)
    return Report(
        params=params,
        demands=d,
        per_user_success=success,
        measured_rate=Fraction(bytes_sent, store.file_size),
        formula_rate=rate_new(params.K, params.k, params.z),
        symbols_sent=len(symbols),
        bytes_sent=bytes_sent,
        file_size=store.file_size,
        failures=failures,
        single_pass=single,
    )


@dataclass
class TrialSummary:
    trials: int = 0
    failures: int = 0
    rate_mismatches: int = 0
    distinct_demand_vectors_tested: int = 0
    failed: list[tuple[tuple[int, ...], list[Failure]]] = field(default_factory=list)


def randomized_trials(params: SystemParams, num_trials: int, seed=None, scale: int = 1) -> TrialSummary:
    """Fresh distinct-demand vector and fresh file bytes per trial."""
    summary = TrialSummary()
    seeds = np.random.SeedSequence(seed).spawn(num_trials)
    seen = set()
    for ss in seeds:
        demand_seed, file_seed = ss.generate_state(2)
        d = worst_case_demands(params, int(demand_seed))
        rep = end_to_end(params, d, int(file_seed), scale)
        summary.trials += 1
        seen.add(d)
        if not all(rep.per_user_success):
            summary.failures += 1
            summary.failed.append((d, rep.failures))
        if rep.measured_rate != rep.formula_rate:
            summary.rate_mismatches += 1
    summary.distinct_demand_vectors_tested = len(seen)
    return summary


def small_instances(K_range: range, N: int | None = None):
    """Every supported (K, k, z) with K in ``K_range``."""
    for K in K_range:
        for k in range(1, K + 1):
            for z in range(2, K + 1):
                if k * z < K and math.gcd(k, K) != 1:
                    continue
                yield SystemParams(N or K, K, k, z)
