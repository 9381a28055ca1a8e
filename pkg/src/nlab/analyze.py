"""
Streaming pattern-frequency analysis.

Occurrences are counted by start position 1..N, overlapping, and the reader
takes k - 1 digits past N so every window starting inside the horizon is
complete. With that convention the counts of each pattern length sum to N
exactly.

Verdicts are heuristic. No finite prefix decides normality; a verdict only
says whether the measured deviations look like they are dying out.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from . import kernels
from .errors import MeasureMismatchError, MemoryBudgetError, NlabError
from .selectors import AP, select
from .shiftspace import (
    Alphabet,
    BernoulliMeasure,
    DigitSequence,
    Pattern,
    StarredPattern,
    block_measure,
    block_recode,
)

DEFAULT_TABLE_CAP = 1 << 24
DEFAULT_TAU_FLOOR = 0.005
STALL_FRACTION = 0.75


@dataclass(frozen=True)
class Row:
    length: int
    pattern: tuple
    count: int
    empirical: float
    expected: float
    deviation: float


@dataclass
class FrequencyReport:
    horizon: int
    base: int
    max_length: int
    counts: np.ndarray
    expected: np.ndarray
    alignment: str = "unaligned"
    requested: int | None = None

    @property
    def truncated(self) -> bool:
        return self.requested is not None and self.horizon < self.requested

    @property
    def offsets(self) -> np.ndarray:
        return kernels.table_offsets(self.base, self.max_length)

    def _slice(self, j: int) -> slice:
        if not 1 <= j <= self.max_length:
            raise ValueError(f"pattern length {j} outside 1..{self.max_length}")
        off = self.offsets
        return slice(int(off[j - 1]), int(off[j]))

    def counts_for(self, j: int) -> np.ndarray:
        return self.counts[self._slice(j)]

    def frequencies(self, j: int) -> np.ndarray:
        return self.counts_for(j) / self.horizon

    def deviations(self, j: int | None = None) -> np.ndarray:
        if j is None:
            return self.counts / self.horizon - self.expected
        return self.frequencies(j) - self.expected[self._slice(j)]

    def _index(self, pattern) -> int:
        digits = pattern.digits if isinstance(pattern, Pattern) else tuple(pattern)
        p = Pattern(digits)
        return int(self.offsets[len(p) - 1]) + p.code(Alphabet(self.base))

    def count(self, pattern) -> int:
        return int(self.counts[self._index(pattern)])

    def frequency(self, pattern) -> float:
        return self.count(pattern) / self.horizon

    def deviation(self, pattern) -> float:
        i = self._index(pattern)
        return self.counts[i] / self.horizon - self.expected[i]

    def _row(self, flat: int) -> Row:
        off = self.offsets
        j = int(np.searchsorted(off, flat, side="right"))
        code = flat - int(off[j - 1])
        digits = []
        for _ in range(j):
            code, d = divmod(code, self.base)
            digits.append(d)
        c = int(self.counts[flat])
        emp = c / self.horizon
        exp = float(self.expected[flat])
        return Row(j, tuple(reversed(digits)), c, emp, exp, emp - exp)

    def rows(self, length: int | None = None) -> Iterator[Row]:
        rng = range(len(self.counts)) if length is None else range(self._slice(length).start, self._slice(length).stop)
        for flat in rng:
            yield self._row(flat)

    def discrepancy(self, length: int | None = None) -> float:
        return float(np.abs(self.deviations(length)).max())

    def worst(self, length: int | None = None) -> Row:
        dev = np.abs(self.deviations(length))
        start = 0 if length is None else self._slice(length).start
        return self._row(start + int(np.argmax(dev)))


def discrepancy(report: FrequencyReport) -> float:
    """Largest |empirical - expected| over every pattern in the report."""
    return report.discrepancy()


@dataclass
class DiscrepancyCurve:
    checkpoints: list = field(default_factory=list)

    def add(self, N: int, value: float) -> None:
        if self.checkpoints and N <= self.checkpoints[-1][0]:
            raise ValueError("checkpoints must be strictly increasing in N")
        self.checkpoints.append((N, value))


def _table_size(base: int, k: int) -> int:
    return sum(base ** j for j in range(1, k + 1))


def check_budget(base: int, k: int, cap: int = DEFAULT_TABLE_CAP) -> None:
    if k < 1:
        raise ValueError(f"max pattern length must be >= 1, got {k}")
    size = _table_size(base, k)
    if size > cap:
        raise MemoryBudgetError(f"{size} table entries for base {base}, k={k} exceeds the cap of {cap}")


def count_digits(digits: np.ndarray, N: int, k: int, base: int, chunk: int | None = None, workers: int = 1) -> np.ndarray:
    """Flat window counts for starts 0..N-1, optionally split into chunks that overlap by k - 1 digits."""
    if chunk is None or chunk >= N:
        return kernels.count_windows(digits, 0, N, base, k)
    if chunk < k:
        raise ValueError(f"chunk size {chunk} must be >= k={k}")
    bounds = [(s, min(s + chunk, N)) for s in range(0, N, chunk)]

    def part(se):
        s, e = se
        # every chunk sees only its own digits plus the k - 1 overlap
        return kernels.count_windows(digits[s:e + k - 1], 0, e - s, base, k)

    total = np.zeros(int(kernels.table_offsets(base, k)[-1]), dtype=np.int64)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            for c in pool.map(part, bounds):
                total += c
    else:
        for se in bounds:
            total += part(se)
    return total


def _expected_table(measure: BernoulliMeasure, k: int) -> np.ndarray:
    return np.concatenate([measure.pattern_weights(j) for j in range(1, k + 1)])


def _check_measure(seq: DigitSequence, measure: BernoulliMeasure) -> None:
    if seq.alphabet.size != measure.alphabet.size:
        raise MeasureMismatchError(
            f"stream has {seq.alphabet.size} digits, measure has {measure.alphabet.size}"
        )


def _read(seq: DigitSequence, N: int, k: int) -> tuple[np.ndarray, int]:
    digits = seq.take(N + k - 1)
    horizon = min(N, len(digits) - k + 1)
    if horizon < 1:
        raise NlabError(f"stream ended after {len(digits)} digits; need at least {k} for length-{k} patterns")
    return digits, horizon


def count_patterns(seq: DigitSequence, N: int, k: int, measure: BernoulliMeasure, *,
                   chunk: int | None = None, workers: int = 1, table_cap: int = DEFAULT_TABLE_CAP,
                   alignment: str = "unaligned") -> FrequencyReport:
    """Count every pattern of length 1..k starting at positions 1..N.

    A stream shorter than N + k - 1 digits gives a report whose ``horizon`` is
    the largest N that could be served and whose ``truncated`` flag is set.
    """
    if N < 1:
        raise ValueError(f"horizon must be >= 1, got {N}")
    _check_measure(seq, measure)
    base = seq.alphabet.size
    check_budget(base, k, table_cap)
    digits, horizon = _read(seq, N, k)
    counts = count_digits(digits, horizon, k, base, chunk, workers)
    return FrequencyReport(horizon, base, k, counts, _expected_table(measure, k), alignment, requested=N)


@dataclass(frozen=True)
class StarredCount:
    count: int
    horizon: int

    @property
    def frequency(self) -> float:
        return self.count / self.horizon


def count_starred_aligned(block_seq: DigitSequence, pattern: StarredPattern, N: int) -> StarredCount:
    """Overlapping occurrences of a starred pattern at block positions 1..N."""
    alpha = block_seq.alphabet
    if alpha.size != pattern.base ** pattern.width or (alpha.width > 1 and alpha != Alphabet(pattern.base, pattern.width)):
        raise MeasureMismatchError(
            f"pattern has width {pattern.width} over base {pattern.base}; stream alphabet is {alpha}"
        )
    blocks = block_seq.take(N + pattern.m - 1)
    horizon = min(N, len(blocks) - pattern.m + 1)
    if horizon < 1:
        raise NlabError("block stream shorter than the pattern")
    return StarredCount(kernels.count_starred(blocks, horizon, pattern.allowed_table()), horizon)


# --- verdicts -----------------------------------------------------------------


def default_schedule(N: int, start: int = 1000, ratio: float = math.sqrt(10)) -> list[int]:
    """Geometric horizons start, start*ratio, ... ending exactly at N."""
    out = []
    x = float(start)
    while x < N:
        out.append(int(round(x)))
        x *= ratio
    out.append(N)
    return sorted(set(out))


@dataclass
class Verdict:
    normal: bool
    horizon: int
    curve: DiscrepancyCurve
    report: FrequencyReport
    witness: Row | None = None
    flagged: list = field(default_factory=list)
    heuristic: bool = True

    @property
    def label(self) -> str:
        return "consistent-with-normal" if self.normal else "non-normal-witness"

    @property
    def deviation(self) -> float | None:
        return None if self.witness is None else self.witness.deviation

    def __str__(self):
        if self.normal:
            return f"{self.label} (N={self.horizon}, discrepancy={self.report.discrepancy():.5f})"
        w = self.witness
        return f"{self.label} pattern={list(w.pattern)} N={self.horizon} deviation={w.deviation:+.5f}"


def tau_table(expected: np.ndarray, N: int, tau: float | None, floor: float = DEFAULT_TAU_FLOOR) -> np.ndarray:
    if tau is not None:
        return np.full(expected.shape, float(tau))
    return np.maximum(floor, 4.0 * np.sqrt(expected * (1.0 - expected) / N))


def normality_verdict(seq: DigitSequence, measure: BernoulliMeasure, k: int,
                      schedule: Sequence[int] | int, tau: float | None = None, *,
                      floor: float = DEFAULT_TAU_FLOOR, table_cap: int = DEFAULT_TABLE_CAP) -> Verdict:
    """Heuristic normality call from a discrepancy curve.

    A pattern is a witness of non-normality when its |deviation| at the last
    checkpoint exceeds its threshold and is still above 75% of its value at
    the middle checkpoint. ``tau=None`` uses 4 * sqrt(q(1-q)/N) per pattern
    with an absolute floor.
    """
    if isinstance(schedule, int):
        schedule = default_schedule(schedule)
    schedule = sorted(set(int(n) for n in schedule))
    if not schedule or schedule[0] < 1:
        raise ValueError("schedule must hold positive horizons")
    _check_measure(seq, measure)
    base = seq.alphabet.size
    check_budget(base, k, table_cap)
    digits, horizon = _read(seq, schedule[-1], k)
    schedule = [n for n in schedule if n < horizon] + [horizon]
    expected = _expected_table(measure, k)

    curve = DiscrepancyCurve()
    counts = np.zeros(len(expected), dtype=np.int64)
    devs = []
    prev = 0
    for n in schedule:
        kernels.count_windows(digits, prev, n, base, k, counts)
        prev = n
        dev = np.abs(counts / n - expected)
        devs.append(dev)
        curve.add(n, float(dev.max()))

    report = FrequencyReport(horizon, base, k, counts, expected, requested=schedule[-1])
    final, mid = devs[-1], devs[(len(devs) - 1) // 2]
    flagged = (final > tau_table(expected, horizon, tau, floor)) & (final > STALL_FRACTION * mid)
    if not flagged.any():
        return Verdict(True, horizon, curve, report)
    order = np.flatnonzero(flagged)
    order = order[np.argsort(-final[order], kind="stable")]
    rows = [report._row(int(i)) for i in order]
    return Verdict(False, horizon, curve, report, witness=rows[0], flagged=rows)


def wall_matrix(seq: DigitSequence, measure: BernoulliMeasure, offsets: Sequence[int], steps: Sequence[int],
                N: int, tau: float | None = None, k: int = 3, schedule: Sequence[int] | None = None) -> dict:
    """Verdict for the selection along AP(offset, step), for every pair; keys are (offset, step)."""
    out = {}
    for step in steps:
        for offset in offsets:
            picked = select(seq.fresh(), AP(offset, step))
            out[(offset, step)] = normality_verdict(picked, measure, k, schedule or N, tau)
    return out


@dataclass
class CrossCheck:
    base_view: Verdict
    block_view: Verdict

    @property
    def agree(self) -> bool:
        return self.base_view.normal == self.block_view.normal


def lemma1_crosscheck(seq: DigitSequence, measure: BernoulliMeasure, k: int, N: int,
                      tau: float | None = None) -> CrossCheck:
    """Compare the length-k pattern verdict on the digits with the block-digit verdict on width-k blocks.

    The block view reads N // k blocks, so both views cover the same N digits.
    """
    if k < 2:
        raise ValueError(f"block width must be >= 2, got {k}")
    flat = normality_verdict(seq.fresh(), measure, k, N, tau)
    blocks = block_recode(seq.fresh(), k)
    blocked = normality_verdict(blocks, block_measure(measure, k), 1, N // k, tau)
    return CrossCheck(flat, blocked)


def report_to_dict(report: FrequencyReport, max_rows: int | None = None) -> dict:
    """Machine-readable form; field order is fixed."""
    rows = []
    for i, r in enumerate(report.rows()):
        if max_rows is not None and i >= max_rows:
            break
        rows.append({
            "length": r.length,
            "pattern": list(r.pattern),
            "count": r.count,
            "empirical": r.empirical,
            "expected": r.expected,
            "deviation": r.deviation,
        })
    worst = report.worst()
    return {
        "horizon": report.horizon,
        "requested": report.requested,
        "truncated": report.truncated,
        "base": report.base,
        "max_length": report.max_length,
        "alignment": report.alignment,
        "rows": rows,
        "summary": {
            "discrepancy": report.discrepancy(),
            "worst_pattern": list(worst.pattern),
            "worst_deviation": worst.deviation,
        },
    }
