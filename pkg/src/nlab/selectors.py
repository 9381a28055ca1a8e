"""
Increasing index sequences n_1 < n_2 < ... (1-based) and selection along them.

Text grammar used by the CLI::

    ap:k=2,l=3               k, k+l, k+2l, ...
    periodic:m=6,r=1|2|4|5   n with ((n-1) mod m) + 1 in r
    evper:pre=3|7;m=2,r=1    the listed indices, then the periodic set past max(pre)
    explicit:n=1|4|9         a finite sorted list
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import SelectionError, SpecSyntaxError
from .shiftspace import DigitSequence


class SelectionSequence:
    """Common surface of every selection spec. Subclasses are frozen dataclasses."""

    #: last index of a finite selection, ``None`` when unbounded
    last: int | None = None

    def indices_in(self, lo: int, hi: int) -> np.ndarray:
        """Selected indices n with lo <= n < hi, ascending, as int64."""
        raise NotImplementedError

    def contains(self, n: int) -> bool:
        return len(self.indices_in(n, n + 1)) == 1

    def count_upto(self, N: int) -> int:
        return len(self.indices_in(1, N + 1))

    def first(self, count: int) -> np.ndarray:
        """The first ``count`` indices (fewer if the selection is finite and shorter)."""
        out = []
        have = 0
        lo, width = 1, max(64, 2 * count)
        while have < count:
            if self.last is not None and lo > self.last:
                break
            idx = self.indices_in(lo, lo + width)
            out.append(idx[:count - have])
            have += len(out[-1])
            lo += width
            width *= 2
        return np.concatenate(out) if out else np.empty(0, dtype=np.int64)


def _arange_mod(lo, hi):
    return np.arange(lo, hi, dtype=np.int64)


@dataclass(frozen=True)
class AP(SelectionSequence):
    k: int
    l: int

    def __post_init__(self):
        if self.k < 1 or self.l < 1:
            raise SelectionError(f"AP needs k >= 1 and l >= 1, got k={self.k}, l={self.l}")

    def indices_in(self, lo, hi):
        lo = max(lo, self.k)
        if hi <= lo:
            return np.empty(0, dtype=np.int64)
        first = self.k + -(-(lo - self.k) // self.l) * self.l
        return np.arange(first, hi, self.l, dtype=np.int64)

    def __str__(self):
        return f"ap:k={self.k},l={self.l}"


@dataclass(frozen=True)
class PeriodicSet(SelectionSequence):
    m: int
    residues: frozenset

    def __post_init__(self):
        res = frozenset(int(r) for r in self.residues)
        object.__setattr__(self, "residues", res)
        if self.m < 1:
            raise SelectionError(f"period must be >= 1, got {self.m}")
        if not res:
            raise SelectionError("a periodic set needs at least one residue")
        if min(res) < 1 or max(res) > self.m:
            raise SelectionError(f"residues must lie in 1..{self.m}, got {sorted(res)}")

    @property
    def lookup(self) -> np.ndarray:
        table = np.zeros(self.m, dtype=np.bool_)
        table[[r - 1 for r in self.residues]] = True
        return table

    def indices_in(self, lo, hi):
        lo = max(lo, 1)
        if hi <= lo:
            return np.empty(0, dtype=np.int64)
        idx = _arange_mod(lo, hi)
        return idx[self.lookup[(idx - 1) % self.m]]

    def contains(self, n):
        return n >= 1 and ((n - 1) % self.m) + 1 in self.residues

    def count_upto(self, N):
        full, part = divmod(N, self.m)
        return full * len(self.residues) + sum(1 for r in self.residues if r <= part)

    def __str__(self):
        return f"periodic:m={self.m},r=" + "|".join(str(r) for r in sorted(self.residues))


@dataclass(frozen=True)
class Explicit(SelectionSequence):
    indices: tuple

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if any(i < 1 for i in idx):
            raise SelectionError("indices are 1-based")
        if any(a >= b for a, b in zip(idx, idx[1:])):
            raise SelectionError("explicit indices must be strictly increasing")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "_arr", np.array(idx, dtype=np.int64))

    @property
    def last(self):
        return self.indices[-1] if self.indices else 0

    def indices_in(self, lo, hi):
        a = self._arr
        return a[np.searchsorted(a, lo, "left"):np.searchsorted(a, hi, "left")]

    def __str__(self):
        return "explicit:n=" + "|".join(str(i) for i in self.indices)


@dataclass(frozen=True)
class EventuallyPeriodic(SelectionSequence):
    preperiod: tuple
    tail: PeriodicSet

    def __post_init__(self):
        object.__setattr__(self, "_head", Explicit(tuple(self.preperiod)))
        object.__setattr__(self, "preperiod", self._head.indices)

    @property
    def cutoff(self) -> int:
        return self.preperiod[-1] if self.preperiod else 0

    def indices_in(self, lo, hi):
        head = self._head.indices_in(lo, hi)
        tail = self.tail.indices_in(max(lo, self.cutoff + 1), hi)
        return np.concatenate((head, tail))

    def __str__(self):
        return "evper:pre=" + "|".join(str(i) for i in self.preperiod) + ";" + str(self.tail).split(":", 1)[1]


# --- grammar ------------------------------------------------------------------


def _fields(body: str, text: str, offset: int) -> dict[str, tuple[str, int]]:
    out = {}
    pos = offset
    for part in body.split(","):
        if "=" not in part:
            raise SpecSyntaxError(f"expected key=value, got {part!r}", text, pos)
        key, value = part.split("=", 1)
        out[key.strip()] = (value.strip(), pos + len(key) + 1)
        pos += len(part) + 1
    return out


def _ints(value: str, pos: int, text: str) -> list[int]:
    try:
        return [int(v) for v in value.split("|") if v.strip()]
    except ValueError:
        raise SpecSyntaxError(f"expected integers separated by '|', got {value!r}", text, pos) from None


def _need(fields, key, text, pos):
    if key not in fields:
        raise SpecSyntaxError(f"missing {key}=", text, pos)
    return fields[key]


def parse_selection(text: str) -> SelectionSequence:
    text = text.strip()
    if ":" not in text:
        raise SpecSyntaxError("expected <kind>:<fields>", text, 0)
    kind, body = text.split(":", 1)
    at = len(kind) + 1
    try:
        if kind == "ap":
            f = _fields(body, text, at)
            k = _ints(*_need(f, "k", text, at), text)
            l = _ints(*_need(f, "l", text, at), text)
            return AP(k[0], l[0])
        if kind == "periodic":
            f = _fields(body, text, at)
            m = _ints(*_need(f, "m", text, at), text)
            r = _ints(*_need(f, "r", text, at), text)
            return PeriodicSet(m[0], frozenset(r))
        if kind == "evper":
            if ";" not in body:
                raise SpecSyntaxError("evper needs 'pre=...;m=...,r=...'", text, at)
            head, tail = body.split(";", 1)
            f = _fields(head, text, at)
            pre = _ints(*_need(f, "pre", text, at), text)
            tail_sel = parse_selection("periodic:" + tail)
            return EventuallyPeriodic(tuple(pre), tail_sel)
        if kind == "explicit":
            f = _fields(body, text, at)
            return Explicit(tuple(_ints(*_need(f, "n", text, at), text)))
    except (IndexError, SelectionError) as exc:
        raise SpecSyntaxError(str(exc) or "missing value", text, at) from None
    raise SpecSyntaxError(f"unknown selection kind {kind!r}", text, 0)


# --- operations -----------------------------------------------------------------


def select(seq: DigitSequence, sel: SelectionSequence) -> DigitSequence:
    """Stream a_{n_1}, a_{n_2}, ... reading the input only as far as needed."""

    def transform(src, out):
        pos = 0
        for chunk in src.chunks():
            lo = pos + 1
            idx = sel.indices_in(lo, lo + len(chunk))
            pos += len(chunk)
            if len(idx):
                yield chunk[idx - lo]
            if sel.last is not None and pos >= sel.last:
                return

    known = None
    if seq.known_length is not None:
        known = sel.count_upto(seq.known_length)
    return seq.derive(seq.alphabet, transform, known)


@dataclass(frozen=True)
class Density:
    value: Fraction
    exact: bool
    horizon: int | None = None

    def __float__(self):
        return float(self.value)


def lower_density(sel: SelectionSequence, horizon: int | None = None) -> Density:
    """Lower asymptotic density; exact for periodic shapes, a finite-horizon estimate otherwise."""
    if isinstance(sel, AP):
        return Density(Fraction(1, sel.l), True)
    if isinstance(sel, PeriodicSet):
        return Density(Fraction(len(sel.residues), sel.m), True)
    if isinstance(sel, EventuallyPeriodic):
        return lower_density(sel.tail)
    if isinstance(sel, Explicit):
        N_max = horizon or max(sel.last, 1)
        checkpoints = sorted({max(1, int(round(N_max ** (i / 16)))) for i in range(17)})
        best = min(Fraction(sel.count_upto(N), N) for N in checkpoints)
        return Density(best, False, N_max)
    raise SelectionError(f"unsupported selection {sel!r}")


def thickness_violation(sel: SelectionSequence, K: int, L: int = 1) -> int | None:
    """Least n with {K(n-1)+L, ..., Kn+L-1} entirely inside ``sel``, or None.

    Only periodic sets are accepted. Block starts repeat modulo lcm(m, K), so
    n never needs to go past lcm(m, K) / K + 1.
    """
    if not isinstance(sel, PeriodicSet):
        raise SelectionError("thickness check is defined for periodic sets only")
    if K < 1 or L < 1:
        raise SelectionError(f"need K >= 1 and L >= 1, got K={K}, L={L}")
    period = math.lcm(sel.m, K)
    for n in range(1, period // K + 2):
        start = K * (n - 1) + L
        if all(sel.contains(i) for i in range(start, start + K)):
            return n
    return None


def selection_family_for_theorem2(ts=(2, 4, 8, 16)) -> list[PeriodicSet]:
    """PeriodicSet(t, {1..t-1}) for each t: density 1 - 1/t."""
    out = []
    for t in ts:
        if t < 2:
            raise SelectionError(f"t must be >= 2, got {t}")
        out.append(PeriodicSet(t, frozenset(range(1, t))))
    return out
