"""
Digit alphabets, Bernoulli product measures, cylinder patterns and digit streams.

A block alphabet of width K over base b has b**K digits. A block digit
[d_1, ..., d_K] is stored as the base-b integer d_1 d_2 ... d_K (row-major),
so block codes and plain digits share one integer representation.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .errors import (
    InvalidMeasureError,
    InvalidPatternError,
    InvalidStarredPatternError,
    MeasureMismatchError,
    NlabError,
)

CHUNK = 1 << 16
FLOAT_SUM_TOL = 1e-12
STAR = None


@dataclass(frozen=True)
class Alphabet:
    base: int
    width: int = 1

    def __post_init__(self):
        if int(self.base) != self.base or self.base < 2:
            raise InvalidMeasureError(f"base must be an integer >= 2, got {self.base!r}")
        if int(self.width) != self.width or self.width < 1:
            raise InvalidMeasureError(f"block width must be >= 1, got {self.width!r}")

    @property
    def size(self) -> int:
        return self.base ** self.width

    def block(self, k: int) -> "Alphabet":
        return Alphabet(self.base, self.width * k)

    def encode(self, block: Sequence[int]) -> int:
        if len(block) != self.width:
            raise InvalidPatternError(f"block {tuple(block)} does not have width {self.width}")
        code = 0
        for d in block:
            if not 0 <= d < self.base:
                raise InvalidPatternError(f"digit {d} outside base {self.base}")
            code = code * self.base + d
        return code

    def decode(self, code: int) -> tuple[int, ...]:
        if not 0 <= code < self.size:
            raise InvalidPatternError(f"block code {code} outside alphabet of size {self.size}")
        out = []
        for _ in range(self.width):
            code, d = divmod(code, self.base)
            out.append(d)
        return tuple(reversed(out))


def _as_weight(w):
    if isinstance(w, Fraction):
        return w
    if isinstance(w, (int, Rational)) and not isinstance(w, bool):
        return Fraction(w)
    if isinstance(w, str):
        return Fraction(w)
    return float(w)


@dataclass(frozen=True)
class BernoulliMeasure:
    """Product measure on strings given by one weight per alphabet digit.

    Weights are either all exact (``Fraction``) or all floats. Mixing a float
    into otherwise rational weights demotes the whole vector to floats.
    """

    alphabet: Alphabet
    weights: tuple

    def __post_init__(self):
        ws = tuple(_as_weight(w) for w in self.weights)
        if any(isinstance(w, float) for w in ws):
            ws = tuple(float(w) for w in ws)
        object.__setattr__(self, "weights", ws)
        if len(ws) != self.alphabet.size:
            raise InvalidMeasureError(f"expected {self.alphabet.size} weights, got {len(ws)}")
        if any(w < 0 for w in ws):
            raise InvalidMeasureError("weights must be non-negative")
        if self.exact:
            if sum(ws) != 1:
                raise InvalidMeasureError(f"weights sum to {sum(ws)}, not 1")
        elif abs(math.fsum(ws) - 1.0) > FLOAT_SUM_TOL:
            raise InvalidMeasureError(f"weights sum to {math.fsum(ws)!r}, not 1")

    @classmethod
    def uniform(cls, base: int, width: int = 1, exact: bool = True) -> "BernoulliMeasure":
        alpha = Alphabet(base, width)
        w = Fraction(1, alpha.size) if exact else 1.0 / alpha.size
        return cls(alpha, (w,) * alpha.size)

    @property
    def exact(self) -> bool:
        return all(isinstance(w, Fraction) for w in self.weights)

    @property
    def base(self) -> int:
        return self.alphabet.base

    @property
    def width(self) -> int:
        return self.alphabet.width

    def as_array(self) -> np.ndarray:
        return np.array([float(w) for w in self.weights], dtype=np.float64)

    def to_float(self) -> "BernoulliMeasure":
        return BernoulliMeasure(self.alphabet, tuple(float(w) for w in self.weights))

    def pattern_weights(self, length: int) -> np.ndarray:
        """Float cylinder measures of all length-``length`` patterns, indexed by pattern code."""
        w = self.as_array()
        out = w
        for _ in range(length - 1):
            out = np.multiply.outer(out, w).ravel()
        return out

    def same_as(self, other: "BernoulliMeasure") -> bool:
        if self.alphabet != other.alphabet:
            return False
        if self.exact and other.exact:
            return self.weights == other.weights
        return bool(np.allclose(self.as_array(), other.as_array(), rtol=0, atol=FLOAT_SUM_TOL))


@dataclass(frozen=True)
class Pattern:
    digits: tuple

    def __post_init__(self):
        ds = tuple(int(d) for d in self.digits)
        if not ds:
            raise InvalidPatternError("a pattern needs at least one digit")
        if any(d < 0 for d in ds):
            raise InvalidPatternError(f"negative digit in {ds}")
        object.__setattr__(self, "digits", ds)

    def __len__(self):
        return len(self.digits)

    def check(self, alphabet: Alphabet) -> None:
        for d in self.digits:
            if d >= alphabet.size:
                raise InvalidPatternError(f"digit {d} outside alphabet of size {alphabet.size}")

    def code(self, alphabet: Alphabet) -> int:
        self.check(alphabet)
        c = 0
        for d in self.digits:
            c = c * alphabet.size + d
        return c


@dataclass(frozen=True)
class StarredPattern:
    """m super-digits of width K over {0..b-1} plus the wildcard; every super-digit holds a star.

    Stars may be given as ``None`` or ``"*"``.
    """

    base: int
    width: int
    superdigits: tuple

    def __post_init__(self):
        Alphabet(self.base, self.width)
        sds = []
        for sd in self.superdigits:
            sd = tuple(STAR if (x is None or x == "*") else int(x) for x in sd)
            if len(sd) != self.width:
                raise InvalidStarredPatternError(f"super-digit {sd} does not have width {self.width}")
            if any(x is not STAR and not 0 <= x < self.base for x in sd):
                raise InvalidStarredPatternError(f"digit outside base {self.base} in {sd}")
            if STAR not in sd:
                raise InvalidStarredPatternError(f"super-digit {sd} has no star")
            sds.append(sd)
        if not sds:
            raise InvalidStarredPatternError("a starred pattern needs at least one super-digit")
        object.__setattr__(self, "superdigits", tuple(sds))

    @classmethod
    def parse(cls, text: str, base: int) -> "StarredPattern":
        """Parse ``"0*|*1"``: super-digits split on ``|``, one character per entry (base <= 10)."""
        if base > 10:
            raise InvalidStarredPatternError("text form only supports base <= 10")
        parts = [p.strip() for p in text.split("|")]
        widths = {len(p) for p in parts}
        if len(widths) != 1:
            raise InvalidStarredPatternError(f"super-digits of unequal width in {text!r}")
        sds = [tuple("*" if c == "*" else int(c) for c in p) for p in parts]
        return cls(base, widths.pop(), tuple(sds))

    @property
    def m(self) -> int:
        return len(self.superdigits)

    @property
    def concrete_count(self) -> int:
        return sum(x is not STAR for sd in self.superdigits for x in sd)

    def __str__(self):
        return "|".join("".join("*" if x is STAR else str(x) for x in sd) for sd in self.superdigits)

    def completions(self, j: int) -> list[tuple[int, ...]]:
        """Every concrete block matching super-digit ``j``."""
        choices = [range(self.base) if x is STAR else (x,) for x in self.superdigits[j]]
        return list(itertools.product(*choices))

    def allowed_table(self) -> np.ndarray:
        alpha = Alphabet(self.base, self.width)
        table = np.zeros((self.m, alpha.size), dtype=np.bool_)
        for j in range(self.m):
            for blk in self.completions(j):
                table[j, alpha.encode(blk)] = True
        return table


def all_starred_patterns(base: int, width: int, m: int) -> Iterator[StarredPattern]:
    entries = [STAR] + list(range(base))
    sds = [sd for sd in itertools.product(entries, repeat=width) if STAR in sd]
    for combo in itertools.product(sds, repeat=m):
        yield StarredPattern(base, width, combo)


# --- measures -------------------------------------------------------------


def cylinder_measure(measure: BernoulliMeasure, pattern: Pattern):
    """Measure of the cylinder of ``pattern``: the product of its digit weights."""
    if not isinstance(pattern, Pattern):
        pattern = Pattern(tuple(pattern))
    pattern.check(measure.alphabet)
    out = Fraction(1) if measure.exact else 1.0
    for d in pattern.digits:
        out *= measure.weights[d]
    return out


def block_measure(measure: BernoulliMeasure, k: int) -> BernoulliMeasure:
    if k < 1:
        raise InvalidMeasureError(f"block factor must be >= 1, got {k}")
    alpha = measure.alphabet.block(k)
    if not measure.exact:
        return BernoulliMeasure(alpha, tuple(measure.pattern_weights(k).tolist()))
    weights = []
    for combo in itertools.product(measure.weights, repeat=k):
        w = Fraction(1)
        for x in combo:
            w *= x
        weights.append(w)
    return BernoulliMeasure(alpha, tuple(weights))


def theorem3_measure(b: int, K: int, exact: bool = True) -> BernoulliMeasure:
    """Width-K block measure: b^-K everywhere, shifted by -(-1)^(digit sum) / (2 b^K) on {0,1}-blocks.

    The all-zero block gets half the uniform weight; its neighbours with odd
    digit sum get one and a half times.
    """
    alpha = Alphabet(b, K)
    unit = Fraction(1, b ** K)
    weights = []
    for blk in itertools.product(range(b), repeat=K):
        if all(d in (0, 1) for d in blk):
            weights.append(unit - (-1) ** sum(blk) * unit / 2)
        else:
            weights.append(unit)
    m = BernoulliMeasure(alpha, tuple(weights))
    return m if exact else m.to_float()


def remark3_measure(b: int) -> BernoulliMeasure:
    """Width-2 measure putting 1/b on each doubled digit [d, d] and nothing elsewhere."""
    alpha = Alphabet(b, 2)
    weights = [Fraction(1, b) if d1 == d2 else Fraction(0) for d1, d2 in itertools.product(range(b), repeat=2)]
    return BernoulliMeasure(alpha, tuple(weights))


def starred_measure_closed_form(pattern: StarredPattern) -> Fraction:
    """b^-n, n the number of concrete digits; valid under ``theorem3_measure(b, K)``."""
    return Fraction(1, pattern.base ** pattern.concrete_count)


def starred_measure_bruteforce(measure: BernoulliMeasure, pattern: StarredPattern):
    """Sum of cylinder measures over every completion of every star."""
    if measure.alphabet != Alphabet(pattern.base, pattern.width):
        raise MeasureMismatchError(
            f"pattern is over base {pattern.base} width {pattern.width}, "
            f"measure over base {measure.base} width {measure.width}"
        )
    alpha = measure.alphabet
    per_digit = [[alpha.encode(blk) for blk in pattern.completions(j)] for j in range(pattern.m)]
    total = Fraction(0) if measure.exact else 0.0
    for codes in itertools.product(*per_digit):
        total += cylinder_measure(measure, Pattern(codes))
    return total


# --- digit streams ----------------------------------------------------------


class DigitSequence:
    """A single-consumer stream of digits delivered as int64 numpy chunks.

    ``reopen`` (when given) builds an independent stream starting from the
    first digit again; generators and materialized prefixes always provide
    it. Streams read from a pipe do not.
    """

    materialized: np.ndarray | None = None

    def __init__(
        self,
        alphabet: Alphabet,
        chunks: Iterable[np.ndarray],
        *,
        known_length: int | None = None,
        reopen: Callable[[], "DigitSequence"] | None = None,
        validate: bool = False,
    ):
        self.alphabet = alphabet
        self.known_length = known_length
        self._reopen = reopen
        self._chunks = iter(chunks)
        if validate:
            self._chunks = _validated(self._chunks, alphabet.size)
        self._buf = np.empty(0, dtype=np.int64)
        self.consumed = 0
        self.exhausted = False
        self.report: dict = {}

    @classmethod
    def from_digits(cls, digits, alphabet: Alphabet | int) -> "DigitSequence":
        if isinstance(alphabet, int):
            alphabet = Alphabet(alphabet)
        arr = np.array(digits, dtype=np.int64).ravel()
        if arr.size and (arr.min() < 0 or arr.max() >= alphabet.size):
            raise InvalidPatternError(f"digits outside alphabet of size {alphabet.size}")
        arr.setflags(write=False)
        return cls._over(arr, alphabet)

    @classmethod
    def _over(cls, arr: np.ndarray, alphabet: Alphabet) -> "DigitSequence":
        def chunks():
            for i in range(0, len(arr), CHUNK):
                yield arr[i:i + CHUNK]

        seq = cls(alphabet, chunks(), known_length=len(arr), reopen=lambda: cls._over(arr, alphabet))
        seq.materialized = arr
        return seq

    @property
    def base(self) -> int:
        return self.alphabet.size

    @property
    def reopenable(self) -> bool:
        return self._reopen is not None

    def fresh(self) -> "DigitSequence":
        if self._reopen is None:
            raise NlabError("this stream is one-shot and cannot be re-read from the start")
        return self._reopen()

    def _pull(self) -> bool:
        for chunk in self._chunks:
            if len(chunk):
                self._buf = np.asarray(chunk, dtype=np.int64)
                return True
        self.exhausted = True
        return False

    def take(self, n: int) -> np.ndarray:
        """Consume and return up to ``n`` digits (fewer only if the stream ends)."""
        parts = []
        need = n
        while need > 0:
            if not len(self._buf) and not self._pull():
                break
            piece = self._buf[:need]
            self._buf = self._buf[need:]
            parts.append(piece)
            need -= len(piece)
        out = np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)
        self.consumed += len(out)
        return out

    def chunks(self) -> Iterator[np.ndarray]:
        """Consume the rest of the stream chunk by chunk."""
        while True:
            if not len(self._buf) and not self._pull():
                return
            out, self._buf = self._buf, np.empty(0, dtype=np.int64)
            self.consumed += len(out)
            yield out

    def __iter__(self) -> Iterator[int]:
        for chunk in self.chunks():
            yield from chunk.tolist()

    def prefix(self, n: int) -> np.ndarray:
        """First ``n`` digits of a fresh copy; leaves this stream untouched."""
        return self.fresh().take(n)

    def materialize(self, n: int) -> "DigitSequence":
        return DigitSequence.from_digits(self.take(n), self.alphabet)

    def derive(self, alphabet: Alphabet, transform: Callable[["DigitSequence"], Iterator[np.ndarray]],
               known_length: int | None = None) -> "DigitSequence":
        """A lazily transformed stream that consumes this one; reopening re-derives from a fresh copy."""
        reopen = None
        if self.reopenable:
            src = self

            def reopen():
                return src.fresh().derive(alphabet, transform, known_length)

        out = DigitSequence(alphabet, (), known_length=known_length, reopen=reopen)
        out._chunks = iter(transform(self, out))
        return out


def _validated(chunks, size):
    for chunk in chunks:
        chunk = np.asarray(chunk, dtype=np.int64)
        if chunk.size and (chunk.min() < 0 or chunk.max() >= size):
            raise InvalidPatternError(f"stream emitted a digit outside alphabet of size {size}")
        yield chunk


def block_recode(seq: DigitSequence, k: int) -> DigitSequence:
    """Group consecutive runs of ``k`` digits into single block digits.

    A trailing partial block is dropped; its length lands in
    ``result.report["dropped"]`` once the input is exhausted.
    """
    if k < 1:
        raise ValueError(f"block factor must be >= 1, got {k}")
    alpha = seq.alphabet.block(k)
    sub = seq.alphabet.size
    known = None if seq.known_length is None else seq.known_length // k
    powers = sub ** np.arange(k - 1, -1, -1, dtype=np.int64)

    def transform(src, out):
        rest = np.empty(0, dtype=np.int64)
        for chunk in src.chunks():
            if len(rest):
                chunk = np.concatenate((rest, chunk))
            full = len(chunk) - len(chunk) % k
            rest = chunk[full:]
            if full:
                yield chunk[:full].reshape(-1, k) @ powers
        out.report["dropped"] = len(rest)

    out = seq.derive(alpha, transform, known)
    if seq.known_length is not None:
        out.report["dropped"] = seq.known_length % k
    return out


def block_flatten(seq: DigitSequence) -> DigitSequence:
    """Inverse of ``block_recode``: expand width-K block digits back into base-b digits."""
    alpha = seq.alphabet
    K = alpha.width
    base_alpha = Alphabet(alpha.base)
    known = None if seq.known_length is None else seq.known_length * K

    def transform(src, out):
        for chunk in src.chunks():
            cols = np.empty((len(chunk), K), dtype=np.int64)
            rem = chunk
            for j in range(K - 1, -1, -1):
                rem, cols[:, j] = np.divmod(rem, alpha.base)
            yield cols.ravel()

    return seq.derive(base_alpha, transform, known)
