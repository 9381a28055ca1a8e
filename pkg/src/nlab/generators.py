"""
Digit sources: normal points for Bernoulli measures and the counterexample constructions.

Every generator returns a reopenable ``DigitSequence``; rebuilding from the same
``GeneratorSpec`` yields a bit-identical stream.

Randomness
----------
``iid_sampled`` draws raw 64-bit words from numpy's PCG64 bit generator seeded
through ``SeedSequence(seed)``. One word produces one digit: its top 53 bits
u are compared against integer thresholds T_d = floor(cum_d * 2**53), where
cum_d is the cumulative weight of digits 0..d, and the digit is the number of
thresholds <= u. A word landing exactly on a boundary therefore goes to the
upper digit, and zero-weight digits are never emitted. For exact weights the
thresholds are computed in rational arithmetic.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import MeasureMismatchError, ParameterError, SpecSyntaxError, UnsupportedConstructionError
from .selectors import SelectionSequence, parse_selection
from .shiftspace import (
    CHUNK,
    Alphabet,
    BernoulliMeasure,
    DigitSequence,
    block_flatten,
    remark3_measure,
    theorem3_measure,
)

U53 = 1 << 53


def champernowne(b: int) -> DigitSequence:
    """Base-b expansions of 1, 2, 3, ... written one after another."""
    alpha = Alphabet(b)

    def chunks():
        L = 1
        while True:
            lo, hi = b ** (L - 1), b ** L
            batch = max(1, CHUNK // L)
            for start in range(lo, hi, batch):
                nums = np.arange(start, min(start + batch, hi), dtype=np.int64)
                cols = np.empty((len(nums), L), dtype=np.int64)
                for j in range(L - 1, -1, -1):
                    nums, cols[:, j] = np.divmod(nums, b)
                yield cols.ravel()
            L += 1

    return DigitSequence(alpha, chunks(), reopen=lambda: champernowne(b))


def _thresholds(measure: BernoulliMeasure) -> np.ndarray:
    if measure.exact:
        cum = Fraction(0)
        out = []
        for w in measure.weights:
            cum += w
            out.append(math.floor(cum * U53))
    else:
        out = [math.floor(math.fsum(measure.weights[:d + 1]) * U53) for d in range(len(measure.weights))]
        out = [min(t, U53) for t in out]
    out[-1] = U53
    return np.array(out, dtype=np.uint64)


def iid_sampled(measure: BernoulliMeasure, seed: int) -> DigitSequence:
    """i.i.d. digits with the measure's weights, reproducible from ``seed``."""
    if not 0 <= seed < 1 << 64:
        raise ParameterError(f"seed must be a 64-bit unsigned integer, got {seed}")
    thresholds = _thresholds(measure)

    def chunks():
        bitgen = np.random.PCG64(np.random.SeedSequence(seed))
        while True:
            u = bitgen.random_raw(CHUNK) >> np.uint64(11)
            yield np.searchsorted(thresholds, u, side="right").astype(np.int64)

    return DigitSequence(measure.alphabet, chunks(), reopen=lambda: iid_sampled(measure, seed))


def stage_counts(measure: BernoulliMeasure, L: int, growth: int = 2) -> list[int]:
    """Repetition count ceil(mu(C_s) * B**(growth*L)) for every length-L string s, lexicographic."""
    if not measure.exact:
        raise UnsupportedConstructionError("weighted_concat needs exact rational weights")
    B = measure.alphabet.size
    den = math.lcm(*(w.denominator for w in measure.weights))
    nums = [int(w * den) for w in measure.weights]
    scale = B ** (growth * L)
    denL = den ** L
    counts = [1]
    for _ in range(L):
        counts = [c * n for c in counts for n in nums]
    return [-(-c * scale // denL) for c in counts]


def weighted_concat(measure: BernoulliMeasure, growth: int = 2) -> DigitSequence:
    """Deterministic stage-by-stage construction.

    Stage L = 1, 2, ... lists every length-L string s lexicographically and
    repeats each one ceil(mu(C_s) * B**(growth * L)) times in a row.
    """
    if not measure.exact:
        raise UnsupportedConstructionError("weighted_concat needs exact rational weights")
    if growth < 1:
        raise ParameterError(f"growth must be >= 1, got {growth}")
    B = measure.alphabet.size

    def chunks():
        L = 1
        while True:
            counts = stage_counts(measure, L, growth)
            # string number i has digits = base-B expansion of i, width L
            pending = []
            size = 0
            for i, c in enumerate(counts):
                if c == 0:
                    continue
                s = np.array([(i // B ** (L - 1 - j)) % B for j in range(L)], dtype=np.int64)
                reps_per_piece = max(1, CHUNK // L)
                while c > 0:
                    r = min(c, reps_per_piece)
                    pending.append(np.tile(s, r))
                    size += r * L
                    c -= r
                    if size >= CHUNK:
                        yield np.concatenate(pending)
                        pending, size = [], 0
            if pending:
                yield np.concatenate(pending)
            L += 1

    return DigitSequence(measure.alphabet, chunks(), reopen=lambda: weighted_concat(measure, growth))


def duplicate(inner: DigitSequence, r: int) -> DigitSequence:
    """Emit every digit of ``inner`` r times in a row."""
    if r < 2:
        raise ParameterError(f"repeat factor must be >= 2, got {r}")
    known = None if inner.known_length is None else inner.known_length * r

    def transform(src, out):
        for chunk in src.chunks():
            yield np.repeat(chunk, r)

    return inner.derive(inner.alphabet, transform, known)


def fill_zero(inner: DigitSequence, selection: SelectionSequence) -> DigitSequence:
    """Put the digits of ``inner`` at the selected positions and 0 everywhere else.

    The output stops right before the first selected position that ``inner``
    can no longer fill.
    """

    def transform(src, out):
        pos = 0
        while True:
            lo = pos + 1
            idx = selection.indices_in(lo, lo + CHUNK)
            got = src.take(len(idx))
            if len(got) < len(idx):
                stop = idx[len(got)]
                block = np.zeros(stop - lo, dtype=np.int64)
                block[idx[:len(got)] - lo] = got
                if len(block):
                    yield block
                return
            block = np.zeros(CHUNK, dtype=np.int64)
            block[idx - lo] = got
            yield block
            pos += CHUNK

    return inner.derive(inner.alphabet, transform)


def theorem3_point(b: int, K: int, seed: int = 0, inner: "GeneratorSpec | None" = None, L: int = 1) -> DigitSequence:
    """Base-b digits of a typical point for the perturbed width-K block measure.

    Block digits come from ``inner`` (default: i.i.d. sampling with ``seed``) and
    are flattened back to base b. For L > 1 the stream starts with L - 1 zero
    digits so the measure's blocks line up with {K(n-1)+L, ..., Kn+L-1}.
    """
    target = theorem3_measure(b, K)
    if inner is None:
        inner = GeneratorSpec("iid", {"b": b, "K": K, "measure": "thm3", "seed": seed})
    if inner.kind not in ("iid", "concat"):
        raise MeasureMismatchError(f"inner generator must sample a block measure, got {inner.kind}")
    got = measure_from_params(inner.params)
    if not got.same_as(target):
        raise MeasureMismatchError(f"inner measure is not the width-{K} perturbed measure for base {b}")
    if L < 1:
        raise ParameterError(f"L must be >= 1, got {L}")
    flat = block_flatten(build(inner))
    if L == 1:
        return flat

    def transform(src, out):
        yield np.zeros(L - 1, dtype=np.int64)
        yield from src.chunks()

    return flat.derive(flat.alphabet, transform)


# --- specs ------------------------------------------------------------------

KIND_ALIASES = {
    "champernowne": "champernowne",
    "iid": "iid",
    "iid_sampled": "iid",
    "concat": "concat",
    "weighted_concat": "concat",
    "thm3": "thm3",
    "theorem3_point": "thm3",
    "duplicate": "duplicate",
    "dup": "duplicate",
    "fill_zero": "fill_zero",
    "fillzero": "fill_zero",
}
PARAM_ORDER = ("b", "K", "L", "measure", "w", "growth", "r", "seed", "sel", "inner")
INT_PARAMS = {"b", "K", "L", "growth", "r", "seed"}
MEASURE_WORDS = {"uniform", "thm3", "remark3"}


@dataclass
class GeneratorSpec:
    """Kind plus parameters; ``str()`` gives the canonical text form, ``parse_spec`` reads it back."""

    kind: str
    params: dict = field(default_factory=dict)

    def __str__(self):
        parts = [self.kind]
        keys = sorted(self.params, key=lambda k: (PARAM_ORDER.index(k) if k in PARAM_ORDER else 99, k))
        for key in keys:
            value = self.params[key]
            if isinstance(value, GeneratorSpec):
                parts.append(f"{key}=[{value}]")
            else:
                parts.append(f"{key}={value}")
        return " ".join(parts)


def _tokens(text: str, offset: int = 0):
    """Split on whitespace; ``[...]`` groups (nesting allowed) stay inside one token."""
    i, n = 0, len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        start = i
        depth = 0
        while i < n and (depth or not text[i].isspace()):
            if text[i] == "[":
                depth += 1
            elif text[i] == "]":
                depth -= 1
                if depth < 0:
                    raise SpecSyntaxError("unbalanced ']'", text, offset + i)
            i += 1
        if depth:
            raise SpecSyntaxError("unclosed '['", text, offset + start)
        yield text[start:i], offset + start


def parse_spec(text: str, _full: str | None = None, _offset: int = 0) -> GeneratorSpec:
    full = text if _full is None else _full
    toks = list(_tokens(text, _offset))
    if not toks:
        raise SpecSyntaxError("empty generator spec", full, _offset)
    kind, pos = toks[0]
    if kind not in KIND_ALIASES:
        raise SpecSyntaxError(f"unknown generator kind {kind!r}", full, pos)
    params: dict = {}
    where = {}
    for tok, pos in toks[1:]:
        if "=" not in tok:
            if tok in MEASURE_WORDS:
                params["measure"] = tok
                where["measure"] = pos
                continue
            raise SpecSyntaxError(f"expected key=value, got {tok!r}", full, pos)
        key, value = tok.split("=", 1)
        where[key] = pos
        vpos = pos + len(key) + 1
        if value.startswith("["):
            if not value.endswith("]"):
                raise SpecSyntaxError("nested spec must end with ']'", full, vpos)
            params[key] = parse_spec(value[1:-1], full, vpos + 1)
        elif key in INT_PARAMS:
            if not re.fullmatch(r"\d+", value):
                raise SpecSyntaxError(f"{key} must be a non-negative integer, got {value!r}", full, vpos)
            params[key] = int(value)
        else:
            params[key] = value
    spec = GeneratorSpec(KIND_ALIASES[kind], params)
    extra = sorted(set(params) - _ALLOWED[spec.kind], key=where.get)
    if extra:
        raise SpecSyntaxError(f"{spec.kind} does not take {extra[0]}", full, where[extra[0]])
    try:
        _check(spec)
    except (ParameterError, UnsupportedConstructionError, ValueError) as exc:
        # point at the weights or selection when those failed, else at the kind
        key = next((k for k in ("w", "measure", "sel", "inner") if k in where and k in str(exc)), None)
        raise SpecSyntaxError(str(exc), full, where[key] if key else toks[0][1]) from None
    return spec


_REQUIRED = {
    "champernowne": {"b"},
    "iid": {"b", "seed"},
    "concat": {"b"},
    "thm3": {"b", "K"},
    "duplicate": {"r", "inner"},
    "fill_zero": {"sel", "inner"},
}
_ALLOWED = {
    "champernowne": {"b"},
    "iid": {"b", "K", "measure", "w", "seed"},
    "concat": {"b", "K", "measure", "w", "growth"},
    "thm3": {"b", "K", "L", "seed", "inner"},
    "duplicate": {"r", "inner"},
    "fill_zero": {"sel", "inner"},
}


def _check(spec: GeneratorSpec) -> None:
    missing = _REQUIRED[spec.kind] - set(spec.params)
    if missing:
        raise ParameterError(f"{spec.kind} needs {', '.join(sorted(missing))}")
    extra = set(spec.params) - _ALLOWED[spec.kind]
    if extra:
        raise ParameterError(f"{spec.kind} does not take {', '.join(sorted(extra))}")
    if spec.kind in ("duplicate", "fill_zero") and not isinstance(spec.params["inner"], GeneratorSpec):
        raise ParameterError(f"{spec.kind} needs a nested inner=[...] spec")
    if spec.kind == "fill_zero":
        parse_selection(spec.params["sel"])
    if spec.kind in ("iid", "concat"):
        measure_from_params(spec.params)
    if spec.kind == "thm3" and "inner" in spec.params and not isinstance(spec.params["inner"], GeneratorSpec):
        if spec.params["inner"] not in ("iid", "concat"):
            raise ParameterError("thm3 inner must be iid, concat or a nested [spec]")


def measure_from_params(params: dict) -> BernoulliMeasure:
    b = int(params["b"])
    K = int(params.get("K", 1))
    if "w" in params:
        weights = [w.strip() for w in str(params["w"]).split("|")]
        try:
            parsed = [Fraction(w) if re.fullmatch(r"-?\d+(/\d+)?", w) else float(w) for w in weights]
        except ValueError:
            raise ParameterError(f"cannot read weights {params['w']!r}") from None
        return BernoulliMeasure(Alphabet(b, K), tuple(parsed))
    name = params.get("measure", "uniform")
    if name == "uniform":
        return BernoulliMeasure.uniform(b, K)
    if name == "thm3":
        return theorem3_measure(b, K)
    if name == "remark3":
        if K != 2:
            raise ParameterError("remark3 measure has block width 2")
        return remark3_measure(b)
    raise ParameterError(f"unknown measure {name!r}")


def output_base(spec: GeneratorSpec) -> int:
    """Alphabet size of the stream ``build(spec)`` produces."""
    p = spec.params
    if spec.kind in ("iid", "concat"):
        return p["b"] ** p.get("K", 1)
    if spec.kind in ("champernowne", "thm3"):
        return p["b"]
    return output_base(p["inner"])


def build(spec: GeneratorSpec | str) -> DigitSequence:
    if isinstance(spec, str):
        spec = parse_spec(spec)
    _check(spec)
    p = spec.params
    if spec.kind == "champernowne":
        seq = champernowne(p["b"])
    elif spec.kind == "iid":
        seq = iid_sampled(measure_from_params(p), p["seed"])
    elif spec.kind == "concat":
        seq = weighted_concat(measure_from_params(p), p.get("growth", 2))
    elif spec.kind == "thm3":
        inner = p.get("inner", "iid")
        if not isinstance(inner, GeneratorSpec):
            q = {"b": p["b"], "K": p["K"], "measure": "thm3"}
            if inner == "iid":
                q["seed"] = p.get("seed", 0)
            inner = GeneratorSpec(inner, q)
        seq = theorem3_point(p["b"], p["K"], inner=inner, L=p.get("L", 1))
    elif spec.kind == "duplicate":
        seq = duplicate(build(p["inner"]), p["r"])
    elif spec.kind == "fill_zero":
        seq = fill_zero(build(p["inner"]), parse_selection(p["sel"]))
    else:
        raise ParameterError(f"unknown kind {spec.kind}")
    seq.spec = spec
    return seq
