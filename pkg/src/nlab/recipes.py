"""
End-to-end experiments behind ``nlab verify``.

Each recipe returns a ``RecipeResult`` holding every measured number, so the
CLI can print it and tests can assert on it. Recipes never raise for a failed
check; a hypothesis the parameters violate is reported with
``hypothesis_ok=False``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .analyze import count_patterns, normality_verdict, wall_matrix
from .generators import build, duplicate, fill_zero, iid_sampled, theorem3_point
from .selectors import PeriodicSet, lower_density, parse_selection, select, selection_family_for_theorem2, thickness_violation
from .shiftspace import BernoulliMeasure, block_measure, block_recode


@dataclass
class Check:
    name: str
    passed: bool
    measured: float | str | None = None
    target: float | str | None = None
    tolerance: float | None = None


@dataclass
class RecipeResult:
    recipe: str
    config: dict
    checks: list = field(default_factory=list)
    hypothesis_ok: bool = True
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.hypothesis_ok and all(c.passed for c in self.checks)

    @property
    def exit_code(self) -> int:
        if not self.hypothesis_ok:
            return 2
        return 0 if self.passed else 1

    def add(self, name, passed, measured=None, target=None, tolerance=None) -> Check:
        c = Check(name, bool(passed), _plain(measured), _plain(target), tolerance)
        self.checks.append(c)
        return c

    def to_dict(self) -> dict:
        return {
            "recipe": self.recipe,
            "status": "hypothesis-not-met" if not self.hypothesis_ok else ("pass" if self.passed else "fail"),
            "config": self.config,
            "note": self.note,
            "checks": [asdict(c) for c in self.checks],
        }


def _plain(x):
    if isinstance(x, (np.floating, Fraction)):
        return float(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


def thm1(b: int = 2, N: int = 1_000_000, steps=(2, 3, 4), offsets=(1, 2, 3), k: int = 3,
         tau: float = 0.02, inner: str | None = None) -> RecipeResult:
    """Doubling a normal stream: non-normal itself, normal along every AP with step >= 2."""
    inner = inner or f"champernowne b={b}"
    res = RecipeResult("thm1", dict(b=b, N=N, steps=list(steps), offsets=list(offsets), k=k, tau=tau, inner=inner))
    uniform = BernoulliMeasure.uniform(b)
    doubled = duplicate(build(inner), 2)

    whole = normality_verdict(doubled.fresh(), uniform, max(k, 2), N, tau)
    dev01 = whole.report.deviation((0, 1))
    predicted = -Fraction(1, 2 * b * b)
    res.add("l=1 deviation of [0,1]", abs(dev01 - float(predicted)) <= 0.01, dev01, predicted, 0.01)
    res.add("l=1 verdict non-normal", not whole.normal, whole.label, "non-normal-witness")

    grid = wall_matrix(doubled, uniform, offsets, steps, N, tau, k)
    for (off, step), v in sorted(grid.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        d = v.report.discrepancy()
        res.add(f"k={off} l={step} discrepancy", d < tau, d, f"< {tau}")
        res.add(f"k={off} l={step} verdict", v.normal, v.label, "consistent-with-normal")
    return res


def prop2(b: int = 2, N: int = 1_000_000, sel: str = "periodic:m=2,r=2", seed: int = 0,
          prefix: int = 100_000, tau: float = 0.02) -> RecipeResult:
    """Zero-filling around a normal stream placed on a selection of lower density < 1."""
    res = RecipeResult("prop2", dict(b=b, N=N, sel=sel, seed=seed, prefix=prefix, tau=tau))
    selection = parse_selection(sel)
    density = lower_density(selection)
    if density.value >= 1:
        res.hypothesis_ok = False
        res.note = f"selection has lower density {density.value}; the construction needs density < 1"
        return res
    delta = float(density.value)
    uniform = BernoulliMeasure.uniform(b)
    inner = iid_sampled(uniform, seed)
    filled = fill_zero(inner, selection)

    rep = count_patterns(filled.fresh(), N, 1, uniform)
    f0 = rep.frequency((0,))
    predicted = (1 - delta) + delta / b
    res.add("digit-0 frequency", abs(f0 - predicted) <= 0.005, f0, predicted, 0.005)
    bound = (1 - delta) * (1 - 1 / b) / 2
    res.add("digit-0 excess over 1/b beyond (1-d)(1-1/b)/2", f0 - 1 / b > bound, f0 - 1 / b, f"> {bound}")

    back = select(filled.fresh(), selection).take(prefix)
    same = np.array_equal(back, inner.prefix(prefix))
    res.add(f"select-back recovers first {prefix} digits", same, bool(same), True)

    v = normality_verdict(filled.fresh(), uniform, 1, N, tau)
    res.add("filled stream verdict non-normal", not v.normal, v.label, "non-normal-witness")
    return res


def thm2(b: int = 2, N: int = 1_000_000, ts=(2, 4, 8, 16), seed: int = 0, k: int = 3,
         tau: float = 0.02) -> RecipeResult:
    """Dense periodic selections: normal selections of a normal stream, and the zero-filled counterpart."""
    res = RecipeResult("thm2", dict(b=b, N=N, ts=list(ts), seed=seed, k=k, tau=tau))
    uniform = BernoulliMeasure.uniform(b)
    stream = iid_sampled(uniform, seed)

    full = count_patterns(stream.fresh(), N, k, uniform)
    res.add("full stream discrepancy", full.discrepancy() < tau, full.discrepancy(), f"< {tau}")
    for sel in selection_family_for_theorem2(ts):
        t = sel.m
        delta = float(lower_density(sel).value)
        picked = count_patterns(select(stream.fresh(), sel), N, k, uniform)
        res.add(f"t={t} selected discrepancy", picked.discrepancy() < tau, picked.discrepancy(), f"< {tau}")

        filled = fill_zero(iid_sampled(uniform, seed + t), sel)
        rep = count_patterns(filled, N, 1, uniform)
        dev = rep.frequency((0,)) - 1 / b
        bound = (1 - delta) * (1 - 1 / b) / 2
        res.add(f"t={t} zero-filled deviation exceeds bound", dev > bound - 0.01, dev, f"> {bound} - 0.01", 0.01)
        exact = (1 - delta) * (1 - 1 / b)
        res.add(f"t={t} zero-filled deviation", abs(dev - exact) <= 0.01, dev, exact, 0.01)
    return res


def thm3(b: int = 2, K: int = 2, L: int = 1, N: int = 1_000_000, seed: int = 7,
         sels=("periodic:m=2,r=1",), k: int = 3, tau: float = 0.01) -> RecipeResult:
    """The perturbed block measure: non-normal, yet normal along every thin periodic selection."""
    res = RecipeResult("thm3", dict(b=b, K=K, L=L, N=N, seed=seed, sels=list(sels), k=k, tau=tau))
    selections = [parse_selection(s) for s in sels]
    for text, s in zip(sels, selections):
        if not isinstance(s, PeriodicSet):
            res.hypothesis_ok = False
            res.note = f"{text} is not a periodic set"
            return res
        hit = thickness_violation(s, K, L)
        if hit is not None:
            res.hypothesis_ok = False
            res.note = f"{text} contains the whole block n={hit} of width {K} starting at {K * (hit - 1) + L}"
            return res

    uniform = BernoulliMeasure.uniform(b)
    point = theorem3_point(b, K, seed=seed, L=L)

    aligned = point.fresh()
    aligned.take(L - 1)
    blocks = count_patterns(block_recode(aligned, K), N, 1, block_measure(uniform, K), alignment=f"block K={K}")
    f0 = blocks.frequency((0,))
    target = 0.5 * b ** -K
    res.add("aligned all-zero block frequency", abs(f0 - target) <= 0.005, f0, target, 0.005)
    res.add("aligned all-zero block deviation from b^-K", abs(f0 - b ** -K) > 0.005, f0 - b ** -K, f"!= 0")

    for text, s in zip(sels, selections):
        rep = count_patterns(select(point.fresh(), s), N, k, uniform)
        res.add(f"{text} selected discrepancy", rep.discrepancy() < tau, rep.discrepancy(), f"< {tau}")
    return res


RECIPES = {"thm1": thm1, "prop2": prop2, "thm2": thm2, "thm3": thm3}
