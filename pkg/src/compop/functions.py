"""Nonnegative measurable functions, finitely represented.

A function stores one extended value per explicit atom, and per tail family
a geometric rule coeff * ratio**n (ratio a positive rational, coeff an
extended value; ratio 1 gives constants) plus finitely many exceptional
indices. The class is closed under pointwise sum, product, integer powers,
quotients, composition with a representable transformation, and value
relabelling against eventually-constant rules -- which is everything the
density and conditional-expectation machinery produces.

Almost-everywhere comparisons are decided symbolically: two geometric rules
agree on a cofinite set of indices iff they agree as rules, and otherwise a
smallest differing index is exhibited as a witness.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional, Tuple

from ._rat import RatType, as_rat, rat
from .errors import InvalidSpaceError, RepresentationError
from .extvalue import INF, ONE, ZERO, ExtValue, exv, ext_sum, geometric_tail
from .space import (AtomId, AtomSet, MeasureSpace, atom_label, is_member)
from .transform import ShiftRule, Transformation


@dataclass(frozen=True)
class TailValues:
    """Values on one family: n -> coeff * ratio**n, plus exceptions."""

    coeff: ExtValue
    ratio: RatType = 1
    exceptions: Mapping[int, ExtValue] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "coeff", exv(self.coeff))
        object.__setattr__(self, "ratio", as_rat(self.ratio))
        object.__setattr__(
            self, "exceptions",
            {n: exv(v) for n, v in self.exceptions.items()})
        if self.ratio <= 0:
            raise InvalidSpaceError("tail value ratio must be positive")

    def value_at(self, n: int) -> ExtValue:
        v = self.exceptions.get(n)
        if v is not None:
            return v
        return self.generic_at(n)

    def generic_at(self, n: int) -> ExtValue:
        if self.coeff.is_infinite or self.coeff.is_zero:
            return self.coeff
        return ExtValue(self.coeff.as_rat() * self.ratio ** n)

    def is_constant_rule(self) -> bool:
        return self.ratio == 1 or self.coeff.is_zero or self.coeff.is_infinite

    def simplified(self) -> "TailValues":
        """Drop exceptions that coincide with the generic rule."""
        kept = {n: v for n, v in self.exceptions.items()
                if v != self.generic_at(n)}
        if len(kept) == len(self.exceptions):
            return self
        return TailValues(self.coeff, self.ratio, kept)


@dataclass(frozen=True)
class MeasurableFn:
    """A function atoms -> [0, inf], one entry per explicit atom and one
    tail rule per family."""

    values: Mapping[str, ExtValue]
    tails: Mapping[str, TailValues] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(
            self, "values", {a: exv(v) for a, v in self.values.items()})
        object.__setattr__(self, "tails", dict(self.tails))

    @staticmethod
    def constant(space: MeasureSpace, value) -> "MeasurableFn":
        v = exv(value)
        return MeasurableFn(
            {a: v for a in space.explicit_ids},
            {f.name: TailValues(v) for f in space.families})

    @staticmethod
    def from_values(space: MeasureSpace,
                    values: Mapping[str, object],
                    tails: Optional[Mapping[str, TailValues]] = None,
                    ) -> "MeasurableFn":
        tails = dict(tails or {})
        missing = set(space.explicit_ids) - set(values)
        if missing:
            raise InvalidSpaceError(f"no value for atoms {sorted(missing)}")
        for fam in space.families:
            if fam.name not in tails:
                raise InvalidSpaceError(f"no tail rule for {fam.name!r}")
        return MeasurableFn(
            {a: exv(values[a]) for a in space.explicit_ids}, tails)

    @staticmethod
    def indicator(space: MeasureSpace, region: AtomSet) -> "MeasurableFn":
        values = {a: ONE if region.contains(a) else ZERO
                  for a in space.explicit_ids}
        tails = {}
        segments = {fam: (start, excluded)
                    for fam, start, excluded in region.tails}
        for fam in space.families:
            seg = segments.get(fam.name)
            exceptions: dict[int, ExtValue] = {}
            if seg is None:
                coeff = ZERO
            else:
                start, excluded = seg
                coeff = ONE
                exceptions = {n: ZERO for n in excluded}
                exceptions.update(
                    {n: ZERO for n in range(fam.start, start)})
            for atom in region.atoms:
                if is_member(atom) and atom[0] == fam.name:
                    exceptions[atom[1]] = ONE
            tails[fam.name] = TailValues(coeff, 1, exceptions)
        return MeasurableFn(values, tails)

    def at(self, atom: AtomId) -> ExtValue:
        if is_member(atom):
            return self.tails[atom[0]].value_at(atom[1])
        return self.values[atom]

    def tail(self, fam: str) -> TailValues:
        return self.tails[fam]


def _check_same_shape(f: MeasurableFn, g: MeasurableFn) -> None:
    if set(f.values) != set(g.values) or set(f.tails) != set(g.tails):
        raise RepresentationError(
            "functions are defined over different spaces")


def _merge_exception_indices(*rules: TailValues) -> set:
    merged: set[int] = set()
    for rule in rules:
        merged.update(rule.exceptions)
    return merged


def _zip_tails(f: MeasurableFn, g: MeasurableFn, fam: str,
               op: Callable[[ExtValue, ExtValue], ExtValue],
               coeff: ExtValue, ratio) -> TailValues:
    rf, rg = f.tails[fam], g.tails[fam]
    exceptions = {
        n: op(rf.value_at(n), rg.value_at(n))
        for n in _merge_exception_indices(rf, rg)}
    return TailValues(coeff, ratio, exceptions).simplified()


def fn_add(f: MeasurableFn, g: MeasurableFn) -> MeasurableFn:
    _check_same_shape(f, g)
    values = {a: f.values[a] + g.values[a] for a in f.values}
    tails = {}
    for fam in f.tails:
        rf, rg = f.tails[fam], g.tails[fam]
        if rf.coeff.is_zero:
            coeff, ratio = rg.coeff, rg.ratio
        elif rg.coeff.is_zero:
            coeff, ratio = rf.coeff, rf.ratio
        elif rf.ratio == rg.ratio and not (rf.coeff.is_infinite
                                           or rg.coeff.is_infinite):
            coeff, ratio = rf.coeff + rg.coeff, rf.ratio
        elif rf.coeff.is_infinite or rg.coeff.is_infinite:
            coeff, ratio = INF, rat(1)
        else:
            raise RepresentationError(
                f"sum of tails with ratios {rf.ratio} and {rg.ratio} on "
                f"{fam!r} is not geometric")
        tails[fam] = _zip_tails(f, g, fam, lambda x, y: x + y, coeff, ratio)
    return MeasurableFn(values, tails)


def fn_mul(f: MeasurableFn, g: MeasurableFn) -> MeasurableFn:
    _check_same_shape(f, g)
    values = {a: f.values[a] * g.values[a] for a in f.values}
    tails = {}
    for fam in f.tails:
        rf, rg = f.tails[fam], g.tails[fam]
        coeff = rf.coeff * rg.coeff
        ratio = rf.ratio * rg.ratio
        tails[fam] = _zip_tails(f, g, fam, lambda x, y: x * y, coeff, ratio)
    return MeasurableFn(values, tails)


def fn_div(f: MeasurableFn, g: MeasurableFn,
           space: MeasureSpace) -> MeasurableFn:
    """Pointwise f/g on atoms of positive weight; 0 on null atoms.

    Null atoms are exactly where the quotient may be ill-posed without
    mattering almost everywhere, so they are pinned to 0 rather than
    evaluated. 0/0 or inf/inf on a positive-weight atom still raises.
    """
    _check_same_shape(f, g)
    values = {
        a: (f.values[a] / g.values[a]) if space.weight(a) > 0 else ZERO
        for a in f.values}
    tails = {}
    for fam in f.tails:
        rf, rg = f.tails[fam], g.tails[fam]
        coeff = rf.coeff / rg.coeff
        ratio = rf.ratio / rg.ratio
        tails[fam] = _zip_tails(f, g, fam, lambda x, y: x / y, coeff, ratio)
    return MeasurableFn(values, tails)


def fn_scale(f: MeasurableFn, scalar) -> MeasurableFn:
    c = exv(scalar)
    values = {a: c * v for a, v in f.values.items()}
    tails = {
        fam: TailValues(
            c * rule.coeff, rule.ratio,
            {n: c * v for n, v in rule.exceptions.items()}).simplified()
        for fam, rule in f.tails.items()}
    return MeasurableFn(values, tails)


def fn_pow(f: MeasurableFn, n: int) -> MeasurableFn:
    """Pointwise f**n with the convention x**0 = 1 for every x."""
    if n < 0:
        raise ValueError("powers are defined for exponents in Z+")
    values = {a: v ** n for a, v in f.values.items()}
    tails = {}
    for fam, rule in f.tails.items():
        tails[fam] = TailValues(
            rule.coeff ** n, rule.ratio ** n if n else rat(1),
            {i: v ** n for i, v in rule.exceptions.items()}).simplified()
    return MeasurableFn(values, tails)


def fn_compose(f: MeasurableFn, phi: Transformation,
               space: MeasureSpace) -> MeasurableFn:
    """The pullback f(phi(.)) as a representable function."""
    values = {a: f.at(phi.apply(a)) for a in f.values}
    tails = {}
    for fam_name, rule in phi.rules.items():
        fam = space.family(fam_name)
        pointwise = set(rule.exceptions)
        if isinstance(rule, ShiftRule):
            inner = f.tails[fam_name]
            pointwise.update(
                m + rule.shift for m in inner.exceptions
                if m + rule.shift >= fam.start)
            pointwise.update(range(fam.start, fam.start + rule.shift))
            if inner.coeff.is_infinite or inner.coeff.is_zero:
                coeff, ratio = inner.coeff, rat(1)
            else:
                coeff = ExtValue(
                    inner.coeff.as_rat() * inner.ratio ** (-rule.shift))
                ratio = inner.ratio
        else:  # FanInRule
            coeff, ratio = f.at(rule.target), rat(1)
        exceptions = {
            n: f.at(phi.apply((fam_name, n))) for n in pointwise}
        tails[fam_name] = TailValues(coeff, ratio, exceptions).simplified()
    return MeasurableFn(values, tails)


def indicator_of_value(f: MeasurableFn, value: ExtValue,
                       space: MeasureSpace) -> MeasurableFn:
    """The 0/1 function [f == value]."""
    value = exv(value)
    values = {a: ONE if v == value else ZERO for a, v in f.values.items()}
    tails = {}
    for fam, rule in f.tails.items():
        start = space.family(fam).start
        exceptions = {
            n: ONE if v == value else ZERO
            for n, v in rule.exceptions.items()}
        if rule.is_constant_rule():
            coeff = ONE if rule.generic_at(0) == value else ZERO
        else:
            coeff = ZERO
            hit = _solve_geometric(rule, value)
            if hit is not None and hit >= start and hit not in rule.exceptions:
                exceptions[hit] = ONE
        tails[fam] = TailValues(coeff, 1, exceptions).simplified()
    return MeasurableFn(values, tails)


def _solve_geometric(rule: TailValues, value: ExtValue) -> Optional[int]:
    """Smallest n with coeff * ratio**n == value, for a non-constant rule."""
    if value.is_infinite or value.is_zero:
        return None
    target = value.as_rat() / rule.coeff.as_rat()
    n, term = 0, rat(1)
    growing = rule.ratio > 1
    while (term < target) == growing and term != target:
        term *= rule.ratio
        n += 1
        if n > 64 * 1024:  # unreachable for sane inputs; defensive
            raise RepresentationError("geometric solve did not terminate")
    return n if term == target else None


def apply_value_map(f: MeasurableFn,
                    mapping: Mapping[ExtValue, ExtValue],
                    default: ExtValue = ZERO) -> MeasurableFn:
    """Relabel values of f through a finitely-supported map (simple Borel
    function); requires eventually-constant tails."""
    table = {exv(k): exv(v) for k, v in mapping.items()}

    def image(v: ExtValue) -> ExtValue:
        return table.get(v, default)

    values = {a: image(v) for a, v in f.values.items()}
    tails = {}
    for fam, rule in f.tails.items():
        if not rule.is_constant_rule():
            raise RepresentationError(
                f"value relabelling needs an eventually constant tail on "
                f"{fam!r}; rule has ratio {rule.ratio}")
        tails[fam] = TailValues(
            image(rule.generic_at(0)), 1,
            {n: image(v) for n, v in rule.exceptions.items()}).simplified()
    return MeasurableFn(values, tails)


def attained_values(f: MeasurableFn, space: MeasureSpace) -> frozenset:
    """The set of values f takes on atoms of positive weight."""
    out = {f.values[a] for a in space.positive_explicit()}
    for fam in space.families:
        rule = f.tails[fam.name]
        if not rule.is_constant_rule():
            raise RepresentationError(
                f"{fam.name!r} attains infinitely many values")
        out.add(rule.generic_at(0))
        out.update(rule.value_at(n) for n in rule.exceptions)
    return frozenset(out)


# -- almost-everywhere comparison ------------------------------------------------

#: a differing atom together with the two values there
Difference = Tuple[AtomId, ExtValue, ExtValue]


def ae_difference(f: MeasurableFn, g: MeasurableFn,
                  space: MeasureSpace) -> Optional[Difference]:
    """A positive-weight atom where f and g differ, or None."""
    _check_same_shape(f, g)
    for a in space.positive_explicit():
        if f.values[a] != g.values[a]:
            return (a, f.values[a], g.values[a])
    for fam in space.families:
        rf, rg = f.tails[fam.name], g.tails[fam.name]
        checked = _merge_exception_indices(rf, rg)
        for n in sorted(checked):
            if rf.value_at(n) != rg.value_at(n):
                return ((fam.name, n), rf.value_at(n), rg.value_at(n))
        if not _rules_equal(rf, rg):
            n = fam.start
            remaining = len(checked) + 2
            while remaining:
                if n not in checked:
                    if rf.generic_at(n) != rg.generic_at(n):
                        return ((fam.name, n),
                                rf.generic_at(n), rg.generic_at(n))
                    remaining -= 1  # distinct rules cross at most once
                n += 1
            raise RepresentationError(
                f"tails on {fam.name!r} differ as rules but no witness "
                "index was found")
    return None


def _rules_equal(a: TailValues, b: TailValues) -> bool:
    if a.coeff.is_infinite or b.coeff.is_infinite:
        return a.coeff.is_infinite and b.coeff.is_infinite
    if a.coeff.is_zero or b.coeff.is_zero:
        return a.coeff.is_zero and b.coeff.is_zero
    return a.coeff == b.coeff and a.ratio == b.ratio


def ae_equal(f: MeasurableFn, g: MeasurableFn, space: MeasureSpace) -> bool:
    """Equality off null sets; on atomic spaces, equality at every atom of
    positive weight."""
    return ae_difference(f, g, space) is None


def pointwise_equal(f: MeasurableFn, g: MeasurableFn,
                    space: MeasureSpace) -> bool:
    """Equality at every atom, null ones included."""
    if any(f.values[a] != g.values[a] for a in f.values):
        return False
    if ae_difference(f, g, space) is not None:
        return False
    for fam in space.families:
        rf, rg = f.tails[fam.name], g.tails[fam.name]
        for n in _merge_exception_indices(rf, rg):
            if rf.value_at(n) != rg.value_at(n):
                return False
    return True


# -- integration -----------------------------------------------------------------


def integrate(f: MeasurableFn, space: MeasureSpace,
              region: Optional[AtomSet] = None) -> ExtValue:
    """Exact integral of f over the region (default: the whole space)."""
    if region is None:
        region = AtomSet.whole(space)
    total = ext_sum(
        f.at(a) * ExtValue(space.weight(a)) for a in region.atoms)
    for fam_name, start, excluded in region.tails:
        fam = space.family(fam_name)
        rule = f.tails[fam_name]
        start = max(start, fam.start)
        special = set(excluded) | {
            n for n in rule.exceptions if n >= start}
        generic = geometric_tail(
            rule.coeff * ExtValue(fam.coeff), rule.ratio * fam.ratio, start)
        if not generic.is_infinite:
            removed = ext_sum(
                rule.generic_at(n) * ExtValue(fam.weight(n))
                for n in special)
            generic = ExtValue(generic.as_rat() - removed.as_rat())
        elif special:
            # removing finitely many terms cannot tame a divergent tail,
            # but if the generic part over the remaining indices is what
            # diverges we must keep inf; only an all-zero coefficient
            # could change that and is handled by geometric_tail already
            generic = INF
        total = total + generic
        total = total + ext_sum(
            rule.value_at(n) * ExtValue(fam.weight(n))
            for n in rule.exceptions if n >= start and n not in excluded)
    return total
