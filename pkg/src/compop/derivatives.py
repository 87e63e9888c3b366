"""Densities of iterated transformations and conditional expectations.

For a nonsingular self-map phi of an atomic space, the density of the
pushforward measure against the base measure is, atom by atom,

    h(x) = mu(phi^{-1}({x})) / mu({x})        (0 on null atoms),

and the conditional expectation of f with respect to the sigma-algebra of
phi-fibers is the weighted fiber average

    E(f)(x) = integral of f over fiber(phi(x)) / mu(fiber(phi(x))).

Both land back in the representable function class: on a shifted family the
fiber over a generic member is the single member one step up, so densities
are eventually constant there, and fan-in members have empty fibers.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

from .errors import PreconditionError
from .extvalue import INF, ONE, ZERO, ExtValue, ext_sum
from .functions import MeasurableFn, TailValues, fn_compose, fn_mul, integrate
from .space import AtomId, AtomSet, MeasureSpace, atom_label, is_member
from .transform import (CheckResult, FanInRule, ShiftRule, Transformation,
                        check_nonsingular, fiber, fiber_measure, iterate,
                        preimage)


def _require_nonsingular(space: MeasureSpace, phi: Transformation) -> None:
    result = check_nonsingular(space, phi)
    if not result:
        raise PreconditionError(
            "phi is nonsingular",
            f"null atom {atom_label(result.witness)} has a fiber of "
            "positive measure")


def _family_override_indices(space: MeasureSpace, psi: Transformation,
                             fam_name: str) -> set:
    """Indices n where the fiber of (fam_name, n) may differ from the
    generic single-member shift preimage."""
    fam = space.family(fam_name)
    hits: set[int] = set()

    def note(target: AtomId) -> None:
        if is_member(target) and target[0] == fam_name:
            hits.add(target[1])

    for target in psi.explicit.values():
        note(target)
    for name, rule in psi.rules.items():
        for n, target in rule.exceptions.items():
            note(target)
            if (name == fam_name and isinstance(rule, ShiftRule)
                    and n - rule.shift >= fam.start):
                hits.add(n - rule.shift)  # generic preimage was redirected
        if isinstance(rule, FanInRule):
            note(rule.target)
    return hits


def radon_nikodym(space: MeasureSpace, phi: Transformation,
                  n: int = 1) -> MeasurableFn:
    """Density of the n-th iterate's pushforward; n = 1 is the map itself."""
    _require_nonsingular(space, phi)
    psi = iterate(space, phi, n)
    return _density_of(space, psi)


def _density_of(space: MeasureSpace, psi: Transformation) -> MeasurableFn:
    values = {}
    for a, w in space.atoms:
        if w == 0:
            values[a] = ZERO  # any value is a.e.-equivalent; fix 0
        else:
            values[a] = fiber_measure(space, psi, a) / ExtValue(w)
    tails = {}
    for fam in space.families:
        rule = psi.rules[fam.name]
        if isinstance(rule, FanInRule):
            tails[fam.name] = TailValues(ZERO)
            continue
        generic = ExtValue(fam.ratio ** rule.shift)
        exceptions = {}
        for idx in _family_override_indices(space, psi, fam.name):
            atom = (fam.name, idx)
            exceptions[idx] = (fiber_measure(space, psi, atom)
                               / ExtValue(fam.weight(idx)))
        tails[fam.name] = TailValues(generic, 1, exceptions).simplified()
    return MeasurableFn(values, tails)


@dataclass
class DerivativeTable:
    """Iterated transformations and their densities, computed once.

    Pure and immutable from the caller's perspective; the internal caches
    only ever grow and all entries are themselves immutable.
    """

    space: MeasureSpace
    phi: Transformation
    _iterates: Dict[int, Transformation] = field(default_factory=dict)
    _densities: Dict[int, MeasurableFn] = field(default_factory=dict)

    def __post_init__(self) -> None:
        _require_nonsingular(self.space, self.phi)

    def iterate(self, n: int) -> Transformation:
        if n not in self._iterates:
            if n == 0:
                from .transform import identity_transformation
                self._iterates[0] = identity_transformation(self.space)
            else:
                from .transform import compose
                self._iterates[n] = compose(
                    self.space, self.phi, self.iterate(n - 1))
        return self._iterates[n]

    def density(self, n: int = 1) -> MeasurableFn:
        """h for the n-th iterate; density(0) is 1 a.e."""
        if n not in self._densities:
            self._densities[n] = _density_of(self.space, self.iterate(n))
        return self._densities[n]


def densely_defined(space: MeasureSpace, phi: Transformation,
                    table: Optional[DerivativeTable] = None) -> CheckResult:
    """Is the induced composition operator densely defined, i.e. is the
    density finite almost everywhere? Witness: an atom where it is inf."""
    table = table or DerivativeTable(space, phi)
    h = table.density(1)
    for a in space.positive_explicit():
        if h.values[a].is_infinite:
            return CheckResult(False, a)
    for fam in space.families:
        rule = h.tails[fam.name]
        for n in sorted(rule.exceptions):
            if rule.value_at(n).is_infinite:
                return CheckResult(False, (fam.name, n))
        if rule.coeff.is_infinite:
            n = fam.start
            while n in rule.exceptions:
                n += 1
            return CheckResult(False, (fam.name, n))
    return CheckResult(True)


def essential_sup(f: MeasurableFn, space: MeasureSpace) -> ExtValue:
    """Supremum of f over atoms of positive weight."""
    best = ZERO
    for a in space.positive_explicit():
        best = max(best, f.values[a])
    for fam in space.families:
        rule = f.tails[fam.name]
        for n in rule.exceptions:
            best = max(best, rule.value_at(n))
        if rule.coeff.is_infinite:
            return INF
        if not rule.coeff.is_zero:
            if rule.ratio > 1:
                return INF
            best = max(best, rule.generic_at(fam.start))
    return best


def bounded(space: MeasureSpace, phi: Transformation,
            table: Optional[DerivativeTable] = None) -> bool:
    """Is the operator bounded on the whole of L2, i.e. is the density
    essentially bounded?"""
    table = table or DerivativeTable(space, phi)
    return not essential_sup(table.density(1), space).is_infinite


# -- conditional expectation -----------------------------------------------------


def fiber_average(f: MeasurableFn, space: MeasureSpace,
                  phi: Transformation) -> MeasurableFn:
    """g(t) = (integral of f over the fiber of t) / (fiber mass of t).

    Empty fibers give 0 (the 0/0 fiber convention). An infinite fiber mass
    means the fiber sigma-algebra fails sigma-finiteness, so averaging is
    refused.
    """

    def average_at(atom: AtomId) -> ExtValue:
        fib = fiber(space, phi, atom)
        mass = fiber_measure(space, phi, atom)
        if mass.is_zero:
            return ZERO
        if mass.is_infinite:
            raise PreconditionError(
                "conditional expectation undefined: mu restricted to the "
                "fiber sigma-algebra is not sigma-finite",
                f"fiber over {atom_label(atom)} has infinite measure")
        return integrate(f, space, fib.as_atomset()) / mass

    values = {a: average_at(a) for a in space.explicit_ids}
    tails = {}
    for fam in space.families:
        rule = phi.rules[fam.name]
        if isinstance(rule, FanInRule):
            tails[fam.name] = TailValues(ZERO)
            continue
        inner = f.tails[fam.name]
        if inner.coeff.is_infinite or inner.coeff.is_zero:
            coeff, ratio = inner.coeff, 1
        else:
            coeff = ExtValue(inner.coeff.as_rat()
                             * inner.ratio ** rule.shift)
            ratio = inner.ratio
        pointwise = _family_override_indices(space, phi, fam.name)
        pointwise.update(
            m - rule.shift for m in inner.exceptions
            if m - rule.shift >= fam.start)
        exceptions = {
            m: average_at((fam.name, m)) for m in pointwise}
        tails[fam.name] = TailValues(coeff, ratio, exceptions).simplified()
    return MeasurableFn(values, tails)


def conditional_expectation(f: MeasurableFn, space: MeasureSpace,
                            phi: Transformation) -> MeasurableFn:
    """E(f) with respect to the sigma-algebra of phi-fibers.

    Constant on every fiber by construction; agrees with f in integral over
    every phi-pullback set. Atoms whose fiber is null get the value 0.
    """
    return fn_compose(fiber_average(f, space, phi), phi, space)


def averaging_identity_report(
        f: MeasurableFn, space: MeasureSpace, phi: Transformation,
) -> List[Tuple[str, ExtValue, ExtValue]]:
    """Both sides of the defining identity of E(f), per generating set.

    The generating family is one singleton per explicit atom plus one whole
    tail per family; these generate the atoms' sigma-algebra, so agreement
    here is agreement everywhere.
    """
    ef = conditional_expectation(f, space, phi)
    rows = []
    regions = [(atom_label(a), AtomSet.singleton(a))
               for a in space.explicit_ids]
    regions += [(f"{fam.name}[*]", AtomSet.family_tail(space, fam.name))
                for fam in space.families]
    for label, region in regions:
        pulled = preimage(space, phi, region)
        rows.append((label,
                     integrate(f, space, pulled),
                     integrate(ef, space, pulled)))
    return rows


# -- measure transport -------------------------------------------------------------


def transport_integral(f: MeasurableFn, space: MeasureSpace,
                       phi: Transformation,
                       table: Optional[DerivativeTable] = None,
                       ) -> Tuple[ExtValue, ExtValue]:
    """Both sides of the change-of-variables identity

        integral of (f o phi) dmu  ==  integral of f * h dmu.

    They agree for every representable nonnegative f; returning the pair
    keeps the check diagnosable.
    """
    table = table or DerivativeTable(space, phi)
    lhs = integrate(fn_compose(f, phi, space), space)
    rhs = integrate(fn_mul(f, table.density(1)), space)
    return lhs, rhs
