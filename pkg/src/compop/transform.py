"""Measurable self-maps of atomic spaces, their fibers and iterates.

A transformation maps every explicit atom somewhere, and governs each tail
family by one of two rules:

* Shift(k): member n goes to member n-k, except for finitely many listed
  indices (which must at least cover the k members at the bottom of the
  family, where n-k would fall off the tail).
* FanIn(target): every member goes to a single atom, except for finitely
  many listed indices.

Nothing is allowed to map into a fan-in family, so fibers over fan-in
members are empty. The class is closed under composition: iterates of a
representable transformation stay representable, with the boundary
exception sets growing by finitely many entries per step.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Tuple, Union

from .errors import InvalidSpaceError
from .extvalue import ExtValue, ext_sum
from .space import AtomId, AtomSet, MeasureSpace, atom_label, is_member


@dataclass(frozen=True)
class ShiftRule:
    """Member n -> (family, n - shift), with finitely many exceptions."""

    shift: int
    exceptions: Mapping[int, AtomId] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "exceptions", dict(self.exceptions))
        if self.shift < 0:
            raise InvalidSpaceError("shift amount must be >= 0")


@dataclass(frozen=True)
class FanInRule:
    """Every member -> target, with finitely many exceptions."""

    target: AtomId
    exceptions: Mapping[int, AtomId] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "exceptions", dict(self.exceptions))


FamilyRule = Union[ShiftRule, FanInRule]


@dataclass(frozen=True)
class Transformation:
    """A total self-map of the atoms of a space."""

    explicit: Mapping[str, AtomId]
    rules: Mapping[str, FamilyRule] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "explicit", dict(self.explicit))
        object.__setattr__(self, "rules", dict(self.rules))

    @staticmethod
    def build(space: MeasureSpace,
              explicit: Mapping[str, AtomId],
              rules: Optional[Mapping[str, FamilyRule]] = None,
              ) -> "Transformation":
        phi = Transformation(explicit, rules or {})
        phi.validate(space)
        return phi

    def apply(self, atom: AtomId) -> AtomId:
        if is_member(atom):
            fam, n = atom
            rule = self.rules[fam]
            override = rule.exceptions.get(n)
            if override is not None:
                return override
            if isinstance(rule, ShiftRule):
                return (fam, n - rule.shift)
            return rule.target
        return self.explicit[atom]

    def validate(self, space: MeasureSpace) -> None:
        if set(self.explicit) != set(space.explicit_ids):
            missing = set(space.explicit_ids) - set(self.explicit)
            extra = set(self.explicit) - set(space.explicit_ids)
            parts = []
            if missing:
                parts.append(f"unmapped atoms {sorted(missing)}")
            if extra:
                parts.append(f"unknown atoms {sorted(extra)}")
            raise InvalidSpaceError("map is not total: " + "; ".join(parts))
        if set(self.rules) != {f.name for f in space.families}:
            raise InvalidSpaceError("every family needs exactly one map rule")
        fanin_families = {
            name for name, rule in self.rules.items()
            if isinstance(rule, FanInRule)}

        def check_target(source: str, target: AtomId) -> None:
            if not space.has_atom(target):
                raise InvalidSpaceError(
                    f"{source}: target {atom_label(target)} does not exist")
            if is_member(target) and target[0] in fanin_families:
                raise InvalidSpaceError(
                    f"{source}: nothing may map into fan-in family "
                    f"{target[0]!r}")

        for a, target in self.explicit.items():
            check_target(f"phi({a})", target)
        for name, rule in self.rules.items():
            fam = space.family(name)
            for n, target in rule.exceptions.items():
                if n < fam.start:
                    raise InvalidSpaceError(
                        f"family {name}: exception index {n} below start")
                check_target(f"{name}[{n}]", target)
            if isinstance(rule, ShiftRule):
                uncovered = [
                    n for n in range(fam.start, fam.start + rule.shift)
                    if n not in rule.exceptions]
                if uncovered:
                    raise InvalidSpaceError(
                        f"family {name}: shift {rule.shift} leaves members "
                        f"{uncovered} without a target")
            else:
                check_target(f"family {name} target", rule.target)


def identity_transformation(space: MeasureSpace) -> Transformation:
    return Transformation(
        {a: a for a in space.explicit_ids},
        {f.name: ShiftRule(0) for f in space.families})


def compose(space: MeasureSpace, outer: Transformation,
            inner: Transformation) -> Transformation:
    """The map x -> outer(inner(x)), in representable form."""
    explicit = {a: outer.apply(inner.apply(a)) for a in inner.explicit}
    rules: dict[str, FamilyRule] = {}
    for name, rule in inner.rules.items():
        fam = space.family(name)
        if isinstance(rule, FanInRule):
            new_exceptions = {
                n: outer.apply(v) for n, v in rule.exceptions.items()}
            rules[name] = FanInRule(outer.apply(rule.target), new_exceptions)
            continue
        outer_rule = outer.rules[name]
        pointwise = set(rule.exceptions)
        pointwise.update(n + rule.shift for n in outer_rule.exceptions
                         if n + rule.shift >= fam.start)
        if isinstance(outer_rule, ShiftRule):
            total = rule.shift + outer_rule.shift
            pointwise.update(range(fam.start, fam.start + total))
            exceptions = {
                n: outer.apply(inner.apply((name, n))) for n in pointwise}
            rules[name] = ShiftRule(total, exceptions)
        else:
            pointwise.update(range(fam.start, fam.start + rule.shift))
            exceptions = {
                n: outer.apply(inner.apply((name, n))) for n in pointwise}
            rules[name] = FanInRule(outer_rule.target, exceptions)
    return Transformation(explicit, rules)


def iterate(space: MeasureSpace, phi: Transformation, n: int) -> Transformation:
    """The n-fold composition of phi with itself (n = 0 is the identity)."""
    if n < 0:
        raise ValueError("iterate count must be >= 0")
    result = identity_transformation(space)
    for _ in range(n):
        result = compose(space, phi, result)
    return result


# -- fibers --------------------------------------------------------------------


@dataclass(frozen=True)
class Fiber:
    """The preimage of a single atom: finitely many atoms plus whole tails."""

    atoms: Tuple[AtomId, ...]
    tails: Tuple[tuple, ...]  # TailSegment entries (family, start, excluded)

    def as_atomset(self) -> AtomSet:
        return AtomSet.of(self.atoms, self.tails)

    @property
    def is_empty(self) -> bool:
        return not self.atoms and not self.tails


def fiber(space: MeasureSpace, phi: Transformation, x: AtomId) -> Fiber:
    """All atoms that phi maps onto x."""
    if not space.has_atom(x):
        raise InvalidSpaceError(f"no atom {atom_label(x)} in {space.name}")
    finite = [a for a in space.explicit_ids if phi.explicit[a] == x]
    tails = []
    for name, rule in phi.rules.items():
        fam = space.family(name)
        for n, target in rule.exceptions.items():
            if target == x:
                finite.append((name, n))
        if isinstance(rule, ShiftRule):
            if is_member(x) and x[0] == name and x[1] >= fam.start:
                m = x[1] + rule.shift
                if m not in rule.exceptions:
                    finite.append((name, m))
        elif rule.target == x:
            excluded = frozenset(
                n for n, target in rule.exceptions.items() if target != x)
            tails.append((name, fam.start, excluded))
    return Fiber(tuple(finite), tuple(tails))


def fiber_measure(space: MeasureSpace, phi: Transformation,
                  x: AtomId) -> ExtValue:
    fib = fiber(space, phi, x)
    finite = ext_sum(ExtValue(space.weight(a)) for a in fib.atoms)
    tails = ext_sum(
        space.family(fam).segment_mass(start, excluded)
        for fam, start, excluded in fib.tails)
    return finite + tails


def preimage(space: MeasureSpace, phi: Transformation,
             region: AtomSet) -> AtomSet:
    """phi^{-1}(region) as an atom set."""
    result = AtomSet.of()
    for atom in region.atoms:
        result = result.union(fiber(space, phi, atom).as_atomset())
    for fam_name, start, excluded in region.tails:
        result = result.union(
            _tail_preimage(space, phi, fam_name, start, excluded))
    return result


def _tail_preimage(space: MeasureSpace, phi: Transformation, fam_name: str,
                   start: int, excluded: frozenset) -> AtomSet:
    def hits(atom: AtomId) -> bool:
        return (is_member(atom) and atom[0] == fam_name
                and atom[1] >= start and atom[1] not in excluded)

    atoms = [a for a in space.explicit_ids if hits(phi.explicit[a])]
    tails = []
    for name, rule in phi.rules.items():
        fam = space.family(name)
        for n, target in rule.exceptions.items():
            if hits(target):
                atoms.append((name, n))
        if isinstance(rule, ShiftRule):
            if name == fam_name:
                # generic members n (not exceptions) land on n - shift
                seg_start = max(start + rule.shift, fam.start)
                seg_excluded = frozenset(
                    n + rule.shift for n in excluded) | frozenset(
                    n for n in rule.exceptions if n >= seg_start)
                tails.append((name, seg_start, seg_excluded))
        elif hits(rule.target):
            seg_excluded = frozenset(
                n for n, target in rule.exceptions.items()
                if not hits(target))
            tails.append((name, fam.start, seg_excluded))
    return AtomSet.of(atoms, tails)


# -- nonsingularity --------------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    """Outcome of a yes/no check, with a witness atom when it fails."""

    holds: bool
    witness: Optional[AtomId] = None

    def __bool__(self) -> bool:
        return self.holds


def check_nonsingular(space: MeasureSpace,
                      phi: Transformation) -> CheckResult:
    """Does every null atom pull back to a null set?

    Family members always carry positive weight, so only explicit null
    atoms can witness a violation.
    """
    for atom in space.null_explicit():
        if not fiber_measure(space, phi, atom).is_zero:
            return CheckResult(False, atom)
    return CheckResult(True)
