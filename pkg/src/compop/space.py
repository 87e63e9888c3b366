"""Atomic sigma-finite measure spaces.

A space is a finite list of explicit atoms plus, optionally, countable tail
families. A tail family contributes atoms (family, n) for n >= start with
geometric weights alpha * c**n. Explicit atoms may carry weight 0 (null
atoms); family members always have positive weight, so the countable part
never contributes to null sets.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Tuple, Union

from ._rat import RatType, as_rat
from .errors import InvalidSpaceError
from .extvalue import INF, ZERO, ExtValue, ext_sum, geometric_tail

#: An atom is an explicit id, or (family, index) for a tail-family member.
AtomId = Union[str, Tuple[str, int]]


def is_member(atom: AtomId) -> bool:
    return isinstance(atom, tuple)


def atom_label(atom: AtomId) -> str:
    """Human/file form: explicit ids verbatim, members as fam[n]."""
    if is_member(atom):
        return f"{atom[0]}[{atom[1]}]"
    return atom


def parse_atom_label(label: str) -> AtomId:
    if label.endswith("]") and "[" in label:
        name, _, idx = label[:-1].partition("[")
        return (name, int(idx))
    return label


@dataclass(frozen=True)
class TailFamily:
    """Countably many atoms (name, n), n >= start, weight alpha * ratio**n."""

    name: str
    start: int
    coeff: RatType  # alpha > 0
    ratio: RatType  # c > 0

    def __post_init__(self):
        object.__setattr__(self, "coeff", as_rat(self.coeff))
        object.__setattr__(self, "ratio", as_rat(self.ratio))
        if self.start < 0:
            raise InvalidSpaceError(f"family {self.name}: start must be >= 0")
        if self.coeff <= 0 or self.ratio <= 0:
            raise InvalidSpaceError(
                f"family {self.name}: weight rule needs alpha > 0 and c > 0")

    def weight(self, n: int):
        if n < self.start:
            raise InvalidSpaceError(
                f"family {self.name} has no member {n} (start={self.start})")
        return self.coeff * self.ratio ** n

    def segment_mass(self, start: int, excluded: Iterable[int] = ()) -> ExtValue:
        """Exact mass of {(name, n): n >= start} minus finitely many members."""
        start = max(start, self.start)
        total = geometric_tail(ExtValue(self.coeff), self.ratio, start)
        removed = ext_sum(
            ExtValue(self.weight(n)) for n in excluded if n >= start)
        if total.is_infinite:
            return INF
        return ExtValue(total.as_rat() - removed.as_rat())


@dataclass(frozen=True)
class MeasureSpace:
    """Explicit atoms (id, weight >= 0) plus tail families."""

    name: str
    atoms: Tuple[Tuple[str, RatType], ...]
    families: Tuple[TailFamily, ...] = ()

    def __post_init__(self):
        object.__setattr__(
            self, "atoms",
            tuple((a, as_rat(w)) for a, w in self.atoms))
        object.__setattr__(self, "families", tuple(self.families))
        seen: set[str] = set()
        for a, w in self.atoms:
            if a in seen:
                raise InvalidSpaceError(f"duplicate atom id {a!r}")
            seen.add(a)
            if w < 0:
                raise InvalidSpaceError(f"atom {a!r} has negative weight")
        for fam in self.families:
            if fam.name in seen:
                raise InvalidSpaceError(f"duplicate id {fam.name!r}")
            seen.add(fam.name)
        if not self.families and all(w == 0 for _, w in self.atoms):
            raise InvalidSpaceError("space must carry positive mass somewhere")

    # -- lookups -------------------------------------------------------------

    @cached_property
    def _weights(self) -> Mapping[str, RatType]:
        return {a: w for a, w in self.atoms}

    @cached_property
    def _families(self) -> Mapping[str, TailFamily]:
        return {f.name: f for f in self.families}

    @property
    def is_finite(self) -> bool:
        return not self.families

    @property
    def explicit_ids(self) -> Tuple[str, ...]:
        return tuple(a for a, _ in self.atoms)

    def family(self, name: str) -> TailFamily:
        try:
            return self._families[name]
        except KeyError:
            raise InvalidSpaceError(f"no family named {name!r}") from None

    def has_atom(self, atom: AtomId) -> bool:
        if is_member(atom):
            fam = self._families.get(atom[0])
            return fam is not None and atom[1] >= fam.start
        return atom in self._weights

    def weight(self, atom: AtomId):
        """Exact weight of a single atom."""
        if is_member(atom):
            return self.family(atom[0]).weight(atom[1])
        try:
            return self._weights[atom]
        except KeyError:
            raise InvalidSpaceError(f"no atom named {atom!r}") from None

    def positive_explicit(self) -> Iterator[str]:
        for a, w in self.atoms:
            if w > 0:
                yield a

    def null_explicit(self) -> Iterator[str]:
        for a, w in self.atoms:
            if w == 0:
                yield a

    def total_mass(self) -> ExtValue:
        explicit = ext_sum(ExtValue(w) for _, w in self.atoms)
        tails = ext_sum(f.segment_mass(f.start) for f in self.families)
        return explicit + tails


# -- measurable atom sets -----------------------------------------------------

#: (family name, start index, excluded indices >= start)
TailSegment = Tuple[str, int, frozenset]


@dataclass(frozen=True)
class AtomSet:
    """A finite union: individual atoms plus per-family tail segments.

    Normal form guarantees at most one segment per family and no individual
    member atom that a segment already covers.
    """

    atoms: frozenset = frozenset()
    tails: Tuple[TailSegment, ...] = ()

    @staticmethod
    def of(atoms: Iterable[AtomId] = (),
           tails: Iterable[TailSegment] = ()) -> "AtomSet":
        merged: dict[str, tuple[int, frozenset]] = {}
        for fam, start, excluded in tails:
            seg = (start, frozenset(n for n in excluded if n >= start))
            if fam in merged:
                seg = _segment_union(merged[fam], seg)
            merged[fam] = seg
        loose = set()
        for atom in atoms:
            if is_member(atom) and atom[0] in merged:
                start, excluded = merged[atom[0]]
                if atom[1] >= start:
                    merged[atom[0]] = (start, excluded - {atom[1]})
                    continue
            loose.add(atom)
        return AtomSet(
            frozenset(loose),
            tuple(sorted((f, s, e) for f, (s, e) in merged.items())))

    @staticmethod
    def whole(space: MeasureSpace) -> "AtomSet":
        return AtomSet.of(
            space.explicit_ids,
            [(f.name, f.start, frozenset()) for f in space.families])

    @staticmethod
    def singleton(atom: AtomId) -> "AtomSet":
        return AtomSet.of([atom])

    @staticmethod
    def family_tail(space: MeasureSpace, name: str) -> "AtomSet":
        fam = space.family(name)
        return AtomSet.of([], [(name, fam.start, frozenset())])

    def union(self, other: "AtomSet") -> "AtomSet":
        return AtomSet.of(
            self.atoms | other.atoms, self.tails + other.tails)

    def contains(self, atom: AtomId) -> bool:
        if atom in self.atoms:
            return True
        if is_member(atom):
            for fam, start, excluded in self.tails:
                if fam == atom[0]:
                    return atom[1] >= start and atom[1] not in excluded
        return False

    def is_empty(self) -> bool:
        return not self.atoms and not self.tails

    def __iter__(self):
        raise TypeError("AtomSet may be countably infinite; not iterable")


def _segment_union(a: tuple[int, frozenset], b: tuple[int, frozenset]):
    (s1, e1), (s2, e2) = a, b
    if s1 > s2:
        (s1, e1), (s2, e2) = (s2, e2), (s1, e1)
    # n >= s2: excluded only if excluded from both; s1 <= n < s2: from a only
    excluded = frozenset(n for n in e1 if n < s2) | (e1 & e2)
    return (s1, excluded)


def atomset_measure(space: MeasureSpace, region: AtomSet) -> ExtValue:
    finite = ext_sum(ExtValue(space.weight(a)) for a in region.atoms)
    tails = ext_sum(
        space.family(fam).segment_mass(start, excluded)
        for fam, start, excluded in region.tails)
    return finite + tails
