"""Assumption boxes: primitive boxes in an inheritance forest, composite boxes
as canonical sets of primitive indices forming a join-semilattice."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Sequence, Tuple

from .term import SimpleType, Term, mk_disj, neg


@dataclass(frozen=True, order=True)
class Box:
    """Canonical composite box: no member is an ancestor of another member."""
    members: Tuple[int, ...] = ()

    def __str__(self) -> str:
        return "{" + ",".join(str(i) for i in self.members) + "}"

    def __iter__(self):
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)


EMPTY = Box()


@dataclass(frozen=True)
class PrimitiveBox:
    index: int
    parent: Box
    assumptions: Tuple[Term, ...]
    variables: Tuple[Tuple[str, SimpleType], ...] = ()


class EmptyBoxResolution(Exception):
    """False derived with no assumptions: the theory itself is inconsistent."""


@dataclass
class BoxRegistry:
    prims: List[PrimitiveBox] = field(default_factory=list)
    _closure: Dict[int, FrozenSet[int]] = field(default_factory=dict)

    def new_primitive(self, parent: Box, assumptions: Sequence[Term],
                      variables: Sequence[Tuple[str, SimpleType]] = ()) -> int:
        idx = len(self.prims)
        for i in parent:
            if i >= idx:
                raise ValueError(f"parent {parent} must use existing boxes")
        if idx > 0 and not assumptions and not variables:
            raise ValueError("a primitive box needs assumptions or variables")
        self.prims.append(PrimitiveBox(idx, parent, tuple(assumptions), tuple(variables)))
        self._closure[idx] = frozenset({idx}).union(*(self._closure[i] for i in parent))
        return idx

    def __getitem__(self, i: int) -> PrimitiveBox:
        return self.prims[i]

    def __len__(self) -> int:
        return len(self.prims)

    def prim(self, i: int) -> Box:
        return Box((i,))

    def closure(self, b: Iterable[int]) -> FrozenSet[int]:
        """All primitive indices whose assumptions b includes."""
        out: FrozenSet[int] = frozenset()
        for i in b:
            out = out | self._closure[i]
        return out

    def canonical(self, indices: Iterable[int]) -> Box:
        idx = set(indices)
        keep = [i for i in idx if not any(j != i and i in self._closure[j] for j in idx)]
        return Box(tuple(sorted(keep)))

    def merge(self, *boxes: Box) -> Box:
        idx = set()
        for b in boxes:
            idx.update(b.members)
        if len(idx) <= 1:
            return Box(tuple(idx))
        return self.canonical(idx)

    def leq(self, a: Box, b: Box) -> bool:
        return self.closure(a) <= self.closure(b)

    def assumptions(self, b: Box) -> List[Term]:
        out = []
        for i in sorted(self.closure(b)):
            out.extend(self.prims[i].assumptions)
        return out

    def variables(self, b: Box) -> List[Tuple[str, SimpleType]]:
        out = []
        for i in sorted(self.closure(b)):
            out.extend(self.prims[i].variables)
        return out

    def depth(self, b: Box) -> int:
        """Number of primitive boxes in the closure beyond box 0."""
        return len(self.closure(b) - {0})

    def export_formula(self, i: int) -> Term:
        """What resolving primitive box i proves in its parent context."""
        return mk_disj([neg(h) for h in self.prims[i].assumptions])

    def resolve_targets(self, b: Box) -> List[Tuple[int, Box]]:
        """(removed member, receiving box) for each member of a resolved box."""
        if not b.members:
            raise EmptyBoxResolution("False derived in the empty box")
        out = []
        for i in b.members:
            rest = [j for j in b.members if j != i]
            out.append((i, self.merge(self.prims[i].parent, Box(tuple(rest)))))
        return out
