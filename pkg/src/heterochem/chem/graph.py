"""Molecular graph model: elements, atoms, bonds and the immutable MolGraph."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterable, Optional


class ChemError(ValueError):
    """Base class for every chemistry-level error raised by this package."""


class SmilesSyntaxError(ChemError):
    pass


class UnbalancedParenthesis(SmilesSyntaxError):
    pass


class UnclosedRing(SmilesSyntaxError):
    pass


class UnknownElement(ChemError):
    pass


class ValenceViolation(ChemError):
    pass


class AromaticPerceptionError(ChemError):
    pass


class RingClosureOverflow(ChemError):
    pass


class DisconnectedGraph(ChemError):
    pass


# symbol -> (atomic number, allowed valences in increasing order)
ELEMENTS: dict[str, tuple[int, tuple[int, ...]]] = {
    "B": (5, (3,)),
    "C": (6, (4,)),
    "N": (7, (3,)),
    "O": (8, (2,)),
    "F": (9, (1,)),
    "P": (15, (3, 5)),
    "S": (16, (2, 4, 6)),
    "Cl": (17, (1,)),
    "Br": (35, (1,)),
    "I": (53, (1,)),
}

AROMATIC_SYMBOLS = {"b": "B", "c": "C", "n": "N", "o": "O", "p": "P", "s": "S"}


@dataclass(frozen=True)
class Element:
    symbol: str

    def __post_init__(self):
        if self.symbol not in ELEMENTS:
            raise UnknownElement(f"unsupported element {self.symbol!r}")

    @property
    def atomic_number(self) -> int:
        return ELEMENTS[self.symbol][0]

    @property
    def valences(self) -> tuple[int, ...]:
        return ELEMENTS[self.symbol][1]


class BondOrder(IntEnum):
    SINGLE = 1
    DOUBLE = 2
    TRIPLE = 3
    AROMATIC = 4

    @property
    def valence(self) -> int:
        """Valence consumed by the sigma/pi bonds, aromatic counted as one."""
        return 1 if self is BondOrder.AROMATIC else int(self)

    @property
    def symbol(self) -> str:
        return {1: "-", 2: "=", 3: "#", 4: ":"}[int(self)]


@dataclass(frozen=True)
class Atom:
    element: str
    aromatic: bool = False
    explicit_h: Optional[int] = None
    index: int = 0
    hydrogens: int = 0

    @property
    def atomic_number(self) -> int:
        return ELEMENTS[self.element][0]

    @property
    def bracket(self) -> bool:
        return self.explicit_h is not None


@dataclass(frozen=True)
class Bond:
    a: int
    b: int
    order: BondOrder

    def __post_init__(self):
        if self.a == self.b:
            raise SmilesSyntaxError("bond endpoints must be distinct")
        if self.a > self.b:
            lo, hi = self.b, self.a
            object.__setattr__(self, "a", lo)
            object.__setattr__(self, "b", hi)

    def other(self, i: int) -> int:
        return self.b if i == self.a else self.a


def organic_hydrogens(element: str, aromatic: bool, bond_valence: int) -> int:
    """Implicit hydrogen count of an organic-subset atom.

    Aromatic atoms reserve one valence unit for the ring pi bond when the
    chosen valence leaves room for it (c, n in pyridine); atoms that are
    already saturated by their sigma bonds (o, s, pyrrole-type n) do not.
    """
    valences = ELEMENTS[element][1]
    for v in valences:
        if v >= bond_valence:
            room = v - bond_valence
            if aromatic and room >= 1:
                room -= 1
            return room
    raise ValenceViolation(
        f"{element} has bond valence {bond_valence} above max {valences[-1]}"
    )


def _bridges(n: int, adjacency: list[list[tuple[int, int]]], bonds) -> set[int]:
    """Indices of bonds that are bridges (not part of any ring). Iterative Tarjan."""
    disc = [-1] * n
    low = [0] * n
    out: set[int] = set()
    timer = 0
    for root in range(n):
        if disc[root] != -1:
            continue
        disc[root] = low[root] = timer
        timer += 1
        stack = [(root, -1, iter(adjacency[root]))]
        while stack:
            v, parent_bond, it = stack[-1]
            advanced = False
            for w, bi in it:
                if bi == parent_bond:
                    continue
                if disc[w] == -1:
                    disc[w] = low[w] = timer
                    timer += 1
                    stack.append((w, bi, iter(adjacency[w])))
                    advanced = True
                    break
                low[v] = min(low[v], disc[w])
            if not advanced:
                stack.pop()
                if stack:
                    u = stack[-1][0]
                    low[u] = min(low[u], low[v])
                    if low[v] > disc[u]:
                        out.add(parent_bond)
    return out


@dataclass(frozen=True, eq=False)
class MolGraph:
    """Immutable, connected, valence-checked molecular graph.

    Build through :meth:`build` so that hydrogens, adjacency and ring
    membership are derived and the invariants checked.
    """

    atoms: tuple[Atom, ...]
    bonds: tuple[Bond, ...]
    adjacency: tuple[tuple[tuple[int, int], ...], ...] = field(repr=False)
    ring_bonds: frozenset[int] = field(repr=False)

    @classmethod
    def build(
        cls,
        atoms: Iterable[Atom],
        bonds: Iterable[Bond],
        *,
        validate: bool = True,
    ) -> "MolGraph":
        atoms = list(atoms)
        bonds = list(bonds)
        n = len(atoms)
        if n == 0:
            raise SmilesSyntaxError("empty molecule")
        adjacency: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        seen: set[tuple[int, int]] = set()
        for bi, bond in enumerate(bonds):
            if not (0 <= bond.a < n and 0 <= bond.b < n):
                raise SmilesSyntaxError(f"bond {bond} references a missing atom")
            key = (bond.a, bond.b)
            if key in seen:
                raise SmilesSyntaxError(f"parallel bond between atoms {bond.a} and {bond.b}")
            seen.add(key)
            adjacency[bond.a].append((bond.b, bi))
            adjacency[bond.b].append((bond.a, bi))

        # connectivity
        reached = {0}
        frontier = [0]
        while frontier:
            v = frontier.pop()
            for w, _ in adjacency[v]:
                if w not in reached:
                    reached.add(w)
                    frontier.append(w)
        if len(reached) != n:
            raise DisconnectedGraph("molecule has more than one component")

        bridges = _bridges(n, adjacency, bonds)
        ring_bonds = frozenset(set(range(len(bonds))) - bridges)

        fixed = []
        for i, atom in enumerate(atoms):
            bond_valence = sum(bonds[bi].order.valence for _, bi in adjacency[i])
            if validate:
                if atom.aromatic and not any(bi in ring_bonds for _, bi in adjacency[i]):
                    raise AromaticPerceptionError(
                        f"aromatic atom {i} ({atom.element.lower()}) is not in a ring"
                    )
                if atom.explicit_h is not None:
                    h = atom.explicit_h
                    if bond_valence + h > ELEMENTS[atom.element][1][-1]:
                        raise ValenceViolation(
                            f"atom {i} ({atom.element}) exceeds its maximum valence"
                        )
                else:
                    h = organic_hydrogens(atom.element, atom.aromatic, bond_valence)
            else:
                h = atom.hydrogens
            fixed.append(
                Atom(atom.element, atom.aromatic, atom.explicit_h, i, h)
            )
        if validate:
            for bi, bond in enumerate(bonds):
                if bond.order is BondOrder.AROMATIC:
                    if not (fixed[bond.a].aromatic and fixed[bond.b].aromatic):
                        raise AromaticPerceptionError("aromatic bond between non-aromatic atoms")
                    if bi not in ring_bonds:
                        raise AromaticPerceptionError("aromatic bond outside a ring")

        return cls(
            atoms=tuple(fixed),
            bonds=tuple(bonds),
            adjacency=tuple(tuple(sorted(a)) for a in adjacency),
            ring_bonds=ring_bonds,
        )

    def __len__(self) -> int:
        return len(self.atoms)

    def neighbors(self, i: int) -> tuple[tuple[int, int], ...]:
        """(neighbor atom index, bond index) pairs for atom ``i``."""
        return self.adjacency[i]

    def degree(self, i: int) -> int:
        return len(self.adjacency[i])

    def in_ring(self, i: int) -> bool:
        return any(bi in self.ring_bonds for _, bi in self.adjacency[i])

    def bond_between(self, i: int, j: int) -> Optional[Bond]:
        for w, bi in self.adjacency[i]:
            if w == j:
                return self.bonds[bi]
        return None

    def permuted(self, perm: list[int]) -> "MolGraph":
        """Relabel atoms: old atom ``i`` becomes new atom ``perm[i]``."""
        inverse = [0] * len(perm)
        for old, new in enumerate(perm):
            inverse[new] = old
        atoms = [self.atoms[inverse[k]] for k in range(len(perm))]
        bonds = [Bond(perm[b.a], perm[b.b], b.order) for b in self.bonds]
        return MolGraph.build(atoms, bonds, validate=False)

    def __repr__(self) -> str:
        return f"MolGraph(atoms={len(self.atoms)}, bonds={len(self.bonds)})"
