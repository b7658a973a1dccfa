"""Exhaustive generator of small molecules, a desk-scale GDB substitute."""

from __future__ import annotations

import logging
from typing import Iterable

from .canon import write_canonical
from .graph import Atom, Bond, BondOrder, ChemError, MolGraph

log = logging.getLogger(__name__)


def _mol(elements: tuple[str, ...], bonds: dict[tuple[int, int], int]) -> MolGraph:
    return MolGraph.build(
        [Atom(e) for e in elements],
        [Bond(a, b, BondOrder(o)) for (a, b), o in bonds.items()],
    )


def _free_valence(mol: MolGraph) -> list[int]:
    return [a.hydrogens for a in mol.atoms]


def _key(mol: MolGraph) -> str:
    return write_canonical(mol)


def _state(mol: MolGraph) -> tuple[tuple[str, ...], dict[tuple[int, int], int]]:
    return tuple(a.element for a in mol.atoms), {(b.a, b.b): int(b.order) for b in mol.bonds}


def _chemically_plain(mol: MolGraph) -> bool:
    """Drop obviously strained or exotic graphs: triple or cumulated double
    bonds inside rings smaller than 8, and heteroatom-heteroatom multiple bonds."""
    for bi, bond in enumerate(mol.bonds):
        if bi in mol.ring_bonds and bond.order is BondOrder.TRIPLE:
            return False
        if bond.order > BondOrder.SINGLE:
            if mol.atoms[bond.a].element != "C" and mol.atoms[bond.b].element != "C":
                return False
    for i in range(len(mol)):
        doubles = [bi for _, bi in mol.adjacency[i] if mol.bonds[bi].order is BondOrder.DOUBLE]
        if len(doubles) > 1 and any(bi in mol.ring_bonds for bi in doubles):
            return False
    return True


def generate_molecules(
    max_atoms: int,
    elements: Iterable[str] = ("C", "N", "O", "F"),
    *,
    plain: bool = True,
) -> list[str]:
    """All connected molecules with 1..max_atoms heavy atoms, canonical SMILES.

    Every molecule is reachable by growing a spanning tree with single
    bonds, then adding ring bonds and raising bond orders, so the closure
    of those three moves from single atoms is exhaustive.
    """
    elements = tuple(elements)
    level: dict[str, MolGraph] = {}
    for e in elements:
        m = _mol((e,), {})
        level[_key(m)] = m
    everything: dict[str, MolGraph] = {}

    for size in range(1, max_atoms + 1):
        if size > 1:
            grown: dict[str, MolGraph] = {}
            for mol in level.values():
                els, bonds = _state(mol)
                free = _free_valence(mol)
                for i in range(len(els)):
                    if free[i] < 1:
                        continue
                    for e in elements:
                        nb = dict(bonds)
                        nb[(i, len(els))] = 1
                        try:
                            m = _mol(els + (e,), nb)
                        except ChemError:
                            continue
                        grown.setdefault(_key(m), m)
            level = grown
        # closure under ring bonds and bond-order increments
        todo = list(level.values())
        while todo:
            mol = todo.pop()
            els, bonds = _state(mol)
            free = _free_valence(mol)
            n = len(els)
            for i in range(n):
                if free[i] < 1:
                    continue
                for j in range(i + 1, n):
                    if free[j] < 1:
                        continue
                    nb = dict(bonds)
                    if (i, j) in nb:
                        if nb[(i, j)] >= 3:
                            continue
                        nb[(i, j)] += 1
                    else:
                        nb[(i, j)] = 1
                    try:
                        m = _mol(els, nb)
                    except ChemError:
                        continue
                    k = _key(m)
                    if k not in level:
                        level[k] = m
                        todo.append(m)
        log.info("size %d: %d molecules", size, len(level))
        everything.update(level)

    keys = [k for k, m in everything.items() if not plain or _chemically_plain(m)]
    return sorted(keys, key=lambda s: (len(s), s))
