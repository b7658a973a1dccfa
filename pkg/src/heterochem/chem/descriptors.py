"""Structural descriptors used to classify reconstruction errors."""

from __future__ import annotations

from collections import Counter

from .canon import write_canonical
from .graph import Atom, Bond, BondOrder, MolGraph


def generalized_scaffold(mol: MolGraph) -> MolGraph:
    """Atom- and bond-anonymized skeleton; side chains are kept.

    Every atom becomes a non-aromatic carbon and every bond a single bond.
    The result is only meant for comparison through its canonical string,
    so valence is not re-checked (a hexavalent S would not be a legal C).
    """
    atoms = [
        Atom("C", False, None, i, max(0, 4 - mol.degree(i))) for i in range(len(mol))
    ]
    bonds = [Bond(b.a, b.b, BondOrder.SINGLE) for b in mol.bonds]
    return MolGraph.build(atoms, bonds, validate=False)


def scaffold_key(mol: MolGraph) -> str:
    return write_canonical(generalized_scaffold(mol))


def sum_formula(mol: MolGraph) -> str:
    """Molecular formula in Hill order, hydrogens included."""
    counts: Counter[str] = Counter()
    for atom in mol.atoms:
        counts[atom.element] += 1
        counts["H"] += atom.hydrogens

    def part(sym: str) -> str:
        k = counts[sym]
        return sym if k == 1 else f"{sym}{k}"

    present = sorted(s for s, k in counts.items() if k > 0)
    if counts["C"]:
        order = ["C"] + (["H"] if counts["H"] else []) + [s for s in present if s not in ("C", "H")]
    else:
        order = present
    return "".join(part(s) for s in order)


def bond_formula(mol: MolGraph) -> dict[str, int]:
    """Counts of single, double, triple and aromatic bonds."""
    counts = {"single": 0, "double": 0, "triple": 0, "aromatic": 0}
    for bond in mol.bonds:
        counts[bond.order.name.lower()] += 1
    return counts


def same_molecule(a: MolGraph, b: MolGraph) -> bool:
    if len(a) != len(b) or len(a.bonds) != len(b.bonds):
        return False
    return write_canonical(a) == write_canonical(b)
