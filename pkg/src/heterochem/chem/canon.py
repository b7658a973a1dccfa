"""Canonical atom ranking plus canonical and randomized SMILES writing."""

from __future__ import annotations

import random
from typing import Callable, Optional, Sequence

from .graph import (
    BondOrder,
    ChemError,
    MolGraph,
    RingClosureOverflow,
    organic_hydrogens,
)
from .smiles import parse_smiles

# Upper bound on individualization leaves explored while breaking ties.
# Only pathologically symmetric graphs get near it.
MAX_LEAVES = 4096


def _dense_rank(keys: Sequence) -> list[int]:
    lookup = {k: r for r, k in enumerate(sorted(set(keys)))}
    return [lookup[k] for k in keys]


def initial_invariants(mol: MolGraph) -> list[tuple]:
    out = []
    for i, atom in enumerate(mol.atoms):
        orders = tuple(sorted(int(mol.bonds[bi].order) for _, bi in mol.adjacency[i]))
        out.append((mol.degree(i), atom.atomic_number, atom.aromatic, atom.hydrogens, orders))
    return out


def _refine(nbrs: list[list[tuple[int, int]]], classes: list[int]) -> list[int]:
    count = len(set(classes))
    while True:
        keys = [
            (classes[i], tuple(sorted((order, classes[j]) for j, order in nbrs[i])))
            for i in range(len(classes))
        ]
        new = _dense_rank(keys)
        new_count = max(new) + 1
        if new_count == count:
            return new
        classes, count = new, new_count


def _certificate(mol: MolGraph, ranks: list[int]) -> tuple:
    labels = [None] * len(ranks)
    for i, atom in enumerate(mol.atoms):
        labels[ranks[i]] = (atom.atomic_number, atom.aromatic, atom.hydrogens)
    edges = sorted(
        (min(ranks[b.a], ranks[b.b]), max(ranks[b.a], ranks[b.b]), int(b.order))
        for b in mol.bonds
    )
    return tuple(labels), tuple(edges)


def canonical_ranks(mol: MolGraph) -> list[int]:
    """Canonical rank (0..n-1) for every atom of ``mol``.

    Morgan-style refinement of (degree, atomic number, aromatic flag,
    hydrogen count, incident bond orders) classes, followed by
    individualization of tied atoms. Every member of the first tied cell is
    tried and the labelling with the smallest graph certificate wins, which
    makes the result independent of input atom order even when refinement
    alone cannot tell non-equivalent atoms apart.
    """
    n = len(mol)
    nbrs = [[(j, int(mol.bonds[bi].order)) for j, bi in mol.adjacency[i]] for i in range(n)]
    start = _refine(nbrs, _dense_rank(initial_invariants(mol)))

    best: Optional[tuple] = None
    best_ranks: Optional[list[int]] = None
    leaves = 0

    def search(classes: list[int]) -> None:
        nonlocal best, best_ranks, leaves
        if leaves >= MAX_LEAVES:
            return
        if max(classes) + 1 == n:
            leaves += 1
            cert = _certificate(mol, classes)
            if best is None or cert < best:
                best, best_ranks = cert, classes
            return
        sizes: dict[int, int] = {}
        for c in classes:
            sizes[c] = sizes.get(c, 0) + 1
        target = min(c for c, k in sizes.items() if k > 1)
        for atom in (i for i in range(n) if classes[i] == target):
            split = _dense_rank([(c, 0 if i == atom else 1) for i, c in enumerate(classes)])
            search(_refine(nbrs, split))

    search(start)
    return best_ranks


def _atom_token(mol: MolGraph, i: int) -> str:
    atom = mol.atoms[i]
    symbol = atom.element.lower() if atom.aromatic else atom.element
    bond_valence = sum(mol.bonds[bi].order.valence for _, bi in mol.adjacency[i])
    try:
        plain = organic_hydrogens(atom.element, atom.aromatic, bond_valence) == atom.hydrogens
    except ChemError:
        plain = False
    if plain:
        return symbol
    h = atom.hydrogens
    hpart = "" if h == 0 else ("H" if h == 1 else f"H{h}")
    return f"[{symbol}{hpart}]"


def _bond_token(mol: MolGraph, a: int, b: int) -> str:
    order = mol.bond_between(a, b).order
    if order is BondOrder.SINGLE:
        return "-" if mol.atoms[a].aromatic and mol.atoms[b].aromatic else ""
    if order is BondOrder.AROMATIC:
        return ""
    return order.symbol


def _write(mol: MolGraph, start: int, order: Callable[[int], list[int]]) -> str:
    n = len(mol)
    visited = [False] * n
    children: list[list[int]] = [[] for _ in range(n)]
    ring_open: list[list[int]] = [[] for _ in range(n)]
    ring_close: list[list[int]] = [[] for _ in range(n)]
    used: set[tuple[int, int]] = set()

    # iterative DFS: (atom, parent, pending neighbors)
    visited[start] = True
    stack = [(start, -1, iter(order(start)))]
    while stack:
        v, parent, it = stack[-1]
        for w in it:
            if w == parent:
                continue
            if not visited[w]:
                visited[w] = True
                children[v].append(w)
                stack.append((w, v, iter(order(w))))
                break
            edge = (min(v, w), max(v, w))
            if edge not in used:
                used.add(edge)
                ring_open[w].append(v)
                ring_close[v].append(w)
        else:
            stack.pop()

    out: list[str] = []
    free = list(range(1, 10))
    digit_of: dict[tuple[int, int], int] = {}

    def emit(v: int, parent: int) -> None:
        if parent >= 0:
            out.append(_bond_token(mol, parent, v))
        out.append(_atom_token(mol, v))
        released = []
        for w in ring_close[v]:
            d = digit_of.pop((w, v))
            out.append(_bond_token(mol, w, v))
            out.append(str(d))
            released.append(d)
        for w in ring_open[v]:
            if not free:
                raise RingClosureOverflow("more than 9 ring bonds open at once")
            d = free.pop(0)
            digit_of[(v, w)] = d
            out.append(str(d))
        if released:
            free.extend(released)
            free.sort()

    # explicit stack for the emit phase keeps very long chains off the C stack
    work: list = [("atom", start, -1)]
    while work:
        item = work.pop()
        if item[0] == "text":
            out.append(item[1])
            continue
        _, v, parent = item
        emit(v, parent)
        kids = children[v]
        if not kids:
            continue
        todo: list = []
        for c in kids[:-1]:
            todo += [("text", "("), ("atom", c, v), ("text", ")")]
        todo.append(("atom", kids[-1], v))
        work.extend(reversed(todo))
    return "".join(out)


def write_canonical(mol: MolGraph) -> str:
    """Canonical SMILES: DFS from rank 0, neighbours in ascending rank."""
    ranks = canonical_ranks(mol)
    nb = [sorted((j for j, _ in mol.adjacency[i]), key=ranks.__getitem__) for i in range(len(mol))]
    start = ranks.index(0)
    return _write(mol, start, nb.__getitem__)


def write_random(mol: MolGraph, rng: random.Random | int | None = None) -> str:
    """A randomized but valid SMILES for ``mol`` (SMILES enumeration)."""
    if not isinstance(rng, random.Random):
        rng = random.Random(rng)
    n = len(mol)

    def order(i: int) -> list[int]:
        nb = [j for j, _ in mol.adjacency[i]]
        rng.shuffle(nb)
        return nb

    return _write(mol, rng.randrange(n), order)


def canonical_smiles(text: str) -> str:
    """Parse then canonicalize."""
    return write_canonical(parse_smiles(text))
