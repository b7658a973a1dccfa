"""SMILES reader for the organic subset plus simple bracket atoms."""

from __future__ import annotations

import re
from typing import Optional

from .graph import (
    AROMATIC_SYMBOLS,
    ELEMENTS,
    Atom,
    Bond,
    BondOrder,
    MolGraph,
    SmilesSyntaxError,
    UnbalancedParenthesis,
    UnclosedRing,
    UnknownElement,
)

_BOND_SYMBOLS = {"-": BondOrder.SINGLE, "=": BondOrder.DOUBLE, "#": BondOrder.TRIPLE}
_BRACKET = re.compile(r"^\[([A-Z][a-z]?|[a-z])(H(\d?))?\]$")
_UNSUPPORTED = {
    "+": "charges",
    "@": "stereochemistry",
    "/": "double-bond stereo",
    "\\": "double-bond stereo",
    ".": "disconnected components",
    "%": "two-digit ring closures",
    ":": "explicit aromatic bonds",
    "$": "quadruple bonds",
    "*": "wildcard atoms",
}


def _resolve_symbol(symbol: str) -> tuple[str, bool]:
    if symbol in AROMATIC_SYMBOLS:
        return AROMATIC_SYMBOLS[symbol], True
    if symbol in ELEMENTS:
        return symbol, False
    raise UnknownElement(f"unknown or unsupported element {symbol!r}")


def _parse_bracket(token: str) -> Atom:
    body = token[1:-1]
    if any(c in body for c in "+-@:"):
        raise SmilesSyntaxError(f"bracket atom {token}: charges and stereo are not supported")
    m = _BRACKET.match(token)
    if not m:
        if body[:1].isdigit():
            raise SmilesSyntaxError(f"bracket atom {token}: isotopes are not supported")
        sym = re.match(r"[A-Za-z][a-z]?", body)
        if sym and sym.group(0) not in ELEMENTS and sym.group(0) not in AROMATIC_SYMBOLS:
            raise UnknownElement(f"unknown or unsupported element in {token}")
        raise SmilesSyntaxError(f"malformed bracket atom {token}")
    element, aromatic = _resolve_symbol(m.group(1))
    if m.group(2):
        count = int(m.group(3)) if m.group(3) else 1
    else:
        count = 0
    return Atom(element, aromatic, explicit_h=count)


def parse_smiles(text: str) -> MolGraph:
    """Parse a SMILES string into a :class:`MolGraph`.

    Supports branches, ring-closure digits 1-9, the bond symbols ``- = #``,
    lowercase aromatic atoms and bracket atoms with an optional H count.

    Raises
    ------
    UnbalancedParenthesis, UnclosedRing, UnknownElement, ValenceViolation,
    AromaticPerceptionError, SmilesSyntaxError
    """
    if not text:
        raise SmilesSyntaxError("empty SMILES")
    if not text.isascii():
        raise SmilesSyntaxError("SMILES must be ASCII")

    atoms: list[Atom] = []
    bonds: list[Bond] = []
    explicit: list[bool] = []  # whether each bond had a written symbol
    branch_stack: list[int] = []
    rings: dict[int, tuple[int, Optional[BondOrder]]] = {}
    prev: Optional[int] = None
    pending: Optional[BondOrder] = None
    i = 0
    n = len(text)

    def add_bond(a: int, b: int, order: Optional[BondOrder]) -> None:
        if order is None:
            if atoms[a].aromatic and atoms[b].aromatic:
                order = BondOrder.AROMATIC
            else:
                order = BondOrder.SINGLE
        bonds.append(Bond(a, b, order))

    while i < n:
        ch = text[i]
        if ch == "[":
            j = text.find("]", i)
            if j < 0:
                raise SmilesSyntaxError("unterminated bracket atom")
            atom = _parse_bracket(text[i : j + 1])
            i = j + 1
        elif ch.isalpha():
            two = text[i : i + 2]
            if two in ("Cl", "Br"):
                symbol = two
                i += 2
            else:
                symbol = ch
                i += 1
            element, aromatic = _resolve_symbol(symbol)
            atom = Atom(element, aromatic)
        elif ch == "(":
            if prev is None:
                raise SmilesSyntaxError("branch opened before any atom")
            if pending is not None:
                raise SmilesSyntaxError("bond symbol before '('")
            branch_stack.append(prev)
            i += 1
            continue
        elif ch == ")":
            if not branch_stack:
                raise UnbalancedParenthesis(f"unmatched ')' at position {i}")
            if pending is not None:
                raise SmilesSyntaxError("dangling bond symbol before ')'")
            prev = branch_stack.pop()
            i += 1
            continue
        elif ch in _BOND_SYMBOLS:
            if prev is None or pending is not None:
                raise SmilesSyntaxError(f"misplaced bond symbol at position {i}")
            pending = _BOND_SYMBOLS[ch]
            i += 1
            continue
        elif ch.isdigit():
            if prev is None:
                raise SmilesSyntaxError("ring closure before any atom")
            digit = int(ch)
            if digit == 0:
                raise SmilesSyntaxError("ring closure digit 0 is not supported")
            if digit in rings:
                other, order = rings.pop(digit)
                if order is not None and pending is not None and order != pending:
                    raise SmilesSyntaxError(f"conflicting bond orders on ring closure {digit}")
                if other == prev:
                    raise SmilesSyntaxError(f"ring closure {digit} bonds an atom to itself")
                add_bond(other, prev, pending if pending is not None else order)
            else:
                rings[digit] = (prev, pending)
            pending = None
            i += 1
            continue
        else:
            what = _UNSUPPORTED.get(ch)
            if what:
                raise SmilesSyntaxError(f"{what} ({ch!r}) not supported")
            raise SmilesSyntaxError(f"unexpected character {ch!r} at position {i}")

        idx = len(atoms)
        atoms.append(atom)
        if prev is not None:
            add_bond(prev, idx, pending)
        elif pending is not None:
            raise SmilesSyntaxError("SMILES starts with a bond symbol")
        pending = None
        prev = idx

    if branch_stack:
        raise UnbalancedParenthesis("unclosed '('")
    if rings:
        raise UnclosedRing(f"unclosed ring bond(s) {sorted(rings)}")
    if pending is not None:
        raise SmilesSyntaxError("SMILES ends with a bond symbol")
    return MolGraph.build(atoms, bonds)


def read_smiles_file(path) -> list[str]:
    """Read one SMILES per line, skipping blanks and ``#`` comments.

    Only the first whitespace-separated field is kept, so ``SMILES id``
    files work too.
    """
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip()
            if not line or line.lstrip().startswith("#"):
                continue
            out.append(line.split()[0])
    return out
