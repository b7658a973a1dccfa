"""Molecular graphs, SMILES reading/writing and structural descriptors."""

from .canon import canonical_ranks, canonical_smiles, write_canonical, write_random
from .descriptors import (
    bond_formula,
    generalized_scaffold,
    same_molecule,
    scaffold_key,
    sum_formula,
)
from .generate import generate_molecules
from .graph import (
    AromaticPerceptionError,
    Atom,
    Bond,
    BondOrder,
    ChemError,
    DisconnectedGraph,
    Element,
    MolGraph,
    RingClosureOverflow,
    SmilesSyntaxError,
    UnbalancedParenthesis,
    UnclosedRing,
    UnknownElement,
    ValenceViolation,
)
from .smiles import parse_smiles, read_smiles_file

__all__ = [
    "AromaticPerceptionError",
    "Atom",
    "Bond",
    "BondOrder",
    "ChemError",
    "DisconnectedGraph",
    "Element",
    "MolGraph",
    "RingClosureOverflow",
    "SmilesSyntaxError",
    "UnbalancedParenthesis",
    "UnclosedRing",
    "UnknownElement",
    "ValenceViolation",
    "bond_formula",
    "canonical_ranks",
    "canonical_smiles",
    "generalized_scaffold",
    "generate_molecules",
    "parse_smiles",
    "read_smiles_file",
    "same_molecule",
    "scaffold_key",
    "sum_formula",
    "write_canonical",
    "write_random",
]
