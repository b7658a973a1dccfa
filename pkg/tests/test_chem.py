import random

import pytest
from hypothesis import given, settings, strategies as st

from heterochem.chem import (
    AromaticPerceptionError,
    Atom,
    Bond,
    MolGraph,
    BondOrder,
    ChemError,
    RingClosureOverflow,
    SmilesSyntaxError,
    UnbalancedParenthesis,
    UnclosedRing,
    UnknownElement,
    ValenceViolation,
    bond_formula,
    canonical_ranks,
    canonical_smiles,
    generate_molecules,
    parse_smiles,
    read_smiles_file,
    same_molecule,
    scaffold_key,
    sum_formula,
    write_canonical,
    write_random,
)
from oracles import count_bonds, isomorphic, isomorphic_exhaustive

SAMPLES = [
    "C", "CC", "CCO", "C=C", "C#N", "CC=O", "Cc1ccccc1", "c1ccccc1", "c1cc[nH]c1", "C1CC1C(=O)O",
    "C1CCC2CCCCC2C1", "c1ccc2ccccc2c1", "OC(=O)C(N)CS", "FC(F)(F)Cl", "BrC=CBr", "C1=CC=CC=C1",
    "O=S(=O)(O)O", "CC(C)(C)C", "N#CC#N", "C1C2CC3CC1CC(C2)C3", "c1ccncc1", "c1ccoc1", "c1ccsc1",
    "OB(O)O", "CP(C)C", "[NH2]C", "ClC(Cl)Cl", "IC", "C12C3C1C23",
]


@pytest.fixture(scope="module")
def small_corpus():
    return generate_molecules(4)


# ---------------------------------------------------------------- parsing


def test_toluene_structure():
    m = parse_smiles("Cc1ccccc1")
    assert len(m) == 7
    assert bond_formula(m) == {"single": 1, "double": 0, "triple": 0, "aromatic": 6}


def test_methane():
    m = parse_smiles("C")
    assert len(m) == 1 and m.bonds == () and m.atoms[0].hydrogens == 4


def test_cyclopropane_carboxylic_acid_matches_counter():
    m = parse_smiles("C1CC1C(=O)O")
    assert len(m) == 6 and len(m.bonds) == 6
    assert count_bonds(m) == {"single": 5, "double": 1, "triple": 0, "aromatic": 0}
    assert bond_formula(m) == count_bonds(m)


@pytest.mark.parametrize(
    "text, exc",
    [
        ("C(C", UnbalancedParenthesis),
        ("CC)", UnbalancedParenthesis),
        ("C1CC", UnclosedRing),
        ("CXC", UnknownElement),
        ("[Xe]", UnknownElement),
        ("C(C)(C)(C)(C)C", ValenceViolation),
        ("O=O=O", ValenceViolation),
        ("[CH5]", ValenceViolation),
        ("ccc", AromaticPerceptionError),
        ("Cc", AromaticPerceptionError),
        ("", SmilesSyntaxError),
        ("C.C", SmilesSyntaxError),
        ("[NH4+]", SmilesSyntaxError),
        ("C[C@H](O)N", SmilesSyntaxError),
        ("C%10CC%10", SmilesSyntaxError),
        ("C1CC11", SmilesSyntaxError),
    ],
)
def test_parse_errors(text, exc):
    with pytest.raises(exc):
        parse_smiles(text)


def test_errors_are_value_errors():
    assert issubclass(ChemError, ValueError)
    assert issubclass(UnclosedRing, SmilesSyntaxError)


def test_implicit_hydrogens_never_negative():
    for s in SAMPLES:
        assert all(a.hydrogens >= 0 for a in parse_smiles(s).atoms)


def test_bracket_hydrogens_respected():
    m = parse_smiles("[CH2]=C")
    assert m.atoms[0].hydrogens == 2 and m.atoms[0].explicit_h == 2
    assert parse_smiles("[C]").atoms[0].hydrogens == 0


def test_ring_closure_bond_symbol_either_end():
    a = parse_smiles("C=1CCC1")
    b = parse_smiles("C1CCC=1")
    assert same_molecule(a, b)
    assert bond_formula(a)["double"] == 1


def test_ring_closure_digit_reuse():
    m = parse_smiles("C1CC1C1CC1")
    assert len(m) == 6 and len(m.bonds) == 7


def test_read_smiles_file(tmp_path):
    p = tmp_path / "x.smi"
    p.write_text("# header\nCCO  ethanol\n\n c1ccccc1 \n")
    assert read_smiles_file(p) == ["CCO", "c1ccccc1"]


# ---------------------------------------------------------------- descriptors


def test_sum_formulas():
    assert sum_formula(parse_smiles("C")) == "CH4"
    assert sum_formula(parse_smiles("Cc1ccccc1")) == "C7H8"
    assert sum_formula(parse_smiles("c1cc[nH]c1")) == "C4H5N"
    assert sum_formula(parse_smiles("O")) == "H2O"
    assert sum_formula(parse_smiles("ClC(Cl)Cl")) == "CHCl3"


def _h_by_filling(mol):
    """Independent H count: fill every atom to its lowest default valence
    that accommodates its bonds; aromatic atoms count one extra bond."""
    valences = {"C": (4,), "N": (3,), "O": (2,), "F": (1,), "Cl": (1,), "S": (2, 4, 6), "B": (3,)}
    total = 0
    for i, atom in enumerate(mol.atoms):
        if atom.explicit_h is not None:
            total += atom.explicit_h
            continue
        used = sum(1 if b.order == BondOrder.AROMATIC else int(b.order) for b in (mol.bonds[bi] for _, bi in mol.neighbors(i)))
        if atom.aromatic:
            used += 1
        v = next(v for v in valences[atom.element] if v >= used)
        total += v - used
    return total


@pytest.mark.parametrize("s", ["c1cc[nH]c1", "Cc1ccccc1", "c1ccncc1", "C1CC1C(=O)O", "OC(=O)C(N)CS"])
def test_hydrogen_count_against_filling_oracle(s):
    m = parse_smiles(s)
    assert sum(a.hydrogens for a in m.atoms) == _h_by_filling(m)


def test_bond_formulas():
    assert bond_formula(parse_smiles("CC=O")) == {"single": 1, "double": 1, "triple": 0, "aromatic": 0}
    assert bond_formula(parse_smiles("c1ccccc1")) == {"single": 0, "double": 0, "triple": 0, "aromatic": 6}
    assert bond_formula(parse_smiles("C#N"))["triple"] == 1


def test_scaffolds():
    key = lambda s: scaffold_key(parse_smiles(s))
    assert key("CCO") == key("CCN")
    assert key("CC=O") == key("CCO")
    assert key("CCCC") != key("CC(C)C")
    assert key("c1ccccc1") == key("C1CCCCC1")


def test_same_molecule_examples():
    m = parse_smiles("CCO")
    assert same_molecule(m, m)
    assert same_molecule(parse_smiles("CCO"), parse_smiles("OCC"))
    assert not same_molecule(parse_smiles("CCO"), parse_smiles("CCN"))


# ---------------------------------------------------------------- canonical writing


def test_canonical_examples():
    assert canonical_ranks(parse_smiles("C")) == [0]
    assert canonical_smiles("c1ccccc1C") == canonical_smiles("Cc1ccccc1")
    assert canonical_smiles("Cc1ccccc1") == "Cc1ccccc1"


def test_ethanol_ranks_follow_atom_identity():
    a = parse_smiles("CCO")
    b = parse_smiles("OCC")
    ra, rb = canonical_ranks(a), canonical_ranks(b)
    # atom identity: a's 0,1,2 are b's 2,1,0
    assert [ra[0], ra[1], ra[2]] == [rb[2], rb[1], rb[0]]


@pytest.mark.parametrize("s", SAMPLES)
def test_round_trip_fixed_point(s):
    c1 = write_canonical(parse_smiles(s))
    assert write_canonical(parse_smiles(c1)) == c1
    assert isomorphic(parse_smiles(c1), parse_smiles(s))


@pytest.mark.parametrize("s", SAMPLES)
def test_ranks_are_permutation(s):
    m = parse_smiles(s)
    assert sorted(canonical_ranks(m)) == list(range(len(m)))


@pytest.mark.parametrize("s", SAMPLES)
def test_canonical_invariant_under_permutation(s):
    m = parse_smiles(s)
    can = write_canonical(m)
    rng = random.Random(s)
    for _ in range(5):
        perm = list(range(len(m)))
        rng.shuffle(perm)
        assert write_canonical(m.permuted(perm)) == can


def test_ring_closure_overflow():
    # a 12-clique forces more than nine simultaneously open ring closures
    atoms = [Atom("C", False, None, i, 0) for i in range(12)]
    bonds = [Bond(i, j, BondOrder.SINGLE) for i in range(12) for j in range(i + 1, 12)]
    clique = MolGraph.build(atoms, bonds, validate=False)
    with pytest.raises(RingClosureOverflow):
        write_canonical(clique)


# ---------------------------------------------------------------- enumeration


def test_single_atom_enumeration():
    m = parse_smiles("C")
    assert {write_random(m, k) for k in range(20)} == {"C"}


def test_toluene_has_many_forms():
    m = parse_smiles("Cc1ccccc1")
    forms = {write_random(m, k) for k in range(1000)}
    assert len(forms) > 10


def test_random_writer_is_seeded():
    m = parse_smiles("OC(=O)C(N)CS")
    assert write_random(m, 7) == write_random(m, 7)
    assert write_random(m, random.Random(3)) == write_random(m, random.Random(3))


@pytest.mark.parametrize("s", SAMPLES)
def test_enumeration_soundness(s):
    m = parse_smiles(s)
    can = write_canonical(m)
    for seed in range(20):
        r = parse_smiles(write_random(m, seed))
        assert write_canonical(r) == can
        assert isomorphic(r, m)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 2**32 - 1))
def test_enumeration_soundness_property(idx, seed):
    corpus = _corpus4()
    s = corpus[idx % len(corpus)]
    m = parse_smiles(s)
    r = parse_smiles(write_random(m, seed))
    assert same_molecule(m, r)
    assert isomorphic(m, r)


_CACHE = {}


def _corpus4():
    if "c4" not in _CACHE:
        _CACHE["c4"] = generate_molecules(4)
    return _CACHE["c4"]


def test_generator_counts_and_uniqueness(small_corpus):
    assert len(small_corpus) == len(set(small_corpus)) == 602
    assert generate_molecules(1) == ["C", "F", "N", "O"]
    for s in small_corpus:
        assert canonical_smiles(s) == s


def test_generator_pairwise_non_isomorphic(small_corpus):
    """Molecules with different canonical strings must not be isomorphic."""
    groups = {}
    for s in small_corpus:
        m = parse_smiles(s)
        groups.setdefault((sum_formula(m), tuple(bond_formula(m).values())), []).append(m)
    pairs = 0
    for mols in groups.values():
        for i in range(len(mols)):
            for j in range(i + 1, len(mols)):
                assert not isomorphic(mols[i], mols[j])
                pairs += 1
    assert pairs > 100


def test_isomorphism_oracle_agrees_with_exhaustive():
    mols = [parse_smiles(s) for s in ["CCO", "OCC", "CC=O", "C1CC1", "CC(C)O", "CCCO", "C1CO1"]]
    for a in mols:
        for b in mols:
            assert isomorphic(a, b) == isomorphic_exhaustive(a, b) == same_molecule(a, b)


def test_generator_reproduces_shipped_corpus():
    from pathlib import Path

    from heterochem.chem import read_smiles_file

    path = Path(__file__).resolve().parents[1] / "data" / "generated_6.smi"
    assert generate_molecules(6) == read_smiles_file(path)
