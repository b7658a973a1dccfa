"""Hand-labeled decode pairs for the error taxonomy.

Codes: "ok" correct, "bad" malformed, "order" assembly order only, otherwise
the set of wrong descriptors among S (scaffold), F (sum formula), B (bond
formula). Bond formulas count heavy-atom bonds only.
"""

CASES = [
    ("CCO", "OCC", "ok"),
    ("CCO", "C(O)C", "ok"),
    ("CC(=O)O", "CC(O)=O", "ok"),
    ("OCCN", "NCCO", "ok"),
    ("c1ccccc1O", "Oc1ccccc1", "ok"),
    ("CCO", "CC(", "bad"),
    ("CCO", "C1CC", "bad"),
    ("CCO", "CXC", "bad"),
    ("CCO", "CCN", "F"),  # C2H6O vs C2H7N
    ("CCO", "CCC", "F"),
    ("CCCCO", "CCCCN", "F"),
    ("c1ccccc1", "c1ccncc1", "F"),
    ("c1ccccc1O", "c1ccccc1N", "F"),
    ("CCl", "CBr", "F"),
    ("CCO", "CC=O", "FB"),  # loses two H, one single becomes double
    ("CCO", "C=CO", "FB"),
    ("CC#N", "CC=N", "FB"),
    ("CCO", "COC", "order"),  # same skeleton, formula and bond counts
    ("OCCN", "OCNC", "order"),
    ("NCC=O", "OCC=N", "order"),
    ("CCOC", "CCCO", "order"),
    ("CCCO", "CC(C)O", "S"),  # linear vs branched, both C3H8O
    ("CCCC", "CC(C)C", "S"),
    ("CC(=O)O", "OCC=O", "S"),
    ("C#CC", "C=C=C", "B"),  # C3H4 either way
    ("C1CCCCC1", "C=CCCCC", "SB"),  # both C6H12
    ("C1CC1", "C=CC", "SB"),
    ("C1CCCCC1", "CCCCCC", "SFB"),
    ("C1CCCCC1", "C1CCCC1", "SFB"),
    ("c1ccccc1C", "c1ccccc1CC", "SFB"),
]


def expected_flags(code: str) -> dict:
    if code == "ok":
        return {"correct": True}
    if code == "bad":
        return {"malformed_smiles": True}
    if code == "order":
        return {"assembly_order_only": True}
    return {
        "wrong_scaffold": "S" in code,
        "wrong_sum_formula": "F" in code,
        "wrong_bond_formula": "B" in code,
    }
