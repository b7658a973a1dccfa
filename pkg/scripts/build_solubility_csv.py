"""Rebuild data/solubility.csv from the Huuskonen aqueous solubility SDFs.

The SDF pair (solubility.train.sdf / solubility.test.sdf) ships with the
RDKit documentation and with the ``datamol`` wheel under ``datamol/data``.
RDKit is needed only here, to turn the mol blocks into SMILES:

    pip install rdkit
    python scripts/build_solubility_csv.py path/to/solubility.train.sdf \
        path/to/solubility.test.sdf -o data/solubility.csv

The original train/test assignment is discarded; ``load_qsar`` re-splits
75/25 with a fixed seed.
"""

import argparse
import csv

from rdkit import Chem, RDLogger


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("sdf", nargs="+")
    ap.add_argument("-o", "--out", default="data/solubility.csv")
    args = ap.parse_args()
    RDLogger.DisableLog("rdApp.*")
    rows = []
    for path in args.sdf:
        for mol in Chem.SDMolSupplier(path):
            if mol is None:
                continue
            name = mol.GetProp("NAME") if mol.HasProp("NAME") else ""
            rows.append((name, Chem.MolToSmiles(mol, isomericSmiles=False), mol.GetProp("SOL")))
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["name", "smiles", "value"])
        w.writerows(rows)
    print(f"wrote {len(rows)} rows to {args.out}")


if __name__ == "__main__":
    main()
