"""Similarity metrics: circular fingerprints, SMILES alignment, latent distance."""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .chem.graph import MolGraph

HASH_KEY = b"heterochem-morgan-v1"


class LengthMismatch(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


class DegenerateVariance(ValueError):
    pass


@dataclass(frozen=True)
class Fingerprint:
    bits: np.ndarray  # bool, shape (nbits,)
    radius: int = 2

    def __post_init__(self):
        n = self.bits.shape[0]
        if n < 1 or n & (n - 1):
            raise ValueError(f"fingerprint length {n} is not a power of two")

    @property
    def nbits(self) -> int:
        return self.bits.shape[0]

    def on_bits(self) -> list[int]:
        return np.flatnonzero(self.bits).tolist()


def _hash(values: Sequence[int]) -> int:
    payload = struct.pack(f"<{len(values)}q", *values)
    return int.from_bytes(
        hashlib.blake2b(payload, digest_size=8, key=HASH_KEY).digest(), "little", signed=True
    )


def atom_environment_ids(mol: MolGraph, radius: int = 2) -> list[list[int]]:
    """Environment identifiers per radius: ``ids[r][atom]``.

    Radius 0 hashes (degree, atomic number, hydrogens, aromatic, in ring).
    Radius r hashes (r, own id at r-1, sorted (bond order, neighbour id at r-1)).
    """
    n = len(mol)
    current = [
        _hash((mol.degree(i), a.atomic_number, a.hydrogens, int(a.aromatic), int(mol.in_ring(i))))
        for i, a in enumerate(mol.atoms)
    ]
    out = [current]
    for r in range(1, radius + 1):
        nxt = []
        for i in range(n):
            env = sorted((int(mol.bonds[bi].order), current[j]) for j, bi in mol.adjacency[i])
            flat = [r, current[i]]
            for order, ident in env:
                flat += [order, ident]
            nxt.append(_hash(flat))
        out.append(nxt)
        current = nxt
    return out


def morgan_fingerprint(mol: MolGraph, radius: int = 2, nbits: int = 2048) -> Fingerprint:
    """Hashed circular (ECFP-style) fingerprint.

    Atoms without neighbours contribute only their radius-0 identifier,
    so methane sets exactly one bit.
    """
    if radius < 0:
        raise ValueError("radius must be >= 0")
    bits = np.zeros(nbits, dtype=bool)
    ids = atom_environment_ids(mol, radius)
    for r, layer in enumerate(ids):
        for i, ident in enumerate(layer):
            if r > 0 and mol.degree(i) == 0:
                continue
            bits[ident % nbits] = True
    return Fingerprint(bits, radius)


def tanimoto(a: Fingerprint, b: Fingerprint) -> float:
    if a.nbits != b.nbits:
        raise LengthMismatch(f"fingerprint lengths differ: {a.nbits} vs {b.nbits}")
    union = int(np.count_nonzero(a.bits | b.bits))
    if union == 0:
        return 1.0
    return int(np.count_nonzero(a.bits & b.bits)) / union


@dataclass(frozen=True)
class AlignmentParams:
    match: float = 1.0
    mismatch: float = -1.0
    gap_open: float = -0.5
    gap_extend: float = -0.05

    def __post_init__(self):
        if not self.match > self.mismatch:
            raise ValueError("match score must exceed mismatch score")
        if not self.gap_open <= self.gap_extend <= 0:
            raise ValueError("need gap_open <= gap_extend <= 0")


def align_score(s1: str, s2: str, p: AlignmentParams = AlignmentParams()) -> float:
    """Global alignment score with affine gaps (Gotoh).

    A gap of length L costs ``gap_open + (L - 1) * gap_extend``; end gaps
    are scored like internal ones and an insertion may directly follow a
    deletion.
    """
    n, m = len(s1), len(s2)
    neg = -math.inf
    # M: ends in a (mis)match column; X: gap in s2 (consumes s1); Y: gap in s1
    prev_m = [neg] * (m + 1)
    prev_x = [neg] * (m + 1)
    prev_y = [neg] * (m + 1)
    prev_m[0] = 0.0
    for j in range(1, m + 1):
        prev_y[j] = p.gap_open + (j - 1) * p.gap_extend
    for i in range(1, n + 1):
        cur_m = [neg] * (m + 1)
        cur_x = [neg] * (m + 1)
        cur_y = [neg] * (m + 1)
        cur_x[0] = p.gap_open + (i - 1) * p.gap_extend
        a = s1[i - 1]
        for j in range(1, m + 1):
            sub = p.match if a == s2[j - 1] else p.mismatch
            cur_m[j] = sub + max(prev_m[j - 1], prev_x[j - 1], prev_y[j - 1])
            cur_x[j] = max(
                prev_m[j] + p.gap_open, prev_y[j] + p.gap_open, prev_x[j] + p.gap_extend
            )
            cur_y[j] = max(
                cur_m[j - 1] + p.gap_open, cur_x[j - 1] + p.gap_open, cur_y[j - 1] + p.gap_extend
            )
        prev_m, prev_x, prev_y = cur_m, cur_x, cur_y
    return max(prev_m[m], prev_x[m], prev_y[m])


def latent_similarity(a, b, eps: float = 1e-9) -> float:
    """Negative log Euclidean distance, clamped by ``eps``."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"latent dimensions differ: {a.shape} vs {b.shape}")
    return -math.log(float(np.linalg.norm(a - b)) + eps)


def pearson_r2(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise LengthMismatch("x and y must be 1-d and of equal length")
    if x.size < 3:
        raise ValueError("need at least 3 points")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise DegenerateVariance("zero variance in x or y")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return r * r
