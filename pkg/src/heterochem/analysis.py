"""Latent-space evaluations: PCA enumeration challenge, similarity
correlations, reconstruction-error taxonomy and sampling statistics."""

from __future__ import annotations

import csv
import json
import random
from collections import Counter
from dataclasses import asdict, dataclass, field
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from . import encdec
from .chem import ChemError, MolGraph, parse_smiles, write_canonical, write_random
from .chem.descriptors import bond_formula, scaffold_key, sum_formula
from .datasets import Corpus
from .molsim import AlignmentParams, align_score, latent_similarity, morgan_fingerprint, pearson_r2, tanimoto


class DegenerateCovariance(ValueError):
    pass


# ---------------------------------------------------------------- PCA


@dataclass
class PcaModel:
    mean: np.ndarray
    components: np.ndarray  # [k, dim], rows orthonormal
    explained_variance: np.ndarray  # [k], non-increasing


def pca_fit(vectors, k: int = 2) -> PcaModel:
    """Top-k eigenvectors of the sample covariance (divisor n - 1).

    Each component is signed so that its largest-magnitude entry is positive.
    """
    X = np.asarray(vectors, dtype=np.float64)
    n, dim = X.shape
    if n < k + 1:
        raise DegenerateCovariance(f"need at least {k + 1} vectors for {k} components, got {n}")
    if k > dim:
        raise DegenerateCovariance(f"cannot extract {k} components from {dim} dimensions")
    mean = X.mean(axis=0)
    Xc = X - mean
    cov = Xc.T @ Xc / (n - 1)
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(vals)[::-1][:k]
    vals = vals[order]
    vecs = vecs[:, order].T
    if vals[-1] <= 1e-12 * max(vals[0], 1e-300):
        raise DegenerateCovariance("covariance has fewer than k non-zero directions")
    for row in vecs:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1
    return PcaModel(mean, vecs, vals)


def pca_project(model: PcaModel, vector) -> np.ndarray:
    return (np.asarray(vector, dtype=np.float64) - model.mean) @ model.components.T


def pca_reconstruct(model: PcaModel, scores) -> np.ndarray:
    return np.asarray(scores) @ model.components + model.mean


# ---------------------------------------------------------------- enumeration challenge


def _mean_pairwise(points: np.ndarray) -> float:
    if len(points) < 2:
        return 0.0
    d = [np.linalg.norm(points[i] - points[j]) for i, j in combinations(range(len(points)), 2)]
    return float(np.mean(d))


@dataclass
class ChallengeResult:
    smiles: list[list[str]]  # enumerated forms per molecule
    latents: list[np.ndarray]  # [n_enum, dim] per molecule
    points: list[np.ndarray]  # [n_enum, 2] PCA projections per molecule
    intra: list[float]  # mean pairwise latent distance per molecule
    mean_intra: float
    mean_inter: float
    inter_intra_ratio: float
    background: Optional[np.ndarray] = None  # projected fitting set


def enumeration_challenge(
    model: encdec.SeqModel,
    molecules: Sequence[MolGraph],
    n_enum: int = 10,
    pca: Optional[PcaModel] = None,
    seed: int = 0,
    background: Optional[Sequence[str]] = None,
) -> ChallengeResult:
    """Encode ``n_enum`` random SMILES of each molecule and measure how tightly
    they cluster in latent space.

    Distances are Euclidean in the full latent space; the 2-D PCA points are
    for plotting. ``pca`` defaults to a fit on the latents of ``background``.
    """
    rng = random.Random(seed)
    bg_points = None
    if pca is None and background is not None:
        bg = encdec.encode(model, list(background))
        pca = pca_fit(bg, 2)
        bg_points = pca_project(pca, bg)
    forms, latents, points, intra = [], [], [], []
    for mol in molecules:
        smi = [write_random(mol, rng) for _ in range(n_enum)]
        z = encdec.encode(model, smi)
        forms.append(smi)
        latents.append(z)
        points.append(pca_project(pca, z) if pca is not None else np.zeros((len(smi), 2)))
        intra.append(_mean_pairwise(z))
    inter = []
    for a, b in combinations(range(len(latents)), 2):
        inter.extend(np.linalg.norm(x - y) for x in latents[a] for y in latents[b])
    mean_intra = float(np.mean(intra)) if intra else 0.0
    mean_inter = float(np.mean(inter)) if inter else 0.0
    ratio = mean_inter / mean_intra if mean_intra > 0 else float("inf")
    return ChallengeResult(forms, latents, points, intra, mean_intra, mean_inter, ratio, bg_points)


def write_challenge_csv(result: ChallengeResult, path, meta: Optional[dict] = None) -> None:
    with open(path, "w", newline="") as fh:
        if meta:
            fh.write("# " + json.dumps(meta, sort_keys=True) + "\n")
        w = csv.writer(fh)
        w.writerow(["x", "y", "label", "smiles"])
        if result.background is not None:
            for x, y in result.background:
                w.writerow([repr(float(x)), repr(float(y)), "background", ""])
        for k, (pts, forms) in enumerate(zip(result.points, result.smiles)):
            for (x, y), s in zip(pts, forms):
                w.writerow([repr(float(x)), repr(float(y)), f"mol{k}", s])


# ---------------------------------------------------------------- similarity correlations


@dataclass
class CorrelationResult:
    reference_ids: list[str]
    r2_fingerprint: list[float]
    r2_sequence: list[float]
    rows: list[tuple[str, str, float, float, float]] = field(repr=False)

    @property
    def mean_r2_fingerprint(self) -> float:
        return float(np.mean(self.r2_fingerprint))

    @property
    def mean_r2_sequence(self) -> float:
        return float(np.mean(self.r2_sequence))


def similarity_correlations(
    model: encdec.SeqModel,
    corpus: Corpus,
    references: Optional[Sequence[int]] = None,
    k: int = 1,
    params: AlignmentParams = AlignmentParams(),
    fp_bits: int = 2048,
) -> CorrelationResult:
    """Squared correlation of latent similarity against fingerprint Tanimoto
    and against SMILES alignment score, one reference molecule at a time.

    References default to the first ``k`` records. The reference itself is
    left out of every correlation.
    """
    if references is None:
        references = list(range(min(k, len(corpus))))
    if not references:
        raise ValueError("need at least one reference")
    recs = corpus.records
    Z = encdec.encode(model, [r.smiles for r in recs])
    fps = [morgan_fingerprint(r.mol, 2, fp_bits) for r in recs]
    ids, r2f, r2s, rows = [], [], [], []
    for ref in references:
        lat, fp, seq = [], [], []
        for j, rec in enumerate(recs):
            if j == ref:
                continue
            ls = latent_similarity(Z[ref], Z[j])
            fs = tanimoto(fps[ref], fps[j])
            ss = align_score(recs[ref].smiles, rec.smiles, params)
            lat.append(ls)
            fp.append(fs)
            seq.append(ss)
            rows.append((recs[ref].id, rec.id, ls, fs, ss))
        ids.append(recs[ref].id)
        r2f.append(pearson_r2(lat, fp))
        r2s.append(pearson_r2(lat, seq))
    return CorrelationResult(ids, r2f, r2s, rows)


def write_correlations_csv(result: CorrelationResult, path, meta: Optional[dict] = None) -> None:
    with open(path, "w", newline="") as fh:
        if meta:
            fh.write("# " + json.dumps(meta, sort_keys=True) + "\n")
        w = csv.writer(fh)
        w.writerow(["ref_id", "other_id", "latent_sim", "fp_sim", "seq_sim"])
        for ref, other, ls, fs, ss in result.rows:
            w.writerow([ref, other, repr(ls), repr(fs), repr(ss)])


# ---------------------------------------------------------------- error taxonomy


@dataclass(frozen=True)
class ErrorClass:
    malformed_smiles: bool = False
    correct: bool = False
    wrong_scaffold: bool = False
    wrong_sum_formula: bool = False
    wrong_bond_formula: bool = False
    assembly_order_only: bool = False

    @property
    def label(self) -> str:
        if self.malformed_smiles:
            return "malformed_smiles"
        if self.correct:
            return "correct"
        if self.assembly_order_only:
            return "assembly_order_only"
        parts = [
            name
            for name in ("wrong_scaffold", "wrong_sum_formula", "wrong_bond_formula")
            if getattr(self, name)
        ]
        return "+".join(parts)


def classify(reference: MolGraph, decoded: str) -> ErrorClass:
    """Compare a decoded SMILES against the molecule that was encoded."""
    try:
        out = parse_smiles(decoded)
    except ChemError:
        return ErrorClass(malformed_smiles=True)
    if len(out) == len(reference) and write_canonical(out) == write_canonical(reference):
        return ErrorClass(correct=True)
    ws = scaffold_key(out) != scaffold_key(reference)
    wf = sum_formula(out) != sum_formula(reference)
    wb = bond_formula(out) != bond_formula(reference)
    return ErrorClass(
        wrong_scaffold=ws,
        wrong_sum_formula=wf,
        wrong_bond_formula=wb,
        assembly_order_only=not (ws or wf or wb),
    )


def venn_counts(classes: Sequence[ErrorClass]) -> dict:
    """Aggregate counts, including every region of the three wrong_* sets."""
    counts = Counter(c.label for c in classes)
    wrong = [c for c in classes if not (c.malformed_smiles or c.correct)]
    regions = Counter(
        (c.wrong_scaffold, c.wrong_sum_formula, c.wrong_bond_formula) for c in wrong if not c.assembly_order_only
    )
    return {
        "n": len(classes),
        "malformed_smiles": sum(c.malformed_smiles for c in classes),
        "correct": sum(c.correct for c in classes),
        "valid_but_wrong": len(wrong),
        "wrong_scaffold": sum(c.wrong_scaffold for c in wrong),
        "wrong_sum_formula": sum(c.wrong_sum_formula for c in wrong),
        "wrong_bond_formula": sum(c.wrong_bond_formula for c in wrong),
        "any_wrong_descriptor": sum(
            c.wrong_scaffold or c.wrong_sum_formula or c.wrong_bond_formula for c in wrong
        ),
        "assembly_order_only": sum(c.assembly_order_only for c in wrong),
        "regions": {
            "".join("SFB"[i] if flag else "-" for i, flag in enumerate(key)): n
            for key, n in sorted(regions.items())
        },
        "labels": dict(sorted(counts.items())),
    }


@dataclass
class TaxonomyResult:
    inputs: list[str]
    outputs: list[str]
    classes: list[ErrorClass]
    counts: dict

    def to_json(self, path, meta: Optional[dict] = None) -> None:
        payload = {
            "meta": meta or {},
            "counts": self.counts,
            "records": [
                {"input": i, "output": o, "class": c.label, **asdict(c)}
                for i, o, c in zip(self.inputs, self.outputs, self.classes)
            ],
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=1, sort_keys=True)


def error_taxonomy(
    model: encdec.SeqModel,
    corpus: Corpus,
    decode: str = "greedy",
    seed: int = 0,
    temperature: float = 1.0,
) -> TaxonomyResult:
    """Encode every record's canonical SMILES, decode, and classify."""
    smiles = [r.smiles for r in corpus]
    Z = encdec.encode(model, smiles)
    if decode == "greedy":
        outs = [d.smiles for d in encdec.decode_greedy_batch(model, Z)]
    elif decode == "multinomial":
        rng = np.random.default_rng(seed)
        outs = [encdec.sample_batch(model, z, 1, temperature, rng)[0].smiles for z in Z]
    else:
        raise ValueError(f"unknown decode strategy {decode!r}")
    classes = [classify(r.mol, o) for r, o in zip(corpus, outs)]
    return TaxonomyResult(smiles, outs, classes, venn_counts(classes))


# ---------------------------------------------------------------- sampling


@dataclass
class SamplingStats:
    n_samples: int
    unique_smiles: int
    pct_correct_molecule: float
    unique_smiles_for_correct: int
    unique_molecules: int
    mean_fp_similarity_to_reference: float
    pct_valid: float = 0.0

    def to_json(self, path, meta: Optional[dict] = None) -> None:
        with open(path, "w") as fh:
            json.dump({"meta": meta or {}, "stats": asdict(self)}, fh, indent=1, sort_keys=True)


def summarize_samples(reference: MolGraph, samples: Sequence[str]) -> SamplingStats:
    ref_can = write_canonical(reference)
    ref_fp = morgan_fingerprint(reference)
    valid_can = []
    correct_forms = set()
    sims = []
    for s in samples:
        try:
            mol = parse_smiles(s)
        except ChemError:
            continue
        can = write_canonical(mol)
        valid_can.append(can)
        sims.append(tanimoto(ref_fp, morgan_fingerprint(mol)))
        if can == ref_can:
            correct_forms.add(s)
    n = len(samples)
    n_correct = sum(c == ref_can for c in valid_can)
    return SamplingStats(
        n_samples=n,
        unique_smiles=len(set(samples)),
        pct_correct_molecule=100.0 * n_correct / n if n else 0.0,
        unique_smiles_for_correct=len(correct_forms),
        unique_molecules=len(set(valid_can)),
        mean_fp_similarity_to_reference=float(np.mean(sims)) if sims else 0.0,
        pct_valid=100.0 * len(valid_can) / n if n else 0.0,
    )


def sampling_stats(
    model: encdec.SeqModel,
    z,
    reference: MolGraph,
    n: int = 1000,
    t: float = 1.0,
    rng=None,
    keep_probs: bool = False,
):
    """Multinomial samples from one latent point and their statistics.

    Returns ``(stats, decoded)``; with ``keep_probs`` every decoded sample
    carries its per-step probability matrix.
    """
    decoded = encdec.sample_batch(model, z, n, t, rng, keep_probs=keep_probs)
    return summarize_samples(reference, [d.smiles for d in decoded]), decoded


def write_heatmap_csv(decoded: encdec.Decoded, charset: Sequence[str], path) -> None:
    """Per-step probability matrix: one row per decoding step."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "chosen"] + list(charset))
        ids = decoded.ids + ([2] if not decoded.truncated else [])
        for step, row in enumerate(decoded.probs):
            chosen = charset[ids[step]] if step < len(ids) else ""
            w.writerow([step, chosen] + [repr(float(p)) for p in row])
