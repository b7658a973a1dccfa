"""Corpora, splits, encoder/decoder pair construction, one-hot vectorization
and QSAR table ingestion."""

from __future__ import annotations

import csv
import enum
import logging
import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from .chem import ChemError, MolGraph, parse_smiles, read_smiles_file, write_canonical, write_random

log = logging.getLogger(__name__)

PAD, START, END = "<pad>", "<start>", "<end>"
SPECIAL_TOKENS = (PAD, START, END)
RING_DIGITS = tuple("123456789")
_TOKEN_RE = re.compile(r"\[[^\]]+\]|Cl|Br|[A-Za-z]|\d|[=#\-()]|.")


class EmptyCorpus(ValueError):
    pass


class TokenNotInCharset(ValueError):
    pass


class SequenceTooLong(ValueError):
    pass


class MalformedCsv(ValueError):
    pass


def tokenize(smiles: str) -> list[str]:
    """Split a SMILES string into tokens; Cl, Br and bracket atoms stay whole."""
    return _TOKEN_RE.findall(smiles)


@dataclass(frozen=True)
class Charset:
    tokens: tuple[str, ...]

    def __post_init__(self):
        if self.tokens[:3] != SPECIAL_TOKENS:
            raise ValueError("charset must start with pad, start and end tokens")
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(self.tokens)})

    @classmethod
    def from_smiles(cls, smiles: Iterable[str]) -> "Charset":
        """Specials, then every token seen, sorted. Ring digits 1-9 are always
        included since enumerated forms may open more rings at once than the
        canonical forms the charset was built from."""
        seen = set(RING_DIGITS)
        for s in smiles:
            seen.update(tokenize(s))
        return cls(SPECIAL_TOKENS + tuple(sorted(seen)))

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def pad(self) -> int:
        return 0

    @property
    def start(self) -> int:
        return 1

    @property
    def end(self) -> int:
        return 2

    def index(self, token: str) -> int:
        try:
            return self._index[token]
        except KeyError:
            raise TokenNotInCharset(f"token {token!r} not in charset") from None

    def encode(self, smiles: str, max_len: int) -> list[int]:
        """Token ids with start/end markers, unpadded."""
        toks = tokenize(smiles)
        if len(toks) + 2 > max_len:
            raise SequenceTooLong(f"{smiles!r} needs {len(toks) + 2} positions > max_len {max_len}")
        return [self.start] + [self.index(t) for t in toks] + [self.end]

    def decode(self, ids: Iterable[int]) -> str:
        """Join tokens up to the first end token, skipping start markers."""
        out = []
        for i in ids:
            i = int(i)
            if i == self.end:
                break
            if i in (self.start, self.pad):
                continue
            out.append(self.tokens[i])
        return "".join(out)


@dataclass
class OneHotBatch:
    tensor: np.ndarray  # [batch, max_len, charset]
    lengths: np.ndarray  # tokens including start and end
    charset: Charset


def index_batch(smiles: Sequence[str], charset: Charset, max_len: int, width: Optional[int] = None):
    """Integer form of :func:`vectorize`: ids ``[batch, width]`` and lengths.

    ``width`` defaults to the longest sequence in the batch.
    """
    seqs = [charset.encode(s, max_len) for s in smiles]
    lengths = np.array([len(s) for s in seqs], dtype=np.int64)
    width = int(lengths.max()) if width is None else width
    ids = np.full((len(seqs), width), charset.pad, dtype=np.int64)
    for row, seq in enumerate(seqs):
        ids[row, : len(seq)] = seq
    return ids, lengths


def vectorize(smiles: Sequence[str], charset: Charset, max_len: int) -> OneHotBatch:
    """One-hot encode: start token, tokens, end token, then pad to max_len."""
    ids, lengths = index_batch(smiles, charset, max_len, width=max_len)
    tensor = np.zeros((len(smiles), max_len, len(charset)), dtype=np.float32)
    np.put_along_axis(tensor, ids[..., None], 1.0, axis=-1)
    return OneHotBatch(tensor, lengths, charset)


def devectorize(batch: OneHotBatch) -> list[str]:
    ids = batch.tensor.argmax(axis=-1)
    return [batch.charset.decode(row) for row in ids]


# ---------------------------------------------------------------- corpora


@dataclass(frozen=True)
class Record:
    id: str
    smiles: str  # canonical
    mol: MolGraph = field(repr=False, compare=False)


@dataclass
class Corpus:
    records: list[Record]
    provenance: str = ""
    rejected: list[tuple[str, str]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def smiles(self) -> list[str]:
        return [r.smiles for r in self.records]

    @classmethod
    def from_smiles(
        cls, smiles: Iterable[str], provenance: str = "", ids: Optional[Iterable[str]] = None
    ) -> "Corpus":
        """Parse, canonicalize and de-duplicate. Unparseable entries are kept
        in ``rejected`` as (smiles, reason) instead of raising."""
        records: list[Record] = []
        rejected: list[tuple[str, str]] = []
        seen: set[str] = set()
        ids = list(ids) if ids is not None else None
        for k, s in enumerate(smiles):
            try:
                mol = parse_smiles(s)
                can = write_canonical(mol)
            except ChemError as exc:
                rejected.append((s, f"{type(exc).__name__}: {exc}"))
                continue
            if can in seen:
                continue
            seen.add(can)
            rid = ids[k] if ids is not None else str(len(records))
            records.append(Record(rid, can, parse_smiles(can)))
        if rejected:
            log.warning("%s: %d SMILES rejected", provenance or "corpus", len(rejected))
        return cls(records, provenance, rejected)

    @classmethod
    def from_file(cls, path) -> "Corpus":
        return cls.from_smiles(read_smiles_file(path), provenance=str(path))

    def subset(self, idx: Iterable[int], provenance: Optional[str] = None) -> "Corpus":
        return Corpus([self.records[i] for i in idx], provenance or self.provenance)


def split(corpus: Corpus, ratio: float = 0.9, seed: int = 0) -> tuple[Corpus, Corpus]:
    """Deterministic random train/test split."""
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must lie in (0, 1)")
    if len(corpus) == 0:
        raise EmptyCorpus("cannot split an empty corpus")
    order = np.random.default_rng(seed).permutation(len(corpus))
    n_train = int(round(ratio * len(corpus)))
    train = sorted(order[:n_train].tolist())
    test = sorted(order[n_train:].tolist())
    return (
        corpus.subset(train, f"{corpus.provenance}[train]"),
        corpus.subset(test, f"{corpus.provenance}[test]"),
    )


class DataMode(enum.Enum):
    CAN2CAN = "can2can"
    ENUM2CAN = "enum2can"
    CAN2ENUM = "can2enum"
    ENUM2ENUM = "enum2enum"

    @property
    def encoder_enumerated(self) -> bool:
        return self.value.startswith("enum")

    @property
    def decoder_enumerated(self) -> bool:
        return self.value.endswith("enum")


def make_pairs(corpus: Corpus, mode: DataMode | str, rng: random.Random | int | None = None) -> Iterator[tuple[str, str]]:
    """One (encoder input, decoder target) pair per record.

    Enumerated sides are fresh random SMILES; in enum2enum the two sides are
    drawn independently.
    """
    mode = DataMode(mode)
    if not isinstance(rng, random.Random):
        rng = random.Random(rng)
    for rec in corpus.records:
        src = write_random(rec.mol, rng) if mode.encoder_enumerated else rec.smiles
        tgt = write_random(rec.mol, rng) if mode.decoder_enumerated else rec.smiles
        yield src, tgt


def pre_enumerate(corpus: Corpus, mode: DataMode | str, k: int = 50, seed: int = 0) -> list[tuple[str, str]]:
    """K pairs per molecule, generated once up front."""
    rng = random.Random(seed)
    out = []
    for _ in range(k):
        out.extend(make_pairs(corpus, mode, rng))
    return out


# ---------------------------------------------------------------- QSAR

# label -> (low, high, molecules), endpoint spans as published for each set
DOCUMENTED_SPANS = {
    "bcf": (-1.7, 5.7, 541),
    "igc50": (0.3, 6.4, 1434),
    "ld50": (0.5, 7.1, 5931),
    "mp": (-196.0, 493.0, 7509),
    "solubility": (-11.6, 1.6, 1297),
}


@dataclass(frozen=True)
class QsarRecord:
    smiles: str  # canonical
    value: float
    split: str
    mol: MolGraph = field(repr=False, compare=False)


@dataclass
class QsarTable:
    name: str
    records: list[QsarRecord]
    dropped: list[tuple[int, str, str]] = field(default_factory=list)  # (row, smiles, reason)
    duplicates: int = 0
    out_of_span: int = 0
    notes: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def part(self, which: str) -> list[QsarRecord]:
        return [r for r in self.records if r.split == which]

    @property
    def values(self) -> np.ndarray:
        return np.array([r.value for r in self.records])


def load_qsar(path, name: Optional[str] = None, *, test_fraction: float = 0.25, seed: int = 0) -> QsarTable:
    """Read a QSAR CSV with columns ``smiles``, ``value`` and optional ``split``.

    Unparseable SMILES are dropped and counted; duplicates (same canonical
    SMILES) keep their first occurrence. Without a split column the rows are
    split 75/25 with a fixed seed.
    """
    path = Path(path)
    name = (name or path.stem).lower()
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            fields = [f.strip().lower() for f in (reader.fieldnames or [])]
            if "smiles" not in fields or "value" not in fields:
                raise MalformedCsv(f"{path}: header must contain 'smiles' and 'value'")
            rows = [{k.strip().lower(): (v or "").strip() for k, v in row.items() if k} for row in reader]
    except UnicodeDecodeError as exc:
        raise MalformedCsv(f"{path}: not UTF-8 text") from exc

    has_split = "split" in fields
    kept: list[tuple[str, float, Optional[str], MolGraph]] = []
    dropped = []
    seen: set[str] = set()
    duplicates = 0
    for k, row in enumerate(rows):
        try:
            value = float(row["value"])
        except ValueError:
            raise MalformedCsv(f"{path}: row {k + 2} has non-numeric value {row['value']!r}") from None
        try:
            mol = parse_smiles(row["smiles"])
            can = write_canonical(mol)
        except ChemError as exc:
            dropped.append((k, row["smiles"], f"{type(exc).__name__}: {exc}"))
            continue
        if can in seen:
            duplicates += 1
            continue
        seen.add(can)
        label = row.get("split", "").lower() if has_split else None
        if has_split and label not in ("train", "test"):
            raise MalformedCsv(f"{path}: row {k + 2} has split {label!r}, expected train/test")
        kept.append((can, value, label, mol))

    if not has_split:
        order = np.random.default_rng(seed).permutation(len(kept))
        n_test = int(round(test_fraction * len(kept)))
        test_idx = set(order[:n_test].tolist())
        kept = [(s, v, "test" if i in test_idx else "train", m) for i, (s, v, _l, m) in enumerate(kept)]

    records = [QsarRecord(s, v, label, m) for s, v, label, m in kept]
    table = QsarTable(name, records, dropped, duplicates)
    if dropped:
        log.warning("%s: dropped %d unparseable SMILES", name, len(dropped))
    span = DOCUMENTED_SPANS.get(name)
    if span is not None:
        lo, hi, _ = span
        table.out_of_span = int(sum(not (lo - 0.05 <= r.value <= hi + 0.05) for r in records))
    if name == "ld50":
        table.notes.append("LD50 units/log conversion are ambiguous in the source; values stored as-is")
    return table
