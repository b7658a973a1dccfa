import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heterochem.chem import canonical_smiles, parse_smiles, same_molecule
from heterochem.datasets import (
    Charset,
    Corpus,
    DataMode,
    EmptyCorpus,
    MalformedCsv,
    SequenceTooLong,
    TokenNotInCharset,
    devectorize,
    index_batch,
    load_qsar,
    make_pairs,
    pre_enumerate,
    split,
    tokenize,
    vectorize,
)

SMILES = ["CCO", "c1ccccc1Cl", "BrCC(=O)N", "C#N", "c1cc[nH]c1", "CC(C)(C)O"]


def test_tokenize_keeps_two_letter_elements_and_brackets():
    assert tokenize("ClCBr") == ["Cl", "C", "Br"]
    assert tokenize("c1cc[nH]c1") == ["c", "1", "c", "c", "[nH]", "c", "1"]
    assert "".join(tokenize("CC(=O)C#N")) == "CC(=O)C#N"


def test_charset_layout():
    cs = Charset.from_smiles(SMILES)
    assert cs.tokens[:3] == ("<pad>", "<start>", "<end>")
    assert "Cl" in cs.tokens and "Br" in cs.tokens and "[nH]" in cs.tokens
    assert all(d in cs.tokens for d in "123456789")
    assert len(set(cs.tokens)) == len(cs)


def test_encode_decode_round_trip():
    cs = Charset.from_smiles(SMILES)
    for s in SMILES:
        ids = cs.encode(s, 40)
        assert ids[0] == cs.start and ids[-1] == cs.end
        assert cs.decode(ids) == s


def test_encode_errors():
    cs = Charset.from_smiles(["CC"])
    with pytest.raises(TokenNotInCharset):
        cs.encode("CN", 10)
    with pytest.raises(SequenceTooLong):
        cs.encode("CCCCCCCC", 5)


def test_vectorize_one_hot():
    cs = Charset.from_smiles(SMILES)
    b = vectorize(SMILES, cs, 20)
    assert b.tensor.shape == (len(SMILES), 20, len(cs))
    assert np.array_equal(b.tensor.sum(axis=-1), np.ones((len(SMILES), 20)))
    assert devectorize(b) == SMILES
    # trailing positions are pad
    assert b.tensor[0, b.lengths[0]:, cs.pad].all()


def test_index_batch_width():
    cs = Charset.from_smiles(SMILES)
    ids, lengths = index_batch(["CCO", "C"], cs, 20)
    assert ids.shape == (2, 5) and lengths.tolist() == [5, 3]


@settings(max_examples=50, deadline=None)
@given(st.lists(st.sampled_from(SMILES), min_size=1, max_size=6))
def test_vectorize_round_trip_property(batch):
    cs = Charset.from_smiles(SMILES)
    assert devectorize(vectorize(batch, cs, 30)) == batch


def test_corpus_dedupes_and_reports(caplog):
    c = Corpus.from_smiles(["CCO", "OCC", "C1CC", "CXC", "c1ccccc1"], "test")
    assert c.smiles == [canonical_smiles("CCO"), canonical_smiles("c1ccccc1")]
    assert len(c.rejected) == 2
    assert "UnclosedRing" in c.rejected[0][1]


def test_corpus_from_file(tmp_path):
    p = tmp_path / "c.smi"
    p.write_text("# comment\nCCO\nCCN x\n\n")
    c = Corpus.from_file(p)
    assert len(c) == 2 and c.provenance == str(p)


def test_split_deterministic_and_disjoint():
    c = Corpus.from_smiles([f"C{'C' * k}O" for k in range(30)])
    a1, b1 = split(c, 0.9, 4)
    a2, b2 = split(c, 0.9, 4)
    assert a1.smiles == a2.smiles and b1.smiles == b2.smiles
    assert len(a1) == 27 and len(b1) == 3
    assert not set(a1.smiles) & set(b1.smiles)
    with pytest.raises(EmptyCorpus):
        split(Corpus([]), 0.9)
    with pytest.raises(ValueError):
        split(c, 1.0)


def test_data_modes():
    assert DataMode("can2enum").decoder_enumerated and not DataMode("can2enum").encoder_enumerated
    assert DataMode.ENUM2CAN.encoder_enumerated and not DataMode.ENUM2CAN.decoder_enumerated


@pytest.mark.parametrize("mode", [m.value for m in DataMode])
def test_pairs_are_same_molecule(mode):
    c = Corpus.from_smiles(["OC(=O)c1ccccc1N", "CC(C)CO", "C1CCOC1"])
    for src, tgt in make_pairs(c, mode, 3):
        assert same_molecule(parse_smiles(src), parse_smiles(tgt))
    pairs = list(make_pairs(c, mode, 3))
    for (src, tgt), rec in zip(pairs, c):
        if not DataMode(mode).encoder_enumerated:
            assert src == rec.smiles
        if not DataMode(mode).decoder_enumerated:
            assert tgt == rec.smiles


def test_enum_pairs_vary_and_are_seeded():
    c = Corpus.from_smiles(["OC(=O)c1ccccc1N"])
    rng = random.Random(0)
    srcs = {next(make_pairs(c, "enum2enum", rng))[0] for _ in range(30)}
    assert len(srcs) > 3
    assert list(make_pairs(c, "enum2enum", 5)) == list(make_pairs(c, "enum2enum", 5))


def test_pre_enumerate_count():
    c = Corpus.from_smiles(["CCO", "CCN"])
    assert len(pre_enumerate(c, "enum2enum", k=50, seed=1)) == 100


# ---------------------------------------------------------------- QSAR tables


def _write(tmp_path, text, name="toy.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_load_qsar_split_and_drops(tmp_path):
    rows = ["smiles,value"] + [f"{'C' * k}O,{k}" for k in range(1, 21)] + ["C1CC,3", "OC,9"]
    t = load_qsar(_write(tmp_path, "\n".join(rows)))
    assert len(t.dropped) == 1 and t.duplicates == 1
    assert len(t) == 20
    assert len(t.part("test")) == 5 and len(t.part("train")) == 15
    assert load_qsar(_write(tmp_path, "\n".join(rows))).part("test") == t.part("test")


def test_load_qsar_explicit_split(tmp_path):
    t = load_qsar(_write(tmp_path, "smiles,value,split\nCCO,1,train\nCCN,2,test\n"))
    assert [r.split for r in t.records] == ["train", "test"]
    with pytest.raises(MalformedCsv):
        load_qsar(_write(tmp_path, "smiles,value,split\nCCO,1,valid\n", "b.csv"))


def test_load_qsar_errors(tmp_path):
    with pytest.raises(MalformedCsv):
        load_qsar(_write(tmp_path, "smi,val\nCCO,1\n"))
    with pytest.raises(MalformedCsv):
        load_qsar(_write(tmp_path, "smiles,value\nCCO,abc\n", "c.csv"))


def test_ld50_note(tmp_path):
    t = load_qsar(_write(tmp_path, "smiles,value\nCCO,1\n", "ld50.csv"))
    assert t.notes and "LD50" in t.notes[0]


def test_solubility_dataset_shipped():
    from pathlib import Path

    path = Path(__file__).resolve().parents[1] / "data" / "solubility.csv"
    t = load_qsar(path, "solubility")
    assert len(t) + len(t.dropped) + t.duplicates == 1282
    assert len(t) > 1150
    assert t.out_of_span == 0
    assert -12 < t.values.min() < -11 and 1.5 < t.values.max() < 1.7
