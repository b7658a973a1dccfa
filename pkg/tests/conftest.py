"""Shared fixtures: the desk corpus and trained models cached across sessions.

Trained checkpoints are keyed by a hash of the training settings, the package
sources and the corpus file, so any code change retrains from scratch.
"""

import hashlib
import json
import random
import time
from pathlib import Path

import pytest

from heterochem import encdec
from heterochem.chem import read_smiles_file
from heterochem.datasets import Charset, Corpus, load_qsar, split
from heterochem.nn import TrainSchedule

ROOT = Path(__file__).resolve().parents[1]
GENERATED = ROOT / "data" / "generated_6.smi"
SOLUBILITY = ROOT / "data" / "solubility.csv"
DESK_SIZE = 5000


def _source_hash() -> str:
    h = hashlib.sha256()
    for p in sorted((ROOT / "src" / "heterochem").rglob("*.py")):
        h.update(p.read_bytes())
    return h.hexdigest()


def _file_hash(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def read_generated() -> list[str]:
    return read_smiles_file(GENERATED)


@pytest.fixture(scope="session")
def desk_split():
    """About 5,000 molecules of at most 6 heavy atoms, split 90/10."""
    rng = random.Random(0)
    corpus = Corpus.from_smiles(rng.sample(read_generated(), DESK_SIZE), "generated_6")
    train, test = split(corpus, 0.9, 0)
    return corpus, train, test


class ModelCache:
    def __init__(self, root: Path):
        self.root = root
        self.src = _source_hash()

    def get(self, tag: str, settings: dict, build):
        """Return ``(model, info)``; ``build()`` must return ``(model, log)``."""
        key = hashlib.sha256(json.dumps([tag, settings, self.src], sort_keys=True).encode()).hexdigest()[:20]
        ckpt = self.root / f"{tag}-{key}.ckpt"
        meta = self.root / f"{tag}-{key}.json"
        if ckpt.exists() and meta.exists():
            info = json.loads(meta.read_text())
            info["cached"] = True
            return encdec.load(ckpt), info
        t0 = time.perf_counter()
        model, log = build()
        info = {"train_seconds": time.perf_counter() - t0, "epochs_run": len(log.rows), "cached": False}
        encdec.save(model, ckpt)
        log.to_csv(self.root / f"{tag}-{key}.log.csv")
        meta.write_text(json.dumps(info))
        return model, info


@pytest.fixture(scope="session")
def model_cache(request):
    return ModelCache(Path(request.config.cache.mkdir("heterochem-models")))


def desk_settings(mode: str) -> dict:
    return {"mode": mode, "preset": "gdb-small", "seed": 0, "corpus": _file_hash(GENERATED), "size": DESK_SIZE,
            **encdec.PRESET_TRAINING["gdb-small"]}


@pytest.fixture(scope="session")
def desk_models(desk_split, model_cache):
    """Lazy accessor: ``desk_models(mode) -> (model, info)``."""
    corpus, train, test = desk_split
    charset = Charset.from_smiles(corpus.smiles).tokens
    done = {}

    def get(mode: str):
        if mode not in done:
            s = desk_settings(mode)

            def build():
                model = encdec.build_model(encdec.preset_config("gdb-small", charset, seed=s["seed"]))
                sched = TrainSchedule(initial_lr=s["lr"], min_lr=s["min_lr"])
                log = encdec.train(model, train, test, mode, sched, batch_size=s["batch_size"],
                                   epochs=s["epochs"], seed=s["seed"])
                return model, log

            done[mode] = model_cache.get(f"desk-{mode}", s, build)
        return done[mode]

    return get


@pytest.fixture(scope="session")
def solubility_table():
    return load_qsar(SOLUBILITY, "solubility")


SOLUBILITY_ENCODER = {"mode": "enum2enum", "preset": "gdb-small", "seed": 0, "max_len": 128,
                      "lr": 0.005, "min_lr": 2.5e-4, "batch_size": 64, "epochs": 150}


@pytest.fixture(scope="session")
def solubility_encoder(solubility_table, model_cache):
    """enum2enum encoder trained on the training-split SMILES only (no labels)."""
    s = dict(SOLUBILITY_ENCODER, data=_file_hash(SOLUBILITY))
    table = solubility_table

    def build():
        charset = Charset.from_smiles([r.smiles for r in table.records]).tokens
        train = Corpus.from_smiles([r.smiles for r in table.part("train")], "solubility-train")
        model = encdec.build_model(encdec.preset_config(s["preset"], charset, max_len=s["max_len"], seed=s["seed"]))
        sched = TrainSchedule(initial_lr=s["lr"], min_lr=s["min_lr"])
        log = encdec.train(model, train, None, s["mode"], sched, batch_size=s["batch_size"], epochs=s["epochs"],
                           seed=s["seed"])
        return model, log

    return model_cache.get("solubility-enum2enum", s, build)


# ---------------------------------------------------------------- acceptance report

ACCEPTANCE: dict[int, str] = {}


def record(criterion: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[criterion] = f"criterion {criterion:2d}: {'PASS' if passed else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
