"""Command-line entry point: prep, train, encode, decode, sample, challenge,
evaluate and qsar.

Usage errors exit with status 2, data errors with status 1; both print one
machine-readable line ``error: {json}`` on stderr. Every run writes
``manifest_<command>.json`` (config hash, seed, versions) into ``--out-dir``.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import hashlib
import json
import logging
import os
import platform
import random
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__, analysis, encdec, qsar
from .chem import ChemError, generate_molecules, parse_smiles, write_canonical
from .datasets import Charset, Corpus, DataMode, MalformedCsv, SequenceTooLong, TokenNotInCharset, load_qsar, split
from .molsim import DegenerateVariance
from .nn.checkpoint import CorruptCheckpoint, VersionMismatch
from .nn.optim import TrainSchedule

log = logging.getLogger("heterochem")

DATA_ERRORS = (
    FileNotFoundError,
    IsADirectoryError,
    ChemError,
    MalformedCsv,
    CorruptCheckpoint,
    VersionMismatch,
    TokenNotInCharset,
    SequenceTooLong,
    encdec.InvalidConfig,
    DegenerateVariance,
)


class UsageError(Exception):
    pass


class DataError(Exception):
    def __init__(self, message: str, path: Optional[str] = None):
        super().__init__(message)
        self.path = path


def _error_line(kind: str, message: str, **extra) -> None:
    payload = {"error": kind, "message": message, **{k: v for k, v in extra.items() if v is not None}}
    print("error: " + json.dumps(payload, sort_keys=True), file=sys.stderr)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        _error_line("usage", message)
        raise SystemExit(2)


# ---------------------------------------------------------------- run context


def _config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


class Run:
    def __init__(self, command: str, args: argparse.Namespace, config: dict):
        self.command = command
        self.seed = args.seed
        self.out_dir = Path(args.out_dir)
        self.config = {"command": command, "seed": args.seed, **config}
        self.hash = _config_hash(self.config)

    @property
    def meta(self) -> dict:
        return {"seed": self.seed, "config_hash": self.hash, "command": self.command}

    def path(self, name: str) -> Path:
        return self.out_dir / name

    def write_manifest(self, outputs: Sequence[str]) -> None:
        manifest = {
            **self.meta,
            "config": self.config,
            "outputs": sorted(outputs),
            "versions": {
                "heterochem": __version__,
                "numpy": np.__version__,
                "python": platform.python_version(),
            },
        }
        with open(self.path(f"manifest_{self.command}.json"), "w") as fh:
            json.dump(manifest, fh, indent=1, sort_keys=True, default=str)


def _need_file(path) -> Path:
    p = Path(path)
    if not p.is_file():
        raise DataError(f"input file not found: {p}", str(p))
    return p


def _load_config(path) -> dict:
    if path is None:
        return {}
    p = _need_file(path)
    try:
        cfg = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{p}: invalid JSON config ({exc})", str(p)) from exc
    if not isinstance(cfg, dict):
        raise DataError(f"{p}: config must be a JSON object", str(p))
    return cfg


def _comment(meta: dict) -> str:
    return "# " + json.dumps(meta, sort_keys=True) + "\n"


def _read_table(path) -> list[list[str]]:
    """CSV rows without comment lines."""
    with open(_need_file(path), newline="") as fh:
        return [row for row in csv.reader(line for line in fh if not line.startswith("#")) if row]


def _read_smiles_ids(path) -> tuple[list[str], list[str]]:
    """SMILES file (first field SMILES, optional second field id) or CSV
    with ``id,smiles`` header."""
    p = _need_file(path)
    if p.suffix == ".csv":
        rows = _read_table(p)
        head = [h.strip().lower() for h in rows[0]]
        if "smiles" not in head:
            raise DataError(f"{p}: CSV needs a 'smiles' column", str(p))
        si = head.index("smiles")
        ii = head.index("id") if "id" in head else None
        body = rows[1:]
        return [r[si] for r in body], [r[ii] if ii is not None else str(k) for k, r in enumerate(body)]
    smiles, ids = [], []
    with open(p) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            smiles.append(parts[0])
            ids.append(parts[1] if len(parts) > 1 else str(len(ids)))
    return smiles, ids


def _write_smiles(path, corpus: Corpus, meta: dict) -> None:
    with open(path, "w") as fh:
        fh.write(_comment(meta))
        for r in corpus:
            fh.write(f"{r.smiles} {r.id}\n")


def _load_corpus(path) -> Corpus:
    smiles, ids = _read_smiles_ids(path)
    corpus = Corpus.from_smiles(smiles, provenance=str(path), ids=ids)
    if len(corpus) == 0:
        raise DataError(f"{path}: no parseable SMILES", str(path))
    return corpus


# ---------------------------------------------------------------- subcommands


def cmd_prep(args) -> None:
    if (args.input is None) == (args.generate is None):
        raise UsageError("prep needs exactly one of --input or --generate")
    run = Run("prep", args, {"input": args.input, "generate": args.generate, "elements": args.elements,
                             "sample": args.sample, "ratio": args.ratio})
    if args.input is not None:
        corpus = _load_corpus(args.input)
    else:
        smiles = generate_molecules(args.generate, tuple(args.elements.split(",")))
        corpus = Corpus.from_smiles(smiles, provenance=f"generated<= {args.generate}")
    if args.sample is not None and args.sample < len(corpus):
        idx = sorted(random.Random(args.seed).sample(range(len(corpus)), args.sample))
        corpus = corpus.subset(idx)
    train, test = split(corpus, args.ratio, args.seed)
    _write_smiles(run.path("corpus.smi"), corpus, run.meta)
    _write_smiles(run.path("train.smi"), train, run.meta)
    _write_smiles(run.path("test.smi"), test, run.meta)
    if corpus.rejected:
        with open(run.path("rejected.tsv"), "w") as fh:
            for s, why in corpus.rejected:
                fh.write(f"{s}\t{why}\n")
    print(json.dumps({"corpus": len(corpus), "train": len(train), "test": len(test), "rejected": len(corpus.rejected)}))
    run.write_manifest(["corpus.smi", "train.smi", "test.smi"])


def _train_settings(args) -> dict:
    cfg = _load_config(args.config)
    preset = args.preset or cfg.get("preset", "gdb-small")
    if preset not in encdec.PRESETS:
        raise UsageError(f"unknown preset {preset!r}")
    defaults = encdec.PRESET_TRAINING[preset]
    sched = {"lr": defaults["lr"], "min_lr": defaults["min_lr"], **cfg.get("schedule", {})}
    return {
        "preset": preset,
        "mode": args.mode or cfg.get("mode", "can2can"),
        "architecture": cfg.get("architecture", {}),
        "schedule": sched,
        "batch_size": args.batch_size or cfg.get("batch_size", defaults["batch_size"]),
        "epochs": args.epochs or cfg.get("epochs", defaults["epochs"]),
        "seed": args.seed,
    }


def cmd_train(args) -> None:
    settings = _train_settings(args)
    train_corpus = _load_corpus(args.train)
    test_corpus = _load_corpus(args.test) if args.test else None
    run = Run("train", args, {"train": args.train, "test": args.test, **settings})
    all_smiles = train_corpus.smiles + (test_corpus.smiles if test_corpus else [])
    charset = Charset.from_smiles(all_smiles)
    arch = dict(settings["architecture"])
    arch.setdefault("seed", args.seed)
    model = encdec.build_model(encdec.preset_config(settings["preset"], charset.tokens, **arch))
    s = settings["schedule"]
    sched = TrainSchedule(
        initial_lr=s["lr"],
        plateau_patience=s.get("plateau_patience", 5),
        lr_factor=s.get("lr_factor", 0.5),
        early_stop_patience=s.get("early_stop_patience"),
        min_lr=s.get("min_lr", 0.0),
    )
    tlog = encdec.train(
        model, train_corpus, test_corpus, settings["mode"], sched,
        batch_size=settings["batch_size"], epochs=settings["epochs"], seed=args.seed,
    )
    encdec.save(model, run.path("model.ckpt"), run.meta)
    log_path = run.path("train_log.csv")
    tlog.to_csv(log_path)
    with open(log_path) as fh:
        body = fh.read()
    with open(log_path, "w") as fh:
        fh.write(_comment(run.meta) + body)
    print(json.dumps({"epochs": len(tlog.rows), "final_train_loss": tlog.final_train_loss,
                      "best_test_loss": tlog.best_test_loss if test_corpus else None, "params": model.n_params}))
    run.write_manifest(["model.ckpt", "train_log.csv"])


def _load_model(path) -> encdec.SeqModel:
    return encdec.load(_need_file(path))


def write_latent_csv(path, ids: Sequence[str], Z: np.ndarray, meta: Optional[dict] = None) -> None:
    with open(path, "w", newline="") as fh:
        if meta:
            fh.write(_comment(meta))
        w = csv.writer(fh)
        w.writerow(["id"] + [f"z{i}" for i in range(Z.shape[1])])
        for rid, z in zip(ids, Z):
            w.writerow([rid] + [repr(float(v)) for v in z])


def read_latent_csv(path) -> tuple[list[str], np.ndarray]:
    rows = _read_table(path)
    if not rows or rows[0][0] != "id" or any(h != f"z{i}" for i, h in enumerate(rows[0][1:])):
        raise DataError(f"{path}: expected header id,z0..z<d-1>", str(path))
    try:
        Z = np.array([[float(v) for v in r[1:]] for r in rows[1:]], dtype=np.float64)
    except ValueError as exc:
        raise DataError(f"{path}: non-numeric latent value ({exc})", str(path)) from exc
    return [r[0] for r in rows[1:]], Z.reshape(len(rows) - 1, len(rows[0]) - 1)


def cmd_encode(args) -> None:
    model = _load_model(args.model)
    smiles, ids = _read_smiles_ids(args.input)
    run = Run("encode", args, {"model": args.model, "input": args.input})
    if not args.as_is:
        canon = []
        for k, s in enumerate(smiles):
            try:
                canon.append(write_canonical(parse_smiles(s)))
            except ChemError as exc:
                raise DataError(f"{args.input}: entry {k} ({s}) rejected: {exc}", args.input) from exc
        smiles = canon
    Z = encdec.encode(model, smiles)
    write_latent_csv(run.path("latent.csv"), ids, Z, run.meta)
    run.write_manifest(["latent.csv"])


def cmd_decode(args) -> None:
    model = _load_model(args.model)
    ids, Z = read_latent_csv(args.input)
    if Z.shape[1] != model.config.bottleneck_dim:
        raise DataError(
            f"{args.input}: latent dimension {Z.shape[1]} != model bottleneck {model.config.bottleneck_dim}", args.input
        )
    run = Run("decode", args, {"model": args.model, "input": args.input})
    out = encdec.decode_greedy_batch(model, Z.astype(model.dtype))
    with open(run.path("decoded.csv"), "w", newline="") as fh:
        fh.write(_comment(run.meta))
        w = csv.writer(fh)
        w.writerow(["id", "smiles", "truncated"])
        for rid, d in zip(ids, out):
            w.writerow([rid, d.smiles, int(d.truncated)])
    run.write_manifest(["decoded.csv"])


def cmd_sample(args) -> None:
    model = _load_model(args.model)
    ref = parse_smiles(args.smiles)
    run = Run("sample", args, {"model": args.model, "smiles": args.smiles, "n": args.n,
                               "temperature": args.temperature, "heatmaps": args.heatmaps})
    z = encdec.encode(model, write_canonical(ref))
    stats, decoded = analysis.sampling_stats(
        model, z, ref, n=args.n, t=args.temperature, rng=np.random.default_rng(args.seed), keep_probs=True
    )
    stats.to_json(run.path("sampling_stats.json"), run.meta)
    outputs = ["sampling_stats.json", "samples.csv"]
    # csv rather than .smi: an empty decode must still occupy a row
    with open(run.path("samples.csv"), "w", newline="") as fh:
        fh.write(_comment(run.meta))
        w = csv.writer(fh)
        w.writerow(["index", "smiles", "truncated"])
        for i, d in enumerate(decoded):
            w.writerow([i, d.smiles, int(d.truncated)])
    for i, d in enumerate(decoded[: args.heatmaps]):
        name = f"heatmap_{i}.csv"
        analysis.write_heatmap_csv(d, model.charset.tokens, run.path(name))
        outputs.append(name)
    print(json.dumps(stats.__dict__))
    run.write_manifest(outputs)


def cmd_challenge(args) -> None:
    model = _load_model(args.model)
    smiles, _ = _read_smiles_ids(args.input)
    mols = [parse_smiles(s) for s in smiles]
    background = _load_corpus(args.background).smiles if args.background else None
    run = Run("challenge", args, {"model": args.model, "input": args.input, "n_enum": args.n_enum,
                                  "background": args.background})
    res = analysis.enumeration_challenge(model, mols, args.n_enum, seed=args.seed, background=background)
    analysis.write_challenge_csv(res, run.path("challenge.csv"), run.meta)
    summary = {"intra": res.intra, "mean_intra": res.mean_intra, "mean_inter": res.mean_inter,
               "inter_intra_ratio": res.inter_intra_ratio}
    with open(run.path("challenge_summary.json"), "w") as fh:
        json.dump({"meta": run.meta, **summary}, fh, indent=1, sort_keys=True)
    print(json.dumps(summary))
    run.write_manifest(["challenge.csv", "challenge_summary.json"])


def cmd_evaluate(args) -> None:
    model = _load_model(args.model)
    corpus = _load_corpus(args.input)
    if len(corpus) < 4:
        # each correlation needs at least 3 molecules besides the reference
        raise DataError(f"evaluate needs at least 4 molecules, got {len(corpus)}", args.input)
    run = Run("evaluate", args, {"model": args.model, "input": args.input, "k": args.k, "decode": args.decode})
    tax = analysis.error_taxonomy(model, corpus, decode=args.decode, seed=args.seed)
    tax.to_json(run.path("taxonomy.json"), run.meta)
    corr = analysis.similarity_correlations(model, corpus, k=args.k)
    analysis.write_correlations_csv(corr, run.path("correlations.csv"), run.meta)
    summary = {
        "taxonomy": tax.counts,
        "mean_r2_fingerprint": corr.mean_r2_fingerprint,
        "mean_r2_sequence": corr.mean_r2_sequence,
        "references": corr.reference_ids,
    }
    with open(run.path("evaluate_summary.json"), "w") as fh:
        json.dump({"meta": run.meta, **summary}, fh, indent=1, sort_keys=True)
    print(json.dumps({k: summary[k] for k in ("mean_r2_fingerprint", "mean_r2_sequence")}))
    run.write_manifest(["taxonomy.json", "correlations.csv", "evaluate_summary.json"])


def cmd_qsar(args) -> None:
    table = load_qsar(_need_file(args.data), args.name, seed=args.seed)
    model = _load_model(args.model) if args.model else None
    run = Run("qsar", args, {"data": args.data, "model": args.model, "n_trials": args.n_trials,
                             "epochs": args.qsar_epochs})
    report = qsar.run_qsar(table, model, n_trials=args.n_trials, seed=args.seed, epochs=args.qsar_epochs)
    qsar.write_report(report, run.path("qsar_report.json"), run.path("qsar_predictions.csv"), run.meta)
    print(json.dumps({k: v["r2"] for k, v in report["results"].items()}))
    run.write_manifest(["qsar_report.json", "qsar_predictions.csv"])


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out-dir", default=".")
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = _Parser(prog="heterochem", description="SMILES auto-/heteroencoder toolkit")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("prep", parents=[common], help="canonicalize, subsample and split a corpus")
    s.add_argument("--input", help="SMILES file")
    s.add_argument("--generate", type=int, metavar="N", help="generate all molecules with <= N heavy atoms")
    s.add_argument("--elements", default="C,N,O,F")
    s.add_argument("--sample", type=int)
    s.add_argument("--ratio", type=float, default=0.9)
    s.set_defaults(func=cmd_prep)

    s = sub.add_parser("train", parents=[common], help="train a model")
    s.add_argument("--train", required=True)
    s.add_argument("--test")
    s.add_argument("--config")
    s.add_argument("--mode", choices=[m.value for m in DataMode])
    s.add_argument("--preset", choices=sorted(encdec.PRESETS))
    s.add_argument("--epochs", type=int)
    s.add_argument("--batch-size", type=int)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("encode", parents=[common], help="SMILES file -> latent CSV")
    s.add_argument("--model", required=True)
    s.add_argument("--input", required=True)
    s.add_argument("--as-is", action="store_true", help="encode the SMILES as written, not canonicalized")
    s.set_defaults(func=cmd_encode)

    s = sub.add_parser("decode", parents=[common], help="latent CSV -> SMILES (greedy)")
    s.add_argument("--model", required=True)
    s.add_argument("--input", required=True)
    s.set_defaults(func=cmd_decode)

    s = sub.add_parser("sample", parents=[common], help="multinomial samples around one molecule")
    s.add_argument("--model", required=True)
    s.add_argument("--smiles", required=True)
    s.add_argument("-n", "--n", type=int, default=1000)
    s.add_argument("--temperature", type=float, default=1.0)
    s.add_argument("--heatmaps", type=int, default=3)
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("challenge", parents=[common], help="enumeration challenge")
    s.add_argument("--model", required=True)
    s.add_argument("--input", required=True, help="molecules to enumerate")
    s.add_argument("--n-enum", type=int, default=10)
    s.add_argument("--background", help="SMILES file used to fit the PCA")
    s.set_defaults(func=cmd_challenge)

    s = sub.add_parser("evaluate", parents=[common], help="error taxonomy and similarity correlations")
    s.add_argument("--model", required=True)
    s.add_argument("--input", required=True)
    s.add_argument("--k", type=int, default=25)
    s.add_argument("--decode", choices=["greedy", "multinomial"], default="greedy")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("qsar", parents=[common], help="QSAR regression on ECFP4 and latent features")
    s.add_argument("--data", required=True)
    s.add_argument("--name")
    s.add_argument("--model")
    s.add_argument("--n-trials", type=int, default=30)
    s.add_argument("--qsar-epochs", type=int, default=100)
    s.set_defaults(func=cmd_qsar)
    return p


def _thread_limit():
    n = os.environ.get("HETEROCHEM_THREADS")
    if not n:
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=int(n))


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        out_dir = Path(args.out_dir)
        if out_dir.exists() and not out_dir.is_dir():
            raise DataError(f"--out-dir {out_dir} is not a directory", str(out_dir))
        out_dir.mkdir(parents=True, exist_ok=True)
        with _thread_limit():
            args.func(args)
    except UsageError as exc:
        _error_line("usage", str(exc))
        return 2
    except DataError as exc:
        _error_line("data", str(exc), path=exc.path)
        return 1
    except DATA_ERRORS as exc:
        path = getattr(exc, "filename", None)
        _error_line("data", f"{type(exc).__name__}: {exc}", path=str(path) if path else None)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
