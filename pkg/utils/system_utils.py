"""Helpers for reading and writing corpus, model, preset and defaults files."""

from __future__ import annotations

import json
import logging
import re
import sys
from pathlib import Path

from constants import DEFAULT_GAP_SYMBOL, MODEL_FILE_SUFFIX, SYSTEM_DEFAULTS_FILE_NAME
from models import Alphabet, DataError, DihmmModel, TickSequence, segments_from_ticks

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"
PACKAGE_ROOT = Path(__file__).resolve().parent.parent


def setup_logging(level="WARNING"):
    logging.basicConfig(level=getattr(logging, str(level).upper(), logging.WARNING), format=LOG_FORMAT, stream=sys.stderr, force=True)


def load_system_defaults(path=None) -> dict:
    """Return the shipped defaults document (``system_defaults.json`` next to the package)."""
    path = Path(path) if path else PACKAGE_ROOT / SYSTEM_DEFAULTS_FILE_NAME
    with open(path, "r", encoding="utf-8") as fp:
        defaults = json.load(fp)
    logger.debug(f"System defaults loaded from {path}")
    return defaults


def load_preset(path) -> dict:
    """Read an experiment preset; a bare name resolves inside ``presets/``."""
    path = Path(path)
    if not path.exists() and not path.is_absolute():
        bundled = PACKAGE_ROOT / "presets" / path.name
        if bundled.exists():
            path = bundled
    with open(path, "r", encoding="utf-8") as fp:
        preset = json.load(fp)
    if not isinstance(preset, dict) or "experiment" not in preset:
        raise DataError("preset must be a JSON object with an 'experiment' key", field=str(path))
    return preset


def write_json(path, data):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fp:
        json.dump(data, fp, indent=2)
        fp.write("\n")


# ---------------------------------------------------------------------
# Corpus files (JSON Lines)
# ---------------------------------------------------------------------


def sequence_to_record(seq: TickSequence, form="ticks") -> dict:
    """One corpus line in the ``ticks`` or the ``events`` form."""
    record = {"id": seq.id, "label": seq.label}
    if form == "events":
        record.update(T=seq.length, gap=seq.alphabet.gap, alphabet=list(seq.alphabet.names))
        record["events"] = [
            {"sym": seq.alphabet.names[seq.ticks[s.start]], "start": s.start, "dur": s.duration} for s in segments_from_ticks(seq).segments
        ]
    elif form == "ticks":
        record.update(gap=seq.alphabet.gap, alphabet=list(seq.alphabet.names), ticks=list(seq.names()))
    else:
        raise DataError(f"unknown corpus form {form!r}", field="form")
    return record


def record_to_sequence(record: dict, alphabet: Alphabet, where="") -> TickSequence:
    seq_id = str(record.get("id", where))
    label = record.get("label")
    if "ticks" in record:
        return TickSequence.from_names(record["ticks"], alphabet, seq_id, label)
    if "events" not in record or "T" not in record:
        raise DataError("corpus line needs 'ticks' or 'T' + 'events'", field=where)

    ticks = [alphabet.gap_id] * int(record["T"])
    for n, event in enumerate(record["events"]):
        start, dur = int(event["start"]), int(event["dur"])
        if dur < 1 or start < 0 or start + dur > len(ticks):
            raise DataError(f"event {n} [{start}, {start + dur}) outside T={len(ticks)}", field=where)
        if any(t != alphabet.gap_id for t in ticks[start : start + dur]):
            raise DataError(f"event {n} overlaps an earlier event", field=where)
        ticks[start : start + dur] = [alphabet.index(event["sym"])] * dur
    return TickSequence(tuple(ticks), alphabet, seq_id, label)


def infer_alphabet(records, gap=DEFAULT_GAP_SYMBOL) -> Alphabet:
    """An explicit ``alphabet`` key wins; otherwise symbols in first-appearance order, gap last."""
    for record in records:
        if "alphabet" in record:
            return Alphabet.from_names(record["alphabet"], record.get("gap", gap))
    gap = next((r["gap"] for r in records if "gap" in r), gap)
    names = []
    for record in records:
        symbols = record.get("ticks") or [event["sym"] for event in record.get("events", [])]
        for name in symbols:
            if name != gap and name not in names:
                names.append(name)
    return Alphabet.from_names(names, gap)


def read_corpus(path, alphabet: Alphabet | None = None, gap=DEFAULT_GAP_SYMBOL) -> list[TickSequence]:
    """
    Read a JSON Lines corpus.

    Args:
        path: Corpus file
        alphabet: Alphabet to encode with (inferred from the file when None)
        gap: Gap symbol used when the file names none

    Returns:
        List of TickSequence sharing one alphabet
    """
    path = Path(path)
    records = []
    with open(path, "r", encoding="utf-8") as fp:
        for lineno, line in enumerate(fp, start=1):
            if not line.strip():
                continue
            try:
                records.append((lineno, json.loads(line)))
            except json.JSONDecodeError as err:
                raise DataError(f"line {lineno} is not valid JSON ({err.msg})", field=str(path)) from err

    alphabet = alphabet or infer_alphabet([r for _, r in records], gap)
    sequences = [record_to_sequence(record, alphabet, f"{path}:{lineno}") for lineno, record in records]
    logger.info(f"Read {len(sequences)} sequences from {path}")
    return sequences


def write_corpus(path, sequences, form="ticks"):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fp:
        for seq in sequences:
            fp.write(json.dumps(sequence_to_record(seq, form)) + "\n")
    logger.info(f"Wrote {len(sequences)} sequences to {path}")


# ---------------------------------------------------------------------
# Model directories
# ---------------------------------------------------------------------


def model_file_name(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", label or "model") + MODEL_FILE_SUFFIX


def save_models(models: dict, directory) -> list[Path]:
    directory = Path(directory)
    owners = {}
    for model in models.values():
        name = model_file_name(model.label)
        if name in owners:
            raise DataError(f"labels {owners[name]!r} and {model.label!r} both map to {name}", field="label")
        owners[name] = model.label
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for model in models.values():
        path = directory / model_file_name(model.label)
        model.save(path)
        paths.append(path)
    logger.info(f"Saved {len(paths)} models to {directory}")
    return paths


def load_models(source) -> dict:
    """Load one model file, or every model file of a directory, keyed by label."""
    source = Path(source)
    paths = sorted(source.glob(f"*{MODEL_FILE_SUFFIX}")) if source.is_dir() else [source]
    if not paths:
        raise DataError("no model files found", field=str(source))
    models = {}
    for path in paths:
        model = DihmmModel.load(path)
        models[model.label or path.stem] = model
    return models
