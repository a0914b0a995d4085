"""
Experiment harness: discrimination, recognition and timing runs with their reports
"""

from __future__ import annotations

import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from models import VARIANT, DataError, InvalidParameterError, parse_enum
from utils.system_utils import write_json

from .decoding_controller import DecodeConfig, check_model_set, classify, normalize_log_scores, score
from .synth_controller import GenPolicy, JitterPolicy, RhythmPolicy, generate, generate_rhythm_corpus, jitter_family
from .training_controller import TrainingConfig, fit_label_set, fit_model, with_segments

logger = logging.getLogger(__name__)

RATE_COLUMNS = ("erd", "diagonal_dominance", "precision", "recall", "f_measure")


# ----------------------------------------------------------------------
# Metric reducers
# ----------------------------------------------------------------------


def diagonal_dominance(matrix) -> float:
    """Share of rows whose diagonal entry is finite and strictly above every other entry."""
    scores = np.asarray(matrix, dtype=np.float64)
    if scores.ndim != 2 or scores.shape[0] != scores.shape[1] or scores.shape[0] == 0:
        raise InvalidParameterError(f"need a non-empty square score matrix, got shape {scores.shape}", field="matrix")
    hits = 0
    for i, row in enumerate(scores):
        own = row[i]
        others = np.delete(row, i)
        if np.isfinite(own) and (others.size == 0 or own > others.max()):
            hits += 1
    return hits / scores.shape[0]


def erd(matrix) -> float:
    """Error rate of discrimination: sequences whose own model is not the unique best scorer."""
    return 1.0 - diagonal_dominance(matrix)


def recognition_metrics(predictions, known_labels) -> dict:
    """
    Precision, recall and f-measure.

    Args:
        predictions: Iterable of (true label, predicted label or None)
        known_labels: Labels that have a model

    Returns:
        dict with tp, pp, ap, precision, recall, f_measure
    """
    known = set(known_labels)
    tp = pp = ap = 0
    for truth, predicted in predictions:
        if predicted is not None:
            pp += 1
            tp += int(predicted == truth)
        ap += int(truth in known)
    precision = tp / pp if pp else 0.0
    recall = tp / ap if ap else 0.0
    f_measure = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return {"tp": tp, "pp": pp, "ap": ap, "precision": precision, "recall": recall, "f_measure": f_measure}


def score_matrix(models: list, sequences, cfg: DecodeConfig, workers: int = 1) -> np.ndarray:
    """Log-likelihood of every sequence (rows) under every model (columns)."""

    def row(seq):
        return [score(model, seq, cfg).log_likelihood for model in models]

    if workers > 1 and len(sequences) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(row, sequences))
    else:
        rows = [row(seq) for seq in sequences]
    return np.array(rows, dtype=np.float64).reshape(len(sequences), len(models))


# ----------------------------------------------------------------------
# Report
# ----------------------------------------------------------------------


@dataclass
class EvalReport:
    """Rows (one per configuration) plus the score matrices behind them."""

    experiment: str
    rows: list = field(default_factory=list)
    matrices: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def add_row(self, **row):
        for column in RATE_COLUMNS:
            if column in row and not 0.0 <= row[column] <= 1.0:
                raise InvalidParameterError(f"rate {row[column]} outside [0, 1]", field=column)
        self.rows.append(row)
        return row

    def add_matrix(self, name, matrix, row_ids, col_labels):
        matrix = np.asarray(matrix, dtype=np.float64)
        normalized = np.array([normalize_log_scores(r) for r in matrix]) if matrix.size else matrix
        self.matrices[name] = {
            "rows": list(row_ids),
            "cols": list(col_labels),
            "log_likelihood": _jsonable(matrix),
            "normalized": _jsonable(normalized),
        }

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows)

    def column(self, name, **where) -> list:
        """Values of ``name`` over rows matching every ``where`` item."""
        return [row[name] for row in self.rows if all(row.get(k) == v for k, v in where.items())]

    def to_dict(self):
        return {"experiment": self.experiment, "config": self.config, "rows": self.rows, "matrices": self.matrices}

    def write(self, out_dir) -> tuple[Path, Path]:
        """Write ``<experiment>.csv`` and ``<experiment>.json`` into ``out_dir``."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        csv_path = out_dir / f"{self.experiment}.csv"
        json_path = out_dir / f"{self.experiment}.json"
        self.to_frame().to_csv(csv_path, index=False)
        write_json(json_path, self.to_dict())
        logger.info(f"Report written to {csv_path} and {json_path}")
        return csv_path, json_path


# ----------------------------------------------------------------------
# Controller
# ----------------------------------------------------------------------


class EvaluationController:
    """
    Runs the experiments with one training and one decoding configuration.

    Args:
        training_cfg: Options for every model fit
        decode_cfg: Options for every decode
        workers: Threads for score matrices and label-set fits
        seed: Seed for jitter families
    """

    def __init__(self, training_cfg=None, decode_cfg=None, workers=None, seed=0):
        self.training_cfg = training_cfg or TrainingConfig()
        self.decode_cfg = decode_cfg or DecodeConfig()
        self.workers = workers or os.cpu_count() or 1
        self.seed = seed

    def run_discrimination(self, corpus, k_values=(1, 2, 3, 4, 5, 6), variants=(VARIANT.DIHMM, VARIANT.HSMM), jitter=None):
        """
        One model per sequence trained on ``k`` jittered variants of it; every
        sequence is scored against every model.

        Args:
            corpus: List of (TickSequence, SegmentSequence), distinct sequences
            k_values: Training-set sizes per model
            variants: Model variants to compare
            jitter: JitterPolicy for the extra training variants

        Returns:
            EvalReport with erd and diagonal_dominance per (variant, k)
        """
        if len(corpus) < 2:
            raise DataError(f"discrimination needs at least 2 sequences, got {len(corpus)}", field="corpus")
        jitter = jitter or JitterPolicy()
        sequences = [seq for seq, _ in corpus]
        labels = [seq.label or seq.id for seq in sequences]
        report = EvalReport("discrimination", config=self._config(jitter=jitter.to_dict()))

        for variant in (parse_enum(VARIANT, v, field="variant") for v in variants):
            for k in k_values:
                models = [
                    fit_model(jitter_family(pair, k, jitter, self.seed), self.training_cfg, variant, label)
                    for pair, label in zip(corpus, labels)
                ]
                matrix = score_matrix(models, sequences, self.decode_cfg, self.workers)
                row = report.add_row(
                    variant=variant.value,
                    k=k,
                    n_sequences=len(sequences),
                    erd=erd(matrix),
                    diagonal_dominance=diagonal_dominance(matrix),
                )
                report.add_matrix(f"{variant.value}_k{k}", matrix, [s.id for s in sequences], labels)
                logger.info(f"Discrimination {variant.value} k={k}: ERD {row['erd']:.3f}")
        return report

    def run_recognition(self, train, test, variants=(VARIANT.DIHMM, VARIANT.HSMM), report=None, **tags):
        """
        Fit one model per label on ``train`` and classify every ``test`` item.

        Ties between the best models count as no prediction.
        """
        if not test:
            raise DataError("recognition needs a non-empty test set", field="test")
        report = report or EvalReport("recognition", config=self._config())
        train_pairs = with_segments(train)

        for variant in (parse_enum(VARIANT, v, field="variant") for v in variants):
            models = fit_label_set(train_pairs, self.training_cfg, variant, workers=self.workers)
            check_model_set(models)

            def predict(seq, models=models):
                return classify(models, seq, self.decode_cfg)

            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                outcomes = list(pool.map(predict, test))

            predictions = [(seq.label, outcome.label if outcome.unique else None) for seq, outcome in zip(test, outcomes)]
            metrics = recognition_metrics(predictions, models)
            row = report.add_row(variant=variant.value, **tags, n_models=len(models), n_test=len(test), **metrics)

            labels = list(outcomes[0].scores)
            matrix = [[outcome.scores[label].log_likelihood for label in labels] for outcome in outcomes]
            suffix = "".join(f"_{key}{value}" for key, value in tags.items())
            report.add_matrix(f"{variant.value}{suffix}", matrix, [s.id for s in test], labels)
            logger.info(f"Recognition {variant.value} {tags}: precision {row['precision']:.3f} recall {row['recall']:.3f} f {row['f_measure']:.3f}")
        return report

    def run_timing(self, corpus, k_values, variants=(VARIANT.HSMM, VARIANT.DIHMM), repeats=5):
        """
        Median wall-clock of training on the first ``k`` sequences and of
        recognizing the whole corpus with those models.
        """
        if list(k_values) != sorted(k_values):
            raise InvalidParameterError("the k grid must be non-decreasing", field="k_train")
        if repeats < 1:
            raise InvalidParameterError(f"must be >= 1, got {repeats}", field="repeats")
        variants = [parse_enum(VARIANT, v, field="variant") for v in variants]
        sequences = [seq for seq, _ in corpus]
        report = EvalReport("timing", config=self._config(repeats=repeats))

        # compile the kernel outside the measured region
        for variant in variants:
            warm = fit_model(corpus[:1], self.training_cfg, variant)
            score(warm, sequences[0], self.decode_cfg)

        totals = {}
        for k in k_values:
            for variant in variants:
                train_times, recognize_times = [], []
                for _ in range(repeats):
                    started = time.perf_counter()
                    models = fit_label_set(corpus[:k], self.training_cfg, variant) if k else {}
                    trained = time.perf_counter()
                    if models:
                        for seq in sequences:
                            classify(models, seq, self.decode_cfg)
                    finished = time.perf_counter()
                    train_times.append(trained - started)
                    recognize_times.append(finished - trained)
                train_time, recognize_time = float(np.median(train_times)), float(np.median(recognize_times))
                totals[(variant, k)] = train_time + recognize_time
                report.add_row(variant=variant.value, k=k, train_time=train_time, recognize_time=recognize_time, total_time=train_time + recognize_time)
                logger.info(f"Timing {variant.value} k={k}: train {train_time:.4f}s recognize {recognize_time:.4f}s")

        if VARIANT.HSMM in variants:
            for row in report.rows:
                base = totals[(VARIANT.HSMM, row["k"])]
                row["ratio_to_hsmm"] = row["total_time"] / base if base > 0 else math.nan
        return report

    # ------------------------------------------------------------------
    # Presets
    # ------------------------------------------------------------------

    def run_preset(self, preset: dict) -> EvalReport:
        """Run an experiment described by a preset document (see ``presets/``)."""
        experiment = preset.get("experiment")
        runner = EvaluationController(
            TrainingConfig.from_dict({**self.training_cfg.to_dict(), **preset.get("training", {})}),
            DecodeConfig.from_dict({**self.decode_cfg.to_dict(), **preset.get("decoding", {})}),
            workers=self.workers,
            seed=preset.get("seed", self.seed),
        )
        variants = preset.get("variants", ["dihmm", "hsmm"])
        logger.info(f"Running preset {experiment!r}")

        if experiment == "discrimination":
            corpus = generate(GenPolicy.from_dict(preset.get("policy", {})))
            report = runner.run_discrimination(corpus, preset.get("k_train", [1, 2, 3, 4, 5, 6]), variants, JitterPolicy.from_dict(preset.get("jitter", {})))
        elif experiment == "recognition":
            rhythm = RhythmPolicy.from_dict(preset.get("rhythm", {}))
            report = EvalReport("recognition", config=runner._config())
            for bars in preset.get("bars_per_sequence", [1]):
                train, test = generate_rhythm_corpus(rhythm, bars)
                runner.run_recognition(train, test, variants, report=report, bars_per_sequence=bars)
        elif experiment == "timing":
            corpus = generate(GenPolicy.from_dict(preset.get("policy", {})))
            report = runner.run_timing(corpus, preset.get("k_train", [5, 10, 15, 20, 25, 30, 35]), variants, preset.get("repeats", 5))
        else:
            raise DataError(f"unknown experiment {experiment!r}", field="experiment")

        report.config["preset"] = preset
        return report

    def _config(self, **extra):
        return {"training": self.training_cfg.to_dict(), "decoding": self.decode_cfg.to_dict(), "seed": self.seed, **extra}


def _jsonable(matrix):
    return [[None if not math.isfinite(v) else float(v) for v in row] for row in np.asarray(matrix).tolist()]
