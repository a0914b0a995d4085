import json
import math

import numpy as np
import pandas as pd
import pytest

from controllers.decoding_controller import DecodeConfig
from controllers.eval_controller import EvalReport, EvaluationController, diagonal_dominance, erd, recognition_metrics, score_matrix
from controllers.synth_controller import GenPolicy, generate
from controllers.training_controller import TrainingConfig, fit_model, with_segments
from models import VARIANT, DataError, InvalidParameterError

NEG = -math.inf


@pytest.fixture
def controller():
    return EvaluationController(TrainingConfig(d_cap=8), DecodeConfig(), workers=2, seed=1)


# ---------------------------------------------------------------------
# Metric reducers
# ---------------------------------------------------------------------


def test_dominant_diagonal():
    matrix = [[0.0, -1.0], [-2.0, -1.0]]
    assert diagonal_dominance(matrix) == 1.0
    assert erd(matrix) == 0.0


def test_ties_and_impossible_rows_count_as_errors():
    matrix = [[0.0, 0.0, -1.0], [-1.0, -0.5, -3.0], [NEG, NEG, NEG]]
    assert diagonal_dominance(matrix) == pytest.approx(1 / 3)
    assert erd(matrix) == pytest.approx(2 / 3)


def test_erd_is_complement_of_dominance():
    rng = np.random.default_rng(0)
    for _ in range(20):
        matrix = rng.integers(-3, 1, size=(5, 5)).astype(float)
        assert erd(matrix) == 1.0 - diagonal_dominance(matrix)


def test_non_square_matrix():
    with pytest.raises(InvalidParameterError):
        diagonal_dominance([[0.0, 1.0]])


def test_recognition_metrics_on_a_confusion_fixture():
    predictions = [("a", "a"), ("b", "a"), ("c", None), ("d", "d"), ("b", "b")]
    metrics = recognition_metrics(predictions, ["a", "b", "c"])
    assert (metrics["tp"], metrics["pp"], metrics["ap"]) == (3, 4, 4)
    assert metrics["precision"] == 0.75
    assert metrics["recall"] == 0.75
    assert metrics["f_measure"] == pytest.approx(0.75)


def test_no_predictions_gives_zero_f_measure():
    metrics = recognition_metrics([("a", None), ("b", None)], ["a", "b"])
    assert metrics["precision"] == metrics["recall"] == metrics["f_measure"] == 0.0


# ---------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------


def test_rates_outside_unit_interval_are_rejected():
    report = EvalReport("x")
    with pytest.raises(InvalidParameterError):
        report.add_row(variant="dihmm", erd=1.5)


def test_report_files(tmp_path):
    report = EvalReport("demo", config={"seed": 3})
    report.add_row(variant="dihmm", k=1, erd=0.25)
    report.add_row(variant="hsmm", k=1, erd=0.5)
    report.add_matrix("dihmm_k1", [[0.0, NEG], [NEG, -1.0]], ["s0", "s1"], ["s0", "s1"])
    csv_path, json_path = report.write(tmp_path / "out")

    frame = pd.read_csv(csv_path)
    assert list(frame["erd"]) == [0.25, 0.5]
    document = json.loads(json_path.read_text())
    assert document["experiment"] == "demo"
    assert document["matrices"]["dihmm_k1"]["log_likelihood"] == [[0.0, None], [None, -1.0]]
    assert document["matrices"]["dihmm_k1"]["normalized"][0] == [1.0, 0.0]
    assert report.column("erd", variant="hsmm") == [0.5]


# ---------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------


def test_score_matrix_threads_match_sequential(ticks):
    seqs = [ticks("AA__B", "a", "a"), ticks("A_BB", "b", "b"), ticks("AA___B", "c", "c")]
    models = [fit_model(with_segments([s]), TrainingConfig(d_cap=4)) for s in seqs]
    sequential = score_matrix(models, seqs, DecodeConfig(), workers=1)
    threaded = score_matrix(models, seqs, DecodeConfig(), workers=3)
    assert sequential.shape == (3, 3)
    np.testing.assert_array_equal(sequential, threaded)


def test_disjoint_sequences_are_always_discriminated(controller, ticks):
    corpus = with_segments([ticks("AA_", "x", "x"), ticks("BB_", "y", "y")])
    report = controller.run_discrimination(corpus, k_values=[1], variants=["dihmm"])
    assert report.rows[0]["erd"] == 0.0
    assert report.rows[0]["diagonal_dominance"] == 1.0
    assert report.matrices["dihmm_k1"]["cols"] == ["x", "y"]


def test_discrimination_rows_per_variant_and_k(controller):
    corpus = generate(GenPolicy(n_states=(3,), d_min=1, d_max=3, l_min=1, l_max=3, length=9, count=12, seed=2))
    report = controller.run_discrimination(corpus, k_values=[1, 2], variants=["dihmm", "hsmm"])
    assert [(row["variant"], row["k"]) for row in report.rows] == [("dihmm", 1), ("dihmm", 2), ("hsmm", 1), ("hsmm", 2)]
    assert set(report.matrices) == {"dihmm_k1", "dihmm_k2", "hsmm_k1", "hsmm_k2"}
    assert all(row["n_sequences"] == 12 for row in report.rows)


def test_discrimination_is_deterministic(controller):
    corpus = generate(GenPolicy(n_states=(3,), d_min=1, d_max=3, l_min=1, l_max=3, length=9, count=10, seed=4))
    first = controller.run_discrimination(corpus, k_values=[3], variants=["dihmm"])
    second = controller.run_discrimination(corpus, k_values=[3], variants=["dihmm"])
    assert first.rows == second.rows
    assert first.matrices == second.matrices


def test_discrimination_needs_two_sequences(controller, ticks):
    with pytest.raises(DataError):
        controller.run_discrimination(with_segments([ticks("AA", "x", "x")]), k_values=[1])


def test_perfect_self_test(controller, ticks):
    items = [ticks("AA__B", "x0", "x"), ticks("A_BB", "y0", "y"), ticks("B_AA", "z0", "z")]
    report = controller.run_recognition(items, items, variants=["dihmm"])
    row = report.rows[0]
    assert (row["precision"], row["recall"], row["f_measure"]) == (1.0, 1.0, 1.0)
    assert row["n_models"] == 3


def test_unknown_label_lowers_recall_only(controller, ticks):
    train = [ticks("AA__B", "x0", "x"), ticks("A_BB", "y0", "y")]
    test = train + [ticks("BB_A", "q0", "q")]
    row = controller.run_recognition(train, test, variants=["dihmm"]).rows[0]
    assert (row["tp"], row["pp"], row["ap"]) == (2, 2, 2)
    assert row["recall"] == 1.0


def test_recognition_needs_test_items(controller, ticks):
    with pytest.raises(DataError):
        controller.run_recognition([ticks("AA", "x", "x")], [])


def test_timing_rows(controller):
    corpus = generate(GenPolicy(n_states=(3,), d_min=2, d_max=2, l_min=1, l_max=10, count=6, seed=11))
    report = controller.run_timing(corpus, [0, 3, 6], variants=["hsmm", "dihmm"], repeats=1)
    assert [(row["variant"], row["k"]) for row in report.rows] == [
        ("hsmm", 0),
        ("dihmm", 0),
        ("hsmm", 3),
        ("dihmm", 3),
        ("hsmm", 6),
        ("dihmm", 6),
    ]
    zero = report.rows[0]
    assert zero["recognize_time"] < 0.01
    assert all(row["total_time"] == pytest.approx(row["train_time"] + row["recognize_time"]) for row in report.rows)
    assert all(row["ratio_to_hsmm"] == 1.0 for row in report.rows if row["variant"] == "hsmm" and row["k"] > 0)


def test_timing_grid_must_be_sorted(controller):
    corpus = generate(GenPolicy(n_states=(3,), d_min=2, d_max=2, l_min=1, l_max=2, count=4))
    with pytest.raises(InvalidParameterError):
        controller.run_timing(corpus, [3, 1])


def test_preset_with_unknown_experiment(controller):
    with pytest.raises(DataError):
        controller.run_preset({"experiment": "nope"})


def test_small_discrimination_preset(controller):
    preset = {
        "experiment": "discrimination",
        "seed": 5,
        "policy": {"n_states": [3], "d_min": 1, "d_max": 3, "l_min": 1, "l_max": 3, "length": 9, "count": 8, "seed": 5},
        "k_train": [1, 2],
        "variants": ["dihmm"],
        "jitter": {"max_shift": 1, "prob": 0.5, "targets": "intervals", "balanced": True},
        "training": {"d_cap": 8},
    }
    report = controller.run_preset(preset)
    assert report.experiment == "discrimination"
    assert report.column("k") == [1, 2]
    assert report.config["preset"] == preset
    assert report.config["training"]["d_cap"] == 8


def test_variant_names_are_checked(controller, ticks):
    corpus = with_segments([ticks("AA_", "x", "x"), ticks("BB_", "y", "y")])
    with pytest.raises(InvalidParameterError):
        controller.run_discrimination(corpus, k_values=[1], variants=["hmm"])
    assert VARIANT("dihmm") is VARIANT.DIHMM
