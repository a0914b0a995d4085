"""
Command-line entry point: synth, ingest, train, score, classify, eval and bench
"""

import argparse
import json
import logging
import os
import sys
from contextlib import contextmanager
from pathlib import Path

import pandas as pd

from controllers.decoding_controller import DecodeConfig, classify, score
from controllers.eval_controller import EvaluationController
from controllers.ingest_controller import AudioParams, dedupe_rhythms, hop_from_tempo, read_wav, split_bars, tokenize_wav
from controllers.synth_controller import GenPolicy, JitterPolicy, RhythmPolicy, generate, generate_rhythm_corpus
from controllers.training_controller import TrainingConfig, fit_label_set, fit_model, with_segments
from models import DihmmError, InvalidParameterError, TickSequence
from utils.system_utils import (
    load_models,
    load_preset,
    load_system_defaults,
    read_corpus,
    save_models,
    sequence_to_record,
    setup_logging,
    write_corpus,
)

logger = logging.getLogger(__name__)


class UsageError(Exception):
    pass


class ArgumentParser(argparse.ArgumentParser):
    """Raise instead of exiting so usage errors map to exit code 1."""

    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _range(text):
    try:
        low, _, high = text.partition(":")
        low = int(low)
        return low, int(high) if high else low
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LOW:HIGH or N, got {text!r}") from None


def _int_list(text):
    try:
        return [int(part) for part in text.split(",") if part]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_global_flags(parser, suppress=False):
    def default(value):
        return argparse.SUPPRESS if suppress else value

    parser.add_argument("--seed", type=int, default=default(None), help="seed for generation and jitter (default 0)")
    parser.add_argument("--log-level", default=default("WARNING"), choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    parser.add_argument("--threads", type=int, default=default(None), help="eval parallelism (default: available cores)")
    parser.add_argument("--defaults", default=default(None), help="alternate system_defaults.json")


def build_parser():
    parser = ArgumentParser(prog="dihmm", description="Duration and interval hidden Markov models")
    _add_global_flags(parser)
    # same flags after the subcommand; SUPPRESS keeps a value given before it
    common = ArgumentParser(add_help=False)
    _add_global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", parents=[common], help="generate a synthetic corpus")
    synth.add_argument("--n", type=_int_list, default=[3], help="state count(s), e.g. 3 or 3,4")
    synth.add_argument("--d", type=_range, default=(1, 10), help="duration range LOW:HIGH")
    synth.add_argument("--l", type=_range, default=(1, 4), help="interval range LOW:HIGH")
    synth.add_argument("--t", type=int, default=None, help="fixed total length")
    synth.add_argument("--count", type=int, default=200)
    synth.add_argument("--sampling", choices=["uniform", "first"], default="uniform")
    synth.add_argument("--shared-symbol", action="store_true", help="one on/off symbol for every segment")
    synth.add_argument("--jitter-shift", type=int, default=0)
    synth.add_argument("--jitter-prob", type=float, default=0.5)
    synth.add_argument("--policy", default=None, help="GenPolicy JSON file (replaces the policy flags)")
    synth.add_argument("--rhythm", action="store_true", help="write the emulated rhythm train/test corpora instead")
    synth.add_argument("--bars-per-seq", type=int, default=1)
    synth.add_argument("--form", choices=["ticks", "events"], default="ticks")
    synth.add_argument("--out", default="-", help="output JSONL (or directory with --rhythm); - for stdout")

    ingest = sub.add_parser("ingest", parents=[common], help="tokenize 16-bit mono WAV files")
    ingest.add_argument("wavs", nargs="+")
    ingest.add_argument("--hop", type=int, default=None)
    ingest.add_argument("--tempo", type=float, default=None, help="derive hop from beats per minute")
    ingest.add_argument("--ticks-per-beat", type=int, default=4)
    ingest.add_argument("--rms-threshold", type=float, default=None)
    ingest.add_argument("--ticks-per-bar", type=int, default=None)
    ingest.add_argument("--bars-per-seq", type=int, default=None)
    ingest.add_argument("--no-split", action="store_true", help="keep each file as one sequence")
    ingest.add_argument("--dedupe", action="store_true", help="label bars by distinct rhythm")
    ingest.add_argument("--out", default="-")

    train = sub.add_parser("train", parents=[common], help="fit models from a corpus")
    train.add_argument("corpus")
    train.add_argument("--out", required=True, help="model directory")
    train.add_argument("--variant", choices=["hsmm", "dihmm"], default="dihmm")
    train.add_argument("--alpha", type=float, default=None)
    train.add_argument("--theta-pt", type=float, default=None)
    train.add_argument("--c", type=float, default=None)
    train.add_argument("--sigma-floor", type=float, default=None)
    train.add_argument("--d-cap", type=int, default=None)
    train.add_argument("--allow-self", action="store_true", help="permit m -> m transitions")
    train.add_argument("--single", default=None, metavar="LABEL", help="fit one model on the whole corpus")
    train.add_argument("--gap", default=None, help="gap symbol when the corpus names none")

    for name, help_text in (("score", "score sequences against one model"), ("classify", "classify a corpus against a model set")):
        cmd = sub.add_parser(name, parents=[common], help=help_text)
        cmd.add_argument("--gap-mode", choices=["strict", "skip"], default=None)
        cmd.add_argument("--interval-slack", type=int, default=None)
        cmd.add_argument("--normalize", action="store_true")
        if name == "score":
            cmd.add_argument("--model", required=True)
            source = cmd.add_mutually_exclusive_group(required=True)
            source.add_argument("--ticks", help="symbols, space separated or one character each")
            source.add_argument("--corpus")
        else:
            cmd.add_argument("--models", required=True, help="model directory or file")
            cmd.add_argument("corpus")
            cmd.add_argument("--out", default="-", help="predictions CSV; - for stdout")

    for name in ("eval", "bench"):
        cmd = sub.add_parser(name, parents=[common], help="run an experiment preset" if name == "eval" else "run the timing preset")
        cmd.add_argument("--preset", default="discrimination_sec6a.json" if name == "eval" else "timing_sec6c.json")
        cmd.add_argument("--out", default="reports")
    return parser


# ----------------------------------------------------------------------
# Subcommands
# ----------------------------------------------------------------------


@contextmanager
def _flag_values():
    """Report a bad parameter built from command-line flags as a usage error."""
    try:
        yield
    except InvalidParameterError as err:
        raise UsageError(f"dihmm: error: {err}") from err


def _training_config(args, defaults):
    values = dict(defaults.get("training", {}))
    overrides = {
        "smoothing_alpha": args.alpha,
        "theta_pt": args.theta_pt,
        "c": args.c,
        "sigma_floor": args.sigma_floor,
        "d_cap": args.d_cap,
    }
    values.update({k: v for k, v in overrides.items() if v is not None})
    if args.allow_self:
        values["forbid_self_transition"] = False
    with _flag_values():
        return TrainingConfig.from_dict(values)


def _decode_config(args, defaults):
    values = dict(defaults.get("decoding", {}))
    if getattr(args, "gap_mode", None):
        values["gap_mode"] = args.gap_mode
    if getattr(args, "interval_slack", None) is not None:
        values["interval_slack"] = args.interval_slack
    if getattr(args, "normalize", False):
        values["normalize_scores"] = True
    with _flag_values():
        return DecodeConfig.from_dict(values)


def _emit_corpus(path, sequences, form="ticks"):
    if path == "-":
        for seq in sequences:
            print(json.dumps(sequence_to_record(seq, form)))
    else:
        write_corpus(path, sequences, form)


def cmd_synth(args, defaults):
    seed = args.seed or 0
    if args.rhythm:
        if args.out == "-":
            raise UsageError("synth --rhythm needs --out DIRECTORY")
        train, test = generate_rhythm_corpus(RhythmPolicy(seed=seed), args.bars_per_seq)
        write_corpus(Path(args.out) / "train.jsonl", train, args.form)
        write_corpus(Path(args.out) / "test.jsonl", test, args.form)
        return 0

    if args.policy:
        with open(args.policy, "r", encoding="utf-8") as fp:
            policy = GenPolicy.from_dict({"seed": seed, **json.load(fp)})
    else:
        with _flag_values():
            jitter = JitterPolicy(args.jitter_shift, args.jitter_prob) if args.jitter_shift else None
            policy = GenPolicy(
                n_states=tuple(args.n),
                d_min=args.d[0],
                d_max=args.d[1],
                l_min=args.l[0],
                l_max=args.l[1],
                length=args.t,
                count=args.count,
                seed=seed,
                jitter=jitter,
                sampling=args.sampling,
                shared_symbol=args.shared_symbol,
                gap_symbol=defaults.get("corpus", {}).get("gap_symbol", "_"),
            )
    _emit_corpus(args.out, [seq for seq, _ in generate(policy)], args.form)
    return 0


def cmd_ingest(args, defaults):
    values = dict(defaults.get("ingest", {}))
    for key, flag in (("rms_threshold", args.rms_threshold), ("ticks_per_bar", args.ticks_per_bar), ("bars_per_sequence", args.bars_per_seq)):
        if flag is not None:
            values[key] = flag
    sequences = []
    for wav in args.wavs:
        hop = args.hop
        rate = read_wav(wav)[0] if args.tempo is not None else None
        with _flag_values():
            if rate is not None:
                hop = hop_from_tempo(rate, args.tempo, args.ticks_per_beat)
            params = AudioParams.from_dict({**values, "hop": hop})
        seq = tokenize_wav(wav, params)
        sequences.extend([seq] if args.no_split else split_bars(seq, params))
    if args.dedupe:
        sequences = [tagged for _, tagged in dedupe_rhythms(sequences)]
    _emit_corpus(args.out, sequences)
    return 0


def cmd_train(args, defaults):
    cfg = _training_config(args, defaults)
    gap = args.gap or defaults.get("corpus", {}).get("gap_symbol", "_")
    data = with_segments(read_corpus(args.corpus, gap=gap))
    if args.single is not None or any(seq.label is None for seq, _ in data):
        label = args.single or Path(args.corpus).stem
        models = {label: fit_model(data, cfg, args.variant, label)}
    else:
        models = fit_label_set(data, cfg, args.variant, workers=args.threads or 1)
    for path in save_models(models, args.out):
        print(path)
    return 0


def _sequences_for(args, alphabet):
    if args.corpus:
        return read_corpus(args.corpus, alphabet=alphabet)
    text = args.ticks.strip()
    names = text.split() if any(ch.isspace() for ch in text) else list(text)
    return [TickSequence.from_names(names, alphabet, "ticks")]


def cmd_score(args, defaults):
    cfg = _decode_config(args, defaults)
    models = load_models(args.model)
    if len(models) != 1:
        raise UsageError("score --model needs exactly one model file")
    model = next(iter(models.values()))
    for seq in _sequences_for(args, model.alphabet):
        result = score(model, seq, cfg)
        print(json.dumps({"id": seq.id, "model": model.label, **result.to_dict()}))
    return 0


def cmd_classify(args, defaults):
    cfg = _decode_config(args, defaults)
    models = load_models(args.models)
    alphabet = next(iter(models.values())).alphabet
    rows = []
    for seq in read_corpus(args.corpus, alphabet=alphabet):
        outcome = classify(models, seq, cfg)
        best = outcome.scores[outcome.label] if outcome.label is not None else None
        rows.append(
            {
                "id": seq.id,
                "label": seq.label,
                "predicted": outcome.label,
                "unique": outcome.unique,
                "log_likelihood": best.log_likelihood if best else None,
                "normalized": best.normalized if best else None,
            }
        )
    frame = pd.DataFrame(rows, columns=["id", "label", "predicted", "unique", "log_likelihood", "normalized"])
    if args.out == "-":
        frame.to_csv(sys.stdout, index=False)
    else:
        frame.to_csv(args.out, index=False)
    return 0


def cmd_eval(args, defaults):
    preset = load_preset(args.preset)
    if args.seed is not None:
        preset["seed"] = args.seed
    controller = EvaluationController(
        TrainingConfig.from_dict(defaults.get("training", {})),
        DecodeConfig.from_dict(defaults.get("decoding", {})),
        workers=args.threads or os.cpu_count(),
    )
    report = controller.run_preset(preset)
    for path in report.write(args.out):
        print(path)
    return 0


COMMANDS = {
    "synth": cmd_synth,
    "ingest": cmd_ingest,
    "train": cmd_train,
    "score": cmd_score,
    "classify": cmd_classify,
    "eval": cmd_eval,
    "bench": cmd_eval,
}


def main(argv=None) -> int:
    """Main application entry point"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.threads is not None and args.threads < 1:
            raise UsageError("--threads must be >= 1")
        setup_logging(args.log_level)
        defaults = load_system_defaults(args.defaults)
        return COMMANDS[args.command](args, defaults)
    except UsageError as err:
        print(parser.format_usage().rstrip(), file=sys.stderr)
        print(err, file=sys.stderr)
        return 1
    except (DihmmError, OSError, json.JSONDecodeError) as err:
        print(f"dihmm: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
