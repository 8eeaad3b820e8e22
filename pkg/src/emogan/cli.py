"""Command-line entry point.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numerical failure.
"""
import argparse
import json
import logging
import os
import sys

import numpy as np

from . import io
from .collisions import CollisionParams, filter_collisions, mark_collisions
from .emotext import (
    N_EMOTIONS,
    StubEmbedder,
    default_dictionary,
    load_dictionary,
    vectorize_corpus,
)
from .evaluation import evaluate, forecast_row, prediction_table
from .exceptions import (
    DatasetFormatError,
    DictionaryError,
    DimensionError,
    NumericalError,
    ProtocolError,
    ProviderError,
)
from .gan import TrainConfig, enumerate_combinations, load_model, save_model
from .pipeline import run_training
from .synth import SyntheticSpec, synthesize

log = logging.getLogger("emogan")

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 1, 2, 3

DEFAULTS = {
    "dim": 512,
    "dictionary": None,
    "embeddings": None,
    "stub_seed": 0,
    "keep_zero_label": False,
    "k": 2,
    "tau": 0.995,
    "generator_epochs": 10,
    "generator_lr": 1e-3,
    "discriminator_epochs": 50,
    "discriminator_lr": 1e-2,
    "batch_size": 16,
    "split_fraction": 0.7,
    "finetune_rounds": 0,
    "hidden": 128,
    "sigma": 0.05,
    "per_combo": 20,
    "combos": "reference",
    "table": False,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _resolve(args):
    """Merge built-in defaults < JSON config file < explicit flags."""
    conf = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold a JSON object")
        conf.update({k.replace("-", "_"): v for k, v in loaded.items()})
    for key, value in vars(args).items():
        if key in ("func", "config"):
            continue
        if value is not None:
            conf[key] = value
        else:
            conf.setdefault(key, None)
    return argparse.Namespace(**conf)


def _require(c, *names):
    for name in names:
        if getattr(c, name, None) is None:
            raise UsageError(f"--{name.replace('_', '-')} is required")


def _out_dir(c):
    _require(c, "out_dir")
    os.makedirs(c.out_dir, exist_ok=True)
    return c.out_dir


def _provider(c):
    if c.embeddings:
        return io.load_embedding_table(c.embeddings, c.dim)
    return StubEmbedder(c.dim, c.stub_seed)


def _dictionary(c):
    return load_dictionary(c.dictionary) if c.dictionary else default_dictionary()


def _collision_params(c):
    try:
        return CollisionParams(int(c.k), float(c.tau))
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _configs(c):
    try:
        gen = TrainConfig(int(c.generator_epochs), float(c.generator_lr), int(c.batch_size),
                          int(c.seed), float(c.split_fraction), int(c.finetune_rounds))
        disc = TrainConfig(int(c.discriminator_epochs), float(c.discriminator_lr), int(c.batch_size),
                           int(c.seed), float(c.split_fraction), int(c.finetune_rounds))
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    return gen, disc


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(obj, ensure_ascii=False, indent=2, allow_nan=False))
        fh.write("\n")


def do_vectorize(c, out=None):
    _require(c, "corpus")
    out = out or c.out
    if out is None:
        raise UsageError("--out is required")
    corpus = io.read_corpus(c.corpus)
    examples, stats = vectorize_corpus(corpus, _dictionary(c), _provider(c),
                                       keep_zero_label=c.keep_zero_label, dim=c.dim)
    io.write_dataset(out, examples)
    print(f"sentences={stats['sentences']} labelled={stats['labelled']} dropped={stats['dropped']}")
    return examples


def do_find_collisions(c, examples=None):
    params = _collision_params(c)
    if examples is None:
        _require(c, "dataset")
        examples = io.read_dataset(c.dataset)
    out = _out_dir(c)
    if not examples:
        marked, stats = [], []
    else:
        marked, stats = mark_collisions(examples, params)
    clean = filter_collisions(marked)
    io.write_dataset(os.path.join(out, "flagged.jsonl"), marked)
    io.write_dataset(os.path.join(out, "collision_free.jsonl"), clean)
    _write_json(os.path.join(out, "collisions.json"), {
        "k": params.k,
        "tau": params.tau,
        "clusters": [st.to_dict() for st in stats],
    })
    n_flagged = sum(st.collision for st in stats)
    print(f"examples={len(marked)} clusters={len(stats)} collision_clusters={n_flagged} "
          f"kept={len(clean)}")
    return clean


def _write_report(out, report):
    _write_json(os.path.join(out, "report.json"), report.to_dict())
    with open(os.path.join(out, "report.txt"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report.table() + "\n\n" + report.matrix_table() + "\n")
    io.write_jsonl(os.path.join(out, "records.jsonl"),
                   (forecast_row(r.forecast, r.text, r.gold) | {"correct": r.correct}
                    for r in report.records))


def do_train(c, examples=None):
    _require(c, "seed")
    if examples is None:
        _require(c, "dataset")
        examples = io.read_dataset(c.dataset)
    if not examples:
        raise ValueError("cannot train on an empty dataset")
    out = _out_dir(c)
    gen_cfg, disc_cfg = _configs(c)
    log.info("training on %d examples, seed %s", len(examples), c.seed)
    result = run_training(examples, int(c.seed), gen_cfg, disc_cfg, n_hidden=int(c.hidden))
    save_model(result.model, os.path.join(out, "model.json"))
    io.write_dataset(os.path.join(out, "dataset2.jsonl"), result.dataset2.to_examples())
    io.write_dataset(os.path.join(out, "golden.jsonl"), result.test_examples)
    _write_json(os.path.join(out, "curves.json"), result.curves)
    _write_report(out, result.report)
    print(result.report.table())
    print(f"top2_hit_rate={result.report.overall_top2_hit_rate:.4f} "
          f"golden={result.report.n_examples} excluded={result.report.n_excluded}")
    return result


def do_evaluate(c):
    _require(c, "model", "dataset")
    model = load_model(c.model)
    examples = io.read_dataset(c.dataset, model.dim)
    X, Y = io.as_arrays(examples)
    report = evaluate(model.discriminator.predict_proba(X), Y, [ex.text for ex in examples])
    if getattr(c, "out_dir", None):
        _write_report(_out_dir(c), report)
    print(report.table())
    print()
    print(report.matrix_table())
    return report


def do_synth(c):
    _require(c, "seed", "out")
    if c.combos == "reference":
        combos = io.reference_combinations().tolist()
    elif c.combos == "all":
        combos = enumerate_combinations(N_EMOTIONS).tolist()
    else:
        with open(c.combos, encoding="utf-8") as fh:
            combos = json.load(fh)
    try:
        spec = SyntheticSpec(int(c.dim), float(c.sigma), int(c.per_combo), combos, int(c.seed))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    examples, _ = synthesize(spec)
    io.write_dataset(c.out, examples)
    print(f"examples={len(examples)} combos={len(spec.combos)}")


def do_predict(c):
    _require(c, "model")
    model = load_model(c.model)
    if c.input:
        rows = [obj for _, obj in io.read_jsonl(c.input)]
        texts = [r.get("text") for r in rows]
        golds = [r.get("emotions") for r in rows]
        try:
            X = np.asarray([r["embedding"] for r in rows], dtype=np.float64).reshape(len(rows), -1)
        except KeyError:
            raise ValueError(f"{c.input}: every line needs an 'embedding'") from None
    elif c.text:
        texts, golds = list(c.text), [None] * len(c.text)
        c.dim = model.dim
        provider = _provider(c)
        X = np.stack([provider.embed(t) for t in texts])
    else:
        raise UsageError("give --input or --text")
    if X.shape[1] != model.dim:
        raise DimensionError(f"inputs have dimension {X.shape[1]}, model expects {model.dim}")
    forecasts = model.discriminator.predict_proba(X)
    out_rows = [forecast_row(f, t, g) for f, t, g in zip(forecasts, texts, golds)]
    for row in out_rows:
        print(io.dumps(row))
    if c.table:
        print(prediction_table(out_rows), file=sys.stderr)
    return out_rows


def do_pipeline(c):
    _require(c, "seed")
    out = _out_dir(c)
    if getattr(c, "corpus", None):
        examples = do_vectorize(c, out=os.path.join(out, "dataset.jsonl"))
    else:
        _require(c, "dataset")
        examples = io.read_dataset(c.dataset)
    log.info("vectorized dataset: %d examples", len(examples))
    clean = do_find_collisions(c, examples)
    return do_train(c, clean)


def build_parser():
    p = _Parser(prog="emogan", description=__doc__.splitlines()[0] if __doc__ else None)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", help="JSON file with option values; flags override it")
        return sp

    def provider_opts(sp):
        sp.add_argument("--dictionary", help="emoticon dictionary JSON (default: bundled)")
        sp.add_argument("--embeddings", help="JSON-lines {text, embedding} lookup table")
        sp.add_argument("--stub-seed", type=int, help="seed of the hashing stub embedder")
        sp.add_argument("--dim", type=int, help="embedding dimension D")
        sp.add_argument("--keep-zero-label", action="store_true", default=None)

    def collision_opts(sp):
        sp.add_argument("--k", type=int, help="allowed dominant classes per cluster")
        sp.add_argument("--tau", type=float, help="cosine threshold for clustering")

    def train_opts(sp):
        sp.add_argument("--seed", type=int)
        sp.add_argument("--generator-epochs", type=int)
        sp.add_argument("--generator-lr", type=float)
        sp.add_argument("--discriminator-epochs", type=int)
        sp.add_argument("--discriminator-lr", type=float)
        sp.add_argument("--batch-size", type=int)
        sp.add_argument("--split-fraction", type=float)
        sp.add_argument("--finetune-rounds", type=int)
        sp.add_argument("--hidden", type=int)

    sp = common(sub.add_parser("vectorize", help="label corpus sentences by emoticons"))
    sp.add_argument("--corpus")
    sp.add_argument("--out")
    provider_opts(sp)
    sp.set_defaults(func=do_vectorize)

    sp = common(sub.add_parser("find-collisions", help="flag and purge label collisions"))
    sp.add_argument("--dataset")
    sp.add_argument("--out-dir")
    collision_opts(sp)
    sp.set_defaults(func=do_find_collisions)

    sp = common(sub.add_parser("train", help="train generator and discriminator"))
    sp.add_argument("--dataset")
    sp.add_argument("--out-dir")
    train_opts(sp)
    sp.set_defaults(func=do_train)

    sp = common(sub.add_parser("synth", help="write a synthetic labelled dataset"))
    sp.add_argument("--seed", type=int)
    sp.add_argument("--dim", type=int)
    sp.add_argument("--sigma", type=float)
    sp.add_argument("--per-combo", type=int)
    sp.add_argument("--combos", help="'reference', 'all' or a JSON file of 7-bit rows")
    sp.add_argument("--out")
    sp.set_defaults(func=do_synth)

    sp = common(sub.add_parser("predict", help="forecast emotions with a trained model"))
    sp.add_argument("--model")
    sp.add_argument("--input", help="JSON-lines with 'embedding' (and optional 'text')")
    sp.add_argument("--text", action="append", help="raw sentence (repeatable)")
    sp.add_argument("--embeddings")
    sp.add_argument("--stub-seed", type=int)
    sp.add_argument("--table", action="store_true", default=None,
                    help="also print a text table to stderr")
    sp.set_defaults(func=do_predict)

    sp = common(sub.add_parser("evaluate", help="top-2 evaluation of a model on a dataset"))
    sp.add_argument("--model")
    sp.add_argument("--dataset")
    sp.add_argument("--out-dir")
    sp.set_defaults(func=do_evaluate)

    sp = common(sub.add_parser("pipeline", help="vectorize, purge collisions, train, evaluate"))
    sp.add_argument("--corpus")
    sp.add_argument("--dataset")
    sp.add_argument("--out-dir")
    provider_opts(sp)
    collision_opts(sp)
    train_opts(sp)
    sp.set_defaults(func=do_pipeline)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    func = args.func
    del args.verbose, args.command
    try:
        func(_resolve(args))
    except UsageError as exc:
        print(f"emogan: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"emogan: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DatasetFormatError, DictionaryError, ProviderError, ProtocolError,
            DimensionError, OSError, ValueError) as exc:
        print(f"emogan: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
