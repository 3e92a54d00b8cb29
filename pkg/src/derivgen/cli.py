"""Command-line surface: split, train, predict, evaluate.

Defaults mirror the training recipe baked into the library (embedding
300, hidden 100, batch 20, 300 epochs, beam 12). A flat key = value
config file can supply any option; explicit flags win over the file, and
the DERIVGEN_CONFIG environment variable names a default config path.

Exit codes: 0 success, 1 usage error, 2 data error, 3 model error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import baseline as bl
from . import corpus, metrics, seq2seq

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_MODEL = 3


class DataError(Exception):
    pass


class ModelError(Exception):
    pass


def _parse_value(raw):
    raw = raw.strip()
    if raw.startswith('"') and raw.endswith('"') and len(raw) >= 2:
        return raw[1:-1]
    low = raw.lower()
    if low in ("true", "false"):
        return low == "true"
    if low in ("none", "null"):
        return None
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        pass
    return raw


def load_config_file(path):
    """Flat ``key = value`` file; '#' starts a comment."""
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DataError(f"{path}:{lineno}: expected 'key = value'")
            key, raw = line.split("=", 1)
            values[key.strip()] = _parse_value(raw)
    return values


def _merged_options(args, keys):
    """Config-file values overridden by explicitly-set CLI flags."""
    values = {}
    config_path = getattr(args, "config", None) or os.environ.get("DERIVGEN_CONFIG")
    if config_path:
        file_values = load_config_file(config_path)
        for k in keys:
            if k in file_values:
                values[k] = file_values[k]
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            values[k] = v
    return values


def cmd_split(args):
    try:
        raw = corpus.read_triples(args.data)
    except OSError as e:
        raise DataError(str(e)) from None
    except ValueError as e:
        raise DataError(str(e)) from None
    if not raw:
        raise DataError(f"{args.data}: no triples")
    kept = corpus.filter_triples(raw)
    removed = len(raw) - len(kept)
    split = corpus.split_dataset(kept, args.seed, stratify_by_tag=args.stratify)
    manifest = corpus.write_split(args.out_dir, split, removed=removed)
    print(f"retained={len(kept)} removed={removed}")
    print(
        f"train={manifest['counts']['train']} dev={manifest['counts']['dev']} "
        f"test={manifest['counts']['test']} seed={args.seed}"
    )
    return 0


SEQ2SEQ_KEYS = ("emb", "hidden", "batch", "epochs", "beam", "rho", "eps", "clip", "seed")
BASELINE_KEYS = ("window", "history", "epochs", "seed", "per_tag")


def cmd_train(args):
    try:
        split = corpus.read_split(args.splits)
    except (OSError, ValueError, KeyError) as e:
        raise DataError(f"cannot read splits from {args.splits}: {e}") from None
    log_path = args.log or args.model + ".log"

    def write_log(lines):
        with open(log_path, "w", encoding="utf-8") as fh:
            for line in lines:
                fh.write(line + "\n")

    if args.kind == "baseline":
        opts = _merged_options(args, BASELINE_KEYS)
        epochs = int(opts.get("epochs") or 10)
        seed = int(opts.get("seed") or 0)
        window = int(opts.get("window") or 3)
        history = int(opts.get("history") or 2)
        per_tag = bool(opts.get("per_tag") or False)
        if epochs < 1 or window < 0 or history < 0:
            raise DataError("invalid baseline hyperparameters")
        lines = [
            f"model=baseline window={window} history={history} epochs={epochs} "
            f"seed={seed} per_tag={int(per_tag)}"
        ]
        model = bl.train_baseline(
            split.train, epochs=epochs, seed=seed, window=window,
            history_len=history, per_tag=per_tag,
        )
        if split.dev:
            preds = [model.predict(t.base, t.tag) for t in split.dev]
            gold = [t.derived for t in split.dev]
            lines.append(
                f"dev_acc={metrics.accuracy(preds, gold):.4f} "
                f"dev_edit={metrics.avg_edit_distance(preds, gold):.4f}"
            )
        bl.save_baseline(args.model, model)
        write_log(lines)
    else:
        opts = _merged_options(args, SEQ2SEQ_KEYS)
        config = seq2seq.Seq2SeqConfig.from_dict(opts)
        if min(config.emb, config.hidden, config.batch, config.epochs, config.beam) < 1:
            raise DataError("invalid seq2seq hyperparameters")
        vocab = corpus.build_vocab(split.train)
        params, meta, lines = seq2seq.train(split, vocab, config)
        seq2seq.save_model(args.model, params, vocab, meta)
        write_log(lines)
    print(f"model written to {args.model}; log in {log_path}")
    return 0


def _read_queries(path):
    """TSV of base<TAB>tag rows (a third column, if present, is ignored)."""
    queries = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) < 2:
                raise DataError(f"{path}:{lineno}: expected base<TAB>tag")
            queries.append((parts[0], parts[1]))
    return queries


def _detect_model_kind(path):
    with open(path, "r", encoding="utf-8") as fh:
        head = fh.read(64)
    if head.startswith(bl.MODEL_FORMAT):
        return "baseline"
    return "seq2seq"


def cmd_predict(args):
    if args.k < 1:
        raise DataError("k must be >= 1")
    queries = _read_queries(args.input)
    try:
        kind = _detect_model_kind(args.model)
        if kind == "baseline":
            if args.k > 1:
                raise ModelError("baseline is greedy-only")
            model = bl.load_baseline(args.model)
            rows = [(b, t, 1, model.predict(b, t), 0.0) for b, t in queries]
        else:
            params, vocab, _ = seq2seq.load_model(args.model)
            beam = max(args.beam or params.config.beam, args.k)
            rows = []
            for b, t in queries:
                for rank, (pred, logp) in enumerate(
                    seq2seq.predict_kbest(params, vocab, b, t, beam=beam, k=args.k), 1
                ):
                    rows.append((b, t, rank, pred, logp))
    except OSError as e:
        raise ModelError(str(e)) from None
    out = sys.stdout if args.output == "-" else open(args.output, "w", encoding="utf-8")
    try:
        for base, tag, rank, pred, logp in rows:
            out.write(f"{base}\t{tag}\t{rank}\t{pred}\t{logp:.6f}\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def read_predictions(path):
    """Prediction TSV back into per-query ranked lists, input order preserved."""
    by_query = {}
    order = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 5:
                raise DataError(f"{path}:{lineno}: expected 5 fields")
            base, tag, rank, pred, _logp = parts
            key = (base, tag)
            if key not in by_query:
                by_query[key] = []
                order.append(key)
            by_query[key].append((int(rank), pred))
    result = []
    for key in order:
        ranked = sorted(by_query[key])
        result.append((key, [p for _, p in ranked]))
    return result


def cmd_evaluate(args):
    preds = read_predictions(args.pred)
    gold = corpus.read_triples(args.gold)
    if len(preds) != len(gold):
        raise DataError(f"row-count mismatch: {len(preds)} predictions vs {len(gold)} golds")
    for (key, _), t in zip(preds, gold):
        if key != (t.base, t.tag):
            raise DataError(f"prediction/gold misalignment at {key} vs {(t.base, t.tag)}")
    inventory = metrics.DEFAULT_AFFIXES
    if args.affixes:
        with open(args.affixes, "r", encoding="utf-8") as fh:
            inventory = tuple(line.strip().lstrip("-") for line in fh if line.strip())
    kbest = [hyps[: args.k] for _, hyps in preds]
    report = metrics.evaluate(kbest, gold, inventory)
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            fh.write(report.to_json() + "\n")
    print(report.to_table())
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="derivgen",
        description="Derivational paradigm completion: data pipeline, baseline "
        "transducer, attentional encoder-decoder, and evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("split", help="filter triples and write train/dev/test files")
    p.add_argument("--data", required=True, help="input TSV of base/tag/derived triples")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--stratify", action="store_true", help="split per tag group")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train a model on an existing split")
    p.add_argument("--kind", choices=("baseline", "seq2seq"), required=True)
    p.add_argument("--splits", required=True, help="directory written by 'split'")
    p.add_argument("--model", required=True, help="output model path")
    p.add_argument("--log", help="training log path (default: <model>.log)")
    p.add_argument("--config", help="flat key = value config file")
    for key in ("emb", "hidden", "batch", "epochs", "beam", "seed", "window", "history"):
        p.add_argument(f"--{key}", type=int)
    p.add_argument("--rho", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--clip", type=float)
    p.add_argument("--per-tag", dest="per_tag", action="store_const", const=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="emit k-best predictions for base/tag queries")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True, help="TSV of base<TAB>tag queries")
    p.add_argument("--output", default="-")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--beam", type=int)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="score predictions against gold triples")
    p.add_argument("--pred", required=True, help="prediction TSV from 'predict'")
    p.add_argument("--gold", required=True, help="gold triple TSV")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--json", help="also write the report as JSON to this path")
    p.add_argument("--affixes", help="affix inventory file, one suffix per line")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else 0
    try:
        return args.func(args)
    except DataError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except ModelError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_MODEL
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
