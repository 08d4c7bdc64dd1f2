"""Command-line interface.

    crowdtrust simulate --preset trec-like --seed 1 --output obs.csv --key-output key.csv
    crowdtrust fuse obs.csv --key key.csv --method professional --train-count 40 --seed 1
    crowdtrust compare obs.csv --key key.csv --train-count 40 --seed 1
    crowdtrust cv obs.csv --key key.csv --method svm --train-count 40 --seed 1

Exit codes: 0 success, 2 usage error, 3 load error (malformed or inconsistent
input files), 4 numeric error, 5 scenario configuration error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

from . import formats, methods, simulate
from .core import AlphabetError, AnswerKey, ObservationMatrix, Split, accuracy, split_queries
from .modelsel import LambdaGrid, loocv_select
from .optim import NumericError, support

EXIT_USAGE, EXIT_LOAD, EXIT_NUMERIC, EXIT_CONFIG = 2, 3, 4, 5
PRESETS = {"trec-like": simulate.trec_like, "exam-like": simulate.exam_like}


class UsageError(Exception):
    pass


def _split(args, matrix: ObservationMatrix, key: AnswerKey | None) -> Split | None:
    if args.train_ids and args.train_count is not None:
        raise UsageError("give either --train-ids or --train-count, not both")
    if key is None:
        if args.train_ids or args.train_count:
            raise UsageError("--train-count/--train-ids need --key")
        return None
    if args.train_ids:
        index = {qid: j for j, qid in enumerate(matrix.query_ids)}
        train = []
        for qid in (s.strip() for s in args.train_ids.split(",") if s.strip()):
            if qid not in index or index[qid] not in key.entries:
                raise UsageError(f"training query {qid!r} is not in the answer key")
            train.append(index[qid])
        train = sorted(set(train))
        test = [q for q in key.coverage if q not in set(train)]
        return Split(train, test)
    count = args.train_count or 0
    if count > len(key.coverage):
        raise UsageError(f"--train-count {count} exceeds the {len(key.coverage)} answered queries")
    return split_queries(key, count, args.seed)


def _load(args):
    try:
        matrix, key = formats.load_dataset(args.observations, args.key)
    except (OSError, AlphabetError) as exc:
        raise formats.LoadError(str(exc)) from None
    return matrix, key


def _grid(args, method: str) -> LambdaGrid | None:
    """The ``--grid`` values; lambda = 0 is dropped for svm, like its default grid."""
    if not args.grid:
        return None
    try:
        grid = LambdaGrid.parse(args.grid)
        if methods.PENALTY.get(method) == "l2":
            grid = LambdaGrid(tuple(v for v in grid if v > 0))
    except ValueError as exc:
        raise UsageError(f"--grid: {exc}") from None
    return grid


def _run(args, method: str, matrix, key, split):
    if method in methods.SUPERVISED and (split is None or not split.train):
        raise UsageError(f"method {method!r} needs --key and --train-count or --train-ids")
    if method == "svm" and args.lam == 0:
        raise UsageError("--lambda must be positive for svm")
    if args.eta is not None and args.eta < 0:
        raise UsageError("--eta must be non-negative")
    return methods.run_method(
        method,
        matrix,
        key,
        split.train if split else (),
        lam=args.lam,
        eta=args.eta,
        grid=_grid(args, method),
    )


def _report(args, matrix, key, split, outcome) -> dict:
    labels = matrix.alphabet.labels
    train = set(split.train) if split else set()
    test = set(split.test) if split else set()
    rep: dict = {"method": outcome.method, "seed": args.seed, "alphabet": list(labels)}
    if split is not None:
        rep["train_ids"] = [matrix.query_ids[q] for q in split.train]
        rep["test_count"] = len(split.test)
        rep["accuracy"] = accuracy(outcome.result, key, split.test) if split.test else None
    elif key is not None:
        rep["accuracy"] = accuracy(outcome.result, key, key.coverage)
    if outcome.lam:
        rep["lambda"] = outcome.lam.get(None, None) if None in outcome.lam else dict(outcome.lam)
    if outcome.eta is not None:
        rep["eta"] = outcome.eta
    if outcome.cv:
        rep["cv_error"] = {
            ("all" if c is None else c): {f"{lam:.4f}": e for lam, e in errs.items()}
            for c, errs in outcome.cv.items()
        }

    agents = []
    for i, aid in enumerate(matrix.agent_ids):
        entry: dict = {"agent_id": aid, "index": i}
        for c, w in outcome.weights.items():
            entry["weight" if c is None else f"weight[{c}]"] = float(w.weights[i])
        for c, model in outcome.em.items():
            suffix = "" if len(outcome.em) == 1 else f"[{c}]"
            entry["alpha" + suffix] = float(model.alpha[i])
            entry["beta" + suffix] = float(model.beta[i])
        agents.append(entry)
    rep["agents"] = agents
    if outcome.weights:
        rep["bias"] = {("all" if c is None else c): w.bias for c, w in outcome.weights.items()}
        rep["support"] = {
            ("all" if c is None else c): [matrix.agent_ids[i] for i in sorted(support(w))]
            for c, w in outcome.weights.items()
        }

    preds = []
    for q in range(matrix.num_queries):
        preds.append(
            {
                "query_id": matrix.query_ids[q],
                "split": "train" if q in train else "test" if q in test else "none",
                "label": outcome.result.predictions[q],
                "scores": dict(zip(labels, outcome.result.scores[q].tolist())),
            }
        )
    rep["predictions"] = preds
    return rep


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_fuse(args) -> None:
    matrix, key = _load(args)
    split = _split(args, matrix, key)
    outcome = _run(args, args.method, matrix, key, split)
    _emit(formats.dumps_report(_report(args, matrix, key, split, outcome)), args.output)


def compare_table(rows: Sequence[tuple[str, float]]) -> str:
    width = max(len(methods.TITLES[m]) for m, _ in rows)
    lines = [f"{'Method':<{width}}  {'Group':<12}  {'Accuracy (%)':>12}"]
    lines.append("-" * len(lines[0]))
    for m, acc in rows:
        group = "supervised" if m in methods.SUPERVISED else "unsupervised"
        lines.append(f"{methods.TITLES[m]:<{width}}  {group:<12}  {100 * acc:>12.4f}")
    return "\n".join(lines) + "\n"


def cmd_compare(args) -> None:
    matrix, key = _load(args)
    if key is None:
        raise UsageError("compare needs --key")
    split = _split(args, matrix, key)
    if split is None or not split.train or not split.test:
        raise UsageError("compare needs a non-empty training and test split")
    rows = []
    for m in methods.METHODS:
        outcome = _run(args, m, matrix, key, split)
        rows.append((m, accuracy(outcome.result, key, split.test)))
    _emit(compare_table(rows), args.output)


def cmd_cv(args) -> None:
    if args.method not in methods.PENALTY:
        raise UsageError("cv applies to --method svm or professional")
    matrix, key = _load(args)
    split = _split(args, matrix, key)
    if split is None or len(split.train) < 2:
        raise UsageError("cv needs --key and at least two training queries")
    penalty = methods.PENALTY[args.method]
    grid = _grid(args, args.method) or LambdaGrid.default(penalty)
    if args.positive:
        positives = [args.positive]
    elif matrix.alphabet.size == 2:
        positives = [matrix.alphabet.labels[1]]
    else:
        positives = list(matrix.alphabet.labels)
    lines = [f"{'positive':<16}  {'lambda':>10}  {'loocv_error':>11}"]
    for pos in positives:
        report = loocv_select(matrix, key, split.train, penalty, grid, pos)
        for lam, err in report.per_lambda_error.items():
            mark = "  *" if lam == report.chosen else ""
            lines.append(f"{pos:<16}  {lam:>10.4f}  {err:>11.4f}{mark}")
    _emit("\n".join(lines) + "\n", args.output)


def cmd_simulate(args) -> None:
    if bool(args.preset) == bool(args.scenario):
        raise UsageError("give exactly one of --preset or --scenario")
    if not args.output or not args.key_output:
        raise UsageError("simulate needs --output and --key-output")
    if args.preset:
        matrix, key = PRESETS[args.preset](args.seed)
    else:
        try:
            scenario = formats.load_scenario(args.scenario, args.seed)
        except OSError as exc:
            raise formats.ConfigError(str(exc)) from None
        matrix, key = simulate.generate(scenario)
    names = ObservationMatrix(
        matrix.codes,
        matrix.alphabet,
        tuple(f"a{i}" for i in range(matrix.num_agents)),
        tuple(f"q{j}" for j in range(matrix.num_queries)),
    )
    formats.save_observations(names, args.output)
    formats.save_key(key, names, args.key_output)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crowdtrust", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def data_args(p, method_choices):
        p.add_argument("observations", help="CSV with header query_id,agent_id,label")
        p.add_argument("--key", help="CSV with header query_id,label")
        if method_choices:
            p.add_argument("--method", required=True, choices=method_choices)
        p.add_argument("--train-count", type=int)
        p.add_argument("--train-ids", help="comma-separated query ids used for training")
        p.add_argument("--lambda", dest="lam", type=float, help="fixed lambda (skips LOOCV)")
        p.add_argument("--eta", type=float, help="exponential-weights learning rate")
        p.add_argument("--grid", help='lambda grid: "0,5,10" or "lo:hi:count"')
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--output", help="write here instead of stdout")

    data_args(sub.add_parser("fuse", help="run one method and write a JSON report"), methods.METHODS)
    data_args(sub.add_parser("compare", help="accuracy table for all six methods"), None)
    cv = sub.add_parser("cv", help="print the LOOCV error path")
    data_args(cv, ("svm", "professional"))
    cv.add_argument("--positive", help="class treated as positive (default: all classes)")

    sim = sub.add_parser("simulate", help="generate a synthetic crowd")
    sim.add_argument("--preset", choices=sorted(PRESETS))
    sim.add_argument("--scenario", help="key = value scenario file")
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--output", help="observations CSV to write")
    sim.add_argument("--key-output", help="answer-key CSV to write")
    return parser


COMMANDS = {"fuse": cmd_fuse, "compare": cmd_compare, "cv": cmd_cv, "simulate": cmd_simulate}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "simulate" and args.seed is None and args.preset:
        args.seed = 0
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"crowdtrust: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except formats.LoadError as exc:
        print(f"crowdtrust: load error: {exc}", file=sys.stderr)
        return EXIT_LOAD
    except formats.ConfigError as exc:
        print(f"crowdtrust: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericError, FloatingPointError) as exc:
        print(f"crowdtrust: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


if __name__ == "__main__":
    sys.exit(main())
