"""``hdformula`` command-line front end.

Exit codes: 0 success, 2 LaTeX parse error, 3 corpus/schema error,
4 infeasible specification, 5 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from contextlib import contextmanager
from pathlib import Path

from . import __version__
from .errors import (
    EmptyCorpus,
    HDFormulaError,
    InfeasibleCoverage,
    InfeasibleSpec,
    LatexError,
    NonFiniteLoss,
    NonTerminatingRule,
    SchemaError,
)
from .latex import FormulaAst, children, parse_latex

log = logging.getLogger("hdformula")

DEFAULT_SEED = 20240917

EXIT_OK, EXIT_PARSE, EXIT_CORPUS, EXIT_INFEASIBLE, EXIT_NUMERIC = 0, 2, 3, 4, 5


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


@contextmanager
def _output(path):
    """Yield a text stream: the named file, or stdout for None / ``-``."""
    if path is None or str(path) == "-":
        yield sys.stdout
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        yield fh


def _node_obj(node):
    name = type(node).__name__
    obj = {"type": name}
    for attr in ("symbol", "name", "style"):
        if hasattr(node, attr):
            obj[attr] = getattr(node, attr)
    if name == "Environment":
        obj["rows"] = [[_node_obj(cell) for cell in row] for row in node.rows]
        return obj
    if name == "Script":
        obj["base"] = _node_obj(node.base)
        obj["sub"] = None if node.sub is None else _node_obj(node.sub)
        obj["sup"] = None if node.sup is None else _node_obj(node.sup)
        return obj
    kids = children(node)
    if kids:
        obj["children"] = [None if k is None else _node_obj(k) for k in kids]
    return obj


def _tree_lines(node, depth=0):
    label = type(node).__name__
    for attr in ("symbol", "name"):
        if hasattr(node, attr):
            label += f" {getattr(node, attr)!r}"
    yield "  " * depth + label
    for kid in children(node):
        if kid is None:
            continue
        if isinstance(kid, tuple):  # environment row
            yield "  " * (depth + 1) + "Row"
            for cell in kid:
                yield from _tree_lines(cell, depth + 2)
        else:
            yield from _tree_lines(kid, depth + 1)


def _load_corpus(path, lenient):
    from .corpus import load_corpus

    records, problems = load_corpus(path)
    for p in problems:
        log.warning("%s: %s", path, p)
    if problems and not lenient:
        raise CliError(EXIT_CORPUS, f"{path}: {len(problems)} bad line(s), first: {problems[0]}")
    if not records:
        raise CliError(EXIT_CORPUS, f"{path}: corpus is empty")
    return records


def _seed(args):
    log.info("seed=%d", args.seed)
    print(f"# seed={args.seed}", file=sys.stderr)
    return args.seed


# ---------------------------------------------------------------------------
# subcommands


def cmd_parse(args):
    source = Path(args.input).read_text(encoding="utf-8").rstrip("\n") if args.input else args.expr
    ast: FormulaAst = parse_latex(source)
    for w in ast.warnings:
        log.warning("%s", w)
    if args.json:
        print(json.dumps({
            "level": ast.level,
            "char_count": ast.char_count,
            "line_count": ast.line_count,
            "ast": _node_obj(ast.root),
            "warnings": list(ast.warnings),
        }, ensure_ascii=False))
    else:
        print(f"level={ast.level} chars={ast.char_count} lines={ast.line_count}")
        for line in _tree_lines(ast.root):
            print(line)
    return EXIT_OK


def cmd_stats(args):
    from .corpus import stat_table

    records = _load_corpus(args.corpus, args.lenient)
    table = stat_table(records)
    for rec_id, level, lines in table.overflow:
        log.warning("record %s (level %d, %d lines) falls outside the table", rec_id, level, lines)
    with _output(args.csv) as fh:
        fh.write(table.to_csv())
    print(table.grid(), file=sys.stderr)
    if args.figure:
        from .plotting import plot_stat_table

        log.info("figure: %s", plot_stat_table(table, args.figure))
    return EXIT_OK


def cmd_decompose(args):
    from .subformula import SamplePlan, derive_seed, emit_render_manifest, make_training_instance

    seed = _seed(args)
    records = sorted(_load_corpus(args.corpus, args.lenient), key=lambda r: r.id)
    plan = SamplePlan(args.mode, args.n, args.theta, args.lambda_, seed)
    flagged = 0
    with _output(args.manifests) as fh:
        for rec in records:
            inst_seed = derive_seed(seed, rec.id)
            inst = make_training_instance(parse_latex(rec.latex), plan.with_seed(inst_seed))
            obj = emit_render_manifest(inst, rec.id).to_dict()
            obj["seed"] = inst_seed
            obj["part_kind"] = None if inst.part_kind is None else inst.part_kind.value
            obj["coverage_fallback"] = inst.coverage_fallback
            obj["crop_fallback"] = inst.crop_fallback
            flagged += inst.coverage_fallback
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
    log.info("%d instances, %d with coverage fallback", len(records), flagged)
    return EXIT_OK


def cmd_eval(args):
    from .fair_eval import EquivalenceRuleSet, EvalMode, evaluate_corpus, load_eval_samples, load_rules

    rules = load_rules(args.rules) if args.rules else EquivalenceRuleSet()
    samples, problems = load_eval_samples(args.pred, lenient=args.lenient)
    for p in problems:
        log.warning("%s: %s", args.pred, p)
    modes = {
        "fair": (EvalMode.FAIR,),
        "nonfair": (EvalMode.NONFAIR,),
        "both": (EvalMode.NONFAIR, EvalMode.FAIR),
    }[args.which]
    report = evaluate_corpus(samples, rules, modes)
    with _output(args.report) as fh:
        fh.write(report.to_json() + "\n")
    for mode, agg in report.aggregate.items():
        print(f"{mode}: CR={agg['cr']:.6f} AED={agg['aed']:.6f} BLEU={agg['bleu']:.6f}", file=sys.stderr)
    if args.figure:
        from .plotting import plot_eval_aggregate

        log.info("figure: %s", plot_eval_aggregate(report.aggregate, args.figure))
    return EXIT_OK


def cmd_synth(args):
    from .corpus import synth_corpus

    seed = _seed(args)
    records = synth_corpus(args.count, (args.level,), (args.lines,), seed, args.max_chars)
    with _output(args.out) as fh:
        for rec in records:
            fh.write(rec.to_json() + "\n")
    return EXIT_OK


def cmd_toy_train(args):
    from .fusion import FusionConfig, curve_csv, save_checkpoint, toy_train
    from .subformula import CropMode, SamplePlan

    seed = _seed(args)
    records = _load_corpus(args.corpus, args.lenient)
    modes = list(CropMode) if args.mode == "all" else [CropMode(args.mode)]
    config = FusionConfig(args.alpha, args.n)
    curves, rows = {}, []
    for mode in modes:
        plan = SamplePlan(mode, args.n, rng_seed=seed)
        result = toy_train(records, plan, config, args.epochs, args.lr, args.dim, args.batch_size, seed)
        curves[mode.value] = result.curve
        rows.extend(result.curve)
        first, last = result.curve[0].total, result.curve[-1].total
        print(f"{mode.value}: epoch-1 loss {first:.4f}, final {last:.4f} ({last / first:.3f}x)",
              file=sys.stderr)
        if args.checkpoint:
            base = Path(args.checkpoint)
            path = base if len(modes) == 1 else base.with_name(f"{base.stem}-{mode.value}{base.suffix}")
            save_checkpoint(result.params, result.vocab, path)
    with _output(args.curve) as fh:
        fh.write(curve_csv(rows))
    if len(modes) > 1:
        ranking = sorted(curves, key=lambda m: curves[m][-1].total)
        print("final-loss ordering (low to high): " + " < ".join(ranking), file=sys.stderr)
    if args.figure:
        from .plotting import plot_loss_curves

        log.info("figure: %s", plot_loss_curves(curves, args.figure))
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    from .subformula import DEFAULT_LAMBDA, DEFAULT_N, DEFAULT_THETA, CropMode

    parser = argparse.ArgumentParser(prog="hdformula", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default="WARNING",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True)

    def seeded(p):
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)

    def lenient(p):
        p.add_argument("--lenient", action="store_true", help="skip malformed lines with a warning")

    p = sub.add_parser("parse", help="parse one formula and report level, chars and lines")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="file holding one formula")
    src.add_argument("--expr", help="formula source")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("stats", help="level/line/domain count table of a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--csv", help="output CSV (default stdout)")
    p.add_argument("--figure", help="also render a heat map to this image file")
    lenient(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("decompose", help="emit render manifests for training instances")
    p.add_argument("--corpus", required=True)
    p.add_argument("--mode", default=CropMode.HYBRID.value, choices=[m.value for m in CropMode])
    p.add_argument("--n", type=int, default=DEFAULT_N)
    p.add_argument("--theta", type=float, default=DEFAULT_THETA)
    p.add_argument("--lambda", dest="lambda_", type=float, default=DEFAULT_LAMBDA)
    p.add_argument("--manifests", help="output JSONL (default stdout)")
    seeded(p)
    lenient(p)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("eval", help="fair and non-fair evaluation of predictions")
    p.add_argument("--pred", required=True, help="JSONL with id, prediction, labels")
    p.add_argument("--rules", help="JSON rule file (default: builtin rules)")
    which = p.add_mutually_exclusive_group()
    which.add_argument("--fair", dest="which", action="store_const", const="fair")
    which.add_argument("--nonfair", dest="which", action="store_const", const="nonfair")
    which.add_argument("--both", dest="which", action="store_const", const="both")
    p.set_defaults(which="both")
    p.add_argument("--report", help="output JSON (default stdout)")
    p.add_argument("--figure", help="also render aggregate bars to this image file")
    lenient(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="synthesize a corpus at a fixed level and line count")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--lines", type=int, default=1)
    p.add_argument("--max-chars", type=int, default=400)
    p.add_argument("--out", help="output JSONL (default stdout)")
    seeded(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("toy-train", help="train the toy fusion model and write the loss curve")
    p.add_argument("--corpus", required=True)
    p.add_argument("--mode", default=CropMode.HYBRID.value,
                   choices=[m.value for m in CropMode] + ["all"])
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--alpha", type=float, default=0.2)
    p.add_argument("--n", type=int, default=DEFAULT_N)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--batch-size", type=int, default=2)
    p.add_argument("--curve", help="output CSV (default stdout)")
    p.add_argument("--checkpoint", help="write final parameters here (+ .json sidecar)")
    p.add_argument("--figure", help="also plot the loss curves to this image file")
    seeded(p)
    lenient(p)
    p.set_defaults(func=cmd_toy_train)
    return parser


def _exit_code(exc) -> int:
    if isinstance(exc, LatexError):
        return EXIT_PARSE
    if isinstance(exc, (SchemaError, EmptyCorpus, NonTerminatingRule)):
        return EXIT_CORPUS
    if isinstance(exc, (InfeasibleSpec, InfeasibleCoverage)):
        return EXIT_INFEASIBLE
    if isinstance(exc, NonFiniteLoss):
        return EXIT_NUMERIC
    return 1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except HDFormulaError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return _exit_code(exc)
    except BrokenPipeError:
        # reader went away (e.g. piped into head); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CORPUS if isinstance(exc, OSError) else 1


if __name__ == "__main__":
    sys.exit(main())
