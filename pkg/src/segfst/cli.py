"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 scorer failure.
Set ``SEGFST_LOG`` (e.g. ``INFO`` or ``DEBUG``) for diagnostics on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, Sequence, TextIO

from . import __version__
from .constraints import compile_window_constraint
from .decoding import DecodeConfig, Mode
from .errors import NotWellformed, ScorerUnavailable, SegfstError
from .evaluation import evaluate, is_sentence_final, oracle_segment, reference_boundaries, wellformed_rate
from .fst import DELIMITER_SYMBOL, SymbolTable, dump
from .longform import PassageResult, WindowSpec, make_windows, segment_passage_detailed
from .scoring import check_scorer_spec, load_scorer, train_ngram
from .segmentation import Segmentation, format_delimited, split_delimited, tokenize_delimited

log = logging.getLogger("segfst")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_SCORER = 0, 1, 2, 3


class DataError(Exception):
    """Bad input data; reported with exit code 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits 2 by default
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {value}")
    return value


def _nonneg_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {value}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {value}")
    return value


def _add_window_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("-w", "--window-size", type=_positive_int, default=40)
    p.add_argument("-b", "--context", type=_nonneg_int, default=10, help="total context (overlap) size")
    p.add_argument("-r", "--right-context", type=_nonneg_int, default=5)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="segfst", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("segment", help="segment one passage per input line")
    p.add_argument("input", help="UTF-8 text, one whitespace-tokenised passage per line ('-' for stdin)")
    p.add_argument("-o", "--output", default="-")
    _add_window_flags(p)
    p.add_argument("--beam", type=_positive_int, default=4)
    p.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.FST.value)
    p.add_argument("--scorer", required=True, help="ngram:<model.json> | external:<command> | mock:<name>")
    p.add_argument("--copy-weight", type=float, default=0.0, help="copy bias for n-gram scorers")
    p.add_argument("--timeout", type=_positive_float, default=30.0, help="external scorer timeout (s)")
    p.add_argument("--dump-fst", metavar="PATH", help="write every window's constraint automaton here")
    p.add_argument("--report", metavar="JSON", help="write decoding diagnostics here")
    p.add_argument("--seed", type=int, default=0, help="seed for randomised mock scorers")
    p.add_argument("--jobs", type=_positive_int, default=1, help="passages decoded in parallel")

    p = sub.add_parser("evaluate", help="score predicted segmentations against references")
    p.add_argument("pred")
    p.add_argument("gold")
    p.add_argument("--unit", choices=["boundary", "segment"], default="boundary")
    p.add_argument("-o", "--output", default="-", help="report JSON (default stdout)")
    p.add_argument("--per-passage", metavar="CSV")
    p.add_argument("--histogram-csv", metavar="CSV")
    p.add_argument("--figures", metavar="DIR", help="render segment-length histograms into DIR")

    p = sub.add_parser("oracle", help="project reference sentence boundaries onto ASR transcripts")
    p.add_argument("ref", help="punctuated reference, one passage per line")
    p.add_argument("asr", help="ASR transcript, line-aligned with ref")
    p.add_argument("-o", "--output", default="-")
    p.add_argument("--gold-out", metavar="PATH", help="also write the cleaned, delimited reference")
    p.add_argument("--abbreviations", metavar="FILE", help="one non-terminal token per line, e.g. 'st.'")

    p = sub.add_parser("train-scorer", help="train an n-gram scorer on delimited text")
    p.add_argument("corpus", help="one passage per line with <SENT> between sentences")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--order", type=_positive_int, default=3)
    p.add_argument("-k", type=_positive_float, default=0.1)

    p = sub.add_parser("windows", help="print the sliding-window plan for a passage length")
    p.add_argument("n", type=_positive_int)
    p.add_argument("w", type=_positive_int, nargs="?", default=40)
    p.add_argument("b", type=_nonneg_int, nargs="?", default=10)
    p.add_argument("r", type=_nonneg_int, nargs="?", default=5)

    p = sub.add_parser("synth", help="write a synthetic corpus for demos")
    p.add_argument("prefix", help="output path prefix")
    p.add_argument("-n", "--passages", type=_positive_int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--asr-noise", type=float, default=0.05)
    return parser


# -- I/O helpers ----------------------------------------------------------------


@contextmanager
def _open_out(path: str) -> Iterator[TextIO]:
    if path == "-":
        yield sys.stdout
        sys.stdout.flush()
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            yield fh


def _read_lines(path: str) -> list[str]:
    if path == "-":
        return sys.stdin.read().splitlines()
    return Path(path).read_text(encoding="utf-8").splitlines()


def _read_aligned(a: str, b: str) -> tuple[list[str], list[str]]:
    left, right = _read_lines(a), _read_lines(b)
    if len(left) != len(right):
        raise DataError(f"{a} has {len(left)} lines but {b} has {len(right)}")
    return left, right


def _parse_delimited(line: str, where: str) -> tuple[list[str], Segmentation]:
    try:
        return split_delimited(tokenize_delimited(line))
    except NotWellformed as exc:
        raise DataError(f"{where}: malformed delimiters ({exc})") from exc


def _warn_style(tokens: Sequence[str], lineno: int) -> None:
    odd = [t for t in tokens if t != t.lower() or not any(c.isalnum() for c in t) or t[-1] in ".,!?;:"]
    if odd:
        log.warning("line %d: expected lowercase unpunctuated tokens, found %s", lineno, odd[:5])


# -- commands -------------------------------------------------------------------


def cmd_segment(args: argparse.Namespace) -> int:
    spec = WindowSpec(args.window_size, args.context, args.right_context)
    cfg = DecodeConfig(args.beam, Mode(args.mode))
    lines = _read_lines(args.input)
    if not any(line.strip() for line in lines):
        log.warning("input %s is empty; nothing to segment", args.input)
        with _open_out(args.output):
            pass
        return EXIT_OK

    scorer = load_scorer(args.scorer, seed=args.seed, timeout=args.timeout, copy_weight=args.copy_weight)
    passages = []
    for lineno, line in enumerate(lines, 1):
        tokens = line.split()
        if DELIMITER_SYMBOL in tokens:
            raise DataError(f"line {lineno}: input already contains {DELIMITER_SYMBOL}")
        _warn_style(tokens, lineno)
        passages.append(tokens)

    def run(item: tuple[int, list[str]]) -> PassageResult | None:
        lineno, tokens = item
        if not tokens:
            return None
        try:
            return segment_passage_detailed(tokens, scorer, cfg, spec)
        except SegfstError as exc:
            raise DataError(f"line {lineno}: {exc}") from exc

    items = list(enumerate(passages, 1))
    if args.jobs > 1 and getattr(scorer, "shareable", False):
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(run, items))
    else:
        results = [run(item) for item in items]
    close = getattr(scorer, "close", None)
    if close:
        close()

    with _open_out(args.output) as out:
        for tokens, res in zip(passages, results):
            out.write((format_delimited(tokens, res.segmentation) if res else "") + "\n")

    if args.dump_fst:
        with _open_out(args.dump_fst) as fh:
            for lineno, tokens in items:
                if not tokens:
                    continue
                for k, win in enumerate(make_windows(len(tokens), spec)):
                    table = SymbolTable()
                    fsa = compile_window_constraint(tokens[win.start:win.end], table)
                    fh.write(f"# passage {lineno} window {k} span [{win.start},{win.end})\n")
                    fh.write(dump(fsa, table))

    decodes = [d for r in results if r for d in r.decodes]
    log.info("segmented %d passages in %d windows", sum(r is not None for r in results), len(decodes))
    if args.report:
        report = {
            "passages": sum(r is not None for r in results),
            "windows": len(decodes),
            "mode": cfg.mode.value,
            "beam": cfg.beam_size,
            "window_spec": {"w": spec.w, "b": spec.b, "r": spec.r},
            "wellformed_rate": wellformed_rate(d.report for d in decodes),
            "illformed_reasons": sorted({d.report.reason for d in decodes if d.report.reason}),
        }
        with _open_out(args.report) as fh:
            fh.write(json.dumps(report, indent=2) + "\n")
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    pred_lines, gold_lines = _read_aligned(args.pred, args.gold)
    preds, golds = [], []
    for lineno, (pl, gl) in enumerate(zip(pred_lines, gold_lines), 1):
        if not pl.strip() and not gl.strip():
            continue
        ptoks, pseg = _parse_delimited(pl, f"{args.pred} line {lineno}")
        gtoks, gseg = _parse_delimited(gl, f"{args.gold} line {lineno}")
        if ptoks != gtoks:
            raise DataError(f"line {lineno}: predicted tokens differ from the reference tokens")
        preds.append(pseg)
        golds.append(gseg)
    report = evaluate(preds, golds, unit=args.unit)
    with _open_out(args.output) as out:
        out.write(report.to_json() + "\n")
    if args.per_passage:
        with _open_out(args.per_passage) as fh:
            fh.write(report.per_passage_csv())
    if args.histogram_csv:
        with _open_out(args.histogram_csv) as fh:
            fh.write(report.histogram_csv())
    if args.figures:
        from .plotting import plot_length_histograms

        path = plot_length_histograms(
            {"predicted": report.length_histogram, "reference": report.reference_length_histogram},
            Path(args.figures) / "length_histogram.png",
        )
        log.info("wrote %s", path)
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace) -> int:
    ref_lines, asr_lines = _read_aligned(args.ref, args.asr)
    abbrev: list[str] = []
    if args.abbreviations:
        abbrev = [a.strip() for a in _read_lines(args.abbreviations) if a.strip()]
    abbrev_set = frozenset(a.lower() for a in abbrev)
    outputs, golds = [], []
    for lineno, (ref, asr) in enumerate(zip(ref_lines, asr_lines), 1):
        rtoks, atoks = ref.split(), asr.split()
        clean, gold = reference_boundaries(rtoks, abbrev)
        golds.append(format_delimited(clean, gold) if clean else "")
        if not atoks:
            outputs.append("")
            continue
        if rtoks and not any(is_sentence_final(t, abbrev_set) for t in rtoks):
            log.warning("line %d: reference has no terminal punctuation", lineno)
        seg = oracle_segment(rtoks, atoks, abbrev)
        outputs.append(format_delimited(atoks, seg))
    with _open_out(args.output) as out:
        out.writelines(line + "\n" for line in outputs)
    if args.gold_out:
        with _open_out(args.gold_out) as fh:
            fh.writelines(line + "\n" for line in golds)
    return EXIT_OK


def cmd_train_scorer(args: argparse.Namespace) -> int:
    corpus = []
    for lineno, line in enumerate(_read_lines(args.corpus), 1):
        if line.strip():
            _parse_delimited(line, f"{args.corpus} line {lineno}")
            corpus.append(tokenize_delimited(line))
    model = train_ngram(corpus, order=args.order, k=args.k)
    model.save(args.output)
    log.info("trained order-%d model with %d types on %d passages", args.order, len(model.vocab), len(corpus))
    return EXIT_OK


def cmd_windows(args: argparse.Namespace) -> int:
    spec = WindowSpec(args.w, args.b, args.r)
    print("window\tspan_start\tspan_end\tadopt_start\tadopt_end")
    for k, win in enumerate(make_windows(args.n, spec)):
        print(f"{k}\t{win.start}\t{win.end}\t{win.adopt_start}\t{win.adopt_end}")
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    import random

    from .synthetic import add_asr_noise, make_corpus

    corpus = make_corpus(args.passages, seed=args.seed)
    rng = random.Random(args.seed + 1)
    files = {
        "gold.txt": [" ".join(p.delimited()) for p in corpus],
        "input.txt": [" ".join(p.tokens) for p in corpus],
        "ref.txt": [" ".join(p.punctuated()) for p in corpus],
        "asr.txt": [" ".join(add_asr_noise(p.tokens, rng, args.asr_noise)) for p in corpus],
    }
    for suffix, lines in files.items():
        with _open_out(f"{args.prefix}{suffix}") as fh:
            fh.writelines(line + "\n" for line in lines)
    return EXIT_OK


COMMANDS = {
    "segment": cmd_segment,
    "evaluate": cmd_evaluate,
    "oracle": cmd_oracle,
    "train-scorer": cmd_train_scorer,
    "windows": cmd_windows,
    "synth": cmd_synth,
}


def _setup_logging() -> None:
    level = os.environ.get("SEGFST_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def main(argv: Sequence[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "scorer", None):
        try:
            check_scorer_spec(args.scorer)
        except ValueError as exc:
            parser.error(str(exc))
    if args.command == "segment" or args.command == "windows":
        try:
            if args.command == "segment":
                WindowSpec(args.window_size, args.context, args.right_context)
            else:
                WindowSpec(args.w, args.b, args.r)
        except SegfstError as exc:
            parser.error(str(exc))
    try:
        return COMMANDS[args.command](args)
    except (DataError, SegfstError, OSError, ValueError, UnicodeDecodeError) as exc:
        if _caused_by(exc, ScorerUnavailable):
            log.error("scorer failure: %s", exc)
            return EXIT_SCORER
        log.error("%s", exc)
        return EXIT_DATA


def _caused_by(exc: BaseException | None, kind: type) -> bool:
    while exc is not None:
        if isinstance(exc, kind):
            return True
        exc = exc.__cause__
    return False


if __name__ == "__main__":
    sys.exit(main())
