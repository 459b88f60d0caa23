"""Command-line entry point: parse/DFG inspection, corpus generation,
oracle ground truth, constrained slicing, TSED, and evaluation.

Exit codes: 0 success, 1 input error, 2 internal invariant violation.
Machine-readable output is JSON/JSONL on stdout; human tables go to stderr
or behind --table. SLICEKIT_SEED provides the default seed.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import corpusgen
from .decode import DecodeConfig, run_beam_search
from .evaluate import evaluate as evaluate_files, load_jsonl
from .dfg import build_dfg
from .oracle import (
    SliceQuery,
    dataset_record,
    default_criteria,
    oracle_slice,
)
from .scorers import MockCopyScorer, ProtocolScorer
from .tokenizers import CharTokenizer
from .tsedmod import tsed
from .units import parse_unit

LANG_SUFFIX = {".java": "java", ".py": "python"}


class InputError(ValueError):
    pass


def _load_sources(path: Path, lang: str | None) -> list[tuple[str, str, str]]:
    """Yield (id, lang, text) from a source directory or a single file.

    ``lang`` filters a directory to that language's files; for a single file
    it overrides suffix inference.
    """
    if path.is_file():
        files = [path]
    elif path.is_dir():
        files = sorted(
            p
            for p in path.iterdir()
            if p.suffix in LANG_SUFFIX and (lang is None or LANG_SUFFIX[p.suffix] == lang)
        )
        lang = None
    else:
        raise InputError(f"no such input: {path}")
    out = []
    for f in files:
        flang = lang or LANG_SUFFIX.get(f.suffix)
        if flang is None:
            raise InputError(f"cannot infer language of {f}")
        out.append((f.stem, flang, f.read_text().replace("\r\n", "\n")))
    if not out:
        raise InputError(f"no matching .java/.py sources under {path}")
    return out


def _cmd_dfg(args) -> int:
    for _, lang, text in _load_sources(Path(args.input), args.lang):
        unit, tree = parse_unit(text, lang)
        print(build_dfg(unit, tree).to_json())
    return 0


def _corpus_one(payload: dict) -> str:
    item_id, lang, text, task, mask_ratio, max_swaps, seed = (
        payload["id"],
        payload["lang"],
        payload["text"],
        payload["task"],
        payload["mask_ratio"],
        payload["max_swaps"],
        payload["seed"],
    )
    rng = random.Random(corpusgen.derive_seed(seed, item_id))
    unit, tree = parse_unit(text, lang)
    graph = build_dfg(unit, tree)
    if task == "perm":
        ex = corpusgen.permute_statements(unit, graph, max_swaps=max_swaps, rng=rng)
        return corpusgen.corpus_record(
            item_id, lang, "perm", ex.original, ex.permuted, {"swaps": [list(s) for s in ex.swaps]}
        )
    if task == "span":
        ex = corpusgen.span_corrupt(unit, graph, mask_ratio=mask_ratio, rng=rng)
        meta = {"units": [{"kind": u.kind, "span": list(u.span)} for u in ex.units],
                "mask_ratio_used": round(ex.mask_ratio_used, 6)}
        return corpusgen.corpus_record(item_id, lang, "span", ex.masked_input, ex.target, meta)
    # sft: one record per default criterion
    records = []
    for var, line in default_criteria(unit, graph):
        query = SliceQuery(unit=unit, criterion_var=var, criterion_line=line)
        gold = oracle_slice(query, graph)
        ex = corpusgen.format_sft(query, gold)
        records.append(
            corpusgen.corpus_record(
                f"{item_id}:{var}@{line}",
                lang,
                "sft",
                ex.input_text,
                ex.target_text,
                {"criterion": {"var": var, "line": line}},
            )
        )
    return "\n".join(records)


def _cmd_corpus(args) -> int:
    sources = _load_sources(Path(args.input), args.lang)
    payloads = [
        {
            "id": sid,
            "lang": lang,
            "text": text,
            "task": args.task,
            "mask_ratio": args.mask_ratio,
            "max_swaps": args.max_swaps,
            "seed": args.seed,
        }
        for sid, lang, text in sources
    ]
    records = _map_jobs(_corpus_one, payloads, args.jobs)
    _write_lines(args.out, [r for r in records if r])
    return 0


def _oracle_one(payload: dict) -> str:
    item_id, lang, text = payload["id"], payload["lang"], payload["text"]
    unit, tree = parse_unit(text, lang)
    graph = build_dfg(unit, tree)
    records = []
    for var, line in default_criteria(unit, graph):
        query = SliceQuery(unit=unit, criterion_var=var, criterion_line=line)
        sl = oracle_slice(query, graph)
        records.append(dataset_record(f"{item_id}:{var}@{line}", lang, text, query, sl))
    return "\n".join(records)


def _cmd_oracle(args) -> int:
    sources = _load_sources(Path(args.input), args.lang)
    payloads = [{"id": s, "lang": l, "text": t} for s, l, t in sources]
    records = _map_jobs(_oracle_one, payloads, args.jobs)
    _write_lines(args.out, [r for r in records if r])
    return 0


def _make_scorer(spec: str, tokenizer, item: dict, default_seed: int = 0):
    if spec.startswith("proto://") or spec.startswith("stdio:"):
        return ProtocolScorer(spec)
    if not spec.startswith("mock:"):
        raise InputError(f"unsupported scorer spec: {spec!r}")
    params = spec[len("mock:") :].split(",")
    kind = params[0]
    opts = dict(p.split("=", 1) for p in params[1:] if "=" in p)
    noise = float(opts.get("noise", "0"))
    noise_kind = opts.get("kind", "out_of_input")
    seed = int(opts.get("seed", str(default_seed)))
    if kind != "gold":
        raise InputError(f"unknown mock scorer: {kind!r}")
    gold = slice_from_lines_from_item(item)
    target_text = "\n".join(f"{n}: {t}" for n, t in zip(gold["lines"], gold["texts"]))
    target_ids = tokenizer.encode(target_text) + [tokenizer.eos_id]
    return MockCopyScorer(
        target_ids,
        tokenizer.vocab_size,
        tokenizer.eos_id,
        noise=noise,
        noise_kind=noise_kind,
        seed=seed,
        special_ids=tokenizer.marker_ids + (tokenizer.pad_id,),
    )


def slice_from_lines_from_item(item: dict) -> dict:
    lines = item.get("slice_lines")
    if lines is None:
        raise InputError(f"item {item.get('id')} has no gold slice for the mock scorer")
    texts = item["slice_text"].split("\n") if item.get("slice_text") else []
    return {"lines": lines, "texts": texts}


_WORKER_PROTO: dict[str, ProtocolScorer] = {}


def _slice_one(payload: dict) -> str:
    item = payload["item"]
    spec = payload["scorer"]
    tokenizer = CharTokenizer()
    query = SliceQuery.from_source(
        item["source"], item["lang"], item["criterion_var"], item["criterion_line"]
    )
    if spec.startswith("proto://"):
        scorer = _WORKER_PROTO.get(spec)
        if scorer is None:
            scorer = _WORKER_PROTO.setdefault(spec, ProtocolScorer(spec))
    else:
        scorer = _make_scorer(spec, tokenizer, item, payload["seed"])
    outcome = run_beam_search(query, scorer, tokenizer, DecodeConfig(**payload["cfg"]))
    sl = outcome.slice
    return json.dumps(
        {
            "id": item["id"],
            "slice_lines": list(sl.line_numbers),
            "slice_text": sl.text,
            "degraded": sl.degraded,
        },
        sort_keys=True,
    )


def _cmd_slice(args) -> int:
    items = load_jsonl(args.input)
    cfg = dict(
        beam_size=args.beam,
        max_len=args.max_len,
        tsed_prune=not args.no_tsed,
        lexical_mask=not args.no_lexical,
        length_penalty=args.length_penalty,
    )
    if args.jobs > 1 and args.scorer.startswith("stdio:"):
        raise InputError("stdio scorers are serial; use a proto:// endpoint with --jobs")
    payloads = [
        {"item": item, "scorer": args.scorer, "cfg": cfg, "seed": args.seed}
        for item in sorted(items, key=lambda i: i["id"])
    ]
    try:
        records = _map_jobs(_slice_one, payloads, args.jobs)
    finally:
        for client in _WORKER_PROTO.values():
            client.shutdown()
        _WORKER_PROTO.clear()
    _write_lines(args.out, records)
    return 0


def _cmd_tsed(args) -> int:
    a = Path(args.file_a).read_text().replace("\r\n", "\n")
    b = Path(args.file_b).read_text().replace("\r\n", "\n")
    score = tsed(a, b, args.lang, args.label_mode)
    print(json.dumps(score.as_dict(), sort_keys=True))
    return 0


def _cmd_eval(args) -> int:
    report = evaluate_files(args.gold, args.pred, jobs=args.jobs)
    payload = report.to_json()
    if args.out:
        Path(args.out).write_text(payload + "\n")
    else:
        print(payload)
    if args.table:
        print(report.table(), file=sys.stderr)
    return 0


def _cmd_demo(args) -> int:
    from .demo import run_demo

    return run_demo(verbose=not args.quiet)


def _map_jobs(fn, payloads: list[dict], jobs: int) -> list[str]:
    if jobs <= 1:
        return [fn(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, payloads))


def _write_lines(out_path: str | None, lines: list[str]) -> None:
    body = "\n".join(lines) + ("\n" if lines else "")
    if out_path:
        Path(out_path).write_text(body)
    else:
        sys.stdout.write(body)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slicekit", description=__doc__)
    default_seed = int(os.environ.get("SLICEKIT_SEED", "0"))
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dfg", help="print the data-flow graph of a source file as JSON")
    p.add_argument("--lang", choices=("java", "python"))
    p.add_argument("--in", dest="input", required=True)
    p.set_defaults(fn=_cmd_dfg)

    p = sub.add_parser("corpus", help="generate pretraining/SFT corpora as JSONL")
    p.add_argument("task", choices=("perm", "span", "sft"))
    p.add_argument("--lang", choices=("java", "python"))
    p.add_argument("--mask-ratio", type=float, default=0.25)
    p.add_argument("--max-swaps", type=int, default=3)
    p.add_argument("--seed", type=int, default=default_seed)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_corpus)

    p = sub.add_parser("oracle", help="compute ground-truth slices for source files")
    p.add_argument("--lang", choices=("java", "python"))
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_oracle)

    p = sub.add_parser("slice", help="decode slices for a dataset with a scorer")
    p.add_argument("--scorer", required=True, help="mock:SPEC | proto://HOST:PORT | stdio:CMD")
    p.add_argument("--beam", type=int, default=3)
    p.add_argument("--max-len", type=int, default=512)
    p.add_argument("--no-lexical", action="store_true")
    p.add_argument("--no-tsed", action="store_true")
    p.add_argument("--length-penalty", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=default_seed)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_slice)

    p = sub.add_parser("tsed", help="structural similarity of two snippets")
    p.add_argument("file_a")
    p.add_argument("file_b")
    p.add_argument("--lang", required=True, choices=("java", "python"))
    p.add_argument("--label-mode", default="symbol", choices=("symbol", "symbol+text"))
    p.set_defaults(fn=_cmd_tsed)

    p = sub.add_parser("eval", help="score predictions against gold")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--out")
    p.add_argument("--table", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("demo", help="run the motivating examples end to end")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(fn=_cmd_demo)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and 1
    try:
        return args.fn(args)
    except (ValueError, FileNotFoundError, json.JSONDecodeError) as exc:
        # covers InputError, criterion/id mismatches, bad ratios/languages,
        # untokenizable input: all user-input problems
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
