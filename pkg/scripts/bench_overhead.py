#!/usr/bin/env python3
"""Relative latency of constrained vs unconstrained decoding on one dataset.

With a near-free mock scorer the structural checks dominate, so this is the
pessimistic view of what the constraints cost per generated slice.
"""

import argparse
import random
import time

from slicekit import progen, ted
from slicekit.corpusgen import format_sft
from slicekit.decode import DecodeConfig, run_beam_search
from slicekit.dfg import build_dfg
from slicekit.oracle import SliceQuery, oracle_slice
from slicekit.scorers import MockCopyScorer
from slicekit.tokenizers import CharTokenizer
from slicekit.tsedmod import clear_cache
from slicekit.units import parse_unit


def build_pool(n: int, seed: int):
    rng = random.Random(seed)
    tok = CharTokenizer()
    pool = []
    while len(pool) < n:
        lang = rng.choice(["java", "python"])
        prog = progen.branchy(lang, rng)
        unit, tree = parse_unit(prog.text, lang)
        graph = build_dfg(unit, tree)
        if not graph.nodes:
            continue
        node = graph.nodes[rng.randrange(len(graph.nodes))]
        line = max(unit.statements[node.statement_index].line_numbers)
        query = SliceQuery(unit=unit, criterion_var=node.name, criterion_line=line)
        gold = oracle_slice(query, graph)
        ids = tok.encode(format_sft(query, gold).target_text) + [tok.eos_id]
        pool.append((query, ids))
    return tok, pool


def time_setting(tok, pool, noise: float, **cfg_kwargs) -> float:
    total = 0.0
    for idx, (query, ids) in enumerate(pool):
        scorer = MockCopyScorer(
            ids, tok.vocab_size, tok.eos_id, noise=noise, noise_kind="repetition",
            seed=idx, special_ids=tok.marker_ids + (tok.pad_id,),
        )
        cfg = DecodeConfig(max_len=len(ids) + 32, **cfg_kwargs)
        start = time.perf_counter()
        run_beam_search(query, scorer, tok, cfg)
        total += time.perf_counter() - start
    return total


def run() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=40)
    parser.add_argument("--noise", type=float, default=0.2)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    ted.warmup()
    tok, pool = build_pool(args.n, args.seed)
    time_setting(tok, pool, args.noise, tsed_prune=False, lexical_mask=False)  # cache warm
    clear_cache()
    constrained = time_setting(tok, pool, args.noise)
    unconstrained = time_setting(tok, pool, args.noise, tsed_prune=False, lexical_mask=False)
    print(f"decodes            : {args.n}")
    print(f"constrained        : {constrained:.3f}s ({constrained/args.n*1000:.1f} ms/slice)")
    print(f"unconstrained      : {unconstrained:.3f}s ({unconstrained/args.n*1000:.1f} ms/slice)")
    print(f"relative overhead  : {constrained/unconstrained - 1.0:+.1%}")


if __name__ == "__main__":
    run()
