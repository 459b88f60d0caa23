#!/usr/bin/env python3
"""Generate a random snippet corpus and its ground-truth slice dataset.

Writes one source file per snippet under OUT/sources/ and a gold.jsonl with
one record per (variable, last-occurrence-line) criterion.
"""

import argparse
import random
from pathlib import Path

from slicekit import progen
from slicekit.cli import main as cli_main


def run() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("dataset"))
    parser.add_argument("--n", type=int, default=40)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    sources = args.out / "sources"
    sources.mkdir(parents=True, exist_ok=True)
    for i in range(args.n):
        lang = rng.choice(["java", "python"])
        prog = (
            progen.straight_line(lang, rng.randint(3, 10), rng)
            if rng.random() < 0.4
            else progen.branchy(lang, rng)
        )
        suffix = ".java" if lang == "java" else ".py"
        (sources / f"snippet_{i:03d}{suffix}").write_text(prog.text)

    gold = args.out / "gold.jsonl"
    rc = cli_main(["oracle", "--in", str(sources), "--out", str(gold)])
    if rc != 0:
        raise SystemExit(rc)
    n_items = len(gold.read_text().splitlines())
    print(f"wrote {args.n} snippets and {n_items} gold items under {args.out}/")


if __name__ == "__main__":
    run()
