"""Scoring predicted slices against gold: Acc-D, ExactMatch, TSED, reports.

Acc-D is recall-shaped by definition (fraction of ground-truth lines
recovered); over-generation is caught by ExactMatch and TSED instead. The
CodeBLEU column is reserved as null in reports (external composite metric,
out of scope here).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .tsedmod import tsed


class EmptyGoldError(ValueError):
    """The gold slice has no lines; Acc-D is undefined."""


class IdMismatchError(ValueError):
    def __init__(self, missing: list[str], extra: list[str]):
        self.missing = missing
        self.extra = extra
        super().__init__(f"prediction ids do not align: missing={missing}, extra={extra}")


def acc_d(pred_lines, gold_lines) -> float:
    """|pred ∩ gold| / |gold| over line numbers."""
    gold = set(int(n) for n in gold_lines)
    if not gold:
        raise EmptyGoldError("gold slice is empty")
    pred = set(int(n) for n in pred_lines)
    return len(pred & gold) / len(gold)


def exact_match(pred_lines, pred_texts, gold_lines, gold_texts) -> bool:
    """Identical line-number lists and texts, trailing whitespace ignored."""
    if list(pred_lines) != list(gold_lines):
        return False
    norm = lambda xs: [t.rstrip() for t in xs]  # noqa: E731
    return norm(pred_texts) == norm(gold_texts)


@dataclass
class EvalReport:
    items: list[dict]
    aggregates: dict
    counts: dict

    def to_json(self) -> str:
        return json.dumps(
            {"items": self.items, "aggregates": self.aggregates, "counts": self.counts},
            indent=2,
            sort_keys=True,
        )

    def table(self) -> str:
        rows = [f"{'id':24s} {'acc_d':>7s} {'exact':>6s} {'tsed':>7s}"]
        for item in self.items:
            rows.append(
                f"{item['id']:24s} {item['acc_d']:7.3f} "
                f"{str(item['exact_match']):>6s} {item['tsed']:7.3f}"
            )
        agg = self.aggregates
        rows.append(
            f"{'MEAN':24s} {agg['acc_d_mean']:7.3f} "
            f"{agg['exact_match_pct']:5.1f}% {agg['tsed_mean']:7.3f}"
        )
        return "\n".join(rows)


def load_jsonl(path) -> list[dict]:
    out = []
    for line in Path(path).read_text().splitlines():
        if line.strip():
            out.append(json.loads(line))
    return out


def score_item(g: dict, p: dict) -> dict:
    """Per-item metrics for one aligned (gold, prediction) pair."""
    lang = g.get("lang", "java")
    gold_lines = g["slice_lines"]
    gold_text = g["slice_text"]
    pred_lines = p.get("slice_lines", [])
    pred_text = p.get("slice_text", "")
    item = {"id": g["id"], "degraded": bool(p.get("degraded", False))}
    item["acc_d"] = acc_d(pred_lines, gold_lines)
    item["exact_match"] = exact_match(
        pred_lines,
        pred_text.split("\n") if pred_text else [],
        gold_lines,
        gold_text.split("\n") if gold_text else [],
    )
    if not pred_lines and not pred_text.strip():
        item["parse_failure"] = True
        item["tsed"] = 0.0
    else:
        item["parse_failure"] = False
        item["tsed"] = round(tsed(gold_text, pred_text, lang).value, 6)
    return item


def _score_pair(pair: tuple[dict, dict]) -> dict:
    return score_item(*pair)


def evaluate_records(gold: list[dict], preds: list[dict], jobs: int = 1) -> EvalReport:
    gold_by_id = {g["id"]: g for g in gold}
    pred_by_id = {p["id"]: p for p in preds}
    missing = sorted(set(gold_by_id) - set(pred_by_id))
    extra = sorted(set(pred_by_id) - set(gold_by_id))
    if missing or extra:
        raise IdMismatchError(missing, extra)

    pairs = [(gold_by_id[gid], pred_by_id[gid]) for gid in sorted(gold_by_id)]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            items = list(pool.map(_score_pair, pairs))
    else:
        items = [score_item(g, p) for g, p in pairs]
    degraded = sum(1 for i in items if i["degraded"])
    parse_failures = sum(1 for i in items if i.pop("parse_failure"))

    n = len(items)
    aggregates = {
        "acc_d_mean": round(sum(i["acc_d"] for i in items) / n, 6) if n else 0.0,
        "exact_match_pct": round(100.0 * sum(i["exact_match"] for i in items) / n, 4) if n else 0.0,
        "tsed_mean": round(sum(i["tsed"] for i in items) / n, 6) if n else 0.0,
        "codebleu": None,
    }
    counts = {"total": n, "degraded": degraded, "parse_failures": parse_failures}
    return EvalReport(items=items, aggregates=aggregates, counts=counts)


def evaluate(gold_path, pred_path, jobs: int = 1) -> EvalReport:
    """Score an id-aligned pair of gold and prediction JSONL files."""
    return evaluate_records(load_jsonl(gold_path), load_jsonl(pred_path), jobs=jobs)
