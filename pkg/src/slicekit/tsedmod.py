"""Tree Similarity of Edit Distance and the boundary monotonicity check.

The score is 1 minus the minimal unit-cost tree edit distance normalized by
the larger tree's node count, clamped into [0, 1] (ordered trees can force a
distance above the larger node count, so the raw ratio may dip below zero).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from . import ted
from .syntax import parse

LABEL_MODES = ("symbol", "symbol+text")

# Above this per-tree node budget the exact DP is skipped in favor of an
# admissible lower bound on distance (hence an upper bound on the score).
NODE_BUDGET = 3000


@dataclass(frozen=True)
class TsedScore:
    value: float
    nodes_x: int
    nodes_y: int
    distance: int
    exact: bool = True

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "nodes_x": self.nodes_x,
            "nodes_y": self.nodes_y,
            "distance": self.distance,
            "exact": self.exact,
        }


def _label_of(node, mode: str) -> str:
    if mode == "symbol" or not node.is_leaf:
        return node.label
    if node.label in ("identifier", "number", "string"):
        return f"{node.label}:{node.text}"
    return node.label


@lru_cache(maxsize=65536)
def _flat_for(text: str, lang: str, label_mode: str) -> ted.FlatTree:
    tree = parse(text, lang)
    return ted.flatten(tree.root, lambda n: _label_of(n, label_mode))


def tree_edit_distance(tx, ty) -> ted.EditScript:
    """Minimal-cost edit script between two syntax trees (unit costs)."""
    fa = ted.flatten(tx.root if hasattr(tx, "root") else tx)
    fb = ted.flatten(ty.root if hasattr(ty, "root") else ty)
    return ted.edit_script(fa, fb)


def _score(fa: ted.FlatTree, fb: ted.FlatTree) -> TsedScore:
    nx, ny = fa.size, fb.size
    denom = max(nx, ny)
    if denom == 0:
        return TsedScore(1.0, 0, 0, 0)
    if nx > NODE_BUDGET or ny > NODE_BUDGET:
        # Admissible fallback: distance is at least the size difference plus
        # the shortfall of shared labels, so the score is an upper bound.
        from collections import Counter

        ca = Counter(fa.label_names[i] for i in fa.labels)
        cb = Counter(fb.label_names[i] for i in fb.labels)
        overlap = sum((ca & cb).values())
        lower = max(abs(nx - ny), max(nx, ny) - overlap)
        value = max(0.0, min(1.0, 1.0 - lower / denom))
        return TsedScore(value, nx, ny, lower, exact=False)
    dist = _distance_cached(fa, fb)
    value = max(0.0, min(1.0, 1.0 - dist / denom))
    return TsedScore(value, nx, ny, dist)


@lru_cache(maxsize=65536)
def _distance_cached(fa: ted.FlatTree, fb: ted.FlatTree) -> int:
    return ted.tree_distance(fa, fb)


def tsed(x_text: str, y_text: str, lang: str, label_mode: str = "symbol") -> TsedScore:
    """Structural similarity of two code snippets in [0, 1].

    Both sides are parsed error-tolerantly, so truncated or partial snippets
    score like any other tree. An empty ``y_text`` scores 0 by convention
    (the all-insert script).
    """
    if label_mode not in LABEL_MODES:
        raise ValueError(f"unknown label mode: {label_mode!r}")
    fa = _flat_for(x_text, lang, label_mode)
    if not y_text:
        return TsedScore(0.0, fa.size, 0, fa.size)
    fb = _flat_for(y_text, lang, label_mode)
    return _score(fa, fb)


def monotonic_check(t_prev: float, t_cur: float) -> str:
    """Boundary pruning rule: prune on a strict drop, keep on equality."""
    return "prune" if t_cur < t_prev else "keep"


def clear_cache() -> None:
    _flat_for.cache_clear()
    _distance_cached.cache_clear()
