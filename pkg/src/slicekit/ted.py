"""Ordered tree edit distance (unit costs) with edit-script recovery.

Distance uses the keyroot dynamic program over postorder arrays; a compiled
kernel accelerates it when numba is importable, with a pure-Python twin used
as fallback. Edit scripts come from a separate memoized forest recursion so
the two paths can cross-check each other.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .syntax import TreeNode

try:  # pragma: no cover - exercised implicitly
    from numba import njit

    _HAVE_NUMBA = True
except Exception:  # pragma: no cover
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap if not (args and callable(args[0])) else args[0]


@dataclass(frozen=True)
class EditOp:
    kind: str  # insert | delete | relabel
    src: int  # postorder index in the source tree, -1 for insert
    dst: int  # postorder index in the target tree, -1 for delete


@dataclass(frozen=True)
class EditScript:
    operations: tuple[EditOp, ...]
    total_cost: int
    matched: tuple[tuple[int, int], ...]  # equal-label mapped pairs


@dataclass(frozen=True)
class FlatTree:
    """Postorder arrays: labels (interned ids), leftmost leaf descendants."""

    labels: tuple[int, ...]
    lmld: tuple[int, ...]
    children: tuple[tuple[int, ...], ...]
    label_names: tuple[str, ...]

    @property
    def size(self) -> int:
        return len(self.labels)


def flatten(root: TreeNode, label_of=None) -> FlatTree:
    """Postorder-flatten a tree; ``label_of`` maps nodes to label strings."""
    if label_of is None:
        label_of = lambda n: n.label  # noqa: E731
    labels: list[str] = []
    lmld: list[int] = []
    children: list[tuple[int, ...]] = []

    def visit(node: TreeNode) -> int:
        child_ids = [visit(c) for c in node.children]
        if child_ids:
            left = lmld[child_ids[0]]
        else:
            left = len(labels)
        idx = len(labels)
        labels.append(label_of(node))
        lmld.append(left)
        children.append(tuple(child_ids))
        return idx

    visit(root)
    interned: dict[str, int] = {}
    ids = []
    for name in labels:
        if name not in interned:
            interned[name] = len(interned)
        ids.append(interned[name])
    names = tuple(sorted(interned, key=interned.get))
    return FlatTree(tuple(ids), tuple(lmld), tuple(children), names)


def _unify_labels(a: FlatTree, b: FlatTree) -> tuple[np.ndarray, np.ndarray]:
    joint: dict[str, int] = {}
    for name in a.label_names + b.label_names:
        joint.setdefault(name, len(joint))
    la = np.array([joint[a.label_names[i]] for i in a.labels], dtype=np.int32)
    lb = np.array([joint[b.label_names[i]] for i in b.labels], dtype=np.int32)
    return la, lb


def _keyroots(lmld: tuple[int, ...]) -> np.ndarray:
    seen: dict[int, int] = {}
    for i, l in enumerate(lmld):
        seen[l] = i
    return np.array(sorted(seen.values()), dtype=np.int32)


def _treedist_kernel_py(la, lmla, kra, lb, lmlb, krb):
    m, n = len(la), len(lb)
    td = np.zeros((m, n), dtype=np.int32)
    fd = np.zeros((m + 2, n + 2), dtype=np.int32)
    for ii in range(len(kra)):
        i = kra[ii]
        for jj in range(len(krb)):
            j = krb[jj]
            ioff = lmla[i] - 1
            joff = lmlb[j] - 1
            mm = i - lmla[i] + 2
            nn = j - lmlb[j] + 2
            fd[0, 0] = 0
            for x in range(1, mm):
                fd[x, 0] = fd[x - 1, 0] + 1
            for y in range(1, nn):
                fd[0, y] = fd[0, y - 1] + 1
            for x in range(1, mm):
                for y in range(1, nn):
                    if lmla[i] == lmla[x + ioff] and lmlb[j] == lmlb[y + joff]:
                        cost = 0 if la[x + ioff] == lb[y + joff] else 1
                        fd[x, y] = min(
                            fd[x - 1, y] + 1, fd[x, y - 1] + 1, fd[x - 1, y - 1] + cost
                        )
                        td[x + ioff, y + joff] = fd[x, y]
                    else:
                        p = lmla[x + ioff] - 1 - ioff
                        q = lmlb[y + joff] - 1 - joff
                        fd[x, y] = min(
                            fd[x - 1, y] + 1,
                            fd[x, y - 1] + 1,
                            fd[p, q] + td[x + ioff, y + joff],
                        )
    return td[m - 1, n - 1]


if _HAVE_NUMBA:
    _treedist_kernel = njit(cache=True, nogil=True)(_treedist_kernel_py)
else:  # pragma: no cover
    _treedist_kernel = _treedist_kernel_py


def tree_distance(a: FlatTree, b: FlatTree) -> int:
    """Minimal unit-cost edit distance between two ordered labeled trees."""
    if a.size == 0:
        return b.size
    if b.size == 0:
        return a.size
    la, lb = _unify_labels(a, b)
    lmla = np.array(a.lmld, dtype=np.int32)
    lmlb = np.array(b.lmld, dtype=np.int32)
    return int(_treedist_kernel(la, lmla, _keyroots(a.lmld), lb, lmlb, _keyroots(b.lmld)))


def warmup() -> None:
    """Trigger kernel compilation so timed runs exclude JIT cost."""
    t = FlatTree((0, 1), (0, 0), ((), (0,)), ("a", "b"))
    tree_distance(t, t)


# ---------------------------------------------------------------------------
# Edit-script recovery (memoized forest recursion)
# ---------------------------------------------------------------------------


def edit_script(a: FlatTree, b: FlatTree) -> EditScript:
    """Minimal edit script between two trees, recovered by forest recursion.

    Exact for moderate sizes; the deciding recursion memoizes on contiguous
    postorder subforest pairs.
    """
    la, lb = _unify_labels(a, b)
    lmla, lmlb = a.lmld, b.lmld

    @lru_cache(maxsize=None)
    def forest_dist(ai: int, aj: int, bi: int, bj: int) -> int:
        # Forests are postorder ranges [ai, aj) x [bi, bj).
        if ai >= aj and bi >= bj:
            return 0
        if ai >= aj:
            return bj - bi
        if bi >= bj:
            return aj - ai
        ra, rb = aj - 1, bj - 1  # rightmost roots
        la_start, lb_start = lmla[ra], lmlb[rb]
        best = forest_dist(ai, ra, bi, bj) + 1  # delete ra
        best = min(best, forest_dist(ai, aj, bi, rb) + 1)  # insert rb
        match_cost = 0 if la[ra] == lb[rb] else 1
        best = min(
            best,
            forest_dist(ai, max(ai, la_start), bi, max(bi, lb_start))
            + forest_dist(max(ai, la_start), ra, max(bi, lb_start), rb)
            + match_cost,
        )
        return best

    ops: list[EditOp] = []
    matched: list[tuple[int, int]] = []

    def backtrack(ai: int, aj: int, bi: int, bj: int) -> None:
        while not (ai >= aj and bi >= bj):
            if ai >= aj:
                for k in range(bi, bj):
                    ops.append(EditOp("insert", -1, k))
                return
            if bi >= bj:
                for k in range(ai, aj):
                    ops.append(EditOp("delete", k, -1))
                return
            cur = forest_dist(ai, aj, bi, bj)
            ra, rb = aj - 1, bj - 1
            la_start, lb_start = lmla[ra], lmlb[rb]
            if cur == forest_dist(ai, ra, bi, bj) + 1:
                ops.append(EditOp("delete", ra, -1))
                aj = ra
                continue
            if cur == forest_dist(ai, aj, bi, rb) + 1:
                ops.append(EditOp("insert", -1, rb))
                bj = rb
                continue
            match_cost = 0 if la[ra] == lb[rb] else 1
            if match_cost:
                ops.append(EditOp("relabel", ra, rb))
            else:
                matched.append((ra, rb))
            backtrack(max(ai, la_start), ra, max(bi, lb_start), rb)
            aj, bj = max(ai, la_start), max(bi, lb_start)

    total = forest_dist(0, a.size, 0, b.size)
    backtrack(0, a.size, 0, b.size)
    return EditScript(tuple(ops), total, tuple(matched))
