"""Next-token scorers: test doubles and the wire-protocol client/server.

A scorer owns sessions; each session is opened with the encoded input and
the allowed-id set, and every step returns, per prefix, log-probabilities
covering exactly that allowed set.

Wire protocol (newline-delimited JSON over a TCP socket or stdio):

    -> {"type": "session", "input_ids": [...], "allowed_ids": [...],
        "input_text": "..."}            <- {"type": "ok", "session": ID}
    -> {"type": "step", "session": ID, "prefixes": [[...], ...]}
                                        <- {"type": "scores", "items":
                                            [[{"id": int, "logprob": float},
                                              ...], ...]}
    -> {"type": "close", "session": ID} <- {"type": "ok", "session": ID}

Malformed requests produce {"type": "error", "detail": ...} without killing
the server. ``input_text`` is optional and lets a server re-derive allowed
ids with its own tokenizer.
"""

from __future__ import annotations

import json
import math
import socket
import subprocess
import threading
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

_EPS = 1e-12

NOISE_KINDS = ("out_of_input", "repetition", "reorder")


class Scorer(Protocol):
    def open_session(self, input_ids, allowed_ids, input_text: str | None = None) -> str: ...

    def step(self, session_id: str, prefixes: Sequence[Sequence[int]]) -> list[dict[int, float]]: ...

    def close(self, session_id: str) -> None: ...


def _normalize_log(mass: dict[int, float], allowed: Sequence[int]) -> dict[int, float]:
    """Distribute ``mass`` over ``allowed`` with epsilon smoothing, in logs."""
    probs = {int(a): _EPS for a in allowed}
    for tid, p in mass.items():
        tid = int(tid)
        if tid in probs:
            probs[tid] += p
    total = sum(probs.values())
    return {tid: math.log(p / total) for tid, p in probs.items()}


@dataclass
class _CopySession:
    allowed: list[int]
    input_ids: list[int]
    out_pool: list[int]


class MockCopyScorer:
    """Deterministic copy scorer with configurable adversarial noise.

    At step t the target token receives mass 1-noise and one adversarial id
    receives mass noise; on a pseudo-random fraction ``noise`` of steps the
    two masses swap, so an unconstrained greedy decoder actually takes the
    adversarial branch at that rate while dominant-mass behavior is kept for
    small noise. All draws derive from (seed, t), never from wall clock.
    """

    def __init__(
        self,
        target_ids: Sequence[int],
        vocab_size: int,
        eos_id: int,
        noise: float = 0.0,
        noise_kind: str = "out_of_input",
        seed: int = 0,
        special_ids: Sequence[int] = (),
    ):
        if not (0.0 <= noise < 1.0):
            raise ValueError("noise must be in [0, 1)")
        if noise_kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind: {noise_kind!r}")
        self.target = [int(t) for t in target_ids]
        self.vocab_size = vocab_size
        self.eos_id = eos_id
        self.noise = noise
        self.noise_kind = noise_kind
        self.seed = seed
        self.special_ids = frozenset(int(s) for s in special_ids) | {eos_id}
        self._sessions: dict[str, _CopySession] = {}
        self._counter = 0
        self._draws: dict[int, tuple[float, float]] = {}

    def _draw(self, t: int) -> tuple[float, float]:
        if t not in self._draws:
            rng = np.random.default_rng([self.seed, t])
            u = rng.random(2)
            self._draws[t] = (float(u[0]), float(u[1]))
        return self._draws[t]

    def open_session(self, input_ids, allowed_ids, input_text: str | None = None) -> str:
        self._counter += 1
        sid = f"copy-{self._counter}"
        inp = set(int(i) for i in input_ids)
        out_pool = sorted(
            set(range(self.vocab_size)) - inp - self.special_ids
        )
        self._sessions[sid] = _CopySession(
            allowed=[int(a) for a in allowed_ids],
            input_ids=[int(i) for i in input_ids],
            out_pool=out_pool,
        )
        return sid

    def _adversary(self, sess: _CopySession, prefix: Sequence[int], t: int, u2: float) -> int | None:
        if self.noise_kind == "out_of_input":
            pool = sess.out_pool
            if not pool:
                return None
            return pool[int(u2 * len(pool)) % len(pool)]
        if self.noise_kind == "repetition":
            window = [p for p in prefix[-8:] if p not in self.special_ids]
            if not window:
                return self.target[0] if self.target else None
            return int(window[int(u2 * len(window)) % len(window)])
        pool = self.target
        if len(pool) < 2:
            return None
        j = int(u2 * len(pool)) % len(pool)
        if j == min(t, len(pool) - 1):
            j = (j + 1) % len(pool)
        return pool[j]

    def step(self, session_id: str, prefixes: Sequence[Sequence[int]]) -> list[dict[int, float]]:
        sess = self._sessions[session_id]
        out = []
        for prefix in prefixes:
            t = len(prefix)
            tgt = self.target[t] if t < len(self.target) else self.eos_id
            if self.noise == 0.0:
                out.append(_normalize_log({tgt: 1.0}, sess.allowed))
                continue
            u1, u2 = self._draw(t)
            adv = self._adversary(sess, prefix, t, u2)
            if adv is None or adv == tgt:
                out.append(_normalize_log({tgt: 1.0}, sess.allowed))
                continue
            if u1 < self.noise:
                mass = {adv: 1.0 - self.noise, tgt: self.noise}
            else:
                mass = {tgt: 1.0 - self.noise, adv: self.noise}
            out.append(_normalize_log(mass, sess.allowed))
        return out

    def close(self, session_id: str) -> None:
        if session_id not in self._sessions:
            raise KeyError(f"unknown session: {session_id}")
        del self._sessions[session_id]


class WeightedTargetScorer:
    """Scripted scorer: probability mass follows weighted target branches.

    Branches sharing a prefix split mass proportionally to weight at the
    divergence point, which makes beam dynamics fully scriptable.
    """

    def __init__(self, branches: Sequence[tuple[Sequence[int], float]], eos_id: int):
        self.branches = [([int(t) for t in ids], float(w)) for ids, w in branches]
        self.eos_id = eos_id
        self._sessions: dict[str, list[int]] = {}
        self._counter = 0

    def open_session(self, input_ids, allowed_ids, input_text: str | None = None) -> str:
        self._counter += 1
        sid = f"script-{self._counter}"
        self._sessions[sid] = [int(a) for a in allowed_ids]
        return sid

    def step(self, session_id: str, prefixes: Sequence[Sequence[int]]) -> list[dict[int, float]]:
        allowed = self._sessions[session_id]
        out = []
        for prefix in prefixes:
            p = [int(x) for x in prefix]
            n = len(p)
            mass: dict[int, float] = {}
            for ids, w in self.branches:
                if ids[:n] == p:
                    nxt = ids[n] if n < len(ids) else self.eos_id
                    mass[nxt] = mass.get(nxt, 0.0) + w
            if not mass:
                mass = {self.eos_id: 1.0}
            out.append(_normalize_log(mass, allowed))
        return out

    def close(self, session_id: str) -> None:
        if session_id not in self._sessions:
            raise KeyError(f"unknown session: {session_id}")
        del self._sessions[session_id]


# ---------------------------------------------------------------------------
# Wire protocol
# ---------------------------------------------------------------------------


def handle_message(scorer: Scorer, message: dict) -> dict:
    """Dispatch one protocol message against a scorer, never raising."""
    try:
        mtype = message.get("type")
        if mtype == "session":
            sid = scorer.open_session(
                message["input_ids"],
                message["allowed_ids"],
                input_text=message.get("input_text"),
            )
            return {"type": "ok", "session": sid}
        if mtype == "step":
            rows = scorer.step(message["session"], message["prefixes"])
            items = [
                [{"id": int(tid), "logprob": float(lp)} for tid, lp in sorted(row.items())]
                for row in rows
            ]
            return {"type": "scores", "items": items}
        if mtype == "close":
            scorer.close(message["session"])
            return {"type": "ok", "session": message["session"]}
        return {"type": "error", "detail": f"unknown message type: {mtype!r}"}
    except Exception as exc:  # noqa: BLE001 - crash isolation is the contract
        return {"type": "error", "detail": f"{type(exc).__name__}: {exc}"}


class ProtocolError(RuntimeError):
    pass


class ProtocolScorer:
    """Scorer backed by a protocol server over TCP or a subprocess's stdio."""

    def __init__(self, endpoint: str):
        self.endpoint = endpoint
        self._proc: subprocess.Popen | None = None
        self._sock_file = None
        self._lock = threading.Lock()
        if endpoint.startswith("proto://"):
            host, _, port = endpoint[len("proto://") :].partition(":")
            sock = socket.create_connection((host, int(port)), timeout=30)
            self._sock = sock
            self._sock_file = sock.makefile("rw", encoding="utf-8", newline="\n")
        elif endpoint.startswith("stdio:"):
            cmd = endpoint[len("stdio:") :]
            self._proc = subprocess.Popen(
                cmd,
                shell=True,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        else:
            raise ValueError(f"unsupported scorer endpoint: {endpoint!r}")

    def _roundtrip(self, message: dict) -> dict:
        line = json.dumps(message)
        with self._lock:
            if self._sock_file is not None:
                self._sock_file.write(line + "\n")
                self._sock_file.flush()
                reply = self._sock_file.readline()
            else:
                assert self._proc is not None and self._proc.stdin and self._proc.stdout
                self._proc.stdin.write(line + "\n")
                self._proc.stdin.flush()
                reply = self._proc.stdout.readline()
        if not reply:
            raise ProtocolError("scorer endpoint closed the connection")
        response = json.loads(reply)
        if response.get("type") == "error":
            raise ProtocolError(response.get("detail", "unknown error"))
        return response

    def open_session(self, input_ids, allowed_ids, input_text: str | None = None) -> str:
        msg = {
            "type": "session",
            "input_ids": [int(i) for i in input_ids],
            "allowed_ids": [int(a) for a in allowed_ids],
        }
        if input_text is not None:
            msg["input_text"] = input_text
        return self._roundtrip(msg)["session"]

    def step(self, session_id: str, prefixes) -> list[dict[int, float]]:
        response = self._roundtrip(
            {
                "type": "step",
                "session": session_id,
                "prefixes": [[int(t) for t in p] for p in prefixes],
            }
        )
        return [
            {int(entry["id"]): float(entry["logprob"]) for entry in row}
            for row in response["items"]
        ]

    def close(self, session_id: str) -> None:
        try:
            self._roundtrip({"type": "close", "session": session_id})
        except ProtocolError:
            pass

    def shutdown(self) -> None:
        if self._sock_file is not None:
            self._sock_file.close()
            self._sock.close()
        if self._proc is not None:
            self._proc.stdin.close()
            self._proc.wait(timeout=10)


def serve_scorer(
    scorer: Scorer,
    host: str = "127.0.0.1",
    port: int = 0,
    ready_event: threading.Event | None = None,
    stop_event: threading.Event | None = None,
) -> int:
    """Serve a scorer over TCP; returns the bound port once listening.

    Intended for tests and demos; one thread per connection, crash-isolated
    per message.
    """
    server = socket.create_server((host, port))
    server.settimeout(0.2)
    bound_port = server.getsockname()[1]

    def client_loop(conn: socket.socket) -> None:
        with conn:
            f = conn.makefile("rw", encoding="utf-8", newline="\n")
            for line in f:
                line = line.strip()
                if not line:
                    continue
                try:
                    message = json.loads(line)
                except json.JSONDecodeError as exc:
                    response = {"type": "error", "detail": f"bad json: {exc}"}
                else:
                    response = handle_message(scorer, message)
                f.write(json.dumps(response) + "\n")
                f.flush()

    def accept_loop() -> None:
        with server:
            while stop_event is None or not stop_event.is_set():
                try:
                    conn, _ = server.accept()
                except socket.timeout:
                    continue
                except OSError:
                    break
                threading.Thread(target=client_loop, args=(conn,), daemon=True).start()

    threading.Thread(target=accept_loop, daemon=True).start()
    if ready_event is not None:
        ready_event.set()
    return bound_port
