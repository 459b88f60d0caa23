"""Wire-protocol scorer server: sessions, message handling, transports.

Protocol (newline-delimited JSON):

    -> {"type": "session", "input_ids": [...], "allowed_ids": [...],
        "input_text": "..."}            <- {"type": "ok", "session": ID}
    -> {"type": "step", "session": ID, "prefixes": [[...], ...]}
                                        <- {"type": "scores", "items": [...]}
    -> {"type": "close", "session": ID} <- {"type": "ok", "session": ID}

Responses cover exactly the session's allowed ids with finite raw logits;
probability normalization is the client's job. Per-message failures return
{"type": "error", "detail": ...} and never take the server down.
"""

from __future__ import annotations

import json
import socket
import sys
import threading
from dataclasses import dataclass, field

import torch

from .model import MAX_LEN, TinySeq2Seq, score_prefixes
from .vocab import VOCAB_SIZE, allowed_ids_for_text

DISALLOWED_FLOOR = -1.0e9  # finite stand-in for "bridge vetoes this id"


@dataclass
class BridgeSession:
    session_id: str
    input_ids: list[int]
    allowed_ids: list[int]
    memory: torch.Tensor  # encoder cache, reused across steps
    self_allowed: set[int] = field(default_factory=set)


class Bridge:
    """Session registry plus message dispatch around one loaded model."""

    def __init__(self, model: TinySeq2Seq, device: str = "cpu"):
        self.model = model
        self.device = device
        self._sessions: dict[str, BridgeSession] = {}
        self._counter = 0
        self._lock = threading.Lock()

    def open_session(self, input_ids, allowed_ids, input_text=None) -> str:
        ids = [int(i) for i in input_ids][:MAX_LEN]
        allowed = [int(a) for a in allowed_ids]
        if not ids:
            raise ValueError("input_ids must be non-empty")
        if not allowed:
            raise ValueError("allowed_ids must be non-empty")
        if any(not 0 <= a < VOCAB_SIZE for a in allowed):
            raise ValueError("allowed id outside the vocabulary")
        with torch.no_grad():
            memory = self.model.encode(
                torch.tensor([ids], dtype=torch.long, device=self.device)
            )
        # Re-derive the lexical set with our own tokenizer when raw text is
        # given; ids the client allows but we cannot justify get floored.
        self_allowed = allowed_ids_for_text(input_text) if input_text else set(allowed)
        with self._lock:
            self._counter += 1
            sid = f"bridge-{self._counter}"
            self._sessions[sid] = BridgeSession(sid, ids, allowed, memory, self_allowed)
        return sid

    def step(self, session_id: str, prefixes) -> list[list[dict]]:
        sess = self._sessions[session_id]
        if not prefixes:
            raise ValueError("prefixes must be non-empty")
        clean = [[int(t) for t in p] for p in prefixes]
        logits = score_prefixes(self.model, sess.memory, clean, self.device)
        rows = []
        for r in range(len(clean)):
            row = []
            for a in sess.allowed_ids:
                value = float(logits[r, a])
                if a not in sess.self_allowed:
                    value = DISALLOWED_FLOOR
                row.append({"id": a, "logprob": value})
            rows.append(row)
        return rows

    def close(self, session_id: str) -> None:
        if session_id not in self._sessions:
            raise KeyError(f"unknown session: {session_id}")
        del self._sessions[session_id]

    def handle(self, message: dict) -> dict:
        try:
            mtype = message.get("type")
            if mtype == "session":
                sid = self.open_session(
                    message["input_ids"],
                    message["allowed_ids"],
                    message.get("input_text"),
                )
                return {"type": "ok", "session": sid}
            if mtype == "step":
                items = self.step(message["session"], message["prefixes"])
                return {"type": "scores", "items": items}
            if mtype == "close":
                self.close(message["session"])
                return {"type": "ok", "session": message["session"]}
            return {"type": "error", "detail": f"unknown message type: {mtype!r}"}
        except Exception as exc:  # noqa: BLE001 - crash isolation is the contract
            return {"type": "error", "detail": f"{type(exc).__name__}: {exc}"}

    def handle_line(self, line: str) -> str:
        try:
            message = json.loads(line)
        except json.JSONDecodeError as exc:
            return json.dumps({"type": "error", "detail": f"bad json: {exc}"})
        if not isinstance(message, dict):
            return json.dumps({"type": "error", "detail": "message must be an object"})
        return json.dumps(self.handle(message))


def serve_tcp(
    bridge: Bridge,
    host: str = "127.0.0.1",
    port: int = 0,
    stop_event: threading.Event | None = None,
    announce=None,
) -> int:
    """Serve over TCP; returns the bound port once listening."""
    server = socket.create_server((host, port))
    server.settimeout(0.2)
    bound = server.getsockname()[1]
    if announce:
        announce(bound)

    def client_loop(conn: socket.socket) -> None:
        with conn:
            f = conn.makefile("rw", encoding="utf-8", newline="\n")
            for line in f:
                if not line.strip():
                    continue
                f.write(bridge.handle_line(line) + "\n")
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
    return bound


def serve_stdio(bridge: Bridge, stdin=None, stdout=None) -> None:
    """Serve over standard streams until EOF."""
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    for line in stdin:
        if not line.strip():
            continue
        stdout.write(bridge.handle_line(line) + "\n")
        stdout.flush()
