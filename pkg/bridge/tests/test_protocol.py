import json
import socket
import threading

import pytest
import torch

from slicebridge.model import load_model, score_prefixes
from slicebridge.server import DISALLOWED_FLOOR, Bridge, serve_stdio, serve_tcp
from slicebridge.vocab import EOS_ID, VOCAB_SIZE, allowed_ids_for_text, encode


@pytest.fixture(scope="module")
def bridge():
    return Bridge(load_model("tiny:0"))


INPUT_TEXT = "int a = 0;\nint b = a + 1;\n"
INPUT_IDS = encode(f"<code>\n1: int a = 0;\n2: int b = a + 1;\n<criterion>\nb\n<line>\n2\n<slice>\n")
ALLOWED = sorted(allowed_ids_for_text(INPUT_TEXT))


def open_session(bridge, **overrides):
    msg = {"type": "session", "input_ids": INPUT_IDS, "allowed_ids": ALLOWED,
           "input_text": INPUT_TEXT}
    msg.update(overrides)
    return bridge.handle(msg)


def test_session_and_step_schema(bridge):
    reply = open_session(bridge)
    assert reply["type"] == "ok"
    sid = reply["session"]

    reply = bridge.handle({"type": "step", "session": sid, "prefixes": [[], [ALLOWED[0]]]})
    assert reply["type"] == "scores"
    assert len(reply["items"]) == 2
    for row in reply["items"]:
        ids = [entry["id"] for entry in row]
        assert ids == ALLOWED  # covers exactly the allowed set, in order
        for entry in row:
            assert set(entry) == {"id", "logprob"}
            assert isinstance(entry["logprob"], float)
            assert entry["logprob"] == entry["logprob"]  # finite, not NaN
            assert abs(entry["logprob"]) < float("inf")

    reply = bridge.handle({"type": "close", "session": sid})
    assert reply == {"type": "ok", "session": sid}


def test_error_paths_do_not_kill_the_bridge(bridge):
    assert bridge.handle({"type": "close", "session": "ghost"})["type"] == "error"
    assert bridge.handle({"type": "step", "session": "ghost", "prefixes": [[]]})["type"] == "error"
    assert bridge.handle({"type": "bogus"})["type"] == "error"
    assert bridge.handle({"type": "session"})["type"] == "error"
    assert open_session(bridge, allowed_ids=[])["type"] == "error"
    assert open_session(bridge, allowed_ids=[VOCAB_SIZE + 5])["type"] == "error"
    assert json.loads(bridge.handle_line("not json"))["type"] == "error"
    assert json.loads(bridge.handle_line('"a string"'))["type"] == "error"
    # still alive and serving
    assert open_session(bridge)["type"] == "ok"


def test_self_allowed_flooring(bridge):
    # 'z' does not occur in the input text: the client may allow it, but the
    # bridge floors it to the finite minimum.
    z_id = encode("z")[0]
    assert z_id not in allowed_ids_for_text(INPUT_TEXT)
    reply = open_session(bridge, allowed_ids=sorted(set(ALLOWED) | {z_id}))
    sid = reply["session"]
    row = bridge.handle({"type": "step", "session": sid, "prefixes": [[]]})["items"][0]
    by_id = {e["id"]: e["logprob"] for e in row}
    assert by_id[z_id] == DISALLOWED_FLOOR
    assert by_id[EOS_ID] > DISALLOWED_FLOOR


def test_deterministic_given_weights():
    rows = []
    for _ in range(2):
        b = Bridge(load_model("tiny:7"))
        sid = b.handle({"type": "session", "input_ids": INPUT_IDS, "allowed_ids": ALLOWED})["session"]
        rows.append(b.handle({"type": "step", "session": sid, "prefixes": [[8, 9]]})["items"][0])
    assert rows[0] == rows[1]


def test_batch_rows_independent_of_batching(bridge):
    sid = open_session(bridge)["session"]
    a = bridge.handle({"type": "step", "session": sid, "prefixes": [[8], [8, 9]]})["items"]
    b1 = bridge.handle({"type": "step", "session": sid, "prefixes": [[8]]})["items"][0]
    b2 = bridge.handle({"type": "step", "session": sid, "prefixes": [[8, 9]]})["items"][0]
    for got, want in zip(a, [b1, b2]):
        for ge, we in zip(got, want):
            assert ge["id"] == we["id"]
            assert ge["logprob"] == pytest.approx(we["logprob"], abs=1e-4)


def test_many_sessions_one_process(bridge):
    sids = [open_session(bridge)["session"] for _ in range(5)]
    assert len(set(sids)) == 5
    for sid in sids:
        assert bridge.handle({"type": "step", "session": sid, "prefixes": [[]]})["type"] == "scores"
    for sid in sids:
        assert bridge.handle({"type": "close", "session": sid})["type"] == "ok"


def test_tcp_transport(bridge):
    stop = threading.Event()
    port = serve_tcp(bridge, port=0, stop_event=stop)
    try:
        with socket.create_connection(("127.0.0.1", port)) as conn:
            f = conn.makefile("rw", encoding="utf-8", newline="\n")
            f.write(json.dumps({"type": "session", "input_ids": INPUT_IDS,
                                "allowed_ids": ALLOWED, "input_text": INPUT_TEXT}) + "\n")
            f.flush()
            reply = json.loads(f.readline())
            assert reply["type"] == "ok"
            f.write("garbage\n")
            f.flush()
            assert json.loads(f.readline())["type"] == "error"
            f.write(json.dumps({"type": "step", "session": reply["session"],
                                "prefixes": [[]]}) + "\n")
            f.flush()
            assert json.loads(f.readline())["type"] == "scores"
    finally:
        stop.set()


def test_stdio_transport(bridge):
    import io

    lines = [
        json.dumps({"type": "session", "input_ids": INPUT_IDS, "allowed_ids": ALLOWED}),
        "broken",
        json.dumps({"type": "bogus"}),
    ]
    out = io.StringIO()
    serve_stdio(bridge, stdin=io.StringIO("\n".join(lines) + "\n"), stdout=out)
    replies = [json.loads(l) for l in out.getvalue().splitlines()]
    assert [r["type"] for r in replies] == ["ok", "error", "error"]


def test_prefix_scoring_respects_length_groups():
    model = load_model("tiny:3")
    with torch.no_grad():
        memory = model.encode(torch.tensor([INPUT_IDS[:32]], dtype=torch.long))
    mixed = score_prefixes(model, memory, [[8, 9, 10], [8]])
    solo = score_prefixes(model, memory, [[8]])
    assert torch.allclose(mixed[1], solo[0], atol=1e-5)
