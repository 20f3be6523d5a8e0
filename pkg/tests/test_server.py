"""Tests for the HTTP stepping service and the session core."""

import json
import threading
import urllib.error
import urllib.request

import pytest

from aeff import __version__
from aeff.parser import parse_process
from aeff.session import Session, SessionError, SessionStore
from aeff.syntax import alpha_eq


PINGPONG = """\
signal ping : int
signal pong : int

run (send ping 21; promise (pong y |-> return <<y>>) as p in
     await p until <<v>> in return v)
||
run (promise (ping x |-> ↑pong(x * 2, return <<()>>)) as q in return ())
"""


# ---------------------------------------------------------------------------
# session core

def test_session_rejects_ill_typed_source():
    with pytest.raises(SessionError) as exc:
        Session("run (send zote 3)")
    assert exc.value.kind.startswith("TyComp")


def test_session_rejects_parse_error_with_location():
    with pytest.raises(SessionError) as exc:
        Session("run (return")
    assert exc.value.kind == "parse"
    assert exc.value.location["line"] == 1


def test_trivial_session_has_no_redexes():
    s = Session("run return ()")
    view = s.state_view()
    assert view["redexes"] == []
    assert view["processResult"] == "parResult"
    assert view["resultStatus"] == ["runResult"]
    assert view["signature"] == []


def test_state_view_lists_declared_signals():
    view = Session(PINGPONG).state_view()
    assert view["signature"] == [{"op": "ping", "payload": "int"},
                                 {"op": "pong", "payload": "int"}]


def test_step_advances_and_invalidates_old_ids():
    s = Session(PINGPONG)
    view = s.state_view()
    first = view["redexes"][0]["id"]
    s.apply_step(first)
    assert s.state_view()["stepCount"] == 1
    with pytest.raises(SessionError) as exc:
        s.apply_step(first)
    assert exc.value.status == 409
    # failed apply must not mutate
    assert s.state_view()["stepCount"] == 1


def test_undo_restores_alpha_equal_process():
    s = Session(PINGPONG)
    before = s.current
    s.apply_step(s.state_view()["redexes"][0]["id"])
    assert not alpha_eq(before, s.current)
    assert s.undo()
    assert alpha_eq(before, s.current)
    assert s.state_view()["stepCount"] == 0


def test_undo_on_empty_history_flags_noop():
    s = Session("run return ()")
    assert s.undo() is False


def test_undo_across_injection_removes_wrapper():
    s = Session(PINGPONG)
    before = s.current
    s.inject("ping", "5")
    assert not alpha_eq(before, s.current)
    assert s.undo()
    assert alpha_eq(before, s.current)


def test_injection_requires_declared_op_and_payload_type():
    s = Session(PINGPONG)
    with pytest.raises(SessionError):
        s.inject("nosuch", "()")
    with pytest.raises(SessionError):
        s.inject("ping", "true")


def test_history_is_bounded():
    s = Session(PINGPONG, history_limit=3)
    for _ in range(6):
        s.inject("ping", "1")
    assert len(s.history) == 3


def test_replaying_applied_steps_reaches_same_process():
    s = Session(PINGPONG)
    while s.state_view()["redexes"]:
        view = s.state_view()
        s.apply_step(view["redexes"][0]["id"])
        if s.step_count > 50:
            break
    # replay the recorded choices through the bare stepping core
    from aeff.parser import parse_module
    from aeff.process import enumerate_proc_redexes, step_proc, count_run_leaves
    from aeff.builtins import Store
    mod = parse_module(PINGPONG, "<replay>")
    p = mod.main_process()
    stores = [Store() for _ in range(count_run_leaves(p))]
    for entry in s.applied:
        assert entry["type"] == "step"
        p = step_proc(p, enumerate_proc_redexes(p)[entry["redex"]], stores)
    assert alpha_eq(p, s.current)


def test_preview_is_truncated_and_side_effect_free():
    s = Session(PINGPONG)
    view = s.state_view()
    for r in view["redexes"]:
        assert len(r["preview"]) <= 120
    # generating previews twice does not change the state
    again = s.state_view()
    assert view["redexes"] == again["redexes"]


def test_spans_cover_redex_paths():
    s = Session(PINGPONG)
    view = s.state_view()
    for r in view["redexes"]:
        assert r["path"] in view["spans"]
        a, b = view["spans"][r["path"]]
        assert view["text"][a:b]


def test_session_store_expiry():
    store = SessionStore(idle_timeout=0.0)
    s = store.create("run return ()")
    with pytest.raises(SessionError) as exc:
        store.get(s.id)
    assert exc.value.status == 404


# ---------------------------------------------------------------------------
# http

@pytest.fixture(scope="module")
def server_port():
    from aeff.server import make_server
    srv = make_server(port=0)
    port = srv.server_address[1]
    t = threading.Thread(target=srv.serve_forever, daemon=True)
    t.start()
    yield port
    srv.shutdown()
    srv.server_close()


def call(port, method, path, body=None, raw=None):
    data = raw if raw is not None else (
        json.dumps(body).encode() if body is not None else None)
    req = urllib.request.Request(
        f"http://127.0.0.1:{port}{path}", data=data, method=method,
        headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req) as r:
            return r.status, json.loads(r.read())
    except urllib.error.HTTPError as e:
        return e.code, json.loads(e.read())


def test_health_reports_version(server_port):
    code, body = call(server_port, "GET", "/api/health")
    assert code == 200
    assert body["version"] == __version__


def test_session_lifecycle_over_http(server_port):
    code, res = call(server_port, "POST", "/api/sessions",
                     {"source": PINGPONG})
    assert code == 200
    sid, state = res["sessionId"], res["state"]
    assert state["stepCount"] == 0 and state["redexes"]

    rid = state["redexes"][0]["id"]
    code, res = call(server_port, "POST", f"/api/sessions/{sid}/step",
                     {"redexId": rid})
    assert code == 200
    assert res["state"]["stepCount"] == 1

    # stale id conflicts without mutating
    code, res = call(server_port, "POST", f"/api/sessions/{sid}/step",
                     {"redexId": rid})
    assert code == 409
    assert res["error"]["kind"] == "stale"

    code, res = call(server_port, "GET", f"/api/sessions/{sid}")
    assert code == 200 and res["state"]["stepCount"] == 1

    code, res = call(server_port, "POST", f"/api/sessions/{sid}/undo")
    assert code == 200 and res["undone"] is True
    assert res["state"]["stepCount"] == 0

    code, res = call(server_port, "POST", f"/api/sessions/{sid}/interrupt",
                     {"op": "ping", "payload": "3"})
    assert code == 200
    assert res["state"]["processTree"]["kind"] == "interrupt"


def test_http_error_shapes(server_port):
    code, res = call(server_port, "POST", "/api/sessions",
                     {"source": "run (send zote 3)"})
    assert code == 400
    assert set(res["error"]) >= {"kind", "message"}

    code, res = call(server_port, "POST", "/api/sessions",
                     raw=b"{not json")
    assert code == 400 and res["error"]["kind"] == "badRequest"

    code, res = call(server_port, "GET", "/api/sessions/nope")
    assert code == 404 and res["error"]["kind"] == "notFound"

    code, res = call(server_port, "POST", "/api/sessions/nope/undo")
    assert code == 404


def test_parse_errors_carry_location_over_http(server_port):
    code, res = call(server_port, "POST", "/api/sessions",
                     {"source": "run (return"})
    assert code == 400
    assert res["error"]["location"]["line"] == 1


def test_placeholder_page_served_without_bundle(server_port):
    req = urllib.request.Request(f"http://127.0.0.1:{server_port}/")
    with urllib.request.urlopen(req) as r:
        assert r.status == 200
        assert b"stepping service" in r.read()


def test_static_bundle_serving(tmp_path):
    from aeff.server import make_server
    (tmp_path / "index.html").write_text("<h1>ui</h1>")
    (tmp_path / "app.js").write_text("console.log(1)")
    srv = make_server(port=0, static_dir=str(tmp_path))
    port = srv.server_address[1]
    t = threading.Thread(target=srv.serve_forever, daemon=True)
    t.start()
    try:
        with urllib.request.urlopen(f"http://127.0.0.1:{port}/") as r:
            assert b"<h1>ui</h1>" in r.read()
        with urllib.request.urlopen(f"http://127.0.0.1:{port}/app.js") as r:
            assert r.headers["Content-Type"].startswith("text/javascript")
        # path traversal is refused
        req = urllib.request.Request(
            f"http://127.0.0.1:{port}/../../etc/passwd")
        try:
            urllib.request.urlopen(req)
            raised = False
        except urllib.error.HTTPError as e:
            raised = e.code == 404
        assert raised
    finally:
        srv.shutdown()
        srv.server_close()


def test_port_busy_exits_three(server_port, capsys):
    from aeff.cli import main
    code = main(["serve", "--port", str(server_port)])
    assert code == 3
