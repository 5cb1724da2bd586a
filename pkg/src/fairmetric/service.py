"""HTTP session service for live human-arbiter elicitation.

One session = one elicitation run driven by a human (or scripted client)
through JSON-over-HTTP:

    POST /sessions                     {universe?, mode?, params?} | {resume: id}
    GET  /sessions/{id}/query          pending query descriptor or {none, status}
    POST /sessions/{id}/answer         {seq, answer}
    GET  /sessions/{id}/result         submetric + ledger once complete
    POST /sessions/{id}/abort
    GET  /sessions/{id}/events         server-sent progress events

Answers are appended to a durable JSON-lines log before they are
acknowledged; restarting the service and resuming a session replays the log
and lands on the same pending query.
"""

from __future__ import annotations

import json
import math
import threading
import time
import uuid
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from fairmetric.arbiter import (
    HumanBridgeArbiter,
    InvalidAnswerError,
    LogEntry,
    SessionAborted,
    SessionRecord,
    StaleSeqError,
    TctcParams,
)
from fairmetric.elicitation import merge_orderings, tctc_merge_orderings, triplet_ordering
from fairmetric.rng import derive_rng
from fairmetric.submetric import merge, rep_submetric, submetric_to_json
from fairmetric.universe import Element, Universe


class UnknownSessionError(KeyError):
    pass


@dataclass
class SessionConfig:
    mode: str = "exact"
    alpha: float = 0.1
    n_reps: int = 1
    seed: int = 0
    alpha_l: float = 0.02
    alpha_h: float = 0.04

    def to_json_dict(self) -> dict:
        return {"mode": self.mode, "alpha": self.alpha, "n_reps": self.n_reps,
                "seed": self.seed, "alpha_l": self.alpha_l, "alpha_h": self.alpha_h}

    @classmethod
    def from_json_dict(cls, doc: dict) -> "SessionConfig":
        return cls(**{k: doc[k] for k in
                      ("mode", "alpha", "n_reps", "seed", "alpha_l", "alpha_h") if k in doc})


def _estimate_queries(config: SessionConfig, n: int) -> dict:
    r, a = config.n_reps, config.alpha
    if config.mode == "exact":
        return {
            "triplet": r * n * max(1, math.ceil(math.log2(max(2, n)))),
            "quad": r * n * max(1, math.ceil(math.log2(max(2, r)))) if r > 1 else 0,
            "real": 4 * math.ceil(max(1 / a, math.log2(max(2, r * n)))),
        }
    return {
        "quad": r * n * max(1, math.ceil(math.log2(1 / config.alpha_l))),
        "real": math.ceil(1 / config.alpha_l) + 1,
        "triplet": 0,
    }


class Session:
    """Engine thread + human bridge + durable log for one elicitation run."""

    def __init__(self, session_id: str, universe: Universe, config: SessionConfig,
                 log_path: Path | None = None, replay: list[LogEntry] | None = None):
        self.id = session_id
        self.universe = universe
        self.config = config
        self.record = SessionRecord(session_id=session_id)
        self.log_path = log_path
        self.estimated = _estimate_queries(config, universe.size)
        self.result_json: str | None = None
        self.error: str | None = None
        self._events = threading.Condition()
        durable = self._append_log if log_path is not None else None
        self.bridge = HumanBridgeArbiter(self.record, tctc=(config.mode == "tctc"),
                                         replay=replay or [], durable_write=durable)
        if config.mode == "tctc":
            self.bridge.params = TctcParams(alpha_l=config.alpha_l, alpha_h=config.alpha_h)
        self._thread = threading.Thread(target=self._run, name=f"engine-{session_id}",
                                        daemon=True)

    def start(self) -> None:
        self._thread.start()

    def _append_log(self, entry: LogEntry) -> None:
        with open(self.log_path, "a") as fh:
            fh.write(json.dumps(entry.to_json_dict()) + "\n")
            fh.flush()

    def _pick_reps(self) -> list[Element]:
        rng = derive_rng(self.config.seed, "experiment-reps")
        idx = rng.choice(self.universe.size, size=self.config.n_reps, replace=False,
                         p=self.universe.weights)
        return [self.universe.element_at(int(i)) for i in idx]

    def _run(self) -> None:
        try:
            reps = self._pick_reps()
            sample = self.universe.elements
            if self.config.mode == "exact":
                orderings = [triplet_ordering(self.bridge, sample, r) for r in reps]
                maps = merge_orderings(self.bridge, orderings, self.config.alpha)
            else:
                maps, _ = tctc_merge_orderings(self.bridge, sample, reps)
            sub = merge([rep_submetric(m) for m in maps])
            self.result_json = submetric_to_json(sub)
            self.record.status = "complete"
        except SessionAborted:
            self.record.status = "aborted"
        except Exception as exc:  # surfaced through /result
            self.error = f"{type(exc).__name__}: {exc}"
            self.record.status = "aborted"
        with self._events:
            self._events.notify_all()

    # -- API surface -----------------------------------------------------------

    def query_descriptor(self) -> dict:
        pending = self.bridge.wait_for_pending(timeout=2.0)
        if pending is None or self.record.status in ("complete", "aborted"):
            return {"none": True, "status": self.record.status}
        return {
            "seq": pending.seq,
            "kind": pending.kind,
            "mode": self.config.mode,
            "operands": [{"id": e.id, "features": list(e.features)} for e in pending.operands],
            "answered": len(self.record.log),
            "estimated": self.estimated,
            "status": self.record.status,
        }

    def progress(self) -> dict:
        return {"status": self.record.status, "answered": len(self.record.log),
                "estimated": self.estimated,
                "phase": self.bridge.ledger.phase}

    def post_answer(self, seq: int, answer) -> None:
        self.bridge.post_answer(seq, answer)
        with self._events:
            self._events.notify_all()

    def abort(self) -> None:
        self.bridge.abort()
        self._thread.join(timeout=5.0)
        with self._events:
            self._events.notify_all()

    def result(self) -> dict:
        doc = {"status": self.record.status, "answered": len(self.record.log)}
        if self.result_json is not None:
            doc["submetric"] = json.loads(self.result_json)
            doc["ledger"] = self.bridge.ledger.to_json_dict()
        if self.error:
            doc["error"] = self.error
        if self.record.status == "aborted":
            doc["log"] = [e.to_json_dict() for e in self.record.log]
        return doc


class SessionManager:
    """Holds live sessions; persists configs and logs for crash recovery."""

    def __init__(self, default_universe: Universe | None = None,
                 state_dir: str | Path | None = None):
        self.default_universe = default_universe
        self.state_dir = Path(state_dir) if state_dir else None
        if self.state_dir:
            self.state_dir.mkdir(parents=True, exist_ok=True)
        self.sessions: dict[str, Session] = {}

    def _paths(self, sid: str) -> tuple[Path | None, Path | None]:
        if not self.state_dir:
            return None, None
        return self.state_dir / f"{sid}.config.json", self.state_dir / f"{sid}.log.jsonl"

    def create(self, universe: Universe | None = None,
               config: SessionConfig | None = None) -> Session:
        universe = universe or self.default_universe
        if universe is None:
            raise ValueError("no universe supplied and no default configured")
        config = config or SessionConfig()
        sid = uuid.uuid4().hex[:12]
        config_path, log_path = self._paths(sid)
        if config_path:
            config_path.write_text(json.dumps(
                {"config": config.to_json_dict(), "universe": universe.to_json_dict()}))
        session = Session(sid, universe, config, log_path=log_path)
        self.sessions[sid] = session
        session.start()
        return session

    def resume(self, sid: str) -> Session:
        """Rebuild a session from its persisted config+log after a restart."""
        if not self.state_dir:
            raise UnknownSessionError(sid)
        config_path, log_path = self._paths(sid)
        if not config_path.exists():
            raise UnknownSessionError(sid)
        doc = json.loads(config_path.read_text())
        universe = Universe.from_json_dict(doc["universe"])
        config = SessionConfig.from_json_dict(doc["config"])
        replay = []
        if log_path.exists():
            replay = SessionRecord.log_from_jsonl(log_path.read_text())
        session = Session(sid, universe, config, log_path=log_path, replay=replay)
        self.sessions[sid] = session
        session.start()
        return session

    def get(self, sid: str) -> Session:
        try:
            return self.sessions[sid]
        except KeyError as exc:
            raise UnknownSessionError(sid) from exc


# ---------------------------------------------------------------------------
# HTTP layer
# ---------------------------------------------------------------------------


class _Handler(BaseHTTPRequestHandler):
    server_version = "fairmetric-service/0.1"

    @property
    def manager(self) -> SessionManager:
        return self.server.manager  # type: ignore[attr-defined]

    def log_message(self, fmt, *args):  # quiet by default
        if getattr(self.server, "verbose", False):
            super().log_message(fmt, *args)

    def _send_json(self, doc: dict, status: int = 200) -> None:
        body = json.dumps(doc).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _read_body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        if length == 0:
            return {}
        return json.loads(self.rfile.read(length))

    def do_OPTIONS(self):
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()

    def do_POST(self):
        parts = [p for p in self.path.split("/") if p]
        try:
            if parts == ["sessions"]:
                body = self._read_body()
                if "resume" in body:
                    session = self.manager.resume(body["resume"])
                else:
                    universe = (Universe.from_json_dict(body["universe"])
                                if "universe" in body else None)
                    config = SessionConfig.from_json_dict(body.get("params", {}))
                    session = self.manager.create(universe, config)
                self._send_json({"session_id": session.id,
                                 "estimated": session.estimated}, status=201)
            elif len(parts) == 3 and parts[0] == "sessions" and parts[2] == "answer":
                body = self._read_body()
                session = self.manager.get(parts[1])
                session.post_answer(int(body["seq"]), body["answer"])
                self._send_json({"ok": True})
            elif len(parts) == 3 and parts[0] == "sessions" and parts[2] == "abort":
                session = self.manager.get(parts[1])
                session.abort()
                self._send_json({"ok": True, "status": session.record.status})
            else:
                self._send_json({"error": "not-found"}, status=404)
        except UnknownSessionError:
            self._send_json({"error": "unknown-session"}, status=404)
        except StaleSeqError as exc:
            self._send_json({"error": "stale-seq", "message": str(exc)}, status=409)
        except InvalidAnswerError as exc:
            self._send_json({"error": "invalid-answer", "message": str(exc)}, status=400)
        except (KeyError, ValueError, json.JSONDecodeError) as exc:
            self._send_json({"error": "bad-request", "message": str(exc)}, status=400)

    def do_GET(self):
        parts = [p for p in self.path.split("/") if p]
        try:
            if len(parts) == 3 and parts[0] == "sessions" and parts[2] == "query":
                session = self.manager.get(parts[1])
                self._send_json(session.query_descriptor())
            elif len(parts) == 3 and parts[0] == "sessions" and parts[2] == "result":
                session = self.manager.get(parts[1])
                self._send_json(session.result())
            elif len(parts) == 3 and parts[0] == "sessions" and parts[2] == "events":
                self._stream_events(self.manager.get(parts[1]))
            else:
                self._send_json({"error": "not-found"}, status=404)
        except UnknownSessionError:
            self._send_json({"error": "unknown-session"}, status=404)

    def _stream_events(self, session: Session) -> None:
        self.send_response(200)
        self.send_header("Content-Type", "text/event-stream")
        self.send_header("Cache-Control", "no-cache")
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        last = None
        deadline = time.monotonic() + 3600
        while time.monotonic() < deadline:
            progress = session.progress()
            snapshot = (progress["status"], progress["answered"])
            if snapshot != last:
                payload = f"data: {json.dumps(progress)}\n\n".encode()
                try:
                    self.wfile.write(payload)
                    self.wfile.flush()
                except (BrokenPipeError, ConnectionResetError):
                    return
                last = snapshot
            if progress["status"] in ("complete", "aborted"):
                return
            time.sleep(0.1)


def make_server(manager: SessionManager, host: str = "127.0.0.1",
                port: int = 0) -> ThreadingHTTPServer:
    server = ThreadingHTTPServer((host, port), _Handler)
    server.manager = manager  # type: ignore[attr-defined]
    server.daemon_threads = True
    return server


def serve_forever(universe: Universe, host: str, port: int,
                  state_dir: str | Path | None = None) -> None:
    manager = SessionManager(default_universe=universe, state_dir=state_dir)
    server = make_server(manager, host, port)
    actual = server.server_address[1]
    print(json.dumps({"listening": True, "host": host, "port": actual}), flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
