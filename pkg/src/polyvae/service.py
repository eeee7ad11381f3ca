"""HTTP/JSON facade for the interactive structure-editing workflow.

A plain WSGI application (no framework): the browser samples a latent
code, edits the returned activation grid, and regenerates content against
the edited structure while the content latent stays fixed. Sessions are
held in memory behind a lock and expire after an idle timeout; every
endpoint is a thin wrapper over the library calls.
"""

from __future__ import annotations

import json
import mimetypes
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from wsgiref.simple_server import WSGIServer, make_server

import numpy as np

from . import generate
from .model import Model
from .pianoroll import N_TRACKS, STEPS_PER_BAR, Pianoroll, pianoroll_from_json, pianoroll_to_json

DEFAULT_PORT = 8080


@dataclass
class Session:
    session_id: str
    z: np.ndarray
    structure: np.ndarray
    roll: Pianoroll
    created: float
    last_used: float
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)


class HttpError(Exception):
    def __init__(self, status: int, code: str, message: str) -> None:
        super().__init__(message)
        self.status = status
        self.code = code


_STATUS_TEXT = {200: "OK", 400: "Bad Request", 404: "Not Found", 405: "Method Not Allowed",
                422: "Unprocessable Entity", 503: "Service Unavailable", 500: "Internal Server Error"}


def _structure_to_wire(s: np.ndarray) -> list:
    return np.asarray(s, dtype=int).tolist()


def _structure_from_wire(obj, n_bars: int) -> np.ndarray:
    try:
        s = np.asarray(obj, dtype=np.float64)
    except (TypeError, ValueError):
        raise HttpError(422, "bad_structure", "structure must be a nested number array") from None
    if s.shape != (n_bars, N_TRACKS, STEPS_PER_BAR):
        raise HttpError(
            422, "bad_structure",
            f"structure must have shape ({n_bars}, {N_TRACKS}, {STEPS_PER_BAR}), got {list(s.shape)}",
        )
    if not np.isin(s, (0.0, 1.0)).all():
        raise HttpError(422, "bad_structure", "structure entries must be 0 or 1")
    return s.astype(np.uint8)


class App:
    """WSGI application; also serves the built UI from static_dir."""

    def __init__(
        self,
        model: Model | None,
        checkpoint_path: str | None = None,
        static_dir: str | Path | None = None,
        session_timeout: float = 3600.0,
    ) -> None:
        self.model = model
        self.checkpoint_path = checkpoint_path
        self.static_dir = Path(static_dir) if static_dir else None
        self.session_timeout = session_timeout
        self.sessions: dict[str, Session] = {}
        self._sessions_lock = threading.Lock()

    # -- session bookkeeping ---------------------------------------------------

    def _new_session(self, z: np.ndarray, structure: np.ndarray, roll: Pianoroll) -> Session:
        now = time.time()
        session = Session(uuid.uuid4().hex, z, structure, roll, now, now)
        with self._sessions_lock:
            self._expire(now)
            self.sessions[session.session_id] = session
        return session

    def _get_session(self, session_id: str) -> Session:
        now = time.time()
        with self._sessions_lock:
            self._expire(now)
            session = self.sessions.get(session_id)
        if session is None:
            raise HttpError(404, "unknown_session", f"no session {session_id!r}")
        session.last_used = now
        return session

    def _expire(self, now: float) -> None:
        dead = [k for k, s in self.sessions.items() if now - s.last_used > self.session_timeout]
        for k in dead:
            del self.sessions[k]

    def save_sessions(self, path: str | Path) -> None:
        with self._sessions_lock:
            payload = [
                {
                    "session_id": s.session_id,
                    "z": s.z.tolist(),
                    "structure": _structure_to_wire(s.structure),
                    "pianoroll": pianoroll_to_json(s.roll),
                    "created": s.created,
                    "last_used": s.last_used,
                }
                for s in self.sessions.values()
            ]
        Path(path).write_text(json.dumps(payload), encoding="utf-8")

    def load_sessions(self, path: str | Path) -> None:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        with self._sessions_lock:
            for item in payload:
                session = Session(
                    item["session_id"],
                    np.asarray(item["z"], dtype=np.float64),
                    np.asarray(item["structure"], dtype=np.uint8),
                    pianoroll_from_json(item["pianoroll"]),
                    item["created"],
                    item["last_used"],
                )
                self.sessions[session.session_id] = session

    # -- endpoints ----------------------------------------------------------------

    def _require_model(self) -> Model:
        if self.model is None:
            raise HttpError(503, "no_checkpoint", "no model checkpoint is loaded")
        return self.model

    def handle_health(self, _body: dict) -> dict:
        return {
            "status": "ok" if self.model is not None else "no_model",
            "checkpoint": self.checkpoint_path,
            "config": self.model.config.to_json() if self.model is not None else None,
        }

    def handle_sample(self, body: dict) -> dict:
        model = self._require_model()
        seed = body.get("seed")
        rng = np.random.default_rng(seed)
        z = rng.standard_normal(model.config.latent_dim)
        threshold = float(body.get("threshold", 0.5))
        seq = generate._decode_z(model, z, threshold)
        session = self._new_session(z, seq.structure, seq.roll)
        return {
            "session_id": session.session_id,
            "structure": _structure_to_wire(seq.structure),
            "pianoroll": pianoroll_to_json(seq.roll),
        }

    def handle_regenerate(self, body: dict) -> dict:
        model = self._require_model()
        if "session_id" not in body or "structure" not in body:
            raise HttpError(422, "missing_field", "session_id and structure are required")
        session = self._get_session(str(body["session_id"]))
        structure = _structure_from_wire(body["structure"], model.config.n_bars)
        with session.lock:
            seq = generate.conditioned_generate(model, session.z, structure)
            session.structure = seq.structure
            session.roll = seq.roll
        out = {"pianoroll": pianoroll_to_json(seq.roll)}
        if seq.empty:
            out["warning"] = "empty_structure"
        return out

    def handle_interpolate(self, body: dict) -> dict:
        model = self._require_model()
        try:
            steps = int(body["steps"])
            seed_a = int(body["seed_a"])
            seed_b = int(body["seed_b"])
        except (KeyError, TypeError, ValueError):
            raise HttpError(422, "missing_field", "seed_a, seed_b and steps are required") from None
        if not 2 <= steps <= 16:
            raise HttpError(422, "bad_steps", "steps must be in [2, 16]")
        d = model.config.latent_dim
        z_a = np.random.default_rng(seed_a).standard_normal(d)
        z_b = np.random.default_rng(seed_b).standard_normal(d)
        seqs = generate.interpolate(model, z_a, z_b, steps)
        return {"sequences": [pianoroll_to_json(s.roll) for s in seqs]}

    # -- wsgi plumbing ----------------------------------------------------------------

    _ROUTES = {
        ("GET", "/api/health"): "handle_health",
        ("POST", "/api/sample"): "handle_sample",
        ("POST", "/api/regenerate"): "handle_regenerate",
        ("POST", "/api/interpolate"): "handle_interpolate",
    }

    def __call__(self, environ, start_response):
        method = environ["REQUEST_METHOD"]
        path = environ.get("PATH_INFO", "/")
        try:
            if method == "OPTIONS":
                return self._respond(start_response, 200, b"", "text/plain")
            handler_name = self._ROUTES.get((method, path))
            if handler_name is not None:
                body = self._read_json(environ) if method == "POST" else {}
                payload = getattr(self, handler_name)(body)
                blob = json.dumps(payload).encode("utf-8")
                return self._respond(start_response, 200, blob, "application/json")
            if method == "GET" and not path.startswith("/api/"):
                return self._static(start_response, path)
            raise HttpError(404 if path.startswith("/api/") else 405, "not_found", f"no route {method} {path}")
        except HttpError as err:
            blob = json.dumps({"error": err.code, "message": str(err)}).encode("utf-8")
            return self._respond(start_response, err.status, blob, "application/json")
        except Exception as err:  # noqa: BLE001 - boundary
            blob = json.dumps({"error": "internal", "message": str(err)}).encode("utf-8")
            return self._respond(start_response, 500, blob, "application/json")

    def _read_json(self, environ) -> dict:
        try:
            length = int(environ.get("CONTENT_LENGTH") or 0)
        except ValueError:
            length = 0
        raw = environ["wsgi.input"].read(length) if length else b"{}"
        try:
            body = json.loads(raw.decode("utf-8") or "{}")
        except (json.JSONDecodeError, UnicodeDecodeError):
            raise HttpError(400, "bad_json", "request body is not valid JSON") from None
        if not isinstance(body, dict):
            raise HttpError(400, "bad_json", "request body must be a JSON object")
        return body

    def _static(self, start_response, path: str):
        if self.static_dir is None:
            raise HttpError(404, "not_found", "no static assets configured")
        rel = path.lstrip("/") or "index.html"
        target = (self.static_dir / rel).resolve()
        if not str(target).startswith(str(self.static_dir.resolve())) or not target.is_file():
            raise HttpError(404, "not_found", f"no asset {path!r}")
        ctype = mimetypes.guess_type(target.name)[0] or "application/octet-stream"
        return self._respond(start_response, 200, target.read_bytes(), ctype)

    def _respond(self, start_response, status: int, blob: bytes, ctype: str):
        headers = [
            ("Content-Type", ctype),
            ("Content-Length", str(len(blob))),
            ("Access-Control-Allow-Origin", "*"),
            ("Access-Control-Allow-Headers", "Content-Type"),
            ("Access-Control-Allow-Methods", "GET, POST, OPTIONS"),
        ]
        start_response(f"{status} {_STATUS_TEXT.get(status, 'Unknown')}", headers)
        return [blob]


class ThreadingWSGIServer(WSGIServer):
    daemon_threads = True

    def process_request(self, request, client_address):
        thread = threading.Thread(target=self._work, args=(request, client_address), daemon=True)
        thread.start()

    def _work(self, request, client_address):
        try:
            self.finish_request(request, client_address)
        except Exception:  # noqa: BLE001 - per-connection boundary
            self.handle_error(request, client_address)
        finally:
            self.shutdown_request(request)


def serve(app: App, port: int = DEFAULT_PORT, host: str = "127.0.0.1"):
    server = make_server(host, port, app, server_class=ThreadingWSGIServer)
    return server
