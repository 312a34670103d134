"""HTTP/JSON service that administers live test sessions.

Endpoints (all JSON unless noted):

    POST /api/session                 {"n"?: int, "seed"?: int}
                                      -> {"session_id", "n"}
    GET  /api/session/{id}/trial/{k}  -> {"trial_index", "image_url",
                                          "progress": {"answered", "total"}}
    GET  /api/session/{id}/trial/{k}/image   -> image bytes
    POST /api/session/{id}/trial/{k}/response {"choice": "real"|"synthetic"}
                                      -> {"accepted": true}
    GET  /api/session/{id}/result     -> TestResult, 409 until complete
    GET  /api/sessions                -> {"sessions": [summaries]}
    GET  /api/presets                 -> archetype catalog
    GET  /{path}                      -> static UI assets, if configured

Trial payloads never carry the stimulus kind, id, or provenance; images are
addressed through the session-relative trial URL so nothing about the file
name can leak ground truth.  Errors: unknown session or trial 404, malformed
body 400, duplicate response / early result / closed session 409.  Every
state change is on disk before its 2xx goes out (the store guarantees this).
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from ..distsim import load_catalog
from ..errors import ConflictError, SessionStateError
from ..protocol import trial_payload
from .store import SessionStore

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "application/javascript",
    ".css": "text/css",
    ".json": "application/json",
    ".png": "image/png",
    ".ppm": "image/x-portable-pixmap",
    ".svg": "image/svg+xml",
    ".ico": "image/x-icon",
}


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8788
    manifest_path: Path | None = None
    log_dir: Path = Path("sessions")
    alpha: float = 0.05
    default_n: int = 64
    static_dir: Path | None = None
    catalog_path: Path | None = None

    def __post_init__(self) -> None:
        if not (0 <= self.port <= 65535):
            raise ValueError(f"invalid port {self.port}")


class GtlabService(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, config: ServiceConfig, store: SessionStore) -> None:
        self.config = config
        self.store = store
        self.catalog = load_catalog(config.catalog_path)
        super().__init__((config.host, config.port), _Handler)


def make_service(config: ServiceConfig) -> GtlabService:
    from .store import load_manifest

    manifest = (
        load_manifest(config.manifest_path) if config.manifest_path else None
    )
    store = SessionStore(
        log_dir=config.log_dir,
        manifest=manifest,
        alpha=config.alpha,
        default_n=config.default_n,
    )
    return GtlabService(config, store)


def run_service(config: ServiceConfig) -> None:
    service = make_service(config)
    host, port = service.server_address[:2]
    print(f"serving on http://{host}:{port}/ (log dir: {config.log_dir})", flush=True)
    try:
        service.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        service.server_close()


_TRIAL_RE = re.compile(r"^/api/session/([0-9a-f]+)/trial/(\d+)$")
_TRIAL_IMAGE_RE = re.compile(r"^/api/session/([0-9a-f]+)/trial/(\d+)/image$")
_RESPONSE_RE = re.compile(r"^/api/session/([0-9a-f]+)/trial/(\d+)/response$")
_RESULT_RE = re.compile(r"^/api/session/([0-9a-f]+)/result$")


class _Handler(BaseHTTPRequestHandler):
    server: GtlabService

    # -- plumbing ---------------------------------------------------------

    def log_message(self, fmt, *args):  # keep test output quiet
        pass

    def _send_json(self, payload: dict, status: int = 200) -> None:
        body = json.dumps(payload, sort_keys=True).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_error_json(self, status: int, message: str) -> None:
        self._send_json({"error": message}, status=status)

    def _send_bytes(self, data: bytes, content_type: str) -> None:
        self.send_response(200)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def _read_body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        if not raw:
            return {}
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise _BadRequest(f"malformed JSON body: {exc}") from exc
        if not isinstance(doc, dict):
            raise _BadRequest("body must be a JSON object")
        return doc

    # -- dispatch ---------------------------------------------------------

    def do_GET(self) -> None:
        try:
            self._route_get()
        except _BadRequest as exc:
            self._send_error_json(400, str(exc))
        except KeyError as exc:
            self._send_error_json(404, str(exc.args[0]) if exc.args else "not found")
        except (ConflictError, SessionStateError) as exc:
            self._send_error_json(409, str(exc))
        except ValueError as exc:
            self._send_error_json(400, str(exc))
        except Exception as exc:  # noqa: BLE001 -- last-resort 500
            self._send_error_json(500, f"internal error: {exc}")

    def do_POST(self) -> None:
        try:
            self._route_post()
        except _BadRequest as exc:
            self._send_error_json(400, str(exc))
        except KeyError as exc:
            self._send_error_json(404, str(exc.args[0]) if exc.args else "not found")
        except (ConflictError, SessionStateError) as exc:
            self._send_error_json(409, str(exc))
        except ValueError as exc:
            self._send_error_json(400, str(exc))
        except Exception as exc:  # noqa: BLE001
            self._send_error_json(500, f"internal error: {exc}")

    def _route_get(self) -> None:
        path = self.path.split("?", 1)[0]
        store = self.server.store

        m = _TRIAL_IMAGE_RE.match(path)
        if m:
            stored = store.get(m.group(1))
            k = int(m.group(2))
            trial = _trial_or_404(stored.record.plan, k)
            manifest = store.manifest
            if manifest is None:
                raise KeyError("service has no stimulus manifest")
            stim = manifest.by_id()[trial.stimulus_id]
            suffix = stim.image_path.suffix.lower()
            ctype = _CONTENT_TYPES.get(suffix, "application/octet-stream")
            self._send_bytes(stim.image_path.read_bytes(), ctype)
            return

        m = _TRIAL_RE.match(path)
        if m:
            stored = store.get(m.group(1))
            k = int(m.group(2))
            _trial_or_404(stored.record.plan, k)
            payload = trial_payload(
                stored.record.plan,
                k,
                image_url=f"/api/session/{m.group(1)}/trial/{k}/image",
                answered=len(stored.record.responses),
            )
            self._send_json(payload)
            return

        m = _RESULT_RE.match(path)
        if m:
            stored = store.get(m.group(1))
            if not stored.record.is_complete:
                raise SessionStateError(
                    f"session {m.group(1)} is {stored.record.status}; "
                    "result available once complete"
                )
            self._send_json(store.result(m.group(1)).to_json_dict())
            return

        if path == "/api/sessions":
            self._send_json({"sessions": store.sessions()})
            return

        if path == "/api/presets":
            payload = {
                name: {
                    "name": arch.name,
                    "node_count": arch.node_count,
                    "gflops_per_node": arch.gflops_per_node,
                    "gpu_render_speedup": arch.gpu_render_speedup,
                    "link_latency_s": arch.link_latency_s,
                    "bandwidth_bytes_per_s": arch.bandwidth_bytes_per_s,
                    "interactive": arch.interactive,
                    "peak_tflops": arch.peak_tflops,
                    "metadata": arch.metadata,
                }
                for name, arch in self.server.catalog.items()
            }
            self._send_json({"archetypes": payload})
            return

        self._serve_static(path)

    def _route_post(self) -> None:
        path = self.path.split("?", 1)[0]
        store = self.server.store

        if path == "/api/session":
            body = self._read_body()
            n = body.get("n")
            seed = body.get("seed")
            if n is not None and (not isinstance(n, int) or isinstance(n, bool)):
                raise _BadRequest("n must be an integer")
            if seed is not None and (not isinstance(seed, int) or isinstance(seed, bool)):
                raise _BadRequest("seed must be an integer")
            record = store.create_session(n=n, seed=seed)
            self._send_json(
                {"session_id": record.plan.session_id, "n": record.plan.n}, status=201
            )
            return

        m = _RESPONSE_RE.match(path)
        if m:
            stored = store.get(m.group(1))
            k = int(m.group(2))
            _trial_or_404(stored.record.plan, k)
            body = self._read_body()
            if "choice" not in body:
                raise _BadRequest("body must carry a 'choice' field")
            store.record_response(m.group(1), k, body["choice"])
            self._send_json({"accepted": True})
            return

        raise KeyError(f"no such endpoint: POST {path}")

    def _serve_static(self, path: str) -> None:
        static = self.server.config.static_dir
        if static is None:
            if path == "/":
                self._send_bytes(
                    b"gtlab session service (no UI assets configured)\n",
                    "text/plain; charset=utf-8",
                )
                return
            raise KeyError(f"no such endpoint: GET {path}")
        rel = path.lstrip("/") or "index.html"
        target = (static / rel).resolve()
        if not str(target).startswith(str(Path(static).resolve())):
            raise KeyError("path escapes static root")
        if target.is_dir():
            target = target / "index.html"
        if not target.is_file():
            raise KeyError(f"no such asset: {rel}")
        ctype = _CONTENT_TYPES.get(target.suffix.lower(), "application/octet-stream")
        self._send_bytes(target.read_bytes(), ctype)


class _BadRequest(Exception):
    pass


def _trial_or_404(plan, k: int):
    if not (0 <= k < plan.n):
        raise KeyError(f"trial {k} out of range for session of n={plan.n}")
    return plan.trials[k]
