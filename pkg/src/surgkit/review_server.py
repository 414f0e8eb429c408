"""HTTP server backing the review UI.

Serves the sampled queue, the frame images, and the static frontend, and
accepts reviewer decisions. Decision writes are durably appended to the log
under a single lock before the request is acknowledged; everything else is
derived state and safe to read concurrently.
"""
from __future__ import annotations

import json
import logging
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import unquote
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .annotations import FrameAnnotation
from .cleaning import (
    ChangeLog,
    CleaningError,
    ReviewSession,
    apply_rules,
    compile_rules,
    make_decision,
    record_decision,
)
from .records import InstructionRecord, dump_records

logger = logging.getLogger(__name__)

_ITEM_PATH_RE = re.compile(r"^/api/items/([^/]+)$")
_DECISION_PATH_RE = re.compile(r"^/api/items/([^/]+)/decision$")
_IMAGE_PATH_RE = re.compile(r"^/api/images/([^/]+)$")

_STATIC_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".map": "application/json",
    ".svg": "image/svg+xml",
    ".png": "image/png",
}

_PLACEHOLDER_PAGE = b"""<!doctype html>
<meta charset="utf-8">
<title>review</title>
<p>No frontend build is installed. The JSON API is live under /api/.</p>
"""


class ReviewService:
    """Session state plus the operations the HTTP layer exposes."""

    def __init__(
        self,
        records: Sequence[InstructionRecord],
        frames: Sequence[FrameAnnotation],
        session: ReviewSession,
        log_path: Path,
        corpus_root: Path,
        output_path: Optional[Path] = None,
        changelog_path: Optional[Path] = None,
        rule_threshold: int = 2,
    ):
        self.records = list(records)
        self.by_id = {r.record_id: r for r in self.records}
        self.frames = {f.frame_id: f for f in frames}
        self.session = session
        self.log_path = Path(log_path)
        self.corpus_root = Path(corpus_root)
        self.output_path = Path(output_path) if output_path else None
        self.changelog_path = Path(changelog_path) if changelog_path else None
        self.rule_threshold = rule_threshold
        self.write_lock = threading.Lock()
        self.finalized: Optional[ChangeLog] = None

    def session_payload(self) -> Dict[str, object]:
        decided = len(self.session.decisions)
        return {
            "ratio": self.session.ratio,
            "seed": self.session.seed,
            "sample_size": len(self.session.sample),
            "decided": decided,
            "remaining": len(self.session.sample) - decided,
            "corpus_size": len(self.records),
            "finalized": self.finalized is not None,
        }

    def item_payload(self, record_id: str) -> Optional[Dict[str, object]]:
        record = self.by_id.get(record_id)
        if record is None or record_id not in set(self.session.sample):
            return None
        turns = [
            {
                "role": turn.role,
                "text": turn.text,
                "boxes": [
                    {"label": label, "x1": box.x1, "y1": box.y1, "x2": box.x2, "y2": box.y2}
                    for label, box in turn.boxes
                ],
            }
            for turn in record.turns
        ]
        decision = self.session.decisions.get(record_id)
        frame = self.frames.get(record.frame_id)
        return {
            "record_id": record.record_id,
            "frame_id": record.frame_id,
            "paradigm": record.paradigm.value,
            "subtask": record.subtask.value,
            "turns": turns,
            "image_url": f"/api/images/{record.frame_id}" if frame else None,
            "image_size": list(frame.image_size) if frame else None,
            "decided": decision is not None,
            "progress": {
                "decided": len(self.session.decisions),
                "total": len(self.session.sample),
            },
        }

    def next_payload(self) -> Optional[Dict[str, object]]:
        rid = self.session.next_undecided()
        return None if rid is None else self.item_payload(rid)

    def submit_decision(self, record_id: str, body: Dict[str, object]) -> None:
        decision = make_decision(
            record_id=record_id,
            verdict=str(body.get("verdict", "")),
            issues=body.get("issues", ()),
            edited_text=body.get("edited_text"),
            note=str(body.get("note", "")),
        )
        with self.write_lock:
            record_decision(self.session, decision, self.log_path)

    def image_bytes(self, frame_id: str) -> Optional[Tuple[bytes, str]]:
        frame = self.frames.get(frame_id)
        if frame is None:
            return None
        path = (self.corpus_root / frame.image_path).resolve()
        if not str(path).startswith(str(self.corpus_root.resolve())) or not path.is_file():
            return None
        content_type = _STATIC_TYPES.get(path.suffix.lower(), "application/octet-stream")
        return path.read_bytes(), content_type

    def finalize(self) -> Dict[str, object]:
        with self.write_lock:
            rules = compile_rules(self.session, self.records, self.rule_threshold)
            cleaned, changelog = apply_rules(self.records, rules, self.session)
            if self.output_path is not None:
                tmp = self.output_path.with_suffix(self.output_path.suffix + ".tmp")
                tmp.write_text(dump_records(cleaned), encoding="utf-8")
                tmp.replace(self.output_path)
            if self.changelog_path is not None:
                payload = changelog.as_json()
                payload["rules"] = [
                    {
                        "rule_id": r.rule_id,
                        "action": r.action,
                        "match": r.match,
                        "replacement": r.replacement,
                        "origin": list(r.origin),
                    }
                    for r in rules
                ]
                tmp = self.changelog_path.with_suffix(self.changelog_path.suffix + ".tmp")
                tmp.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
                tmp.replace(self.changelog_path)
            self.finalized = changelog
            return {
                "changes": changelog.as_json()["changes"],
                "conflicts": changelog.as_json()["conflicts"],
                "rules": len(rules),
                "kept": len(cleaned),
                "dropped": len(self.records) - len(cleaned),
            }


def _make_handler(service: ReviewService, static_dir: Optional[Path], token: Optional[str]):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt: str, *args) -> None:  # route through logging
            logger.debug("%s - %s", self.address_string(), fmt % args)

        def _send_json(self, payload: object, status: int = 200) -> None:
            body = json.dumps(payload).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _send_error_json(self, status: int, message: str) -> None:
            self._send_json({"error": message}, status=status)

        def _send_bytes(self, body: bytes, content_type: str, status: int = 200) -> None:
            self.send_response(status)
            self.send_header("Content-Type", content_type)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _authorized(self) -> bool:
            if token is None:
                return True
            header = self.headers.get("Authorization", "")
            return header == f"Bearer {token}"

        def _serve_static(self, path: str) -> None:
            if static_dir is None:
                self._send_bytes(_PLACEHOLDER_PAGE, "text/html; charset=utf-8")
                return
            name = "index.html" if path in ("/", "") else path.lstrip("/")
            target = (static_dir / name).resolve()
            if not str(target).startswith(str(static_dir.resolve())) or not target.is_file():
                self._send_error_json(404, "not found")
                return
            content_type = _STATIC_TYPES.get(target.suffix.lower(), "application/octet-stream")
            self._send_bytes(target.read_bytes(), content_type)

        def do_GET(self) -> None:  # noqa: N802 (http.server naming)
            path = self.path.split("?", 1)[0]
            if path.startswith("/api/"):
                if not self._authorized():
                    self._send_error_json(401, "missing or bad token")
                    return
            if path == "/api/session":
                self._send_json(service.session_payload())
            elif path == "/api/items/next":
                payload = service.next_payload()
                if payload is None:
                    self._send_json({"done": True, "item": None})
                else:
                    self._send_json({"done": False, "item": payload})
            elif _ITEM_PATH_RE.match(path):
                rid = unquote(_ITEM_PATH_RE.match(path).group(1))
                payload = service.item_payload(rid)
                if payload is None:
                    self._send_error_json(404, f"unknown sampled record {rid!r}")
                else:
                    self._send_json(payload)
            elif _IMAGE_PATH_RE.match(path):
                frame_id = unquote(_IMAGE_PATH_RE.match(path).group(1))
                result = service.image_bytes(frame_id)
                if result is None:
                    self._send_error_json(404, f"no image for frame {frame_id!r}")
                else:
                    self._send_bytes(result[0], result[1])
            elif path.startswith("/api/"):
                self._send_error_json(404, "unknown endpoint")
            else:
                self._serve_static(path)

        def do_POST(self) -> None:  # noqa: N802
            path = self.path.split("?", 1)[0]
            if not self._authorized():
                self._send_error_json(401, "missing or bad token")
                return
            length = int(self.headers.get("Content-Length", 0) or 0)
            raw = self.rfile.read(length) if length else b""
            decision_match = _DECISION_PATH_RE.match(path)
            if decision_match:
                try:
                    body = json.loads(raw.decode("utf-8")) if raw else {}
                except json.JSONDecodeError as exc:
                    self._send_error_json(400, f"bad JSON: {exc}")
                    return
                try:
                    service.submit_decision(unquote(decision_match.group(1)), body)
                except CleaningError as exc:
                    self._send_error_json(400, str(exc))
                    return
                self.send_response(204)
                self.send_header("Content-Length", "0")
                self.end_headers()
            elif path == "/api/finalize":
                try:
                    self._send_json(service.finalize())
                except CleaningError as exc:
                    self._send_error_json(400, str(exc))
            else:
                self._send_error_json(404, "unknown endpoint")

    return Handler


def serve(
    service: ReviewService,
    host: str = "127.0.0.1",
    port: int = 8140,
    static_dir: Optional[Path] = None,
    token: Optional[str] = None,
) -> ThreadingHTTPServer:
    """Bind and return the server; the caller drives serve_forever()."""
    handler = _make_handler(service, Path(static_dir) if static_dir else None, token)
    server = ThreadingHTTPServer((host, port), handler)
    logger.info("review server on http://%s:%d/", host, server.server_address[1])
    return server
