"""Client for an external summarizer speaking a line-delimited JSON protocol.

Request (one line, UTF-8)::

    {"id": "seg-0", "v": 1, "text": "...", "n": 3}

Response (one line)::

    {"id": "seg-0", "v": 1, "candidates": ["...", ...], "scores": [0.9, ...]}

``scores`` is optional (default 1.0 each, order preserved). JSON string
escaping guarantees no raw newline inside a message. The peer is either a
spawned process (``command``, talking over stdin/stdout) or a TCP endpoint
(``address = "host:port"``). Several requests may be in flight at once, up to
``parallelism``; responses are matched to requests by ``id`` only.
"""

from __future__ import annotations

import json
import logging
import socket
import subprocess
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from . import errors

logger = logging.getLogger(__name__)

PROTOCOL_VERSION = 1


@dataclass(frozen=True)
class AdapterConfig:
    command: tuple[str, ...] | None = None
    address: str | None = None
    timeout: float = 30.0
    parallelism: int = 4
    fallback: bool = True

    @property
    def configured(self) -> bool:
        return bool(self.command) or bool(self.address)

    @classmethod
    def from_dict(cls, d: dict | None) -> "AdapterConfig":
        d = dict(d or {})
        cmd = d.get("command")
        if isinstance(cmd, str):
            cmd = (cmd,)
        return cls(
            command=tuple(cmd) if cmd else None,
            address=d.get("address"),
            timeout=float(d.get("timeout", 30.0)),
            parallelism=int(d.get("parallelism", 4)),
            fallback=bool(d.get("fallback", True)),
        )


def encode_request(rid: str, text: str, n: int) -> bytes:
    return (json.dumps({"id": rid, "v": PROTOCOL_VERSION, "text": text, "n": n},
                       ensure_ascii=False) + "\n").encode("utf-8")


def decode_response(line: bytes) -> tuple[str, list[str], list[float]]:
    try:
        msg = json.loads(line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise errors.AdapterProtocolError(f"malformed response line: {exc}") from exc
    if not isinstance(msg, dict) or not isinstance(msg.get("id"), str):
        raise errors.AdapterProtocolError("response must be an object with a string id")
    if msg.get("v") != PROTOCOL_VERSION:
        raise errors.AdapterProtocolError(f"unsupported protocol version {msg.get('v')!r}")
    cands = msg.get("candidates")
    if not isinstance(cands, list) or not all(isinstance(c, str) for c in cands):
        raise errors.AdapterProtocolError("candidates must be a list of strings", id=msg["id"])
    if not cands:
        raise errors.AdapterProtocolError("adapter returned no candidates", id=msg["id"])
    scores = msg.get("scores")
    if scores is None:
        scores = [1.0] * len(cands)
    elif (not isinstance(scores, list) or len(scores) != len(cands)
          or not all(isinstance(s, (int, float)) and not isinstance(s, bool) for s in scores)):
        raise errors.AdapterProtocolError("scores must be numbers, one per candidate", id=msg["id"])
    return msg["id"], cands, [float(s) for s in scores]


class AdapterClient:
    """Connection to one adapter peer; use as a context manager."""

    def __init__(self, config: AdapterConfig):
        self.config = config
        self._proc = None
        self._sock = None
        self._rfile = None
        self._wfile = None
        self._write_lock = threading.Lock()
        self._cond = threading.Condition()
        self._responses: dict[str, tuple] = {}
        self._failure: Exception | None = None
        self._reader = None

    def __enter__(self):
        self.open()
        return self

    def __exit__(self, *exc):
        self.close()

    def open(self):
        cfg = self.config
        if not cfg.configured:
            raise errors.AdapterUnavailable("no summarizer adapter configured")
        try:
            if cfg.command:
                self._proc = subprocess.Popen(
                    list(cfg.command), stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                )
                self._rfile, self._wfile = self._proc.stdout, self._proc.stdin
            else:
                host, _, port = cfg.address.rpartition(":")
                self._sock = socket.create_connection((host, int(port)), timeout=cfg.timeout)
                self._sock.settimeout(None)
                self._rfile = self._sock.makefile("rb")
                self._wfile = self._sock.makefile("wb")
        except (OSError, ValueError) as exc:
            raise errors.AdapterUnavailable(f"cannot start adapter: {exc}") from exc
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()

    def close(self):
        if self._sock is not None:
            # wakes the reader thread; closing its buffered file first would deadlock
            try:
                self._sock.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
        try:
            if self._wfile is not None:
                self._wfile.close()
        except OSError:
            pass
        if self._proc is not None:
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()
        if self._reader is not None:
            self._reader.join(timeout=5)
        try:
            if self._rfile is not None:
                self._rfile.close()
        except OSError:
            pass
        if self._sock is not None:
            self._sock.close()

    def _read_loop(self):
        try:
            for line in self._rfile:
                if not line.strip():
                    continue
                rid, cands, scores = decode_response(line)
                with self._cond:
                    self._responses[rid] = (cands, scores)
                    self._cond.notify_all()
            failure = errors.AdapterUnavailable("adapter closed its output stream")
        except errors.AdapterProtocolError as exc:
            failure = exc
        except (OSError, ValueError) as exc:
            failure = errors.AdapterUnavailable(f"adapter stream error: {exc}")
        with self._cond:
            self._failure = failure
            self._cond.notify_all()

    def request(self, rid: str, text: str, n: int) -> tuple[list[str], list[float]]:
        if not text.strip():
            raise errors.ValidationError("segment text is empty")
        try:
            with self._write_lock:
                self._wfile.write(encode_request(rid, text, n))
                self._wfile.flush()
        except (OSError, ValueError) as exc:
            raise errors.AdapterUnavailable(f"cannot write to adapter: {exc}") from exc
        with self._cond:
            ok = self._cond.wait_for(
                lambda: rid in self._responses or self._failure is not None,
                timeout=self.config.timeout,
            )
            if rid in self._responses:
                return self._responses.pop(rid)
            if not ok:
                raise errors.AdapterUnavailable(
                    f"no response for {rid} within {self.config.timeout}s", id=rid
                )
            raise self._failure

    def request_many(self, requests, n: int) -> dict[str, tuple[list[str], list[float]]]:
        """Send ``(id, text)`` pairs with at most ``parallelism`` in flight."""
        workers = max(1, min(self.config.parallelism, len(requests)))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {rid: pool.submit(self.request, rid, text, n) for rid, text in requests}
            return {rid: f.result() for rid, f in futures.items()}
