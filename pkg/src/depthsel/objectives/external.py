"""Client for out-of-process evaluators speaking the line protocol.

One JSON object per line, UTF-8, over a spawned process's stdin/stdout or a
TCP connection:

    handshake  <- {"proto": 1, "depth": N, "objective": "perplexity"|"margin", "name": text}
    request    -> {"id": u64, "remove": [ascending indices]}
    response   <- {"id": u64, "loss": number} | {"id": u64, "error": text}

A background reader demultiplexes responses by id, so several requests may be
in flight up to a configurable limit (default 1: real-model evaluators are
usually serial).
"""

from __future__ import annotations

import json
import socket
import subprocess
import threading

from ..errors import EvaluatorTimeout, HandshakeMismatch, ProtocolError
from ..masks import LayerMask
from .base import Objective

PROTO_VERSION = 1
DEFAULT_TIMEOUT_S = 300.0


class _LineTransport:
    """Line-oriented reader/writer over a subprocess or TCP socket."""

    def __init__(self, cmd=None, tcp=None):
        if (cmd is None) == (tcp is None):
            raise ValueError("exactly one of cmd/tcp must be given")
        self._proc = None
        self._sock = None
        if cmd is not None:
            self._proc = subprocess.Popen(
                list(cmd),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
            self._reader = self._proc.stdout
            self._writer = self._proc.stdin
        else:
            host, _, port = str(tcp).rpartition(":")
            self._sock = socket.create_connection((host, int(port)))
            fh = self._sock.makefile(mode="rw", encoding="utf-8", newline="\n")
            self._reader = fh
            self._writer = fh

    def send_line(self, line: str) -> None:
        self._writer.write(line + "\n")
        self._writer.flush()

    def read_line(self) -> str:
        return self._reader.readline()

    def close(self) -> None:
        try:
            if self._proc is not None:
                self._proc.stdin.close()
                self._proc.terminate()
                self._proc.wait(timeout=5)
            if self._sock is not None:
                self._sock.close()
        except Exception:
            pass


class ExternalObjective(Objective):
    """Objective whose losses come from a remote evaluator process."""

    kind = "external"

    def __init__(
        self,
        transport: _LineTransport,
        timeout_s: float = DEFAULT_TIMEOUT_S,
        in_flight: int = 1,
        eval_budget=None,
        clock=None,
        name=None,
    ):
        self._transport = transport
        self.timeout_s = timeout_s
        hello = self._read_handshake()
        depth = int(hello.get("depth", 0))
        if hello.get("proto") != PROTO_VERSION or depth <= 0:
            transport.close()
            raise HandshakeMismatch(f"bad handshake: {hello!r}")
        self.remote_objective = str(hello.get("objective", ""))
        super().__init__(
            depth=depth,
            eval_budget=eval_budget,
            clock=clock,
            name=name or hello.get("name") or "external",
        )
        self._slots = threading.Semaphore(max(1, in_flight))
        self._next_id = 0
        self._id_lock = threading.Lock()
        self._responses: dict[int, dict] = {}
        self._response_cv = threading.Condition()
        self._reader_dead: str | None = None
        self._reader_thread = threading.Thread(target=self._read_loop, daemon=True)
        self._reader_thread.start()

    def _read_handshake(self) -> dict:
        line = self._transport.read_line()
        if not line:
            raise HandshakeMismatch("evaluator closed the stream before the handshake")
        try:
            return json.loads(line)
        except json.JSONDecodeError as exc:
            raise HandshakeMismatch(f"handshake is not JSON: {line!r}") from exc

    def _read_loop(self) -> None:
        while True:
            line = self._transport.read_line()
            if not line:
                with self._response_cv:
                    self._reader_dead = "evaluator closed the stream"
                    self._response_cv.notify_all()
                return
            line = line.strip()
            if not line:
                continue
            try:
                msg = json.loads(line)
                rid = int(msg["id"])
            except Exception:
                with self._response_cv:
                    self._reader_dead = f"unparseable response line: {line!r}"
                    self._response_cv.notify_all()
                return
            with self._response_cv:
                self._responses[rid] = msg
                self._response_cv.notify_all()

    def _compute_loss(self, mask: LayerMask) -> float:
        with self._id_lock:
            rid = self._next_id
            self._next_id += 1
        request = json.dumps({"id": rid, "remove": list(mask.removed)})
        with self._slots:
            self._transport.send_line(request)
            msg = self._wait_for(rid)
        if "error" in msg:
            raise ProtocolError(f"evaluator error for {mask}: {msg['error']}")
        if "loss" not in msg:
            raise ProtocolError(f"response without loss: {msg!r}")
        return float(msg["loss"])

    def _wait_for(self, rid: int) -> dict:
        def ready():
            return rid in self._responses or self._reader_dead is not None

        with self._response_cv:
            ok = self._response_cv.wait_for(ready, timeout=self.timeout_s)
            if rid in self._responses:
                return self._responses.pop(rid)
            if self._reader_dead is not None:
                raise ProtocolError(self._reader_dead)
            if not ok:
                raise EvaluatorTimeout(f"no response for request {rid} within {self.timeout_s}s")
            raise ProtocolError("response wait ended in an inconsistent state")

    def close(self) -> None:
        self._transport.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def external_connect(
    endpoint: dict,
    eval_budget=None,
    clock=None,
    name=None,
) -> ExternalObjective:
    """Connect per an endpoint descriptor.

    Descriptor keys: either "cmd" (argv list to spawn) or "tcp" ("host:port"),
    plus optional "timeout_s" and "in_flight".
    """
    transport = _LineTransport(cmd=endpoint.get("cmd"), tcp=endpoint.get("tcp"))
    return ExternalObjective(
        transport,
        timeout_s=float(endpoint.get("timeout_s", DEFAULT_TIMEOUT_S)),
        in_flight=int(endpoint.get("in_flight", 1)),
        eval_budget=eval_budget,
        clock=clock,
        name=name,
    )
