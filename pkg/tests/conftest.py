import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from courseqa.providers import ProviderConfig


@pytest.fixture
def mock_embed_cfg():
    return ProviderConfig(kind="mock", model_id="mock-embed")


def scripted_completion(script: dict[str, str], echo: bool = False) -> ProviderConfig:
    return ProviderConfig(kind="mock", model_id="mock-completion", script=script, echo=echo)


def write_corpus(tmp_path, docs: list[tuple[str, str, str]], kb_id: str = "kb-test"):
    """docs: (doc_id, kind, text). Returns the manifest path."""
    entries = []
    for doc_id, kind, text in docs:
        fname = f"{doc_id}.txt"
        (tmp_path / fname).write_text(text, encoding="utf-8")
        entries.append(
            {"doc_id": doc_id, "course_id": "course-1", "kind": kind, "path": fname, "metadata": {}}
        )
    manifest = tmp_path / "manifest.json"
    manifest.write_text(json.dumps({"kb_id": kb_id, "documents": entries}), encoding="utf-8")
    return manifest


class _CannedHandler(BaseHTTPRequestHandler):
    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = self.rfile.read(length)
        self.server.seen.append(
            {"path": self.path, "headers": dict(self.headers), "body": json.loads(body or b"{}")}
        )
        status, payload = self.server.responses.pop(0) if self.server.responses else (500, {})
        raw = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(raw)))
        self.end_headers()
        self.wfile.write(raw)

    def log_message(self, *args):
        pass


class CannedBackend:
    """Tiny local HTTP backend with a scripted response queue."""

    def __init__(self):
        self.server = ThreadingHTTPServer(("127.0.0.1", 0), _CannedHandler)
        self.server.responses = []
        self.server.seen = []
        self._thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self._thread.start()

    @property
    def url(self) -> str:
        return f"http://127.0.0.1:{self.server.server_address[1]}/v1"

    @property
    def seen(self):
        return self.server.seen

    def enqueue(self, status: int, payload: dict) -> None:
        self.server.responses.append((status, payload))

    def close(self) -> None:
        self.server.shutdown()
        self.server.server_close()


@pytest.fixture
def http_backend():
    backend = CannedBackend()
    yield backend
    backend.close()
