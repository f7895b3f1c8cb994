import json
import socket
import threading
import time
from collections import Counter
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import pytest

from pagesort.models import ClassLabel, PageOrigin

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def golden():
    with open(FIXTURES / "golden.json", encoding="utf-8") as f:
        return json.load(f)


def fixture_bytes(name: str) -> bytes:
    return (FIXTURES / name).read_bytes()


def origin(url: str = "http://www.example.com/") -> PageOrigin:
    return PageOrigin.from_url(url)


def page_html(body: str, title: str = "") -> str:
    return f"<html><head><title>{title}</title></head><body>{body}</body></html>"


def write_pages(directory: Path, pages):
    """Write (id, url, html, label) tuples as files plus a manifest; return the manifest path."""
    directory.mkdir(parents=True, exist_ok=True)
    lines = ["# id\turl\thtml_path\tclass"]
    for page_id, url, html, label in pages:
        (directory / f"{page_id}.html").write_text(html, encoding="utf-8")
        lines.append(f"{page_id}\t{url}\t{page_id}.html\t{label.value}")
    manifest = directory / "manifest.tsv"
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return manifest


@pytest.fixture
def three_page_manifest(tmp_path):
    return write_pages(
        tmp_path / "corpus",
        [
            ("uni", "http://www.uni-example.edu/", page_html("<p>student faculty degree</p>"), ClassLabel.EDUCATION),
            ("gov", "http://www.gov-example.gov/", page_html("<p>ministry policy</p>"), ClassLabel.GOVERNMENT),
            ("daily", "http://www.daily-example.com/", page_html("<p>news media editor</p>"), ClassLabel.NEWS_MEDIA),
        ],
    )


# ---------------------------------------------------------------------------
# Local HTTP server
# ---------------------------------------------------------------------------

class _State:
    def __init__(self):
        self.lock = threading.Lock()
        self.hits = Counter()
        self.in_flight = 0
        self.max_in_flight = 0
        self.delay = 0.0


class _Handler(BaseHTTPRequestHandler):
    state: _State

    def log_message(self, format, *args):
        pass

    def _send(self, status: int, body: bytes = b"", headers=None):
        self.send_response(status)
        self.send_header("Content-Length", str(len(body)))
        for key, value in (headers or {}).items():
            self.send_header(key, value)
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        state = self.state
        with state.lock:
            state.hits[self.path] += 1
            state.in_flight += 1
            state.max_in_flight = max(state.max_in_flight, state.in_flight)
        try:
            if state.delay:
                time.sleep(state.delay)
            parts = self.path.strip("/").split("/")
            if parts[0] == "page":
                body = f'<html><body><p>news {parts[-1]}</p><a href="/next.php">next</a></body></html>'
                self._send(200, body.encode("utf-8"), {"Content-Type": "text/html; charset=utf-8"})
            elif parts[0] == "latin1":
                self._send(200, b"<p>caf\xe9 business</p>", {"Content-Type": "text/html; charset=iso-8859-1"})
            elif parts[0] == "redirect":
                remaining = int(parts[1])
                if remaining == 0:
                    self._send(200, b"<html><body>landed</body></html>", {"Content-Type": "text/html"})
                else:
                    self._send(302, headers={"Location": f"/redirect/{remaining - 1}"})
            else:
                self._send(404, b"not found", {"Content-Type": "text/plain"})
        finally:
            with state.lock:
                state.in_flight -= 1


class LocalServer:
    def __init__(self):
        self.state = _State()
        handler = type("Handler", (_Handler,), {"state": self.state})
        self.httpd = ThreadingHTTPServer(("127.0.0.1", 0), handler)
        self.httpd.daemon_threads = True
        self.thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)

    @property
    def base_url(self) -> str:
        host, port = self.httpd.server_address[:2]
        return f"http://{host}:{port}"

    def url(self, path: str) -> str:
        return f"{self.base_url}{path}"

    def hits(self, path: str) -> int:
        with self.state.lock:
            return self.state.hits[path]

    @property
    def total_hits(self) -> int:
        with self.state.lock:
            return sum(self.state.hits.values())


@pytest.fixture
def http_server():
    server = LocalServer()
    server.thread.start()
    yield server
    server.httpd.shutdown()
    server.httpd.server_close()


@pytest.fixture
def dead_url():
    """A url on a port nothing listens on."""
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        port = sock.getsockname()[1]
    return f"http://127.0.0.1:{port}/"
