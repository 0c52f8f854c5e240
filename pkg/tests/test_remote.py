"""RemoteProvider client behavior against a stub wire-protocol server."""

import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from mira.embeddings import BuiltinProvider, RemoteProvider
from mira.errors import ProviderError

SCHEMA = json.loads(
    (Path(__file__).parent.parent / "schemas" / "provider_wire.schema.json").read_text()
)


class _StubHandler(BaseHTTPRequestHandler):
    server_version = "stub"
    backend = BuiltinProvider()

    def log_message(self, *args):
        pass

    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        self.server.requests.append((self.path, body))
        if self.path == "/embed":
            jsonschema.validate(body, SCHEMA["$defs"]["embed_request"])
            if self.server.break_next:
                self.server.break_next = False
                payload = {"dim": 1, "vectors": []}  # wrong length
            else:
                vectors = self.backend.embed_many(body["texts"]).tolist()
                payload = {"dim": self.backend.dim, "vectors": vectors}
        elif self.path == "/facts":
            jsonschema.validate(body, SCHEMA["$defs"]["facts_request"])
            payload = {
                "facts": [
                    {
                        "doc_id": s["doc_id"],
                        "sentence_index": s["index"],
                        "predicate": [0, 1],
                        "arguments": [[1, 2]],
                        "flat_text": f"stub fact for {s['text'][:20]}",
                    }
                    for s in body["sentences"]
                ]
            }
        else:
            self.send_error(404)
            return
        blob = json.dumps(payload).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(blob)))
        self.end_headers()
        self.wfile.write(blob)


@pytest.fixture
def stub_server():
    server = HTTPServer(("127.0.0.1", 0), _StubHandler)
    server.requests = []
    server.break_next = False
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield server, f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()


class TestRemoteProvider:
    def test_embed_roundtrip_matches_backend(self, stub_server):
        server, endpoint = stub_server
        provider = RemoteProvider(endpoint)
        got = provider.embed_many(["he ran home", "she laughed"])
        want = BuiltinProvider().embed_many(["he ran home", "she laughed"])
        assert np.allclose(got, want)
        for path, body in server.requests:
            jsonschema.validate(body, SCHEMA["$defs"]["embed_request"])

    def test_cache_avoids_refetch(self, stub_server):
        server, endpoint = stub_server
        provider = RemoteProvider(endpoint)
        provider.embed_many(["same text"])
        n = len(server.requests)
        provider.embed_many(["same text"])
        assert len(server.requests) == n

    def test_batching(self, stub_server):
        server, endpoint = stub_server
        provider = RemoteProvider(endpoint, batch_size=3)
        provider.embed_many([f"text {i}" for i in range(7)])
        embed_calls = [b for p, b in server.requests if p == "/embed"]
        assert [len(b["texts"]) for b in embed_calls] == [3, 3, 1]

    def test_malformed_response(self, stub_server):
        server, endpoint = stub_server
        server.break_next = True
        provider = RemoteProvider(endpoint)
        with pytest.raises(ProviderError, match="malformed"):
            provider.embed_many(["whatever"])

    def test_unreachable_endpoint(self):
        provider = RemoteProvider("http://127.0.0.1:9", retries=1, timeout=0.5)
        with pytest.raises(ProviderError, match="unreachable"):
            provider.embed_many(["x"])

    def test_fetch_facts(self, stub_server):
        server, endpoint = stub_server
        provider = RemoteProvider(endpoint)
        facts = provider.fetch_facts(
            [{"doc_id": "d1", "index": 0, "text": "John ran."}]
        )
        jsonschema.validate({"facts": facts}, SCHEMA["$defs"]["facts_response"])
        assert facts[0]["doc_id"] == "d1"

    def test_concurrent_duplicates_coalesce(self, stub_server):
        server, endpoint = stub_server
        provider = RemoteProvider(endpoint)
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=8) as pool:
            results = list(pool.map(lambda _: provider.embed_many(["dup text"]), range(16)))
        fetched = [b for p, b in server.requests if "dup text" in b.get("texts", [])]
        assert len(fetched) <= 2  # coalesced (first fetch may race one straggler)
        assert all(np.array_equal(results[0], r) for r in results)
