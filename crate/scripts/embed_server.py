#!/usr/bin/env python3
"""Minimal embedding service for `defsim --provider remote`.

POST /embed {"model_id": str, "texts": [str]} -> {"dim": int, "embeddings": [[float]]}

Serves sentence-transformers models; the model named in each request is
loaded on first use and kept. Vectors are returned unnormalized.

    pip install sentence-transformers
    python scripts/embed_server.py --port 8088
"""

import argparse
import json
import os
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from threading import Lock

from sentence_transformers import SentenceTransformer

_models = {}
_lock = Lock()


def model(name):
    with _lock:
        if name not in _models:
            _models[name] = SentenceTransformer(f"sentence-transformers/{name}" if "/" not in name else name)
        return _models[name]


class Handler(BaseHTTPRequestHandler):
    token = None

    def _reply(self, status, body):
        data = json.dumps(body).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def do_POST(self):
        if self.path.rstrip("/") != "/embed":
            return self._reply(404, {"error": "not found"})
        if self.token and self.headers.get("Authorization") != f"Bearer {self.token}":
            return self._reply(401, {"error": "unauthorized"})
        try:
            req = json.loads(self.rfile.read(int(self.headers.get("Content-Length", 0))))
            vecs = model(req["model_id"]).encode(req["texts"], normalize_embeddings=False)
        except (KeyError, ValueError) as e:
            return self._reply(400, {"error": str(e)})
        self._reply(200, {"dim": int(vecs.shape[1]), "embeddings": vecs.astype(float).tolist()})


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--host", default="127.0.0.1")
    ap.add_argument("--port", type=int, default=8088)
    args = ap.parse_args()
    Handler.token = os.environ.get("EMBED_API_TOKEN")
    ThreadingHTTPServer((args.host, args.port), Handler).serve_forever()


if __name__ == "__main__":
    main()
