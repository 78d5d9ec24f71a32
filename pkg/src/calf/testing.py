"""Conformance checks for implementations of the /score wire protocol.

Any service claiming compatibility must pass ``check_score_endpoint``
against the canned batches shipped with the package: correct shape,
scores in [0,1], batch order preserved (batch results match single-pair
calls), deterministic repeats, and JSON ``{"error": ...}`` bodies with
non-200 status for malformed requests.

A reference server backed by the lexical scorer is included so the remote
client and the conformance suite can be exercised hermetically.
"""
from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from importlib.resources import files

import requests

from .errors import ContractError, DataError
from .fcm import LexicalScorer

_ORDER_TOL = 1e-6


def score_url(endpoint: str) -> str:
    if not endpoint:
        raise ContractError("endpoint must be nonempty")
    base = endpoint.rstrip("/")
    return base if base.endswith("/score") else base + "/score"


def load_wire_batches(path: str | None = None) -> list[list[dict]]:
    """Request batches for the conformance suite: the canned set shipped
    with the package, or a custom JSON file of the same shape.
    """
    if path is None:
        name = "wire_batches.json"
        text = (files("calf") / "data" / name).read_text(encoding="utf-8")
    else:
        name = path
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise DataError(str(exc), path=path) from exc
    try:
        raw = json.loads(text)
    except ValueError as exc:
        raise DataError(f"not valid JSON: {exc}", path=name) from exc
    if not isinstance(raw, list) or not raw:
        raise DataError("batch file must hold a nonempty list of batches", path=name)
    for batch in raw:
        if not isinstance(batch, list) or not batch:
            raise DataError("each batch must be a nonempty list of pairs", path=name)
        for pair in batch:
            if not isinstance(pair, dict) or set(pair) != {"claim", "evidence"}:
                raise DataError(f"bad pair shape: {pair!r:.120}", path=name)
    return raw


def _post_json(url: str, payload, timeout: float) -> requests.Response:
    return requests.post(url, json=payload, timeout=timeout)


def _valid_scores(body, expected: int) -> list[float] | None:
    if not isinstance(body, dict):
        return None
    scores = body.get("scores")
    if not isinstance(scores, list) or len(scores) != expected:
        return None
    out = []
    for s in scores:
        if isinstance(s, bool) or not isinstance(s, (int, float)) or not 0 <= s <= 1:
            return None
        out.append(float(s))
    return out


def check_score_endpoint(
    endpoint: str,
    batches: list[list[dict]] | None = None,
    timeout: float = 10.0,
) -> list[str]:
    """Run the conformance suite; returns a list of problems (empty = pass)."""
    url = score_url(endpoint)
    if batches is None:
        batches = load_wire_batches()
    problems: list[str] = []

    for bi, batch in enumerate(batches):
        payload = {"pairs": batch}
        try:
            resp = _post_json(url, payload, timeout)
        except requests.RequestException as exc:
            problems.append(f"batch {bi}: request failed: {exc}")
            continue
        if resp.status_code != 200:
            problems.append(f"batch {bi}: HTTP {resp.status_code}")
            continue
        try:
            body = resp.json()
        except ValueError:
            problems.append(f"batch {bi}: non-JSON response")
            continue
        scores = _valid_scores(body, len(batch))
        if scores is None:
            problems.append(f"batch {bi}: malformed scores: {body!r:.200}")
            continue

        # Deterministic repeat: same payload, same scores.
        again = _valid_scores(_post_json(url, payload, timeout).json(), len(batch))
        if again != scores:
            problems.append(f"batch {bi}: repeat returned different scores")

        # Order preserved: each batch entry matches its single-pair score.
        for pi, pair in enumerate(batch):
            single = _post_json(url, {"pairs": [pair]}, timeout)
            one = _valid_scores(single.json(), 1) if single.status_code == 200 else None
            if one is None:
                problems.append(f"batch {bi} pair {pi}: single-pair call failed")
            elif abs(one[0] - scores[pi]) > _ORDER_TOL:
                problems.append(
                    f"batch {bi} pair {pi}: batch score {scores[pi]} != single {one[0]}"
                )

    # Malformed bodies must come back as non-200 with a JSON error field.
    for label, raw in (("non-JSON body", b"{not json"), ("wrong shape", b'{"pairs": 3}')):
        try:
            resp = requests.post(
                url, data=raw, headers={"Content-Type": "application/json"}, timeout=timeout
            )
        except requests.RequestException as exc:
            problems.append(f"{label}: request failed: {exc}")
            continue
        if resp.status_code == 200:
            problems.append(f"{label}: accepted with HTTP 200")
            continue
        try:
            body = resp.json()
        except ValueError:
            problems.append(f"{label}: error response is not JSON")
            continue
        if not isinstance(body, dict) or not isinstance(body.get("error"), str):
            problems.append(f"{label}: error body lacks an 'error' string")

    return problems


class _ReferenceHandler(BaseHTTPRequestHandler):
    scorer = LexicalScorer()

    def log_message(self, *args) -> None:  # keep test output clean
        pass

    def _reply(self, status: int, body: dict) -> None:
        data = json.dumps(body).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def do_POST(self) -> None:
        if self.path != "/score":
            self._reply(404, {"error": f"no such path: {self.path}"})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            body = json.loads(self.rfile.read(length).decode("utf-8"))
            pairs = body["pairs"]
            if not isinstance(pairs, list):
                raise ValueError("pairs must be a list")
            scores = []
            for pair in pairs:
                claim, evidence = pair["claim"], pair["evidence"]
                if not isinstance(claim, str) or not isinstance(evidence, str):
                    raise ValueError("claim and evidence must be strings")
                if not claim.strip():
                    raise ValueError("claim must be nonempty")
                if not evidence:
                    scores.append(0.0)
                else:
                    scores.append(self.scorer.score(claim, evidence).value)
        except (ValueError, KeyError, TypeError) as exc:
            self._reply(400, {"error": str(exc)})
            return
        self._reply(200, {"scores": scores})


class ReferenceServer:
    """Lexical-scorer /score service on an ephemeral port, for tests.

    Usage: ``with ReferenceServer() as base_url: ...``
    """

    def __init__(self):
        self._httpd = ThreadingHTTPServer(("127.0.0.1", 0), _ReferenceHandler)
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)

    @property
    def base_url(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    def __enter__(self) -> str:
        self._thread.start()
        return self.base_url

    def __exit__(self, *exc_info) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        self._thread.join(timeout=5)
