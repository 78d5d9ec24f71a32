"""Wire conformance: the pipeline's remote-scorer suite against a live adapter.

The canned batches and the checker both come from the pipeline package's
published testing helpers; the adapter is exercised over real HTTP, not an
in-process test client.
"""
from __future__ import annotations

import threading
import time

import pytest
import requests
import uvicorn

from calf.testing import check_score_endpoint, load_wire_batches
from fcm_adapter.config import AdapterConfig
from fcm_adapter.service import build_app


@pytest.fixture(scope="module")
def adapter_url():
    app = build_app(AdapterConfig())
    server = uvicorn.Server(
        uvicorn.Config(app, host="127.0.0.1", port=0, log_level="warning")
    )
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 10
    while not server.started:
        if time.monotonic() > deadline:
            raise RuntimeError("adapter did not start")
        time.sleep(0.01)
    port = server.servers[0].sockets[0].getsockname()[1]
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=5)


def test_remote_scorer_suite_passes(adapter_url):
    assert check_score_endpoint(adapter_url) == []


def test_all_canned_scores_in_range_and_order_preserved(adapter_url):
    for batch in load_wire_batches():
        resp = requests.post(adapter_url + "/score", json={"pairs": batch}, timeout=10)
        assert resp.status_code == 200
        scores = resp.json()["scores"]
        assert len(scores) == len(batch)
        assert all(0.0 <= s <= 1.0 for s in scores)
        flipped = requests.post(
            adapter_url + "/score", json={"pairs": batch[::-1]}, timeout=10
        ).json()["scores"]
        assert flipped == scores[::-1]
