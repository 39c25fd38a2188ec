from __future__ import annotations

import numpy as np
import pytest
from fastapi.testclient import TestClient

from pview import Hyperparams, RangeQuery, answer, build_view, error_bounds
from pview.service import create_app
from oracles import make_tensor


@pytest.fixture(scope="module")
def view():
    rng = np.random.default_rng(8)
    dense = rng.integers(0, 30, size=(8, 6))
    return build_view(make_tensor(dense), Hyperparams(1.0), seed=13)


@pytest.fixture(scope="module")
def client(view):
    return TestClient(create_app(view))


def test_schema_endpoint_describes_view(client, view):
    r = client.get("/schema")
    assert r.status_code == 200
    body = r.json()
    assert [a["name"] for a in body["attributes"]] == ["x0", "x1"]
    assert body["attributes"][0]["size"] == 8
    assert body["attributes"][0]["bin_edges"][0] == 0.0
    assert body["blocks"] == len(view.blocks)
    assert body["params"]["lambda"] == pytest.approx(view.params.lam)


def test_query_matches_library_answer(client, view):
    r = client.post(
        "/query",
        json={"ranges": {"x0": {"lo": 1, "hi": 4}, "x1": {"lo": 0, "hi": 2}}, "mu": 0.1},
    )
    assert r.status_code == 200
    body = r.json()
    q = RangeQuery(((1, 4), (0, 2)))
    eb = error_bounds(view, q, 0.1)
    assert body["answer"] == answer(view, q)
    assert body["theta_min"] == eb.theta_min
    assert body["theta_max"] == eb.theta_max
    assert body["mu"] == 0.1
    assert body["blocks_touched"] >= 1
    assert body["elapsed_ms"] >= 0.0


def test_query_unnamed_attributes_span_domain(client, view):
    r = client.post("/query", json={"ranges": {"x0": {"lo": 0, "hi": 7}}})
    full = client.post(
        "/query",
        json={"ranges": {"x0": {"lo": 0, "hi": 7}, "x1": {"lo": 0, "hi": 5}}},
    )
    assert r.json()["answer"] == full.json()["answer"]


def test_query_by_value_maps_half_open_interval(client, view):
    # Unit bins make the value interval [1.0, 5.0) the index range (1, 4).
    by_value = client.post(
        "/query",
        json={"ranges": {"x0": {"lo": 1.0, "hi": 5.0}}, "by_value": True},
    )
    by_index = client.post("/query", json={"ranges": {"x0": {"lo": 1, "hi": 4}}})
    assert by_value.status_code == 200
    assert by_value.json()["answer"] == by_index.json()["answer"]


def test_query_rejects_bad_requests(client):
    cases = [
        ({"ranges": {"x0": {"lo": 0, "hi": 3}}, "mu": 0.0}, 400),
        ({"ranges": {"x0": {"lo": 0, "hi": 3}}, "xi": 0.0}, 400),
        ({"ranges": {"salary": {"lo": 0, "hi": 3}}}, 400),
        ({"ranges": {"x0": {"lo": 0.5, "hi": 3}}}, 400),
        ({"ranges": {"x0": {"lo": 0, "hi": 99}}}, 400),
        ({"ranges": {"x0": {"lo": 3, "hi": 1}}}, 422),
        ({"ranges": {"x0": {"lo": 0}}}, 400),
    ]
    for body, code in cases:
        assert client.post("/query", json=body).status_code == code, body


def test_blocks_endpoint_projects_partition(client, view):
    r = client.get("/blocks", params={"attr_x": "x0", "attr_y": "x1"})
    assert r.status_code == 200
    body = r.json()
    assert body["x_size"] == 8
    assert body["y_size"] == 6
    rects = body["rectangles"]
    assert sum(r["blocks"] for r in rects) == len(view.blocks)
    for rect in rects:
        assert 0 <= rect["x"][0] <= rect["x"][1] < 8
        assert 0 <= rect["y"][0] <= rect["y"][1] < 6


def test_blocks_endpoint_rejects_bad_attributes(client):
    assert client.get("/blocks", params={"attr_x": "x0", "attr_y": "x0"}).status_code == 400
    assert client.get("/blocks", params={"attr_x": "nope", "attr_y": "x1"}).status_code == 400
    assert client.get("/blocks", params={"attr_x": "x0"}).status_code == 400


def test_cors_header_present(client):
    r = client.get("/schema", headers={"Origin": "http://localhost:5173"})
    assert r.headers.get("access-control-allow-origin") == "*"


def test_empty_service_returns_503():
    empty = TestClient(create_app(None))
    assert empty.get("/schema").status_code == 503
    assert empty.post("/query", json={"ranges": {}}).status_code == 503
    assert empty.get("/blocks", params={"attr_x": "a", "attr_y": "b"}).status_code == 503
