import pytest
from fastapi.testclient import TestClient

from treefdr.service import app

client = TestClient(app)

TREE = [
    {"node_id": 1, "parent_id": 0},
    {"node_id": 2, "parent_id": 1},
    {"node_id": 3, "parent_id": 1},
    {"node_id": 4, "parent_id": 2},
    {"node_id": 5, "parent_id": 2},
    {"node_id": 6, "parent_id": 3},
    {"node_id": 7, "parent_id": 3},
]

PVALUES = [
    {"node_id": 1, "p": 0.01},
    {"node_id": 2, "p": 0.75},
    {"node_id": 3, "p": 0.008},
    {"node_id": 4, "p": 0.6},
    {"node_id": 5, "p": 0.85},
    {"node_id": 6, "p": 0.03},
    {"node_id": 7, "p": 0.05},
]


def test_health():
    resp = client.get("/health")
    assert resp.status_code == 200
    assert resp.json() == {"status": "ok"}


class TestTestEndpoint:
    def test_posdep_golden(self):
        resp = client.post("/test", json={"tree": TREE, "pvalues": PVALUES})
        assert resp.status_code == 200
        body = resp.json()
        assert body["procedure"] == "posdep"
        assert body["total_rejections"] == 4
        assert [n["id"] for n in body["nodes"] if n["rejected"]] == [1, 3, 6, 7]
        assert body["families"] == [
            {"depth": 1, "R": 1},
            {"depth": 2, "R": 1},
            {"depth": 3, "R": 2},
        ]

    def test_yekutieli(self):
        resp = client.post(
            "/test", json={"tree": TREE, "pvalues": PVALUES, "procedure": "yekutieli"}
        )
        assert resp.status_code == 200
        body = resp.json()
        assert [n["id"] for n in body["nodes"] if n["rejected"]] == [1, 3]
        assert body["nodes"][0]["threshold"] == pytest.approx(0.0174, abs=1e-4)

    def test_alias_token(self):
        resp = client.post(
            "/test", json={"tree": TREE, "pvalues": PVALUES, "procedure": "thm3"}
        )
        assert resp.status_code == 200
        assert resp.json()["procedure"] == "blockpos"

    def test_cycle_rejected(self):
        tree = [{"node_id": 1, "parent_id": 2}, {"node_id": 2, "parent_id": 1}]
        resp = client.post(
            "/test",
            json={"tree": tree, "pvalues": [{"node_id": 1, "p": 0.5}, {"node_id": 2, "p": 0.5}]},
        )
        assert resp.status_code == 400
        assert "cycle" in resp.json()["detail"]

    def test_missing_pvalue(self):
        resp = client.post("/test", json={"tree": TREE, "pvalues": PVALUES[:-1]})
        assert resp.status_code == 400
        assert "node 7" in resp.json()["detail"]

    def test_duplicate_pvalue(self):
        resp = client.post(
            "/test",
            json={"tree": TREE, "pvalues": PVALUES + [{"node_id": 3, "p": 0.1}]},
        )
        assert resp.status_code == 400
        assert "duplicate" in resp.json()["detail"]

    def test_unknown_procedure(self):
        resp = client.post(
            "/test", json={"tree": TREE, "pvalues": PVALUES, "procedure": "hommel"}
        )
        assert resp.status_code == 400

    def test_malformed_body(self):
        resp = client.post("/test", json={"tree": TREE, "pvalues": "not-a-list"})
        assert resp.status_code == 422


class TestCritValuesEndpoint:
    def test_table_values(self):
        resp = client.post("/critvalues", json={"tree": TREE, "r_min": 1, "r_max": 7})
        assert resp.status_code == 200
        body = resp.json()
        assert body["r_values"] == list(range(1, 8))
        node2 = body["rows"][1]
        assert node2["depth"] == 2
        assert node2["thresholds"][1] == pytest.approx(2 * 0.05 / 3, abs=1e-12)

    def test_yekutieli_rejected(self):
        resp = client.post("/critvalues", json={"tree": TREE, "procedure": "yekutieli"})
        assert resp.status_code == 400

    def test_bad_range(self):
        resp = client.post("/critvalues", json={"tree": TREE, "r_min": 9, "r_max": 2})
        assert resp.status_code == 400


class TestSimulateEndpoint:
    def test_custom_tree_deterministic(self):
        req = {
            "roots": 2,
            "fanout": 3,
            "depth": 2,
            "mu": [3.0, 2.0],
            "pi0": 0.6,
            "replications": 12,
            "seed": 5,
            "procedures": ["blockpos", "yekutieli"],
        }
        first = client.post("/simulate", json=req)
        second = client.post("/simulate", json=req)
        assert first.status_code == 200
        assert first.json() == second.json()
        rows = first.json()["rows"]
        assert [r["procedure"] for r in rows] == ["blockpos", "yekutieli"]
        assert all(r["n"] == 12 for r in rows)

    def test_preset(self):
        resp = client.post(
            "/simulate",
            json={"preset": "shallow", "replications": 2, "procedures": ["meinshausen"]},
        )
        assert resp.status_code == 200
        assert resp.json()["rows"][0]["pi0"] == 0.5

    def test_preset_conflict(self):
        resp = client.post(
            "/simulate", json={"preset": "shallow", "roots": 2, "replications": 2}
        )
        assert resp.status_code == 400

    def test_incomplete_custom_tree(self):
        resp = client.post("/simulate", json={"roots": 2, "fanout": 2, "replications": 2})
        assert resp.status_code == 400

    def test_bad_replications(self):
        resp = client.post("/simulate", json={"preset": "shallow", "replications": 0})
        assert resp.status_code == 422  # pydantic-level bound
