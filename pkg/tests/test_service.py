"""HTTP service tests via the in-process test client."""

import io

import numpy as np
from fastapi.testclient import TestClient

from spherevort.service import app
from spherevort.sphere import read_field_csv

CLIENT = TestClient(app)

RH44 = {
    "family": "rh-classic",
    "n": 4,
    "m": 4,
    "amplitude": 1.0,
    "omega": 1.0,
}


class TestEndpoints:
    def test_health(self):
        r = CLIENT.get("/health")
        assert r.status_code == 200
        assert r.json() == {"status": "ok"}

    def test_generate(self):
        r = CLIENT.post("/generate", json={**RH44, "nlat": 16, "nlon": 32})
        assert r.status_code == 200
        body = r.json()
        assert (body["nlat"], body["nlon"]) == (16, 32)
        fld, zeta = read_field_csv(io.StringIO(body["csv"]))
        assert zeta is not None
        assert np.all(np.isfinite(fld.values))

    def test_generate_bad_family_422(self):
        r = CLIENT.post("/generate", json={"family": "bogus"})
        assert r.status_code == 422

    def test_verify_pass_and_fail(self):
        ok = CLIENT.post("/verify", json=RH44)
        assert ok.status_code == 200 and ok.json()["passed"] is True
        bad = CLIENT.post(
            "/verify", json={"family": "test-nonsolution", "omega": 1.0}
        )
        assert bad.status_code == 200 and bad.json()["passed"] is False

    def test_algebra_table(self):
        r = CLIENT.get("/algebra/table")
        assert r.status_code == 200
        body = r.json()
        assert body["closed"] is True
        assert body["labels"][:5] == ["D", "dt", "J1", "J2", "J3"]

    def test_algebra_check(self):
        r = CLIENT.post(
            "/algebra/check",
            json={"class_id": "6", "params": {"lambdas": [1.0], "ms": [1]}},
        )
        assert r.status_code == 200 and r.json()["passed"] is True

    def test_algebra_adjoint(self):
        r = CLIENT.post(
            "/algebra/adjoint",
            json={"x": "J2", "eps": -np.pi / 2.0, "y": "J1"},
        )
        assert r.status_code == 200
        assert r.json()["display"] == "J3"

    def test_transform_platzman_roundtrip(self):
        base = {**RH44, "n": 3, "m": 2, "nlat": 16, "nlon": 32, "t": 0.5}
        plain = CLIENT.post("/generate", json=base).json()
        round_trip = CLIENT.post(
            "/transform",
            json={**base, "platzman": ["to_rest", "to_rotating"]},
        ).json()
        f_a, _ = read_field_csv(io.StringIO(plain["csv"]))
        f_b, _ = read_field_csv(io.StringIO(round_trip["csv"]))
        np.testing.assert_allclose(f_b.values, f_a.values, atol=1e-12)

    def test_bench(self):
        r = CLIENT.post(
            "/bench",
            json={**RH44, "dt": 1e-3, "steps": 5, "stride": 5, "track": "4:4"},
        )
        assert r.status_code == 200
        body = r.json()
        assert body["summary"]["completed"] is True
        assert body["summary"]["final_linf_psi_err"] < 1e-8
        assert "step,t,l2_psi_err" in body["csv"]
