"""HTTP service: sessions, binding, analysis endpoints, error mapping."""
import time

import pytest

pytestmark = pytest.mark.filterwarnings("ignore::DeprecationWarning")

from fastapi.testclient import TestClient  # noqa: E402

from msmkit.analyses import KINDS  # noqa: E402
from msmkit.fixtures import read_fixture  # noqa: E402
from msmkit.service import ENDPOINTS, create_app  # noqa: E402

SURVIVAL_MAPPING = {
    "time": "time",
    "status": "status",
    "covariates": ["celltype", "karno", "age"],
}
IDM_MAPPING = {
    "time1": "time1",
    "event1": "event1",
    "stime": "Stime",
    "event": "event",
    "covariates": ["rx", "age"],
}


@pytest.fixture(scope="module")
def client():
    with TestClient(create_app()) as c:
        yield c


def upload(client, fixture, kind, filename=None):
    r = client.post(
        "/sessions",
        files={"file": (filename or fixture, read_fixture(fixture), "text/csv")},
        data={"kind": kind},
    )
    assert r.status_code == 200, r.text
    return r.json()


def bind(client, sid, mapping, kind=None):
    body = {"mapping": mapping}
    if kind is not None:
        body["kind"] = kind
    r = client.post(f"/sessions/{sid}/bind", json=body)
    assert r.status_code == 200, r.text
    return r.json()


@pytest.fixture(scope="module")
def survival_sid(client):
    sid = upload(client, "veteran.csv", "survival")["session_id"]
    bind(client, sid, SURVIVAL_MAPPING)
    return sid


@pytest.fixture(scope="module")
def idm_sid(client):
    sid = upload(client, "colonIDM.csv", "idm")["session_id"]
    bind(client, sid, IDM_MAPPING)
    return sid


class TestHealth:
    def test_health(self, client):
        r = client.get("/health")
        assert r.status_code == 200
        body = r.json()
        assert body["ok"] is True
        assert isinstance(body["version"], str)

    def test_cors_headers(self, client):
        r = client.get("/health", headers={"Origin": "http://localhost:5173"})
        assert r.headers.get("access-control-allow-origin") == "*"


class TestSessions:
    def test_create_session_payload(self, client):
        body = upload(client, "veteran.csv", "survival", filename="vets.csv")
        assert body["kind"] == "survival"
        assert body["filename"] == "vets.csv"
        assert body["n_rows"] == 137
        cols = {c["name"]: c["type"] for c in body["columns"]}
        assert cols["time"] == "numeric"
        assert cols["celltype"] == "categorical"
        assert len(body["preview"]) == 20

    def test_unknown_kind_400(self, client):
        r = client.post(
            "/sessions",
            files={"file": ("x.csv", b"a,b\n1,2\n", "text/csv")},
            data={"kind": "cohort"},
        )
        assert r.status_code == 400
        body = r.json()
        assert body["error"] == "unknown_kind"
        assert body["detail"]["allowed"] == list(KINDS)
        assert set(body) == {"error", "message", "detail"}

    def test_upload_limit_413(self):
        with TestClient(create_app(upload_limit=64)) as small:
            payload = b"a,b\n" + b"1,2\n" * 100
            r = small.post(
                "/sessions",
                files={"file": ("big.csv", payload, "text/csv")},
                data={"kind": "survival"},
            )
            assert r.status_code == 413
            body = r.json()
            assert body["error"] == "upload_too_large"
            assert body["detail"]["limit"] == 64
            assert body["detail"]["size"] == len(payload)

    def test_bad_csv_422(self, client):
        r = client.post(
            "/sessions",
            files={"file": ("bad.csv", b"a,b\n1\n2,3\n", "text/csv")},
            data={"kind": "survival"},
        )
        assert r.status_code == 422
        assert r.json()["error"] == "ragged_rows"

    def test_bind_unknown_session_404(self, client):
        r = client.post("/sessions/nope/bind", json={"mapping": SURVIVAL_MAPPING})
        assert r.status_code == 404
        assert r.json()["error"] == "not_found"

    def test_ttl_eviction(self):
        with TestClient(create_app(session_ttl=0.05)) as c:
            sid = upload(c, "veteran.csv", "survival")["session_id"]
            time.sleep(0.12)
            r = c.post(f"/sessions/{sid}/bind", json={"mapping": SURVIVAL_MAPPING})
            assert r.status_code == 404


class TestBind:
    def test_bind_survival_report(self, client):
        sid = upload(client, "veteran.csv", "survival")["session_id"]
        body = bind(client, sid, SURVIVAL_MAPPING)
        assert body["ok"] is True
        assert body["validation_report"] == {
            "kind": "survival",
            "n": 137,
            "n_dropped": 0,
            "covariates": ["celltype", "karno", "age"],
        }

    def test_bind_msm_reports_system(self, client):
        sid = upload(client, "colonIDM.csv", "msm")["session_id"]
        body = bind(
            client,
            sid,
            {
                "n_states": 3,
                "labels": ["healthy", "rec", "death"],
                "edges": [[1, 2], [1, 3], [2, 3]],
                "states": [[2, "time1", "event1"], [3, "Stime", "event"]],
            },
        )
        assert body["validation_report"]["kind"] == "msm"
        assert body["validation_report"]["system"]["n_states"] == 3

    def test_bind_missing_key_422(self, client):
        sid = upload(client, "veteran.csv", "survival")["session_id"]
        r = client.post(f"/sessions/{sid}/bind", json={"mapping": {"time": "time"}})
        assert r.status_code == 422
        assert r.json()["error"] == "validation_error"

    def test_bind_kind_override(self, client):
        sid = upload(client, "colonIDM.csv", "survival")["session_id"]
        bind(client, sid, IDM_MAPPING, kind="idm")
        r = client.post(f"/sessions/{sid}/counts", json={})
        assert r.status_code == 200

    def test_rebind_replaces_mapping(self, client):
        sid = upload(client, "veteran.csv", "survival")["session_id"]
        bind(client, sid, SURVIVAL_MAPPING)
        body = bind(client, sid, {"time": "time", "status": "status"})
        assert body["validation_report"]["covariates"] == []


class TestAnalysisEndpoints:
    SURVIVAL_CALLS = {
        "km": {},
        "ranktest": {"group_by": "celltype"},
        "cox": {"covariates": ["karno"]},
        "phtest": {"covariates": ["karno"]},
        "anova": {"covariates": ["karno", "age"]},
        "aft": {"covariates": ["karno"], "distribution": "weibull"},
    }
    IDM_CALLS = {
        "counts": {},
        "msmreg": {"covariates": ["rx"]},
        "transprob": {"method": "aj", "s": 365, "grid": [730.0]},
        "cif": {"grid": [365.0, 730.0]},
        "markov/local": {"method": "logrank", "s": 365, "transition": [2, 3]},
        "markov/global": {"method": "cox", "transition": [2, 3]},
    }

    def test_endpoint_table_is_complete(self):
        assert set(ENDPOINTS) == set(self.SURVIVAL_CALLS) | set(self.IDM_CALLS)

    @pytest.mark.parametrize("suffix", sorted(SURVIVAL_CALLS))
    def test_survival_endpoints(self, client, survival_sid, suffix):
        r = client.post(f"/sessions/{survival_sid}/{suffix}", json=self.SURVIVAL_CALLS[suffix])
        assert r.status_code == 200, r.text
        body = r.json()
        assert set(body) == {"analysis", "params", "result"}
        assert body["analysis"] == ENDPOINTS[suffix]
        assert "seed" in body["params"]

    @pytest.mark.parametrize("suffix", sorted(IDM_CALLS))
    def test_idm_endpoints(self, client, idm_sid, suffix):
        r = client.post(f"/sessions/{idm_sid}/{suffix}", json=self.IDM_CALLS[suffix])
        assert r.status_code == 200, r.text
        body = r.json()
        assert body["analysis"] == ENDPOINTS[suffix]
        assert "seed" in body["params"]

    def test_empty_body_means_defaults(self, client, survival_sid):
        r = client.post(f"/sessions/{survival_sid}/km")
        assert r.status_code == 200
        assert r.json()["params"]["conf_level"] == 0.95

    def test_unknown_session_404(self, client):
        r = client.post("/sessions/absent/km", json={})
        assert r.status_code == 404

    def test_not_bound_409(self, client):
        sid = upload(client, "veteran.csv", "survival")["session_id"]
        r = client.post(f"/sessions/{sid}/km", json={})
        assert r.status_code == 409
        assert r.json()["error"] == "not_bound"

    def test_wrong_kind_409(self, client, idm_sid):
        r = client.post(f"/sessions/{idm_sid}/km", json={})
        assert r.status_code == 409
        body = r.json()
        assert body["error"] == "incompatible_mapping"
        assert body["detail"]["bound"] == "idm"

    def test_unknown_param_422(self, client, survival_sid):
        r = client.post(f"/sessions/{survival_sid}/km", json={"conf_levle": 0.9})
        assert r.status_code == 422
        body = r.json()
        assert body["error"] == "validation_error"
        assert body["detail"]["unknown"] == ["conf_levle"]

    def test_computation_error_mapped(self, client, survival_sid):
        # collinear design -> singular information matrix
        r = client.post(
            f"/sessions/{survival_sid}/cox", json={"covariates": ["karno", "karno"]}
        )
        assert r.status_code == 422
        assert r.json()["error"] in {"singular_information", "validation_error"}

    def test_route_is_not_query_overridable(self, client, survival_sid):
        r = client.post(f"/sessions/{survival_sid}/km?_name=cox", json={})
        assert r.status_code == 200
        assert r.json()["analysis"] == "km"

    def test_idempotent_bootstrap_bytes(self, client, idm_sid):
        params = {"method": "aj", "s": 365, "grid": [730.0, 1095.0], "n_boot": 10, "seed": 42}
        a = client.post(f"/sessions/{idm_sid}/transprob", json=params)
        b = client.post(f"/sessions/{idm_sid}/transprob", json=params)
        assert a.content == b.content

    def test_sessions_are_isolated(self, client, survival_sid):
        other = upload(client, "aml.csv", "survival")["session_id"]
        bind(client, other, {"time": "time1", "status": "status"})
        a = client.post(f"/sessions/{survival_sid}/km", json={}).json()
        b = client.post(f"/sessions/{other}/km", json={}).json()
        assert a["result"] != b["result"]

    def test_timeout_503(self):
        with TestClient(create_app(timeout=1e-4)) as c:
            sid = upload(c, "veteran.csv", "survival")["session_id"]
            bind(c, sid, SURVIVAL_MAPPING)
            r = c.post(f"/sessions/{sid}/cox", json={"covariates": ["karno", "age"]})
            assert r.status_code == 503
            body = r.json()
            assert body["error"] == "timeout"
            assert body["detail"]["analysis"] == "cox"
