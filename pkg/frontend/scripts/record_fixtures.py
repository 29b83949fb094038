"""Record service responses into frontend/fixtures/*.json.

Runs the session service in-process and captures the exact JSON views the
console's snapshot tests replay, so the UI contract is checked against real
wire payloads without a live server.

Usage: python3 frontend/scripts/record_fixtures.py
"""

import json
import pathlib

from fastapi.testclient import TestClient

from dctdiag.service import create_app

FIXTURES = pathlib.Path(__file__).resolve().parent.parent / "fixtures"

MODAL_LWH = [(1, "L"), (2, "H"), (3, "L"), (4, "H"), (5, "H"), (6, "H")]


def dump(name: str, payload) -> None:
    path = FIXTURES / name
    path.write_text(json.dumps(payload, indent=2) + "\n")
    print(f"wrote {path}")


def main() -> None:
    FIXTURES.mkdir(exist_ok=True)
    client = TestClient(create_app())

    created = client.post(
        "/sessions",
        json={"tactic": "easy_first", "scheme": "band", "pcm": 0.11, "priors": "table2"},
    )
    assert created.status_code == 201, created.text
    view = created.json()
    dump("create_table2.json", view)

    # Two passes of the modal-LWH answer sequence, committing each round.
    sid = view["session_id"]
    steps = [view]
    for type_id, state in MODAL_LWH * 2:
        resp = client.post(
            f"/sessions/{sid}/answer", json={"type_id": type_id, "state": state}
        )
        assert resp.status_code == 200, resp.text
        steps.append(resp.json())
    dump("modal_lwh_session.json", steps)

    # What-if exchange on a fresh session: before, preview, after.
    fresh = client.post(
        "/sessions",
        json={"tactic": "max_gain", "scheme": "band", "pcm": 0.11, "priors": "table2"},
    ).json()
    fid = fresh["session_id"]
    preview = client.post(
        f"/sessions/{fid}/answer",
        json={"type_id": 1, "state": "L", "what_if": True},
    ).json()
    after = client.get(f"/sessions/{fid}").json()
    dump("what_if.json", {"before": fresh, "preview": preview, "after": after})


if __name__ == "__main__":
    main()
