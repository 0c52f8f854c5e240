"""End-to-end: the metrics toolkit scoring a 20-example corpus through a live
sidecar (remote embeddings and remote facts), checking every fact-metric
invariant plus determinism, within the 2-minute budget."""

import json
import socket
import threading
import time

import pytest
import requests
import uvicorn

from mira_sidecar.app import create_app
from mira_sidecar.config import SidecarConfig

TEMPLATES = [
    ("The city council approved the {noun} plan on {day}.",
     "Residents said the {noun} debate took months."),
    ("A {noun} crashed near the station and police arrived quickly.",
     "Officials announced an inquiry into the {noun} crash."),
    ("The {noun} company released new figures on {day}.",
     "Analysts called the {noun} results surprising."),
    ("Rescue crews found the missing {noun} team after two days.",
     "The {noun} team survived on melted snow, doctors said."),
]
NOUNS = ["transit", "housing", "ferry", "stadium", "harbor", "railway", "airport",
         "bridge", "tunnel", "library"]
DAYS = ["monday", "tuesday", "wednesday", "thursday", "friday"]


def _corpus_rows(n=20):
    rows = []
    for i in range(n):
        noun = NOUNS[i % len(NOUNS)]
        day = DAYS[i % len(DAYS)]
        t_main, t_extra = TEMPLATES[i % len(TEMPLATES)]
        main_text = (t_main + " " + t_extra).format(noun=noun, day=day)
        assist_text = t_main.format(noun=noun, day=day) + " Witnesses told reporters more."
        summary = t_main.format(noun=noun, day=day)
        rows.append(
            {
                "id": f"fx{i}",
                "split": "test",
                "main": {"doc_id": f"m{i}", "url": f"http://m/{i}", "text": main_text},
                "summary": {"text": summary},
                "assisting": [
                    {"doc_id": f"a{i}", "url": f"http://a/{i}", "text": assist_text}
                ],
            }
        )
    return rows


@pytest.fixture(scope="module")
def sidecar_url():
    port = socket.socket()
    port.bind(("127.0.0.1", 0))
    host, portno = port.getsockname()
    port.close()
    config = uvicorn.Config(
        create_app(SidecarConfig()), host="127.0.0.1", port=portno, log_level="warning"
    )
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    url = f"http://127.0.0.1:{portno}"
    for _ in range(100):
        try:
            if requests.get(f"{url}/health", timeout=1).status_code == 200:
                break
        except requests.ConnectionError:
            time.sleep(0.1)
    else:
        pytest.fail("sidecar did not come up")
    yield url
    server.should_exit = True
    thread.join(timeout=5)


def _read_rows(path):
    lines = path.read_text().splitlines()
    header = lines[0].split("\t")
    return [dict(zip(header, ln.split("\t"))) for ln in lines[1:] if not ln.startswith("#")]


def test_factmetrics_end_to_end(tmp_path, sidecar_url):
    from mira.cli import main as mira_main

    corpus = tmp_path / "fixture.jsonl"
    with open(corpus, "w") as fh:
        for row in _corpus_rows(20):
            fh.write(json.dumps(row) + "\n")

    start = time.perf_counter()
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    args = ["factmetrics", "--corpus", str(corpus), "--provider", "remote",
            "--endpoint", sidecar_url, "--facts", "remote"]
    assert mira_main(args + ["--out", str(out1), "--workers", "4"]) == 0
    assert mira_main(args + ["--out", str(out2), "--workers", "1"]) == 0
    elapsed = time.perf_counter() - start
    assert elapsed < 120.0, f"end-to-end took {elapsed:.1f}s"

    # deterministic across runs and worker counts
    assert (out1 / "factmetrics.tsv").read_bytes() == (out2 / "factmetrics.tsv").read_bytes()

    rows = _read_rows(out1 / "factmetrics.tsv")
    assert len(rows) == 20
    for row in rows:
        sf_d, sf_a, sf_da = (float(row[k]) for k in ("sf_d", "sf_a", "sf_da"))
        rate = float(row["asst_rate"])
        for value in (sf_d, sf_a, sf_da):
            assert -1.0 - 1e-9 <= value <= 1.0 + 1e-9
        assert sf_da >= sf_d - 1e-12  # superset monotonicity
        assert sf_da >= sf_a - 1e-12
        assert 0.0 <= rate <= 1.0
        assert int(row["n_facts"]) > 0
    meta = json.loads((out1 / "factmetrics.json").read_text())["metadata"]
    assert meta["provider_id"].startswith("remote:")

    # the gold summary is lifted from the main document: near-perfect grounding
    agg = json.loads((out1 / "factmetrics.json").read_text())["aggregate"]
    assert agg["sf_d"] > 0.9
