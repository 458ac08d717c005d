import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from helpers import random_gray
from tfq.pairstudio import create_app, scan_corpus
from tfq.raycast import save_image


@pytest.fixture
def corpus_dir(tmp_path):
    rng = np.random.default_rng(0)
    root = tmp_path / "corpus"
    root.mkdir()
    for i in range(5):
        save_image(random_gray(rng, 16, 12), root / f"img_{i}.png")
    return root


def make_client(corpus_dir, tmp_path, seed=1):
    out = tmp_path / "pairs.jsonl"
    app = create_app(corpus_dir, out, seed=seed)
    return TestClient(app), out


def annotation(ref, sim, dis):
    return {"referenceId": ref, "similarId": sim, "dissimilarId": dis}


class TestImages:
    def test_empty_corpus_lists_empty(self, tmp_path):
        root = tmp_path / "empty"
        root.mkdir()
        client, _ = make_client(root, tmp_path)
        r = client.get("/api/images")
        assert r.status_code == 200
        assert r.json() == []

    def test_corpus_listing_sorted_with_sizes(self, corpus_dir, tmp_path):
        client, _ = make_client(corpus_dir, tmp_path)
        entries = client.get("/api/images").json()
        assert [e["id"] for e in entries] == sorted(e["id"] for e in entries)
        assert all((e["width"], e["height"]) == (16, 12) for e in entries)
        assert len(entries) == 5

    def test_non_image_files_skipped(self, corpus_dir, tmp_path):
        (corpus_dir / "notes.txt").write_text("not an image")
        (corpus_dir / "broken.png").write_bytes(b"junk")
        client, _ = make_client(corpus_dir, tmp_path)
        ids = [e["id"] for e in client.get("/api/images").json()]
        assert "notes.txt" not in ids and "broken.png" not in ids
        assert len(ids) == 5

    def test_image_served_with_cache_header(self, corpus_dir, tmp_path):
        client, _ = make_client(corpus_dir, tmp_path)
        r = client.get("/img/img_0.png")
        assert r.status_code == 200
        assert "max-age" in r.headers["cache-control"]

    def test_path_escape_blocked(self, corpus_dir, tmp_path):
        client, _ = make_client(corpus_dir, tmp_path)
        assert client.get("/img/../secret.png").status_code in (400, 404)


class TestSession:
    def test_grid_excludes_reference_and_covers_rest(self, corpus_dir, tmp_path):
        client, _ = make_client(corpus_dir, tmp_path)
        s = client.get("/api/session").json()
        grid_ids = [e["id"] for e in s["grid"]]
        assert s["reference"]["id"] not in grid_ids
        assert len(grid_ids) == 4
        assert len(set(grid_ids)) == 4

    def test_three_image_corpus_grid_of_two(self, tmp_path):
        rng = np.random.default_rng(2)
        root = tmp_path / "three"
        root.mkdir()
        for i in range(3):
            save_image(random_gray(rng, 8, 8), root / f"{i}.png")
        client, _ = make_client(root, tmp_path)
        assert len(client.get("/api/session").json()["grid"]) == 2

    def test_too_small_corpus_409(self, tmp_path):
        rng = np.random.default_rng(3)
        root = tmp_path / "two"
        root.mkdir()
        for i in range(2):
            save_image(random_gray(rng, 8, 8), root / f"{i}.png")
        client, _ = make_client(root, tmp_path)
        assert client.get("/api/session").status_code == 409

    def test_seeded_sessions_reproducible(self, corpus_dir, tmp_path):
        c1, _ = make_client(corpus_dir, tmp_path / "a", seed=99)
        (tmp_path / "b").mkdir(exist_ok=True)
        c2, _ = make_client(corpus_dir, tmp_path / "b", seed=99)
        for _ in range(3):
            assert c1.get("/api/session").json() == c2.get("/api/session").json()


class TestPairs:
    def test_one_annotation_two_lines(self, corpus_dir, tmp_path):
        client, out = make_client(corpus_dir, tmp_path)
        r = client.post("/api/pairs", json=annotation("img_0.png", "img_1.png", "img_2.png"))
        assert r.status_code == 201
        lines = [json.loads(l) for l in out.read_text().splitlines()]
        assert lines == [
            {"a": "img_0.png", "b": "img_1.png", "label": 1},
            {"a": "img_0.png", "b": "img_2.png", "label": 0},
        ]

    def test_unknown_id_400(self, corpus_dir, tmp_path):
        client, out = make_client(corpus_dir, tmp_path)
        r = client.post("/api/pairs", json=annotation("img_0.png", "nope.png", "img_2.png"))
        assert r.status_code == 400
        assert not out.exists() or out.read_text() == ""

    def test_duplicate_ids_400(self, corpus_dir, tmp_path):
        client, _ = make_client(corpus_dir, tmp_path)
        r = client.post("/api/pairs", json=annotation("img_0.png", "img_0.png", "img_2.png"))
        assert r.status_code == 400

    def test_malformed_body_400(self, corpus_dir, tmp_path):
        client, _ = make_client(corpus_dir, tmp_path)
        r = client.post("/api/pairs", json={"referenceId": "img_0.png"})
        assert r.status_code == 400

    def test_submit_reports_running_count(self, corpus_dir, tmp_path):
        client, _ = make_client(corpus_dir, tmp_path)
        assert client.post("/api/submit").json() == {"pairCount": 0}
        client.post("/api/pairs", json=annotation("img_0.png", "img_1.png", "img_2.png"))
        client.post("/api/pairs", json=annotation("img_3.png", "img_4.png", "img_0.png"))
        assert client.post("/api/submit").json() == {"pairCount": 4}
        # submit is idempotent
        assert client.post("/api/submit").json() == {"pairCount": 4}

    def test_line_count_is_twice_annotations(self, corpus_dir, tmp_path):
        client, out = make_client(corpus_dir, tmp_path)
        for k in range(7):
            ids = [f"img_{(k + j) % 5}.png" for j in range(3)]
            assert client.post("/api/pairs", json=annotation(*ids)).status_code == 201
        assert len(out.read_text().splitlines()) == 14

    def test_restart_resumes_count_and_keeps_lines(self, corpus_dir, tmp_path):
        client, out = make_client(corpus_dir, tmp_path)
        client.post("/api/pairs", json=annotation("img_0.png", "img_1.png", "img_2.png"))
        before = out.read_text()

        restarted = TestClient(create_app(corpus_dir, out, seed=1))
        assert restarted.post("/api/submit").json() == {"pairCount": 2}
        assert out.read_text() == before
        restarted.post("/api/pairs", json=annotation("img_1.png", "img_2.png", "img_3.png"))
        assert restarted.post("/api/submit").json() == {"pairCount": 4}

    def test_pairs_file_loadable_by_trainer(self, corpus_dir, tmp_path):
        from tfq.metric.train import load_pairs

        client, out = make_client(corpus_dir, tmp_path)
        client.post("/api/pairs", json=annotation("img_0.png", "img_1.png", "img_2.png"))
        pairs = load_pairs(out)
        assert [p.label for p in pairs] == [1, 0]
        assert pairs[0].a == "img_0.png"


class TestScanCorpus:
    def test_nested_directories_use_posix_relpaths(self, tmp_path):
        rng = np.random.default_rng(4)
        root = tmp_path / "nested"
        (root / "sub").mkdir(parents=True)
        save_image(random_gray(rng, 8, 8), root / "sub" / "deep.png")
        entries = scan_corpus(root)
        assert entries[0].id == "sub/deep.png"
        assert entries[0].relpath == "sub/deep.png"
