import json
import os

import numpy as np
import pytest

from helpers import radial_volume, random_gray, write_toy_corpus, write_toy_pairs
from tfq.cli import main
from tfq.metric.siamese import SiameseModel, save_model
from tfq.raycast import load_image, save_image
from tfq.transfer import Chromosome, expand, smooth, tf_from_json, tf_to_json
from tfq.volume import bin_volume, save_volume


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    vol = radial_volume(16)
    save_volume(vol, root / "vol.vol")
    from tfq.raycast import RenderSettings, render

    planted = Chromosome((0, 0, 128, 128, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0))
    target = render(bin_volume(vol), smooth(expand(planted)), RenderSettings(64, 64))
    save_image(target, root / "target.png")
    return root


class TestUsage:
    def test_no_subcommand_exits_2(self, capsys):
        with pytest.raises(SystemExit) as e:
            main([])
        assert e.value.code == 2

    def test_unknown_flag_exits_2(self, workdir):
        with pytest.raises(SystemExit) as e:
            main(["render", "--volume", str(workdir / "vol.vol"), "--bogus", "x"])
        assert e.value.code == 2

    def test_runtime_error_exits_1(self, tmp_path, capsys):
        rc = main(
            ["render", "--volume", str(tmp_path / "missing.vol"),
             "--tf", str(tmp_path / "tf.json"), "--out", str(tmp_path / "o.png")]
        )
        assert rc == 1
        assert "error:" in capsys.readouterr().err


class TestRender:
    def test_zero_tf_renders_black(self, workdir, tmp_path):
        tf_path = tmp_path / "zero.json"
        tf_path.write_text(json.dumps({"version": 1, "opacity": [0] * 256}))
        out = tmp_path / "out.png"
        rc = main(["render", "--volume", str(workdir / "vol.vol"),
                   "--tf", str(tf_path), "--out", str(out)])
        assert rc == 0
        img = load_image(out)
        assert (img.pixels == 0.0).all()


class TestSeedPop:
    def test_writes_requested_population(self, tmp_path):
        out = tmp_path / "pop.json"
        assert main(["seed-pop", "--pop", "25", "--out", str(out), "--seed", "3"]) == 0
        obj = json.loads(out.read_text())
        assert obj["version"] == 1
        assert len(obj["chromosomes"]) == 25
        assert all(len(c) == 16 for c in obj["chromosomes"])

    def test_seed_reproducible(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        main(["seed-pop", "--pop", "10", "--out", str(a), "--seed", "8"])
        main(["seed-pop", "--pop", "10", "--out", str(b), "--seed", "8"])
        assert a.read_bytes() == b.read_bytes()


class TestSearch:
    def test_mse_oracle_task_improves(self, workdir, tmp_path, capsys):
        out = tmp_path / "tf.json"
        report_path = tmp_path / "report.json"
        rc = main([
            "search", "--volume", str(workdir / "vol.vol"),
            "--target", str(workdir / "target.png"), "--metric", "mse",
            "--pop", "24", "--gens", "6", "--seed", "4",
            "--out", str(out), "--report", str(report_path),
        ])
        assert rc == 0
        report = json.loads(report_path.read_text())
        gen0 = sorted(report["generations"][0])
        median0 = gen0[len(gen0) // 2]
        assert report["best"]["cost"] < 0.1 * median0
        tf = tf_from_json(out.read_text())
        assert tf == smooth(expand(Chromosome(tuple(report["best"]["genes"]))))

    def test_missing_model_for_siamese_is_usage_error(self, workdir, tmp_path, capsys):
        rc = main([
            "search", "--volume", str(workdir / "vol.vol"),
            "--target", str(workdir / "target.png"),
            "--out", str(tmp_path / "tf.json"),
        ])
        assert rc == 1
        assert "--model" in capsys.readouterr().err


class TestEval:
    def test_prints_distance(self, tmp_path, capsys):
        rng = np.random.default_rng(0)
        model = SiameseModel.initialize(rng)
        mpath = tmp_path / "m.bin"
        save_model(model, mpath)
        a, b = tmp_path / "a.png", tmp_path / "b.png"
        save_image(random_gray(rng), a)
        save_image(random_gray(rng), b)
        assert main(["eval", "--model", str(mpath), "--a", str(a), "--b", str(b)]) == 0
        out = capsys.readouterr().out.strip()
        assert float(out) >= 0.0

    def test_identical_images_distance_zero(self, tmp_path, capsys):
        rng = np.random.default_rng(1)
        model = SiameseModel.initialize(rng)
        mpath = tmp_path / "m.bin"
        save_model(model, mpath)
        a = tmp_path / "a.png"
        save_image(random_gray(rng), a)
        main(["eval", "--model", str(mpath), "--a", str(a), "--b", str(a)])
        assert float(capsys.readouterr().out.strip()) == 0.0


class TestTrainCommand:
    def test_train_then_eval_round_trip(self, tmp_path, capsys):
        rng = np.random.default_rng(5)
        corpus = tmp_path / "corpus"
        bright, dark = write_toy_corpus(str(corpus), rng)
        pairs = corpus / "pairs.jsonl"
        write_toy_pairs(str(pairs), bright, dark)
        mpath = tmp_path / "model.bin"
        rc = main(["train", "--images", str(corpus), "--pairs", str(pairs),
                   "--epochs", "2", "--out", str(mpath), "--seed", "1"])
        assert rc == 0
        rc = main(["eval", "--model", str(mpath),
                   "--a", str(corpus / bright[0]), "--b", str(corpus / dark[0])])
        assert rc == 0
        assert float(capsys.readouterr().out.strip()) > 0.0


class TestGradcheckCommand:
    def test_exits_zero_and_reports(self, capsys):
        assert main(["gradcheck"]) == 0
        err = capsys.readouterr().err
        assert "siamese end-to-end" in err
