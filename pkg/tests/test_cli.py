import csv
import json

import numpy as np
import pytest

from arxthermal import generate_arx, load_model, save_dataset
from arxthermal.cli import main
from arxthermal.synth import Scenario, add_measurement_noise, random_input


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def arx_files(tmp_path_factory, arx_train, arx_validate):
    d = tmp_path_factory.mktemp("arx")
    save_dataset(arx_train, d / "train.csv")
    save_dataset(arx_validate, d / "validate.csv")
    return d


@pytest.fixture(scope="module")
def fitted(arx_files):
    out = arx_files / "fit"
    code = main(["fit", "--train", str(arx_files / "train.csv"),
                 "--validate", str(arx_files / "validate.csv"), "--out-dir", str(out)])
    assert code == 0
    return out


class TestGen:
    def test_writes_files_deterministically(self, tmp_path):
        assert main(["gen", "--seed", "3", "--noise-fraction", "0.05",
                     "--out-dir", str(tmp_path / "a")]) == 0
        assert main(["gen", "--seed", "3", "--noise-fraction", "0.05",
                     "--out-dir", str(tmp_path / "b")]) == 0
        for name in ("train.csv", "validate.csv", "scenario.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_scenario_file(self, tmp_path):
        scen = tmp_path / "s.json"
        scen.write_text(json.dumps(Scenario(stages=((1.0, 3.0),), dt=0.5,
                                            training_profile=((50.0, 10.0),),
                                            validation_profile=((20.0, 5.0),)).to_dict()))
        assert main(["gen", "--scenario", str(scen), "--out-dir", str(tmp_path)]) == 0
        assert len(rows(tmp_path / "train.csv")) == 100

    def test_negative_noise(self, tmp_path):
        assert main(["gen", "--noise-std", "-1", "--out-dir", str(tmp_path)]) == 2

    def test_no_stages(self, tmp_path):
        scen = tmp_path / "s.json"
        scen.write_text('{"stages": []}')
        assert main(["gen", "--scenario", str(scen), "--out-dir", str(tmp_path)]) == 2


class TestFit:
    def test_recovers_true_orders(self, fitted, true_model):
        model = load_model(fitted / "model.json")
        assert (model.na, model.nb, model.nk) == (2, (2,), (1,))
        np.testing.assert_allclose(model.a, true_model.a, rtol=1e-6)
        report = json.loads((fitted / "report.json").read_text())
        assert report["validation"]["fit_percent"] >= 99.9
        assert report["config"]["na_max"] == 4
        assert len(rows(fitted / "candidates.csv")) == 4 * 4 * 4

    def test_missing_validate(self, arx_files, capsys):
        assert main(["fit", "--train", str(arx_files / "train.csv")]) == 2

    def test_nonexistent_file(self, arx_files, tmp_path):
        assert main(["fit", "--train", str(tmp_path / "nope.csv"),
                     "--validate", str(arx_files / "validate.csv"),
                     "--out-dir", str(tmp_path)]) == 2

    def test_zero_na(self, arx_files, tmp_path):
        assert main(["fit", "--train", str(arx_files / "train.csv"),
                     "--validate", str(arx_files / "validate.csv"), "--na-max", "0",
                     "--out-dir", str(tmp_path)]) == 2

    def test_byte_identical_reruns(self, arx_files, tmp_path):
        args = ["fit", "--train", str(arx_files / "train.csv"),
                "--validate", str(arx_files / "validate.csv"), "--na-max", "3",
                "--nb-max", "3", "--nk-max", "1"]
        assert main(args + ["--out-dir", str(tmp_path / "a")]) == 0
        assert main(args + ["--out-dir", str(tmp_path / "b")]) == 0
        for name in ("model.json", "candidates.csv", "train_prediction.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_all_unstable(self, tmp_path):
        n = 60
        path = tmp_path / "grow.csv"
        with open(path, "w") as fh:
            fh.write("t,P,T\n")
            for k in range(n):
                fh.write(f"{k},0,{1.1 ** k!r}\n")
        assert main(["fit", "--train", str(path), "--validate", str(path),
                     "--na-max", "1", "--nb-max", "1", "--nk-max", "0",
                     "--ambient-mode", "explicit", "--ambient", "0",
                     "--out-dir", str(tmp_path)]) == 4


class TestSimulate:
    def test_replays_training_trace(self, fitted, arx_files, tmp_path):
        out = tmp_path / "pred.csv"
        assert main(["simulate", "--model", str(fitted / "model.json"),
                     "--data", str(arx_files / "train.csv"), "--out", str(out)]) == 0
        got = np.array([float(r["predicted"]) for r in rows(out)])
        want = np.array([float(r["predicted"]) for r in rows(fitted / "train_prediction.csv")])
        np.testing.assert_allclose(got, want, rtol=0, atol=1e-12 * np.max(np.abs(want)))

    def test_missing_input_column(self, fitted, tmp_path):
        data = tmp_path / "d.csv"
        data.write_text("t,Q,T\n0,1,0\n1,1,0\n")
        assert main(["simulate", "--model", str(fitted / "model.json"),
                     "--data", str(data), "--out", str(tmp_path / "p.csv")]) == 3

    def test_add_ambient(self, tmp_path, arx_files, fitted):
        # the arx dataset has ambient 0; shift it and compare rise vs absolute output
        base, shifted = tmp_path / "rise.csv", tmp_path / "abs.csv"
        data = tmp_path / "d.csv"
        src = rows(arx_files / "train.csv")
        with open(data, "w") as fh:
            fh.write("t,P,T\n")
            for r in src:
                fh.write(f"{r['t']},{r['P']},{float(r['T']) + 20.0!r}\n")
        common = ["simulate", "--model", str(fitted / "model.json"), "--data", str(data),
                  "--ambient", "20"]
        assert main(common + ["--out", str(base)]) == 0
        assert main(common + ["--add-ambient", "--out", str(shifted)]) == 0
        rise = np.array([float(r["predicted"]) for r in rows(base)])
        absolute = np.array([float(r["predicted"]) for r in rows(shifted)])
        np.testing.assert_allclose(absolute - rise, 20.0, rtol=0, atol=1e-9)

    def test_one_step(self, fitted, arx_files, tmp_path):
        out = tmp_path / "p.csv"
        assert main(["simulate", "--model", str(fitted / "model.json"), "--one-step",
                     "--data", str(arx_files / "validate.csv"), "--out", str(out)]) == 0
        r = rows(out)
        assert max(abs(float(x["residual"])) for x in r) < 1e-6


@pytest.fixture(scope="module")
def noisy(tmp_path_factory, true_model):
    ds = generate_arx(true_model, random_input(400, 1.0, seed=2, levels=(0, 10)))
    path = tmp_path_factory.mktemp("val") / "noisy.csv"
    save_dataset(add_measurement_noise(ds, 0.05, seed=1), path)
    return path


class TestValidate:
    def test_threshold_exit_codes(self, fitted, noisy, tmp_path):
        model = str(fitted / "model.json")
        report = tmp_path / "r.json"
        assert main(["validate", "--model", model, "--data", str(noisy),
                     "--fit-threshold", "90", "--report", str(report)]) == 0
        body = json.loads(report.read_text())
        assert body["passed"] and 90 <= body["validation"]["fit_percent"] < 99.99
        assert main(["validate", "--model", model, "--data", str(noisy),
                     "--fit-threshold", "99.99"]) == 1

    def test_malformed_model(self, noisy, tmp_path):
        bad = tmp_path / "m.json"
        bad.write_text('{"format_version": 1, "na": ')
        assert main(["validate", "--model", str(bad), "--data", str(noisy)]) == 2

    def test_unknown_model_version(self, fitted, noisy, tmp_path):
        text = (fitted / "model.json").read_text().replace('"format_version": 1',
                                                         '"format_version": 7')
        bad = tmp_path / "m.json"
        bad.write_text(text)
        assert main(["validate", "--model", str(bad), "--data", str(noisy)]) == 2


def test_unknown_command():
    assert main(["frobnicate"]) == 2
