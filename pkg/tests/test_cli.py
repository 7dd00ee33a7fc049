import json

import numpy as np
import pytest

from iac.cli import main, parse_snr
from iac.design import Design
from iac.errors import InvalidConfig


def write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(doc if isinstance(doc, str) else json.dumps(doc), encoding="utf-8")
    return str(p)


@pytest.fixture
def opt_cfg(tmp_path):
    return write(tmp_path, "opt.json", {"M": 6, "d": [3, 3, 2, 2, 2]})


@pytest.fixture
def fig2_cfg(tmp_path):
    return write(tmp_path, "fig2.json", {"K": 5, "M": 6, "d": [3, 1, 3, 2, 2]})


class TestFeasibility:
    def test_feasible(self, opt_cfg, capsys):
        assert main(["feasibility", opt_cfg]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["k_iac"] == 2 and out["overhead"] == 21 and out["failed_inequalities"] == []

    def test_infeasible(self, tmp_path, capsys):
        cfg = write(tmp_path, "bad.json", {"K": 3, "M": 2, "d": [2, 2, 2]})
        assert main(["feasibility", cfg]) == 1
        out = json.loads(capsys.readouterr().out)
        assert out["failed_inequalities"][0]["which"] == "EQ9(k=1)"

    def test_missing_file(self, tmp_path):
        assert main(["feasibility", str(tmp_path / "nope.json")]) == 2

    @pytest.mark.parametrize("doc", ['{"M": 6', '[1, 2]', '{"M": 2, "d": [3, 1]}', '{"d": [1]}'])
    def test_malformed(self, tmp_path, doc):
        assert main(["feasibility", write(tmp_path, "x.json", doc)]) == 2


class TestDesign:
    def test_optimal(self, opt_cfg, tmp_path, capsys):
        out = str(tmp_path / "b.json")
        assert main(["design", opt_cfg, "--optimal", "--out", out]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["pass"] and report["total_dof_claimed"] == 12
        assert Design.load(out).report.passed

    def test_fig2_equation_count(self, fig2_cfg, tmp_path, capsys):
        out = str(tmp_path / "b.json")
        assert main(["design", fig2_cfg, "--out", out]) == 0
        assert json.loads(capsys.readouterr().out)["equations"] == 8
        with open(out, encoding="utf-8") as fh:
            assert len(json.load(fh)["equations"]["equations"]) == 8

    def test_infeasible(self, tmp_path, capsys):
        cfg = write(tmp_path, "bad.json", {"K": 3, "M": 2, "d": [2, 2, 2]})
        out = tmp_path / "b.json"
        assert main(["design", cfg, "--out", str(out)]) == 1
        assert "infeasible" in capsys.readouterr().err
        assert not out.exists()

    def test_verification_failure_exit(self, fig2_cfg, tmp_path, monkeypatch):
        monkeypatch.setenv("IAC_TOL_ALIGNMENT", "0")
        assert main(["design", fig2_cfg, "--out", str(tmp_path / "b.json")]) == 1

    def test_construction_exhausted_exit(self, fig2_cfg, tmp_path):
        from iac.graph import build_graph_general
        from iac.system_model import SystemConfig
        c = SystemConfig.from_tuple(6, (3, 1, 3, 2, 2))
        seed = next(s for s in range(500) if build_graph_general(c, s)[2].restarts > 0)
        code = main(["design", fig2_cfg, "--graph-seed", str(seed), "--retry-budget", "0",
                     "--out", str(tmp_path / "b.json")])
        assert code == 3

    def test_numerical_exit(self, fig2_cfg, tmp_path, monkeypatch):
        from iac import design as design_mod
        from iac.errors import SingularChannel

        def boom(*a, **k):
            raise SingularChannel("forced")
        monkeypatch.setattr(design_mod, "solve_precoders", boom)
        assert main(["design", fig2_cfg, "--out", str(tmp_path / "b.json")]) == 4

    def test_reproducible_files(self, fig2_cfg, tmp_path):
        a, b = str(tmp_path / "a.json"), str(tmp_path / "b.json")
        for out in (a, b):
            main(["design", fig2_cfg, "--channel-seed", "4", "--graph-seed", "9", "--out", out])
        with open(a, "rb") as fa, open(b, "rb") as fb:
            assert fa.read() == fb.read()

    def test_manifest(self, fig2_cfg, tmp_path):
        out = str(tmp_path / "b.json")
        main(["design", fig2_cfg, "--channel-seed", "2", "--out", out])
        with open(out + ".manifest.json", encoding="utf-8") as fh:
            m = json.load(fh)
        assert m["channel_seed"] == 2 and m["config"]["d"] == [3, 1, 3, 2, 2]
        assert len(m["sigma_min"]) == 5 and m["tolerances"]["alignment"] == 1e-8
        # reloading the bundle reproduces the recorded sigma_min values
        from iac.verifier import verify_design
        D = Design.load(out)
        fresh = verify_design(D.channels, D.precoders, D.receivers, D.equations, D.config)
        got = [r.sigma_min_effective for r in fresh.per_receiver]
        assert np.max(np.abs(np.array(got) - m["sigma_min"])) < 1e-12


class TestSimulate:
    @pytest.fixture
    def bundle(self, opt_cfg, tmp_path):
        out = str(tmp_path / "b.json")
        main(["design", opt_cfg, "--optimal", "--out", out])
        return out

    def test_slope_printed(self, bundle, tmp_path, capsys):
        capsys.readouterr()
        csv_path = tmp_path / "s.csv"
        assert main(["simulate", bundle, "--snr", "40:10:60", "--trials", "50",
                     "--out", str(csv_path)]) == 0
        err = capsys.readouterr().err
        slope = float(err.split(":")[-1].split()[0])
        assert abs(slope - 12) / 12 < 0.05
        lines = csv_path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "snr_db,sum_rate_bits,slope_ref" and len(lines) == 4

    def test_single_point_note(self, bundle, capsys):
        capsys.readouterr()
        assert main(["simulate", bundle, "--snr", "30", "--trials", "1"]) == 0
        assert "omitted" in capsys.readouterr().err

    def test_json_output(self, bundle, tmp_path):
        out = tmp_path / "s.json"
        main(["simulate", bundle, "--snr", "10:10:20", "--trials", "2", "--json",
              "--out", str(out)])
        doc = json.loads(out.read_text(encoding="utf-8"))
        assert len(doc["rows"]) == 2 and len(doc["rows"][0]["per_stream_sinr_db"]) == 12

    def test_seeded_runs_identical(self, bundle, tmp_path):
        paths = [tmp_path / "x.csv", tmp_path / "y.csv"]
        for p in paths:
            main(["simulate", bundle, "--snr", "0:10:20", "--trials", "3", "--seed", "5",
                  "--symbols", "QPSK", "--cancellation", "DETECTED", "--out", str(p)])
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_corrupted_bundle(self, bundle, tmp_path):
        with open(bundle, encoding="utf-8") as fh:
            text = fh.read()
        bad = write(tmp_path, "bad.json", text[: len(text) // 2])
        assert main(["simulate", bad]) == 2
        doc = json.loads(text)
        del doc["precoders"]
        assert main(["simulate", write(tmp_path, "bad2.json", doc)]) == 2
        doc = json.loads(text)
        doc["version"] = 99
        assert main(["simulate", write(tmp_path, "bad3.json", doc)]) == 2

    def test_bad_snr(self, bundle):
        assert main(["simulate", bundle, "--snr", "10:0:20"]) == 2


class TestMisc:
    def test_enumerate(self, capsys):
        assert main(["enumerate-optimal", "--m", "6", "--k", "5"]) == 0
        tuples = json.loads(capsys.readouterr().out)
        assert [3, 3, 2, 2, 2] in tuples
        from oracles import optimal_tuples_oracle
        assert len(tuples) == len(optimal_tuples_oracle(6, 5))

    def test_enumerate_small(self, capsys):
        main(["enumerate-optimal", "--m", "2", "--k", "4"])
        assert json.loads(capsys.readouterr().out) == [[1, 1, 1, 1]]

    def test_graph_export(self, fig2_cfg, tmp_path, capsys):
        out = str(tmp_path / "b.json")
        main(["design", fig2_cfg, "--out", out])
        capsys.readouterr()
        assert main(["graph-export", out, "--dot"]) == 0
        dot = capsys.readouterr().out
        assert dot.startswith("graph iac {") and dot.count("--") == 8

    def test_parse_snr(self):
        assert parse_snr("40:10:60") == [40.0, 50.0, 60.0]
        assert parse_snr("0:2.5:5") == [0.0, 2.5, 5.0]
        assert parse_snr("7") == [7.0]
        with pytest.raises(InvalidConfig):
            parse_snr("a:b")
