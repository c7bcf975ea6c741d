"""CLI: subcommands, formats, determinism, config handling, exit codes."""

import json
import math

import pytest

from ssr_telescopy.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestTable1:
    def test_default_row_values(self, capsys):
        code, out, _ = run(capsys, "table1")
        assert code == 0
        lines = out.strip().split("\n")
        assert lines[0] == "kind,N,closed_ratio,numeric_ratio,bound,NL,PR"
        rows = {line.split(",")[0]: line.split(",") for line in lines[1:]}
        klm = rows["klm"]
        assert klm[1] == "4"
        assert float(klm[2]) == pytest.approx(0.8)
        assert float(klm[3]) == pytest.approx(0.8, abs=1e-9)
        assert float(klm[4]) == pytest.approx(0.86603, abs=1e-5)
        assert klm[5] == "yes" and klm[6] == "yes"
        assert float(rows["gjc"][2]) == 0.5
        assert float(rows["tpe"][2]) == 0.0
        assert rows["coherent_pair"][5] == "no"
        assert rows["tpe"][6] == "no"

    def test_file_output_lf_endings(self, tmp_path, capsys):
        out_file = tmp_path / "t.csv"
        code, _, _ = run(capsys, "table1", "--out", str(out_file))
        assert code == 0
        raw = out_file.read_bytes()
        assert b"\r" not in raw
        assert raw.endswith(b"\n")


class TestFig2:
    def test_csv_and_figure(self, tmp_path, capsys):
        out_file = tmp_path / "fig2.csv"
        code, _, _ = run(capsys, "fig2", "--photons", "6", "--out", str(out_file))
        assert code == 0
        assert out_file.exists()
        assert (tmp_path / "fig2.png").exists()
        lines = out_file.read_text().strip().split("\n")
        assert lines[0].startswith("N,klm,")
        # N = 2 row: klm and optimal_klm touch at 2/3
        row2 = dict(zip(lines[0].split(","), lines[2].split(",")))
        assert float(row2["klm"]) == pytest.approx(2 / 3)
        assert float(row2["optimal_klm"]) == pytest.approx(2 / 3)
        # every curve below the bound, optimal above uniform for N >= 3
        header = lines[0].split(",")
        for line in lines[1:]:
            cells = dict(zip(header, line.split(",")))
            for kind in ("klm", "n_copy_spe", "optimal_klm"):
                assert float(cells[kind]) <= float(cells["bound"]) + 1e-9
            if int(cells["N"]) >= 3:
                assert float(cells["optimal_klm"]) > float(cells["klm"])

    def test_svg_format(self, tmp_path, capsys):
        out_file = tmp_path / "fig2.csv"
        code, _, _ = run(capsys, "fig2", "--photons", "3", "--format", "svg",
                         "--out", str(out_file))
        assert code == 0
        assert (tmp_path / "fig2.svg").exists()

    def test_photon_limit(self, capsys):
        code, _, err = run(capsys, "fig2", "--photons", "40")
        assert code == 2
        assert "30" in err


class TestTeleport:
    def test_klm3_report(self, capsys):
        code, out, _ = run(capsys, "teleport", "--ancilla", "klm", "--photons", "3",
                           "--g", "0.7", "--theta", "0.3", "--epsilon", "1e-3")
        assert code == 0
        data = json.loads(out)
        assert data["results"]["fi_ratio"] == pytest.approx(0.75, abs=1e-6)
        assert data["results"]["failure_probability"] == pytest.approx(0.25)
        assert data["config"]["ancilla"] == "klm"

    def test_custom_ancilla_file(self, tmp_path, capsys):
        spec = {
            "kind": "custom",
            "layout": "single_mode_pair",
            "amplitudes": [
                {"n": 0, "m": 1, "re": 1 / math.sqrt(2)},
                {"n": 1, "m": 0, "re": 1 / math.sqrt(2)},
            ],
        }
        path = tmp_path / "anc.json"
        path.write_text(json.dumps(spec))
        code, out, _ = run(capsys, "teleport", "--ancilla", str(path))
        assert code == 0
        assert json.loads(out)["results"]["closed_ratio"] == pytest.approx(0.5)

    def test_unknown_kind_exit_code(self, capsys):
        code, _, err = run(capsys, "teleport", "--ancilla", "nosuch")
        assert code == 2
        assert "nosuch" in err


class TestOptimizeAndBound:
    def test_optimize_two_photons(self, capsys):
        code, out, _ = run(capsys, "optimize", "--photons", "2")
        assert code == 0
        data = json.loads(out)
        assert data["results"]["value"] == pytest.approx(12 - 8 * math.sqrt(2), abs=1e-5)
        assert data["results"]["converged"] is True

    def test_bound_mean_photons(self, capsys):
        code, out, _ = run(capsys, "bound", "--mean-photons", "3")
        assert code == 0
        data = json.loads(out)
        assert data["results"]["mean_photon_bound"] == pytest.approx(0.80902, abs=1e-5)


class TestDeterminismAndConfig:
    def test_estimate_byte_identical(self, tmp_path, capsys):
        args = ["estimate", "--ancilla", "gjc", "--samples", "20000",
                "--repetitions", "5", "--seed", "7"]
        f1, f2 = tmp_path / "a.json", tmp_path / "b.json"
        assert run(capsys, *args, "--out", str(f1))[0] == 0
        assert run(capsys, *args, "--out", str(f2))[0] == 0

        def normalized(p):
            data = json.loads(p.read_text())
            data["config"]["out"] = None  # only the echoed path may differ
            return json.dumps(data, sort_keys=True)

        assert normalized(f1) == normalized(f2)
        # stdout runs with fully identical config are byte-identical
        _, o1, _ = run(capsys, *args)
        _, o2, _ = run(capsys, *args)
        assert o1 == o2

    def test_config_file_with_flag_override(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"ancilla": "klm", "photons": 2, "g": 0.5}))
        code, out, _ = run(capsys, "teleport", "--config", str(cfg),
                           "--photons", "3")
        assert code == 0
        data = json.loads(out)
        assert data["config"]["photons"] == 3  # flag wins
        assert data["config"]["g"] == 0.5      # from file
        assert data["results"]["fi_ratio"] == pytest.approx(0.75, abs=1e-6)

    def test_report_round_trips_to_equivalent_run(self, capsys):
        code, out, _ = run(capsys, "optimize", "--photons", "3", "--seed", "5")
        assert code == 0
        first = json.loads(out)
        echoed = first["config"]
        code, out2, _ = run(capsys, "optimize",
                            "--photons", str(echoed["photons"]),
                            "--seed", str(echoed["seed"]))
        assert json.loads(out2) == first

    def test_unknown_config_key(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"bogus": 1}))
        code, _, err = run(capsys, "bound", "--config", str(cfg))
        assert code == 2
        assert "bogus" in err

    def test_missing_config_file(self, capsys):
        code, _, err = run(capsys, "bound", "--config", "/nonexistent.json")
        assert code == 2
        assert "/nonexistent.json" in err

    def test_thread_env_var(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("SSR_TELESCOPY_THREADS", "2")
        args = ["estimate", "--ancilla", "gjc", "--samples", "10000",
                "--repetitions", "4", "--seed", "9"]
        code, out, _ = run(capsys, *args)
        assert code == 0
        monkeypatch.setenv("SSR_TELESCOPY_THREADS", "1")
        code, out2, _ = run(capsys, *args)
        assert out == out2
        monkeypatch.setenv("SSR_TELESCOPY_THREADS", "zebra")
        assert run(capsys, *args)[0] == 2
