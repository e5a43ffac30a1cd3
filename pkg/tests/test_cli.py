import json
import math

import numpy as np
import pytest

from msconstrain.cli import (
    SNAPSHOT_MAGIC,
    diagnostics_columns,
    load_config,
    main,
    read_diagnostics,
    read_metadata,
    read_snapshot,
    read_snapshot_binary,
    write_diagnostics,
    write_snapshot,
    write_snapshot_binary,
)
from msconstrain.core import Grid
from msconstrain.diagnostics import DiagnosticsRecord


def write_json(path, payload):
    path.write_text(json.dumps(payload))
    return str(path)


class TestWriters:
    def test_snapshot_roundtrip_exact(self, tmp_path, rng):
        g = Grid.circle(17)
        u = rng.standard_normal((17, 3))
        path = tmp_path / "snap.csv"
        write_snapshot(path, g, u, time=0.125)
        back = read_snapshot(path)
        assert back["time"] == 0.125
        assert back["columns"] == ["index", "x", "u0", "u1", "u2"]
        assert np.array_equal(back["values"], u)

    def test_snapshot_header(self, tmp_path):
        g = Grid.circle(4)
        path = tmp_path / "snap.csv"
        write_snapshot(path, g, np.ones((4, 2)), time=0.0)
        first = path.read_text().splitlines()[0]
        assert first == SNAPSHOT_MAGIC

    def test_single_node_rows(self, tmp_path):
        g = Grid.circle(2)
        path = tmp_path / "snap.csv"
        write_snapshot(path, g, np.ones((2, 2)), time=0.0)
        lines = path.read_text().splitlines()
        # magic, time comment, header, two node rows
        assert len(lines) == 5

    def test_2d_snapshot_has_both_coords(self, tmp_path):
        g = Grid.neumann_box(5)
        u = np.zeros((5, 5, 3))
        path = tmp_path / "snap.csv"
        write_snapshot(path, g, u, time=0.5)
        back = read_snapshot(path)
        assert back["columns"][:3] == ["index", "x", "y"]
        assert back["coords"].shape == (25, 2)

    def test_hermitian_snapshot_components(self, tmp_path):
        g = Grid.circle(3)
        rho = np.zeros((3, 2, 2), dtype=complex)
        rho[:] = np.array([[0.25, 0.1 + 0.2j], [0.1 - 0.2j, 0.75]])
        path = tmp_path / "snap.csv"
        write_snapshot(path, g, rho, time=0.0)
        back = read_snapshot(path)
        assert back["values"].shape == (3, 4)
        assert back["values"][0] == pytest.approx([0.25, 0.75, 0.1, 0.2])

    def test_binary_roundtrip(self, tmp_path, rng):
        g = Grid.neumann_box(9)
        u = rng.standard_normal((9, 9, 3))
        path = tmp_path / "snap.bin"
        write_snapshot_binary(path, g, u, time=0.25)
        back = read_snapshot_binary(path)
        assert back["time"] == 0.25
        assert back["shape"] == (9, 9)
        assert np.array_equal(back["values"], u.reshape(81, 3))

    def test_diagnostics_roundtrip(self, tmp_path):
        recs = [
            DiagnosticsRecord(0, 0.0, 1.5, 0.25, 1e-16),
            DiagnosticsRecord(1, 0.1, 1.5 + 1e-13, 0.25, 2e-16),
        ]
        path = tmp_path / "diag.csv"
        write_diagnostics(path, recs)
        table = read_diagnostics(path)
        assert list(table) == ["step", "time", "energy", "momentum",
                               "constraint_residual"]
        assert table["energy"][1] == 1.5 + 1e-13

    def test_optional_columns(self, tmp_path):
        recs = [DiagnosticsRecord(0, 0.0, 1.0, 0.0, 0.0,
                                  trace_residual=1e-15, center_z=0.99)]
        assert diagnostics_columns(recs)[-2:] == ["trace_residual", "center_z"]

    def test_empty_diagnostics_rejected(self, tmp_path):
        path = tmp_path / "diag.csv"
        path.write_text("step,time,energy\n")
        with pytest.raises(ValueError):
            read_diagnostics(path)


class TestConfig:
    def test_defaults_filled(self, tmp_path):
        cfg = load_config(write_json(tmp_path / "c.json", {"experiment": "breather"}))
        assert cfg.points == 512
        assert cfg.params["ell"] == 7

    def test_overrides_applied(self, tmp_path):
        cfg = load_config(write_json(tmp_path / "c.json", {
            "experiment": "breather", "points": 64, "final_time": 0.5,
            "params": {"eps": 1e-3},
        }))
        assert cfg.points == 64
        assert cfg.final_time == 0.5
        assert cfg.params["eps"] == 1e-3
        assert cfg.params["ell"] == 7  # untouched defaults survive

    def test_unknown_experiment(self, tmp_path):
        from msconstrain.experiments import ConfigError

        with pytest.raises(ConfigError):
            load_config(write_json(tmp_path / "c.json", {"experiment": "nope"}))

    def test_unknown_key_rejected(self, tmp_path):
        from msconstrain.experiments import ConfigError

        with pytest.raises(ConfigError):
            load_config(write_json(tmp_path / "c.json",
                                   {"experiment": "breather", "dx": 0.1}))

    def test_malformed_json(self, tmp_path):
        from msconstrain.experiments import ConfigError

        path = tmp_path / "c.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            load_config(path)


class TestMain:
    def test_list_names_all_experiments(self, capsys):
        assert main(["list"]) == 0
        out = capsys.readouterr().out
        for name in ("convergence2d", "torus-energy", "breather", "blowup",
                     "potential", "hyperbolic", "cp-demo"):
            assert name in out
        assert len(out.strip().splitlines()) == 7

    def test_run_zero_final_time(self, tmp_path, capsys):
        cfg = write_json(tmp_path / "c.json", {
            "experiment": "breather", "points": 64, "final_time": 0.0,
        })
        out_dir = tmp_path / "out"
        assert main(["run", "--config", cfg, "--out", str(out_dir)]) == 0
        meta = read_metadata(out_dir / "metadata.json")
        assert meta["status"] == "ok"
        assert len(meta["files"]["snapshots"]) == 1
        table = read_diagnostics(out_dir / "diagnostics.csv")
        assert len(table["step"]) == 1

    def test_run_bad_config_exit_code(self, tmp_path):
        cfg = write_json(tmp_path / "c.json", {"experiment": "nope"})
        assert main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == 1

    def test_diagnostics_bytes_deterministic(self, tmp_path):
        cfg = write_json(tmp_path / "c.json", {
            "experiment": "breather", "points": 64, "final_time": 0.2,
            "snapshot_every": 16,
        })
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["run", "--config", cfg, "--out", str(a)]) == 0
        assert main(["run", "--config", cfg, "--out", str(b)]) == 0
        assert (a / "diagnostics.csv").read_bytes() == (b / "diagnostics.csv").read_bytes()

    def test_blowup_bundle_has_center_column_and_analysis(self, tmp_path):
        cfg = write_json(tmp_path / "c.json", {
            "experiment": "blowup", "points": 48, "final_time": 0.45,
            "snapshot_every": 16, "diagnostics_every": 2,
        })
        out = tmp_path / "blow"
        assert main(["run", "--config", cfg, "--out", str(out)]) == 0
        table = read_diagnostics(out / "diagnostics.csv")
        assert "center_z" in table
        meta = read_metadata(out / "metadata.json")
        assert "t_energy_max" in meta["analysis"]

    def test_binary_snapshots(self, tmp_path):
        cfg = write_json(tmp_path / "c.json", {
            "experiment": "blowup", "points": 32, "final_time": 0.05,
        })
        out = tmp_path / "bin"
        assert main(["run", "--config", cfg, "--out", str(out), "--binary"]) == 0
        meta = read_metadata(out / "metadata.json")
        name = meta["files"]["snapshots"][0]
        assert name.endswith(".bin")
        frame = read_snapshot_binary(out / name)
        assert frame["shape"] == (32, 32)

    def test_out_root_env_override(self, tmp_path, monkeypatch):
        monkeypatch.setenv("MSCONSTRAIN_OUT", str(tmp_path / "root"))
        cfg = write_json(tmp_path / "c.json", {
            "experiment": "breather", "points": 64, "final_time": 0.0,
        })
        assert main(["run", "--config", cfg, "--out", "rel"]) == 0
        assert (tmp_path / "root" / "rel" / "metadata.json").exists()

    def test_convergence_prints_slope_and_writes_bundle(self, tmp_path, capsys):
        from msconstrain.cli import read_errors_table

        cfg = write_json(tmp_path / "c.json", {
            "experiment": "convergence2d", "final_time": 0.5,
            "params": {"n_values": [16, 32]},
        })
        out = tmp_path / "conv"
        assert main(["convergence", "--config", cfg, "--out", str(out)]) == 0
        printed = capsys.readouterr().out
        assert "slope" in printed
        meta = read_metadata(out / "metadata.json")
        assert "slope" in meta["analysis"]
        lines = (out / "errors.csv").read_text().splitlines()
        assert lines[0] == "n,dx,dt,error"
        assert len(lines) == 3
        table = read_errors_table(out / "errors.csv")
        assert list(table["n"]) == [16, 32]
        assert np.all(table["error"] > 0)

    def test_run_numerical_failure_persists_partial(self, tmp_path):
        # courant 1 on the blow-up problem goes unstable and must exit 2
        cfg = write_json(tmp_path / "c.json", {
            "experiment": "blowup", "points": 48, "final_time": 0.6,
            "courant": 0.999,
        })
        out = tmp_path / "fail"
        code = main(["run", "--config", cfg, "--out", str(out)])
        if code == 2:  # instability tripped the projection, as expected
            meta = read_metadata(out / "metadata.json")
            assert meta["status"] == "step-failure"
            assert meta["events"]
            assert (out / "diagnostics.csv").exists()
        else:  # stayed feasible despite courant 1; still a valid bundle
            assert code == 0
