import dataclasses
import os

import numpy as np
import pytest

from pxrdsep.algorithms.simulate import SimConfig
from pxrdsep.commandline import main as cli
from pxrdsep.commandline.toydata import write_toy_cifs
from pxrdsep.config import load_config
from pxrdsep.errors import EmptyInput
from pxrdsep.io import read_pattern
from pxrdsep.mixing.library import read_index
from pxrdsep.mixing.split import read_manifest


@pytest.mark.parametrize("argv", [[], ["unknown"], ["decompose", "x.txt"]])
def test_usage_errors(argv):
    """Test that usage errors exit with code 1"""
    with pytest.raises(SystemExit) as err:
        cli.main(argv)
    assert err.value.code == cli.EXIT_USAGE


def test_data_error_exit_code(tmp_path, capsys):
    code = cli.main(["mix", str(tmp_path / "missing"), "--out", str(tmp_path / "out")])
    assert code == cli.EXIT_DATA
    assert "CorruptPatternFile" in capsys.readouterr().err
    assert (tmp_path / "out" / "resolved_config.ini").exists()


def test_simulate(tmp_path):
    """Test rendering a library with one unparsable file"""
    cif_dir = tmp_path / "cifs"
    write_toy_cifs(cif_dir)
    (cif_dir / "broken.cif").write_text("data_broken\n_cell_length_a 4.0\n")
    cfg = load_config().with_run(n_per_crystal=2)
    out = tmp_path / "library"
    cli.simulate(str(cif_dir), str(out), cfg)

    index = read_index(out)
    assert len(index) == 12
    assert sorted(set(index["render"])) == [0, 1]
    assert "MissingCell" in (out / "failures.txt").read_text()
    assert len(os.listdir(out / "structures")) == 6
    manifest = read_manifest(out / "split.txt")
    assert sum(len(manifest[name]) for name in manifest.names) == 6


def test_simulate_flags(tmp_path):
    """Test that simulate flags override [sim] in the resolved configuration"""
    cif_dir = tmp_path / "cifs"
    write_toy_cifs(cif_dir)
    config = tmp_path / "run.ini"
    config.write_text("[run]\nn_per_crystal = 1\n")
    out = tmp_path / "library"
    argv = ["simulate", str(cif_dir), "--out", str(out), "--config", str(config)]
    argv += ["--crystallite-size", "80", "--thermal-B", "0.1", "--sim-seed", "4"]
    assert cli.main(argv) == cli.EXIT_OK

    resolved = load_config(out / "resolved_config.ini")
    assert resolved.sim.crystallite_size == 80.0
    assert resolved.sim.thermal_B == 0.1
    assert resolved.sim.seed == 4
    assert resolved.run.fixed_conditions == ("crystallite_size", "thermal_B")
    assert len(read_index(out)) == 6


def test_every_sim_field_has_a_flag():
    parser = cli.parse_arguments()
    args = parser.parse_args(["simulate", "cifs", "--energy-ev", "8000"])
    assert cli.sim_overrides(args) == {"energy_ev": "8000"}
    for f in dataclasses.fields(SimConfig):
        assert hasattr(args, cli.SIM_PREFIX + f.name)


def test_prep(tmp_path):
    angles = np.linspace(5.0, 85.0, 4001)
    raw = 1.0 + np.exp(-0.5 * ((angles - 30.0) / 0.1) ** 2)
    path = tmp_path / "raw.xy"
    np.savetxt(path, np.column_stack([angles, raw]))
    out = tmp_path / "prepared"
    assert cli.main(["prep", str(path), "--out", str(out)]) == cli.EXIT_OK
    pattern = read_pattern(out / "raw.txt")
    assert len(pattern) == load_config().model.L
    assert pattern.max() == pytest.approx(1.0)


def test_smoke_reports_failing_stage(tmp_path, monkeypatch, capsys):
    """Test that a data error stops the smoke run and names the stage"""

    def fail(*args, **kwargs):
        raise EmptyInput("no phases")

    monkeypatch.setattr(cli, "read_library", fail)
    code, stage = cli.smoke(str(tmp_path), load_config())
    assert code == cli.EXIT_DATA
    assert stage == "mix"
    assert "smoke failed at stage mix" in capsys.readouterr().out


TINY_NETWORK = """
[model]
L = 64
d_model = 16
n_heads = 2
n_layers = 1
conv_channels = 4, 8
conv_kernels = 3, 2
conv_strides = 1, 2
patch_size = 16
patch_stride = 8
k_max = 3
"""


def test_smoke_is_reproducible(tmp_path):
    """Test that two smoke runs of a tiny network pass with identical reports"""
    config = tmp_path / "tiny.ini"
    config.write_text(TINY_NETWORK)
    summaries = []
    for name in ("first", "second"):
        out = tmp_path / name
        argv = ["smoke", "--out", str(out), "--config", str(config), "--seed", "3"]
        assert cli.main(argv) == cli.EXIT_OK
        assert (out / "stage1" / "train_log.txt").exists()
        assert (out / "stage2" / "model.ckpt").exists()
        summaries.append((out / "report" / "summary.txt").read_text())
    assert summaries[0] == summaries[1]


@pytest.mark.slow
def test_smoke_default_network(tmp_path):
    """Test the smoke run with the default toy network"""
    assert cli.main(["smoke", "--out", str(tmp_path)]) == cli.EXIT_OK
    assert (tmp_path / "report" / "summary.txt").exists()
