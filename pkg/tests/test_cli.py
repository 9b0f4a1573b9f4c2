import os

import numpy as np
import pytest

from vicsek_mf import cli, experiments
from vicsek_mf.config import parse_config_text
from vicsek_mf.particle_system import initial_state, run_simulation
from vicsek_mf.records import TrajectoryRecord, read_records, read_summary

SIM = """experiment = simulate
N = 200
kernel = gaussian
kappa = 2.0
dt = 0.01
T = 0.2
record_every = 2
test_functions = constant coord_x_1 coord_v_1 gaussian_bump_x
"""


@pytest.fixture
def cfg_file(tmp_path):
    p = tmp_path / "sim.cfg"
    p.write_text(SIM)
    return p


def test_simulate_writes_outputs(cfg_file, tmp_path, capsys):
    out = tmp_path / "run"
    assert cli.main(["simulate", "--config", str(cfg_file), "--out", str(out)]) == 0
    header, recs = read_records(out / "trajectory.vmf")
    assert len(recs) == 11 and header["N"] == 200
    meta, cols, rows = read_summary(out / "summary.csv")
    assert meta["config_hash"] == header["config_hash"]
    assert max(float(r[-1]) for r in rows) <= 1e-12
    assert "config_hash" in capsys.readouterr().out
    assert (out / "config.txt").read_text() == parse_config_text(SIM).to_text()


def test_worker_count_does_not_change_files(cfg_file, tmp_path):
    for w in ("1", "4"):
        assert cli.main(["simulate", "--config", str(cfg_file), "--workers", w,
                         "--out", str(tmp_path / w)]) == 0
    assert (tmp_path / "1" / "trajectory.vmf").read_bytes() == (tmp_path / "4" / "trajectory.vmf").read_bytes()
    assert (tmp_path / "1" / "summary.csv").read_bytes() == (tmp_path / "4" / "summary.csv").read_bytes()


def test_seed_override_changes_hash(cfg_file, tmp_path):
    cli.main(["simulate", "--config", str(cfg_file), "--out", str(tmp_path / "a")])
    cli.main(["simulate", "--config", str(cfg_file), "--seed", "7", "--out", str(tmp_path / "b")])
    ha = read_records(tmp_path / "a" / "trajectory.vmf")[0]["config_hash"]
    hb = read_records(tmp_path / "b" / "trajectory.vmf")[0]["config_hash"]
    assert ha != hb


def test_simulate_then_analyze_matches_in_memory(cfg_file, tmp_path):
    cfg = parse_config_text(SIM)
    out = tmp_path / "run"
    cli.main(["simulate", "--config", str(cfg_file), "--out", str(out)])
    assert cli.main(["analyze", "--config", str(cfg_file), "--out", str(tmp_path / "an"),
                     str(out / "trajectory.vmf"), str(out / "trajectory.vmf")]) == 0
    init = initial_state(cfg.N, cfg.d, cfg.seed, **cfg.initial_law())
    snaps = run_simulation(init, cfg.kernel_spec(), cfg.step_params(), cfg.T, cfg.seed,
                           record_every=cfg.record_every)
    mem = [[TrajectoryRecord.from_state(s, cfg.config_hash, 1) for s in snaps]] * 2
    order_rows, reports = experiments.analyze_trajectories(mem, cfg)
    _, _, rows = read_summary(tmp_path / "an" / "weak_form.csv")
    flat = [r for _, rep in reports for r in zip(rep.residual, rep.band)]
    assert [(float(r[4]), float(r[5])) for r in rows] == flat
    const = [r for r in rows if r[0] == "constant"]
    assert all(float(r[4]) == 0.0 for r in const)
    _, _, prow = read_summary(tmp_path / "an" / "polar_order.csv")
    assert [float(r[2]) for r in prow] == [r[2] for r in order_rows]


def test_analyze_rejects_mixed_hashes(cfg_file, tmp_path):
    cli.main(["simulate", "--config", str(cfg_file), "--out", str(tmp_path / "a")])
    cli.main(["simulate", "--config", str(cfg_file), "--seed", "9", "--out", str(tmp_path / "b")])
    code = cli.main(["analyze", "--config", str(cfg_file), "--out", str(tmp_path / "an"),
                     str(tmp_path / "a" / "trajectory.vmf"), str(tmp_path / "b" / "trajectory.vmf")])
    assert code == 4


def test_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("dt = 0.5\nkernel = coulomb\n")
    assert cli.main(["simulate", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert "dt" in err and "coulomb" in err
    assert cli.main(["analyze", "--out", str(tmp_path / "o")]) == 2


def test_io_error_exit_code(cfg_file, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert cli.main(["simulate", "--config", str(cfg_file), "--out", str(blocker / "sub")]) == 4
    assert cli.main(["analyze", "--config", str(cfg_file), "--out", str(tmp_path / "o"),
                     str(tmp_path / "missing.vmf")]) == 4


def test_numerical_error_exit_code(tmp_path):
    p = tmp_path / "h.cfg"
    p.write_text("K_max = 4\ninitial_density = von_mises\ninitial_concentration = 100\nT = 0.1\n")
    assert cli.main(["homogeneous", "--config", str(p), "--out", str(tmp_path / "h")]) == 3


def test_homogeneous_command(tmp_path, capsys):
    p = tmp_path / "h.cfg"
    p.write_text("kappa = 4\nT = 20\nrecord_every = 100\n")
    assert cli.main(["homogeneous", "--config", str(p), "--out", str(tmp_path / "h")]) == 0
    meta, cols, rows = read_summary(tmp_path / "h" / "homogeneous.csv")
    assert abs(float(rows[-1][3]) - float(meta["consistency_root"])) < 0.01
    assert "|J|" in capsys.readouterr().out


def test_couple_command(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("kernel = gaussian\nkappa = 2\ndt = 0.02\nT = 0.2\nN_values = 4 8 16 32\nreplicas = 8\n")
    assert cli.main(["couple", "--config", str(p), "--workers", "2", "--out", str(tmp_path / "c")]) == 0
    _, cols, rows = read_summary(tmp_path / "c" / "coupling.csv")
    assert len(rows) == 4 and all(float(r[1]) > 0 for r in rows)
    assert os.path.exists(tmp_path / "c" / "rate.csv")


def test_sweep_command(tmp_path):
    p = tmp_path / "s.cfg"
    p.write_text("sweep_experiment = simulate\nN = 20\ndt = 0.01\nT = 0.05\nrecord_every = 5\n"
                 "sweep_kappa = 0 1\nsweep_seeds = 1 2\n")
    assert cli.main(["sweep", "--config", str(p), "--workers", "2", "--out", str(tmp_path / "s")]) == 0
    _, _, rows = read_summary(tmp_path / "s" / "sweep.csv")
    assert len(rows) == 4 and len({r[4] for r in rows}) == 4
    for r in rows:
        assert (tmp_path / "s" / r[0] / "trajectory.vmf").exists()


def test_uncoupled_kappa_zero_run_is_deterministic(tmp_path):
    cfg = parse_config_text("N = 10\nkappa = 0\nT = 0.01\ndt = 0.001\nrecord_every = 1")
    a = experiments.simulate(cfg, str(tmp_path / "a"))
    b = experiments.simulate(cfg, str(tmp_path / "b"))
    assert np.array_equal(np.array(a), np.array(b))
