"""CLI behavior: stages, exit codes, reports, and reproducibility."""

import hashlib

import numpy as np
import pytest

from insarmap import cli

CONFIG = """
center_frequency_hz = 77.4e9
ramp_slope_hz_per_s = 30e12
samples_per_chirp = 64
sample_rate_sps = 18.75e6
pri_s = 63.9e-6
chirps_per_tx_per_frame = 256
num_tx = 3
per_sample_snr_db = 25
grid_origin_m = (-0.8, 3.2)
grid_extent_m = (1.6, 2.4)
pixel_size_m = 0.04
aperture_length_m = 0.1
sensor_height_m = 0.4
snr_threshold_db = 15
"""

SCENE = """x,y,z,amplitude
0.0,4.0,0.4,1.0
-0.3,4.6,0.9,1.0
"""

TRAJ = """t,x,y,z,qw,qx,qy,qz
-0.02,-0.1,0,0.4,1,0,0,0
0.02,0.1,0,0.4,1,0,0,0
"""


@pytest.fixture()
def workdir(tmp_path):
    (tmp_path / "radar.cfg").write_text(CONFIG)
    (tmp_path / "scene.csv").write_text(SCENE)
    (tmp_path / "traj.csv").write_text(TRAJ)
    return tmp_path


def sha256(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_pipeline_end_to_end(workdir, capsys):
    out = workdir / "run"
    code = cli.main(
        [
            "--seed", "7",
            "pipeline",
            str(workdir / "scene.csv"),
            str(workdir / "traj.csv"),
            "--config", str(workdir / "radar.cfg"),
            "--out-dir", str(out),
        ]
    )
    assert code == 0
    for name in ("capture.insarraw", "stack.insarimg", "elevation.insarelv", "cloud.pcd", "cloud.csv"):
        assert (out / name).exists()
    text = capsys.readouterr().out
    assert "12 VX" in text
    assert "peak |I|" in text
    assert "[filter] kept:" in text
    assert "[filter] candidates:" in text
    assert "[pipeline] stage pointcloud" in text

    # the cloud contains a cluster at each simulated reflector
    rows = np.loadtxt(out / "cloud.csv", delimiter=",", skiprows=1)
    x, y, z = rows[:, 0], rows[:, 1], rows[:, 2]
    for tx, ty, tz in ((0.0, 4.0, 0.4), (-0.3, 4.6, 0.9)):
        rel_z = tz - 0.4  # sensor height in the demo config
        slant = np.hypot(ty, rel_z)
        near = (np.abs(x - tx) < 0.2) & (np.abs(np.hypot(y, z) - slant) < 0.2)
        assert near.sum() >= 1


def test_pipeline_reproducible_and_equals_staged_runs(workdir, capsys):
    args = [
        "--seed", "3",
        "pipeline",
        str(workdir / "scene.csv"),
        str(workdir / "traj.csv"),
        "--config", str(workdir / "radar.cfg"),
    ]
    assert cli.main(args + ["--out-dir", str(workdir / "a")]) == 0
    assert cli.main(args + ["--out-dir", str(workdir / "b")]) == 0
    for name in ("capture.insarraw", "stack.insarimg", "elevation.insarelv", "cloud.pcd"):
        assert sha256(workdir / "a" / name) == sha256(workdir / "b" / name)

    # running the four stages by hand on the intermediate files matches too
    c = workdir / "c"
    c.mkdir()
    cfg = str(workdir / "radar.cfg")
    assert cli.main(
        ["--seed", "3", "simulate", str(workdir / "scene.csv"), str(workdir / "traj.csv"),
         "--config", cfg, "-o", str(c / "capture.insarraw")]
    ) == 0
    assert cli.main(
        ["image", str(c / "capture.insarraw"), "--config", cfg, "-o", str(c / "stack.insarimg")]
    ) == 0
    assert cli.main(
        ["elevate", str(c / "stack.insarimg"), "-o", str(c / "elevation.insarelv")]
    ) == 0
    assert cli.main(
        ["pointcloud", str(c / "elevation.insarelv"), "--config", cfg, "-o", str(c / "cloud.pcd")]
    ) == 0
    for name in ("capture.insarraw", "stack.insarimg", "elevation.insarelv", "cloud.pcd"):
        assert sha256(workdir / "a" / name) == sha256(c / name)
    capsys.readouterr()


def test_global_config_flag_placement(workdir, capsys):
    out = workdir / "g.insarraw"
    code = cli.main(
        ["--config", str(workdir / "radar.cfg"), "--seed", "9",
         "simulate", str(workdir / "scene.csv"), str(workdir / "traj.csv"), "-o", str(out)]
    )
    assert code == 0
    assert out.exists()
    capsys.readouterr()


def test_simulate_summary_and_seeded_hash(workdir, capsys):
    out1 = workdir / "c1.insarraw"
    args = [
        "--seed", "9", "simulate",
        str(workdir / "scene.csv"), str(workdir / "traj.csv"),
        "--config", str(workdir / "radar.cfg"),
    ]
    assert cli.main(args + ["-o", str(out1)]) == 0
    assert "pulses:" in capsys.readouterr().out
    out2 = workdir / "c2.insarraw"
    assert cli.main(args + ["-o", str(out2)]) == 0
    assert sha256(out1) == sha256(out2)


def test_empty_scene_is_a_parse_error(workdir, capsys):
    (workdir / "empty.csv").write_text("")
    code = cli.main(
        ["simulate", str(workdir / "empty.csv"), str(workdir / "traj.csv"),
         "--config", str(workdir / "radar.cfg"), "-o", str(workdir / "x.insarraw")]
    )
    assert code == 2
    assert "empty.csv" in capsys.readouterr().err


def test_speed_warning_printed(workdir, capsys):
    (workdir / "fast.csv").write_text(
        "t,x,y,z,qw,qx,qy,qz\n-0.02,-0.24,0,0.4,1,0,0,0\n0.02,0.24,0,0.4,1,0,0,0\n"
    )
    code = cli.main(
        ["simulate", str(workdir / "scene.csv"), str(workdir / "fast.csv"),
         "--config", str(workdir / "radar.cfg"), "-o", str(workdir / "f.insarraw")]
    )
    assert code == 0
    assert "exceeds" in capsys.readouterr().err


def test_corrupt_capture_is_a_format_error(workdir, capsys):
    bad = workdir / "bad.insarraw"
    bad.write_bytes(b"INSARRAW" + b"\x01\x00\x00\x00" + b"\x00" * 10)
    code = cli.main(["image", str(bad), "--config", str(workdir / "radar.cfg"),
                     "-o", str(workdir / "s.insarimg")])
    assert code == 3
    assert "truncated" in capsys.readouterr().err


def test_wrong_artifact_type_is_a_format_error(workdir, capsys):
    out = workdir / "run"
    assert cli.main(
        ["--seed", "1", "simulate", str(workdir / "scene.csv"), str(workdir / "traj.csv"),
         "--config", str(workdir / "radar.cfg"), "-o", str(workdir / "cap.insarraw")]
    ) == 0
    code = cli.main(["elevate", str(workdir / "cap.insarraw"), "-o", str(workdir / "m.insarelv")])
    assert code == 3
    capsys.readouterr()


def test_bad_grid_config_exit_code(workdir, capsys):
    (workdir / "badgrid.cfg").write_text(CONFIG + "pixel_size_m = -1\n")
    assert cli.main(
        ["--seed", "1", "simulate", str(workdir / "scene.csv"), str(workdir / "traj.csv"),
         "--config", str(workdir / "radar.cfg"), "-o", str(workdir / "cap.insarraw")]
    ) == 0
    code = cli.main(["image", str(workdir / "cap.insarraw"),
                     "--config", str(workdir / "badgrid.cfg"), "-o", str(workdir / "s.insarimg")])
    assert code == 2
    capsys.readouterr()


def test_infinite_snr_threshold_empties_cloud(workdir, capsys):
    out = workdir / "run"
    assert cli.main(
        ["--seed", "5", "pipeline", str(workdir / "scene.csv"), str(workdir / "traj.csv"),
         "--config", str(workdir / "radar.cfg"), "--out-dir", str(out)]
    ) == 0
    capsys.readouterr()
    (workdir / "strict.cfg").write_text(CONFIG + "snr_threshold_db = inf\n")
    code = cli.main(
        ["pointcloud", str(out / "elevation.insarelv"), "--config", str(workdir / "strict.cfg"),
         "-o", str(workdir / "none.pcd")]
    )
    assert code == 0
    text = capsys.readouterr().out
    assert "kept: 0" in text
    assert "(100.0%)" in text
    pcd = (workdir / "none.pcd").read_text().splitlines()
    assert "WIDTH 0" in pcd and "POINTS 0" in pcd


def test_report_subcommand(workdir, capsys):
    out = workdir / "run"
    assert cli.main(
        ["--seed", "5", "pipeline", str(workdir / "scene.csv"), str(workdir / "traj.csv"),
         "--config", str(workdir / "radar.cfg"), "--out-dir", str(out)]
    ) == 0
    capsys.readouterr()
    assert cli.main(["report", str(out / "elevation.insarelv"),
                     "--config", str(workdir / "radar.cfg")]) == 0
    text = capsys.readouterr().out
    assert "[filter] candidates:" in text
    assert "[filter] kept:" in text


def test_pgm_dump(workdir, capsys):
    assert cli.main(
        ["--seed", "2", "simulate", str(workdir / "scene.csv"), str(workdir / "traj.csv"),
         "--config", str(workdir / "radar.cfg"), "-o", str(workdir / "cap.insarraw")]
    ) == 0
    pgm_dir = workdir / "pgms"
    assert cli.main(
        ["image", str(workdir / "cap.insarraw"), "--config", str(workdir / "radar.cfg"),
         "-o", str(workdir / "s.insarimg"), "--pgm-dir", str(pgm_dir)]
    ) == 0
    capsys.readouterr()
    files = sorted(pgm_dir.glob("vx*.pgm"))
    assert len(files) == 12
    assert files[0].read_bytes().startswith(b"P5\n")


def test_elevate_without_baselines_is_a_domain_error(workdir, capsys):
    (workdir / "flat.cfg").write_text(
        CONFIG + "tx_positions_m = [(0, 0, 0)]\nrx_positions_m = [(0, 0, 0)]\nnum_tx = 1\n"
    )
    assert cli.main(
        ["--seed", "1", "simulate", str(workdir / "scene.csv"), str(workdir / "traj.csv"),
         "--config", str(workdir / "flat.cfg"), "-o", str(workdir / "cap1.insarraw")]
    ) == 0
    assert cli.main(
        ["image", str(workdir / "cap1.insarraw"), "--config", str(workdir / "flat.cfg"),
         "-o", str(workdir / "s1.insarimg")]
    ) == 0
    code = cli.main(["elevate", str(workdir / "s1.insarimg"), "-o", str(workdir / "m1.insarelv")])
    assert code == 4
    assert "baseline" in capsys.readouterr().err
