import json

import numpy as np
import pytest

from markersolve import io
from markersolve.cli import main
from markersolve.kinematics import FramePointCloud

from metric_fixtures import swap_and_ghost_frame

ZERO_NOISE = dict(occlusion_body=0.0, occlusion_hand=0.0, ghost_rate=0.0, oracle_noise=0.0)


def run(tmp_path, cmd, cfg=None, *flags, name="cfg.json"):
    argv = [cmd]
    if cfg is not None:
        path = tmp_path / name
        path.write_text(json.dumps(cfg))
        argv += ["--config", str(path)]
    return main(argv + list(flags))


def summary_line(capsys):
    return capsys.readouterr().out.splitlines()[0].split()


def test_simulate_fullbody_600_frames(tmp_path, capsys):
    out = tmp_path / "o"
    assert run(tmp_path, "simulate", {"preset": "fullbody54", "duration_s": 10.0, "out": str(out)}) == 0
    words = summary_line(capsys)
    assert words[words.index("frames") + 1] == "600"
    assert len(io.read_points(out / "points.jsonl")) == 600
    assert io.read_skeleton(out / "skeleton.json").n_joints == 54


def test_simulate_zero_noise_and_determinism(tmp_path, capsys):
    cfg = dict(ZERO_NOISE, duration_s=0.5)
    for d in ("a", "b"):
        assert run(tmp_path, "simulate", dict(cfg, out=str(tmp_path / d)), "--seed", "5") == 0
        words = summary_line(capsys)
        assert words[words.index("occlusion") + 1] == "0.00%"
    for f in sorted((tmp_path / "a").iterdir()):
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_label_zero_noise_is_exact(tmp_path):
    out = tmp_path / "o"
    cfg = dict(ZERO_NOISE, duration_s=1.0, out=str(out))
    assert run(tmp_path, "simulate", cfg) == 0
    assert run(tmp_path, "label", cfg) == 0
    rep = io.read_json(out / "labeling_report.json")
    assert rep["accuracy"] == 1.0 and rep["f1"] == 1.0


def test_no_tracklets_lowers_f1(tmp_path):
    out = tmp_path / "o"
    cfg = dict(occlusion_hand=0.06, ghost_rate=0.5, out=str(out))
    assert run(tmp_path, "simulate", cfg) == 0
    assert run(tmp_path, "label", cfg) == 0
    with_tracklets = io.read_json(out / "labeling_report.json")["f1"]
    assert run(tmp_path, "label", cfg, "--no-tracklets") == 0
    framewise = io.read_json(out / "labeling_report.json")["f1"]
    assert with_tracklets > framewise


def test_empty_sequence_pipeline(tmp_path):
    out = tmp_path / "o"
    assert run(tmp_path, "pipeline", {"duration_s": 0.0, "out": str(out)}) == 0
    assert (out / "labels.jsonl").read_text() == ""
    assert io.read_motion(out / "solved_motion.json", 16).n_frames == 0


def test_baseline_provider_runs(tmp_path):
    cfg = dict(ZERO_NOISE, duration_s=0.5, confidence_provider="baseline", out=str(tmp_path / "o"))
    assert run(tmp_path, "simulate", cfg) == 0
    assert run(tmp_path, "label", cfg) == 0
    rep = io.read_json(tmp_path / "o" / "labeling_report.json")
    assert 0.0 <= rep["f1"] <= 1.0


def test_file_provider_scores(tmp_path):
    out = tmp_path / "o"
    cfg = dict(ZERO_NOISE, duration_s=0.5, out=str(out))
    assert run(tmp_path, "simulate", cfg) == 0
    frames = io.read_points(out / "points.jsonl")
    _, corr, _ = io.read_labels(out / "correspondence.jsonl", io.read_layout(
        out / "layout.json", io.read_skeleton(out / "skeleton.json")).labels)
    scores = [np.where(np.arange(19)[None] == c[:, None], 5.0, 0.0) for c in corr]
    io.write_scores(tmp_path / "s.jsonl", frames, scores)
    cfg.update(confidence_provider="file", scores_path=str(tmp_path / "s.jsonl"))
    assert run(tmp_path, "label", cfg) == 0
    assert io.read_json(out / "labeling_report.json")["accuracy"] == 1.0


def test_solve_round_trip_and_naive(tmp_path):
    out = tmp_path / "o"
    cfg = dict(ZERO_NOISE, preset="fullbody54", duration_s=0.5, out=str(out))
    assert run(tmp_path, "simulate", cfg) == 0
    assert run(tmp_path, "solve", cfg) == 0
    assert io.read_json(out / "solving_report.json")["mpjpe_cm"] < 1e-4

    noisy = dict(cfg, position_sigma=0.005)
    assert run(tmp_path, "solve", noisy) == 0
    corrected = io.read_json(out / "solving_report.json")["mpjpe_cm"]
    assert run(tmp_path, "solve", noisy, "--solver-mode", "naive") == 0
    naive = io.read_json(out / "solving_report.json")["mpjpe_cm"]
    assert naive >= corrected


def test_solve_from_estimates_file(tmp_path):
    out = tmp_path / "o"
    cfg = dict(ZERO_NOISE, duration_s=0.3, out=str(out))
    assert run(tmp_path, "simulate", cfg) == 0
    assert run(tmp_path, "solve", cfg) == 0
    first = (out / "solved_motion.json").read_bytes()
    assert run(tmp_path, "solve", dict(cfg, pose_provider="file")) == 0
    assert (out / "solved_motion.json").read_bytes() == first


def test_jitter_sweep_table(tmp_path, capsys):
    out = tmp_path / "o"
    cfg = dict(ZERO_NOISE, preset="body22", duration_s=0.5, out=str(out))
    assert run(tmp_path, "simulate", cfg) == 0
    capsys.readouterr()
    assert run(tmp_path, "solve", cfg, "--jitter-sweep") == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].split() == ["0", "+-0.2cm", "+-0.5cm", "+-1cm"]
    assert [l.split()[0] for l in lines[1:]] == ["corrected", "naive"]
    sweep = io.read_json(out / "jitter_sweep.json")
    assert all(len(v) == 4 for v in sweep["mpjpe_cm"].values())


def test_eval_mirrors_metric_fixture(tmp_path):
    src = tmp_path / "src"
    assert run(tmp_path, "simulate", dict(ZERO_NOISE, duration_s=0.0, out=str(src))) == 0
    names = io.read_layout(src / "layout.json", io.read_skeleton(src / "skeleton.json")).labels
    pred, truth, counts, acc, f1 = swap_and_ghost_frame()
    frames = [FramePointCloud(0, np.zeros((10, 3)))]
    io.write_labels(src / "correspondence.jsonl", frames, truth, names)
    io.write_labels(tmp_path / "pred.jsonl", frames, pred, names)
    cfg = {"input_dir": str(src), "labels_path": str(tmp_path / "pred.jsonl"), "out": str(tmp_path / "e")}
    assert run(tmp_path, "eval", cfg) == 0
    rep = io.read_json(tmp_path / "e" / "eval_report.json")["labeling"]
    assert rep["confusion"] == counts
    assert rep["accuracy"] == pytest.approx(acc) and rep["f1"] == pytest.approx(f1)


def test_eval_poor_scores_exit_zero(tmp_path):
    src = tmp_path / "src"
    assert run(tmp_path, "simulate", dict(ZERO_NOISE, duration_s=0.2, out=str(src))) == 0
    names = io.read_layout(src / "layout.json", io.read_skeleton(src / "skeleton.json")).labels
    frames = io.read_points(src / "points.jsonl")
    io.write_labels(tmp_path / "pred.jsonl", frames, [np.full(len(f), -1) for f in frames], names)
    cfg = {"input_dir": str(src), "labels_path": str(tmp_path / "pred.jsonl"), "out": str(tmp_path / "e")}
    assert run(tmp_path, "eval", cfg) == 0
    assert io.read_json(tmp_path / "e" / "eval_report.json")["labeling"]["accuracy"] == 0.0


def error_of(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


def test_exit_codes(tmp_path, capsys):
    assert run(tmp_path, "simulate", {"bogus_key": 1}) == 2
    assert error_of(capsys)["exit_code"] == 2
    assert run(tmp_path, "simulate", {"occlusion_hand": 1.5}) == 2
    assert error_of(capsys)["error"] == "config"
    (tmp_path / "broken.json").write_text("{")
    assert main(["simulate", "--config", str(tmp_path / "broken.json")]) == 2
    capsys.readouterr()

    assert run(tmp_path, "label", {"input_dir": str(tmp_path / "nowhere"), "out": str(tmp_path / "o")}) == 3
    assert error_of(capsys)["exit_code"] == 3

    src = tmp_path / "src"
    assert run(tmp_path, "simulate", dict(ZERO_NOISE, duration_s=0.2, out=str(src))) == 0
    (src / "points.jsonl").write_text('{"t":0,"points":[[1,2]]}\n')
    assert run(tmp_path, "label", {"out": str(src)}) == 4
    assert error_of(capsys)["error"] == "contract"
