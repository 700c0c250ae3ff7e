"""Command-line front end: ``markersolve {simulate,label,solve,eval,pipeline}``.

Every stage reads and writes the standard file names inside ``--out``
(inputs come from ``input_dir`` when set).  Errors go to stderr as one JSON
object; exit codes are 0 ok, 2 config, 3 I/O, 4 data contract.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .config import PipelineConfig
from .errors import ConfigError, ContractError, DegenerateGeometryError
from .kinematics import LabeledMarkers, Motion
from .labeling import (LabelingParams, baseline_scores, label_sequence, labeled_markers_from_points,
                       oracle_scores)
from .metrics import (format_jitter_table, format_labeling_table, format_solving_table,
                      labeling_metrics, solving_metrics)
from .protocols import JITTER_LEVELS_CM, jitter_sweep
from .simulate import NoiseConfig, joint_part, simulate
from .solver import oracle_provider, solve_sequence
from .tracklet import baseline_features

log = logging.getLogger("markersolve")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_CONTRACT = 0, 2, 3, 4

F_SKELETON = "skeleton.json"
F_LAYOUT = "layout.json"
F_MOTION = "motion.json"
F_POINTS = "points.jsonl"
F_CORR = "correspondence.jsonl"
F_LABELS = "labels.jsonl"
F_TRACKLETS = "tracklets.jsonl"
F_ESTIMATES = "estimates.jsonl"
F_SOLVED = "solved_motion.json"
F_SOLVED_SK = "solved_skeleton.json"
F_LABEL_REPORT = "labeling_report.json"
F_SOLVE_REPORT = "solving_report.json"
F_SWEEP = "jitter_sweep.json"
F_EVAL = "eval_report.json"


def _out_dir(cfg):
    d = Path(cfg.out)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _load_truth(src):
    sk = io.read_skeleton(src / F_SKELETON)
    return sk, io.read_layout(src / F_LAYOUT, sk)


def _part_of_joints(skeleton):
    return np.array([joint_part(n) for n in skeleton.names])


def cmd_simulate(cfg):
    out = _out_dir(cfg)
    noise = NoiseConfig(occlusion_prob=cfg.occlusion, ghost_rate=cfg.ghost_rate,
                        jitter_sigma=cfg.jitter_sigma, jitter_uniform_halfwidth=cfg.jitter_uniform,
                        shuffle=cfg.shuffle, seed=cfg.seed)
    frames, truth = simulate(cfg.preset, cfg.duration_s, cfg.frame_rate, noise, seed=cfg.seed)
    io.write_skeleton(out / F_SKELETON, truth.skeleton)
    io.write_layout(out / F_LAYOUT, truth.layout, truth.skeleton)
    io.write_motion(out / F_MOTION, truth.motion)
    io.write_points(out / F_POINTS, frames)
    io.write_labels(out / F_CORR, frames, truth.correspondence, truth.layout.labels)
    T, N = len(frames), truth.layout.n_markers
    real = sum(int(np.sum(c >= 0)) for c in truth.correspondence)
    ghosts = sum(int(np.sum(c < 0)) for c in truth.correspondence)
    occ = 1.0 - real / (T * N) if T else 0.0
    print(f"frames {T}  markers {N}  joints {truth.skeleton.n_joints}  "
          f"occlusion {100 * occ:.2f}%  ghosts {ghosts}")
    return {"frames": T, "markers": N, "occlusion_rate": occ, "ghosts": ghosts}


def _scores(cfg, src, frames, skeleton, layout):
    if cfg.confidence_provider == "oracle":
        _, corr, _ = io.read_labels(src / F_CORR, layout.labels)
        return oracle_scores(frames, corr, layout.n_markers, cfg.oracle_signal, cfg.oracle_noise,
                             cfg.oracle_temperature, seed=cfg.seed)
    if cfg.confidence_provider == "baseline":
        return baseline_scores(frames, skeleton, layout)
    scores = io.read_scores(cfg.path("scores_path", "scores.jsonl", src), frames, layout.n_markers)
    return scores, baseline_features(frames)


def _labeling_params(cfg):
    return LabelingParams(iterations=cfg.iterations, dustbin_score=cfg.dustbin_score,
                          accept_threshold=cfg.accept_threshold, use_tracklets=cfg.use_tracklets,
                          window=cfg.window, max_frame_gap=cfg.max_frame_gap, th_pos=cfg.th_pos,
                          th_fet=cfg.th_fet, lambda_fet=cfg.lambda_fet, q=cfg.q)


def _labeling_report(labels, truth_path, layout):
    _, truth, _ = io.read_labels(truth_path, layout.labels)
    if len(truth) != len(labels):
        raise ContractError("labels and correspondence cover different frame counts")
    return labeling_metrics(labels, truth, parts=layout.parts)


def cmd_label(cfg):
    src, out = cfg.source_dir, _out_dir(cfg)
    skeleton, layout = _load_truth(src)
    frames = io.read_points(src / F_POINTS)
    scores, feats = _scores(cfg, src, frames, skeleton, layout)
    res = label_sequence(frames, scores, feats, _labeling_params(cfg))
    io.write_labels(out / F_LABELS, frames, res.labels, layout.labels, res.confidence)
    io.write_tracklets(out / F_TRACKLETS, res.tracklets)
    summary = {"frames": len(frames), "tracklets": len(res.tracklets)}
    if (src / F_CORR).exists():
        report = _labeling_report(res.labels, src / F_CORR, layout)
        io.write_json(out / F_LABEL_REPORT, report.to_dict())
        print(format_labeling_table(report))
        summary["f1"] = report.f1
    return summary


def _labeled_markers(cfg, src, layout):
    frames = io.read_points(src / F_POINTS)
    _, labels, _ = io.read_labels(cfg.path("labels_path", F_LABELS, cfg.source_dir), layout.labels)
    if len(labels) != len(frames):
        raise ContractError("labels and points cover different frame counts")
    pos, vis = labeled_markers_from_points(frames, labels, layout.n_markers)
    return LabeledMarkers(pos, vis)


def _pose_provider(cfg, src, skeleton, layout, motion):
    if cfg.pose_provider == "file":
        return io.read_pose_estimates(cfg.path("estimates_path", F_ESTIMATES, src))
    if motion is None:
        raise ContractError(f"pose provider {cfg.pose_provider!r} needs the ground-truth motion")
    markers = _labeled_markers(cfg, src, layout) if cfg.pose_provider == "markers" else None
    return oracle_provider(skeleton, motion, cfg.position_sigma, cfg.twist_sigma, cfg.offset_sigma,
                           seed=cfg.seed, markers=markers, layout=layout if markers else None)


def _split_reports(solved, solved_sk, motion, skeleton):
    parts = _part_of_joints(skeleton)
    body = np.flatnonzero(parts == "body")
    hand = np.flatnonzero(parts != "body")
    full = solving_metrics(solved, solved_sk, motion, skeleton)
    b = solving_metrics(solved, solved_sk, motion, skeleton, joints=body) if len(body) else None
    h = solving_metrics(solved, solved_sk, motion, skeleton, joints=hand) if len(hand) else None
    return full, b, h


def cmd_solve(cfg):
    src, out = cfg.source_dir, _out_dir(cfg)
    skeleton, layout = _load_truth(src)
    motion = io.read_motion(src / F_MOTION, skeleton.n_joints) if (src / F_MOTION).exists() else None
    summary = {}
    if cfg.jitter_sweep:
        if motion is None:
            raise ContractError("the jitter sweep needs the ground-truth motion")
        sweep = jitter_sweep(skeleton, layout, motion, JITTER_LEVELS_CM, seed=cfg.seed)
        io.write_json(out / F_SWEEP, {"levels_cm": list(JITTER_LEVELS_CM), "mpjpe_cm": sweep})
        print(format_jitter_table(JITTER_LEVELS_CM, [(m, v) for m, v in sweep.items()]))
        summary["jitter_sweep"] = sweep
        return summary

    provider = _pose_provider(cfg, src, skeleton, layout, motion)
    if cfg.pose_provider != "file":
        io.write_pose_estimates(out / F_ESTIMATES, provider)
    if provider.n_frames == 0:
        solved, solved_sk = Motion(cfg.frame_rate, np.zeros((0, 3)),
                                   np.zeros((0, skeleton.n_joints, 3, 3))), skeleton
    else:
        rate = motion.frame_rate if motion is not None else cfg.frame_rate
        solved, solved_sk = solve_sequence(provider, skeleton, mode=cfg.solver_mode, frame_rate=rate)
    io.write_motion(out / F_SOLVED, solved)
    io.write_skeleton(out / F_SOLVED_SK, solved_sk)
    summary["frames"] = solved.n_frames
    if motion is not None:
        full, b, h = _split_reports(solved, solved_sk, motion, skeleton)
        io.write_json(out / F_SOLVE_REPORT, full.to_dict(skeleton.names))
        print(format_solving_table([(cfg.solver_mode, b, h)]))
        summary["mpjpe_cm"] = full.mpjpe
    return summary


def cmd_eval(cfg):
    truth_dir = Path(cfg.truth_dir) if cfg.truth_dir else cfg.source_dir
    out = _out_dir(cfg)
    skeleton, layout = _load_truth(truth_dir)
    report = {}
    labels_path = cfg.path("labels_path", F_LABELS, cfg.source_dir)
    motion_path = cfg.path("motion_path", F_SOLVED, cfg.source_dir)
    if labels_path.exists():
        _, labels, _ = io.read_labels(labels_path, layout.labels)
        lab = _labeling_report(labels, truth_dir / F_CORR, layout)
        report["labeling"] = lab.to_dict()
        print(format_labeling_table(lab))
    if motion_path.exists():
        solved = io.read_motion(motion_path, skeleton.n_joints)
        sk_path = motion_path.with_name(F_SOLVED_SK)
        solved_sk = io.read_skeleton(sk_path) if sk_path.exists() else skeleton
        truth = io.read_motion(truth_dir / F_MOTION, skeleton.n_joints)
        full, b, h = _split_reports(solved, solved_sk, truth, skeleton)
        report["solving"] = full.to_dict(skeleton.names)
        print(format_solving_table([("solved", b, h)]))
    if not report:
        raise FileNotFoundError(f"nothing to evaluate: neither {labels_path} nor {motion_path} exists")
    io.write_json(out / F_EVAL, report)
    return report


def cmd_pipeline(cfg):
    summary = {"simulate": cmd_simulate(cfg), "label": cmd_label(cfg)}
    if cfg.jitter_sweep:
        summary["sweep"] = cmd_solve(cfg)
        cfg.jitter_sweep = False
    summary["solve"] = cmd_solve(cfg)
    summary["eval"] = cmd_eval(cfg)
    return summary


COMMANDS = {"simulate": cmd_simulate, "label": cmd_label, "solve": cmd_solve, "eval": cmd_eval,
            "pipeline": cmd_pipeline}


def build_parser():
    p = argparse.ArgumentParser(prog="markersolve", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="flat JSON config file")
        s.add_argument("--seed", type=int)
        s.add_argument("--no-tracklets", action="store_true", help="frame-wise labeling only")
        s.add_argument("--solver-mode", choices=["corrected", "naive"])
        s.add_argument("--jitter-sweep", action="store_true",
                       help="MPJPE table over uniform marker jitter levels (cm)")
        s.add_argument("--out", help="output directory")
        s.add_argument("-v", "--verbose", action="store_true")
    return p


def _overrides(args):
    o = {"seed": args.seed, "solver_mode": args.solver_mode, "out": args.out}
    if args.no_tracklets:
        o["use_tracklets"] = False
    if args.jitter_sweep:
        o["jitter_sweep"] = True
    return o


def _fail(kind, message, code):
    print(json.dumps({"error": kind, "message": message, "exit_code": code}), file=sys.stderr)
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = PipelineConfig.load(args.config, _overrides(args))
    except ConfigError as e:
        return _fail("config", str(e), EXIT_CONFIG)
    except OSError as e:
        return _fail("io", str(e), EXIT_IO)
    try:
        COMMANDS[args.command](cfg)
    except ConfigError as e:
        return _fail("config", str(e), EXIT_CONFIG)
    except OSError as e:
        return _fail("io", str(e), EXIT_IO)
    except (ContractError, DegenerateGeometryError, ValueError) as e:
        return _fail("contract", str(e), EXIT_CONTRACT)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
