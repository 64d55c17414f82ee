"""Command line entry point: ``referee {synth,describe,retrieve,eval,slam}``.

Exit status is 0 on success, 1 when inputs or configuration fail validation
and 2 on I/O errors.
"""
import argparse
import csv
import logging
import math
import os
import sys
from pathlib import Path

from .config import PipelineConfig, load_config
from .errors import DescriptorMismatchError, RefereeError, SessionError
from .pipeline import describe_scans, evaluate_matches, retrieve_all, run_slam
from .scan_io import (load_session, read_descriptor_file, read_poses_csv, read_trajectory_csv,
                      save_descriptors, save_session, write_trajectory_csv)
from .metrics import ape, rotation_error
from .synth import make_session

log = logging.getLogger("referee")

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_synth(args, cfg: PipelineConfig) -> None:
    ss = make_session(cfg.synth, seed=args.seed)
    root = save_session(args.out, ss.scans, ss.gt_poses, ss.odom_poses)
    log.info("wrote %d scans to %s", len(ss.scans), root)


def cmd_describe(args, cfg: PipelineConfig) -> None:
    session = load_session(args.session, cfg.session.range_resolution)
    cfg.descriptor.resolve(session.shape)
    _, records = describe_scans(session.scans, cfg)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    save_descriptors(records, args.out)
    log.info("wrote %d descriptors to %s", len(records), args.out)


def _same_file(a, b) -> bool:
    try:
        return os.path.samefile(a, b)
    except OSError:
        return False


def cmd_retrieve(args, cfg: PipelineConfig) -> None:
    qf = read_descriptor_file(args.query)
    df = read_descriptor_file(args.database)
    if qf.config_hash != df.config_hash:
        raise DescriptorMismatchError(
            f"descriptor files were built with different configs "
            f"({qf.config_hash:#018x} vs {df.config_hash:#018x}); refusing to compare")
    single = args.same_session or _same_file(args.query, args.database)
    rows = []
    if qf.records and df.records:
        for q, cand in zip(qf.records, retrieve_all(qf.records, df.records, cfg, single)):
            if cand is None:
                rows.append((q.scan_id, None, math.inf, False))
            else:
                rows.append((q.scan_id, cand.cand_id, cand.distance, cand.accepted))
    else:
        rows = [(q.scan_id, None, math.inf, False) for q in qf.records]
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    _write_csv(args.out, ["query_id", "cand_id", "distance", "accepted"], rows)


def _read_matches(path):
    matches = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        need = {"query_id", "cand_id", "distance"}
        if not need.issubset(reader.fieldnames or []):
            raise SessionError(f"{path}: matches CSV needs columns {sorted(need)}")
        for line_no, row in enumerate(reader, start=2):
            try:
                cand = int(row["cand_id"]) if row["cand_id"] else None
                matches[int(row["query_id"])] = (cand, float(row["distance"]))
            except ValueError as exc:
                raise SessionError(f"{path}:{line_no}: {exc}") from None
    return matches


def _poses_of(path):
    p = Path(path)
    if p.is_dir():
        p = p / "poses.csv"
    return {sid: gt for sid, (_, gt, _) in read_poses_csv(p).items()}


def cmd_eval(args, cfg: PipelineConfig) -> None:
    matches = _read_matches(args.matches)
    q_poses = _poses_of(args.poses)
    single = args.db_poses is None
    db_poses = q_poses if single else _poses_of(args.db_poses)
    for qid, (cid, _) in sorted(matches.items()):
        if qid not in q_poses:
            raise SessionError(f"missing pose for query scan_id {qid}")
        if cid is not None and cid not in db_poses:
            raise SessionError(f"missing pose for candidate scan_id {cid}")
    summary = evaluate_matches(matches, q_poses, db_poses, cfg, single)

    if args.slam is not None:
        slam_dir = Path(args.slam)
        traj = read_trajectory_csv(slam_dir / "trajectory.csv")
        ids = sorted(traj)
        missing = [i for i in ids if i not in q_poses]
        if missing:
            raise SessionError(f"missing pose for trajectory scan_id {missing[0]}")
        est = [traj[i] for i in ids]
        gt = [q_poses[i] for i in ids]
        summary.ape_rmse_m = ape(est, gt, "rmse")
        summary.ape_literal_m = ape(est, gt, "literal")
        errs = []
        with open(slam_dir / "loops.csv", newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                if row["accepted"] == "1":
                    q, c = q_poses[int(row["query_id"])], q_poses[int(row["cand_id"])]
                    gt_deg = math.degrees(c.yaw - q.yaw) % 360.0
                    errs.append(rotation_error(float(row["heading_deg"]), gt_deg))
        summary.mean_re_deg = sum(errs) / len(errs) if errs else math.nan

    out = _out_dir(args)
    c = summary.curve
    _write_csv(out / "pr_curve.csv", ["tau", "precision", "recall", "f1"],
               [(float(t), float(p), float(r), float(f))
                for t, p, r, f in zip(c.thresholds, c.precision, c.recall, c.f1)])
    _write_csv(out / "summary.csv",
               ["auc", "f1_max", "recall_at_1", "mean_re_deg", "ape_rmse_m", "ape_literal_m"],
               [(float(summary.auc), float(summary.f1_max), float(summary.recall_at_1),
                 float(summary.mean_re_deg), float(summary.ape_rmse_m), float(summary.ape_literal_m))])


def cmd_slam(args, cfg: PipelineConfig) -> None:
    session = load_session(args.session, cfg.session.range_resolution)
    if session.odom_poses is None:
        raise SessionError(f"{args.session}: poses.csv has no odometry columns; cannot run SLAM")
    cfg.descriptor.resolve(session.shape)
    result = run_slam(session, cfg)
    out = _out_dir(args)
    write_trajectory_csv(out / "trajectory.csv", result.scan_ids, result.optimized)
    _write_csv(out / "loops.csv",
               ["query_id", "cand_id", "desc_dist", "heading_deg", "fitness", "accepted"],
               [(r.query_id, r.cand_id, float(r.desc_dist), float(r.heading_deg),
                 float(r.fitness), bool(r.accepted)) for r in result.loops])
    log.info("%d candidate loops, %d accepted", len(result.loops), len(result.accepted_loops))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="pipeline JSON configuration")
    common.add_argument("--seed", type=int, default=0, help="random seed (unsigned 64-bit)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="referee", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", parents=[common], help="render a synthetic session directory")
    s.add_argument("--out", required=True, help="session directory to create")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("describe", parents=[common], help="compute descriptors for a session")
    s.add_argument("session")
    s.add_argument("--out", required=True, help="descriptor file to write")
    s.set_defaults(func=cmd_describe)

    s = sub.add_parser("retrieve", parents=[common], help="top-1 retrieval of query descriptors")
    s.add_argument("query")
    s.add_argument("database")
    s.add_argument("--same-session", action="store_true",
                   help="apply the exclusion window even when the files differ")
    s.add_argument("--out", required=True, help="matches CSV to write")
    s.set_defaults(func=cmd_retrieve)

    s = sub.add_parser("eval", parents=[common], help="PR curve and summary metrics")
    s.add_argument("matches")
    s.add_argument("poses", help="query session directory or its poses.csv")
    s.add_argument("--db-poses", help="database session poses for multi-session evaluation")
    s.add_argument("--slam", help="output directory of `referee slam` to score APE and heading")
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("slam", parents=[common], help="loop-closing SLAM over a session")
    s.add_argument("session")
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_slam)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if not 0 <= args.seed < 2 ** 64:
        print("referee: error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_INVALID
    try:
        cfg = load_config(args.config)
        args.func(args, cfg)
    except OSError as exc:
        print(f"referee: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (RefereeError, ValueError) as exc:
        print(f"referee: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
