"""Command-line surface: mine-hn, mine-hp, export, audit-sample, audit-report, synth.

Flags mirror the mining-config fields one to one; a key=value config file
(``--config`` or the FLICKERMINE_CONFIG environment variable) supplies
defaults that explicit flags override. Every command writes its primary
outputs atomically plus a run manifest capturing the config snapshot,
input digests and tool version; primary outputs are byte-stable, so only
manifests carry timestamps.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .audit import AuditError, compute_purity, read_audit_manifest, sample_for_audit
from .export import (
    build_retraining_set,
    selection_from_report,
    serialize_retraining_set,
)
from .hn_miner import mine_video
from .hp_miner import mine_hard_positives
from .ingest import (
    DetectionStream,
    FrameStore,
    FrameStoreError,
    StreamParseError,
    filter_by_category,
    filter_by_score,
    parse_detection_stream,
)
from .ioutil import atomic_write_text, sha256_file
from .model import ConfigError, MiningConfig, Verdict, validate_config
from .reports import (
    read_hp_report,
    read_mining_report,
    render_jsonl,
    hard_positive_to_json,
    labeled_to_json,
)
from .synth import SyntheticScenario, ObjectSpec, OcclusionEvent, generate

logger = logging.getLogger("flickermine")

_CONFIG_ENV = "FLICKERMINE_CONFIG"
_CONFIG_FIELDS = [f.name for f in dataclasses.fields(MiningConfig)]


class CliError(Exception):
    """Fatal CLI-level failure with a user-facing message."""


def _read_config_file(path: Path) -> dict:
    if not path.is_file():
        raise CliError(f"config file not found: {path}")
    values: dict = {}
    for line_no, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise CliError(f"{path}:{line_no}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if key not in _CONFIG_FIELDS:
            raise CliError(f"{path}:{line_no}: unknown config key {key!r}")
        values[key] = value.strip()
    return values


def _build_config(args: argparse.Namespace) -> MiningConfig:
    values: dict = {}
    config_path = getattr(args, "config", None) or os.environ.get(_CONFIG_ENV)
    if config_path:
        values.update(_read_config_file(Path(config_path)))
    for name in _CONFIG_FIELDS:
        flag_value = getattr(args, name, None)
        if flag_value is not None:
            values[name] = flag_value
    kwargs = {}
    for name, value in values.items():
        kind = MiningConfig.__dataclass_fields__[name].type
        try:
            kwargs[name] = int(value) if "int" in kind else float(value)
        except ValueError:
            raise CliError(f"config value for {name} is not numeric: {value!r}") from None
    return validate_config(MiningConfig(**kwargs))


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value config file (default: $FLICKERMINE_CONFIG)")
    group = parser.add_argument_group("mining thresholds")
    for name in _CONFIG_FIELDS:
        group.add_argument(f"--{name.replace('_', '-')}", default=None, metavar="V")


def _frames_listing_digest(root: Path) -> str:
    h = hashlib.sha256()
    for p in sorted(root.rglob("*")):
        if p.is_file():
            h.update(str(p.relative_to(root)).encode())
            h.update(str(p.stat().st_size).encode())
    return h.hexdigest()


def _write_manifest(
    path: Path,
    command: str,
    cfg: MiningConfig | None,
    inputs: dict,
    outputs: dict,
    extra: dict | None = None,
) -> None:
    manifest = {
        "tool": "flickermine",
        "version": __version__,
        "command": command,
        "created_at": datetime.now(timezone.utc).isoformat(),
        "config": dataclasses.asdict(cfg) if cfg else None,
        "inputs": inputs,
        "outputs": outputs,
        **(extra or {}),
    }
    atomic_write_text(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _load_stream(path: Path, category: str | None) -> DetectionStream:
    if not path.is_file():
        raise CliError(f"detections file not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        stream = parse_detection_stream(fh)
    if category:
        stream = filter_by_category(stream, category)
    cats = stream.categories()
    if len(cats) > 1:
        raise CliError(
            f"stream mixes categories {', '.join(cats)}; pick one with --category"
        )
    return stream


def _open_store(path: str) -> FrameStore:
    root = Path(path)
    if not root.is_dir():
        raise CliError(f"frames directory not found: {root}")
    return FrameStore(root)


def _mine_hn_worker(payload):
    root, video_id, records, cfg = payload
    store = FrameStore(root)
    stream = DetectionStream(tuple(records))
    rows = []
    for labeled in mine_video(video_id, stream, store, cfg).values():
        rows.extend(labeled)
    return video_id, rows


def _mine_hp_worker(payload):
    root, video_id, records, cfg = payload
    store = FrameStore(root)
    stream = DetectionStream(tuple(records))
    return video_id, mine_hard_positives(stream, store, cfg)


def _parallel_by_video(stream: DetectionStream, root: Path, cfg: MiningConfig, workers: int, fn):
    videos = stream.videos()
    payloads = [
        (root, v, tuple(r for r in stream if r.video_id == v), cfg) for v in videos
    ]
    if workers <= 1 or len(videos) <= 1:
        results = [fn(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(videos))) as pool:
            results = list(pool.map(fn, payloads))
    merged = []
    for _, rows in sorted(results, key=lambda r: r[0]):
        merged.extend(rows)
    return merged


def _cmd_mine_hn(args) -> int:
    cfg = _build_config(args)
    stream = _load_stream(Path(args.detections), args.category)
    store = _open_store(args.frames)
    high = filter_by_score(stream, cfg.score_threshold)
    rows = _parallel_by_video(high, store.root, cfg, args.workers, _mine_hn_worker)
    out = Path(args.out)
    atomic_write_text(out, render_jsonl(labeled_to_json(r) for r in rows))
    counts = {v.value: 0 for v in Verdict}
    for r in rows:
        counts[r.label.verdict.value] += 1
    logger.info("mine-hn: %s", ", ".join(f"{k}={v}" for k, v in counts.items()))
    _write_manifest(
        out.with_name(out.name + ".manifest.json"),
        "mine-hn",
        cfg,
        inputs={
            "detections": {"path": str(args.detections), "sha256": sha256_file(args.detections)},
            "frames": {"path": str(args.frames), "listing_sha256": _frames_listing_digest(store.root)},
        },
        outputs={"report": {"path": str(out), "sha256": sha256_file(out)}},
        extra={"workers": args.workers, "counts": counts},
    )
    return 0


def _cmd_mine_hp(args) -> int:
    cfg = _build_config(args)
    stream = _load_stream(Path(args.detections), args.category)
    store = _open_store(args.frames)
    high = filter_by_score(stream, cfg.score_threshold)
    rows = _parallel_by_video(high, store.root, cfg, args.workers, _mine_hp_worker)
    out = Path(args.out)
    atomic_write_text(out, render_jsonl(hard_positive_to_json(r) for r in rows))
    logger.info("mine-hp: %d hard positives", len(rows))
    _write_manifest(
        out.with_name(out.name + ".manifest.json"),
        "mine-hp",
        cfg,
        inputs={
            "detections": {"path": str(args.detections), "sha256": sha256_file(args.detections)},
            "frames": {"path": str(args.frames), "listing_sha256": _frames_listing_digest(store.root)},
        },
        outputs={"report": {"path": str(out), "sha256": sha256_file(out)}},
        extra={"workers": args.workers},
    )
    return 0


def _cmd_export(args) -> int:
    cfg = _build_config(args)
    hn_path = Path(args.hn_report)
    if not hn_path.is_file():
        raise CliError(f"mining report not found: {hn_path}")
    hn_rows = read_mining_report(hn_path)
    hp_rows = []
    inputs = {"hn_report": {"path": str(hn_path), "sha256": sha256_file(hn_path)}}
    if args.hp_report:
        hp_path = Path(args.hp_report)
        if not hp_path.is_file():
            raise CliError(f"hard-positive report not found: {hp_path}")
        hp_rows = read_hp_report(hp_path)
        inputs["hp_report"] = {"path": str(hp_path), "sha256": sha256_file(hp_path)}
    store = _open_store(args.frames)
    selection = selection_from_report(hn_rows)
    rset = build_retraining_set(hn_rows, hp_rows, selection, store, cfg)
    doc_text, manifest_text = serialize_retraining_set(rset)
    out_dir = Path(args.out_dir)
    doc_path = out_dir / "retrain_set.json"
    manifest_path = out_dir / "hard_negatives.json"
    atomic_write_text(doc_path, doc_text)
    atomic_write_text(manifest_path, manifest_text)
    logger.info(
        "export: %d images, %d annotations, %d hard negatives",
        len(rset.images), len(rset.annotations), len(rset.hard_negatives),
    )
    _write_manifest(
        out_dir / "run_manifest.json",
        "export",
        cfg,
        inputs=inputs,
        outputs={
            "retrain_set": {"path": str(doc_path), "sha256": sha256_file(doc_path)},
            "hard_negatives": {"path": str(manifest_path), "sha256": sha256_file(manifest_path)},
        },
    )
    return 0


def _cmd_audit_sample(args) -> int:
    cfg = _build_config(args)
    report_path = Path(args.report)
    if not report_path.is_file():
        raise CliError(f"mining report not found: {report_path}")
    rows = read_mining_report(report_path)
    store = _open_store(args.frames)
    out_dir = Path(args.out_dir)
    manifest = sample_for_audit(
        rows, args.n, args.seed, store, out_dir, verdict=Verdict(args.verdict)
    )
    logger.info("audit-sample: wrote %s", manifest)
    _write_manifest(
        out_dir / "run_manifest.json",
        "audit-sample",
        cfg,
        inputs={"report": {"path": str(report_path), "sha256": sha256_file(report_path)}},
        outputs={"manifest": {"path": str(manifest), "sha256": sha256_file(manifest)}},
        extra={"n": args.n, "seed": args.seed, "verdict": args.verdict},
    )
    return 0


def _cmd_audit_report(args) -> int:
    manifest_path = Path(args.manifest)
    if not manifest_path.is_file():
        raise CliError(f"audit manifest not found: {manifest_path}")
    report = compute_purity(read_audit_manifest(manifest_path))
    payload = {
        "n_sampled": report.n_sampled,
        "n_true_negative": report.n_true_negative,
        "n_true_positive": report.n_true_positive,
        "n_ambiguous": report.n_ambiguous,
        "precision_tn": report.precision_tn,
        "precision_tn_plus_ambiguous": report.precision_tn_plus_ambiguous,
    }
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    print(
        f"sampled={report.n_sampled} true_negative={report.n_true_negative} "
        f"true_positive={report.n_true_positive} ambiguous={report.n_ambiguous}"
    )
    print(
        f"precision(tn)={report.precision_tn * 100:.2f}%  "
        f"precision(tn+ambiguous)={report.precision_tn_plus_ambiguous * 100:.2f}%"
    )
    if args.out:
        out = Path(args.out)
        atomic_write_text(out, text)
        _write_manifest(
            out.with_name(out.name + ".manifest.json"),
            "audit-report",
            None,
            inputs={"manifest": {"path": str(manifest_path), "sha256": sha256_file(manifest_path)}},
            outputs={"report": {"path": str(out), "sha256": sha256_file(out)}},
        )
    return 0


_SYNTH_PRESETS = ("basic", "flicker", "miss", "occlusion")


def _preset_scenario(args) -> SyntheticScenario:
    width, height, count = args.width, args.height, args.frame_count
    # integer velocity keeps gap interpolation pixel-aligned for the miss preset
    obj = ObjectSpec(width=20, height=26, start_x=10, start_y=round(height / 2) - 13,
                     vel_x=1.0, vel_y=0.0)
    base = dict(
        name=args.name,
        frame_width=width,
        frame_height=height,
        frame_count=count,
        seed=args.seed,
        objects=(obj,),
    )
    if args.preset == "flicker":
        base["spurious_count"] = args.spurious
    elif args.preset == "miss":
        base["miss_frames"] = ((0, count // 2),)
    elif args.preset == "occlusion":
        mid = count // 2
        base["occlusions"] = (OcclusionEvent(0, mid, mid),)
        base["miss_frames"] = ()
    return SyntheticScenario(**base)


def _cmd_synth(args) -> int:
    cfg = _build_config(args)
    scenario = _preset_scenario(args)
    out_dir = Path(args.out_dir)
    generated = generate(scenario, out_dir, cfg)
    truth_payload = {
        "expected": [
            {
                "video": det.video_id,
                "frame": det.frame_index,
                "bbox": list(det.box.as_xywh()),
                "verdict": verdict.value,
            }
            for det, verdict in sorted(
                generated.truth.expected.items(), key=lambda kv: kv[0].sort_key()
            )
        ],
        "expected_hard_positives": [
            {"video": v, "frame": f, "bbox": list(box.as_xywh())}
            for (v, f), box in sorted(generated.truth.expected_hard_positives.items())
        ],
        "occluded_gap_frames": sorted(generated.truth.occluded_gap_frames),
    }
    truth_path = out_dir / "truth.json"
    atomic_write_text(truth_path, json.dumps(truth_payload, indent=2, sort_keys=True) + "\n")
    logger.info(
        "synth: %d frames, %d detections -> %s",
        scenario.frame_count, len(generated.stream), out_dir,
    )
    _write_manifest(
        out_dir / "run_manifest.json",
        "synth",
        cfg,
        inputs={"seed": args.seed, "preset": args.preset},
        outputs={
            "frames": {"path": str(generated.frames_root)},
            "detections": {
                "path": str(generated.stream_path),
                "sha256": sha256_file(generated.stream_path),
            },
            "truth": {"path": str(truth_path), "sha256": sha256_file(truth_path)},
        },
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flickermine",
        description="Mine hard negatives and hard positives from video detection streams.",
    )
    parser.add_argument("--version", action="version", version=f"flickermine {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mine-hn", help="classify detections as hard negatives / pseudo-positives")
    p.add_argument("--detections", required=True, help="detection stream (JSONL)")
    p.add_argument("--frames", required=True, help="extracted-frames root directory")
    p.add_argument("--out", required=True, help="mining report path (JSONL)")
    p.add_argument("--category", default=None, help="keep only this category")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    _add_config_flags(p)
    p.set_defaults(func=_cmd_mine_hn)

    p = sub.add_parser("mine-hp", help="mine single-frame dropouts as hard positives")
    p.add_argument("--detections", required=True)
    p.add_argument("--frames", required=True)
    p.add_argument("--out", required=True, help="hard-positive report path (JSONL)")
    p.add_argument("--category", default=None)
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    _add_config_flags(p)
    p.set_defaults(func=_cmd_mine_hp)

    p = sub.add_parser("export", help="assemble the retraining set from mining reports")
    p.add_argument("--hn-report", required=True)
    p.add_argument("--hp-report", default=None)
    p.add_argument("--frames", required=True)
    p.add_argument("--out-dir", required=True)
    _add_config_flags(p)
    p.set_defaults(func=_cmd_export)

    p = sub.add_parser("audit-sample", help="sample mined examples for human inspection")
    p.add_argument("--report", required=True, help="mining report (JSONL)")
    p.add_argument("--frames", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument(
        "--verdict",
        default=Verdict.HARD_NEGATIVE.value,
        choices=[v.value for v in Verdict],
    )
    _add_config_flags(p)
    p.set_defaults(func=_cmd_audit_sample)

    p = sub.add_parser("audit-report", help="compute purity from a labeled manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", default=None, help="also write the report as JSON")
    p.set_defaults(func=_cmd_audit_report)

    p = sub.add_parser("synth", help="generate a synthetic scenario with ground truth")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--preset", default="flicker", choices=_SYNTH_PRESETS)
    p.add_argument("--name", default="synth0")
    p.add_argument("--width", type=int, default=128)
    p.add_argument("--height", type=int, default=96)
    p.add_argument("--frame-count", type=int, default=24)
    p.add_argument("--spurious", type=int, default=3)
    _add_config_flags(p)
    p.set_defaults(func=_cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (CliError, ConfigError, StreamParseError, FrameStoreError, AuditError) as exc:
        print(f"flickermine: error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"flickermine: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
