"""Command-line interface.

Verbs: analyze, calibrate, train, evaluate, perception, serve.
Exit codes: 0 success, 2 validation error (bad files/arguments/data),
1 internal error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from .audio import load_wav
from .calibration import CalibrationMap, fit_isotonic
from .classifier import MlpSpec, arch_from_dict, load_external_embeddings, load_model, save_model
from .errors import VoicefemError
from .features import melspectrogram
from .metrics import BgcPrediction, evaluate_bgc, evaluate_vfp, gender_bias, hacc
from .perception import (
    category_stats,
    fit_rt_parabola,
    listener_mean_judgments,
    load_answers,
    load_speakers,
    vfp_from_answers,
    wilcoxon_rank_sum,
)
from .pipeline import PipelineConfig, estimate_vfp
from .service import ServiceConfig, run_service
from .training import (
    CorpusIndex,
    EmbeddingProvider,
    MelStatsProvider,
    TrainConfig,
    run_protocol,
)
from .vad import apply_segments, detect_speech


def _require_file(path, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"{what} file not found: {p}")
    return p


def _load_model_and_map(args):
    model_path = args.model or os.environ.get("VFP_MODEL")
    calib_path = args.calib or os.environ.get("VFP_CALIB")
    if not model_path or not calib_path:
        raise VoicefemError("--model and --calib required (or VFP_MODEL/VFP_CALIB)")
    bundle = load_model(_require_file(model_path, "model"))
    cal = CalibrationMap.from_json(_require_file(calib_path, "calibration").read_text())
    return bundle, cal


def cmd_analyze(args) -> int:
    bundle, cal = _load_model_and_map(args)
    wav = _require_file(args.wav, "wav")
    result = estimate_vfp(load_wav(wav.read_bytes()), bundle, cal)
    if args.json:
        print(json.dumps(result.to_dict(ndigits=3), indent=2))
        return 0
    fmt = lambda v, unit="": "n/a" if v is None else f"{v:.2f}{unit}"
    print(f"VFP             {result.vfp:6.1f}")
    print(f"raw score       {result.raw_score:6.3f}  (mean of {result.n_windows} windows)")
    print(f"speech ratio    {result.speech_ratio:6.2f}")
    print(f"median F0       {fmt(result.f0_median_hz, ' Hz')}  ({fmt(result.f0_median_st, ' ST')})")
    print(f"VTL             {fmt(result.vtl_cm, ' cm')}")
    for w in result.warnings:
        print(f"warning: {w}")
    return 0


def cmd_calibrate(args) -> int:
    path = _require_file(args.pairs, "pairs")
    pairs = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or row[0].startswith("#"):
                continue
            if lineno == 1:
                try:
                    float(row[0])
                except ValueError:
                    continue  # header
            try:
                pairs.append((float(row[0]), float(row[1])))
            except (ValueError, IndexError) as exc:
                raise VoicefemError(f"{path}:{lineno}: {exc}") from exc
    cal = fit_isotonic(pairs)
    Path(args.out).write_text(cal.to_json())
    print(f"wrote {len(cal.x)}-knot calibration map to {args.out}")
    return 0


def _mel_provider_from_index(idx: CorpusIndex, n_bands: int) -> MelStatsProvider:
    tables = {}
    for speaker in idx.speakers:
        for ref in speaker.recordings:
            if ref in tables:
                continue
            buf = load_wav(_require_file(ref, "recording").read_bytes())
            mel = melspectrogram(buf, n_bands)
            tables[ref] = apply_segments(mel, detect_speech(buf))
    return MelStatsProvider(tables)


def cmd_train(args) -> int:
    arch = arch_from_dict(json.loads(_require_file(args.arch, "arch").read_text()))
    if not isinstance(arch, MlpSpec):
        raise VoicefemError("in-process training supports the mlp architecture only")
    idx = CorpusIndex.from_csv(_require_file(args.index, "index"))
    if args.embeddings:
        provider = EmbeddingProvider(load_external_embeddings(_require_file(args.embeddings, "embeddings")))
    else:
        provider = _mel_provider_from_index(idx, arch.input_dim // 2)
    cfg = TrainConfig(base_seed=args.seed, n_seeds=args.seeds,
                      learning_rate=args.lr, max_epochs=args.max_epochs,
                      patience=min(args.patience, args.max_epochs))
    corpora = [CorpusIndex(tuple(s for s in idx.speakers if s.corpus_tag == tag))
               for tag in idx.corpus_tags]
    result, train_idx, dev_idx = run_protocol(arch, corpora, provider, cfg)
    save_model(result.bundle, args.out)
    if args.log:
        with open(args.log, "w", encoding="utf-8") as fh:
            for record in result.log_records():
                fh.write(json.dumps(record) + "\n")
    best = result.logs[result.best_seed_index]
    print(f"trained on {len(train_idx)} speakers (dev {len(dev_idx)}); "
          f"best seed {result.best_seed_index} epoch {best.best_epoch} "
          f"objective {best.best_objective:.4f}")
    print(f"wrote model to {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    bundle, cal = _load_model_and_map(args)
    path = _require_file(args.testset, "testset")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise VoicefemError(f"{path}: empty test set")
    required = {"speaker_id", "gender", "wav_path"}
    if not required.issubset(rows[0]):
        raise VoicefemError(f"{path}: header must include {sorted(required)}")

    preds, raw_by_speaker = [], {}
    for row in rows:
        buf = load_wav(_require_file(row["wav_path"], "recording").read_bytes())
        result = estimate_vfp(buf, bundle, cal, PipelineConfig(compute_diagnostics=False))
        raw_by_speaker[row["speaker_id"]] = result
        if row.get("age_band"):
            preds.append(BgcPrediction(row["speaker_id"], row["gender"].strip().upper(),
                                       row["age_band"], result.raw_score))

    out = {}
    genders = {r["speaker_id"]: r["gender"].strip().upper() for r in rows}
    correct_f = [raw_by_speaker[s].raw_score >= 0.5 for s, g in genders.items() if g == "F"]
    correct_m = [raw_by_speaker[s].raw_score < 0.5 for s, g in genders.items() if g == "M"]
    acc_f = 100.0 * np.mean(correct_f) if correct_f else None
    acc_m = 100.0 * np.mean(correct_m) if correct_m else None
    if acc_f is not None and acc_m is not None:
        out["bgc"] = {"acc_f": acc_f, "acc_m": acc_m,
                      "hacc": hacc(acc_m, acc_f), "gb": gender_bias(acc_m, acc_f)}
    if preds:
        out["by_age"] = evaluate_bgc(preds).to_dict()["by_age"]
    if all(r.get("category") and r.get("target_vfp") for r in rows):
        predicted = {r["speaker_id"]: raw_by_speaker[r["speaker_id"]].vfp for r in rows}
        cats = {r["speaker_id"]: r["category"].strip().upper() for r in rows}
        targets = {r["speaker_id"]: float(r["target_vfp"]) for r in rows}
        r2_cis, r2_tf = evaluate_vfp(predicted, cats, targets)
        out["vfp_r2"] = {"cis": r2_cis, "tf": r2_tf}

    if args.json:
        print(json.dumps(out, indent=2))
        return 0
    if "bgc" in out:
        b = out["bgc"]
        print(f"BGC   Hacc {b['hacc']:6.2f}   GB {b['gb']:+6.2f}   "
              f"(acc M {b['acc_m']:.2f}, F {b['acc_f']:.2f})")
    for band, cell in out.get("by_age", {}).items():
        h = "n/a" if cell["hacc"] is None else f"{cell['hacc']:6.2f}"
        g = "n/a" if cell["gb"] is None else f"{cell['gb']:+6.2f}"
        print(f"  {band:8s} Hacc {h}   GB {g}   (n={cell['n_f'] + cell['n_m']})")
    if "vfp_r2" in out:
        print(f"VFP R^2   CIS {out['vfp_r2']['cis']:.4f}   TF {out['vfp_r2']['tf']:.4f}")
    return 0


def cmd_perception(args) -> int:
    answers = load_answers(_require_file(args.answers, "answers"))
    speakers = load_speakers(_require_file(args.speakers, "speakers"))
    rows, warnings = category_stats(answers, speakers)

    per_speaker = {}
    for a in answers:
        per_speaker.setdefault(a.speaker_id, []).append(a)
    speaker_vfp = {s: vfp_from_answers(v) for s, v in per_speaker.items()}
    rt_points = [(speaker_vfp[s], float(np.mean([a.rt for a in v])))
                 for s, v in per_speaker.items()]

    from dataclasses import asdict

    doc = {"categories": [asdict(r) for r in rows], "warnings": warnings,
           "speaker_vfp": speaker_vfp}
    try:
        fit = fit_rt_parabola(rt_points)
        doc["rt_parabola"] = {"a": fit.a, "b": fit.b, "c": fit.c, "vertex": fit.vertex}
    except VoicefemError:
        doc["rt_parabola"] = None
    grouped = listener_mean_judgments(answers)
    if grouped.get("F") and grouped.get("M"):
        u, p = wilcoxon_rank_sum(grouped["F"], grouped["M"])
        doc["listener_gender_test"] = {
            "mean_f": float(np.mean(grouped["F"])), "mean_m": float(np.mean(grouped["M"])),
            "u": u, "p": p,
        }

    if args.json:
        print(json.dumps(doc, indent=2))
        return 0
    header = f"{'':24s}" + "".join(f"{r.category:>8s}" for r in rows)
    print(header)
    for label, attr in [("Perceived as Female (%)", "pct_f"), ("Perceived as Male (%)", "pct_m"),
                        ("IDK (%)", "pct_idk"), ("Average RT (s)", "rt_mean"),
                        ("Std RT (s)", "rt_std"), ("VFP", "vfp")]:
        print(f"{label:24s}" + "".join(f"{getattr(r, attr):8.1f}" for r in rows))
    if doc.get("rt_parabola"):
        q = doc["rt_parabola"]
        vertex = "n/a" if q["vertex"] is None else f"{q['vertex']:.1f}"
        print(f"RT fit: rt = {q['a']:.3f} + {q['b']:.4f} v + {q['c']:.6f} v^2  (vertex {vertex})")
    if doc.get("listener_gender_test"):
        t = doc["listener_gender_test"]
        print(f"listener means F/M: {t['mean_f']:.3f}/{t['mean_m']:.3f}  "
              f"rank-sum U={t['u']:.1f} p={t['p']:.4f}")
    for w in warnings:
        print(f"warning: {w}")
    return 0


def cmd_serve(args) -> int:
    from dataclasses import replace

    cfg = ServiceConfig.from_file(_require_file(args.config, "config")) if args.config \
        else ServiceConfig()
    cfg = cfg.with_env_overrides()
    if args.host:
        cfg = replace(cfg, host=args.host)
    if args.port:
        cfg = replace(cfg, port=args.port)
    _require_file(cfg.model_path, "model")
    _require_file(cfg.calibration_path, "calibration")
    run_service(cfg)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="voicefem",
                                     description="Voice femininity estimation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="estimate VFP for a WAV file")
    p.add_argument("wav")
    p.add_argument("--json", action="store_true")
    p.add_argument("--model", help="model bundle (default: $VFP_MODEL)")
    p.add_argument("--calib", help="calibration JSON (default: $VFP_CALIB)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("calibrate", help="fit an isotonic calibration map")
    p.add_argument("--pairs", required=True, help="CSV: raw_score,target_vfp")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("train", help="train an mlp gender classifier")
    p.add_argument("--index", required=True, help="CSV: speaker_id,gender,corpus_tag,wav_path")
    p.add_argument("--arch", required=True, help="JSON architecture description")
    p.add_argument("--out", required=True)
    p.add_argument("--log", help="write per-epoch JSON-lines training log")
    p.add_argument("--embeddings", help="external embedding table (recording refs are ids)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--seeds", type=int, default=3)
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--max-epochs", type=int, default=160)
    p.add_argument("--patience", type=int, default=50)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a test set with a model+calibration")
    p.add_argument("--model")
    p.add_argument("--calib")
    p.add_argument("--testset", required=True,
                   help="CSV with header: speaker_id,gender,wav_path[,age_band,category,target_vfp]")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("perception", help="statistics from listener answer tables")
    p.add_argument("--answers", required=True)
    p.add_argument("--speakers", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_perception)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config", help="TOML or JSON service configuration")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (VoicefemError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - surface as internal error
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
