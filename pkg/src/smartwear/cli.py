"""``smartwear`` command line.

Each subcommand resolves its settings as defaults < JSON config < flags, runs
one pipeline stage, writes exactly one run manifest next to its artifacts and
prints a one-line JSON summary on stdout.  Logging goes to stderr.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import glob
import hashlib
import json
import logging
import math
import os
import sys
import time
from dataclasses import asdict, replace

import numpy as np

from . import __version__

log = logging.getLogger("smartwear")

DATA_ENV = "SMARTWEAR_DATA"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def data_dir():
    return os.environ.get(DATA_ENV, os.path.join(os.getcwd(), "smartwear-data"))


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


# ---------------------------------------------------------------- config

DEFAULTS = {
    "gen": {"classes": "all", "subjects": 5, "sessions_per_class": 4, "seed": 0, "preset": "default",
            "duration_s": 30.0},
    "stream": {"host": "127.0.0.1", "port": 5555, "rate": math.inf, "drop": [], "corrupt": []},
    "record": {"host": "127.0.0.1", "port": 5555, "timeout": 120.0},
    "preprocess": {"filter": True, "split_seed": 0, "augment_seed": 0, "augment": True, "cutoff_hz": 10.0,
                   "num_taps": 101},
    "train": {"arch": "dual-resnet", "model": "default", "seed": 0, "epochs": 100, "batch_size": 32,
              "lr0": 1e-3, "patience": 10, "weight_decay": 1e-4},
    "eval": {"split": "test"},
    "explain": {"split": "test", "limit": 10, "target": "predicted"},
    "tsne": {"split": "test", "perplexity": 30.0, "iterations": 1000, "seed": 0},
    "ablate": {"variants": ["dual-resnet/filtered", "dual-resnet/unfiltered", "mlp/filtered", "mlp/unfiltered"],
               "seeds": [0, 1, 2], "preset": "high-noise", "subjects": 5, "sessions_per_class": 4,
               "epochs": 100, "augment": True, "gen_seed": 0},
}

# named presets accepted by --config in place of a file
NAMED_CONFIGS = {
    "default": {},
    "tiny": {"model": "tiny", "epochs": 3, "patience": 2, "batch_size": 16},
}


def load_config(spec):
    """JSON file, a previous run manifest, or a named preset."""
    if spec is None:
        return {}
    if spec in NAMED_CONFIGS:
        return dict(NAMED_CONFIGS[spec])
    try:
        with open(spec) as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        raise UsageError(f"config {spec!r} is neither a file nor one of {sorted(NAMED_CONFIGS)}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {spec!r} is not valid JSON: {exc}") from None
    if isinstance(cfg, dict) and "subcommand" in cfg and "config" in cfg:
        cfg = cfg["config"]
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    return cfg


def resolve(command, args):
    cfg = dict(DEFAULTS[command])
    file_cfg = load_config(getattr(args, "config", None))
    unknown = set(file_cfg) - set(cfg) - {"inputs", "outputs"}
    if unknown:
        raise UsageError(f"unknown config keys for {command}: {sorted(unknown)}")
    cfg.update({k: v for k, v in file_cfg.items() if k in cfg})
    for key in DEFAULTS[command]:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def write_manifest(path, command, cfg, seeds, inputs, outputs, t0, extra=None):
    artifacts = {}
    for p in outputs:
        if os.path.isdir(p):
            for f in sorted(glob.glob(os.path.join(p, "**", "*"), recursive=True)):
                if os.path.isfile(f) and os.path.abspath(f) != os.path.abspath(path):
                    artifacts[os.path.abspath(f)] = sha256_file(f)
        elif os.path.isfile(p):
            artifacts[os.path.abspath(p)] = sha256_file(p)
    manifest = {
        "subcommand": command,
        "version": __version__,
        "config": _jsonable(cfg),
        "seeds": seeds,
        "inputs": [os.path.abspath(p) for p in inputs],
        "outputs": [os.path.abspath(p) for p in outputs],
        "checksums": artifacts,
        "wall_time_s": time.perf_counter() - t0,
    }
    manifest.update(extra or {})
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return path


def _jsonable(cfg):
    return {k: (None if isinstance(v, float) and math.isinf(v) else v) for k, v in cfg.items()}


def emit(obj):
    sys.stdout.write(json.dumps(obj, sort_keys=True) + "\n")
    sys.stdout.flush()


# ---------------------------------------------------------------- helpers

def _parse_ids(text, valid, what):
    if text in ("all", None):
        return list(valid)
    try:
        ids = [int(t) for t in str(text).split(",") if t]
    except ValueError:
        raise UsageError(f"bad {what} list {text!r}") from None
    bad = [i for i in ids if i not in valid]
    if bad:
        raise UsageError(f"unknown {what}: {bad}")
    return ids


def _gen_config(preset, seed, duration):
    from .sensorsim import GeneratorConfig
    if preset == "default":
        cfg = GeneratorConfig(seed=seed)
    elif preset == "high-noise":
        cfg = GeneratorConfig.high_noise(seed=seed)
    else:
        raise UsageError(f"unknown generator preset {preset!r}")
    return replace(cfg, duration_s=float(duration)) if duration is not None else cfg


def _subjects(spec):
    from .sensorsim import SUBJECTS
    if isinstance(spec, int) or (isinstance(spec, str) and spec.isdigit()):
        n = int(spec)
        if not 1 <= n <= len(SUBJECTS):
            raise UsageError(f"--subjects must be 1..{len(SUBJECTS)}")
        return SUBJECTS[:n]
    ids = _parse_ids(spec, [p.id for p in SUBJECTS], "subjects")
    return tuple(p for p in SUBJECTS if p.id in ids)


def _session_stems(path):
    if os.path.isfile(path) or os.path.isfile(path + ".json"):
        return [path[:-5] if path.endswith(".json") else path]
    stems = sorted(p[:-5] for p in glob.glob(os.path.join(path, "*.json")) if not p.endswith("manifest.json"))
    if not stems:
        raise FileNotFoundError(f"no session files in {path}")
    return stems


def _split_windows(ds, split):
    if split not in ("train", "val", "test"):
        raise UsageError(f"unknown split {split!r}")
    return ds.subset(split)


# ---------------------------------------------------------------- commands

def cmd_gen(args, cfg, t0):
    from .sensorsim import generate_corpus, save_session
    classes = _parse_ids(cfg["classes"], range(1, 7), "classes")
    gcfg = _gen_config(cfg["preset"], cfg["seed"], cfg["duration_s"])
    out = args.out or os.path.join(data_dir(), "sessions")
    os.makedirs(out, exist_ok=True)
    sessions = generate_corpus(gcfg, classes, _subjects(cfg["subjects"]), cfg["sessions_per_class"])
    for s in sessions:
        save_session(s, os.path.join(out, s.session_id))
    man = write_manifest(os.path.join(out, "manifest.json"), "gen", cfg, {"generator": cfg["seed"]}, [],
                         [out], t0, {"generator_config": asdict(gcfg)})
    emit({"sessions": len(sessions), "out": os.path.abspath(out), "manifest": man})


def cmd_stream(args, cfg, t0):
    from .device import TransportError, stream_session
    from .sensorsim import load_session
    if not args.session:
        raise UsageError("stream: --session is required")
    session = load_session(args.session)
    try:
        summary = stream_session(session, endpoint=(cfg["host"], cfg["port"]), rate_multiplier=cfg["rate"],
                                 drop_seqs=cfg["drop"], corrupt_seqs=cfg["corrupt"])
    except TransportError as exc:
        raise RuntimeError(f"{exc} (frames sent: {exc.frames_sent})") from exc
    man_path = args.manifest or os.path.join(data_dir(), "runs", f"stream-{session.session_id}.json")
    write_manifest(man_path, "stream", cfg, {}, [args.session], [], t0,
                   {"frames_sent": summary.frames_sent, "samples_sent": summary.samples_sent})
    emit({"frames_sent": summary.frames_sent, "samples_sent": summary.samples_sent,
          "skipped_seqs": summary.skipped_seqs, "manifest": man_path})


def cmd_record(args, cfg, t0):
    from .device import record, save_recorded
    stem = args.out or os.path.join(data_dir(), "recorded", "session")
    os.makedirs(os.path.dirname(os.path.abspath(stem)), exist_ok=True)
    log.info("listening on %s:%s", cfg["host"], cfg["port"])
    rec = record((cfg["host"], cfg["port"]), timeout=cfg["timeout"])
    extra = {}
    if args.label_from:
        with open(args.label_from if args.label_from.endswith(".json") else args.label_from + ".json") as fh:
            src = json.load(fh)
        if rec.gaps or rec.truncated:
            log.warning("recording has gaps; label metadata not attached")
        else:
            extra = {k: src[k] for k in ("label", "subject", "rep_marks", "seed", "session_id", "strain_max")
                     if k in src}
    csv_path, json_path = save_recorded(rec, stem, extra=extra)
    man = write_manifest(stem + ".manifest.json", "record", cfg, {}, [], [csv_path, json_path], t0)
    emit({"samples": int(len(rec.sample_index)), "frames": rec.frames_received, "gaps": rec.gaps,
          "dropped": rec.dropped_count, "truncated": rec.truncated, "out": csv_path, "manifest": man})


def cmd_preprocess(args, cfg, t0):
    from .dataset import AUG_KINDS, build_dataset, save_dataset
    from .dsp import DspConfig
    from .sensorsim import load_session
    src = args.sessions or os.path.join(data_dir(), "sessions")
    stems = _session_stems(src)
    sessions = [load_session(s) for s in stems]
    dcfg = DspConfig(cutoff=cfg["cutoff_hz"], num_taps=cfg["num_taps"], apply_filter=cfg["filter"])
    ds = build_dataset(sessions, dcfg, split_seed=cfg["split_seed"], augment_seed=cfg["augment_seed"],
                       augment_kinds=AUG_KINDS if cfg["augment"] else ())
    out = args.out or os.path.join(data_dir(), "dataset")
    save_dataset(ds, out)
    raw = sum(w.is_raw for w in ds.windows)
    man = write_manifest(os.path.join(out, "run_manifest.json"), "preprocess", cfg,
                         {"split": cfg["split_seed"], "augment": cfg["augment_seed"]}, [src], [out], t0)
    emit({"raw_windows": raw, "windows": len(ds), "train": len(ds.split.train), "val": len(ds.split.val),
          "test": len(ds.split.test), "out": os.path.abspath(out), "manifest": man})


def _model_config(arch, name):
    from .model import DualResNetConfig, MlpConfig
    if name == "default":
        return None
    if name == "tiny":
        return DualResNetConfig.tiny(1300) if arch == "dual-resnet" else MlpConfig(hidden=(16, 8))
    raise UsageError(f"unknown model config {name!r}; use default or tiny")


def cmd_train(args, cfg, t0):
    from .dataset import load_dataset
    from .model import TrainConfig, train, write_history
    if cfg["arch"] not in ("dual-resnet", "mlp"):
        raise UsageError(f"unknown --arch {cfg['arch']!r}")
    src = args.dataset or os.path.join(data_dir(), "dataset")
    ds = load_dataset(src)
    tcfg = TrainConfig(lr0=cfg["lr0"], epochs=cfg["epochs"], batch_size=cfg["batch_size"],
                       patience=cfg["patience"], weight_decay=cfg["weight_decay"], seed=cfg["seed"])
    ckpt, history = train(ds, tcfg, arch=cfg["arch"], model_config=_model_config(cfg["arch"], cfg["model"]))
    out = args.out or os.path.join(data_dir(), "train")
    os.makedirs(out, exist_ok=True)
    ck_path, hist_path = os.path.join(out, "checkpoint.swck"), os.path.join(out, "history.csv")
    ckpt.save(ck_path)
    write_history(history, hist_path)
    man = write_manifest(os.path.join(out, "manifest.json"), "train", cfg, {"train": cfg["seed"]}, [src],
                         [ck_path, hist_path], t0)
    emit({"checkpoint": ck_path, "sha256": sha256_file(ck_path), "best_epoch": ckpt.best_epoch,
          "best_val_loss": ckpt.best_val_loss, "epochs_run": len(history), "manifest": man})


def _load_pair(args):
    from .dataset import load_dataset
    from .model import Checkpoint
    ck = args.checkpoint or os.path.join(data_dir(), "train", "checkpoint.swck")
    src = args.dataset or os.path.join(data_dir(), "dataset")
    return Checkpoint.load(ck), load_dataset(src), ck, src


def cmd_eval(args, cfg, t0):
    from .analyze import confusion_and_metrics, write_confusion_csv, write_metrics_csv
    from .model import predict
    ckpt, ds, ck, src = _load_pair(args)
    windows = _split_windows(ds, cfg["split"])
    X = np.stack([w.data for w in windows])
    y = np.array([w.class_id for w in windows])
    preds, _ = predict(ckpt, X)
    m = confusion_and_metrics(preds, y)
    out = args.out or os.path.join(data_dir(), "eval")
    os.makedirs(out, exist_ok=True)
    cm_path, met_path = os.path.join(out, "confusion.csv"), os.path.join(out, "metrics.csv")
    write_confusion_csv(m, cm_path)
    write_metrics_csv(m, met_path)
    man = write_manifest(os.path.join(out, "manifest.json"), "eval", cfg, {}, [ck, src], [cm_path, met_path], t0)
    emit({"mean_accuracy": m.mean_accuracy, "n": m.total,
          "per_class": [None if np.isnan(a) else float(a) for a in m.per_class_accuracy], "manifest": man})


def cmd_explain(args, cfg, t0):
    from .model import grad_cam, predict
    ckpt, ds, ck, src = _load_pair(args)
    if args.windows:
        windows = [ds[w] for w in args.windows.split(",")]
    else:
        windows = _split_windows(ds, cfg["split"])[:cfg["limit"]]
    model = ckpt.build()
    out = args.out or os.path.join(data_dir(), "explain")
    os.makedirs(out, exist_ok=True)
    paths, rows = [], []
    for w in windows:
        pred = int(predict(model, w.data[None])[0][0])
        target = {"predicted": pred, "true": w.class_id}.get(cfg["target"])
        if target is None:
            target = int(cfg["target"])
        cam = grad_cam(model, w.data, target)
        path = os.path.join(out, f"{w.window_id}.csv")
        with open(path, "w") as fh:
            fh.write("sample,time_s,cam\n")
            for i, v in enumerate(cam):
                fh.write(f"{i},{i / ds.fs:.6f},{v!r}\n")
        paths.append(path)
        rows.append({"window_id": w.window_id, "class_id": w.class_id, "predicted": pred, "target": target})
    man = write_manifest(os.path.join(out, "manifest.json"), "explain", cfg, {}, [ck, src], paths, t0)
    emit({"windows": rows, "manifest": man})


def cmd_tsne(args, cfg, t0):
    from .analyze import TsneConfig, tsne, write_embedding_csv
    from .model import extract_features
    ckpt, ds, ck, src = _load_pair(args)
    windows = _split_windows(ds, cfg["split"])
    feats = extract_features(ckpt, np.stack([w.data for w in windows]))
    res = tsne(feats, TsneConfig(perplexity=cfg["perplexity"], iterations=cfg["iterations"], seed=cfg["seed"]))
    out = args.out or os.path.join(data_dir(), "tsne")
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "embedding.csv")
    write_embedding_csv(res.embedding, [w.class_id for w in windows], path, [w.window_id for w in windows])
    kl_path = os.path.join(out, "kl_history.csv")
    np.savetxt(kl_path, res.kl_history, header="kl", comments="", fmt="%.10g")
    man = write_manifest(os.path.join(out, "manifest.json"), "tsne", cfg, {"tsne": cfg["seed"]}, [ck, src],
                         [path, kl_path], t0)
    emit({"points": len(windows), "perplexity": res.perplexity, "final_kl": float(res.kl_history[-1]),
          "out": path, "manifest": man})


def cmd_ablate(args, cfg, t0):
    from .analyze import ablation_run, parse_variant, write_ablation_csv
    from .dataset import AUG_KINDS
    from .model import TrainConfig
    for v in cfg["variants"]:
        try:
            parse_variant(v)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    gcfg = _gen_config(cfg["preset"], cfg["gen_seed"], None)
    rows, summary = ablation_run(gcfg, cfg["variants"], cfg["seeds"], TrainConfig(epochs=cfg["epochs"]),
                                 subjects=_subjects(cfg["subjects"]),
                                 sessions_per_class=cfg["sessions_per_class"],
                                 augment_kinds=AUG_KINDS if cfg["augment"] else ())
    out = args.out or os.path.join(data_dir(), "ablation")
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "ablation.csv")
    write_ablation_csv(rows, summary, path)
    man = write_manifest(os.path.join(out, "manifest.json"), "ablate", cfg, {"seeds": cfg["seeds"]}, [], [path], t0)
    emit({"summary": [asdict(s) for s in summary], "out": path, "manifest": man})


COMMANDS = {"gen": cmd_gen, "stream": cmd_stream, "record": cmd_record, "preprocess": cmd_preprocess,
            "train": cmd_train, "eval": cmd_eval, "explain": cmd_explain, "tsne": cmd_tsne,
            "ablate": cmd_ablate}


def _csv_ints(text):
    try:
        return [int(t) for t in text.split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser():
    p = _Parser(prog="smartwear", description="Smart-sportswear strain pipeline.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def cmd(name, help_):
        sp = sub.add_parser(name, help=help_, description=help_)
        sp.add_argument("--config", help="JSON config file, previous run manifest, or preset name")
        return sp

    sp = cmd("gen", "generate synthetic strain sessions")
    sp.add_argument("--classes", help="'all' or comma-separated class ids 1..6")
    sp.add_argument("--subjects", help="number of subject presets (1..5) or comma-separated ids")
    sp.add_argument("--sessions-per-class", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--preset", choices=["default", "high-noise"])
    sp.add_argument("--duration-s", type=float)
    sp.add_argument("--out", help="output directory (default $%s/sessions)" % DATA_ENV)

    sp = cmd("stream", "send one session to a recorder as the simulated device")
    sp.add_argument("--session", help="session file stem")
    sp.add_argument("--host")
    sp.add_argument("--port", type=int)
    sp.add_argument("--rate", type=float, help="pacing multiplier (1 = real time, inf = unpaced)")
    sp.add_argument("--drop", type=_csv_ints, help="frame seqs to omit")
    sp.add_argument("--corrupt", type=_csv_ints, help="frame seqs to corrupt with one bit flip")
    sp.add_argument("--manifest", help="run manifest path")

    sp = cmd("record", "listen for one device connection and save the decoded session")
    sp.add_argument("--host")
    sp.add_argument("--port", type=int)
    sp.add_argument("--timeout", type=float, help="seconds to wait for a session")
    sp.add_argument("--label-from", help="session file whose label metadata to attach")
    sp.add_argument("--out", help="output file stem")

    sp = cmd("preprocess", "filter, normalise, window, augment and split sessions into a dataset")
    sp.add_argument("--sessions", help="directory of session files")
    sp.add_argument("--filter", dest="filter", action="store_true", default=None)
    sp.add_argument("--no-filter", dest="filter", action="store_false")
    sp.add_argument("--augment", dest="augment", action="store_true", default=None)
    sp.add_argument("--no-augment", dest="augment", action="store_false")
    sp.add_argument("--split-seed", type=int)
    sp.add_argument("--augment-seed", type=int)
    sp.add_argument("--cutoff-hz", type=float)
    sp.add_argument("--num-taps", type=int)
    sp.add_argument("--out", help="dataset directory")

    sp = cmd("train", "train a classifier and write a checkpoint")
    sp.add_argument("--dataset")
    sp.add_argument("--arch", help="dual-resnet or mlp")
    sp.add_argument("--model", help="model size: default or tiny")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--epochs", type=int)
    sp.add_argument("--batch-size", type=int)
    sp.add_argument("--lr0", type=float)
    sp.add_argument("--patience", type=int)
    sp.add_argument("--weight-decay", type=float)
    sp.add_argument("--out")

    for name, help_ in (("eval", "confusion matrix and accuracies on a split"),
                        ("explain", "Grad-CAM maps for windows"),
                        ("tsne", "t-SNE embedding of pre-head features")):
        sp = cmd(name, help_)
        sp.add_argument("--checkpoint")
        sp.add_argument("--dataset")
        sp.add_argument("--split", choices=["train", "val", "test"])
        sp.add_argument("--out")
        if name == "explain":
            sp.add_argument("--windows", help="comma-separated window ids (overrides --split)")
            sp.add_argument("--limit", type=int)
            sp.add_argument("--target", help="predicted, true, or a class id")
        if name == "tsne":
            sp.add_argument("--perplexity", type=float)
            sp.add_argument("--iterations", type=int)
            sp.add_argument("--seed", type=int)

    sp = cmd("ablate", "filter / architecture ablation table")
    sp.add_argument("--variants", type=lambda s: s.split(","), help="e.g. dual-resnet/filtered,mlp/unfiltered")
    sp.add_argument("--seeds", type=_csv_ints)
    sp.add_argument("--preset", choices=["default", "high-noise"])
    sp.add_argument("--subjects")
    sp.add_argument("--sessions-per-class", type=int)
    sp.add_argument("--epochs", type=int)
    sp.add_argument("--augment", dest="augment", action="store_true", default=None)
    sp.add_argument("--no-augment", dest="augment", action="store_false")
    sp.add_argument("--gen-seed", type=int)
    sp.add_argument("--out")
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return 1
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, stream=sys.stderr,
                            format="%(levelname)s %(name)s: %(message)s")
        cfg = resolve(args.command, args)
        COMMANDS[args.command](args, cfg, time.perf_counter())
        return 0
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure: report, don't trace
        log.debug("failure", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
