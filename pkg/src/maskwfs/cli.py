"""Command-line entry point: ``maskwfs <command> [flags]``.

Every command accepts ``--config FILE`` (JSON; either a flat mapping of
option names or a manifest written by a previous run) and ``--threads``.
Settings resolve as defaults < config file < explicit flags, and each run
writes a JSON manifest echoing the resolved settings and the SHA-256 of
every input and output file, so ``--config <manifest>`` repeats the run.

Exit codes: 0 success, 2 configuration or usage error, 3 I/O error,
4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .bench import (
    backprop_diameter_check,
    curve_files,
    format_bench_table,
    run_snr_sweep,
    simulate_pinhole,
    time_retrieval,
)
from .checkpoint import load_checkpoint
from .dataset import (
    DEFAULT_NOISE_LEVELS,
    GenConfig,
    canonicalize_phase,
    forward_pattern,
    generate_corpus,
    generate_object,
    object_seed,
    open_corpus,
)
from .fileio import FormatError, atomic_write, file_sha256, mask_hash, read_field, read_magic, read_mask, write_field
from .iterative import IterConfig, retrieve_iterative, support_from_mask
from .network import infer
from .optics import ComplexField, Grid, angular_spectrum_propagate, default_mask
from .results import RetrievalResult, write_result
from .training import TrainConfig, TrainingAborted, train

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4

log = logging.getLogger("maskwfs")


class ConfigError(ValueError):
    """Bad or inconsistent settings."""


# --- option tables ---------------------------------------------------------------
# name -> (default, type, help). Names use underscores; flags use dashes.

def _levels(text):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).replace(",", " ").split()]


COMMON = {
    "threads": (os.cpu_count() or 1, int, "worker threads (1 = bitwise reproducible mode)"),
    "manifest": (None, str, "manifest path (default derived from --out)"),
}

OPTIONS = {
    "generate": {
        "out": ("corpus.wds", str, "output corpus path"),
        "samples": (100, int, "number of objects"),
        "noise": (list(DEFAULT_NOISE_LEVELS), _levels, "peak counts per object, e.g. 'inf 10 5'"),
        "seed": (0, int, "master seed"),
        "grid_size": (128, int, "pixels per side"),
        "extent": (20e-6, float, "field of view [m]"),
        "wavelength": (13.5e-9, float, "wavelength [m]"),
        "mask": (None, str, "MASK file (default: built-in five-hole mask)"),
        "mask_out": (None, str, "also write the mask used to this path"),
        "chunk": (64, int, "objects per generation chunk"),
    },
    "train": {
        "train": (None, str, "training corpus"),
        "val": (None, str, "validation corpus (noise-free records are used)"),
        "out": ("checkpoints", str, "output directory for best.wnet and train_log.tsv"),
        "epochs": (50, int, "maximum epochs"),
        "patience": (5, int, "non-improving epochs tolerated"),
        "batch_size": (16, int, "mini-batch size"),
        "lr": (1e-4, float, "ADAM learning rate"),
        "pattern_weight": (1.0, float, "weight of the diffraction-pattern loss term"),
        "seed": (0, int, "initialization and shuffle seed"),
        "mask": (None, str, "MASK file (default: built-in mask on the corpus grid)"),
    },
    "retrieve": {
        "method": ("neural", str, "neural or iterative"),
        "checkpoint": (None, str, "network checkpoint (neural)"),
        "corpus": (None, str, "read the pattern from this corpus"),
        "index": (0, int, "record index in --corpus"),
        "pattern": (None, str, "standalone CFLD intensity file instead of --corpus"),
        "out": ("retrieved.cfld", str, "output field path (sidecar at <out>.txt)"),
        "canonicalize": (False, bool, "zero the phase of the center pixel"),
        "iterations": (500, int, "iterations (iterative)"),
        "algorithm": ("HIO", str, "HIO or ER (iterative)"),
        "beta": (0.9, float, "HIO feedback (iterative)"),
        "seed": (0, int, "random start seed (iterative)"),
        "mask": (None, str, "MASK file (default: built-in mask on the pattern grid)"),
    },
    "bench": {
        "checkpoint": (None, str, "network checkpoint"),
        "corpus": (None, str, "held-out corpus (noise-free records supply objects)"),
        "samples": (200, int, "held-out objects to generate when --corpus is not given"),
        "seed": (3, int, "master seed of the generated held-out objects"),
        "levels": (list(DEFAULT_NOISE_LEVELS), _levels, "peak counts, e.g. 'inf 10 5'"),
        "bench_seed": (0, int, "noise seed of the sweep"),
        "iterations": (500, int, "iterative retrieval iterations"),
        "timing_reps": (5, int, "timing repetitions per method"),
        "examples": (1, int, "objects whose retrievals are saved as CFLD files"),
        "out": ("bench", str, "output directory"),
        "mask": (None, str, "MASK file (default: built-in mask)"),
    },
    "propagate": {
        "input": (None, str, "input CFLD field"),
        "pinhole": (None, float, "input: field of a simulated pinhole of this diameter [m] ..."),
        "pinhole_distance": (500e-6, float, "... observed this far downstream [m]"),
        "z": (0.0, float, "propagation distance [m] (negative = back-propagation)"),
        "out": ("propagated.cfld", str, "output field path"),
        "expect_diameter": (None, float, "check the 50%-threshold diameter against this [m]"),
        "tolerance_px": (2.0, float, "diameter tolerance in grid pixels"),
    },
    "inspect": {
        "path": (None, str, "file to describe"),
    },
}

HELP = {
    "generate": "simulate a training/validation corpus",
    "train": "train the network with early stopping",
    "retrieve": "retrieve one field (neural or iterative)",
    "bench": "RMSE-vs-SNR sweep and timing comparison",
    "propagate": "angular-spectrum propagation with optional diameter check",
    "inspect": "print the header of any supported file",
}


def build_parser():
    p = argparse.ArgumentParser(prog="maskwfs", description="Lensless wavefront sensing with a binary mask.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for cmd, opts in OPTIONS.items():
        sp = sub.add_parser(cmd, help=HELP[cmd], argument_default=argparse.SUPPRESS)
        if cmd == "inspect":
            sp.add_argument("path", help=opts["path"][2])
            continue
        sp.add_argument("--config", help="JSON config or manifest")
        for name, (default, typ, text) in {**opts, **COMMON}.items():
            flag = "--" + name.replace("_", "-")
            if typ is bool:
                sp.add_argument(flag, action=argparse.BooleanOptionalAction, help=text)
            else:
                sp.add_argument(flag, type=str if typ is _levels else typ,
                                help=f"{text} (default: {default})")
        sp.add_argument("-v", "--verbose", action="store_true")
    return p


def resolve(cmd, args):
    """Merge defaults, the optional config file and explicit flags."""
    table = {**OPTIONS[cmd], **COMMON}
    cfg = {k: v[0] for k, v in table.items()}
    path = getattr(args, "config", None)
    if path:
        try:
            with open(path) as fh:
                loaded = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        if "config" in loaded and "command" in loaded:
            if loaded["command"] != cmd:
                raise ConfigError(f"manifest {path} is for '{loaded['command']}', not '{cmd}'")
            loaded = loaded["config"]
        unknown = set(loaded) - set(table)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg.update(loaded)
    for k in table:
        if hasattr(args, k):
            cfg[k] = getattr(args, k)
    for k, (default, typ, _) in table.items():
        if cfg[k] is not None and typ is not bool:
            try:
                cfg[k] = typ(cfg[k])
            except (TypeError, ValueError):
                raise ConfigError(f"bad value for {k}: {cfg[k]!r}") from None
    if cfg["threads"] < 1:
        raise ConfigError("--threads must be >= 1")
    return cfg


def _json_ready(v):
    if isinstance(v, float) and not math.isfinite(v):
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    if isinstance(v, (list, tuple)):
        return [_json_ready(x) for x in v]
    return v


def write_manifest(path, cmd, cfg, inputs, outputs):
    doc = {
        "command": cmd,
        "version": __version__,
        "config": {k: _json_ready(v) for k, v in sorted(cfg.items()) if k != "manifest"},
        "inputs": {str(p): file_sha256(p) for p in inputs if p},
        "outputs": {str(p): file_sha256(p) for p in outputs if p},
    }
    atomic_write(path, (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode())
    return path


def _emit(rows, out=None):
    out = out or sys.stdout
    for k, v in rows:
        out.write(f"{k}\t{v}\n")


def _load_mask(path, grid):
    if path:
        m = read_mask(path)
        if m.grid != grid:
            raise ConfigError(f"mask {path} grid does not match {grid}")
        return m
    return default_mask(grid)


def _require_file(path, what):
    if not path:
        raise ConfigError(f"missing --{what}")
    if not os.path.isfile(path):
        raise ConfigError(f"{what} not found: {path}")


# --- commands --------------------------------------------------------------------

def cmd_generate(cfg):
    n = cfg["grid_size"]
    try:
        grid = Grid(n, n, cfg["extent"] / n, cfg["extent"] / n, cfg["wavelength"])
        mask = _load_mask(cfg["mask"], grid)
        gen = GenConfig(cfg["samples"], grid=grid, mask=mask, noise_levels=cfg["noise"], master_seed=cfg["seed"])
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    if cfg["chunk"] < 1:
        raise ConfigError("--chunk must be >= 1")
    path = generate_corpus(gen, cfg["out"], threads=cfg["threads"], chunk=cfg["chunk"])
    outputs = [path]
    if cfg["mask_out"]:
        from .fileio import write_mask
        write_mask(cfg["mask_out"], mask)
        outputs.append(cfg["mask_out"])
    digest = file_sha256(path)
    man = write_manifest(cfg["manifest"] or path + ".manifest.json", "generate", cfg, [cfg["mask"]], outputs)
    _emit([("corpus", path), ("sha256", digest), ("records", gen.n_samples * len(gen.noise_levels)),
           ("mask_hash", mask_hash(mask)), ("manifest", man)])


def cmd_train(cfg):
    _require_file(cfg["train"], "train")
    _require_file(cfg["val"], "val")
    try:
        grid = open_corpus(cfg["train"]).grid
        mask = _load_mask(cfg["mask"], grid)
        from .network import Architecture
        tc = TrainConfig(batch_size=cfg["batch_size"], max_epochs=cfg["epochs"], patience=cfg["patience"],
                         learning_rate=cfg["lr"], seed=cfg["seed"], pattern_weight=cfg["pattern_weight"],
                         arch=Architecture(input_shape=grid.shape), train_path=cfg["train"], val_path=cfg["val"],
                         checkpoint_dir=cfg["out"])
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    if open_corpus(cfg["val"]).grid != grid:
        raise ConfigError("training and validation corpora use different grids")
    res = train(tc, mask)
    ckpt = os.path.join(cfg["out"], "best.wnet")
    logp = os.path.join(cfg["out"], "train_log.tsv")
    man = write_manifest(cfg["manifest"] or os.path.join(cfg["out"], "manifest.json"), "train", cfg,
                         [cfg["train"], cfg["val"], cfg["mask"]], [ckpt, logp])
    _emit([("checkpoint", ckpt), ("checkpoint_id", res.params.meta.get("checkpoint_id", "")),
           ("best_epoch", res.best_epoch), ("best_val_loss", repr(res.best_val)),
           ("stopped_epoch", res.stopped_epoch), ("log", logp), ("manifest", man)])


def _load_pattern(cfg):
    if cfg["pattern"] and cfg["corpus"]:
        raise ConfigError("give either --pattern or --corpus, not both")
    if cfg["pattern"]:
        f = read_field(cfg["pattern"])
        if np.any(f.values.imag != 0) or np.any(f.values.real < 0):
            raise ConfigError("pattern file must hold a real non-negative intensity map")
        return f.values.real.copy(), f.grid, cfg["pattern"]
    if cfg["corpus"]:
        c = open_corpus(cfg["corpus"])
        if not 0 <= cfg["index"] < len(c):
            raise ConfigError(f"--index {cfg['index']} out of range for {len(c)} records")
        return np.asarray(c.records[cfg["index"]]["pattern"], dtype=np.float64), c.grid, cfg["corpus"]
    raise ConfigError("need --pattern or --corpus")


def cmd_retrieve(cfg):
    method = cfg["method"]
    if method not in ("neural", "iterative"):
        raise ConfigError(f"unknown method {method!r} (expected neural or iterative)")
    pattern, grid, src = _load_pattern(cfg)
    inputs = [src, cfg["mask"]]
    if method == "neural":
        _require_file(cfg["checkpoint"], "checkpoint")
        params = load_checkpoint(cfg["checkpoint"])
        if tuple(params.arch.input_shape) != pattern.shape:
            raise ConfigError(f"checkpoint expects {params.arch.input_shape} patterns, got {pattern.shape}")
        res = infer(pattern, params, grid, canonicalize=cfg["canonicalize"])
        inputs.append(cfg["checkpoint"])
    else:
        mask = _load_mask(cfg["mask"], grid)
        try:
            ic = IterConfig(support=support_from_mask(mask), n_iterations=cfg["iterations"],
                            algorithm=cfg["algorithm"], hio_beta=cfg["beta"], seed=cfg["seed"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        res, _ = retrieve_iterative(pattern, ic, grid)
        if cfg["canonicalize"]:
            try:
                field = canonicalize_phase(res.field)
            except ValueError as exc:
                raise ConfigError(f"cannot canonicalize the exit wave: {exc}") from None
            res = RetrievalResult(field, res.method, res.wall_time_s, res.iterations, res.checkpoint_id, res.extra)
    write_result(cfg["out"], res)
    man = write_manifest(cfg["manifest"] or cfg["out"] + ".manifest.json", "retrieve", cfg, inputs,
                         [cfg["out"], cfg["out"] + ".txt"])
    _emit([("field", cfg["out"]), ("method", res.method), ("wall_ms", f"{res.wall_time_s * 1e3:.3f}"),
           ("manifest", man)])


def _bench_objects(cfg, mask):
    """Held-out ground-truth objects: from a corpus or freshly generated."""
    if cfg["corpus"]:
        c = open_corpus(cfg["corpus"])
        if c.mask_hash != mask_hash(mask):
            raise ConfigError("held-out corpus was generated with a different mask")
        sel = np.nonzero(np.isinf(np.asarray(c.records["peak"])))[0]
        return [ComplexField(c.grid, np.asarray(c.records[i]["object"], dtype=np.complex128)) for i in sel]
    gen = GenConfig(1, grid=mask.grid, mask=mask, master_seed=cfg["seed"])
    return [generate_object(gen, object_seed(cfg["seed"], i)) for i in range(cfg["samples"])]


def cmd_bench(cfg):
    _require_file(cfg["checkpoint"], "checkpoint")
    params = load_checkpoint(cfg["checkpoint"])
    grid0 = default_mask().grid
    if cfg["corpus"]:
        _require_file(cfg["corpus"], "corpus")
        grid0 = open_corpus(cfg["corpus"]).grid
        if params.meta.get("corpus_hash") == file_sha256(cfg["corpus"]):
            raise ConfigError("held-out corpus is the training corpus of this checkpoint")
    mask = _load_mask(cfg["mask"], grid0)
    want = params.meta.get("mask_hash")
    if want and want != mask_hash(mask):
        raise ConfigError("checkpoint was trained with a different mask")
    if tuple(params.arch.input_shape) != grid0.shape:
        raise ConfigError("checkpoint input size does not match the bench grid")
    if cfg["timing_reps"] < 3:
        raise ConfigError("--timing-reps must be >= 3")
    objects = _bench_objects(cfg, mask)
    if not objects:
        raise ConfigError("no held-out objects")
    ic = IterConfig(support=support_from_mask(mask), n_iterations=cfg["iterations"])

    def neural(p):
        r = infer(p, params, grid0)
        return r.field, "object", r.wall_time_s

    def iterative(p):
        r, _ = retrieve_iterative(p, ic, grid0)
        return r.field, "exit", r.wall_time_s

    out = Path(cfg["out"])
    (out / "examples").mkdir(parents=True, exist_ok=True)
    written = []

    def keep(i, lvl, name, est, truth):
        if i >= cfg["examples"]:
            return
        tag = "inf" if math.isinf(lvl) else f"{lvl:g}"
        saves = [(name, est)] + ([("truth", truth)] if name == "neural" else [])
        for what, v in saves:
            p = out / "examples" / f"sample{i:03d}_peak{tag}_{what}.cfld"
            write_field(p, ComplexField(grid0, v))
            written.append(str(p))

    rows = run_snr_sweep(objects, mask, {"neural": neural, "iterative": iterative}, cfg["levels"],
                         bench_seed=cfg["bench_seed"], on_result=keep)
    public = {k: _json_ready(v) for k, v in cfg.items() if k not in ("threads", "manifest")}
    table = out / "bench.tsv"
    atomic_write(table, format_bench_table(rows, public).encode())
    written.append(str(table))
    for name, text in curve_files(rows, public).items():
        atomic_write(out / name, text.encode())
        written.append(str(out / name))

    probe = forward_pattern(objects[0], mask)
    with threadpool_limits(1):
        t_nn, s_nn = time_retrieval(probe, lambda p: infer(p, params, grid0), cfg["timing_reps"])
        t_it, s_it = time_retrieval(probe, lambda p: retrieve_iterative(p, ic, grid0), cfg["timing_reps"])
    timing = ["# single-thread wall time per pattern, median after one warm-up call",
              "# method\tmedian_ms\tsamples_ms",
              f"neural\t{t_nn:.6f}\t{','.join(f'{v:.6f}' for v in s_nn)}",
              f"iterative\t{t_it:.6f}\t{','.join(f'{v:.6f}' for v in s_it)}",
              f"# speedup\t{t_it / t_nn:.3f}"]
    atomic_write(out / "timing.tsv", ("\n".join(timing) + "\n").encode())
    written.append(str(out / "timing.tsv"))
    man = write_manifest(cfg["manifest"] or str(out / "manifest.json"), "bench", cfg,
                         [cfg["checkpoint"], cfg["corpus"], cfg["mask"]], written)
    sys.stdout.write(format_bench_table(rows, public))
    _emit([("# neural_median_ms", f"{t_nn:.3f}"), ("# iterative_median_ms", f"{t_it:.3f}"),
           ("# manifest", man)])


def cmd_propagate(cfg):
    if (cfg["input"] is None) == (cfg["pinhole"] is None):
        raise ConfigError("give exactly one of --input or --pinhole")
    if cfg["input"]:
        if not os.path.exists(cfg["input"]):
            raise FileNotFoundError(2, "No such file", cfg["input"])
        field = read_field(cfg["input"])
    else:
        field = simulate_pinhole(cfg["pinhole"])
        if cfg["pinhole_distance"]:
            field = angular_spectrum_propagate(field, cfg["pinhole_distance"])
    z = cfg["z"]
    if not math.isfinite(z):
        raise ConfigError("--z must be finite")
    out_field = angular_spectrum_propagate(field, z) if z else field
    write_field(cfg["out"], out_field)
    rows = [("field", cfg["out"]), ("z", repr(z))]
    passed = True
    if cfg["expect_diameter"] is not None:
        tol = cfg["tolerance_px"] * out_field.grid.dx
        # the output already sits at the target plane; measure it there
        chk = backprop_diameter_check(out_field, 0.0, cfg["expect_diameter"], tol)
        passed = chk.passed
        rows += [("measured_diameter", repr(float(chk.measured))), ("expected_diameter", repr(chk.expected)),
                 ("tolerance", repr(tol)), ("pass", "true" if passed else "false")]
    man = write_manifest(cfg["manifest"] or cfg["out"] + ".manifest.json", "propagate", cfg,
                         [cfg["input"]], [cfg["out"]])
    rows.append(("manifest", man))
    _emit(rows)
    return EXIT_OK if passed else EXIT_NUMERIC


def _describe(path):
    magic, version = read_magic(path)
    rows = [("path", path), ("magic", magic.decode("ascii", "replace")), ("version", version),
            ("size", os.path.getsize(path))]
    if magic == b"WDS1":
        c = open_corpus(path)
        peaks = np.asarray(c.records["peak"]) if len(c) else np.zeros(0)
        rows += [("grid", _grid_text(c.grid)), ("records", len(c)), ("noise_levels", c.n_levels),
                 ("mask_hash", c.mask_hash),
                 ("peak_counts", " ".join(sorted({repr(float(v)) for v in peaks}, key=float)))]
    elif magic == b"CFLD":
        f = read_field(path)
        rows += [("grid", _grid_text(f.grid)), ("norm", repr(float(f.norm()))),
                 ("max_abs", repr(float(np.abs(f.values).max())))]
    elif magic == b"MASK":
        m = read_mask(path)
        rows += [("grid", _grid_text(m.grid)), ("n_slices", m.n_slices), ("dz", repr(m.dz)),
                 ("open_fraction", repr(m.open_fraction)), ("mask_hash", mask_hash(m))]
    elif magic == b"WNET":
        p = load_checkpoint(path)
        rows += [("architecture", p.arch.descriptor()), ("input_shape", "x".join(map(str, p.arch.input_shape))),
                 ("n_params", p.n_params), ("kappa", repr(p.kappa)), ("label_scale", repr(p.label_scale))]
        rows += [(f"meta.{k}", json.dumps(v) if isinstance(v, (list, dict)) else v) for k, v in sorted(p.meta.items())]
    else:
        raise FormatError(f"{path}: unrecognized magic {magic!r} at byte 0")
    return rows


def _grid_text(g):
    return f"{g.nx}x{g.ny} dx={g.dx!r} dy={g.dy!r} wavelength={g.wavelength!r}"


def cmd_inspect(path):
    if not os.path.exists(path):
        raise FileNotFoundError(2, "No such file", path)
    _emit(_describe(path))


COMMANDS = {"generate": cmd_generate, "train": cmd_train, "retrieve": cmd_retrieve,
            "bench": cmd_bench, "propagate": cmd_propagate}


def _attach_negative_numbers(argv):
    """Turn ``--z -5e-4`` into ``--z=-5e-4``; argparse misreads exponent forms as flags."""
    out = []
    for tok in argv:
        if out and out[-1].startswith("--") and "=" not in out[-1] and tok.startswith("-"):
            try:
                float(tok)
            except ValueError:
                pass
            else:
                out[-1] = f"{out[-1]}={tok}"
                continue
        out.append(tok)
    return out


def main(argv=None):
    parser = build_parser()
    argv = _attach_negative_numbers(sys.argv[1:] if argv is None else list(argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s", stream=sys.stderr)
    t0 = time.perf_counter()
    try:
        if args.command == "inspect":
            cmd_inspect(args.path)
            return EXIT_OK
        cfg = resolve(args.command, args)
        with threadpool_limits(cfg["threads"]):
            code = COMMANDS[args.command](cfg)
        log.info("%s finished in %.2fs", args.command, time.perf_counter() - t0)
        return code or EXIT_OK
    except ConfigError as exc:
        print(f"maskwfs {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FormatError as exc:
        print(f"maskwfs {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (TrainingAborted, ArithmeticError) as exc:
        print(f"maskwfs {args.command}: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"maskwfs {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, TypeError) as exc:
        print(f"maskwfs {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
