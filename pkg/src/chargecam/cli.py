"""Command-line front end.

Subcommands cover the full pipeline: dataset generation (`gen`), array
image construction (`store`), single-read search (`search`), strategy
evaluation (`eval`), Monte Carlo variance sweeps (`sweep`), closed-form
analyses (`analyze`), exact distance oracles (`oracle`), and report
plotting (`plot`).

Contract: logs go to stderr, data to stdout or files; exit code 0 on
success, 1 on internal error, 2 on usage error, 3 on malformed data.
"""

from __future__ import annotations

import argparse
import logging
import sys
import traceback
from pathlib import Path

import numpy as np

from .array_model import (
    ArrayImage,
    ImageFormatError,
    MatchMode,
    NoiseModel,
    distinguishable_states,
    energy_joules,
    frozen_caps,
    ml_variance,
    row_mismatch_count,
    search,
)
from .config import ConfigError, RunConfig, apply_values, build_config
from .evaluation import (
    STRATEGIES,
    EvalReport,
    evaluate,
    run_condition,
    store_from_image,
    sweep_noise,
    sweep_to_csv,
)
from .genome import (
    DatasetFormatError,
    ErrorProfile,
    FastaError,
    TailExhaustedError,
    extract_reads,
    load_fasta,
    load_reads,
    segment_reference,
    synthesize_genome,
    write_fasta,
    write_reads,
)
from .oracles import edit_distance, edit_distance_capped, hamming

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_DATA = 3

DATA_ERRORS = (FastaError, DatasetFormatError, ImageFormatError, TailExhaustedError)

log = logging.getLogger("chargecam")


class UsageError(ValueError):
    """Bad flag combinations or values; maps to exit code 2."""


def _parse_int_list(text: str) -> list[int]:
    """'1,2,3' or '1..6' (inclusive) -> list of ints."""
    text = text.strip()
    if ".." in text:
        lo_s, _, hi_s = text.partition("..")
        lo, hi = int(lo_s), int(hi_s)
        if hi < lo:
            raise UsageError(f"empty range {text!r}")
        return list(range(lo, hi + 1))
    return [int(t) for t in text.split(",") if t.strip()]


def _parse_float_list(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _overrides(args: argparse.Namespace, mapping: dict[str, str]) -> dict[str, str]:
    """Collect `--flag value` pairs the user actually set, as config keys."""
    values: dict[str, str] = {}
    for attr, key in mapping.items():
        value = getattr(args, attr, None)
        if value is not None:
            values[key] = str(value)
    return values


_COMMON_MAP = {
    "seed": "run.seed",
    "condition": "run.condition",
    "noise": "noise.mode",
    "sigma_over_mu": "noise.sigma_over_mu",
    "resample": "noise.resample",
    "cells": "array.cells",
    "rows": "array.rows",
    "vdd": "array.vdd",
    "reads": "dataset.reads",
    "segments": "dataset.segments",
    "read_length": "dataset.read_length",
    "alpha": "hdac.alpha",
    "beta": "hdac.beta",
    "disable_threshold": "hdac.disable_threshold",
    "rotations": "tasr.n_rotations",
    "gamma": "tasr.gamma",
    "direction": "tasr.direction",
}


def _config_from(args: argparse.Namespace) -> RunConfig:
    overrides = _overrides(args, _COMMON_MAP)
    extra = getattr(args, "set", None) or []
    pairs: dict[str, str] = {}
    for item in extra:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--set expects key=value, got {item!r}")
        pairs[key.strip()] = value.strip()
    cfg = build_config(getattr(args, "config", None), pairs)
    apply_values(cfg, overrides, source="<cli>")
    if getattr(args, "unaligned", False):
        cfg.dataset_aligned = False
    if getattr(args, "no_hdac", False):
        cfg.hdac_enabled = False
    return cfg


def _profile_label(cfg: RunConfig) -> str:
    """Condition name when the rates are untouched, else 'custom'."""
    if cfg.errors_e_s is None and cfg.errors_e_i is None and cfg.errors_e_d is None:
        return cfg.run_condition
    return "custom"


# --- subcommands -----------------------------------------------------------


def _load_reference(cfg: RunConfig, args: argparse.Namespace) -> str:
    if getattr(args, "synth", None) is not None and getattr(args, "fasta", None):
        raise UsageError("give either --synth or --fasta, not both")
    if getattr(args, "synth", None) is not None:
        if args.synth <= 0:
            raise UsageError("--synth length must be positive")
        return synthesize_genome(args.synth, cfg.run_seed)
    if getattr(args, "fasta", None):
        result = load_fasta(args.fasta)
        if result.dropped:
            log.info("dropped %d non-ACGT bases from %s", result.dropped, args.fasta)
        return result.sequence
    raise UsageError("one of --synth or --fasta is required")


def cmd_gen(args: argparse.Namespace) -> int:
    cfg = _config_from(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    reference = _load_reference(cfg, args)
    store = segment_reference(reference, cfg.dataset_read_length)
    profile = cfg.error_profile()
    records = extract_reads(
        store,
        cfg.dataset_reads,
        cfg.dataset_read_length,
        profile,
        cfg.run_seed,
        aligned=cfg.dataset_aligned,
    )
    image = ArrayImage.from_store(
        store,
        cfg.array_config(),
        cfg.noise_model(),
        mode=MatchMode.ED_STAR,
        caps_seed=cfg.run_seed,
    )

    write_fasta(out_dir / "reference.fa", reference)
    image.save(out_dir / "image.txt")
    metadata = {
        "condition": _profile_label(cfg),
        "e_s": repr(profile.e_s),
        "e_i": repr(profile.e_i),
        "e_d": repr(profile.e_d),
        "seed": str(cfg.run_seed),
        "read_length": str(cfg.dataset_read_length),
        "aligned": str(cfg.dataset_aligned),
        "count": str(len(records)),
        "config_hash": cfg.config_hash(),
    }
    write_reads(out_dir / "reads.tsv", records, metadata)
    (out_dir / "run.meta").write_text(
        cfg.canonical_text() + f"config_hash = {cfg.config_hash()}\n"
    )

    kinds = {"sub": 0, "ins": 0, "del": 0}
    for rec in records:
        for edit in rec.edit_ledger:
            kinds[edit.kind] += 1
    print(f"segments\t{store.row_count}")
    print(f"reads\t{len(records)}")
    for kind in ("sub", "ins", "del"):
        print(f"edits.{kind}\t{kinds[kind]}")
    log.info("wrote %s, %s, %s", out_dir / "reference.fa", out_dir / "image.txt", out_dir / "reads.tsv")
    return EXIT_OK


def cmd_store(args: argparse.Namespace) -> int:
    cfg = _config_from(args)
    reference = _load_reference(cfg, args)
    store = segment_reference(reference, cfg.array_cells)
    image = ArrayImage.from_store(
        store,
        cfg.array_config(),
        cfg.noise_model(),
        mode=MatchMode.parse(args.mode),
        caps_seed=cfg.run_seed,
    )
    image.save(args.out)
    log.info("stored %d rows of %d cells to %s", image.row_count, image.config.cells, args.out)
    return EXIT_OK


def cmd_search(args: argparse.Namespace) -> int:
    image = ArrayImage.load(args.image)
    if (args.read is None) == (args.reads_file is None):
        raise UsageError("give exactly one of --read or --reads-file")
    if args.read is not None:
        read = args.read.upper()
    else:
        records, _ = load_reads(args.reads_file)
        matching = [r for r in records if r.read_id == args.read_id]
        if not matching:
            raise DatasetFormatError(f"read id {args.read_id} not found in {args.reads_file}")
        read = matching[0].read
    noise = None
    if args.noise is not None:
        noise = NoiseModel(
            mu_c=image.noise.mu_c,
            sigma_over_mu=image.noise.sigma_over_mu,
            mode=args.noise,
            resample=image.noise.resample,
        )
    mode = MatchMode.parse(args.mode) if args.mode else None
    outcomes = search(
        image, read, args.threshold, mode=mode, noise=noise,
        seed=args.seed if args.seed is not None else 0,
    )
    print("row\tn_mis\tv_ml\tmatch")
    shown = 0
    for o in outcomes:
        if o.decision or args.all:
            print(f"{o.row}\t{o.n_mis}\t{o.v_ml:.6f}\t{int(o.decision)}")
            shown += 1
    log.info("%d of %d rows matched at T=%d", sum(o.decision for o in outcomes), len(outcomes), args.threshold)
    return EXIT_OK


def _write_report(report: EvalReport, cfg: RunConfig, out: str | None) -> None:
    text = report.to_csv()
    if out is None:
        sys.stdout.write(text)
        return
    Path(out).write_text(text)
    Path(out + ".meta").write_text(
        cfg.canonical_text() + f"config_hash = {cfg.config_hash()}\n"
    )
    log.info("wrote %s (%d rows)", out, len(report.rows))


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = _config_from(args)
    strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
    unknown = [s for s in strategies if s not in STRATEGIES]
    if unknown:
        raise UsageError(f"unknown strategies {unknown}; valid: {', '.join(STRATEGIES)}")
    thresholds = _parse_int_list(args.thresholds)
    if not thresholds or any(t < 0 for t in thresholds):
        raise UsageError("--thresholds must be a non-empty list of T >= 0")
    noise = cfg.noise_model()

    if args.dataset:
        dataset = Path(args.dataset)
        image = ArrayImage.load(dataset / "image.txt")
        records, meta = load_reads(dataset / "reads.tsv")
        try:
            profile = ErrorProfile(
                e_s=float(meta["e_s"]), e_i=float(meta["e_i"]), e_d=float(meta["e_d"])
            )
        except KeyError as exc:
            raise DatasetFormatError(
                f"{dataset / 'reads.tsv'}: metadata missing key {exc}"
            ) from None
        condition = meta.get("condition", "custom")
        store = store_from_image(image)
        caps = frozen_caps(noise, image.config, image.row_count, image.caps_seed)
        report = evaluate(
            store, records, profile, condition, thresholds, strategies,
            noise=noise, seed=cfg.run_seed, config=image.config,
            hdac_params=cfg.hdac_params(), tasr_params=cfg.tasr_params(),
            config_hash=cfg.config_hash(), read_chunk=args.read_chunk,
            frozen_caps=caps,
        )
    else:
        report = run_condition(
            _profile_label(cfg), thresholds, strategies,
            noise=noise, seed=cfg.run_seed,
            n_segments=cfg.dataset_segments, n_reads=cfg.dataset_reads,
            read_length=cfg.dataset_read_length,
            hdac_params=cfg.hdac_params(), tasr_params=cfg.tasr_params(),
            config_hash=cfg.config_hash(), read_chunk=args.read_chunk,
            profile=cfg.error_profile(),
        )
    _write_report(report, cfg, args.out)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    sigmas = _parse_float_list(args.sigma)
    n_mis_points = _parse_int_list(args.nmis)
    if args.trials < 1000:
        raise UsageError("--trials must be >= 1000")
    cfg = _config_from(args)
    rows = sweep_noise(
        sigmas, n_mis_points, args.trials, seed=cfg.run_seed, config=cfg.array_config()
    )
    text = sweep_to_csv(rows)
    if args.out is None:
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)
        log.info("wrote %s (%d points)", args.out, len(rows))
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace) -> int:
    cfg = _config_from(args)
    config = cfg.array_config()
    if args.kind == "states":
        if args.sigma is None:
            raise UsageError("analyze states requires --sigma")
        count = distinguishable_states(float(args.sigma))
        print("unbounded" if count == float("inf") else int(count))
        return EXIT_OK
    if args.kind == "variance":
        if args.sigma is None or args.nmis is None:
            raise UsageError("analyze variance requires --sigma and --nmis")
        print("sigma_over_mu,n_mis,N,var_eq2")
        for sigma in _parse_float_list(args.sigma):
            noise = NoiseModel(sigma_over_mu=sigma) if sigma > 0 else NoiseModel.ideal()
            for n_mis in _parse_int_list(args.nmis):
                var = ml_variance(n_mis, config, noise)
                print(f"{sigma!r},{n_mis},{config.cells},{var!r}")
        return EXIT_OK
    if args.kind == "energy":
        if args.nmis is None:
            raise UsageError("analyze energy requires --nmis")
        noise = cfg.noise_model()
        print("n_mis,N,joules_per_row,joules_per_array")
        for n_mis in _parse_int_list(args.nmis):
            if not 0 <= n_mis <= config.cells:
                raise UsageError(f"--nmis values must be in [0, {config.cells}]")
            e = energy_joules(n_mis, config.cells, noise.mu_c, config.vdd)
            print(f"{n_mis},{config.cells},{e!r},{e * config.rows!r}")
        return EXIT_OK
    raise UsageError(f"unknown analyze kind {args.kind!r}")


def cmd_oracle(args: argparse.Namespace) -> int:
    a, b = args.a.upper(), args.b.upper()
    if args.metric == "ed":
        value = edit_distance(a, b) if args.cap is None else edit_distance_capped(a, b, args.cap)
    elif args.metric == "hd":
        value = hamming(a, b)
    elif args.metric == "edstar":
        value = row_mismatch_count(a, b, MatchMode.ED_STAR)
    else:
        raise UsageError(f"unknown metric {args.metric!r}")
    print(value)
    return EXIT_OK


def cmd_plot(args: argparse.Namespace) -> int:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = Path(args.report)
    lines = path.read_text().splitlines()
    if not lines:
        raise DatasetFormatError(f"{path}: empty report")
    header = lines[0].split(",")
    try:
        col = {name: k for k, name in enumerate(header)}
        t_i, f1_i, strat_i, cond_i = col["T"], col["f1"], col["strategy"], col["condition"]
    except KeyError as exc:
        raise DatasetFormatError(f"{path}: missing report column {exc}") from None
    series: dict[str, list[tuple[int, float]]] = {}
    condition = ""
    for line in lines[1:]:
        if not line.strip():
            continue
        parts = line.split(",")
        f1 = float(parts[f1_i])
        condition = parts[cond_i]
        if not np.isnan(f1):
            series.setdefault(parts[strat_i], []).append((int(parts[t_i]), f1))
    if not series:
        raise DatasetFormatError(f"{path}: no plottable rows")
    fig, ax = plt.subplots(figsize=(6, 4))
    for strategy in sorted(series):
        pts = sorted(series[strategy])
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=strategy)
    ax.set_xlabel("threshold T")
    ax.set_ylabel("F1")
    ax.set_title(f"F1 vs threshold (condition {condition})")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.out, format="svg")
    log.info("wrote %s", args.out)
    return EXIT_OK


# --- parser wiring ---------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="config file (section.key = value lines)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override any config key; repeatable")
    p.add_argument("--seed", type=int, help="master RNG seed")


def _add_noise_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--noise", choices=["ideal", "gaussian_formula", "montecarlo_caps"],
                   help="matchline noise mode")
    p.add_argument("--sigma-over-mu", type=float, dest="sigma_over_mu",
                   help="relative capacitor mismatch")
    p.add_argument("--resample", choices=["per_array_instance", "per_trial"],
                   help="capacitor resampling policy")


def _add_strategy_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, help="hdac exponent weight on e_id")
    p.add_argument("--beta", type=float, help="hdac exponent weight on T")
    p.add_argument("--disable-threshold", type=float, dest="disable_threshold",
                   help="hdac probability floor")
    p.add_argument("--no-hdac", action="store_true", help="force hdac off")
    p.add_argument("--rotations", type=int, help="tasr rotation budget")
    p.add_argument("--gamma", type=float, help="tasr trigger coefficient")
    p.add_argument("--direction", choices=["left", "right", "both"],
                   help="tasr rotation direction")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chargecam",
        description="Behavioral simulator for a charge-domain CAM string matcher.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="synthesize or ingest a reference and generate reads")
    _add_common(p)
    _add_noise_flags(p)
    p.add_argument("--synth", type=int, help="synthesize a reference of this many bases")
    p.add_argument("--fasta", help="load the reference from a FASTA file")
    p.add_argument("--reads", type=int, help="number of reads to extract")
    p.add_argument("--read-length", type=int, dest="read_length", help="read/segment length")
    p.add_argument("--condition", choices=["A", "B"], help="named error condition")
    p.add_argument("--unaligned", action="store_true",
                   help="sample read starts uniformly instead of row-aligned")
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("store", help="build an array image from a reference")
    _add_common(p)
    _add_noise_flags(p)
    p.add_argument("--synth", type=int)
    p.add_argument("--fasta")
    p.add_argument("--cells", type=int, help="cells per row")
    p.add_argument("--rows", type=int, help="rows per array")
    p.add_argument("--vdd", type=float)
    p.add_argument("--mode", default="ed_star", choices=["ed_star", "hd"])
    p.add_argument("--out", required=True, help="image file path")
    p.set_defaults(func=cmd_store)

    p = sub.add_parser("search", help="search one read against an array image")
    p.add_argument("--image", required=True)
    p.add_argument("--read", help="literal read sequence")
    p.add_argument("--reads-file", dest="reads_file", help="reads file from gen")
    p.add_argument("--read-id", type=int, dest="read_id", default=0)
    p.add_argument("-T", "--threshold", type=int, required=True)
    p.add_argument("--mode", choices=["ed_star", "hd"])
    p.add_argument("--noise", choices=["ideal", "gaussian_formula", "montecarlo_caps"])
    p.add_argument("--seed", type=int)
    p.add_argument("--all", action="store_true", help="print every row, not just matches")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("eval", help="run strategies over thresholds and report F1")
    _add_common(p)
    _add_noise_flags(p)
    _add_strategy_flags(p)
    p.add_argument("--dataset", help="directory produced by gen (image.txt + reads.tsv)")
    p.add_argument("--condition", choices=["A", "B"], help="error condition for on-the-fly data")
    p.add_argument("--strategies", default="plain_ed_star",
                   help=f"comma list from: {', '.join(STRATEGIES)}")
    p.add_argument("--thresholds", default="1..10", help="comma list or lo..hi range")
    p.add_argument("--segments", type=int, help="segment count for on-the-fly data")
    p.add_argument("--reads", type=int, help="read count for on-the-fly data")
    p.add_argument("--read-length", type=int, dest="read_length")
    p.add_argument("--read-chunk", type=int, dest="read_chunk", default=64,
                   help="reads per vectorized block (result-invariant)")
    p.add_argument("--out", help="report CSV path (stdout when omitted)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="Monte Carlo matchline-variance sweep")
    _add_common(p)
    p.add_argument("--sigma", required=True, help="comma list of sigma/mu ratios")
    p.add_argument("--nmis", required=True, help="comma list or lo..hi of mismatch counts")
    p.add_argument("--trials", type=int, default=100000)
    p.add_argument("--out", help="CSV path (stdout when omitted)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("analyze", help="closed-form analyses")
    _add_common(p)
    p.add_argument("kind", choices=["states", "variance", "energy"])
    p.add_argument("--sigma", help="sigma/mu ratio(s)")
    p.add_argument("--nmis", help="mismatch count(s)")
    p.add_argument("--cells", type=int, help="cells per row")
    p.add_argument("--vdd", type=float)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("oracle", help="exact distance oracles")
    p.add_argument("metric", choices=["ed", "hd", "edstar"])
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--cap", type=int, help="band cap for ed (returns min(ed, cap+1))")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("plot", help="render a report CSV to SVG")
    p.add_argument("--report", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:  # argparse usage errors already print to stderr
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
