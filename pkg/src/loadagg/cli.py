"""``loadagg`` command-line front end.

Every subcommand writes its artifacts into a staging directory that is
moved into ``--out`` only on success, then writes
``manifest_<command>.json`` (config echo, status, artifact SHA-256s)
whether or not it succeeded.

Exit codes: 0 ok, 2 config error, 3 input error, 4 runtime failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import shutil
import sys
from pathlib import Path

import numpy as np

from . import __version__, _kernels
from .aggregation import build_aggregates, class_members, level_schedule, write_aggregates
from .config import ConfigInvalid, RunConfig
from .core import SLOTS_PER_DAY, LoadAggError, LoadClass
from .experiment import (aec_svgs, diff_svg, evaluate_series, run_aec, run_diff_comparison,
                         svg_lines, write_aec, write_cells, write_diff)
from .ingest import (ParseStats, assemble_meters, clean, classify, apply_classes, expand_inputs,
                     file_sha256, load_corpus, read_class_file, read_readings,
                     write_cleaned_corpus)
from .models import save
from .predictability import predictability_curve, summarize, write_curve
from .synth import generate, spiky_meters, write_corpus

log = logging.getLogger("loadagg")

EXIT_OK, EXIT_CONFIG, EXIT_INPUT, EXIT_RUNTIME = 0, 2, 3, 4
FORECAST_HEADER = ("class", "level", "group", "family", "horizon", "nmae", "mae", "rmse",
                   "mape_safe", "mape_skipped", "n_points", "best_params_json")
COMMANDS = ("synth", "ingest", "clean", "aggregate", "apen", "forecast", "aec", "diffcmp")


class InputMissing(LoadAggError):
    pass


class InputInvalid(LoadAggError):
    pass


# ---------------------------------------------------------------- helpers

def _corpus(cfg: RunConfig) -> dict:
    """Meters from ``cfg.input``, or the configured synthetic corpus."""
    if cfg.input is None:
        return generate(cfg.synth_spec()).meters
    path = Path(cfg.input)
    if not path.exists() and not expand_inputs(cfg.input):
        raise InputMissing(f"input not found: {cfg.input}")
    window = tuple(cfg.window) if cfg.window else None
    try:
        return load_corpus(path, window, cfg.zero_day_limit)
    except FileNotFoundError as exc:
        raise InputMissing(str(exc)) from None
    except (ValueError, LoadAggError) as exc:
        raise InputInvalid(f"{cfg.input}: {exc}") from None


def _raw_files(cfg: RunConfig) -> list[Path]:
    if cfg.input is None:
        raise InputMissing("this command needs an input (set \"input\" or pass --input)")
    files = expand_inputs(cfg.input)
    if not files:
        raise InputMissing(f"no reading files at {cfg.input}")
    return files


def _class_file(cfg: RunConfig) -> Path | None:
    p = Path(cfg.input)
    cand = (p if p.is_dir() else p.parent) / "classes.csv"
    return cand if cand.exists() else None


def _write_json(path: Path, obj) -> Path:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def _write_text(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8")
    return path


def _assemble(cfg: RunConfig):
    stats = ParseStats()
    files = _raw_files(cfg)
    try:
        asm = assemble_meters(read_readings(files, strict=False, stats=stats),
                              tuple(cfg.window) if cfg.window else None)
    except (ValueError, LoadAggError) as exc:
        raise InputInvalid(str(exc)) from None
    return files, stats, asm


# ---------------------------------------------------------------- commands

def cmd_synth(cfg: RunConfig, stage: Path) -> list[Path]:
    return write_corpus(generate(cfg.synth_spec()), stage)


def cmd_ingest(cfg: RunConfig, stage: Path) -> list[Path]:
    files, stats, asm = _assemble(cfg)
    rows = [(mid, s.start.day, s.start.slot, s.values.shape[0], s.gaps)
            for mid, s in sorted(asm.meters.items())]
    report = {"files": [str(f) for f in files], "lines": stats.lines, "skipped": stats.skipped,
              "errors": stats.errors, "readings": asm.readings, "duplicates": asm.duplicates,
              "out_of_window": asm.out_of_window, "window": list(asm.window) if asm.window else None,
              "meters": len(asm.meters)}
    return [_write_json(stage / "ingest_report.json", report),
            _write_csv(stage / "ingest_meters.csv",
                       ("meter_id", "start_day", "start_slot", "n_slots", "gaps"), rows)]


def cmd_clean(cfg: RunConfig, stage: Path) -> list[Path]:
    _, _, asm = _assemble(cfg)
    kept, report = clean(asm.meters, asm.window, cfg.zero_day_limit)
    cf = _class_file(cfg)
    if cf is not None:
        try:
            kept = apply_classes(kept, classify(read_class_file(cf), kept))
        except LoadAggError as exc:
            raise InputInvalid(str(exc)) from None
    out = write_cleaned_corpus(stage, kept)
    out.append(_write_text(stage / "cleaning_report.json", report.to_json()))
    return out


def _class_aggregates(cfg: RunConfig, corpus: dict):
    for cls in cfg.load_classes:
        members = class_members(corpus, cls)
        if not members:
            log.info("no %s meters; skipping", cls.value)
            continue
        levels = level_schedule(cls, len(members), cfg.levels_for(cls) or None)
        yield cls, build_aggregates(corpus, cls, levels, cfg.s_groups, cfg.root_seed)


def cmd_aggregate(cfg: RunConfig, stage: Path) -> list[Path]:
    corpus = _corpus(cfg)
    return [write_aggregates(stage / f"aggregates_{cls.value}.csv", aggs)
            for cls, aggs in _class_aggregates(cfg, corpus)]


def cmd_apen(cfg: RunConfig, stage: Path) -> list[Path]:
    corpus = _corpus(cfg)
    records = []
    for _, aggs in _class_aggregates(cfg, corpus):
        records += predictability_curve(aggs, cfg.apen_params, cfg.apen.window)
    out = [write_curve(stage / "apen_curve.csv", records)]
    summary = [{"class": c, "level": lvl, "mean": m, "std": s, "n": n}
               for (c, lvl), (m, s, n) in summarize(records).items()]
    out.append(_write_json(stage / "apen_summary.json", summary))
    series = {}
    for (c, lvl), (m, _, _) in summarize(records).items():
        series.setdefault(c, []).append((lvl, m))
    if series:
        out.append(_write_text(stage / "apen_curve.svg",
                               svg_lines(series, "ApEn vs aggregation level", "aggregation level",
                                         "ApEn", log_x=True)))
    return out


def cmd_forecast(cfg: RunConfig, stage: Path) -> list[Path]:
    """Tune and test every configured family on one aggregate per class."""
    corpus = _corpus(cfg)
    out = []
    metrics_rows = []
    model_dir = stage / "models"
    model_dir.mkdir()
    for cls in cfg.load_classes:
        members = class_members(corpus, cls)
        if not members:
            continue
        level = min(cfg.forecast.level, len(members))
        agg = build_aggregates(corpus, cls, [level], cfg.forecast.group + 1,
                               cfg.root_seed)[cfg.forecast.group]
        for fam in cfg.families:
            grid = cfg.grid_for(fam)
            for h in cfg.horizon_steps:
                wd = cfg.epoch_weekday if cfg.weekday_mode and cls is LoadClass.SME else None
                ev = evaluate_series(agg, fam, h, grid, cfg.root_seed, cfg.n_lags, cfg.split_spec,
                                     cfg.target_mode, wd)
                m, res, pred = ev.metrics, ev.search, ev.predicted
                actual, test = ev.test.level_targets, ev.test
                tag = f"{cls.value}_{fam}_{h}step"
                days, slots = np.divmod(test.target_times, SLOTS_PER_DAY)
                out.append(_write_csv(stage / f"forecast_{tag}.csv",
                                      ("day", "slot", "actual", "predicted"),
                                      zip(days.tolist(), (slots + 1).tolist(),
                                          map(repr, actual.tolist()), map(repr, pred.tolist()))))
                out.append(save(res.model, model_dir / f"{tag}.npz"))
                params = {k: getattr(res.best.params, k) for k, _ in grid.axes}
                metrics_rows.append((cls.value, level, cfg.forecast.group, fam, h, repr(m.nmae),
                                     repr(m.mae), repr(m.rmse), repr(m.mape_safe), m.mape_skipped,
                                     m.n_points, json.dumps(params, sort_keys=True,
                                                            separators=(",", ":"))))
    out.insert(0, _write_csv(stage / "forecast_metrics.csv", FORECAST_HEADER, metrics_rows))
    return out


def cmd_aec(cfg: RunConfig, stage: Path) -> list[Path]:
    corpus = _corpus(cfg)
    levels = {}
    for cls in cfg.aec_load_classes:
        n = len(class_members(corpus, cls))
        if n:
            levels[cls] = level_schedule(cls, n, cfg.levels_for(cls) or None)
    grids = {f: cfg.grid_for(f) for f in cfg.families}
    res = run_aec(corpus, list(levels), levels, cfg.families, cfg.horizon_steps, cfg.split_spec,
                  cfg.s_groups, cfg.root_seed, cfg.target_mode, cfg.n_lags, grids, cfg.threads,
                  cfg.epoch_weekday if cfg.weekday_mode else None)
    out = [write_aec(stage / "aec.csv", res.records), write_cells(stage / "aec_cells.csv", res.cells)]
    for stem, svg in aec_svgs(res.records).items():
        out.append(_write_text(stage / f"{stem}.svg", svg))
    failed = [c for c in res.cells if c.error]
    if failed and len(failed) == len(res.cells):
        raise LoadAggError(f"all {len(failed)} AEC cells failed; first: {failed[0].error}")
    return out


def cmd_diffcmp(cfg: RunConfig, stage: Path) -> list[Path]:
    d = cfg.diffcmp
    if d.source == "spiky":
        meters = spiky_meters(d.n_meters, d.n_days, cfg.root_seed)
    else:
        res = class_members(_corpus(cfg), LoadClass.RESIDENTIAL)
        meters = [res[m] for m in sorted(res)[:d.n_meters]]
        if len(meters) < d.n_meters:
            raise InputInvalid(f"only {len(meters)} residential meters, need {d.n_meters}")
    pairs = run_diff_comparison(meters, d.family, d.horizon, cfg.root_seed, cfg.grid_for(d.family),
                                cfg.n_lags, cfg.split_spec)
    wins = sum(p.nmae_diff < p.nmae_raw for p in pairs)
    return [write_diff(stage / "diffcmp.csv", pairs),
            _write_text(stage / "diffcmp.svg", diff_svg(pairs)),
            _write_json(stage / "diffcmp_summary.json", {"meters": len(pairs), "diff_wins": wins})]


HANDLERS = {"synth": cmd_synth, "ingest": cmd_ingest, "clean": cmd_clean,
            "aggregate": cmd_aggregate, "apen": cmd_apen, "forecast": cmd_forecast,
            "aec": cmd_aec, "diffcmp": cmd_diffcmp}


# ---------------------------------------------------------------- driver

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="loadagg", description="Load forecasting across aggregation levels.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", metavar="PATH", help="JSON run configuration")
    p.add_argument("--out", metavar="DIR", help="output directory (config: out_dir)")
    p.add_argument("--input", metavar="PATH", help="corpus file, directory or glob (config: input)")
    p.add_argument("--seed", type=int, metavar="N", help="root seed (config: root_seed)")
    p.add_argument("--threads", type=int, metavar="N", help="worker threads, 0 = one per CPU")
    p.add_argument("--quiet", action="store_true", help="only log errors")
    return p


def _config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    overrides = {}
    if args.out is not None:
        overrides["out_dir"] = args.out
    if args.input is not None:
        overrides["input"] = args.input
    if args.seed is not None:
        overrides["root_seed"] = args.seed
    if args.threads is not None:
        overrides["threads"] = args.threads
    return cfg.replace(**overrides) if overrides else cfg


def run_command(command: str, cfg: RunConfig) -> int:
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stage = out_dir / f".staging-{command}"
    shutil.rmtree(stage, ignore_errors=True)
    stage.mkdir()
    status, code, error, artifacts = "ok", EXIT_OK, None, {}
    try:
        written = HANDLERS[command](cfg, stage)
        for p in written:
            rel = Path(p).relative_to(stage)
            dest = out_dir / rel
            dest.parent.mkdir(parents=True, exist_ok=True)
            os.replace(p, dest)
            artifacts[rel.as_posix()] = file_sha256(dest)
    except (InputMissing, InputInvalid) as exc:
        status, code, error = "input_error", EXIT_INPUT, str(exc)
    except ConfigInvalid as exc:
        status, code, error = "config_error", EXIT_CONFIG, str(exc)
    except Exception as exc:  # noqa: BLE001 - surfaced through exit code and manifest
        log.debug("runtime failure", exc_info=True)
        status, code, error = "runtime_error", EXIT_RUNTIME, f"{type(exc).__name__}: {exc}"
    finally:
        shutil.rmtree(stage, ignore_errors=True)
    if error:
        log.error("%s failed: %s", command, error)
    manifest = {"command": command, "version": __version__, "backend": _kernels.BACKEND,
                "status": status, "exit_code": code, "error": error,
                "config": cfg.to_dict(), "artifacts": dict(sorted(artifacts.items()))}
    _write_json(out_dir / f"manifest_{command}.json", manifest)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
    except ConfigInvalid as exc:
        log.error("config error: %s", exc)
        out = Path(args.out or "out")
        try:
            out.mkdir(parents=True, exist_ok=True)
            _write_json(out / f"manifest_{args.command}.json",
                        {"command": args.command, "version": __version__, "status": "config_error",
                         "exit_code": EXIT_CONFIG, "error": str(exc), "config": None,
                         "artifacts": {}})
        except OSError:
            pass
        return EXIT_CONFIG
    return run_command(args.command, cfg)


if __name__ == "__main__":
    sys.exit(main())
