"""Scenario files, run export/import and sweep aggregation on disk.

Scenario files are INI documents. Every :class:`SimConfig` field lives in
one section (see ``SECTIONS``); sources are either ``random = N`` or
explicit ``sK = x, y, intensity[, spread]`` entries.
"""
from __future__ import annotations

import configparser
import csv
import json
import math
import os
from dataclasses import fields
from pathlib import Path

from .sim import IterationRecord, RunResult, SimConfig

FORMAT_VERSION = 1
RECORD_HEADER = ["iter", "robot", "x", "y", "mode", "found_total", "wrmse_pooled", "ergodic_metric"]
DETAIL_HEADER = ["iter", "robot", "u_x", "u_y", "wrmse_robot", "found"]
OUT_ENV = "DIAS_OUT_DIR"

SECTIONS = {
    "domain": ["width", "height", "grid_nx", "grid_ny"],
    "robots": ["n_robots", "start_region", "start_region_size"],
    "sources": ["n_sources", "intensity_min", "intensity_max", "spread", "min_separation",
                "source_margin", "noise_std"],
    "algorithm": ["algorithm", "found_radius", "u_max", "k_max", "t_c", "alpha", "beta", "tau",
                  "exclusion_radius", "lcb_use_std", "exclude_visited", "ucb_coefficient",
                  "cold_start", "share_samples"],
    "gp": ["sigma_n0", "sigma_f0", "length_scale0", "sigma_n_bounds", "sigma_f_bounds",
           "length_scale_bounds", "train_every", "gp_restarts", "gp_max_train_points"],
    "run": ["max_iterations", "min_iterations", "seed"],
}
# shorter spellings accepted in files
ALIASES = {"robots": {"count": "n_robots"}, "sources": {"random": "n_sources"}}


class ConfigError(ValueError):
    pass


def default_out_root() -> Path:
    return Path(os.environ.get(OUT_ENV, "runs"))


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.replace(",", " ").split()]


def _convert(name: str, raw: str):
    default = SimConfig.__dataclass_fields__[name].default
    raw = raw.strip()
    if name.endswith("_bounds"):
        vals = _floats(raw)
        if len(vals) != 2:
            raise ConfigError(f"{name} needs two numbers, got {raw!r}")
        return tuple(vals)
    if name == "gp_max_train_points":
        return None if raw.lower() in ("none", "") else int(raw)
    if isinstance(default, bool):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{name}: not a boolean: {raw!r}")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw


def parse_config(text: str) -> SimConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    values = {}
    explicit_sources = []
    for section in cp.sections():
        if section not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in cp.items(section):
            key = ALIASES.get(section, {}).get(key, key)
            if section == "sources" and key[0] == "s" and key[1:].isdigit():
                vals = _floats(raw)
                if len(vals) not in (3, 4):
                    raise ConfigError(f"source {key} needs x, y, intensity[, spread]")
                explicit_sources.append((int(key[1:]), tuple(vals)))
            elif section == "robots" and key == "positions":
                pts = [_floats(p) for p in raw.split(";") if p.strip()]
                if any(len(p) != 2 for p in pts):
                    raise ConfigError("robot positions must be 'x y; x y; ...'")
                values["initial_positions"] = tuple(tuple(p) for p in pts)
            elif key in SECTIONS[section]:
                try:
                    values[key] = _convert(key, raw)
                except ValueError as exc:
                    raise ConfigError(f"[{section}] {key}: {exc}") from exc
            else:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
    if explicit_sources:
        values["sources"] = tuple(v for _, v in sorted(explicit_sources))
    try:
        return SimConfig(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> SimConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def format_config(cfg: SimConfig) -> str:
    lines = []
    for section, names in SECTIONS.items():
        lines.append(f"[{section}]")
        for name in names:
            if name == "n_sources" and cfg.sources is not None:
                continue
            val = getattr(cfg, name)
            if isinstance(val, tuple):
                val = ", ".join(repr(v) for v in val)
            lines.append(f"{name} = {val}")
        if section == "robots" and cfg.initial_positions is not None:
            lines.append("positions = " + "; ".join(f"{x!r} {y!r}" for x, y in cfg.initial_positions))
        if section == "sources" and cfg.sources is not None:
            for k, s in enumerate(cfg.sources):
                lines.append(f"s{k} = " + ", ".join(repr(v) for v in s))
        lines.append("")
    return "\n".join(lines)


def _config_to_json(cfg: SimConfig) -> dict:
    d = cfg.to_dict()
    for k, v in d.items():
        if isinstance(v, tuple):
            d[k] = [list(r) if isinstance(r, tuple) else r for r in v]
    return d


def _config_from_json(d: dict) -> SimConfig:
    d = dict(d)
    for k in ("sigma_n_bounds", "sigma_f_bounds", "length_scale_bounds"):
        d[k] = tuple(d[k])
    return SimConfig(**d)


def _f(v: float) -> str:
    return repr(float(v))


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def export_run(result: RunResult, out_dir) -> list[Path]:
    """Write summary.json, records.csv, records_detail.csv and one trajectory CSV per robot."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        n = result.config.n_robots
        rec_rows, detail_rows = [], []
        for rec in result.records:
            for i in range(n):
                x, y = rec.positions[i]
                rec_rows.append([rec.iteration, i, _f(x), _f(y), rec.modes[i], rec.found_total,
                                 _f(rec.wrmse_pooled), _f(rec.ergodic_metric)])
                found = ";".join(str(j) for j, who in zip(rec.new_found, rec.found_by) if who == i)
                detail_rows.append([rec.iteration, i, _f(rec.commands[i][0]), _f(rec.commands[i][1]),
                                    _f(rec.wrmse_robot[i]), found])
        paths = [out / "records.csv", out / "records_detail.csv"]
        _write_csv(paths[0], RECORD_HEADER, rec_rows)
        _write_csv(paths[1], DETAIL_HEADER, detail_rows)
        for i in range(n):
            rows = [[0, _f(result.initial_positions[i][0]), _f(result.initial_positions[i][1])]]
            rows += [[rec.iteration, _f(rec.positions[i][0]), _f(rec.positions[i][1])] for rec in result.records]
            p = out / f"trajectory_robot{i}.csv"
            _write_csv(p, ["iter", "x", "y"], rows)
            paths.append(p)
        summary = {
            "format_version": FORMAT_VERSION,
            "summary": result.summary,
            "config": _config_to_json(result.config),
            "sources": result.sources,
            "initial_positions": result.initial_positions,
        }
        p = out / "summary.json"
        p.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
        paths.append(p)
    except OSError as exc:
        raise OSError(f"failed to export run to {out}: {exc}") from exc
    return paths


def load_run(out_dir) -> RunResult:
    out = Path(out_dir)
    meta = json.loads((out / "summary.json").read_text())
    if meta.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"{out}: unsupported format version {meta.get('format_version')}")
    cfg = _config_from_json(meta["config"])
    n = cfg.n_robots
    with open(out / "records.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    with open(out / "records_detail.csv", newline="") as fh:
        details = list(csv.DictReader(fh))
    records = []
    for k in range(0, len(rows), n):
        block, dblock = rows[k:k + n], details[k:k + n]
        found, found_by = [], []
        for d in dblock:
            for j in filter(None, d["found"].split(";")):
                found.append(int(j))
                found_by.append(int(d["robot"]))
        records.append(IterationRecord(
            iteration=int(block[0]["iter"]),
            positions=[[float(r["x"]), float(r["y"])] for r in block],
            modes=[r["mode"] for r in block],
            commands=[[float(d["u_x"]), float(d["u_y"])] for d in dblock],
            new_found=found,
            found_total=int(block[0]["found_total"]),
            wrmse_robot=[float(d["wrmse_robot"]) for d in dblock],
            wrmse_pooled=float(block[0]["wrmse_pooled"]),
            ergodic_metric=float(block[0]["ergodic_metric"]),
            found_by=found_by,
        ))
    return RunResult(cfg, meta["summary"], records, meta["initial_positions"], meta["sources"])


def write_aggregate(agg: dict, out_dir) -> Path:
    p = Path(out_dir) / "aggregate.json"
    p.write_text(json.dumps(agg, indent=2, sort_keys=True) + "\n")
    return p


def load_sweep(sweep_dir):
    """Return (aggregate dict, list of trial summaries) for a sweep directory."""
    d = Path(sweep_dir)
    agg = json.loads((d / "aggregate.json").read_text())
    trials = sorted(p for p in d.iterdir() if p.is_dir() and (p / "summary.json").exists())
    metas = [json.loads((p / "summary.json").read_text()) for p in trials]
    return agg, metas, trials


def read_wrmse_curve(run_dir) -> list[tuple[int, float]]:
    with open(Path(run_dir) / "records.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    seen = {}
    for r in rows:
        seen.setdefault(int(r["iter"]), float(r["wrmse_pooled"]))
    return sorted(seen.items())


def isclose_or_nan(a: float, b: float) -> bool:
    return (math.isnan(a) and math.isnan(b)) or a == b
