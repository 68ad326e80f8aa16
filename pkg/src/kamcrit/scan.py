"""Batch (K, n, method) sweeps with deterministic outputs and run manifests.

Config files are flat key-value text, one ``key = value`` per line with
``#`` comments:

    methods = greene, nch        # enum list drawn from greene|nch|chirikov
    depth = 8                    # positive integer
    k_grid = 0.80:0.02:1.10      # "start:step:stop" (stop inclusive) or a
                                 # comma-separated list of reals
    output_dir = out/run1        # relative paths resolve against the
                                 # config file's directory
    tol.k_star = 1e-6            # optional tolerance overrides (reals):
    tol.dk_max = 0.05            #   k_star, dk_max

Each (method, order/K) task is independent; failures are recorded per task
in the manifest and never stop the remaining tasks.  Worker count comes
from the KAMCRIT_THREADS environment variable (default 1), overridable per
call.  Rows are sorted by key and written at 17 significant digits through
a staging file and an atomic rename, so identical configs reproduce
byte-identical CSV bodies.
"""

from __future__ import annotations

import csv
import datetime
import hashlib
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import ConfigError, KamcritError, MergeConflictError
from .criteria import chirikov_overlap, nch_distance_curve
from .orbits import Convergent, fibonacci_convergents
from .stability import find_destabilization

VERSION = "0.1.0"
METHODS = ("greene", "nch", "chirikov")
_KNOWN_TOLERANCES = ("k_star", "dk_max")

Row = Tuple[str, int, str, float]  # (method, n, K_or_stat, value)


@dataclass
class ScanConfig:
    methods: List[str]
    depth: int
    output_dir: Path
    k_grid: List[float] = field(default_factory=list)
    tolerances: Dict[str, float] = field(default_factory=dict)

    def validate(self) -> None:
        if not self.methods:
            raise ConfigError("methods must be non-empty")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r} (expected one of {METHODS})")
        if len(set(self.methods)) != len(self.methods):
            raise ConfigError("duplicate methods in config")
        if self.depth < 1:
            raise ConfigError(f"depth must be >= 1, got {self.depth}")
        if any(b <= a for a, b in zip(self.k_grid, self.k_grid[1:])):
            raise ConfigError("k_grid must be strictly increasing")
        needs_grid = {"nch", "chirikov"} & set(self.methods)
        if needs_grid and not self.k_grid:
            raise ConfigError(f"methods {sorted(needs_grid)} require a k_grid")
        if "nch" in self.methods and len(self.k_grid) < 5:
            raise ConfigError("the nch method needs a k_grid of at least 5 points")
        for key in self.tolerances:
            if key not in _KNOWN_TOLERANCES:
                raise ConfigError(f"unknown tolerance override tol.{key}")

    def to_record(self) -> dict:
        return {
            "methods": list(self.methods),
            "depth": self.depth,
            "k_grid": [float(k) for k in self.k_grid],
            "output_dir": str(self.output_dir),
            "tolerances": {k: float(v) for k, v in sorted(self.tolerances.items())},
        }

    def content_hash(self) -> str:
        canon = json.dumps(self.to_record(), sort_keys=True)
        return hashlib.sha256(canon.encode()).hexdigest()


def _parse_real_list(text: str) -> List[float]:
    text = text.strip()
    if ":" in text and "," not in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"range syntax is start:step:stop, got {text!r}")
        try:
            start, step, stop = (float(p) for p in parts)
        except ValueError as err:
            raise ConfigError(f"bad real in range {text!r}") from err
        if step <= 0:
            raise ConfigError("range step must be > 0")
        out = []
        value = start
        # stop is inclusive up to half a step of rounding headroom
        while value <= stop + 0.5 * step:
            out.append(round(value, 12))
            value += step
        return [v for v in out if v <= stop + 1e-12]
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError as err:
        raise ConfigError(f"bad real list {text!r}") from err


def parse_scan_config(text: str, base_dir: Optional[Path] = None) -> ScanConfig:
    """Parse the flat key-value config grammar into a validated ScanConfig."""
    methods: List[str] = []
    depth: Optional[int] = None
    k_grid: List[float] = []
    output_dir: Optional[str] = None
    tolerances: Dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key == "methods":
            methods = [m.strip() for m in value.split(",") if m.strip()]
        elif key == "depth":
            try:
                depth = int(value)
            except ValueError as err:
                raise ConfigError(f"line {lineno}: depth must be an integer") from err
        elif key == "k_grid":
            k_grid = _parse_real_list(value)
        elif key == "output_dir":
            output_dir = value
        elif key.startswith("tol."):
            try:
                tolerances[key[4:]] = float(value)
            except ValueError as err:
                raise ConfigError(f"line {lineno}: tolerance must be a real") from err
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    if depth is None:
        raise ConfigError("missing required key 'depth'")
    if output_dir is None:
        raise ConfigError("missing required key 'output_dir'")
    out_path = Path(output_dir)
    if base_dir is not None and not out_path.is_absolute():
        out_path = base_dir / out_path
    cfg = ScanConfig(methods=methods, depth=depth, output_dir=out_path,
                     k_grid=k_grid, tolerances=tolerances)
    cfg.validate()
    return cfg


def load_scan_config(path) -> ScanConfig:
    path = Path(path)
    return parse_scan_config(path.read_text(), base_dir=path.parent)


@dataclass
class RunManifest:
    config: dict
    version: str
    config_sha256: str
    started: str
    finished: str
    tasks: List[dict]
    ok: int
    failed: int

    def to_record(self) -> dict:
        return {
            "config": self.config,
            "version": self.version,
            "config_sha256": self.config_sha256,
            "started": self.started,
            "finished": self.finished,
            "tasks": self.tasks,
            "ok": self.ok,
            "failed": self.failed,
        }


# --------------------------------------------------------------------------
# task bodies (module-level for pickling into worker processes)
# --------------------------------------------------------------------------

def _task_greene(payload) -> List[Row]:
    m, n, tol_k, dk_max = payload
    k_star, _ = find_destabilization(Convergent(m, n), tol_k=tol_k, dk_max=dk_max)
    return [("greene", n, "K_star", k_star)]


def _task_nch(payload) -> List[Row]:
    m, n, grid, dk_max = payload
    curve = nch_distance_curve(Convergent(m, n), grid, dk_max=dk_max)
    return [("nch", n, _fmt(k), d) for k, d in curve.samples]


def _task_chirikov(payload) -> List[Row]:
    (k,) = payload
    rho = chirikov_overlap(k)
    return [("chirikov", 0, _fmt(k), rho)]


_TASK_BODIES = {"greene": _task_greene, "nch": _task_nch, "chirikov": _task_chirikov}


def _run_task(task) -> Tuple[str, str, Optional[List[Row]], Optional[str]]:
    task_id, kind, payload = task
    try:
        rows = _TASK_BODIES[kind](payload)
        return task_id, "ok", rows, None
    except KamcritError as err:
        return task_id, "failed", None, str(err)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def worker_count(override: Optional[int] = None) -> int:
    """Effective worker count: explicit override, else KAMCRIT_THREADS, else 1."""
    if override is not None:
        return max(1, int(override))
    env = os.environ.get("KAMCRIT_THREADS", "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError as err:
            raise ConfigError(f"KAMCRIT_THREADS must be an integer, got {env!r}") from err
    return 1


def _build_tasks(cfg: ScanConfig):
    tol_k = cfg.tolerances.get("k_star", 1e-6)
    dk_max = cfg.tolerances.get("dk_max", 0.05)
    tasks = []
    for method in cfg.methods:
        if method == "greene":
            for c in fibonacci_convergents(cfg.depth):
                tasks.append((f"greene:n={c.n}", "greene", (c.m, c.n, tol_k, dk_max)))
        elif method == "nch":
            for c in fibonacci_convergents(cfg.depth):
                tasks.append((f"nch:n={c.n}", "nch", (c.m, c.n, list(cfg.k_grid), dk_max)))
        elif method == "chirikov":
            for k in cfg.k_grid:
                tasks.append((f"chirikov:K={_fmt(k)}", "chirikov", (float(k),)))
    return tasks


def _csv_body(rows: Sequence[Row]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["method", "n", "K_or_stat", "value"])
    for method, n, k_or_stat, value in rows:
        writer.writerow([method, n, k_or_stat, _fmt(value)])
    return buf.getvalue()


def write_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def run_scan(cfg: ScanConfig, threads: Optional[int] = None) -> RunManifest:
    """Execute every (method, n, K) task of ``cfg`` and persist the results.

    Writes one ``<method>.csv`` and ``<method>.json`` per requested method
    plus ``manifest.json`` into ``cfg.output_dir``.  Task failures are
    recorded per task; remaining tasks still run.
    """
    cfg.validate()
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    started = datetime.datetime.now(datetime.timezone.utc).isoformat()
    tasks = _build_tasks(cfg)
    workers = worker_count(threads)

    results = []
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_task, tasks))
    else:
        results = [_run_task(t) for t in tasks]

    by_method: Dict[str, List[Row]] = {m: [] for m in cfg.methods}
    statuses = []
    ok = failed = 0
    for task_id, status, rows, error in results:
        entry = {"task": task_id, "status": status}
        if status == "ok":
            ok += 1
            for row in rows:
                by_method[row[0]].append(row)
        else:
            failed += 1
            entry["error"] = error
        statuses.append(entry)

    for method, rows in by_method.items():
        rows.sort(key=lambda r: (r[0], r[1], r[2]))
        write_atomic(cfg.output_dir / f"{method}.csv", _csv_body(rows))
        payload = {
            "method": method,
            "rows": [[r[0], r[1], r[2], r[3]] for r in rows],
        }
        write_atomic(cfg.output_dir / f"{method}.json", json.dumps(payload, sort_keys=True, indent=1) + "\n")

    finished = datetime.datetime.now(datetime.timezone.utc).isoformat()
    manifest = RunManifest(
        config=cfg.to_record(),
        version=VERSION,
        config_sha256=cfg.content_hash(),
        started=started,
        finished=finished,
        tasks=statuses,
        ok=ok,
        failed=failed,
    )
    write_atomic(cfg.output_dir / "manifest.json", json.dumps(manifest.to_record(), sort_keys=True, indent=1) + "\n")
    return manifest


def _read_rows(directory: Path) -> List[Row]:
    rows: List[Row] = []
    for csv_path in sorted(directory.glob("*.csv")):
        with csv_path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != ["method", "n", "K_or_stat", "value"]:
                raise MergeConflictError(f"{csv_path} has an unexpected header {header!r}")
            for method, n, k_or_stat, value in reader:
                rows.append((method, int(n), k_or_stat, float(value)))
    return rows


def merge_results(dirs: Sequence) -> Dict[str, List[Row]]:
    """Union of result rows from several scan directories, keyed by
    (method, n, K_or_stat); equal duplicates collapse, conflicting values
    raise :class:`MergeConflictError` naming the keys."""
    merged: Dict[Tuple[str, int, str], float] = {}
    conflicts = []
    for d in dirs:
        d = Path(d)
        if not (d / "manifest.json").exists():
            raise ConfigError(f"missing manifest in {d}")
        for method, n, k_or_stat, value in _read_rows(d):
            key = (method, n, k_or_stat)
            if key in merged and _fmt(merged[key]) != _fmt(value):
                conflicts.append({"key": list(key), "values": [merged[key], value]})
            else:
                merged[key] = value
    if conflicts:
        names = ", ".join(str(tuple(c["key"])) for c in conflicts)
        raise MergeConflictError(f"conflicting values for keys: {names}", conflicts=conflicts)
    out: Dict[str, List[Row]] = {}
    for (method, n, k_or_stat), value in sorted(merged.items()):
        out.setdefault(method, []).append((method, n, k_or_stat, value))
    return out


def write_merged(tables: Dict[str, List[Row]], out_dir: Path) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for method, rows in tables.items():
        write_atomic(out_dir / f"{method}.csv", _csv_body(rows))
