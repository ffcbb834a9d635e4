"""File formats: tree and p-value CSV input, result and table output.

Tree files are CSV with a required ``node_id,parent_id`` header; parent_id 0
marks a root. P-value files are CSV with a ``node_id,p`` header. Node ids
must be exactly 1..m; row order is irrelevant. Simulation configs are plain
``key = value`` files.

Emitted thresholds use 6 significant digits; p-values keep full (shortest
round-trip) precision.
"""

from __future__ import annotations

import csv
import io as _io
import json
from dataclasses import replace

import numpy as np

from .critical import ALL_KINDS, parse_procedure
from .errors import ValidationError
from .hierarchy import Hierarchy, build_hierarchy
from .procedures import RejectionResult
from .simulate import PRESETS, SimConfig, TreeSpec, preset_config
from .stepwise import CriticalFunctionSet


def format_threshold(value: float) -> str:
    return format(value, ".6g")


def parent_array_from_pairs(pairs) -> list[int]:
    """Turn (node_id, parent_id) pairs into a parent array indexed by id.

    Ids must be exactly 1..m with no duplicates; raises ValidationError
    naming the offending node otherwise.
    """
    seen: dict[int, int] = {}
    for node_id, parent_id in pairs:
        if node_id in seen:
            raise ValidationError(f"duplicate node_id {node_id}")
        seen[node_id] = parent_id
    m = len(seen)
    if m == 0:
        raise ValidationError("tree has no nodes")
    for i in range(1, m + 1):
        if i not in seen:
            raise ValidationError(f"node ids must be exactly 1..{m}; missing node {i}")
    return [seen[i] for i in range(1, m + 1)]


def _read_csv_rows(path: str, expected: tuple) -> list[list[str]]:
    try:
        handle = open(path, newline="")
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    with handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty file, expected header {','.join(expected)}") from None
        if [col.strip().lower() for col in header] != list(expected):
            raise ValidationError(
                f"{path}: expected header {','.join(expected)}, got {','.join(header)}"
            )
        return [row for row in reader if row and any(cell.strip() for cell in row)]


def read_tree_csv(path: str) -> Hierarchy:
    """Load a hierarchy from a ``node_id,parent_id`` CSV file."""
    pairs = []
    for lineno, row in enumerate(_read_csv_rows(path, ("node_id", "parent_id")), start=2):
        if len(row) != 2:
            raise ValidationError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
        try:
            pairs.append((int(row[0]), int(row[1])))
        except ValueError:
            raise ValidationError(f"{path}:{lineno}: non-integer id in row {row!r}") from None
    return build_hierarchy(parent_array_from_pairs(pairs))


def read_pvalues_csv(path: str, m: int) -> np.ndarray:
    """Load p-values from a ``node_id,p`` CSV file; every node 1..m required."""
    values: dict[int, float] = {}
    for lineno, row in enumerate(_read_csv_rows(path, ("node_id", "p")), start=2):
        if len(row) != 2:
            raise ValidationError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
        try:
            node = int(row[0])
            p = float(row[1])
        except ValueError:
            raise ValidationError(f"{path}:{lineno}: malformed row {row!r}") from None
        if node in values:
            raise ValidationError(f"{path}:{lineno}: duplicate p-value for node {node}")
        if not 0.0 <= p <= 1.0:
            raise ValidationError(f"{path}:{lineno}: p-value {p!r} for node {node} outside [0, 1]")
        values[node] = p
    for i in range(1, m + 1):
        if i not in values:
            raise ValidationError(f"{path}: missing p-value for node {i}")
    extra = [k for k in values if not 1 <= k <= m]
    if extra:
        raise ValidationError(f"{path}: p-value for unknown node {extra[0]} (tree has {m} nodes)")
    return np.array([values[i] for i in range(1, m + 1)])


def result_to_json(result: RejectionResult) -> str:
    return json.dumps(result.to_dict(), indent=2)


def result_to_csv(result: RejectionResult, h: Hierarchy) -> str:
    """Tabular form of a result; one row per node."""
    out = _io.StringIO()
    out.write("procedure,alpha,node_id,depth,p,threshold,rejected\n")
    d = result.to_dict()
    for node in d["nodes"]:
        out.write(
            f"{d['procedure']},{d['alpha']},{node['id']},{int(h.depth[node['id'] - 1])},"
            f"{node['p']},{format_threshold(node['threshold'])},{node['rejected']}\n"
        )
    return out.getvalue()


def critvalues_csv(h: Hierarchy, cf: CriticalFunctionSet, r_values) -> str:
    """Node-by-r table of thresholds for auditing a critical function set."""
    columns = [cf.thresholds(r) for r in r_values]
    out = _io.StringIO()
    out.write("node_id,depth," + ",".join(f"r={r}" for r in r_values) + "\n")
    for i in range(h.m):
        row = ",".join(format_threshold(float(col[i])) for col in columns)
        out.write(f"{i + 1},{int(h.depth[i])},{row}\n")
    return out.getvalue()


_CONFIG_KEYS = (
    "tree",
    "roots",
    "fanout",
    "depth",
    "pi0",
    "rho",
    "mu",
    "alpha",
    "replications",
    "seed",
    "procedures",
    "workers",
    "yekutieli_constant",
)


def parse_sim_config(text: str, source: str = "<config>") -> tuple[SimConfig, tuple, int]:
    """Parse a key-value simulation config.

    Returns (config, procedure kinds, workers). ``tree`` selects a preset
    (shallow or deep) with its default signal means; alternatively give
    ``roots``, ``fanout``, ``depth`` and an explicit comma-separated ``mu``.
    """
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ValidationError(f"{source}:{lineno}: expected key = value, got {line!r}")
        key, _, value = stripped.partition("=")
        key = key.strip().lower()
        if key not in _CONFIG_KEYS:
            raise ValidationError(f"{source}:{lineno}: unknown config key {key!r}")
        if key in raw:
            raise ValidationError(f"{source}:{lineno}: duplicate config key {key!r}")
        raw[key] = value.strip()

    def grab(key, parse, default):
        if key not in raw:
            return default
        try:
            return parse(raw[key])
        except ValueError:
            raise ValidationError(f"{source}: invalid value for {key}: {raw[key]!r}") from None

    if "tree" in raw:
        if raw["tree"] not in PRESETS:
            raise ValidationError(
                f"{source}: unknown tree preset {raw['tree']!r} (known: {', '.join(PRESETS)})"
            )
        if any(k in raw for k in ("roots", "fanout", "depth")):
            raise ValidationError(f"{source}: give either tree = <preset> or roots/fanout/depth")
        cfg = preset_config(raw["tree"])
    else:
        for k in ("roots", "fanout", "depth", "mu"):
            if k not in raw:
                raise ValidationError(f"{source}: custom trees need roots, fanout, depth, and mu")
        cfg = SimConfig(
            tree=TreeSpec(
                roots=grab("roots", int, None),
                fanout=grab("fanout", int, None),
                depth=grab("depth", int, None),
            ),
            pi0=0.5,
            rho=0.0,
            mu_by_depth=(),
        )

    def floats(value: str) -> tuple:
        return tuple(float(part) for part in value.split(","))

    cfg = replace(
        cfg,
        pi0=grab("pi0", float, cfg.pi0),
        rho=grab("rho", float, cfg.rho),
        mu_by_depth=grab("mu", floats, cfg.mu_by_depth),
        alpha=grab("alpha", float, cfg.alpha),
        replications=grab("replications", int, cfg.replications),
        seed=grab("seed", int, cfg.seed),
        yekutieli_correction=grab("yekutieli_constant", float, cfg.yekutieli_correction),
    )
    cfg.validate()

    tokens = grab("procedures", lambda v: [s.strip() for s in v.split(",") if s.strip()], None)
    kinds = tuple(parse_procedure(t) for t in tokens) if tokens else ALL_KINDS
    workers = grab("workers", int, 1)
    if workers < 1:
        raise ValidationError(f"{source}: workers={workers} must be at least 1")
    return cfg, kinds, workers
