"""Seeded Monte Carlo harness estimating FDR and average power.

One experiment cell fixes a balanced tree, the true-null proportion pi0 of
its leaves, a common correlation rho, per-depth signal means, and a level
alpha. Each replication draws which leaves are true (a non-leaf is true only
if all of its children are), samples one-sided Z-test p-values from an
equicorrelated Gaussian via the one-factor representation

    Z_i = mu_i + sqrt(rho) * W0 + sqrt(1 - rho) * W_i,   p_i = 1 - Phi(Z_i),

runs the requested procedures, and records the false discovery proportion
V / max(R, 1) and the power proportion (rejected false nulls) / max(#false, 1).
Replication r of a run with master seed s uses the generator seeded by
(s, r), so results are identical for any worker count and execution order.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtr

from .critical import ALL_KINDS, HIERARCHICAL_KINDS, ProcedureKind, critical_functions_for
from .errors import ValidationError
from .hierarchy import MAX_NODES, Hierarchy, build_hierarchy
from .procedures import DEFAULT_YEKUTIELI_CORRECTION, run_procedure


@dataclass(frozen=True)
class TreeSpec:
    """Balanced tree: ``roots`` top nodes, each non-leaf with ``fanout`` children."""

    roots: int
    fanout: int
    depth: int


# Named experiment presets: (tree, signal mean by depth, in sd units).
PRESETS = {
    "shallow": (TreeSpec(roots=10, fanout=100, depth=2), (3.0, 2.0)),
    "deep": (TreeSpec(roots=8, fanout=5, depth=4), (3.5, 3.0, 3.0, 2.0)),
}


@dataclass(frozen=True)
class SimConfig:
    """One experiment cell."""

    tree: TreeSpec
    pi0: float
    rho: float
    mu_by_depth: tuple
    alpha: float = 0.05
    replications: int = 1000
    seed: int = 0
    yekutieli_correction: float = DEFAULT_YEKUTIELI_CORRECTION

    def validate(self) -> "SimConfig":
        if self.tree.roots < 1 or self.tree.fanout < 1 or self.tree.depth < 1:
            raise ValidationError("tree spec needs roots, fanout, and depth all >= 1")
        if not 0.0 <= self.pi0 <= 1.0:
            raise ValidationError(f"pi0={self.pi0} must lie in [0, 1]")
        if not 0.0 <= self.rho < 1.0:
            raise ValidationError(f"rho={self.rho} must lie in [0, 1)")
        if len(self.mu_by_depth) != self.tree.depth:
            raise ValidationError(
                f"mu has {len(self.mu_by_depth)} entries for tree depth {self.tree.depth}"
            )
        if any(mu < 0 for mu in self.mu_by_depth):
            raise ValidationError("signal means must be non-negative")
        if not 0.0 < self.alpha < 1.0:
            raise ValidationError(f"alpha={self.alpha} must lie strictly between 0 and 1")
        if self.replications < 1:
            raise ValidationError(f"replications={self.replications} must be at least 1")
        if self.seed < 0:
            raise ValidationError(f"seed={self.seed} must be non-negative")
        if not self.yekutieli_correction > 0:
            raise ValidationError("yekutieli correction must be positive")
        return self


def preset_config(name: str, **overrides) -> SimConfig:
    """Config for a named preset; keyword overrides replace any field."""
    try:
        tree, mu = PRESETS[name]
    except KeyError:
        raise ValidationError(f"unknown preset {name!r} (known: {', '.join(PRESETS)})") from None
    cfg = SimConfig(tree=tree, pi0=0.5, rho=0.0, mu_by_depth=mu)
    return replace(cfg, **overrides) if overrides else cfg


@dataclass(frozen=True)
class ProcedureStats:
    """Monte Carlo estimates for one procedure in one cell."""

    procedure: ProcedureKind
    fdr: float
    fdr_se: float
    power: float
    power_se: float


@dataclass(frozen=True)
class SimResult:
    config: SimConfig
    stats: tuple  # ProcedureStats per requested procedure

    def csv_rows(self) -> list[str]:
        cfg = self.config
        return [
            f"{s.procedure.value},{cfg.pi0},{cfg.rho},{s.fdr},{s.fdr_se},"
            f"{s.power},{s.power_se},{cfg.replications}"
            for s in self.stats
        ]


SIM_CSV_HEADER = "procedure,pi0,rho,fdr,fdr_se,power,power_se,n"


def build_balanced_tree(spec: TreeSpec) -> Hierarchy:
    """Hierarchy of the balanced tree described by ``spec``, numbered by level."""
    if spec.roots < 1 or spec.fanout < 1 or spec.depth < 1:
        raise ValidationError("tree spec needs roots, fanout, and depth all >= 1")
    counts = [spec.roots * spec.fanout**d for d in range(spec.depth)]
    total = sum(counts)
    if total > MAX_NODES:
        raise ValidationError(f"balanced tree would have {total} nodes, limit is {MAX_NODES}")
    parent = np.zeros(total, dtype=np.int64)
    level_start = counts[0]
    prev_start = 0
    for d in range(1, spec.depth):
        offsets = np.arange(counts[d])
        parent[level_start : level_start + counts[d]] = prev_start + offsets // spec.fanout + 1
        prev_start = level_start
        level_start += counts[d]
    return build_hierarchy(parent)


def assign_truth(h: Hierarchy, pi0: float, rng: np.random.Generator) -> np.ndarray:
    """Boolean true-null flags: leaves i.i.d. with probability pi0, parents
    true only when every child is true. Draws leaf uniforms in node-id order."""
    if not 0.0 <= pi0 <= 1.0:
        raise ValidationError(f"pi0={pi0} must lie in [0, 1]")
    is_leaf = h.subtree_size == 1
    truth = np.zeros(h.m, dtype=bool)
    truth[is_leaf] = rng.uniform(size=int(is_leaf.sum())) < pi0
    # Bottom-up: a non-leaf at depth d-1 is true iff none of its depth-d
    # children is false. Leaves at intermediate depths keep their own draw.
    for d in range(h.max_depth, 1, -1):
        members = h.families[d - 1]
        parents = h.parent[members - 1]
        false_kids = np.bincount(parents - 1, weights=~truth[members - 1], minlength=h.m)
        pidx = h.families[d - 2] - 1
        target = pidx[~is_leaf[pidx]]
        truth[target] = false_kids[target] == 0
    return truth


def sample_pvalues(
    h: Hierarchy,
    truth: np.ndarray,
    mu_by_depth,
    rho: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """One-sided Z-test p-values from the equicorrelated Gaussian model.

    False nodes get the depth-d signal mean; true nodes have mean zero. Every
    node, leaf or not, carries its own statistic.
    """
    if not 0.0 <= rho < 1.0:
        raise ValidationError(f"rho={rho} must lie in [0, 1)")
    mu_by_depth = np.asarray(mu_by_depth, dtype=float)
    if mu_by_depth.shape[0] < h.max_depth:
        raise ValidationError(
            f"mu has {mu_by_depth.shape[0]} entries for tree depth {h.max_depth}"
        )
    mu = np.where(truth, 0.0, mu_by_depth[h.depth - 1])
    shared = rng.standard_normal()
    own = rng.standard_normal(h.m)
    z = mu + math.sqrt(rho) * shared + math.sqrt(1.0 - rho) * own
    return ndtr(-z)  # 1 - Phi(z), evaluated without cancellation


def _simulate_block(cfg: SimConfig, kinds: tuple, start: int, stop: int) -> np.ndarray:
    """FDP and power proportions for replications start..stop-1.

    Returns an array of shape (stop - start, len(kinds), 2) with the false
    discovery proportion in [..., 0] and the power proportion in [..., 1].
    """
    h = build_balanced_tree(cfg.tree)
    prebuilt = {
        kind: critical_functions_for(kind, h, cfg.alpha)
        for kind in kinds
        if kind in HIERARCHICAL_KINDS
    }
    out = np.empty((stop - start, len(kinds), 2))
    for row, rep in enumerate(range(start, stop)):
        rng = np.random.default_rng([cfg.seed, rep])
        truth = assign_truth(h, cfg.pi0, rng)
        pvals = sample_pvalues(h, truth, cfg.mu_by_depth, cfg.rho, rng)
        n_false = int((~truth).sum())
        for col, kind in enumerate(kinds):
            res = run_procedure(
                pvals,
                h,
                kind,
                cfg.alpha,
                yekutieli_correction=cfg.yekutieli_correction,
                functions=prebuilt.get(kind),
            )
            total = res.total_rejections
            false_rej = int((res.rejected & truth).sum())
            true_rej = total - false_rej
            out[row, col, 0] = false_rej / total if total else 0.0
            out[row, col, 1] = true_rej / n_false if n_false else 0.0
    return out


def estimate_fdr_power(
    cfg: SimConfig,
    kinds=ALL_KINDS,
    workers: int = 1,
    progress=None,
) -> SimResult:
    """Run the Monte Carlo experiment described by ``cfg``.

    ``workers`` > 1 splits replications across processes; the estimates are
    identical for any worker count because each replication derives its own
    generator from (seed, replication index) and lands in a fixed slot.
    ``progress``, if given, is called as progress(done, total) after each
    block of replications.
    """
    cfg.validate()
    kinds = tuple(kinds)
    if not kinds:
        raise ValidationError("at least one procedure is required")
    if workers < 1:
        raise ValidationError(f"workers={workers} must be at least 1")
    n = cfg.replications

    block = max(1, math.ceil(n / max(workers, 1) / 4))
    spans = [(s, min(s + block, n)) for s in range(0, n, block)]
    samples = np.empty((n, len(kinds), 2))
    if workers == 1:
        for start, stop in spans:
            samples[start:stop] = _simulate_block(cfg, kinds, start, stop)
            if progress is not None:
                progress(stop, n)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                (start, stop, pool.submit(_simulate_block, cfg, kinds, start, stop))
                for start, stop in spans
            ]
            done = 0
            for start, stop, fut in futures:
                samples[start:stop] = fut.result()
                done += stop - start
                if progress is not None:
                    progress(done, n)

    stats = []
    for col, kind in enumerate(kinds):
        fdp = samples[:, col, 0]
        pwr = samples[:, col, 1]
        stats.append(
            ProcedureStats(
                procedure=kind,
                fdr=float(fdp.mean()),
                fdr_se=_standard_error(fdp),
                power=float(pwr.mean()),
                power_se=_standard_error(pwr),
            )
        )
    return SimResult(config=cfg, stats=tuple(stats))


def _standard_error(values: np.ndarray) -> float:
    n = values.shape[0]
    if n < 2:
        return 0.0
    return float(values.std(ddof=1) / math.sqrt(n))
