"""HTTP service wrapping the core procedures.

Run with ``uvicorn treefdr.service:app``. Endpoints mirror the CLI
subcommands: POST /test, POST /critvalues, POST /simulate, plus GET /health.
Input problems surface as 400 with a detail message; malformed request
bodies get FastAPI's usual 422.
"""

from __future__ import annotations

from dataclasses import replace

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .critical import HIERARCHICAL_KINDS, ProcedureKind, critical_functions_for, parse_procedure
from .errors import ValidationError
from .hierarchy import build_hierarchy
from .io import parent_array_from_pairs
from .procedures import DEFAULT_YEKUTIELI_CORRECTION, run_procedure
from .simulate import SimConfig, TreeSpec, estimate_fdr_power, preset_config

app = FastAPI(title="treefdr", description="Hierarchical FDR-controlling multiple testing")


class TreeNode(BaseModel):
    node_id: int
    parent_id: int


class NodePValue(BaseModel):
    node_id: int
    p: float


class TestRequest(BaseModel):
    tree: list[TreeNode]
    pvalues: list[NodePValue]
    procedure: str = "posdep"
    alpha: float = 0.05
    order: int | None = None
    yekutieli_constant: float = DEFAULT_YEKUTIELI_CORRECTION


class FamilyCount(BaseModel):
    depth: int
    R: int


class NodeOutcome(BaseModel):
    id: int
    p: float
    threshold: float
    rejected: bool


class TestResponse(BaseModel):
    procedure: str
    alpha: float
    total_rejections: int
    families: list[FamilyCount]
    nodes: list[NodeOutcome]


class CritValuesRequest(BaseModel):
    tree: list[TreeNode]
    procedure: str = "posdep"
    alpha: float = 0.05
    r_min: int = 1
    r_max: int | None = None


class CritValuesRow(BaseModel):
    node_id: int
    depth: int
    thresholds: list[float]


class CritValuesResponse(BaseModel):
    r_values: list[int]
    rows: list[CritValuesRow]


class SimulateRequest(BaseModel):
    preset: str | None = None
    roots: int | None = None
    fanout: int | None = None
    depth: int | None = None
    mu: list[float] | None = None
    pi0: float = 0.5
    rho: float = 0.0
    alpha: float = 0.05
    replications: int = Field(default=100, ge=1)
    seed: int = 0
    procedures: list[str] | None = None
    workers: int = 1
    yekutieli_constant: float = DEFAULT_YEKUTIELI_CORRECTION


class SimulateRow(BaseModel):
    procedure: str
    pi0: float
    rho: float
    fdr: float
    fdr_se: float
    power: float
    power_se: float
    n: int


class SimulateResponse(BaseModel):
    rows: list[SimulateRow]


def _hierarchy_from(nodes: list[TreeNode]):
    try:
        return build_hierarchy(parent_array_from_pairs((n.node_id, n.parent_id) for n in nodes))
    except ValidationError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


@app.get("/health")
def health() -> dict:
    return {"status": "ok"}


@app.post("/test", response_model=TestResponse)
def test_endpoint(req: TestRequest) -> TestResponse:
    h = _hierarchy_from(req.tree)
    try:
        kind = parse_procedure(req.procedure)
        pmap = {}
        for entry in req.pvalues:
            if entry.node_id in pmap:
                raise ValidationError(f"duplicate p-value for node {entry.node_id}")
            pmap[entry.node_id] = entry.p
        result = run_procedure(
            pmap,
            h,
            kind,
            req.alpha,
            order=req.order,
            yekutieli_correction=req.yekutieli_constant,
        )
    except ValidationError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    return TestResponse(**result.to_dict())


@app.post("/critvalues", response_model=CritValuesResponse)
def critvalues_endpoint(req: CritValuesRequest) -> CritValuesResponse:
    h = _hierarchy_from(req.tree)
    try:
        kind = parse_procedure(req.procedure)
        if kind not in HIERARCHICAL_KINDS and kind is not ProcedureKind.MEINSHAUSEN:
            raise ValidationError(f"procedure {kind.value!r} has no per-node critical value table")
        r_max = h.m if req.r_max is None else req.r_max
        if not 0 <= req.r_min <= r_max <= h.m + 1:
            raise ValidationError(f"r range {req.r_min}..{r_max} invalid for a tree of {h.m} nodes")
        cf = critical_functions_for(kind, h, req.alpha)
        r_values = list(range(req.r_min, r_max + 1))
        columns = [cf.thresholds(r) for r in r_values]
    except ValidationError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    rows = [
        CritValuesRow(
            node_id=i + 1,
            depth=int(h.depth[i]),
            thresholds=[float(col[i]) for col in columns],
        )
        for i in range(h.m)
    ]
    return CritValuesResponse(r_values=r_values, rows=rows)


@app.post("/simulate", response_model=SimulateResponse)
def simulate_endpoint(req: SimulateRequest) -> SimulateResponse:
    try:
        if req.preset is not None:
            if any(v is not None for v in (req.roots, req.fanout, req.depth)):
                raise ValidationError("give either preset or roots/fanout/depth, not both")
            cfg = preset_config(req.preset)
        else:
            if None in (req.roots, req.fanout, req.depth) or req.mu is None:
                raise ValidationError("custom trees need roots, fanout, depth, and mu")
            cfg = SimConfig(
                tree=TreeSpec(roots=req.roots, fanout=req.fanout, depth=req.depth),
                pi0=req.pi0,
                rho=req.rho,
                mu_by_depth=tuple(req.mu),
            )
        cfg = replace(
            cfg,
            pi0=req.pi0,
            rho=req.rho,
            alpha=req.alpha,
            replications=req.replications,
            seed=req.seed,
            yekutieli_correction=req.yekutieli_constant,
            mu_by_depth=tuple(req.mu) if req.mu is not None else cfg.mu_by_depth,
        )
        kinds = (
            tuple(parse_procedure(t) for t in req.procedures)
            if req.procedures
            else None
        )
        result = estimate_fdr_power(
            cfg,
            kinds=kinds if kinds is not None else tuple(ProcedureKind),
            workers=req.workers,
        )
    except ValidationError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    rows = [
        SimulateRow(
            procedure=s.procedure.value,
            pi0=cfg.pi0,
            rho=cfg.rho,
            fdr=s.fdr,
            fdr_se=s.fdr_se,
            power=s.power,
            power_se=s.power_se,
            n=cfg.replications,
        )
        for s in result.stats
    ]
    return SimulateResponse(rows=rows)
