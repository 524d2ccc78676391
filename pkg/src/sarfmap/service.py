"""HTTP service wrapping the pipeline plus read-only map serving.

Endpoints:
  POST /api/map      run the full pipeline on a posted graph
  POST /api/cluster  clustering steps only (report + dendrogram text)
  POST /api/render   render a posted map document to SVG
  GET  /document     the served ``.sarfmap`` file, byte-exact
  GET  /healthz      liveness probe
  GET  /             viewer assets when a viewer directory is configured
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import HTMLResponse, JSONResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .annotate import AnnotateConfig
from .block_layout import LayoutConfig
from .pipeline import RunConfig, cluster_graph, run_pipeline
from .render import RenderOptions, SCHEMA, UnknownChannelError, render_svg
from .street_layout import StreetConfig

MAP_MEDIA_TYPE = "application/json"


class PipelineParams(BaseModel):
    penalty_a: float = Field(default=2.0, gt=0)
    balance_b: float = Field(default=0.3, gt=0)
    target_aspect: float = Field(default=1.0, gt=0)
    max_cluster_warn: int = Field(default=200, gt=0)
    contraction_epsilon: float = Field(default=0.01, ge=0)
    keywords_per_block: int = Field(default=5, ge=0)
    px_per_cell: float = Field(default=12.0, gt=0)
    fixed_height: bool = False
    kind_weights: dict[str, float] | None = None

    def to_run_config(self, bindings: list[str]) -> RunConfig:
        return RunConfig(
            layout=LayoutConfig(
                tie_penalty_a=self.penalty_a,
                balance_b=self.balance_b,
                target_aspect=self.target_aspect,
            ),
            street=StreetConfig(),
            annotate=AnnotateConfig(keywords_per_block=self.keywords_per_block),
            render=RenderOptions(px_per_cell=self.px_per_cell, fixed_height=self.fixed_height),
            bindings=tuple(bindings),
            kind_weights=self.kind_weights,
            max_cluster_warn=self.max_cluster_warn,
            contraction_epsilon=self.contraction_epsilon,
        )


class MapRequest(BaseModel):
    graph: str
    params: PipelineParams = PipelineParams()
    overlay_csv: str | None = None
    bindings: list[str] = []


class MapResponse(BaseModel):
    document: dict
    svg: str
    cluster_report: dict
    pattern_report: list
    warnings: list[str]


class ClusterRequest(BaseModel):
    graph: str
    params: PipelineParams = PipelineParams()


class ClusterResponse(BaseModel):
    report: dict
    dendrogram: str


class RenderRequest(BaseModel):
    document: dict
    px_per_cell: float = Field(default=12.0, gt=0)
    fixed_height: bool = False
    color_channel: str | None = None


class RenderResponse(BaseModel):
    svg: str


def create_app(
    document_path: str | Path | None = None,
    viewer_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="sarfmap", version="0.1.0")

    @app.exception_handler(ValueError)
    async def value_error_handler(_request, exc: ValueError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok", "schema": SCHEMA}

    @app.post("/api/map", response_model=MapResponse)
    def api_map(request: MapRequest) -> MapResponse:
        config = request.params.to_run_config(request.bindings)
        result = run_pipeline(request.graph, config, overlay_csv=request.overlay_csv)
        return MapResponse(
            document=result.document,
            svg=result.svg,
            cluster_report=result.cluster_report,
            pattern_report=result.pattern_report,
            warnings=result.warnings,
        )

    @app.post("/api/cluster", response_model=ClusterResponse)
    def api_cluster(request: ClusterRequest) -> ClusterResponse:
        config = request.params.to_run_config([])
        result = cluster_graph(request.graph, config)
        return ClusterResponse(report=result.report, dendrogram=result.dendrogram_text)

    @app.post("/api/render", response_model=RenderResponse)
    def api_render(request: RenderRequest) -> RenderResponse:
        if request.document.get("schema") != SCHEMA:
            raise HTTPException(status_code=400, detail=f"not a {SCHEMA} document")
        options = RenderOptions(
            px_per_cell=request.px_per_cell,
            fixed_height=request.fixed_height,
            color_channel=request.color_channel,
        )
        try:
            svg = render_svg(request.document, options)
        except UnknownChannelError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return RenderResponse(svg=svg)

    if document_path is not None:
        doc_path = Path(document_path)

        @app.get("/document")
        def get_document() -> Response:
            if not doc_path.exists():
                raise HTTPException(status_code=404, detail="document not found")
            return Response(content=doc_path.read_bytes(), media_type=MAP_MEDIA_TYPE)

    if viewer_dir is not None and Path(viewer_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(viewer_dir), html=True), name="viewer")
    elif document_path is not None:

        @app.get("/", response_class=HTMLResponse)
        def index() -> str:
            return (
                "<!doctype html><title>sarfmap</title>"
                "<p>Map document served at <a href='/document'>/document</a>.</p>"
                "<p>No viewer assets configured; start with --viewer to mount them.</p>"
            )

    return app
