"""Command line interface: map, cluster, render, serve.

All heavy lifting happens behind the service API; the CLI reads files,
posts them (in-process unless --server points at a remote instance) and
writes the results.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .canon import canonical_dumps
from .client import MapServiceClient, ServiceError
from .render import parse_map_document


def _client(server: str | None) -> MapServiceClient:
    return MapServiceClient(base_url=server)


def _params(penalty_a, balance_b, max_cluster_warn, kind_weights=()) -> dict:
    params = {
        "penalty_a": penalty_a,
        "balance_b": balance_b,
        "max_cluster_warn": max_cluster_warn,
    }
    if kind_weights:
        parsed = {}
        for spec in kind_weights:
            if "=" not in spec:
                raise click.ClickException(f"--kind-weight {spec!r} must look like kind=multiplier")
            kind, _, value = spec.partition("=")
            try:
                parsed[kind.strip()] = float(value)
            except ValueError:
                raise click.ClickException(f"--kind-weight {spec!r}: not a number") from None
        params["kind_weights"] = parsed
    return params


@click.group()
def main() -> None:
    """Deterministic city maps of software dependency graphs."""


@main.command("map")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out-map", type=click.Path(dir_okay=False), default=None, help="Output .sarfmap path")
@click.option("--out-svg", type=click.Path(dir_okay=False), default=None, help="Output SVG path")
@click.option("--overlay", "overlays", multiple=True, type=click.Path(exists=True, dir_okay=False),
              help="Overlay CSV (class_id,channel,value); repeatable")
@click.option("--bind", "bindings", multiple=True,
              help="channel=attribute[:sqrt] binding; repeatable")
@click.option("--penalty-a", type=float, default=2.0, show_default=True)
@click.option("--balance-b", type=float, default=0.3, show_default=True)
@click.option("--max-cluster-warn", type=int, default=200, show_default=True)
@click.option("--kind-weight", "kind_weights", multiple=True,
              help="Per-dependency-kind multiplier, e.g. inheritance=2.0; repeatable")
@click.option("--verbose", "-v", is_flag=True, default=False)
@click.option("--server", default=None, help="Base URL of a running service (in-process if unset)")
def map_command(input_path, out_map, out_svg, overlays, bindings, penalty_a, balance_b,
                max_cluster_warn, kind_weights, verbose, server) -> None:
    """Run the full pipeline on a graph file."""
    graph_text = Path(input_path).read_text(encoding="utf-8")
    overlay_csv = None
    if overlays:
        overlay_csv = "\n".join(Path(p).read_text(encoding="utf-8") for p in overlays)
    try:
        result = _client(server).make_map(
            graph_text,
            params=_params(penalty_a, balance_b, max_cluster_warn, kind_weights),
            overlay_csv=overlay_csv,
            bindings=list(bindings),
        )
    except (ServiceError, ValueError) as exc:
        raise click.ClickException(str(exc)) from exc

    if out_map:
        Path(out_map).write_bytes((canonical_dumps(result["document"]) + "\n").encode("utf-8"))
        click.echo(f"wrote {out_map}")
    if out_svg:
        Path(out_svg).write_text(result["svg"], encoding="utf-8")
        click.echo(f"wrote {out_svg}")

    report = result["cluster_report"]
    click.echo(
        f"classes: {report['class_count']}  clusters: {report['cluster_count']}  "
        f"q: {report['q']:.6f}"
    )
    for entry in result["pattern_report"]:
        packages = ", ".join(entry["dominant_packages"])
        click.echo(f"block {entry['block']}: {entry['pattern']} ({packages})")
    if verbose:
        reports = result["document"].get("reports", {})
        history = ", ".join(f"{e:.1f}" for e in reports.get("energy_history", []))
        click.echo(f"street energy passes: [{history}]")
        for cluster in report["clusters"]:
            click.echo(f"cluster {cluster['id']} ({cluster['size']}): "
                       f"{' '.join(cluster['classes'])}")
    for warning in result["warnings"]:
        click.echo(f"warning: {warning}", err=True)


@main.command("cluster")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--dendrogram/--no-dendrogram", "show_dendrogram", default=False,
              help="Print the merge tree in nested-list form")
@click.option("--server", default=None)
def cluster_command(input_path, show_dendrogram, server) -> None:
    """Cluster a graph and report the features found."""
    graph_text = Path(input_path).read_text(encoding="utf-8")
    try:
        result = _client(server).cluster(graph_text)
    except (ServiceError, ValueError) as exc:
        raise click.ClickException(str(exc)) from exc
    report = result["report"]
    click.echo(f"classes: {report['class_count']}  clusters: {report['cluster_count']}  "
               f"q: {report['q']:.6f}")
    for cluster in report["clusters"]:
        click.echo(f"cluster {cluster['id']} ({cluster['size']}): {' '.join(cluster['classes'])}")
    if show_dendrogram:
        click.echo(result["dendrogram"])


@main.command("render")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="A .sarfmap document")
@click.option("--out-svg", required=True, type=click.Path(dir_okay=False))
@click.option("--px-per-cell", type=float, default=12.0, show_default=True)
@click.option("--fixed-height", is_flag=True, default=False)
@click.option("--color-channel", default=None, help="Colorize by this overlay channel")
@click.option("--server", default=None)
def render_command(input_path, out_svg, px_per_cell, fixed_height, color_channel, server) -> None:
    """Render an existing map document to SVG."""
    try:
        document = parse_map_document(Path(input_path).read_bytes())
        svg = _client(server).render(
            document, px_per_cell=px_per_cell, fixed_height=fixed_height,
            color_channel=color_channel,
        )
    except (ServiceError, ValueError) as exc:
        raise click.ClickException(str(exc)) from exc
    Path(out_svg).write_text(svg, encoding="utf-8")
    click.echo(f"wrote {out_svg}")


@main.command("serve")
@click.option("--doc", "doc_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="The .sarfmap document to serve")
@click.option("--viewer", "viewer_dir", type=click.Path(file_okay=False), default=None,
              help="Directory of built viewer assets to mount at /")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8173, show_default=True)
def serve_command(doc_path, viewer_dir, host, port) -> None:
    """Serve a map document (and viewer) over HTTP."""
    import uvicorn

    from .service import create_app

    app = create_app(document_path=doc_path, viewer_dir=viewer_dir)
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except OSError as exc:  # port already bound
        click.echo(f"error: cannot bind {host}:{port}: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
