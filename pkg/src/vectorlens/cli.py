"""Operator CLI: ingest corpora, search, walk, snapshot/restore, serve.

Runs as a thin HTTP client against a service (VL_ENDPOINT) or fully
in-process with --local SNAPSHOT, where the snapshot file doubles as the
persistent store. --json output is byte-identical to the service response
body in both modes.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import click
import requests

from . import service as service_mod
from . import wire
from .config import DEFAULT_ENDPOINT, load_settings
from .errors import VectorLensError
from .runtime import Runtime


@dataclass
class CliContext:
    endpoint: str
    runtime: Runtime | None = None
    local_path: str | None = None


@click.group()
@click.option("--endpoint", envvar="VL_ENDPOINT", default=DEFAULT_ENDPOINT, show_default=True)
@click.option(
    "--local",
    "local_path",
    type=click.Path(),
    default=None,
    help="Run in-process against this snapshot file instead of a service.",
)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.pass_context
def main(ctx: click.Context, endpoint: str, local_path: str | None, config_path: str | None):
    """Vector search and recommendation engine tooling."""
    runtime = None
    if local_path is not None:
        settings = load_settings(config_path)
        runtime = Runtime(settings)
        if os.path.exists(local_path):
            runtime.index.restore(local_path)
    ctx.obj = CliContext(endpoint=endpoint, runtime=runtime, local_path=local_path)


def _local(ctx: CliContext) -> bool:
    return ctx.runtime is not None


def _local_call(fn) -> str:
    try:
        return wire.dumps(fn())
    except VectorLensError as exc:
        code, _ = service_mod.classify_error(exc)
        raise click.ClickException(f"{code}: {exc}") from exc


def _remote_call(ctx: CliContext, method: str, path: str, **kwargs) -> str:
    url = ctx.endpoint.rstrip("/") + path
    try:
        resp = requests.request(method, url, timeout=60, **kwargs)
    except requests.RequestException as exc:
        raise click.ClickException(f"cannot reach service at {url}: {exc}") from exc
    if resp.status_code >= 400:
        try:
            body = resp.json()
            raise click.ClickException(f"{body.get('code', 'error')}: {body.get('message', '')}")
        except ValueError:
            raise click.ClickException(f"HTTP {resp.status_code} from {url}") from None
    return resp.text


def _persist(ctx: CliContext) -> None:
    if ctx.runtime is not None and ctx.local_path is not None:
        ctx.runtime.index.snapshot(ctx.local_path)


def _parse_weighted(raw: str, what: str) -> tuple[str, float]:
    """Split 'text:weight' on the LAST colon; text itself may contain colons."""
    text, sep, weight = raw.rpartition(":")
    if not sep or not text:
        raise click.UsageError(
            f'bad {what} syntax {raw!r}; expected "text:weight", e.g. "dining chair:1.0"'
        )
    try:
        return text, float(weight)
    except ValueError:
        raise click.UsageError(
            f'bad {what} weight in {raw!r}; expected "text:weight", e.g. "dining chair:1.0"'
        ) from None


def _parse_filters(pairs: tuple[str, ...]) -> dict[str, str] | None:
    if not pairs:
        return None
    out = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep or not key:
            raise click.UsageError(f'bad filter {pair!r}; expected "key=value"')
        out[key] = value
    return out


@main.command()
@click.argument("file", type=click.Path(exists=True))
@click.option("--embed-missing", is_flag=True, default=False)
@click.option("--json", "as_json", is_flag=True, default=False)
@click.pass_obj
def ingest(ctx: CliContext, file: str, embed_missing: bool, as_json: bool):
    """Ingest a JSONL corpus file."""
    if _local(ctx):
        text = _local_call(
            lambda: ctx.runtime.ingest_payload(
                _file_records(file), embed_missing=embed_missing
            )
        )
        _persist(ctx)
    else:
        with open(file, "rb") as fh:
            body = fh.read()
        text = _remote_call(
            ctx,
            "POST",
            f"/v1/documents?embed_missing={int(embed_missing)}",
            data=body,
            headers={"Content-Type": "application/x-ndjson"},
        )
    if as_json:
        click.echo(text)
        return
    import json as _json

    report = _json.loads(text)
    click.echo(f"ingested={report['ingested']} skipped={report['skipped']}")
    for err in report["errors"]:
        click.echo(f"  line {err['line']}: {err['error']}", err=True)


def _file_records(path: str):
    import json as _json

    from .index import BadLine

    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                yield lineno, _json.loads(line)
            except _json.JSONDecodeError as exc:
                yield lineno, BadLine(str(exc))


@main.command()
@click.option("--term", "terms", multiple=True, help='Positive term as "text:weight".')
@click.option("--less", "less_terms", multiple=True, help='Negative term as "text:weight".')
@click.option("--template", default=None)
@click.option("--context", "contexts", multiple=True, help='Context doc as "DOC_ID:weight".')
@click.option("--demote-quality", is_flag=True, default=False)
@click.option("-k", "k", type=int, default=20, show_default=True)
@click.option("--filter", "filters", multiple=True, help='Metadata equality "key=value".')
@click.option("--debug", is_flag=True, default=False, help="Include the compile trace.")
@click.option("--json", "as_json", is_flag=True, default=False)
@click.pass_obj
def search(
    ctx: CliContext,
    terms: tuple[str, ...],
    less_terms: tuple[str, ...],
    template: str | None,
    contexts: tuple[str, ...],
    demote_quality: bool,
    k: int,
    filters: tuple[str, ...],
    debug: bool,
    as_json: bool,
):
    """Run a composed search; at least one --term is required."""
    if not terms:
        raise click.UsageError('at least one --term "text:weight" is required')
    spec: dict = {
        "terms": [
            {"text": text, "weight": weight, "polarity": "more"}
            for text, weight in (_parse_weighted(t, "--term") for t in terms)
        ]
        + [
            {"text": text, "weight": weight, "polarity": "less"}
            for text, weight in (_parse_weighted(t, "--less") for t in less_terms)
        ],
        "template": template,
        "context_items": [
            {"doc_id": doc_id, "weight": weight}
            for doc_id, weight in (_parse_weighted(c, "--context") for c in contexts)
        ],
        "demote_quality": demote_quality,
        "demote_weight": None,
        "k": k,
        "filter": _parse_filters(filters),
    }
    if _local(ctx):
        text = _local_call(lambda: ctx.runtime.search_payload(spec, debug=debug))
    else:
        text = _remote_call(ctx, "POST", f"/v1/search?debug={int(debug)}", json=spec)
    if as_json:
        click.echo(text)
        return
    import json as _json

    payload = _json.loads(text)
    if not payload["hits"]:
        click.echo("no hits")
        return
    click.echo(f"{'rank':>4}  {'score':>9}  id")
    for hit in payload["hits"]:
        click.echo(f"{hit['rank']:>4}  {hit['score']:>9.5f}  {hit['id']}")


@main.command()
@click.option("--start", "start_doc", default=None, help="Start from this document id.")
@click.option("--query", "query_text", default=None, help="Start from a compiled text query.")
@click.option("--layers", type=int, default=None)
@click.option("--children", type=int, default=None)
@click.option("--neighbours", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option(
    "--format",
    "fmt",
    type=click.Choice(["tree", "flat", "json"]),
    default="tree",
    show_default=True,
)
@click.pass_obj
def walk(
    ctx: CliContext,
    start_doc: str | None,
    query_text: str | None,
    layers: int | None,
    children: int | None,
    neighbours: int | None,
    seed: int | None,
    fmt: str,
):
    """Generate a recommendation tree by a seeded random walk."""
    if (start_doc is None) == (query_text is None):
        raise click.UsageError("exactly one of --start DOC or --query TEXT is required")
    start: dict = (
        {"doc_id": start_doc}
        if start_doc is not None
        else {"query_spec": {"terms": [{"text": query_text, "weight": 1.0, "polarity": "more"}]}}
    )
    params = {
        key: value
        for key, value in (
            ("layers", layers),
            ("children", children),
            ("neighbours", neighbours),
            ("seed", seed),
        )
        if value is not None
    }
    if _local(ctx):
        walk_params = wire.walk_params_from_dict(params, ctx.runtime.settings.walk_params())
        text = _local_call(lambda: ctx.runtime.walk_payload(start, walk_params))
    else:
        text = _remote_call(ctx, "POST", "/v1/walk", json={"start": start, "params": params})
    if fmt == "json":
        click.echo(text)
        return
    import json as _json

    tree = _json.loads(text)["tree"]
    if fmt == "flat":
        queue = list(tree["children"])
        while queue:
            node = queue.pop(0)
            click.echo(node["doc_id"])
            queue.extend(node["children"])
        return
    click.echo(tree["doc_id"] if tree["doc_id"] is not None else "(query)")
    _render_tree(tree["children"], prefix="")


def _render_tree(nodes: list, prefix: str) -> None:
    for i, node in enumerate(nodes):
        last = i == len(nodes) - 1
        click.echo(f"{prefix}{'└── ' if last else '├── '}{node['doc_id']}")
        _render_tree(node["children"], prefix + ("    " if last else "│   "))


@main.command()
@click.argument("out", type=click.Path())
@click.pass_obj
def snapshot(ctx: CliContext, out: str):
    """Write the full index to a JSONL snapshot (sorted by id)."""
    if _local(ctx):
        text = _local_call(lambda: ctx.runtime.snapshot_payload(out))
    else:
        text = _remote_call(ctx, "POST", "/v1/admin/snapshot", json={"path": out})
    import json as _json

    click.echo(f"wrote {_json.loads(text)['written']} documents to {out}")


@main.command()
@click.argument("src", type=click.Path())
@click.pass_obj
def restore(ctx: CliContext, src: str):
    """Replace index contents from a snapshot file."""
    if _local(ctx):
        text = _local_call(lambda: ctx.runtime.restore_payload(src))
        _persist(ctx)
    else:
        text = _remote_call(ctx, "POST", "/v1/admin/restore", json={"path": src})
    import json as _json

    click.echo(f"restored {_json.loads(text)['restored']} documents from {src}")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--snapshot", "snapshot_path", type=click.Path(exists=True), default=None)
def serve(config_path: str | None, snapshot_path: str | None):
    """Run the HTTP service."""
    settings = load_settings(config_path)
    from .service import create_app

    app = create_app(settings)
    if snapshot_path is not None:
        app.state.runtime.index.restore(snapshot_path)
    import uvicorn

    host, port = settings.bind_address()
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
