"""Command-line front end.

The CLI is a thin client over the service API. By default it talks to an
in-process instance of the app through an ASGI transport (no network, no
server to start); `--server URL` points it at a running instance instead.

Exit codes: 0 success; 2 bad input (manifests, images, config); 3 detection
finished but at least one blob was declared a new object; 4 database
fingerprint mismatch; 5 corrupt or wrong-version database; 1 anything else.
"""
from __future__ import annotations

import argparse
import asyncio
import json
import sys

import httpx

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BAD_INPUT = 2
EXIT_NEW_OBJECT = 3
EXIT_FINGERPRINT = 4
EXIT_CORRUPT = 5

_CODE_EXITS = {
    "label_mismatch": EXIT_BAD_INPUT,
    "bad_image": EXIT_BAD_INPUT,
    "bad_config": EXIT_BAD_INPUT,
    "not_found": EXIT_BAD_INPUT,
    "fingerprint_mismatch": EXIT_FINGERPRINT,
    "db_corrupt": EXIT_CORRUPT,
    "db_version": EXIT_CORRUPT,
}


class ServiceClient:
    def __init__(self, server: str | None = None):
        self.server = server

    def request(self, method: str, path: str, **kwargs) -> httpx.Response:
        if self.server:
            with httpx.Client(base_url=self.server, timeout=600.0) as client:
                return client.request(method, path, **kwargs)

        from .service.app import create_app

        async def _go():
            transport = httpx.ASGITransport(app=create_app())
            async with httpx.AsyncClient(
                transport=transport, base_url="http://shape-gate", timeout=600.0
            ) as client:
                return await client.request(method, path, **kwargs)

        return asyncio.run(_go())


def _fail(response: httpx.Response) -> int:
    try:
        body = response.json()
        code = body.get("code", "")
        message = body.get("message", response.text)
    except ValueError:
        code, message = "", response.text
    print(f"error: {message}", file=sys.stderr)
    return _CODE_EXITS.get(code, EXIT_ERROR)


def cmd_train(args, client: ServiceClient) -> int:
    resp = client.request(
        "POST",
        "/train",
        json={
            "db_path": args.db,
            "manifests": args.manifests,
            "config_path": args.config,
        },
    )
    if resp.status_code != 200:
        return _fail(resp)
    body = resp.json()
    for scene in body["scenes"]:
        print(f"trained {scene['scene']}: {scene['blobs_found']} blobs")
        for row in scene["rows"]:
            marker = "new cluster" if row["created_new_cluster"] else "existing"
            print(
                f"  {row['label']}: shape={row['shape']} "
                f"window={row['window_index']}/{row['window_side']}px "
                f"cluster={row['cluster_id']} ({marker})"
            )
    print(
        f"db saved to {body['db_path']} "
        f"({body['clusters']} clusters, {body['members']} members)"
    )
    return EXIT_OK


def cmd_detect(args, client: ServiceClient) -> int:
    resp = client.request(
        "POST",
        "/detect",
        json={
            "db_path": args.db,
            "image_path": args.image,
            "tau": args.tau,
            "slack": args.slack,
            "exhaustive": args.exhaustive,
            "threads": args.threads,
            "config_path": args.config,
        },
    )
    if resp.status_code != 200:
        return _fail(resp)
    body = resp.json()
    for r in body["results"]:
        if args.json:
            print(json.dumps(r, separators=(",", ":")))
        elif r["outcome"] == "detected":
            print(
                f"blob {r['blob']}: detected label={r['label']} "
                f"distance={r['distance']:.6f} shape={r['shape']} "
                f"window={r['window']}/{r['window_side']}px "
                f"visited={r['clusters_visited']} compared={r['members_compared']}"
            )
        else:
            print(
                f"blob {r['blob']}: new_object reason={r['reason']} "
                f"shape={r['shape']} window={r['window']}/{r['window_side']}px "
                f"compared={r['members_compared']}"
            )
    return EXIT_OK if body["all_detected"] else EXIT_NEW_OBJECT


def cmd_bench(args, client: ServiceClient) -> int:
    resp = client.request(
        "POST",
        "/bench",
        json={
            "db_path": args.db,
            "queries_path": args.queries,
            "repeats": args.repeats,
            "tau": args.tau,
            "slack": args.slack,
            "config_path": args.config,
        },
    )
    if resp.status_code != 200:
        return _fail(resp)
    body = resp.json()
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write("mode,run,query,ns,comparisons,outcome\n")
            for row in body["rows"]:
                fh.write(
                    f"{row['mode']},{row['run']},{row['query']},{row['ns']},"
                    f"{row['comparisons']},{row['outcome']}\n"
                )
        print(f"csv written to {args.csv} ({len(body['rows'])} rows)")
    print(
        f"db members: {body['db_members']}, queries: {body['query_count']}, "
        f"repeats: {body['repeats']} (plus 1 warmup)"
    )
    for mode in ("gated", "exhaustive"):
        m = body[mode]
        print(
            f"{mode}: total {m['total_ns']} ns, "
            f"comparisons {m['total_comparisons']}, "
            f"median/query {m['median_query_ns']:.0f} ns"
        )
    print(
        f"speedup: time x{body['speedup_time']:.2f}, "
        f"comparisons x{body['speedup_comparisons']:.2f}"
    )
    return EXIT_OK


def cmd_db_stats(args, client: ServiceClient) -> int:
    resp = client.request("GET", "/db/stats", params={"db_path": args.db})
    if resp.status_code != 200:
        return _fail(resp)
    body = resp.json()
    if not body["clusters"]:
        print("0 clusters")
    for c in body["clusters"]:
        print(
            f"cluster {c['id']}: shape={c['shape']} "
            f"window={c['window_index']}/{c['window_side']}px "
            f"count={c['count']} mean-norm={c['mean_norm']:.4f}"
        )
    print(f"total members: {body['total_members']}")
    print(f"index consistency: {'OK' if body['consistent'] else 'BROKEN'}")
    return EXIT_OK if body["consistent"] else EXIT_CORRUPT


def cmd_gen_corpus(args, client: ServiceClient) -> int:
    resp = client.request(
        "POST",
        "/corpus/generate",
        json={
            "out_dir": args.out_dir,
            "seed": args.seed,
            "per_class": args.per_class,
            "classes": args.classes.split(",") if args.classes else None,
            "noise_rate": args.noise,
            "window_side": args.window_side,
        },
    )
    if resp.status_code != 200:
        return _fail(resp)
    body = resp.json()
    print(
        f"wrote {body['scenes']} scenes and {body['manifests']} manifests "
        f"to {body['out_dir']}"
    )
    return EXIT_OK


def cmd_serve(args, client: ServiceClient) -> int:
    try:
        import uvicorn
    except ImportError:
        print("error: serving needs the 'serve' extra (pip install shape-gate[serve])",
              file=sys.stderr)
        return EXIT_ERROR
    from .service.app import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shape-gate",
        description="Shape and scale gated object detection engine.",
    )
    parser.add_argument("--config", default=None, help="engine config TOML")
    parser.add_argument(
        "--server", default=None, help="URL of a running service (default: in-process)"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train scenes into a cluster database")
    p.add_argument("db", help="database file (created if missing)")
    p.add_argument("manifests", nargs="+", help="scene manifest files")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("detect", help="detect objects in one scene")
    p.add_argument("db")
    p.add_argument("image")
    p.add_argument("--tau", type=float, default=None, help="distance threshold")
    p.add_argument("--slack", type=int, default=None, help="window slack")
    p.add_argument("--exhaustive", action="store_true", help="scan the whole db")
    p.add_argument("--json", action="store_true", help="JSON lines output")
    p.add_argument(
        "--threads", type=int, default=1,
        help="process blobs concurrently (detection only, never benchmarks)",
    )
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("bench", help="time gated vs exhaustive search")
    p.add_argument("db")
    p.add_argument("queries", help="file listing query scene images")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--slack", type=int, default=None)
    p.add_argument("--csv", default=None, help="write per-sample rows here")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("db-stats", help="print cluster table and consistency")
    p.add_argument("db")
    p.set_defaults(func=cmd_db_stats)

    p = sub.add_parser("gen-corpus", help="generate a synthetic shape corpus")
    p.add_argument("out_dir")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--per-class", type=int, default=10)
    p.add_argument("--noise", type=float, default=0.0, help="salt-and-pepper rate")
    p.add_argument("--classes", default=None, help="comma list, e.g. circle,square")
    p.add_argument(
        "--window-side", type=int, default=None,
        help="fit every shape into this scale window (benchmark corpora)",
    )
    p.set_defaults(func=cmd_gen_corpus)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    client = ServiceClient(server=args.server)
    try:
        return args.func(args, client)
    except httpx.HTTPError as exc:
        print(f"error: cannot reach service: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
