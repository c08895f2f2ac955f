"""Command line client.

Requests go to the HTTP service when ``--server`` (or ``BUSYTIME_SERVER``)
is set; otherwise the same handlers run in-process.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional

from pydantic import BaseModel

from busytime import service
from busytime.errors import BusyTimeError
from busytime.harness import ExperimentConfig

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 3


class RemoteError(Exception):
    pass


class Client:
    def __init__(self, server: Optional[str]):
        self.server = server.rstrip("/") if server else None

    def call(self, endpoint: str, req: BaseModel, handler, response_model):
        if self.server is None:
            return handler(req)
        import httpx

        resp = httpx.post(f"{self.server}/{endpoint}", json=req.model_dump(mode="json", by_alias=True), timeout=None)
        if resp.status_code != 200:
            raise RemoteError(resp.text)
        return response_model.model_validate(resp.json())


def _read_json(path: str):
    return json.loads(Path(path).read_text())


def _dump(obj) -> None:
    if isinstance(obj, BaseModel):
        obj = obj.model_dump(mode="json", by_alias=True, exclude_none=True)
    print(json.dumps(obj, indent=2, sort_keys=True))


def _write_trace(path: Optional[str], records) -> None:
    if path and records is not None:
        with open(path, "w") as fh:
            for rec in records:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")


def cmd_run(args, client: Client) -> int:
    if args.config:
        config = ExperimentConfig.model_validate(_read_json(args.config))
        if args.output:
            config = config.model_copy(update={"output": args.output})
        resp = client.call("run", config, service.handle_run, service.RunResponse)
        if config.output:
            Path(config.output).write_text(resp.csv)
        else:
            sys.stdout.write(resp.csv)
        return EXIT_OK
    if not (args.instance and args.algo):
        print("run needs --config, or --instance with --algo", file=sys.stderr)
        return EXIT_ERROR
    req = service.SimulateRequest(instance=_read_json(args.instance), algo=args.algo, trace=bool(args.trace))
    resp = client.call("simulate", req, service.handle_simulate, service.SimulateResponse)
    _write_trace(args.trace, resp.trace)
    resp.trace = None
    _dump(resp.schedule)
    return EXIT_OK


def cmd_oracle(args, client: Client) -> int:
    req = service.OracleRequest(instance=_read_json(args.instance), g=args.g, cap=args.cap, kind=args.kind)
    _dump(client.call("oracle", req, service.handle_oracle, service.OracleResponse))
    return EXIT_OK


def cmd_adversary(args, client: Client) -> int:
    req = service.AdversaryRequest(
        type=args.type, algo=args.algo, k=args.k, epsilon=args.epsilon, alpha=args.alpha,
        lookahead=args.lookahead, oracle=args.oracle, trace=bool(args.trace),
    )
    resp = client.call("adversary", req, service.handle_adversary, service.AdversaryResponse)
    _write_trace(args.trace, resp.trace)
    resp.trace = None
    _dump(resp)
    return EXIT_OK


def cmd_gen(args, client: Client) -> int:
    req = service.GenRequest.model_validate({
        "seed": args.seed, "n": args.n, "class": args.cls, "g": args.g, "horizon": args.horizon,
        "denominator": args.denominator, "max_p": args.max_p, "lookahead": args.lookahead,
    })
    resp = client.call("gen", req, service.handle_gen, service.InstanceModel)
    if args.out:
        Path(args.out).write_text(json.dumps(resp.model_dump(mode="json"), indent=2) + "\n")
    else:
        _dump(resp)
    return EXIT_OK


def cmd_validate(args, client: Client) -> int:
    req = service.ValidateRequest(instance=_read_json(args.instance), schedule=_read_json(args.schedule))
    resp = client.call("validate", req, service.handle_validate, service.ValidateResponse)
    _dump(resp)
    return EXIT_OK if resp.feasible and resp.claimed_busy_time_ok is not False else EXIT_INFEASIBLE


def cmd_serve(args, client: Client) -> int:
    import uvicorn

    uvicorn.run(service.app, host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="busytime", description="Online busy-time scheduling toolkit")
    p.add_argument("--server", default=os.environ.get("BUSYTIME_SERVER"),
                   help="service URL; default runs in-process")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment config, or one algorithm on one instance")
    run.add_argument("--config")
    run.add_argument("--output", help="CSV path (overrides config)")
    run.add_argument("--instance")
    run.add_argument("--algo")
    run.add_argument("--trace", help="write engine trace as JSON lines")
    run.set_defaults(func=cmd_run)

    orc = sub.add_parser("oracle", help="exact offline optimum with witness")
    orc.add_argument("--instance", required=True)
    orc.add_argument("--g")
    orc.add_argument("--cap", type=int)
    orc.add_argument("--kind", default="auto", choices=["auto", "unbounded", "bounded", "agreeable", "grid"])
    orc.set_defaults(func=cmd_oracle)

    adv = sub.add_parser("adversary", help="play an adaptive adversary against an algorithm")
    adv.add_argument("--type", required=True, choices=["thm1", "lemma5"])
    adv.add_argument("--algo", required=True)
    adv.add_argument("--k", type=int, default=20)
    adv.add_argument("--epsilon")
    adv.add_argument("--alpha")
    adv.add_argument("--lookahead", default="0")
    adv.add_argument("--oracle", default="exact", choices=["exact", "bounds"])
    adv.add_argument("--trace")
    adv.set_defaults(func=cmd_adversary)

    gen = sub.add_parser("gen", help="generate a random instance")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--n", type=int, default=5)
    gen.add_argument("--class", dest="cls", default="arbitrary",
                     choices=["uniform", "agreeable", "arbitrary", "rigid"])
    gen.add_argument("--g", default="inf")
    gen.add_argument("--horizon", default="8")
    gen.add_argument("--denominator", type=int, default=1)
    gen.add_argument("--max-p", default="3")
    gen.add_argument("--lookahead")
    gen.add_argument("--out")
    gen.set_defaults(func=cmd_gen)

    val = sub.add_parser("validate", help="check a schedule against an instance")
    val.add_argument("--instance", required=True)
    val.add_argument("--schedule", required=True)
    val.set_defaults(func=cmd_validate)

    srv = sub.add_parser("serve", help="start the HTTP service")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8000)
    srv.set_defaults(func=cmd_serve)
    return p


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args, Client(args.server))
    except (BusyTimeError, RemoteError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
