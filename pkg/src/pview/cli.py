"""Command line front end.

Exit codes: 0 success, 2 usage problems (bad flags, unparseable ranges,
missing files), 3 data problems (malformed CSV values, schema mismatches,
unreadable views), 4 unexpected internal failures.
"""

from __future__ import annotations

import argparse
import json
import secrets
import sys
import time

from .errors import DataError
from .partition import Hyperparams, budget_breakdown, derive_params, perturb, recursive_bisection
from .mechanisms import RandomStream
from .tensor import load_csv, load_schema, root_block
from .view import RangeQuery, answer, blocks_touched, error_bounds, load_view, save_view, to_json
from ._version import __version__


class UsageError(Exception):
    pass


def _parse_ranges(text: str) -> dict[str, tuple[str, str]]:
    """Parse 'attr=lo:hi,attr=lo:hi' into an ordered mapping of raw tokens."""
    out: dict[str, tuple[str, str]] = {}
    for term in text.split(","):
        term = term.strip()
        if not term:
            continue
        if "=" not in term:
            raise UsageError(f"range term {term!r} is not of the form attr=lo:hi")
        name, _, span = term.partition("=")
        if span.count(":") != 1:
            raise UsageError(f"range term {term!r} needs exactly one ':' between lo and hi")
        lo, _, hi = span.partition(":")
        if not name or not lo or not hi:
            raise UsageError(f"range term {term!r} is incomplete")
        if name in out:
            raise UsageError(f"attribute {name!r} appears twice in the range")
        out[name] = (lo, hi)
    if not out:
        raise UsageError("empty range expression")
    return out


def _typed_ranges(view_schema, raw: dict[str, tuple[str, str]], by_value: bool) -> dict[str, tuple]:
    """Convert raw range tokens to the types RangeQuery.from_mapping expects."""
    out: dict[str, tuple] = {}
    for name, (lo, hi) in raw.items():
        spec = view_schema.attribute(name)
        if spec.kind == "categorical":
            out[name] = (lo, hi)
        elif by_value:
            try:
                out[name] = (float(lo), float(hi))
            except ValueError:
                raise UsageError(f"attribute {name!r}: endpoints {lo!r}:{hi!r} are not numbers") from None
        else:
            try:
                out[name] = (int(lo), int(hi))
            except ValueError:
                raise UsageError(
                    f"attribute {name!r}: endpoints {lo!r}:{hi!r} are not bin indices (use --values for raw values)"
                ) from None
    return out


def _fmt(x: float) -> str:
    return f"{x:g}"


def _cmd_build(args) -> int:
    schema = load_schema(args.schema)
    tensor = load_csv(args.input, schema, clamp=args.clamp)
    hp = Hyperparams(args.epsilon, ratio=args.ratio, alpha=args.alpha, beta=args.beta, gamma=args.gamma)
    seed = args.seed
    if seed is None:
        seed = secrets.randbits(63)
    print(f"seed: {seed}")
    params = derive_params(hp, tensor.schema.total_domain_log2)
    t0 = time.perf_counter()
    master = RandomStream(seed)
    part = recursive_bisection(root_block(tensor), params, master.child(0), workers=args.workers)
    view = perturb(part, params, master.child(1), seed=seed)
    elapsed = time.perf_counter() - t0
    save_view(view, args.out)
    bb = budget_breakdown(hp, params)
    print(f"records: {tensor.total_count}, domain cells: {tensor.schema.total_domain}")
    print(f"blocks: {len(view.blocks)}")
    print(
        f"ε_r={_fmt(bb['epsilon_r'])} (converge {_fmt(bb['converge'])}, cut {_fmt(bb['cut'])}), "
        f"ε_p={_fmt(bb['epsilon_p'])}"
    )
    print(f"built in {elapsed:.2f}s, wrote {args.out}")
    return 0


def _cmd_query(args) -> int:
    view = load_view(args.view)
    raw = _parse_ranges(args.range)
    mapping = _typed_ranges(view.schema, raw, args.values)
    query = RangeQuery.from_mapping(view.schema, mapping, by_value=args.values)
    est = answer(view, query)
    eb = error_bounds(view, query, args.mu, xi=args.xi)
    print(f"answer: {est:.3f}")
    print(f"error bounds ({_fmt((1.0 - args.mu) * 100)}% confidence): [{eb.theta_min:.3f}, {eb.theta_max:.3f}]")
    print(f"blocks touched: {blocks_touched(view, query)}")
    return 0


def _cmd_eval(args) -> int:
    from .evaluate import format_report, run_experiment

    with open(args.config, "r", encoding="utf-8") as fh:
        try:
            config = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"config {args.config}: invalid JSON ({exc})") from None
    try:
        report = run_experiment(config)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    print(format_report(report))
    if config.get("out"):
        print(f"wrote {config['out']}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    view = load_view(args.view)
    print(f"serving {args.view} on http://{args.host}:{args.port}")
    uvicorn.run(create_app(view), host=args.host, port=args.port, log_level="warning")
    return 0


def _cmd_inspect(args) -> int:
    view = load_view(args.view)
    if args.json:
        print(to_json(view))
        return 0
    p = view.params
    depths = [b.depth for b in view.blocks]
    print(f"schema: {', '.join(f'{a.name}({a.domain_size})' for a in view.schema.attributes)}")
    print(f"domain cells: {view.schema.total_domain}")
    print(f"blocks: {len(view.blocks)}")
    print(f"depth: min {min(depths)}, max {max(depths)}")
    print(
        f"params: ε_r={_fmt(p.epsilon_r)} ε_p={_fmt(p.epsilon_p)} θ={_fmt(p.theta)} "
        f"κ={_fmt(p.kappa)} ε_cut={_fmt(p.epsilon_cut)} λ={_fmt(p.lam)} δ={_fmt(p.delta)}"
    )
    print(f"noisy total: {sum(b.noisy_sum for b in view.blocks):.3f}")
    print(f"seed: {view.meta.seed}, engine {view.meta.engine_version}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pview", description="Differentially private range-count views.")
    parser.add_argument("--version", action="version", version=f"pview {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="build a private view from a CSV table")
    b.add_argument("--input", required=True, help="CSV file with a header row")
    b.add_argument("--schema", required=True, help="JSON schema file")
    b.add_argument("--epsilon", required=True, type=float, help="total privacy budget")
    b.add_argument("--ratio", type=float, default=0.9, help="partition share of the budget")
    b.add_argument("--alpha", type=float, default=1.6, help="converge bias base")
    b.add_argument("--beta", type=float, default=1.2, help="depth cap scale")
    b.add_argument("--gamma", type=float, default=0.9, help="converge share of the partition budget")
    b.add_argument("--seed", type=int, default=None, help="build seed; generated and printed when omitted")
    b.add_argument("--workers", type=int, default=1, help="threads for the bisection")
    b.add_argument("--clamp", action="store_true", help="clamp out-of-range numeric values to boundary bins")
    b.add_argument("--out", required=True, help="output view path")
    b.set_defaults(func=_cmd_build)

    q = sub.add_parser("query", help="answer a range count against a view")
    q.add_argument("--view", required=True, help="view file")
    q.add_argument("--range", required=True, help="comma-separated attr=lo:hi terms")
    q.add_argument("--mu", type=float, default=0.05, help="error bound failure probability")
    q.add_argument("--xi", type=float, default=1.0, help="data-skew factor for the bounds")
    q.add_argument("--values", action="store_true", help="endpoints are raw values, not bin indices")
    q.set_defaults(func=_cmd_query)

    e = sub.add_parser("eval", help="run an rmse experiment from a JSON config")
    e.add_argument("--config", required=True, help="experiment config path")
    e.set_defaults(func=_cmd_eval)

    s = sub.add_parser("serve", help="serve a view over HTTP")
    s.add_argument("--view", required=True, help="view file")
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=8000)
    s.set_defaults(func=_cmd_serve)

    i = sub.add_parser("inspect", help="summarize a view file")
    i.add_argument("--view", required=True, help="view file")
    i.add_argument("--json", action="store_true", help="dump the full view as JSON")
    i.set_defaults(func=_cmd_inspect)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except KeyboardInterrupt:
        return 130
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
