"""Workload generators, error measurement, the dense identity baseline, and
a small experiment runner."""

from __future__ import annotations

import itertools
import json
import math
import time
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from ._version import __version__
from .errors import DataError, DomainTooLargeError
from .mechanisms import RandomStream, sample_laplace_array
from .partition import Hyperparams, MechanismParams, build_view
from .tensor import AttributeSpec, CountTensor, Schema, load_csv, load_schema
from .view import BuildMeta, PView, RangeQuery, ViewBlock, answer, answer_exact, serialize

IDENTITY_DENSE_LIMIT = 10_000_000


@dataclass(frozen=True)
class Workload:
    name: str
    queries: tuple[RangeQuery, ...]

    def __iter__(self):
        return iter(self.queries)

    def __len__(self) -> int:
        return len(self.queries)


def _reservoir(items: Iterator[RangeQuery], limit: int, rng) -> list[RangeQuery]:
    """Uniform sample of `limit` items from a stream of unknown length."""
    kept: list[RangeQuery] = []
    for i, item in enumerate(items):
        if i < limit:
            kept.append(item)
        else:
            j = int(rng.random() * (i + 1))
            if j < limit:
                kept[j] = item
    return kept


def _full_ranges(schema: Schema) -> list[tuple[int, int]]:
    return [(0, n - 1) for n in schema.shape]


def _axis_combos(schema: Schema, k: int) -> list[tuple[int, ...]]:
    if not 1 <= k <= schema.ndim:
        raise ValueError(f"k must lie in [1, {schema.ndim}]")
    return list(itertools.combinations(range(schema.ndim), k))


def _unrank_pair(extent: int, u: float) -> tuple[int, int]:
    """Map a uniform u in [0,1) to one of the extent*(extent+1)/2 index
    pairs (s, e) with s <= e, uniformly."""
    n = extent * (extent + 1) // 2
    idx = min(int(u * n), n - 1)
    s = 0
    while idx >= extent - s:
        idx -= extent - s
        s += 1
    return s, s + idx


def gen_kway_marginal(schema: Schema, k: int, *, limit: int | None = None, rng=None) -> Workload:
    """Every single-cell query on every k-subset of attributes, i.e. the
    cells of all k-way marginal tables. Uniformly subsampled to `limit`
    when the enumeration is larger."""
    shape = schema.shape

    def generate() -> Iterator[RangeQuery]:
        for combo in _axis_combos(schema, k):
            for cell in itertools.product(*(range(shape[ax]) for ax in combo)):
                ranges = _full_ranges(schema)
                for ax, i in zip(combo, cell):
                    ranges[ax] = (i, i)
                yield RangeQuery(tuple(ranges))

    total = sum(math.prod(shape[ax] for ax in combo) for combo in _axis_combos(schema, k))
    if limit is not None and total > limit:
        queries = _reservoir(generate(), limit, rng or RandomStream(0))
    else:
        queries = list(generate())
    return Workload(f"marginal-{k}way", tuple(queries))


def gen_kway_range(schema: Schema, k: int, *, limit: int | None = 1000, rng=None) -> Workload:
    """Contiguous (s, e) ranges on every k-subset of attributes, the other
    attributes unconstrained. Enumerates exhaustively up to `limit`,
    otherwise samples `limit` queries uniformly per draw."""
    shape = schema.shape
    combos = _axis_combos(schema, k)
    per_axis_pairs = {ax: shape[ax] * (shape[ax] + 1) // 2 for ax in range(schema.ndim)}
    total = sum(math.prod(per_axis_pairs[ax] for ax in combo) for combo in combos)
    queries: list[RangeQuery] = []
    if limit is None or total <= limit:
        for combo in combos:
            pair_lists = [
                [(s, e) for s in range(shape[ax]) for e in range(s, shape[ax])] for ax in combo
            ]
            for pairs in itertools.product(*pair_lists):
                ranges = _full_ranges(schema)
                for ax, pair in zip(combo, pairs):
                    ranges[ax] = pair
                queries.append(RangeQuery(tuple(ranges)))
    else:
        rng = rng or RandomStream(0)
        for _ in range(limit):
            combo = combos[min(int(rng.random() * len(combos)), len(combos) - 1)]
            ranges = _full_ranges(schema)
            for ax in combo:
                ranges[ax] = _unrank_pair(shape[ax], rng.random())
            queries.append(RangeQuery(tuple(ranges)))
    return Workload(f"range-{k}way", tuple(queries))


def gen_prefix(schema: Schema, k: int, *, limit: int | None = None, rng=None) -> Workload:
    """Prefix ranges [0, e] on every k-subset of attributes."""
    shape = schema.shape

    def generate() -> Iterator[RangeQuery]:
        for combo in _axis_combos(schema, k):
            for ends in itertools.product(*(range(shape[ax]) for ax in combo)):
                ranges = _full_ranges(schema)
                for ax, e in zip(combo, ends):
                    ranges[ax] = (0, e)
                yield RangeQuery(tuple(ranges))

    total = sum(math.prod(shape[ax] for ax in combo) for combo in _axis_combos(schema, k))
    if limit is not None and total > limit:
        queries = _reservoir(generate(), limit, rng or RandomStream(0))
    else:
        queries = list(generate())
    return Workload(f"prefix-{k}way", tuple(queries))


def gen_random_range(schema: Schema, k: int, count: int, rng) -> Workload:
    """`count` queries, each constraining a fresh uniform k-subset of
    attributes with uniform (s, e) ranges."""
    if count < 1:
        raise ValueError("count must be positive")
    shape = schema.shape
    combos = _axis_combos(schema, k)
    queries = []
    for _ in range(count):
        combo = combos[min(int(rng.random() * len(combos)), len(combos) - 1)]
        ranges = _full_ranges(schema)
        for ax in combo:
            ranges[ax] = _unrank_pair(shape[ax], rng.random())
        queries.append(RangeQuery(tuple(ranges)))
    return Workload(f"random-{k}way", tuple(queries))


def rmse(view: PView, tensor: CountTensor, queries: Sequence[RangeQuery]) -> float:
    """Root mean squared error of the view's answers against exact counts."""
    if len(queries) == 0:
        raise ValueError("need at least one query")
    sq = 0.0
    for q in queries:
        err = answer(view, q) - answer_exact(tensor, q)
        sq += err * err
    return math.sqrt(sq / len(queries))


def identity_view(
    tensor: CountTensor,
    epsilon: float,
    seed: int = 0,
    *,
    dense_limit: int = IDENTITY_DENSE_LIMIT,
) -> PView:
    """Dense per-cell baseline: every cell becomes its own block with
    Laplace(1/epsilon) noise. Refuses domains above dense_limit cells."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    schema = tensor.schema
    total = schema.total_domain
    if total > dense_limit:
        raise DomainTooLargeError(
            f"domain has {total} cells, identity baseline is capped at {dense_limit}"
        )
    shape = schema.shape
    flat = np.zeros(total, dtype=np.int64)
    if tensor.nnz:
        flat[np.ravel_multi_index(tuple(tensor.coords.T), shape)] = tensor.counts
    rng = RandomStream(seed)
    noisy = flat.astype(np.float64) + sample_laplace_array(1.0 / epsilon, rng.child(0), total)
    coords = np.stack(np.unravel_index(np.arange(total), shape), axis=1)
    blocks = tuple(
        ViewBlock(tuple((int(c), int(c)) for c in coords[i]), float(noisy[i]), 0)
        for i in range(total)
    )
    params = MechanismParams(0.0, epsilon, 1.0 / epsilon, 0.0, 0.0, 0.0, 0.0)
    return PView(schema, params, blocks, BuildMeta(seed, __version__))


def index_schema(shape: Sequence[int], names: Sequence[str] | None = None) -> Schema:
    """Schema whose numeric bins are unit intervals [i, i+1), so bin index
    equals integer value. Convenient for synthetic grids."""
    if names is None:
        names = tuple(f"x{i}" for i in range(len(shape)))
    return Schema(tuple(AttributeSpec.equal_width(n, int(L), 0, int(L)) for n, L in zip(names, shape)))


def make_clustered_tensor(
    shape: Sequence[int],
    n_records: int,
    *,
    clusters: int = 5,
    spread: float = 2.0,
    seed: int = 0,
) -> CountTensor:
    """Records drawn around a few uniform cluster centers with Gaussian
    scatter, then snapped to the grid."""
    schema = index_schema(shape)
    gen = RandomStream(seed).generator
    d = len(shape)
    centers = gen.uniform(0, 1, size=(clusters, d)) * np.array(shape)
    pick = gen.integers(clusters, size=n_records)
    pts = centers[pick] + gen.normal(0.0, spread, size=(n_records, d))
    coords = np.clip(np.floor(pts).astype(np.int64), 0, np.array(shape) - 1)
    return CountTensor.from_coords(schema, coords)


def make_concentrated_tensor(
    shape: Sequence[int],
    n_records: int,
    *,
    spread: float = 2.0,
    seed: int = 0,
) -> CountTensor:
    """Records packed around the grid center; the sharpest skew case."""
    schema = index_schema(shape)
    gen = RandomStream(seed).generator
    center = np.array(shape, dtype=np.float64) / 2.0
    pts = center + gen.normal(0.0, spread, size=(n_records, len(shape)))
    coords = np.clip(np.floor(pts).astype(np.int64), 0, np.array(shape) - 1)
    return CountTensor.from_coords(schema, coords)


def make_uniform_tensor(shape: Sequence[int], n_records: int, *, seed: int = 0) -> CountTensor:
    schema = index_schema(shape)
    gen = RandomStream(seed).generator
    coords = np.stack([gen.integers(L, size=n_records) for L in shape], axis=1)
    return CountTensor.from_coords(schema, coords)


_CONFIG_KEYS = {
    "dataset",
    "schema",
    "mechanisms",
    "epsilons",
    "seeds",
    "workloads",
    "hyperparams",
    "workload_seed",
    "out",
}
_SYNTH_KEYS = {"kind", "shape", "n", "clusters", "spread", "seed"}
_WORKLOAD_KINDS = {"marginal", "kway_range", "prefix", "random_range"}


def _load_dataset(config: Mapping) -> CountTensor:
    dataset = config.get("dataset")
    if not isinstance(dataset, Mapping):
        raise ValueError("config needs a 'dataset' object")
    if "synthetic" in dataset:
        spec = dict(dataset["synthetic"])
        unknown = set(spec) - _SYNTH_KEYS
        if unknown:
            raise ValueError(f"unknown synthetic dataset keys: {sorted(unknown)}")
        kind = spec.get("kind", "clustered")
        shape = tuple(int(x) for x in spec.get("shape", ()))
        if not shape:
            raise ValueError("synthetic dataset needs a 'shape'")
        n = int(spec.get("n", 10_000))
        seed = int(spec.get("seed", 0))
        if kind == "clustered":
            return make_clustered_tensor(
                shape, n, clusters=int(spec.get("clusters", 5)), spread=float(spec.get("spread", 2.0)), seed=seed
            )
        if kind == "concentrated":
            return make_concentrated_tensor(shape, n, spread=float(spec.get("spread", 2.0)), seed=seed)
        if kind == "uniform":
            return make_uniform_tensor(shape, n, seed=seed)
        raise ValueError(f"unknown synthetic dataset kind {kind!r}")
    if "csv" in dataset:
        if "schema" not in config:
            raise ValueError("csv datasets need a 'schema' path in the config")
        return load_csv(dataset["csv"], load_schema(config["schema"]))
    raise ValueError("dataset must specify 'synthetic' or 'csv'")


def _build_workloads(config: Mapping, schema: Schema) -> list[Workload]:
    specs = config.get("workloads")
    if not specs:
        raise ValueError("config needs a non-empty 'workloads' list")
    seed = int(config.get("workload_seed", 0))
    master = RandomStream(seed)
    out = []
    for j, spec in enumerate(specs):
        kind = spec.get("kind")
        if kind not in _WORKLOAD_KINDS:
            raise ValueError(f"unknown workload kind {kind!r}")
        k = int(spec.get("k", 1))
        rng = master.child(j)
        if kind == "marginal":
            out.append(gen_kway_marginal(schema, k, limit=spec.get("limit"), rng=rng))
        elif kind == "kway_range":
            out.append(gen_kway_range(schema, k, limit=spec.get("limit", 1000), rng=rng))
        elif kind == "prefix":
            out.append(gen_prefix(schema, k, limit=spec.get("limit"), rng=rng))
        else:
            out.append(gen_random_range(schema, k, int(spec.get("count", 500)), rng))
    return out


def run_experiment(config: Mapping) -> dict:
    """Run an rmse comparison described by a config mapping and return the
    report; writes it as JSON lines when the config names an 'out' path.

    Config keys: dataset (synthetic spec or csv path), schema (path, for
    csv), mechanisms, epsilons, seeds, workloads, hyperparams overrides,
    workload_seed, out.
    """
    unknown = set(config) - _CONFIG_KEYS
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    tensor = _load_dataset(config)
    workloads = _build_workloads(config, tensor.schema)
    mechanisms = list(config.get("mechanisms", ["pview", "identity"]))
    for mech in mechanisms:
        if mech not in ("pview", "identity"):
            raise ValueError(f"unknown mechanism {mech!r}")
    epsilons = [float(e) for e in config.get("epsilons", [1.0])]
    seeds = [int(s) for s in config.get("seeds", [0])]
    hp_over = dict(config.get("hyperparams", {}))

    rows = []
    for workload in workloads:
        for mech in mechanisms:
            for eps in epsilons:
                errs, sizes, counts, times = [], [], [], []
                failure = None
                for seed in seeds:
                    t0 = time.perf_counter()
                    try:
                        if mech == "pview":
                            view = build_view(tensor, Hyperparams(eps, **hp_over), seed)
                        else:
                            view = identity_view(tensor, eps, seed)
                    except DomainTooLargeError as exc:
                        failure = str(exc)
                        break
                    times.append(time.perf_counter() - t0)
                    errs.append(rmse(view, tensor, workload.queries))
                    sizes.append(len(serialize(view)))
                    counts.append(len(view.blocks))
                row = {
                    "workload": workload.name,
                    "queries": len(workload.queries),
                    "mechanism": mech,
                    "epsilon": eps,
                    "seeds": len(seeds),
                }
                if failure is not None:
                    row["error"] = failure
                else:
                    arr = np.array(errs)
                    row.update(
                        rmse_mean=float(arr.mean()),
                        rmse_std=float(arr.std()),
                        blocks_mean=float(np.mean(counts)),
                        bytes_mean=float(np.mean(sizes)),
                        build_seconds_mean=float(np.mean(times)),
                    )
                rows.append(row)

    # Normalize against this package's mechanism at the same workload and
    # epsilon so mechanisms compare on one scale.
    base = {
        (r["workload"], r["epsilon"]): r["rmse_mean"]
        for r in rows
        if r["mechanism"] == "pview" and "rmse_mean" in r
    }
    for r in rows:
        ref = base.get((r["workload"], r["epsilon"]))
        if ref and "rmse_mean" in r:
            r["relative_rmse"] = r["rmse_mean"] / ref
    report = {
        "engine_version": __version__,
        "total_records": tensor.total_count,
        "domain_cells": tensor.schema.total_domain,
        "rows": rows,
    }
    out_path = config.get("out")
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(json.dumps(row, sort_keys=True) + "\n")
    return report


def format_report(report: Mapping) -> str:
    """Fixed-width table of an experiment report, one row per result."""
    header = f"{'workload':<16} {'mechanism':<9} {'epsilon':>8} {'rmse':>12} {'rel':>7} {'blocks':>9} {'bytes':>10}"
    lines = [header, "-" * len(header)]
    for r in report["rows"]:
        if "error" in r:
            lines.append(f"{r['workload']:<16} {r['mechanism']:<9} {r['epsilon']:>8g} {'error: ' + r['error']}")
            continue
        rel = f"{r['relative_rmse']:.3f}" if "relative_rmse" in r else "-"
        lines.append(
            f"{r['workload']:<16} {r['mechanism']:<9} {r['epsilon']:>8g} {r['rmse_mean']:>12.3f} "
            f"{rel:>7} {r['blocks_mean']:>9.0f} {r['bytes_mean']:>10.0f}"
        )
    return "\n".join(lines)
