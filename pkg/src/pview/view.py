"""The private view: noisy block sums, range-count answers, probabilistic
error bounds, and the on-disk format.

A view is a partition of the cell grid into blocks, each carrying one noisy
sum. A range count is answered by crediting every block its overlapping cell
fraction times its noisy average, so answering never touches the raw data.
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    DataError,
    MalformedRecordError,
    SchemaHashMismatchError,
    VersionMismatchError,
)
from .mechanisms import RandomStream
from .partition import MechanismParams, aggregation_error
from .tensor import Block, CountTensor, Schema

_FORMAT_VERSION = 1
_MAGIC = b"HDPV"


@dataclass(frozen=True, slots=True)
class ViewBlock:
    """One published block: inclusive per-axis index ranges, a noisy sum,
    and the number of cuts that produced it."""

    ranges: tuple[tuple[int, int], ...]
    noisy_sum: float
    depth: int

    @property
    def size(self) -> int:
        n = 1
        for s, e in self.ranges:
            n *= e - s + 1
        return n


@dataclass(frozen=True, slots=True)
class BuildMeta:
    seed: int | None
    engine_version: str


@dataclass(frozen=True, slots=True)
class RangeQuery:
    """A counting query: per-axis inclusive (lo, hi) bin index ranges."""

    ranges: tuple[tuple[int, int], ...]

    @staticmethod
    def full(schema: Schema) -> "RangeQuery":
        return RangeQuery(tuple((0, n - 1) for n in schema.shape))

    @staticmethod
    def from_mapping(schema: Schema, ranges: Mapping[str, tuple], *, by_value: bool = False) -> "RangeQuery":
        """Build a query from {attribute: (lo, hi)}; unnamed attributes span
        their full domain.

        With by_value=True, numeric endpoints are raw attribute values mapped
        through the schema's bins, treating (lo, hi) as the half-open value
        interval [lo, hi); categorical endpoints are category names either
        way. Raw values beyond the outermost edges clamp to the boundary
        bins.
        """
        for name in ranges:
            schema.axis(name)
        out = []
        for spec in schema.attributes:
            if spec.name not in ranges:
                out.append((0, spec.domain_size - 1))
                continue
            lo, hi = ranges[spec.name]
            out.append(map_endpoints(spec, lo, hi, by_value=by_value))
        q = RangeQuery(tuple(out))
        validate_query(schema, q)
        return q


def map_endpoints(spec, lo, hi, *, by_value: bool = False) -> tuple[int, int]:
    """Resolve one attribute's (lo, hi) endpoints to bin indices.

    Categorical names map through the category list either way. Numeric
    endpoints are bin indices unless by_value, which treats them as the
    half-open value interval [lo, hi): a hi sitting exactly on a bin's left
    edge resolves to the previous bin, and out-of-domain values clamp to the
    boundary bins. No ordering check happens here.
    """
    if spec.kind == "categorical":
        lo_i = lo if isinstance(lo, int) and not by_value else spec.bin_index(lo)
        hi_i = hi if isinstance(hi, int) and not by_value else spec.bin_index(hi)
        return lo_i, hi_i
    if by_value:
        lo_i = spec.bin_index(lo, clamp=True)
        hi_i = spec.bin_index(hi, clamp=True)
        if float(hi) == spec.bin_edges[hi_i] and hi_i > lo_i:
            hi_i -= 1
        return lo_i, hi_i
    return int(lo), int(hi)


def validate_query(schema: Schema, query: RangeQuery) -> None:
    if len(query.ranges) != schema.ndim:
        raise DataError(f"query has {len(query.ranges)} ranges for {schema.ndim} attributes")
    for spec, (lo, hi) in zip(schema.attributes, query.ranges):
        n = spec.domain_size
        if not (isinstance(lo, int) and isinstance(hi, int)):
            raise DataError(f"attribute {spec.name!r}: query endpoints must be bin indices")
        if not 0 <= lo <= hi < n:
            raise DataError(f"attribute {spec.name!r}: range ({lo}, {hi}) invalid for domain size {n}")


@dataclass(eq=True)
class PView:
    """A differentially private materialized view over a schema's cell grid."""

    schema: Schema
    params: MechanismParams
    blocks: tuple[ViewBlock, ...]
    meta: BuildMeta
    _cache: dict | None = field(default=None, repr=False, compare=False)

    def _arrays(self) -> dict:
        if self._cache is None:
            m = len(self.blocks)
            d = self.schema.ndim
            starts = np.empty((m, d), dtype=np.int64)
            ends = np.empty((m, d), dtype=np.int64)
            for i, b in enumerate(self.blocks):
                for ax, (s, e) in enumerate(b.ranges):
                    starts[i, ax] = s
                    ends[i, ax] = e
            extents = (ends - starts + 1).astype(np.float64)
            self._cache = {
                "starts": starts,
                "ends": ends,
                "sizes": extents.prod(axis=1),
                "sums": np.array([b.noisy_sum for b in self.blocks], dtype=np.float64),
                "depths": np.array([b.depth for b in self.blocks], dtype=np.int64),
            }
        return self._cache


def _overlap_fractions(view: PView, query: RangeQuery) -> np.ndarray:
    """Per block: fraction of its cells inside the query box."""
    arrs = view._arrays()
    qlo = np.array([lo for lo, _ in query.ranges], dtype=np.int64)
    qhi = np.array([hi for _, hi in query.ranges], dtype=np.int64)
    ov = np.minimum(arrs["ends"], qhi) - np.maximum(arrs["starts"], qlo) + 1
    cells = np.clip(ov, 0, None).astype(np.float64).prod(axis=1)
    return cells / arrs["sizes"]


def answer(view: PView, query: RangeQuery) -> float:
    """Estimated count: each block contributes its overlap share of its
    noisy sum."""
    validate_query(view.schema, query)
    w = _overlap_fractions(view, query)
    return float(np.dot(w, view._arrays()["sums"]))


def blocks_touched(view: PView, query: RangeQuery) -> int:
    validate_query(view.schema, query)
    return int(np.count_nonzero(_overlap_fractions(view, query)))


def answer_exact(tensor: CountTensor, query: RangeQuery) -> int:
    """True count of records in the query box; the baseline for error
    measurements."""
    validate_query(tensor.schema, query)
    if tensor.nnz == 0:
        return 0
    mask = np.ones(tensor.nnz, dtype=bool)
    for ax, (lo, hi) in enumerate(query.ranges):
        col = tensor.coords[:, ax]
        mask &= (col >= lo) & (col <= hi)
    return int(tensor.counts[mask].sum())


@dataclass(frozen=True)
class ErrorBound:
    """Two-sided probabilistic error bound for one answered query.

    With probability at least 1 - mu the absolute error is below theta_max;
    with probability at least mu it exceeds theta_min (so theta_min is a
    floor on what any answer must be expected to absorb). t_min and t_max
    record the optimizer's Chernoff parameter for each side.
    """

    theta_min: float
    theta_max: float
    mu: float
    t_min: float
    t_max: float
    xi: float | tuple[float, ...]


def _golden_max(fn, lo: float, hi: float, iters: int = 120) -> tuple[float, float]:
    """Maximize a unimodal fn on [lo, hi] by golden-section search."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(iters):
        if b - a <= 1e-14 * max(1.0, abs(b)):
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fn(d)
    x = (a + b) / 2.0
    return x, fn(x)


def error_bounds(view: PView, query: RangeQuery, mu: float, xi=1.0) -> ErrorBound:
    """Runtime error-bound estimate for a query at failure probability mu.

    Treats the answer's error as a weighted sum of the blocks' independent
    noise terms (each block's perturbation noise, plus its converge-test
    slack inflated by its data-skew factor xi) and optimizes the Chernoff
    parameter t for each side by golden-section search. xi is a scalar
    applied to every block or a per-block sequence aligned with view.blocks.
    """
    validate_query(view.schema, query)
    if not 0.0 < mu < 1.0:
        raise ValueError("mu must lie strictly between 0 and 1")
    m = len(view.blocks)
    if np.isscalar(xi):
        xi_arr = np.full(m, float(xi))
    else:
        xi_arr = np.asarray(xi, dtype=np.float64)
        if xi_arr.shape != (m,):
            raise ValueError(f"xi must be scalar or one value per block ({m})")
    if np.any(xi_arr <= 0):
        raise ValueError("xi factors must be positive")

    w = _overlap_fractions(view, query)
    active = w > 0
    stored_xi = float(xi) if np.isscalar(xi) else tuple(float(v) for v in xi_arr)
    if not np.any(active):
        return ErrorBound(0.0, 0.0, mu, 0.0, 0.0, stored_xi)

    p = view.params
    wa = w[active]
    k = view._arrays()["depths"][active] + 1
    a = wa / p.epsilon_p
    b = xi_arr[active] * wa * p.lam
    log_mu = math.log(mu)

    def lower(t: float) -> float:
        return (log_mu + float(np.log1p(-np.square(a * t)).sum())) / t

    t_hi = 0.999 / float(a.max())
    t_min_used, f_max = _golden_max(lower, t_hi * 1e-9, t_hi)
    theta_min = max(0.0, f_max)

    mean = float(np.sum(xi_arr[active] * wa * (k * p.delta + p.theta)))
    b_pos = b[b > 0]
    if b_pos.size:
        t_hi_u = 0.999 / max(float(a.max()), float(b_pos.max()))
    else:
        t_hi_u = t_hi

    def upper_neg(t: float) -> float:
        terms = np.log1p(-np.square(a * t)).sum()
        if b_pos.size:
            terms += np.log1p(-np.square(b_pos * t)).sum()
        return (log_mu + float(terms)) / t

    t_max_used, g_neg = _golden_max(upper_neg, t_hi_u * 1e-9, t_hi_u)
    theta_max = mean - g_neg
    return ErrorBound(theta_min, theta_max, mu, t_min_used, t_max_used, stored_xi)


def estimate_xi(
    tensor: CountTensor,
    block: Block,
    *,
    samples: int = 1000,
    rng=None,
    exhaustive_limit: int = 10_000,
) -> float:
    """Data-skew factor of a block: the largest ratio of a contiguous
    sub-block's aggregation error density to the block's own.

    Enumerates every contiguous sub-block when their number is at most
    exhaustive_limit, otherwise samples that many uniformly at random.
    Returns 1.0 for blocks with zero aggregation error.
    """
    parent_ae = aggregation_error(block)
    if parent_ae <= 0.0:
        return 1.0
    parent_density = parent_ae / block.size
    coords = tensor.coords[block.cell_idx]
    vals = tensor.counts[block.cell_idx].astype(np.float64)

    def density(ranges) -> float:
        size = 1
        for s, e in ranges:
            size *= e - s + 1
        mask = np.ones(coords.shape[0], dtype=bool)
        for ax, (s, e) in enumerate(ranges):
            col = coords[:, ax]
            mask &= (col >= s) & (col <= e)
        sub_vals = vals[mask]
        total = float(sub_vals.sum())
        mval = total / size
        ae = float(np.abs(sub_vals - mval).sum()) + (size - sub_vals.size) * mval
        return ae / size

    extents = block.extents
    n_sub = 1
    for ext in extents:
        n_sub *= ext * (ext + 1) // 2
    best = 1.0
    if n_sub <= exhaustive_limit:
        axis_ranges = [
            [(s0, e0) for s0 in range(s, e + 1) for e0 in range(s0, e + 1)]
            for s, e in block.ranges
        ]
        idx = [0] * len(axis_ranges)
        while True:
            ranges = tuple(axis_ranges[i][idx[i]] for i in range(len(idx)))
            best = max(best, density(ranges) / parent_density)
            for i in reversed(range(len(idx))):
                idx[i] += 1
                if idx[i] < len(axis_ranges[i]):
                    break
                idx[i] = 0
            else:
                break
    else:
        if rng is None:
            rng = RandomStream(0)
        for _ in range(samples):
            ranges = []
            for s, e in block.ranges:
                ext = e - s + 1
                s0 = s + min(int(rng.random() * ext), ext - 1)
                rem = e - s0 + 1
                e0 = s0 + min(int(rng.random() * rem), rem - 1)
                ranges.append((s0, e0))
            best = max(best, density(tuple(ranges)) / parent_density)
    return float(best)


# On-disk format. All integers are unsigned LEB128 varints unless noted.
#   magic "HDPV"
#   format version varint
#   schema: varint byte length, canonical JSON, then its sha256 digest
#   mechanism params: 7 little-endian float64
#   seed: presence flag byte, then the seed varint when present
#   engine version: varint byte length, UTF-8 text
#   blocks: count varint, then per block and axis (start, end) varints,
#     the noisy sum as little-endian float64, and the depth varint


def _put_uvarint(buf: bytearray, n: int) -> None:
    if n < 0:
        raise ValueError("varint value must be non-negative")
    while True:
        b = n & 0x7F
        n >>= 7
        if n:
            buf.append(b | 0x80)
        else:
            buf.append(b)
            return


def _get_uvarint(data: bytes, pos: int) -> tuple[int, int]:
    out = 0
    shift = 0
    while True:
        if pos >= len(data):
            raise MalformedRecordError("truncated varint")
        byte = data[pos]
        pos += 1
        out |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return out, pos
        shift += 7
        if shift > 512:
            raise MalformedRecordError("varint too long")


def _take(data: bytes, pos: int, n: int, what: str) -> tuple[bytes, int]:
    if pos + n > len(data):
        raise MalformedRecordError(f"truncated {what}")
    return data[pos : pos + n], pos + n


def _canonical_schema_json(schema: Schema) -> bytes:
    return json.dumps(schema.to_dict(), sort_keys=True, separators=(",", ":")).encode("utf-8")


def serialize(view: PView) -> bytes:
    """Encode a view to bytes. Byte-identical for equal views."""
    buf = bytearray(_MAGIC)
    _put_uvarint(buf, _FORMAT_VERSION)
    schema_json = _canonical_schema_json(view.schema)
    _put_uvarint(buf, len(schema_json))
    buf += schema_json
    buf += hashlib.sha256(schema_json).digest()
    p = view.params
    buf += struct.pack("<7d", p.epsilon_r, p.epsilon_p, p.theta, p.kappa, p.epsilon_cut, p.lam, p.delta)
    if view.meta.seed is None:
        buf.append(0)
    else:
        buf.append(1)
        _put_uvarint(buf, view.meta.seed)
    version_bytes = view.meta.engine_version.encode("utf-8")
    _put_uvarint(buf, len(version_bytes))
    buf += version_bytes
    _put_uvarint(buf, len(view.blocks))
    for b in view.blocks:
        for s, e in b.ranges:
            _put_uvarint(buf, s)
            _put_uvarint(buf, e)
        buf += struct.pack("<d", b.noisy_sum)
        _put_uvarint(buf, b.depth)
    return bytes(buf)


def deserialize(data: bytes) -> PView:
    """Decode bytes produced by serialize, verifying structure and schema
    digest. Raises VersionMismatchError, SchemaHashMismatchError, or
    MalformedRecordError accordingly."""
    magic, pos = _take(data, 0, len(_MAGIC), "header")
    if magic != _MAGIC:
        raise MalformedRecordError("not a view file (bad magic)")
    version, pos = _get_uvarint(data, pos)
    if version != _FORMAT_VERSION:
        raise VersionMismatchError(f"format version {version}, this reader supports {_FORMAT_VERSION}")
    schema_len, pos = _get_uvarint(data, pos)
    schema_json, pos = _take(data, pos, schema_len, "schema")
    digest, pos = _take(data, pos, 32, "schema digest")
    if hashlib.sha256(schema_json).digest() != digest:
        raise SchemaHashMismatchError("schema digest mismatch")
    try:
        schema = Schema.from_dict(json.loads(schema_json.decode("utf-8")))
    except (json.JSONDecodeError, UnicodeDecodeError, DataError) as exc:
        raise MalformedRecordError(f"embedded schema invalid: {exc}") from None
    raw, pos = _take(data, pos, 56, "mechanism params")
    params = MechanismParams(*struct.unpack("<7d", raw))
    flag, pos = _take(data, pos, 1, "seed flag")
    if flag[0] not in (0, 1):
        raise MalformedRecordError("invalid seed flag")
    seed = None
    if flag[0] == 1:
        seed, pos = _get_uvarint(data, pos)
    ver_len, pos = _get_uvarint(data, pos)
    ver_bytes, pos = _take(data, pos, ver_len, "engine version")
    try:
        engine_version = ver_bytes.decode("utf-8")
    except UnicodeDecodeError:
        raise MalformedRecordError("engine version is not valid UTF-8") from None
    m, pos = _get_uvarint(data, pos)
    shape = schema.shape
    d = schema.ndim
    blocks = []
    for _ in range(m):
        ranges = []
        for ax in range(d):
            s, pos = _get_uvarint(data, pos)
            e, pos = _get_uvarint(data, pos)
            if not s <= e < shape[ax]:
                raise MalformedRecordError(f"block range ({s}, {e}) invalid on axis {ax}")
            ranges.append((s, e))
        raw, pos = _take(data, pos, 8, "block sum")
        (noisy_sum,) = struct.unpack("<d", raw)
        depth, pos = _get_uvarint(data, pos)
        blocks.append(ViewBlock(tuple(ranges), noisy_sum, depth))
    if pos != len(data):
        raise MalformedRecordError(f"{len(data) - pos} trailing bytes")
    return PView(schema, params, tuple(blocks), BuildMeta(seed, engine_version))


def save_view(view: PView, path) -> None:
    data = serialize(view)
    with open(path, "wb") as fh:
        fh.write(data)


def load_view(path) -> PView:
    with open(path, "rb") as fh:
        return deserialize(fh.read())


def to_json(view: PView) -> str:
    """Readable JSON export of a view, for debugging and UI consumption."""
    p = view.params
    obj = {
        "version": _FORMAT_VERSION,
        "engine_version": view.meta.engine_version,
        "seed": view.meta.seed,
        "schema": view.schema.to_dict(),
        "params": {
            "epsilon_r": p.epsilon_r,
            "epsilon_p": p.epsilon_p,
            "theta": p.theta,
            "kappa": p.kappa,
            "epsilon_cut": p.epsilon_cut,
            "lambda": p.lam,
            "delta": p.delta,
        },
        "blocks": [
            {"ranges": [list(r) for r in b.ranges], "noisy_sum": b.noisy_sum, "depth": b.depth}
            for b in view.blocks
        ],
    }
    return json.dumps(obj, indent=2, sort_keys=True)
