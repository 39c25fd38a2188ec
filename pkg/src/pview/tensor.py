"""Sparse count tensors over binned attribute domains.

A table is ingested against a schema that maps every attribute onto a finite
ordered domain (numeric bins or ordered categories). The result is a sparse
d-dimensional tensor of record counts. Contiguous axis-aligned sub-regions of
that tensor are represented as Block objects, which the partitioning engine
splits recursively.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class AttributeSpec:
    """One attribute of the schema: a name plus a finite ordered domain.

    Numeric attributes carry strictly increasing bin edges; value v falls in
    bin j when edges[j] <= v < edges[j+1], except that the last bin also
    includes its upper edge. Categorical attributes carry an ordered category
    list; categories may be None, meaning the list is resolved from the data
    in order of first appearance when a table is loaded.
    """

    name: str
    kind: str
    bin_edges: tuple[float, ...] | None = None
    categories: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if not self.name:
            raise DataError("attribute name must be non-empty")
        if self.kind == "numeric":
            if self.bin_edges is None or self.categories is not None:
                raise DataError(f"numeric attribute {self.name!r} needs bin_edges only")
            edges = tuple(float(e) for e in self.bin_edges)
            if len(edges) < 2:
                raise DataError(f"attribute {self.name!r}: need at least 2 bin edges")
            if any(not (a < b) for a, b in zip(edges, edges[1:])):
                raise DataError(f"attribute {self.name!r}: bin edges must be strictly increasing")
            object.__setattr__(self, "bin_edges", edges)
        elif self.kind == "categorical":
            if self.bin_edges is not None:
                raise DataError(f"categorical attribute {self.name!r} cannot have bin_edges")
            if self.categories is not None:
                cats = tuple(str(c) for c in self.categories)
                if len(cats) == 0:
                    raise DataError(f"attribute {self.name!r}: empty category list")
                if len(set(cats)) != len(cats):
                    raise DataError(f"attribute {self.name!r}: duplicate categories")
                object.__setattr__(self, "categories", cats)
        else:
            raise DataError(f"attribute {self.name!r}: unknown kind {self.kind!r}")

    @staticmethod
    def numeric(name: str, bin_edges: Sequence[float]) -> "AttributeSpec":
        return AttributeSpec(name, "numeric", bin_edges=tuple(float(e) for e in bin_edges))

    @staticmethod
    def equal_width(name: str, bins: int, lo: float, hi: float) -> "AttributeSpec":
        if bins < 1:
            raise DataError(f"attribute {name!r}: need at least 1 bin")
        if not lo < hi:
            raise DataError(f"attribute {name!r}: need min < max")
        edges = np.linspace(float(lo), float(hi), bins + 1)
        return AttributeSpec(name, "numeric", bin_edges=tuple(float(e) for e in edges))

    @staticmethod
    def categorical(name: str, categories: Sequence[str] | None = None) -> "AttributeSpec":
        cats = None if categories is None else tuple(categories)
        return AttributeSpec(name, "categorical", categories=cats)

    @property
    def resolved(self) -> bool:
        return self.kind == "numeric" or self.categories is not None

    @property
    def domain_size(self) -> int:
        if self.kind == "numeric":
            return len(self.bin_edges) - 1
        if self.categories is None:
            raise DataError(f"attribute {self.name!r}: categories not resolved yet")
        return len(self.categories)

    def bin_index(self, value, *, clamp: bool = False) -> int:
        """Map a raw value to its bin index, or raise DataError."""
        if self.kind == "numeric":
            try:
                v = float(value)
            except (TypeError, ValueError):
                raise DataError(f"attribute {self.name!r}: non-numeric value {value!r}") from None
            if math.isnan(v):
                raise DataError(f"attribute {self.name!r}: NaN value")
            edges = self.bin_edges
            if v < edges[0] or v > edges[-1]:
                if clamp:
                    return 0 if v < edges[0] else len(edges) - 2
                raise DataError(
                    f"attribute {self.name!r}: value {v!r} outside [{edges[0]}, {edges[-1]}]"
                )
            # Half-open bins, except the top edge belongs to the last bin.
            idx = int(np.searchsorted(edges, v, side="right")) - 1
            return min(idx, len(edges) - 2)
        cats = self.categories
        if cats is None:
            raise DataError(f"attribute {self.name!r}: categories not resolved yet")
        try:
            return cats.index(str(value))
        except ValueError:
            raise DataError(f"attribute {self.name!r}: unknown category {value!r}") from None


@dataclass(frozen=True)
class Schema:
    """An ordered tuple of attributes; axis order is schema order."""

    attributes: tuple[AttributeSpec, ...]

    def __post_init__(self) -> None:
        if len(self.attributes) == 0:
            raise DataError("schema must have at least one attribute")
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise DataError("schema attribute names must be unique")

    @property
    def ndim(self) -> int:
        return len(self.attributes)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.attributes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(a.domain_size for a in self.attributes)

    @property
    def total_domain(self) -> int:
        n = 1
        for a in self.attributes:
            n *= a.domain_size
        return n

    @property
    def total_domain_log2(self) -> float:
        # Summing per-axis logs keeps this finite even when the product
        # overflows float range.
        return float(sum(math.log2(a.domain_size) for a in self.attributes))

    def axis(self, name: str) -> int:
        for i, a in enumerate(self.attributes):
            if a.name == name:
                return i
        raise DataError(f"unknown attribute {name!r}")

    def attribute(self, name: str) -> AttributeSpec:
        return self.attributes[self.axis(name)]

    def to_dict(self) -> dict:
        out = []
        for a in self.attributes:
            if a.kind == "numeric":
                out.append({"name": a.name, "kind": "numeric", "bin_edges": list(a.bin_edges)})
            else:
                entry: dict = {"name": a.name, "kind": "categorical"}
                if a.categories is not None:
                    entry["categories"] = list(a.categories)
                out.append(entry)
        return {"attributes": out}

    @staticmethod
    def from_dict(data: Mapping) -> "Schema":
        if not isinstance(data, Mapping) or "attributes" not in data:
            raise DataError("schema document must be an object with an 'attributes' list")
        attrs = []
        for entry in data["attributes"]:
            if not isinstance(entry, Mapping) or "name" not in entry:
                raise DataError("each schema attribute needs at least a 'name'")
            name = entry["name"]
            kind = entry.get("kind")
            if "bin_edges" in entry:
                attrs.append(AttributeSpec.numeric(name, entry["bin_edges"]))
            elif "bins" in entry:
                for key in ("min", "max"):
                    if key not in entry:
                        raise DataError(f"attribute {name!r}: equal-width form needs 'bins', 'min', 'max'")
                attrs.append(AttributeSpec.equal_width(name, int(entry["bins"]), entry["min"], entry["max"]))
            elif "categories" in entry:
                attrs.append(AttributeSpec.categorical(name, entry["categories"]))
            elif kind == "categorical":
                attrs.append(AttributeSpec.categorical(name))
            else:
                raise DataError(f"attribute {name!r}: cannot determine domain from schema entry")
            if kind is not None and kind != attrs[-1].kind:
                raise DataError(f"attribute {name!r}: kind {kind!r} contradicts its domain fields")
        return Schema(tuple(attrs))


def load_schema(path) -> Schema:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"schema file {path}: invalid JSON ({exc})") from None
    return Schema.from_dict(data)


def save_schema(schema: Schema, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(schema.to_dict(), fh, indent=2)
        fh.write("\n")


class CountTensor:
    """Sparse record counts over a schema's cell grid.

    Stores only nonzero cells: `coords` is an (nnz, d) int64 array of cell
    indices in lexicographic order and `counts` the matching positive counts.
    """

    __slots__ = ("schema", "coords", "counts", "total_count")

    def __init__(self, schema: Schema, coords, counts):
        coords = np.ascontiguousarray(np.asarray(coords, dtype=np.int64).reshape(-1, schema.ndim))
        counts = np.asarray(counts, dtype=np.int64).reshape(-1)
        if coords.shape[0] != counts.shape[0]:
            raise DataError("coords and counts length mismatch")
        if counts.size and counts.min() <= 0:
            raise DataError("cell counts must be positive; omit empty cells")
        shape = schema.shape
        for ax in range(schema.ndim):
            if coords.size and (coords[:, ax].min() < 0 or coords[:, ax].max() >= shape[ax]):
                raise DataError(f"cell index out of range on axis {ax}")
        if coords.shape[0] > 1:
            order = np.lexsort(coords.T[::-1])
            coords = coords[order]
            counts = counts[order]
            if np.any(np.all(coords[1:] == coords[:-1], axis=1)):
                raise DataError("duplicate cells; aggregate with from_coords first")
        self.schema = schema
        self.coords = coords
        self.counts = counts
        self.total_count = int(counts.sum())

    @property
    def nnz(self) -> int:
        return int(self.coords.shape[0])

    @staticmethod
    def empty(schema: Schema) -> "CountTensor":
        return CountTensor(schema, np.empty((0, schema.ndim), dtype=np.int64), np.empty(0, dtype=np.int64))

    @staticmethod
    def from_coords(schema: Schema, coords, counts=None) -> "CountTensor":
        """Build from possibly repeated coordinates, aggregating duplicates."""
        coords = np.asarray(coords, dtype=np.int64).reshape(-1, schema.ndim)
        if counts is None:
            counts = np.ones(coords.shape[0], dtype=np.int64)
        else:
            counts = np.asarray(counts, dtype=np.int64).reshape(-1)
        if coords.shape[0] == 0:
            return CountTensor.empty(schema)
        uniq, inverse = np.unique(coords, axis=0, return_inverse=True)
        agg = np.zeros(uniq.shape[0], dtype=np.int64)
        np.add.at(agg, inverse.reshape(-1), counts)
        keep = agg != 0
        return CountTensor(schema, uniq[keep], agg[keep])

    @staticmethod
    def from_cells(schema: Schema, cells: Mapping[tuple, int]) -> "CountTensor":
        coords = np.array(list(cells.keys()), dtype=np.int64).reshape(-1, schema.ndim)
        counts = np.array(list(cells.values()), dtype=np.int64)
        return CountTensor.from_coords(schema, coords, counts)

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.schema.shape, dtype=np.int64)
        if self.nnz:
            dense[tuple(self.coords.T)] = self.counts
        return dense

    def __repr__(self) -> str:
        return f"CountTensor(shape={self.schema.shape}, nnz={self.nnz}, total={self.total_count})"


def load_table(rows: Iterable[Mapping], schema: Schema, *, clamp: bool = False) -> CountTensor:
    """Aggregate an iterable of record mappings into a CountTensor.

    Unresolved categorical attributes take their category order from first
    appearance in the data. Out-of-range numeric values raise DataError
    unless clamp=True, which snaps them to the boundary bins.
    """
    d = schema.ndim
    specs = list(schema.attributes)
    # Per-attribute value -> index maps for categorical axes being resolved.
    pending: dict[int, dict[str, int]] = {
        i: {} for i, a in enumerate(specs) if a.kind == "categorical" and a.categories is None
    }
    coord_rows = []
    for row_no, row in enumerate(rows):
        coord = [0] * d
        for i, spec in enumerate(specs):
            if spec.name not in row:
                raise DataError(f"row {row_no}: missing attribute {spec.name!r}")
            value = row[spec.name]
            if i in pending:
                key = str(value)
                table = pending[i]
                coord[i] = table.setdefault(key, len(table))
            else:
                try:
                    coord[i] = spec.bin_index(value, clamp=clamp)
                except DataError as exc:
                    raise DataError(f"row {row_no}: {exc}") from None
        coord_rows.append(coord)
    for i, table in pending.items():
        if not table:
            raise DataError(f"attribute {specs[i].name!r}: no data to resolve categories from")
        specs[i] = AttributeSpec.categorical(specs[i].name, tuple(table.keys()))
    resolved = Schema(tuple(specs))
    if not coord_rows:
        return CountTensor.empty(resolved)
    return CountTensor.from_coords(resolved, np.array(coord_rows, dtype=np.int64))


def load_csv(path, schema: Schema, *, clamp: bool = False) -> CountTensor:
    """Load a CSV file with a header row against a schema."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataError(f"{path}: empty file, expected a header row")
        missing = [n for n in schema.names if n not in reader.fieldnames]
        if missing:
            raise DataError(f"{path}: header lacks schema attributes {missing}")
        return load_table(reader, schema, clamp=clamp)


class Block:
    """A contiguous axis-aligned sub-region of a CountTensor.

    `ranges` holds inclusive (start, end) index pairs per axis. `cell_idx`
    indexes the tensor's stored cells that fall inside the region, in the
    tensor's canonical order. `depth` counts the cuts from the root block.
    """

    __slots__ = ("tensor", "ranges", "cell_idx", "depth", "size", "total")

    def __init__(self, tensor: CountTensor, ranges, cell_idx, depth: int, size: int, total: int):
        self.tensor = tensor
        self.ranges = tuple((int(s), int(e)) for s, e in ranges)
        self.cell_idx = cell_idx
        self.depth = depth
        self.size = size
        self.total = total

    @property
    def nonzero_cells(self) -> int:
        return int(self.cell_idx.shape[0])

    @property
    def values(self) -> np.ndarray:
        return self.tensor.counts[self.cell_idx]

    @property
    def extents(self) -> tuple[int, ...]:
        return tuple(e - s + 1 for s, e in self.ranges)

    @property
    def is_atomic(self) -> bool:
        return all(s == e for s, e in self.ranges)

    def mean(self) -> float:
        return self.total / self.size

    def __repr__(self) -> str:
        return f"Block(ranges={self.ranges}, depth={self.depth}, size={self.size}, total={self.total})"


def root_block(tensor: CountTensor) -> Block:
    ranges = tuple((0, n - 1) for n in tensor.schema.shape)
    idx = np.arange(tensor.nnz, dtype=np.int64)
    return Block(tensor, ranges, idx, 0, tensor.schema.total_domain, tensor.total_count)


def split_block(block: Block, axis: int, position: int) -> tuple[Block, Block]:
    """Split on `axis` at `position`: left keeps indices <= position.

    Requires start <= position < end on that axis, so both children are
    non-empty regions.
    """
    d = len(block.ranges)
    if not 0 <= axis < d:
        raise ValueError(f"axis {axis} out of range for {d} axes")
    s, e = block.ranges[axis]
    if not s <= position < e:
        raise ValueError(f"cut position {position} not in [{s}, {e}) on axis {axis}")
    coords_ax = block.tensor.coords[block.cell_idx, axis]
    left_mask = coords_ax <= position
    left_idx = block.cell_idx[left_mask]
    right_idx = block.cell_idx[~left_mask]
    cross = block.size // (e - s + 1)
    left_ranges = block.ranges[:axis] + ((s, position),) + block.ranges[axis + 1:]
    right_ranges = block.ranges[:axis] + ((position + 1, e),) + block.ranges[axis + 1:]
    left_total = int(block.tensor.counts[left_idx].sum())
    depth = block.depth + 1
    left = Block(block.tensor, left_ranges, left_idx, depth, (position - s + 1) * cross, left_total)
    right = Block(block.tensor, right_ranges, right_idx, depth, (e - position) * cross, block.total - left_total)
    return left, right


def subregion_block(tensor: CountTensor, ranges, depth: int = 0) -> Block:
    """Materialize an arbitrary in-bounds region as a Block."""
    ranges = tuple((int(s), int(e)) for s, e in ranges)
    if len(ranges) != tensor.schema.ndim:
        raise ValueError("ranges rank does not match schema")
    size = 1
    for ax, ((s, e), n) in enumerate(zip(ranges, tensor.schema.shape)):
        if not 0 <= s <= e < n:
            raise ValueError(f"range ({s}, {e}) out of bounds on axis {ax}")
        size *= e - s + 1
    mask = np.ones(tensor.nnz, dtype=bool)
    for ax, (s, e) in enumerate(ranges):
        col = tensor.coords[:, ax]
        mask &= (col >= s) & (col <= e)
    idx = np.flatnonzero(mask).astype(np.int64)
    total = int(tensor.counts[idx].sum())
    return Block(tensor, ranges, idx, depth, size, total)


def iter_cells(block: Block) -> Iterator[tuple[tuple[int, ...], int]]:
    """Yield every cell of the block (including zeros) with its count.

    Dense iteration; intended for tests and small regions only.
    """
    stored = {tuple(c): int(v) for c, v in zip(block.tensor.coords[block.cell_idx], block.values)}
    spans = [range(s, e + 1) for s, e in block.ranges]
    idx = [0] * len(spans)
    while True:
        coord = tuple(spans[i][idx[i]] for i in range(len(spans)))
        yield coord, stored.get(coord, 0)
        for i in reversed(range(len(spans))):
            idx[i] += 1
            if idx[i] < len(spans[i]):
                break
            idx[i] = 0
        else:
            return
