"""Recursive bisection of a count tensor into a private block partition.

The driver walks blocks depth first. Each non-atomic block first undergoes a
noisy converge test (stop here and publish this block?) and, if that fails,
a noisy cut choice (where to bisect?). Every block owns its own derived
random stream, so the draw sequence is a pure function of the seed and the
block's position in the tree, independent of traversal order or threading.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import AtomicBlockError
from .mechanisms import RandomStream, exponential_choice, sample_laplace
from .tensor import Block, CountTensor, root_block, split_block

# Caps the scratch matrix used by the per-axis quality sweep.
_QUALITY_CHUNK_CELLS = 4_000_000


@dataclass(frozen=True)
class Hyperparams:
    """User-facing knobs of a build.

    epsilon_b is the total privacy budget. ratio splits it between the
    partitioning phase and the final perturbation; gamma splits the
    partitioning share between converge tests and cut choices. alpha tunes
    how aggressively the converge bias discounts depth, and beta scales the
    depth cap relative to log2 of the domain size.
    """

    epsilon_b: float
    ratio: float = 0.9
    alpha: float = 1.6
    beta: float = 1.2
    gamma: float = 0.9

    def __post_init__(self) -> None:
        if not self.epsilon_b > 0:
            raise ValueError("epsilon_b must be positive")
        if not 0.0 < self.ratio < 1.0:
            raise ValueError("ratio must lie strictly between 0 and 1")
        if not self.alpha > 1.0:
            raise ValueError("alpha must exceed 1 (the converge noise scale diverges at 1)")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")


@dataclass(frozen=True)
class MechanismParams:
    """Budget split and noise scales derived from Hyperparams.

    epsilon_r + epsilon_p recompose to the total budget exactly, and
    gamma*epsilon_r + kappa*epsilon_cut recompose to epsilon_r exactly;
    the derivation arranges the arithmetic so no budget is lost to float
    rounding.
    """

    epsilon_r: float
    epsilon_p: float
    theta: float
    kappa: float
    epsilon_cut: float
    lam: float
    delta: float


def derive_params(hp: Hyperparams, total_domain_log2: float) -> MechanismParams:
    """Derive mechanism parameters for a domain of 2**total_domain_log2 cells."""
    eps_r = hp.ratio * hp.epsilon_b
    # Complement so the split recomposes exactly under float arithmetic.
    eps_p = hp.epsilon_b - eps_r
    if not eps_p > 0:
        raise ValueError("ratio leaves no perturbation budget")
    theta = 1.0 / eps_p
    kappa = hp.beta * total_domain_log2
    converge_share = hp.gamma * eps_r
    cut_share = eps_r - converge_share
    # A 1x...x1 domain admits no cuts at all, so the cut budget stays unused.
    eps_cut = cut_share / kappa if kappa > 0 else 0.0
    lam = ((3.0 * hp.alpha - 2.0) / (hp.alpha - 1.0)) * (2.0 / converge_share)
    delta = lam * math.log(hp.alpha)
    return MechanismParams(eps_r, eps_p, theta, kappa, eps_cut, lam, delta)


def budget_breakdown(hp: Hyperparams, params: MechanismParams) -> dict[str, float]:
    """Split of the total budget into its three spent shares."""
    converge = hp.gamma * params.epsilon_r
    return {
        "epsilon_r": params.epsilon_r,
        "converge": converge,
        "cut": params.epsilon_r - converge,
        "epsilon_p": params.epsilon_p,
    }


def aggregation_error(block: Block) -> float:
    """Total absolute deviation of the block's cells from the block mean.

    This is the error a uniform answer to all size-1 queries inside the
    block would accumulate. Only stored cells are touched; the zero cells
    contribute (size - nonzero) * mean in one term.
    """
    m = block.total / block.size
    if block.nonzero_cells == 0:
        return 0.0
    dev = float(np.abs(block.values - m).sum())
    return dev + (block.size - block.nonzero_cells) * m


def ae_sensitivity(size: int) -> float:
    """Sensitivity of aggregation_error to one record: 2 * (1 - 1/size)."""
    if size < 1:
        raise ValueError("block size must be at least 1")
    return 2.0 * (1.0 - 1.0 / size)


def biased_ae(block: Block, params: MechanismParams, k: int | None = None) -> float:
    """Aggregation error discounted by depth, floored so that deep uniform
    blocks still pass a converge test with headroom 2 below theta."""
    if k is None:
        k = block.depth + 1
    return max(params.theta + 2.0 - params.delta, aggregation_error(block) - k * params.delta)


def converge_test(block: Block, params: MechanismParams, rng, k: int | None = None) -> bool:
    """Noisy stop decision: biased AE plus Laplace(lam) noise under theta.

    Consumes exactly one draw from rng.
    """
    return biased_ae(block, params, k) + sample_laplace(params.lam, rng) <= params.theta


def quality(block: Block, axis: int, position: int) -> float:
    """Quality of one cut: negated sum of the children's aggregation errors."""
    left, right = split_block(block, axis, position)
    return -(aggregation_error(left) + aggregation_error(right))


def cut_candidates(block: Block) -> list[tuple[int, int]]:
    """All (axis, position) cuts, axis-major, positions ascending."""
    out = []
    for axis, (s, e) in enumerate(block.ranges):
        out.extend((axis, p) for p in range(s, e))
    return out


def cut_qualities_reference(block: Block) -> tuple[list[tuple[int, int]], np.ndarray]:
    """Naive per-candidate quality enumeration. Kept as the oracle the fast
    sweep is checked against."""
    cands = cut_candidates(block)
    quals = np.array([quality(block, ax, p) for ax, p in cands], dtype=np.float64)
    return cands, quals


def cut_qualities(block: Block) -> tuple[list[tuple[int, int]], np.ndarray]:
    """Qualities of every candidate cut, by one sweep per axis.

    For an axis of extent L the naive approach rescans the block's cells for
    each of the L-1 candidates. Sorting the cells once by their coordinate on
    the axis makes every left child a prefix of that order, so per-candidate
    deviations come out of cumulative sums instead.
    """
    cands = cut_candidates(block)
    if not cands:
        return cands, np.empty(0, dtype=np.float64)
    n = block.nonzero_cells
    sizef = float(block.size)
    totalf = float(block.total)
    parts = []
    for axis, (s, e) in enumerate(block.ranges):
        extent = e - s + 1
        if extent < 2:
            continue
        n_cand = extent - 1
        if n == 0:
            parts.append(np.zeros(n_cand, dtype=np.float64))
            continue
        local = (block.tensor.coords[block.cell_idx, axis] - s).astype(np.int64)
        vals = block.values.astype(np.float64)
        order = np.argsort(local, kind="stable")
        v_sorted = vals[order]
        slice_cnt = np.bincount(local, minlength=extent)
        slice_sum = np.bincount(local, weights=vals, minlength=extent)
        nnz_pref = np.cumsum(slice_cnt)[:n_cand]
        sum_pref = np.cumsum(slice_sum)[:n_cand]
        crossf = sizef / extent
        size_l = np.arange(1, extent, dtype=np.float64) * crossf
        size_r = sizef - size_l
        mean_l = sum_pref / size_l
        mean_r = (totalf - sum_pref) / size_r
        ae = np.empty(n_cand, dtype=np.float64)
        chunk = max(1, _QUALITY_CHUNK_CELLS // n)
        col = np.arange(n_cand)
        for lo in range(0, n_cand, chunk):
            hi = min(lo + chunk, n_cand)
            boundary = nnz_pref[lo:hi]
            row = np.maximum(boundary - 1, 0)
            cols = col[: hi - lo]
            dl = np.abs(v_sorted[:, None] - mean_l[None, lo:hi])
            cum_l = np.cumsum(dl, axis=0)
            dev_l = np.where(boundary > 0, cum_l[row, cols], 0.0)
            dr = np.abs(v_sorted[:, None] - mean_r[None, lo:hi])
            cum_r = np.cumsum(dr, axis=0)
            dev_r = cum_r[-1, cols] - np.where(boundary > 0, cum_r[row, cols], 0.0)
            ae_l = dev_l + (size_l[lo:hi] - boundary) * mean_l[lo:hi]
            ae_r = dev_r + (size_r[lo:hi] - (n - boundary)) * mean_r[lo:hi]
            ae[lo:hi] = ae_l + ae_r
        parts.append(-ae)
    return cands, np.concatenate(parts)


def quality_sensitivity(block: Block, mode: str = "worst_case") -> float:
    """Sensitivity bound used for the cut choice; quality moves by at most
    twice the per-child aggregation error sensitivity."""
    if mode == "worst_case":
        return 4.0
    if mode == "per_block":
        return 2.0 * ae_sensitivity(block.size)
    raise ValueError(f"unknown sensitivity mode {mode!r}")


def random_cut(
    block: Block,
    params: MechanismParams,
    rng,
    *,
    argmax: bool = False,
    sensitivity_mode: str = "worst_case",
) -> tuple[int, int]:
    """Choose a cut for the block.

    Within the budgeted depth (k <= kappa) the choice is an exponential
    mechanism over cut qualities with budget epsilon_cut; beyond it, or when
    no cut budget exists, the choice is uniform. Consumes exactly one draw
    from rng, or none with argmax=True, which deterministically picks the
    best candidate (ties to the lowest axis, then position) for noise-free
    runs.
    """
    if block.is_atomic:
        raise AtomicBlockError(f"block {block.ranges} has no cut positions")
    k = block.depth + 1
    if argmax:
        cands, quals = cut_qualities(block)
        return cands[int(np.argmax(quals))]
    if k <= params.kappa and params.epsilon_cut > 0:
        cands, quals = cut_qualities(block)
        sens = quality_sensitivity(block, sensitivity_mode)
        return cands[exponential_choice(quals, params.epsilon_cut, sens, rng)]
    cands = cut_candidates(block)
    i = min(int(rng.random() * len(cands)), len(cands) - 1)
    return cands[i]


@dataclass(frozen=True)
class CutRecord:
    """One cut decision: which block, at what tree depth, cut where and how."""

    ranges: tuple[tuple[int, int], ...]
    depth: int
    k: int
    axis: int
    position: int
    method: str


@dataclass
class PartitionResult:
    """Leaves of the bisection in canonical order, plus the optional cut log."""

    blocks: list[Block]
    cut_log: tuple[CutRecord, ...] | None = None


def _cut_method(block: Block, params: MechanismParams, argmax: bool) -> str:
    if argmax:
        return "argmax"
    if block.depth + 1 <= params.kappa and params.epsilon_cut > 0:
        return "exponential"
    return "random"


def _step(block, stream, params, argmax, sens_mode, keep_log):
    """Process one block: either it becomes a leaf, or it splits in two."""
    if block.is_atomic:
        return None, None
    if converge_test(block, params, stream):
        return None, None
    axis, pos = random_cut(block, params, stream, argmax=argmax, sensitivity_mode=sens_mode)
    record = None
    if keep_log:
        record = CutRecord(block.ranges, block.depth, block.depth + 1, axis, pos, _cut_method(block, params, argmax))
    left, right = split_block(block, axis, pos)
    return ((left, stream.child(0)), (right, stream.child(1))), record


def _walk(item, params, argmax, sens_mode, keep_log):
    """Fully expand one (block, stream) pair with an explicit stack."""
    leaves, log = [], []
    stack = [item]
    while stack:
        block, stream = stack.pop()
        children, record = _step(block, stream, params, argmax, sens_mode, keep_log)
        if record is not None:
            log.append(record)
        if children is None:
            leaves.append(block)
        else:
            stack.extend(children)
    return leaves, log


def recursive_bisection(
    root: Block,
    params: MechanismParams,
    rng,
    *,
    workers: int = 1,
    keep_cut_log: bool = False,
    argmax_cuts: bool = False,
    sensitivity_mode: str = "worst_case",
) -> PartitionResult:
    """Recursively bisect `root` into converged leaves.

    The result is identical for any worker count: parallelism only changes
    which thread expands a subtree, and each block's draws come from its own
    stream. Blocks come back sorted by their ranges.
    """
    leaves: list[Block] = []
    log: list[CutRecord] = []
    if workers <= 1:
        leaves, log = _walk((root, rng), params, argmax_cuts, sensitivity_mode, keep_cut_log)
    else:
        # Grow a frontier breadth first until there is enough independent
        # work, then let each thread expand its subtrees to completion.
        frontier: deque = deque([(root, rng)])
        target = workers * 4
        while frontier and len(frontier) < target:
            block, stream = frontier.popleft()
            children, record = _step(block, stream, params, argmax_cuts, sensitivity_mode, keep_cut_log)
            if record is not None:
                log.append(record)
            if children is None:
                leaves.append(block)
            else:
                frontier.extend(children)
        if frontier:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(
                    pool.map(lambda it: _walk(it, params, argmax_cuts, sensitivity_mode, keep_cut_log), frontier)
                )
            for sub_leaves, sub_log in results:
                leaves.extend(sub_leaves)
                log.extend(sub_log)
    leaves.sort(key=lambda b: b.ranges)
    log.sort(key=lambda r: (r.depth, r.ranges))
    return PartitionResult(leaves, tuple(log) if keep_cut_log else None)


def perturb(partition: PartitionResult, params: MechanismParams, rng, *, seed: int | None = None):
    """Publish the partition: add Laplace(1/epsilon_p) noise to every block sum.

    Block i draws from rng.child(i) with blocks in canonical range order, so
    a block's noise does not depend on how the partition was computed.
    """
    from .view import BuildMeta, PView, ViewBlock
    from ._version import __version__

    blocks = sorted(partition.blocks, key=lambda b: b.ranges)
    scale = 1.0 / params.epsilon_p
    out = []
    for i, b in enumerate(blocks):
        noise = sample_laplace(scale, rng.child(i))
        out.append(ViewBlock(b.ranges, float(b.total + noise), b.depth))
    schema = blocks[0].tensor.schema if blocks else None
    if schema is None:
        raise ValueError("cannot perturb an empty partition")
    return PView(schema, params, tuple(out), BuildMeta(seed, __version__))


def build_view(
    tensor: CountTensor,
    hyperparams: Hyperparams,
    seed: int,
    *,
    workers: int = 1,
):
    """Build a private view of `tensor` end to end.

    The master stream splits once: child 0 drives the partitioning draws,
    child 1 the final perturbation.
    """
    params = derive_params(hyperparams, tensor.schema.total_domain_log2)
    master = RandomStream(seed)
    part = recursive_bisection(root_block(tensor), params, master.child(0), workers=workers)
    return perturb(part, params, master.child(1), seed=seed)
