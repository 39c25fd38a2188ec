"""Build a private view of a small synthetic table and query it.

The table never leaves the build step: everything after build_view touches
only the released blocks, so any number of queries costs no extra budget.
"""

import numpy as np

from pview import (
    Hyperparams,
    RangeQuery,
    answer,
    answer_exact,
    blocks_touched,
    budget_breakdown,
    build_view,
    derive_params,
    error_bounds,
    make_clustered_tensor,
)

tensor = make_clustered_tensor((64, 64), 30_000, clusters=3, spread=1.0, seed=7)
print(f"table: {tensor.total_count} records over {tensor.schema.total_domain} cells")

hp = Hyperparams(epsilon_b=1.0)
params = derive_params(hp, tensor.schema.total_domain_log2)
bd = budget_breakdown(hp, params)
print(
    f"budget: converge {bd['converge']:.3f} + cut {bd['cut']:.3f} "
    f"+ perturb {bd['epsilon_p']:.3f} = {hp.epsilon_b}"
)

view = build_view(tensor, hp, seed=2024)
print(f"view: {len(view.blocks)} blocks (domain compressed "
      f"{tensor.schema.total_domain / len(view.blocks):.0f}x)\n")

# A few range counts of growing size. Exact counts shown only to judge the
# estimates; a real deployment would not have them.
boxes = [((10, 20), (10, 20)), ((0, 31), (0, 31)), ((0, 63), (0, 63))]
print(f"{'query box':<22} {'estimate':>10} {'exact':>8} {'bound (95%)':>14} {'blocks':>7}")
for box in boxes:
    q = RangeQuery(box)
    est = answer(view, q)
    eb = error_bounds(view, q, mu=0.05)
    label = "x".join(f"[{lo},{hi}]" for lo, hi in box)
    print(
        f"{label:<22} {est:>10.1f} {answer_exact(tensor, q):>8d} "
        f"{'+/-' + format(eb.theta_max, '.1f'):>14} {blocks_touched(view, q):>7d}"
    )

# Averaging error shows up when a box cuts through a block; noise error
# grows with how many blocks the box touches. Both stay bounded.
errs = []
rng = np.random.default_rng(0)
for _ in range(200):
    lo = rng.integers(0, 64, size=2)
    hi = np.minimum(lo + rng.integers(1, 32, size=2), 63)
    q = RangeQuery(((int(lo[0]), int(hi[0])), (int(lo[1]), int(hi[1]))))
    errs.append(abs(answer(view, q) - answer_exact(tensor, q)))
print(f"\n200 random boxes: median |error| {np.median(errs):.1f}, "
      f"worst {max(errs):.1f}")
