"""How trustworthy are the runtime error bounds?

Builds one view, then measures how often the actual error of a query stays
under the reported theta_max across many reruns of the perturbation, for a
few failure probabilities mu. The bound is conservative by design: observed
coverage should sit above 1 - mu.
"""

import numpy as np

from pview import (
    Hyperparams,
    NoiseFreeStream,
    RandomStream,
    RangeQuery,
    answer,
    answer_exact,
    derive_params,
    error_bounds,
    estimate_xi,
    make_concentrated_tensor,
    perturb,
    recursive_bisection,
    root_block,
    sample_laplace_array,
)

tensor = make_concentrated_tensor((16, 16), 2_000, spread=1.5, seed=3)
params = derive_params(Hyperparams(1.0), tensor.schema.total_domain_log2)

# A noise-free partition keeps the block structure fixed so reruns only
# redraw the Laplace perturbation, which is what the bound is about.
part = recursive_bisection(root_block(tensor), params, NoiseFreeStream())
blocks = sorted(part.blocks, key=lambda b: b.ranges)
view = perturb(part, params, NoiseFreeStream())
print(f"partition: {len(blocks)} blocks")

# The skew factor xi is the one data-dependent input. Exhaustive here.
xi = [estimate_xi(tensor, b) for b in blocks]
print(f"skew factors: min {min(xi):.2f}, max {max(xi):.2f}")

query = RangeQuery(((4, 11), (4, 11)))
bias = answer(view, query) - answer_exact(tensor, query)

weights = []
for b in blocks:
    frac = 1.0
    for (s, e), (lo, hi) in zip(b.ranges, query.ranges):
        frac *= max(min(e, hi) - max(s, lo) + 1, 0)
    weights.append(frac / b.size)
weights = np.array(weights)

reruns = 20_000
noise = sample_laplace_array(
    1.0 / params.epsilon_p, RandomStream(11), reruns * len(blocks)
).reshape(reruns, len(blocks))
errors = np.abs(bias + noise @ weights)

print(f"\nquery {query.ranges}: averaging bias {bias:+.2f}")
print(f"{'mu':>6} {'theta_max':>10} {'coverage':>9} {'target':>7}")
for mu in (0.2, 0.1, 0.05, 0.01):
    eb = error_bounds(view, query, mu, xi=xi)
    coverage = float(np.mean(errors <= eb.theta_max))
    print(f"{mu:>6} {eb.theta_max:>10.1f} {coverage:>9.4f} {1 - mu:>7}")

# theta_min is the other side: a floor below which the error is unlikely
# to stay. Useful for telling "the answer is 0 +/- 300" from "0 +/- 3".
eb = error_bounds(view, query, 0.05, xi=xi)
print(f"\nat mu=0.05 the error is likely inside [{eb.theta_min:.1f}, {eb.theta_max:.1f}]")
