"""Compare the block view against per-cell Laplace noise.

The per-cell baseline spends the whole budget adding unit-scale noise to
every cell, so its error on a range query grows with the query's volume.
Blockwise averaging concentrates the noise into far fewer released numbers;
on data whose mass sits in a few regions, that wins by a wide margin and
the released view is a fraction of the size.
"""

from pview import format_report, run_experiment

config = {
    "dataset": {
        "synthetic": {
            "kind": "clustered",
            "shape": [32, 32, 32],
            "n": 50_000,
            "clusters": 2,
            "spread": 0.15,
            "seed": 0,
        }
    },
    "mechanisms": ["pview", "identity"],
    "epsilons": [1.0, 0.5],
    "seeds": [0, 1, 2],
    "workloads": [
        {"kind": "random_range", "k": 2, "count": 150},
        {"kind": "marginal", "k": 1, "limit": 96},
    ],
}

report = run_experiment(config)
print(format_report(report))
print()
print("rel is rmse divided by this package's rmse at the same workload and")
print("epsilon; bytes is the serialized view size, where the per-cell")
print("baseline pays for all 32768 cells no matter where the data sits.")
