"""Bayesian optimization on a toy architecture grid.

Two hidden widths on a 15 x 15 grid plus an activation choice give 675
candidate architectures. The "cost" is a Manhattan distance to the
width pair (45, 60), so the optimum is known and we can watch the
search close in on it.
"""

from lmbo.bo import run_ego
from lmbo.design_space import build_space, categorical, ordinal

widths = tuple(range(10, 81, 5))
space = build_space([
    ordinal("N1", widths),
    ordinal("N2", widths),
    categorical("F", ("relu", "tanh", "sigmoid")),
])
print("candidate architectures:", space.cardinality())


def cost(point, seed):
    n1, n2, _ = point.values
    return abs(n1 - 45) + abs(n2 - 60)


# %% One run, trial by trial
res = run_ego(cost, space, n_doe=10, n_iter=15, seed=0)
for t, best in zip(res.trials, res.best_trace()):
    n1, n2, f = t.point.values
    print(f"{t.iteration:3d} {t.phase:4s} N1={n1:3d} N2={n2:3d} F={f:8s} cost={t.objective:5.1f} best={best:5.1f}")

# %% How often is the optimum found within the budget?
hits = [run_ego(cost, space, n_doe=10, n_iter=15, seed=s).best_trace()[-1] == 0 for s in range(10)]
print(f"optimum found in {sum(hits)}/10 seeds (25 evaluations each, {25 / 675:.1%} of the grid)")
