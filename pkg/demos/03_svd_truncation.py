"""What SVD truncation does to an ill-conditioned ARX regression.

Slowly varying input and a generous model order make the regressor columns
nearly collinear. Dropping the smallest singular values trades a little bias
for a large cut in coefficient variance.
"""
# %%
import numpy as np

from arxthermal import (
    ArxModel,
    ArxOrders,
    build_regression,
    default_threshold_grid,
    generate_arx,
    solve_least_squares,
    svd,
    truncate,
)
from arxthermal.selection import threshold_search
from arxthermal.synth import random_input

truth = ArxModel([-1.5, 0.7], ([1.0, 0.5],), (1,), dt=1.0, input_names=("P",))
u = random_input(800, 1.0, seed=3, levels=(0, 10), min_hold=60, max_hold=120)
data = generate_arx(truth, u, noise_std=0.5, seed=3)

# %%
orders = ArxOrders.shared(6, 6, 1)
problem = build_regression(data, orders)
factors = svd(problem.phi)
s = factors.singular_values
print(f"condition number {s[0] / s[-1]:.3g}")
print("singular values:", np.array2string(s, precision=3))

# %%
# coefficient norm and fit as the threshold grows
for theta in default_threshold_grid(factors, 8):
    reduced = truncate(factors, theta)
    if reduced.rank == 0:
        continue
    coeffs = solve_least_squares(problem, reduced)
    resid = problem.phi @ coeffs - problem.target
    print(f"theta={theta:10.4g} rank={reduced.rank:2d} |theta|={np.linalg.norm(coeffs):8.3f} "
          f"rms residual={np.sqrt(np.mean(resid ** 2)):.4f}")

# %%
# the search scores each threshold by training free-run fit and keeps
# threshold 0 unless truncation actually improves it; here it does not
search = threshold_search(data, orders)
print(f"chosen threshold {search.model.threshold:.4g} (rank {search.model.rank}), "
      f"train free-run fit {search.train_fit:.2f}%")
