"""Pricing models so a per-prompt argmax hits target counts.

Run with ``python demos/01_dual_prices.py``.
"""
# %%
# Four prompts, two models.  Left alone, every prompt would go to the model
# that scores best on it, which here is model 0 three times out of four.
import numpy as np

from routeplan import assign_prompts, dual_objective, exact_score_oracle, solve_dual

scores = np.array([
    [0.9, 0.8],
    [0.7, 0.2],
    [0.6, 0.5],
    [0.3, 0.9],
])
idx, counts = assign_prompts(scores, [0.0, 0.0])
print("unpriced assignment:", idx, "counts:", counts)

# %%
# Suppose we can only send two prompts to model 0.  A price on model 0 lowers
# its adjusted score until the argmax hands one prompt over.  The cheapest
# prompt to move is the one where model 0's lead is smallest (prompt 0 or 2).
target = [2, 2]
sol = solve_dual(scores, target)
print("prices:", sol.alpha_star, "assignment:", sol.assignment)
print("score with counts", target, "=", sol.score)
print("exhaustive check     =", exact_score_oracle(scores, target))

# %%
# The dual objective upper-bounds the best score for every price vector and
# touches it at the optimal prices.
for alpha in ([0.0, 0.0], [0.05, 0.0], sol.alpha_star, [0.4, 0.0]):
    print(f"g({np.round(alpha, 3)}) = {dual_objective(scores, target, alpha):.4f}")

# %%
# Counts need not be integers.  With ``c = N * w`` the same call returns the
# value of the relaxed problem, which is concave in ``w``; the prices are its
# gradient up to a constant.
for w0 in np.linspace(0.0, 1.0, 6):
    w = np.array([w0, 1 - w0])
    print(f"w = {w.round(2)}  best score = {solve_dual(scores, 4 * w).score:.4f}")
