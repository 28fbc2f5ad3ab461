"""
Peeling components off a tri-factorization
==========================================

Factorize a non-negative matrix as U W V^T with near-orthogonal factors,
then remove one component matrix at a time from the core W.  Each step
refits W_i ~ U' (W_i - P_i) V'^T, so the cores telescope:
P_1 + ... + P_k + W_{k+1} = W_1.
"""

# %%
import numpy as np

from sarascc import SolverConfig, decomposition_error, mlo_decompose, onmtf_first_layer

rng = np.random.default_rng(0)
r = 4

# %%
# A planted matrix with a known exact factorization: U and V have one
# non-zero per row, so their columns are orthogonal.
def disjoint(rows):
    M = np.zeros((rows, r))
    owner = np.concatenate([np.arange(r), rng.integers(0, r, rows - r)])
    M[np.arange(rows), owner] = rng.uniform(0.5, 1.5, rows)
    return M / np.linalg.norm(M, axis=0)


X = disjoint(12) @ rng.uniform(0.1, 1.0, (r, r)) @ disjoint(13).T
first = onmtf_first_layer(X, r, SolverConfig(seed=1))
print(f"first layer: {first.iters} sweeps, stop {first.termination}")
print(f"relative error {decomposition_error(X, first.U, first.W, first.V) / np.sum(X ** 2):.2e}, "
      f"orthogonality U {first.orth_u:.2e}, V {first.orth_v:.2e}")

# %%
# Components must fit inside the core.  Here two components each take a
# quarter of W_1, leaving half for the last core.
W1 = first.W
components = [0.25 * W1, 0.25 * W1]
dec = mlo_decompose(X, components, r, SolverConfig(seed=1))
for i, layer in enumerate(dec.layers, start=1):
    print(f"layer {i}: objective {layer.objective:.2e}, orth V {layer.orth_v:.2e}, "
          f"clamped mass {layer.violation_norm:.1e}")
print("telescoping residual:", dec.telescoping_residual)

# %%
# A component larger than the core cannot be peeled off; the layer refuses
# rather than silently clamping a large negative part.
from sarascc import ConstraintInfeasibleError

try:
    mlo_decompose(X, [2 * W1], r, SolverConfig(seed=1))
except ConstraintInfeasibleError as exc:
    print("rejected:", exc)
