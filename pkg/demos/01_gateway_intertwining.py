"""Walk through the gateway between continuous and discrete non-colliding processes.

We evaluate the Markov link from the continuous chamber to the discrete
chamber, then check numerically that running the continuous diffusion first
and linking afterwards gives the same law as linking first and running the
conditioned birth-death chain.  Both sides are reduced to small determinants
of one-dimensional integrals and sums.

Run with ``python demos/01_gateway_intertwining.py``.
"""
import numpy as np

from kmlinks import lambda_n, q_nd
from kmlinks.verify import check_intertwining_free, check_intertwining_stationary, render_table

x = np.array([0.5, 2.0])
print("Link probabilities Lambda_2(x, y) for x = (0.5, 2):")
for y in [(0, 1), (0, 2), (1, 2), (1, 3)]:
    print(f"  y = {y}:  {lambda_n(x, y):.6f}")

# At a coincident point the determinant form is 0/0; the Schur form takes over.
print(f"\nLambda_2((1, 1), (0, 1)) = {lambda_n([1.0, 1.0], [0, 1]):.12f}")
print(f"Lambda_2((1, 1+1e-6), (0, 1)) = {lambda_n([1.0, 1.0 + 1e-6], [0, 1], method='determinant'):.12f}")

res = q_nd(1.0, 0.5, x, [1.0, 3.0])
print(f"\nNon-colliding density q_0.5((0.5, 2), (1, 3)) = {res.value:.10f} (bound {res.error_bound:.1e})")

reports = [
    check_intertwining_free(1.0, 0.5, x, (1, 3)),
    check_intertwining_free(2.5, 1.0, x, (0, 2)),
    check_intertwining_stationary(2.0, 0.5, 1.0, x, (0, 3)),
]
print()
print(render_table(reports))
