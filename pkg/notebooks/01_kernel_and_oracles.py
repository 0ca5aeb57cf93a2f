# %% [markdown]
# # The radial Riesz kernel and its oracles
#
# A radial function on R^N is stored by its values on a graded grid
# r_i = R (i/M)^gamma.  The Riesz potential I_alpha * f becomes a dense
# matrix acting on those values.  Here we build that matrix and check it
# against two closed forms: the potential of the unit ball in R^3 and the
# conformal identity that maps (1+r^2)^{-(N+alpha)/2} to a multiple of
# (1+r^2)^{-(N-alpha)/2}.

# %%
from __future__ import annotations

import numpy as np

from choquard.checks import ball_indicator, extremal_ratio, newtonian_ball
from choquard.grid import GridSpec, build_grid
from choquard.riesz import build_kernel, convolve

# %% [markdown]
# ## Newtonian potential of the unit ball
#
# With alpha = 2 in three dimensions the kernel is 1/(4 pi |x|).  Choosing
# R = 6.25 and gamma = 2 places a node exactly on the sphere r = 1.

# %%
grid3 = build_grid(GridSpec(3, 6.25, 1000, 2.0))
K3 = build_kernel(grid3, 2.0)
pot = convolve(K3, ball_indicator(grid3)).values
sel = grid3.nodes <= 5.0
rel = np.abs(pot[sel] - newtonian_ball(grid3.nodes[sel])) / newtonian_ball(grid3.nodes[sel])
print(f"max relative error on [0, 5]: {rel.max():.2e}")
for r in (0.0, 0.5, 1.0, 2.0, 4.0):
    i = int(np.argmin(np.abs(grid3.nodes - r)))
    print(f"r={grid3.nodes[i]:7.4f}  grid={pot[i]:.8f}  exact={float(newtonian_ball(grid3.nodes[i])):.8f}")

# %% [markdown]
# ## Conformal identity in seven dimensions
#
# The ratio of the computed potential to (1+r^2)^{-(N-alpha)/2} should be
# flat.  Its relative spread over r <= R/4 measures the kernel accuracy.

# %%
grid7 = build_grid(GridSpec(7, 60.0, 2000, 2.0))
K7 = build_kernel(grid7, 2.0)
r, ratio = extremal_ratio(K7)
print(f"ratio mean {ratio.mean():.10f}, relative spread {(ratio.max() - ratio.min()) / ratio.mean():.2e}")
