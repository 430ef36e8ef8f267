# %% [markdown]
# # Channel grid, Leray projection and the noise path
#
# The channel is [0,1) x [0,1], periodic in x with walls at y = 0 and y = 1.
# Velocities live on a staggered (MAC) grid.  This walk-through builds a
# random field, projects it, and then draws a noise path and refines it.

# %%
import numpy as np

from katolab.fields import VelocityField, divergence, inner, l2_norm_sq, leray_project
from katolab.geometry import ChannelGrid
from katolab.noise import NoiseBasis, default_modes, evaluate_W, refine_path, sample_path, uniform_times

grid = ChannelGrid(64, 64)
rng = np.random.default_rng(0)
U = VelocityField(rng.standard_normal(grid.u_shape), rng.standard_normal(grid.v_shape), grid)
P = leray_project(U)
print("max |div U|  before:", np.abs(divergence(U)).max())
print("max |div PU| after: ", np.abs(divergence(P)).max())
print("<PU, U - PU> / ||U||^2 =", inner(P, U - P) / l2_norm_sq(U))

# %% [markdown]
# The noise is a finite sum of smooth divergence-free bumps kept away from
# the walls.  A path stores Brownian increments for each mode; refining it
# inserts Brownian-bridge points, so the coarse nodes do not move.

# %%
modes = default_modes(amplitude=2.0)
basis = NoiseBasis(modes, grid)
print("modes:", len(modes), " trace Q0 =", round(basis.trace_q0(), 5))

path = sample_path(modes, uniform_times(1.0, 16), seed=3)
fine = refine_path(path, 4)
print("coarse steps", path.n_steps, "fine steps", fine.n_steps)
print("max gap at shared nodes:", np.abs(fine.values()[::4] - path.values()).max())

W = evaluate_W(path, basis, 1.0)
print("||W(1)||^2 =", l2_norm_sq(W), " max |div W| =", np.abs(divergence(W)).max())
