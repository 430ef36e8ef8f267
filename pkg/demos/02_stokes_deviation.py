# %% [markdown]
# # How far the Stokes solution drifts from the noise
#
# z solves dz = nu P lap z dt + dW with z(0) = 0.  For small nu it should
# stay within O(nu) of W itself, path by path.  The O(nu) behaviour only
# shows once nu * lambda * T is small for the eigenvalues lambda carried by
# the noise, which is why the horizon here is short.

# %%
import numpy as np

from katolab.geometry import ChannelGrid
from katolab.noise import NoiseBasis, default_modes, sample_path, uniform_times
from katolab.regression import regress_slope
from katolab.stokes import run_stokes, stokes_deviation

grid = ChannelGrid(64, 64)
modes = default_modes(amplitude=2.0)
basis = NoiseBasis(modes, grid)
path = sample_path(modes, uniform_times(0.01, 256), seed=7)

nus = 10.0 ** np.arange(-2, -4.01, -0.5)
dev = []
for nu in nus:
    dev.append(stokes_deviation(run_stokes(grid, nu, path, basis, snapshot_every=256)))
    print(f"nu = {nu:.2e}   sup ||z - W|| = {dev[-1]:.4e}")

slope, _, r2 = regress_slope(nus, dev)
print(f"log-log slope {slope:.3f}  (R^2 = {r2:.4f})")

# %% [markdown]
# Stretching the horizon to T = 1 makes nu * lambda * T large for the
# sharper modes and the fitted slope drops towards 1/2.

# %%
long = sample_path(modes, uniform_times(1.0, 256), seed=7)
dev_long = [stokes_deviation(run_stokes(grid, nu, long, basis, snapshot_every=256)) for nu in nus]
print(f"T = 1 slope {regress_slope(nus, dev_long)[0]:.3f}")
