# %% [markdown]
# # The boundary corrector
#
# The corrector copies the Euler wall velocity into a thin strip and is
# divergence-free by construction.  Its cutoff xi has zero mean, which is
# what makes the normal component vanish outside the strip.

# %%
import numpy as np

from katolab.corrector import build_corrector, build_cutoff, verify_scalings

cut = build_cutoff()
r = np.linspace(0, 1.1, 12)
print("r   ", np.round(r, 2))
print("xi  ", np.round(cut.xi(r), 3))
print("Xi  ", np.round(cut.Xi(r), 4))

# %% [markdown]
# A smooth trace, a corrector of width 0.1, and the divergence identity
# evaluated from the analytic derivative formulas.

# %%
s = np.arange(64) / 64
trace = 0.7 * np.sin(2 * np.pi * s) + 0.3 * np.cos(4 * np.pi * s)
corr = build_corrector(trace, 0.1)
S, A = np.meshgrid(np.linspace(0, 1, 101), np.linspace(0, 0.15, 151), indexing="ij")
print("max divergence residual:", np.abs(corr.divergence_residual(S, A)).max())
print("max |v_n| beyond the strip:", np.abs(corr.collar(S, A)["v_n"][A >= 0.1]).max())

# %% [markdown]
# Norms of the corrector scale like fixed powers of the width.

# %%
rep = verify_scalings(trace, [0.2, 0.1, 0.05, 0.025, 0.0125], trace_rate=np.cos(2 * np.pi * s))
for name, e in rep.items():
    print(f"{name:16s} slope {e['slope']:+.3f}   expected {e['expected']:+.1f}")
