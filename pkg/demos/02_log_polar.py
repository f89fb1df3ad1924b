# %% [markdown]
# Log-polar sampling turns a rotation about the image centre into a circular
# shift of columns, and a scaling of content plus frame into almost nothing.

# %%
import numpy as np

from polarface.imageio import random_face, synth_face
from polarface.logpolar import best_column_shift, compute_geometry, log_polar_transform

g = compute_geometry(128, 128)
print(f"centre ({g.m}, {g.n}), R={g.R:g}, q={g.q}, output side S={g.S}")

params = random_face(np.random.default_rng(3))
upright = log_polar_transform(synth_face(0, params, shape=(128, 128)))

# %%
# each row is a fixed log radius, each column an angle of 360/S degrees
for angle in (-40, -20, 0, 20, 40):
    turned = log_polar_transform(synth_face(0, params, rotation=angle, shape=(128, 128)))
    k, err = best_column_shift(turned, upright)
    print(f"rotation {angle:+4d} deg -> best shift {k:+3d} columns "
          f"(expected {round(g.S * angle / 360):+3d}), residual {err:.4f}")

# %%
# scaling content together with its frame leaves the log-polar image almost unchanged
base = log_polar_transform(synth_face(0, params, shape=(64, 64)))
for s in (0.9, 1.1, 1.5, 2.0):
    n = round(64 * s)
    lp = log_polar_transform(synth_face(0, params, shape=(n, n)), side=base.width)
    print(f"scale {s}: mean abs difference {np.mean(np.abs(lp.pixels - base.pixels)):.4f}")
