# %% [markdown]
# Grayscale images: render a synthetic face, round-trip it through PGM bytes
# and resample it with nearest neighbour.

# %%
import numpy as np

from polarface.imageio import read_pgm, resize_nearest, synth_face, write_pgm

img = synth_face(0, rotation=10.0, noise_sigma=0.02)
print("shape", img.shape, "range", img.pixels.min().round(3), img.pixels.max().round(3))

# %%
# 8-bit P5 keeps every pixel within half a quantisation step
raw = write_pgm(img, maxval=255)
print(raw[:13])
back = read_pgm(raw)
print("max abs error", np.abs(back.pixels - img.pixels).max(), "<=", 1 / 510)

# %%
# nearest-neighbour resampling only copies existing values
small = resize_nearest(img, 16, 16)
print(small.shape, set(small.vector()) <= set(img.vector()))

# %%
# coarse text rendering of the downsampled face
for row in small.pixels:
    print("".join(" .:-=+*#%@"[int(v * 9.999)] for v in row))
