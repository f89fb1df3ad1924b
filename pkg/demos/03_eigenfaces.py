# %% [markdown]
# Eigenfaces via the small P x P inner-product matrix, checked against the
# full covariance and used to project and reconstruct.

# %%
import numpy as np

from polarface.eigenspace import build_eigenspace, project, reconstruct
from polarface.imageio import random_face, synth_face

rng = np.random.default_rng(0)
faces = [synth_face(i, random_face(rng), noise_sigma=0.01, shape=(24, 24)) for i in range(12)]
space = build_eigenspace(faces, variance_keep=0.95)
print(f"D={space.dim}, P={len(faces)}, kept U={space.U} eigenfaces")
print("eigenvalues", np.round(space.eigenvalues, 3))

# %%
# the same eigenvalues come out of the D x D scatter matrix, at much higher cost
A = np.stack([f.vector() for f in faces]) - space.mean_face
full = np.linalg.eigvalsh(A.T @ A)[::-1][:space.U]
print("max relative difference", np.max(np.abs(full - space.eigenvalues) / full))

# %%
# reconstruction error shrinks as more eigenfaces are kept
x = faces[4].vector()
for U in (1, 3, 6, 11):
    sub = build_eigenspace(faces, 1.0, max_u=U)
    err = np.linalg.norm(x - reconstruct(project(x, sub), sub))
    print(f"U={U:2d}: reconstruction error {err:.4f}")
