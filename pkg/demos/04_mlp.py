# %% [markdown]
# A three-hidden-layer tanh network trained by full-batch backpropagation
# with momentum, on XOR and on a small noisy clustering problem.

# %%
import numpy as np

from polarface.mlp import TrainConfig, batch_gradient, classify, init_network, one_hot, train

X = np.array([[-1.0, -1.0], [-1.0, 1.0], [1.0, -1.0], [1.0, 1.0]])
T = np.array([[-1.0], [1.0], [1.0], [-1.0]])
net, state = train(init_network((2, 8, 8, 8, 1), seed=0), X, T,
                   TrainConfig(learning_rate=0.05, momentum=0.9, max_epochs=3000, target_mse=1e-3))
print(f"XOR: {state.epoch} epochs, final mse {state.final_mse:.2e}")
print("mse every 50 epochs", np.round(state.mse_history[::50], 4))

# %%
# the batch gradient is the exact sum of per-example gradients
g = batch_gradient(net, X, T).flat()
parts = sum(batch_gradient(net, X[i:i + 1], T[i:i + 1]).flat() for i in range(4))
print("additive:", np.array_equal(g, parts))

# %%
# four Gaussian clusters in 10 dimensions, one-hot targets in {-1, +1}
rng = np.random.default_rng(1)
centres = rng.normal(size=(4, 10))
labels = np.repeat(np.arange(4), 15)
inputs = centres[labels] + 0.3 * rng.normal(size=(60, 10))
net, state = train(init_network((10, 16, 12, 8, 4), seed=2), inputs, one_hot(labels, 4),
                   TrainConfig(max_epochs=2000, target_mse=1e-2))
pred = np.array([classify(net, x) for x in inputs])
print(f"clusters: {state.epoch} epochs, training accuracy {np.mean(pred == labels):.3f}")
print("with threshold 0.999:", [classify(net, x, 0.999) for x in inputs[:6]])
