"""Central finite-difference oracle shared by the MLP tests and the acceptance suite."""

import numpy as np

from mlpcm.mlp import HeadSpec, MlpModel, backward, init_model, loss
from mlpcm.rng import SplitMix64, derive_seed


def random_problem(seed: int):
    """A random small net (<= 3 layers, <= 8 units per layer) and batch."""
    rng = np.random.default_rng(seed)
    n_in = int(rng.integers(1, 6))
    n_hidden = int(rng.integers(0, 3))
    widths = tuple(int(w) for w in rng.integers(1, 9, size=n_hidden))
    n_heads = int(rng.integers(1, 3))
    specs = [HeadSpec(f"h{i}", n_in, widths, l1=float(rng.uniform(0, 0.02)), l2=float(rng.uniform(0, 0.02)))
             for i in range(n_heads)]
    model = init_model(specs, seed=derive_seed(seed, 99))
    # nonzero biases so rectifier kinks are not all at the origin
    model.theta += 0.1 * (SplitMix64(seed).uniform(model.theta.size) - 0.5)
    n = int(rng.integers(1, 12))
    x = rng.normal(size=(n, n_in))
    y = rng.normal(scale=2.0, size=(n, n_heads))
    return model, x, y


def finite_difference(model: MlpModel, x, y, h: float = 1e-5) -> np.ndarray:
    grad = np.zeros_like(model.theta)
    for i in range(model.theta.size):
        old = model.theta[i]
        model.theta[i] = old + h
        up = loss(model, x, y)
        model.theta[i] = old - h
        down = loss(model, x, y)
        model.theta[i] = old
        grad[i] = (up - down) / (2 * h)
    return grad


def gradients_agree(analytic, numeric, rel=1e-4, abs_floor=1e-6) -> bool:
    err = np.abs(analytic - numeric)
    scale = np.maximum(np.abs(analytic), np.abs(numeric))
    return bool(np.all((err <= abs_floor) | (err <= rel * scale)))


def check(seed: int) -> tuple[bool, float]:
    model, x, y = random_problem(seed)
    _, analytic = backward(model, x, y)
    numeric = finite_difference(model, x, y)
    return gradients_agree(analytic, numeric), float(np.max(np.abs(analytic - numeric)))
