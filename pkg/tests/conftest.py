import numpy as np
import pytest
from hypothesis import settings

from saferadius.features import FeaturePartition
from saferadius.nn import Dense, Network, ReLU, Softmax

settings.register_profile("suite", max_examples=60, deadline=None)
settings.load_profile("suite")


def dense_chain(*layers, input_dims, num_classes):
    """Network from alternating (W, b) pairs with relu between and softmax last."""
    built = []
    for i, (w, b) in enumerate(layers):
        if i:
            built.append(ReLU())
        built.append(Dense(np.asarray(w, dtype=np.float64), np.asarray(b, dtype=np.float64)))
    built.append(Softmax())
    return Network(built, (input_dims,), num_classes)


def bias_net(probs):
    """Single-layer net whose softmax output equals probs for any input."""
    probs = np.asarray(probs, dtype=np.float64)
    n = probs.size
    w = np.zeros((n, 1))
    return dense_chain((w, np.log(probs)), input_dims=1, num_classes=n)


def random_dense_net(rng, n_dims, n_classes, hidden=None, scale=1.5):
    if hidden:
        w1 = rng.normal(0.0, scale, size=(hidden, n_dims))
        b1 = rng.normal(0.0, 0.3, size=hidden)
        w2 = rng.normal(0.0, scale, size=(n_classes, hidden))
        b2 = rng.normal(0.0, 0.3, size=n_classes)
        return dense_chain((w1, b1), (w2, b2), input_dims=n_dims, num_classes=n_classes)
    w = rng.normal(0.0, scale, size=(n_classes, n_dims))
    b = rng.normal(0.0, 0.3, size=n_classes)
    return dense_chain((w, b), input_dims=n_dims, num_classes=n_classes)


def dyadic_base(rng, n_dims):
    """Base inputs on a 1/16 lattice so grid arithmetic stays exact."""
    return rng.integers(4, 13, size=n_dims).astype(np.float64) / 16.0


def halves_partition(n_dims):
    mid = max(1, n_dims // 2)
    return FeaturePartition(
        (tuple(range(mid)), tuple(range(mid, n_dims))) if mid < n_dims else (tuple(range(n_dims)),),
        "blocks",
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
