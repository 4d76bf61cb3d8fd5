import numpy as np


def random_interior(rng, D, low=0.0):
    """Dirichlet(1) draw, optionally rejected until every part exceeds `low`."""
    while True:
        q = rng.dirichlet(np.ones(D))
        if q.min() > low:
            return q
