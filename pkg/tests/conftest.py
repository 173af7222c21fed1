import numpy as np

from fsodbs.knapsack import KnapsackInstance


def random_instance(rng: np.random.Generator, n: int, tightness: float = 0.4) -> KnapsackInstance:
    """Both budgets set to a fraction of the total demand so both can bind."""
    b = rng.uniform(0.2e6, 5e6, n)
    phi = rng.exponential(5e6, n) + 5e5
    frac_b, frac_r = rng.uniform(tightness * 0.5, tightness * 1.5, 2)
    return KnapsackInstance(b, phi, frac_b * b.sum(), frac_r * phi.sum())
