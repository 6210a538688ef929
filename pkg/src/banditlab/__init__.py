"""banditlab: a linear-bandit simulation workbench.

Robust instance-optimal block sampling, a best-of-three-worlds wrapper with
stochasticity tests, the supporting convex designs, and stochastic /
corrupted / adversarial environments, all behind a deterministic seeded
harness with CSV/SVG output.
"""

__version__ = "0.1.0"
