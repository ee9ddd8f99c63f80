"""Where does progressive SI grow fastest on a skewed citation grid?

For a pure power law ``h = k * C**e`` the progressive SI over the global
C grid does not depend on ``k``, so the step pattern is a function of the
exponent alone.  This scans ``e`` and prints which grid interval carries
the largest increment, along with the exponents implied by each fitted
model family at typical parameter values.

    python scripts/progressive_increments.py
"""

import numpy as np

from hsens.dataio import ECOLOGY_TABLE
from hsens.sensitivity import GLOBAL_PERCENTS, progressive_si

EXAMPLES = {
    "G-S, alpha=1.77": 1.77 / 2.77,
    "E-R, alpha=5.346": 1 / 5.346,
    "Hirsch, ab=8.6": 1 / 8.6,
}


def largest_step(grid, e):
    steps = np.diff(progressive_si(grid ** e))
    return int(np.argmax(steps)), steps


def main() -> None:
    grid = np.array(ECOLOGY_TABLE["C"][1:8], float)
    labels = [f"{int(a)}->{int(b)}" for a, b in zip(GLOBAL_PERCENTS[:-1], GLOBAL_PERCENTS[1:])]
    print("grid:", grid.tolist())
    prev = None
    for e in np.round(np.arange(0.05, 1.0001, 0.01), 2):
        k, _ = largest_step(grid, e)
        if k != prev:
            print(f"exponent >= {e:.2f}: largest step {labels[k]}")
            prev = k
    for name, e in EXAMPLES.items():
        k, steps = largest_step(grid, e)
        print(f"{name:<18} exponent {e:.3f}  steps {np.round(steps, 3).tolist()}  largest {labels[k]}")


if __name__ == "__main__":
    main()
