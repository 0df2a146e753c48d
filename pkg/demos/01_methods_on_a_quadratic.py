"""Five classical momentum methods are one two-step-size update.

Each method below runs twice: once with its textbook recursion, once through
the generalized engine with the exact parameter map. The printed deviation is
the largest distance between the two iterate sequences over 1000 noisy steps;
at machine precision they are the same algorithm.
"""

import numpy as np

from gsgdm import quadratic, twin_run

prob = quadratic(np.linspace(1.0, 4.0, 10))
L = prob.L
x1 = np.linspace(-1.0, 1.0, 10)

settings = [
    ("hb",   {"beta": 0.9, "eta": 1.0 / L}),
    ("nag",  {"beta": 0.9, "gamma": 0.1 / L}),
    ("sum",  {"beta": 0.5, "alpha": 0.5 / L, "s": 1.5}),
    ("qhm",  {"beta": 0.9, "alpha": 1.0 / L, "nu": 0.7}),
    ("mass", {"beta": 0.8, "alpha": 0.2 / L, "lam": 0.01}),
    ("nag-classic", {"gamma": 1.0 / L}),
]

print("method        max |x_native - x_generalized|   max ||x||")
for method, params in settings:
    dev, norm = twin_run(method, params, prob, x1,
                         horizon=1000, sigma=0.1, seed=42)
    print("%-12s  %.3e                        %.2f" % (method, dev, norm))
