"""Factor maps from the doubling map into l_2, and correlation decay.

Run with ``python3 demos/factor_maps_and_mixing.py``.
"""

import math

import numpy as np

from unilab.ergodic import (
    DoublingMap,
    FactorMapConfig,
    StepFunction,
    correlation,
    decay_bound,
    intertwining_residual,
    pushforward,
)
from unilab.operators import WeightedShift
from unilab.spaces import SeqVector

# Phi_f(x) = sum_k f(T^k x) z_{-k+1}, with A = 2B and f the first binary digit.
S = WeightedShift.constant(2.0, 64)
cfg = FactorMapConfig.from_shift(S, 48, r=1)
f = StepFunction.first_digit()
system = DoublingMap(bits=64)

inter = intertwining_residual(f, cfg, system, 10_000, seed=0)
print(f"max |Phi(Tx) - A Phi(x)| = {inter.max_residual:.2e} (tail bound {inter.bound:.2e})")

push = pushforward(f, cfg, system, 10_000, seed=1)
m, se = push.second_moment()
print(f"second moment {m:.4f} +- {se:.4f} (exact 2/3)")
cov, cse = push.covariance_pairing(SeqVector.basis(0, cfg.tag), SeqVector.basis(1, cfg.tag))
print(f"covariance <e_0*, e_1*> {cov.real:.4f} +- {cse:.4f} (exact 1/8)")

# Correlations of sin(2 pi x) under doubling decay like 2^-n.
sin = lambda x: np.sin(2 * np.pi * x)  # noqa: E731
for n in range(0, 6):
    c = correlation(sin, sin, n, "montecarlo", 200_000, seed=n)
    q = correlation(sin, sin, n, "quadrature")
    bound = decay_bound(n, 1 / math.sqrt(2), 2 * math.pi) if n else float("nan")
    print(f"n={n}: MC {c.value.real:+.4f} +- {c.stdError:.4f}, quadrature {q.value.real:+.2e}, bound {bound:.4f}")
