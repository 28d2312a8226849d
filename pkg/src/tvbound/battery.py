"""The fixed distribution battery and default grids used by ``tvbound verify``.

Changing anything here changes the regression baseline; bump BATTERY_VERSION.
"""
from __future__ import annotations

from .distributions import Distribution, Finite, Geometric, Poisson, Zipf, construct_slow_rate, uniform

BATTERY_VERSION = "1"

VERIFY_N = (16, 64, 256, 1024)
VERIFY_EPS = (0.05, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0, 1.5)
SLOW_RATES = tuple(1.0 / (n + 1) for n in range(1, 17))


def battery() -> list[tuple[str, Distribution]]:
    return [
        ("point_mass", Finite((1.0,))),
        ("uniform_k2", uniform(2)),
        ("uniform_k10", uniform(10)),
        ("uniform_k100", uniform(100)),
        ("geometric_q0.3", Geometric(0.3)),
        ("geometric_q0.5", Geometric(0.5)),
        ("geometric_q0.9", Geometric(0.9)),
        ("poisson_lambda1", Poisson(1.0)),
        ("poisson_lambda5", Poisson(5.0)),
        ("zipf_s1.5", Zipf(1.5)),
        ("zipf_s2.5", Zipf(2.5)),
        ("slowrate_N16", construct_slow_rate(SLOW_RATES)),
    ]
