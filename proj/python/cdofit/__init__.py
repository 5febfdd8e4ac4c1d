"""Copula compatibility checks, price bounds and hedges for CDO tranches.

Quotes, spreads and bounds are decimals throughout (0.0058 is 58 bp).
"""

from ._core import (
    Error,
    Snapshot,
    implied_index_spread,
    load_snapshot,
    max_entropy_dpm,
    names_bounds,
    parse_snapshot,
    posterior_dpm,
    simulate,
    spread_delta,
    tranche_bounds,
    tranche_range,
    verify_strong,
    verify_strong_iterative,
    verify_weak,
)

__version__ = "0.1.0"
