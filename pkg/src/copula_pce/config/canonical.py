"""Canonical scenarios shipped with copula-pce.

Both scenarios model four locations with two local random variables each
(irradiance at even indices, temperature at odd indices) and two bids per
location.  Zone X holds the bids of locations 0 and 1, zone Y those of
locations 2 and 3.

The marginals, correlations and bid functions are illustrative values chosen
so that the normal case has tight chance constraints and the Beta case has
visibly non-tight ones, with both procurement problems feasible.
"""

from __future__ import annotations

from typing import Any

from copula_pce.config.defaults import SCENARIO_SCHEMA_VERSION
from copula_pce.exceptions import PceConfigError

__all__ = [
    "CANONICAL_SCENARIOS",
    "beta8",
    "canonical_scenario",
    "location_correlation",
    "normal8",
]

LOCATIONS = 4
WITHIN_LOCATION_RHO = 0.6
CROSS_IRRADIANCE_RHO = 0.25


def location_correlation(
    locations: int = LOCATIONS,
    within: float = WITHIN_LOCATION_RHO,
    cross: float = CROSS_IRRADIANCE_RHO,
) -> list[list[float]]:
    """Block correlation over (irradiance, temperature) pairs per location.

    ``within`` couples the two variables of one location, ``cross`` couples
    irradiance variables of different locations; every other off-diagonal
    entry is zero.
    """
    d = 2 * locations
    sigma = [[0.0] * d for _ in range(d)]
    for i in range(d):
        sigma[i][i] = 1.0
    for loc in range(locations):
        g, t = 2 * loc, 2 * loc + 1
        sigma[g][t] = sigma[t][g] = within
        for other in range(loc + 1, locations):
            h = 2 * other
            sigma[g][h] = sigma[h][g] = cross
    return sigma


def _term(coeff: float, *powers: tuple[int, int]) -> dict[str, Any]:
    return {"coeff": coeff, "powers": [list(p) for p in powers]}


def _bid(bid_id: str, loc: int, terms: list[dict[str, Any]]) -> dict[str, Any]:
    return {"id": bid_id, "zone": "X" if loc < 2 else "Y", "cost": 1.0, "terms": terms}


def normal8() -> dict[str, Any]:
    """Normal marginals with linear bids; every bid sum is exactly Gaussian."""
    marginals = [
        {"kind": "normal", "mean": 30.0 + 2.0 * i, "std": 3.0 + 0.5 * i} for i in range(8)
    ]
    bids = []
    for loc in range(LOCATIONS):
        g, t = 2 * loc, 2 * loc + 1
        bids.append(_bid(f"L{loc}a", loc, [_term(1.0, (g, 1))]))
        bids.append(_bid(f"L{loc}b", loc, [_term(0.5, (g, 1)), _term(0.5, (t, 1))]))
    return {
        "schema_version": SCENARIO_SCHEMA_VERSION,
        "name": "normal8",
        "description": (
            "Eight normal variables at four locations, linear bids, "
            "R = T = 100 (reconstructed parameters)"
        ),
        "dimension": 8,
        "marginals": marginals,
        "correlation": location_correlation(),
        "monomials": {"max_degree": 1, "groups": [], "keep_cross_terms": True, "whitelist": []},
        "quadrature": {"k": 8},
        "bids": bids,
        "procurement": {
            "reserve_x": 100.0,
            "reserve_y": 100.0,
            "tie_xy": 100.0,
            "tie_yx": 100.0,
            "epsilon": 0.01,
        },
        "validation": {"n": 100_000, "seed": 1729},
    }


# Irradiance in kW/m²; temperature as deviation from 25 °C in units of 20 K.
IRRADIANCE = {"kind": "beta", "alpha": 2.0, "beta": 2.0, "lower": 0.2, "upper": 1.0}
TEMPERATURE = {"kind": "beta", "alpha": 5.0, "beta": 2.0, "lower": -1.0, "upper": 1.0}
PV_CAPACITY = 1500.0
HYBRID_CAPACITY = 1000.0


def beta8() -> dict[str, Any]:
    """Beta marginals with quadratic within-location bids (21-monomial basis)."""
    marginals = [dict(IRRADIANCE) if i % 2 == 0 else dict(TEMPERATURE) for i in range(8)]
    bids = []
    for loc in range(LOCATIONS):
        g, t = 2 * loc, 2 * loc + 1
        # PV output with temperature derating and clipping losses.
        pv = [
            _term(PV_CAPACITY, (g, 1)),
            _term(-0.08 * PV_CAPACITY, (g, 1), (t, 1)),
            _term(-0.1 * PV_CAPACITY, (g, 2)),
        ]
        hybrid = [
            _term(0.2 * HYBRID_CAPACITY),
            _term(0.7 * HYBRID_CAPACITY, (g, 1)),
            _term(-0.1 * HYBRID_CAPACITY, (t, 1)),
            _term(0.05 * HYBRID_CAPACITY, (t, 2)),
        ]
        bids.append(_bid(f"L{loc}pv", loc, pv))
        bids.append(_bid(f"L{loc}hy", loc, hybrid))
    return {
        "schema_version": SCENARIO_SCHEMA_VERSION,
        "name": "beta8",
        "description": (
            "Eight Beta variables at four locations, quadratic bids, "
            "R = 1000, T = 500 (reconstructed parameters)"
        ),
        "dimension": 8,
        "marginals": marginals,
        "correlation": location_correlation(),
        "monomials": {
            "max_degree": 2,
            "groups": [[0, 1], [2, 3], [4, 5], [6, 7]],
            "keep_cross_terms": True,
            "whitelist": [],
        },
        "quadrature": {"k": 15, "backend": "hermite"},
        "bids": bids,
        "procurement": {
            "reserve_x": 1000.0,
            "reserve_y": 1000.0,
            "tie_xy": 500.0,
            "tie_yx": 500.0,
            "epsilon": 0.01,
        },
        "validation": {"n": 100_000, "seed": 1729},
    }


CANONICAL_SCENARIOS = {"normal8": normal8, "beta8": beta8}


def canonical_scenario(name: str) -> dict[str, Any]:
    """Raw scenario document of a canonical scenario.

    Raises:
        PceConfigError: *name* is not a canonical scenario.
    """
    try:
        return CANONICAL_SCENARIOS[name]()
    except KeyError:
        known = ", ".join(sorted(CANONICAL_SCENARIOS))
        raise PceConfigError(f"Unknown canonical scenario {name!r} (known: {known})") from None
