"""Shared test fixtures for copula-pce.

Provides small scenario documents and models used across all test modules.
The canonical scenarios are too slow for most unit tests; ``tiny_document``
is a four-variable normal scenario whose full pipeline runs in well under a
second.
"""

from __future__ import annotations

import copy
import logging
from pathlib import Path
from typing import Any

import numpy as np
import pytest

from copula_pce.config.loader import load_scenario
from copula_pce.config.types import Scenario
from copula_pce.core.copula import JointModel, copula_new
from copula_pce.core.distributions import Beta, Normal
from copula_pce.core.pce import PceMatrix
from copula_pce.core.procurement import ProcurementSpec


def _tiny_document() -> dict[str, Any]:
    sigma = np.eye(4)
    sigma[0, 1] = sigma[1, 0] = 0.5
    sigma[2, 3] = sigma[3, 2] = 0.3
    sigma[0, 2] = sigma[2, 0] = 0.2
    bids = [
        {"id": "a", "zone": "X", "cost": 1.0, "terms": [{"coeff": 1.0, "powers": [[0, 1]]}]},
        {
            "id": "b",
            "zone": "X",
            "cost": 2.0,
            "terms": [{"coeff": 0.5, "powers": [[0, 1]]}, {"coeff": 0.5, "powers": [[1, 1]]}],
        },
        {"id": "c", "zone": "Y", "cost": 1.0, "terms": [{"coeff": 1.0, "powers": [[2, 1]]}]},
        {"id": "d", "zone": "Y", "cost": 1.5, "terms": [{"coeff": 1.0, "powers": [[3, 1]]}]},
    ]
    return {
        "schema_version": 1,
        "name": "tiny",
        "description": "Four normal variables, linear bids",
        "dimension": 4,
        "marginals": [
            {"kind": "normal", "mean": 20.0, "std": 2.0},
            {"kind": "normal", "mean": 22.0, "std": 3.0},
            {"kind": "normal", "mean": 18.0, "std": 2.5},
            {"kind": "normal", "mean": 25.0, "std": 2.0},
        ],
        "correlation": sigma.tolist(),
        "monomials": {"max_degree": 1},
        "quadrature": {"k": 4},
        "bids": bids,
        "procurement": {
            "reserve_x": 20.0,
            "reserve_y": 20.0,
            "tie_xy": 60.0,
            "tie_yx": 60.0,
            "epsilon": 0.05,
        },
        "validation": {"n": 4000, "seed": 7, "bins": 20},
    }


@pytest.fixture()
def tiny_document() -> dict[str, Any]:
    """A fresh copy of the four-variable scenario document (safe to mutate)."""
    return copy.deepcopy(_tiny_document())


@pytest.fixture()
def tiny_scenario(tiny_document: dict[str, Any]) -> Scenario:
    return load_scenario(tiny_document)


@pytest.fixture()
def tiny_scenario_file(tmp_path: Path, tiny_document: dict[str, Any]) -> Path:
    """The tiny scenario written to ``tiny.json`` in a temporary directory."""
    import orjson

    path = tmp_path / "tiny.json"
    path.write_bytes(orjson.dumps(tiny_document))
    return path


@pytest.fixture()
def std_normal_model() -> JointModel:
    """One standard normal variable."""
    return JointModel(copula_new(np.eye(1)), (Normal(0.0, 1.0),))


@pytest.fixture()
def correlated_normal_model() -> JointModel:
    """Three standard normals with a non-trivial correlation matrix."""
    sigma = np.array([[1.0, 0.5, 0.2], [0.5, 1.0, -0.3], [0.2, -0.3, 1.0]])
    return JointModel(copula_new(sigma), (Normal(0.0, 1.0),) * 3)


@pytest.fixture()
def beta_pair_model() -> JointModel:
    """Two dependent Beta variables on non-unit supports."""
    sigma = np.array([[1.0, 0.6], [0.6, 1.0]])
    return JointModel(
        copula_new(sigma),
        (Beta(2.0, 2.0, 0.2, 1.0), Beta(5.0, 2.0, -1.0, 1.0)),
    )


@pytest.fixture()
def constant_bids_pce() -> PceMatrix:
    """Eight deterministic bids of 60 each: every higher coefficient is zero."""
    return PceMatrix(a0=np.full(8, 60.0), A=np.zeros((8, 8)), bid_ids=tuple(f"b{j}" for j in range(8)))


@pytest.fixture()
def lp_spec() -> ProcurementSpec:
    """R_X = R_Y = 100 with tie-line limits that never bind."""
    return ProcurementSpec(
        n_x=4,
        n_y=4,
        reserve_x=100.0,
        reserve_y=100.0,
        tie_xy=1e6,
        tie_yx=1e6,
        costs=(1.0,) * 8,
        epsilon=0.01,
    )


@pytest.fixture(autouse=True)
def _reset_package_logger():
    """Drop handlers the CLI attaches so later tests do not write to closed streams."""
    yield
    pkg_logger = logging.getLogger("copula_pce")
    for handler in pkg_logger.handlers[:]:
        pkg_logger.removeHandler(handler)
        handler.close()
    pkg_logger.setLevel(logging.NOTSET)
