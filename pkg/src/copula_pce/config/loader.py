"""Scenario loader for copula-pce.

Implements the 3-layer resolution pipeline:

    1. Compiled defaults   (``config/defaults.py``)
    2. Scenario document   (JSON file, or a canonical scenario by name)
    3. CLI/API overrides   (seed, k, samples, threads, node_budget, ...)

The merged document is validated field by field; every error message starts
with the JSON path of the offending field, e.g. ``bids[3].terms[0].powers``.
"""

from __future__ import annotations

import copy
import logging
import math
from pathlib import Path
from typing import TYPE_CHECKING, Any

from copula_pce.config.canonical import CANONICAL_SCENARIOS, canonical_scenario
from copula_pce.config.defaults import DEFAULT_SECTIONS, SCENARIO_SCHEMA_VERSION
from copula_pce.config.types import (
    MonomialConfig,
    QuadratureConfig,
    RuntimeConfig,
    Scenario,
    ValidationConfig,
)
from copula_pce.core.copula import copula_new
from copula_pce.core.distributions import marginal_from_dict
from copula_pce.core.pce import ZONES, BidFunction, PolyTerm
from copula_pce.core.procurement import ProcurementSpec
from copula_pce.core.quadrature import MAX_RULE_ORDER
from copula_pce.core.serializer import read_json
from copula_pce.exceptions import (
    NotPositiveDefiniteError,
    PceConfigError,
    PceValidationError,
)

if TYPE_CHECKING:
    from collections.abc import Mapping

__all__ = ["OVERRIDE_KEYS", "load_scenario", "read_scenario_document"]

logger = logging.getLogger(__name__)

BACKENDS = ("hermite", "legendre")

_TOP_LEVEL_KEYS = frozenset(
    {
        "schema_version",
        "name",
        "description",
        "dimension",
        "marginals",
        "correlation",
        "bids",
        *DEFAULT_SECTIONS,
    }
)
_SECTION_KEYS: dict[str, frozenset[str]] = {
    name: frozenset(values) for name, values in DEFAULT_SECTIONS.items()
}
_SECTION_KEYS["procurement"] = frozenset(
    {"reserve_x", "reserve_y", "tie_xy", "tie_yx", "epsilon"}
)
_BID_KEYS = frozenset({"id", "zone", "cost", "terms"})
_TERM_KEYS = frozenset({"coeff", "powers"})

# Override name -> (section, key) in the merged document.
OVERRIDE_KEYS: dict[str, tuple[str, str]] = {
    "seed": ("validation", "seed"),
    "samples": ("validation", "n"),
    "bins": ("validation", "bins"),
    "k": ("quadrature", "k"),
    "node_budget": ("quadrature", "node_budget"),
    "backend": ("quadrature", "backend"),
    "threads": ("runtime", "threads"),
    "solver": ("runtime", "solver"),
}


# ---------------------------------------------------------------------------
# Sources
# ---------------------------------------------------------------------------


def read_scenario_document(source: str | Path | Mapping[str, Any]) -> dict[str, Any]:
    """Raw scenario document from a mapping, a canonical name or a JSON file.

    A string that names a canonical scenario and is not an existing path
    resolves to the compiled canonical document.
    """
    if not isinstance(source, (str, Path)):
        return copy.deepcopy(dict(source))
    if isinstance(source, str) and source in CANONICAL_SCENARIOS and not Path(source).exists():
        logger.debug("Using canonical scenario %s", source)
        return canonical_scenario(source)
    path = Path(source)
    if not path.is_file():
        known = ", ".join(sorted(CANONICAL_SCENARIOS))
        raise PceConfigError(
            f"Scenario file does not exist: {path} (canonical scenarios: {known})"
        )
    data = read_json(path)
    if not isinstance(data, dict):
        raise PceConfigError(f"{path}: scenario must be a JSON object")
    logger.debug("Read scenario file %s", path)
    return data


# ---------------------------------------------------------------------------
# Layer merging
# ---------------------------------------------------------------------------


def _get_defaults_dict() -> dict[str, Any]:
    return copy.deepcopy(DEFAULT_SECTIONS)


def _warn_unknown(data: Mapping[str, Any], known: frozenset[str], path: str) -> None:
    for key in data:
        if key not in known:
            logger.warning("Unknown configuration key ignored: %s", f"{path}{key}")


def _merge_document(config_dict: dict[str, Any], document: Mapping[str, Any]) -> None:
    """Merge the scenario document into the defaults, section by section."""
    _warn_unknown(document, _TOP_LEVEL_KEYS, "")
    for key, value in document.items():
        if key not in _TOP_LEVEL_KEYS:
            continue
        if key in _SECTION_KEYS:
            if not isinstance(value, dict):
                raise PceConfigError(f"{key}: expected an object, got {type(value).__name__}")
            _warn_unknown(value, _SECTION_KEYS[key], f"{key}.")
            section = config_dict.setdefault(key, {})
            section.update({k: v for k, v in value.items() if k in _SECTION_KEYS[key]})
        else:
            config_dict[key] = value


def _merge_overrides(config_dict: dict[str, Any], overrides: Mapping[str, Any]) -> None:
    for key, value in overrides.items():
        if value is None:
            continue
        if key == "identity_correlation":
            if value:
                d = len(config_dict.get("marginals") or [])
                config_dict["correlation"] = [
                    [1.0 if i == j else 0.0 for j in range(d)] for i in range(d)
                ]
            continue
        target = OVERRIDE_KEYS.get(key)
        if target is None:
            logger.warning("Unknown override ignored: %s", key)
            continue
        section, field_name = target
        config_dict[section][field_name] = value
        logger.debug("Override %s.%s = %r", section, field_name, value)


# ---------------------------------------------------------------------------
# Field validators
# ---------------------------------------------------------------------------


def _require(data: Mapping[str, Any], key: str, path: str) -> Any:
    if key not in data:
        raise PceConfigError(f"{path}{key}: required field is missing")
    return data[key]


def _int(value: Any, path: str, *, minimum: int | None = None, maximum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise PceConfigError(f"{path}: expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise PceConfigError(f"{path}: must be >= {minimum}, got {value}")
    if maximum is not None and value > maximum:
        raise PceConfigError(f"{path}: must be <= {maximum}, got {value}")
    return value


def _number(value: Any, path: str, *, positive: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise PceConfigError(f"{path}: expected a number, got {value!r}")
    number = float(value)
    if not math.isfinite(number):
        raise PceConfigError(f"{path}: must be finite, got {value!r}")
    if positive and number <= 0.0:
        raise PceConfigError(f"{path}: must be > 0, got {value!r}")
    return number


def _bool(value: Any, path: str) -> bool:
    if not isinstance(value, bool):
        raise PceConfigError(f"{path}: expected true or false, got {value!r}")
    return value


def _str(value: Any, path: str) -> str:
    if not isinstance(value, str) or not value:
        raise PceConfigError(f"{path}: expected a non-empty string, got {value!r}")
    return value


def _list(value: Any, path: str, *, non_empty: bool = False) -> list[Any]:
    if not isinstance(value, list):
        raise PceConfigError(f"{path}: expected an array, got {type(value).__name__}")
    if non_empty and not value:
        raise PceConfigError(f"{path}: must not be empty")
    return value


def _index_list(value: Any, path: str, d: int) -> tuple[int, ...]:
    items = _list(value, path)
    return tuple(_int(v, f"{path}[{i}]", minimum=0, maximum=d - 1) for i, v in enumerate(items))


# ---------------------------------------------------------------------------
# Section builders
# ---------------------------------------------------------------------------


def _build_marginals(config_dict: dict[str, Any]) -> tuple[Any, ...]:
    items = _list(_require(config_dict, "marginals", ""), "marginals", non_empty=True)
    marginals = []
    for i, item in enumerate(items):
        if not isinstance(item, dict):
            raise PceConfigError(f"marginals[{i}]: expected an object")
        try:
            marginals.append(marginal_from_dict(item))
        except PceConfigError as exc:
            raise PceValidationError(f"marginals[{i}]: {exc}") from exc
    if "dimension" in config_dict:
        d = _int(config_dict["dimension"], "dimension", minimum=1)
        if d != len(marginals):
            raise PceConfigError(f"dimension: {d} does not match {len(marginals)} marginals")
    return tuple(marginals)


def _build_correlation(value: Any, d: int) -> tuple[tuple[float, ...], ...]:
    rows = _list(value, "correlation")
    if len(rows) != d:
        raise PceConfigError(f"correlation: expected {d} rows, got {len(rows)}")
    matrix = []
    for i, row in enumerate(rows):
        row = _list(row, f"correlation[{i}]")
        if len(row) != d:
            raise PceConfigError(f"correlation[{i}]: expected {d} entries, got {len(row)}")
        matrix.append(tuple(_number(v, f"correlation[{i}][{j}]") for j, v in enumerate(row)))
    try:
        copula_new(matrix)
    except (PceValidationError, NotPositiveDefiniteError) as exc:
        raise PceValidationError(f"correlation: {exc}") from exc
    return tuple(matrix)


def _build_monomials(section: Mapping[str, Any], d: int) -> MonomialConfig:
    groups = _list(section["groups"], "monomials.groups")
    whitelist = _list(section["whitelist"], "monomials.whitelist")
    config = MonomialConfig(
        max_degree=_int(section["max_degree"], "monomials.max_degree", minimum=1),
        groups=tuple(
            _index_list(g, f"monomials.groups[{i}]", d) for i, g in enumerate(groups)
        ),
        keep_cross_terms=_bool(section["keep_cross_terms"], "monomials.keep_cross_terms"),
        whitelist=tuple(
            tuple(
                _int(e, f"monomials.whitelist[{i}][{j}]", minimum=0)
                for j, e in enumerate(_list(w, f"monomials.whitelist[{i}]"))
            )
            for i, w in enumerate(whitelist)
        ),
    )
    for i, exps in enumerate(config.whitelist):
        if len(exps) != d:
            raise PceConfigError(
                f"monomials.whitelist[{i}]: expected {d} exponents, got {len(exps)}"
            )
    try:
        config.to_filter()
    except PceConfigError as exc:
        raise PceConfigError(f"monomials.groups: {exc}") from exc
    return config


def _build_quadrature(section: Mapping[str, Any]) -> QuadratureConfig:
    backend = _str(section["backend"], "quadrature.backend")
    if backend not in BACKENDS:
        raise PceConfigError(
            f"quadrature.backend: must be one of {', '.join(BACKENDS)}, got {backend!r}"
        )
    return QuadratureConfig(
        k=_int(section["k"], "quadrature.k", minimum=1, maximum=MAX_RULE_ORDER),
        node_budget=_int(section["node_budget"], "quadrature.node_budget", minimum=1),
        backend=backend,
    )


def _build_term(item: Any, path: str, d: int) -> PolyTerm:
    if not isinstance(item, dict):
        raise PceConfigError(f"{path}: expected an object")
    _warn_unknown(item, _TERM_KEYS, f"{path}.")
    coeff = _number(_require(item, "coeff", f"{path}."), f"{path}.coeff")
    pairs = []
    for p, pair in enumerate(_list(item.get("powers", []), f"{path}.powers")):
        pair_path = f"{path}.powers[{p}]"
        pair = _list(pair, pair_path)
        if len(pair) != 2:
            raise PceConfigError(f"{pair_path}: expected [variable, power]")
        pairs.append(
            (
                _int(pair[0], f"{pair_path}[0]", minimum=0, maximum=d - 1),
                _int(pair[1], f"{pair_path}[1]", minimum=0),
            )
        )
    try:
        return PolyTerm(coeff, tuple(pairs))
    except PceConfigError as exc:
        raise PceConfigError(f"{path}.powers: {exc}") from exc


def _build_bids(value: Any, d: int) -> tuple[BidFunction, ...]:
    items = _list(value, "bids", non_empty=True)
    bids: list[BidFunction] = []
    seen: set[str] = set()
    for i, item in enumerate(items):
        path = f"bids[{i}]"
        if not isinstance(item, dict):
            raise PceConfigError(f"{path}: expected an object")
        _warn_unknown(item, _BID_KEYS, f"{path}.")
        bid_id = _str(_require(item, "id", f"{path}."), f"{path}.id")
        if bid_id in seen:
            raise PceConfigError(f"{path}.id: duplicate bid id {bid_id!r}")
        seen.add(bid_id)
        zone = item.get("zone", "X")
        if zone not in ZONES:
            raise PceConfigError(f"{path}.zone: must be 'X' or 'Y', got {zone!r}")
        cost = _number(item.get("cost", 1.0), f"{path}.cost")
        if cost < 0.0:
            raise PceConfigError(f"{path}.cost: must be >= 0, got {cost!r}")
        terms = _list(_require(item, "terms", f"{path}."), f"{path}.terms", non_empty=True)
        bids.append(
            BidFunction(
                id=bid_id,
                terms=tuple(
                    _build_term(t, f"{path}.terms[{j}]", d) for j, t in enumerate(terms)
                ),
                zone=zone,
                cost=cost,
            )
        )
    zones = [b.zone for b in bids]
    if zones != sorted(zones):
        first_x = zones.index("X", zones.index("Y"))
        raise PceConfigError(
            f"bids[{first_x}].zone: zone X bids must be listed before zone Y bids"
        )
    return tuple(bids)


def _build_procurement(section: Mapping[str, Any], bids: tuple[BidFunction, ...]) -> ProcurementSpec:
    limits = {
        key: _number(_require(section, key, "procurement."), f"procurement.{key}")
        for key in ("reserve_x", "reserve_y", "tie_xy", "tie_yx")
    }
    for key, value in limits.items():
        if value < 0.0:
            raise PceConfigError(f"procurement.{key}: must be >= 0, got {value!r}")
    epsilon = _number(section["epsilon"], "procurement.epsilon")
    if not 0.0 < epsilon < 0.5:
        raise PceConfigError(f"procurement.epsilon: must lie in (0, 0.5), got {epsilon!r}")
    n_x = sum(1 for b in bids if b.zone == "X")
    n_y = len(bids) - n_x
    if n_x == 0 or n_y == 0:
        missing = "X" if n_x == 0 else "Y"
        raise PceConfigError(f"bids: zone {missing} has no bids")
    return ProcurementSpec(
        n_x=n_x,
        n_y=n_y,
        costs=tuple(b.cost for b in bids),
        epsilon=epsilon,
        **limits,
    )


def _build_validation(section: Mapping[str, Any]) -> ValidationConfig:
    return ValidationConfig(
        n=_int(section["n"], "validation.n", minimum=2),
        seed=_int(section["seed"], "validation.seed", minimum=0, maximum=2**64 - 1),
        bins=_int(section["bins"], "validation.bins", minimum=1),
    )


def _build_runtime(section: Mapping[str, Any]) -> RuntimeConfig:
    limit = _number(section["condition_limit"], "runtime.condition_limit", positive=True)
    if limit <= 1.0:
        raise PceConfigError(f"runtime.condition_limit: must be > 1, got {limit!r}")
    return RuntimeConfig(
        threads=_int(section["threads"], "runtime.threads", minimum=1),
        solver=_str(section["solver"], "runtime.solver").upper(),
        eigen_floor=_number(section["eigen_floor"], "runtime.eigen_floor", positive=True),
        condition_limit=limit,
        enforce_condition_limit=_bool(
            section["enforce_condition_limit"], "runtime.enforce_condition_limit"
        ),
        error_floor=_number(section["error_floor"], "runtime.error_floor", positive=True),
    )


def _build_scenario(config_dict: dict[str, Any]) -> Scenario:
    version = _require(config_dict, "schema_version", "")
    if version != SCENARIO_SCHEMA_VERSION:
        raise PceConfigError(
            f"schema_version: expected {SCENARIO_SCHEMA_VERSION}, got {version!r}"
        )
    name = _str(_require(config_dict, "name", ""), "name")
    description = config_dict.get("description", "")
    if not isinstance(description, str):
        raise PceConfigError("description: expected a string")

    marginals = _build_marginals(config_dict)
    d = len(marginals)
    correlation = _build_correlation(_require(config_dict, "correlation", ""), d)
    bids = _build_bids(_require(config_dict, "bids", ""), d)
    return Scenario(
        name=name,
        description=description,
        marginals=marginals,
        correlation=correlation,
        bids=bids,
        procurement=_build_procurement(config_dict["procurement"], bids),
        monomials=_build_monomials(config_dict["monomials"], d),
        quadrature=_build_quadrature(config_dict["quadrature"]),
        validation=_build_validation(config_dict["validation"]),
        runtime=_build_runtime(config_dict["runtime"]),
    )


# ---------------------------------------------------------------------------
# Public API
# ---------------------------------------------------------------------------


def load_scenario(
    source: str | Path | Mapping[str, Any],
    overrides: Mapping[str, Any] | None = None,
) -> Scenario:
    """Load, merge and validate a scenario.

    Args:
        source: Path to a scenario JSON file, the name of a canonical
            scenario, or an already parsed scenario document.
        overrides: Values applied on top of the document.  Recognised keys
            are those of :data:`OVERRIDE_KEYS` plus ``identity_correlation``
            (replace Σ by the identity).  ``None`` values are skipped.

    Returns:
        A fully validated, immutable :class:`Scenario`.

    Raises:
        PceConfigError: The document cannot be read or a field is invalid;
            the message starts with the field's JSON path.
        PceValidationError: A marginal or the correlation matrix is invalid
            (including a correlation matrix that is not positive definite).
    """
    config_dict = _get_defaults_dict()
    _merge_document(config_dict, read_scenario_document(source))
    if overrides:
        _merge_overrides(config_dict, overrides)
    scenario = _build_scenario(config_dict)
    logger.info(
        "Loaded scenario %s: d=%d, %d bids, nu=%d, k=%d",
        scenario.name,
        scenario.dim,
        len(scenario.bids),
        scenario.monomials.max_degree,
        scenario.quadrature.k,
    )
    return scenario
