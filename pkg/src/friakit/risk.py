"""Stage 3 risk assessment: candidate suggestion, matrix scoring, mitigation
arithmetic, residual acceptability.

Mitigations reduce likelihood and severity through bounded integer deltas:
simple, auditable, and order-independent because deltas sum before clamping.
The matrix and the acceptability policy are catalog files so a deployment can
substitute its authority-preferred versions without a code change.
"""

from __future__ import annotations

import json
from enum import Enum
from functools import lru_cache
from typing import Optional, Union

import pydantic
from pydantic import Field, model_validator

from .errors import OutOfRange, ParseError, SchemaError
from .model import (
    RISK_LEVEL_ORDER,
    ConsequenceRef,
    FriaDescription,
    Frozen,
    MitigationRef,
    MitigationStrategy,
    ResidualScore,
    RiskItem,
    RiskLevel,
)


# ---------------------------------------------------------------------------
# Risk matrix
# ---------------------------------------------------------------------------

class RiskMatrix(Frozen):
    """5x5 lookup from (likelihood, severity) to a risk level; must be
    monotone non-decreasing along both axes with pinned corners."""

    version: str = ""
    levels: tuple[tuple[RiskLevel, ...], ...]

    @model_validator(mode="after")
    def _well_formed(self) -> "RiskMatrix":
        if len(self.levels) != 5 or any(len(row) != 5 for row in self.levels):
            raise ValueError("matrix must be 5x5")
        if self.levels[0][0] != RiskLevel.Low:
            raise ValueError("cell (1,1) must be Low")
        if self.levels[4][4] != RiskLevel.VeryHigh:
            raise ValueError("cell (5,5) must be VeryHigh")
        for l in range(5):
            for s in range(5):
                here = RISK_LEVEL_ORDER[self.levels[l][s]]
                if l < 4 and RISK_LEVEL_ORDER[self.levels[l + 1][s]] < here:
                    raise ValueError(f"matrix not monotone in likelihood at ({l + 1},{s + 1})")
                if s < 4 and RISK_LEVEL_ORDER[self.levels[l][s + 1]] < here:
                    raise ValueError(f"matrix not monotone in severity at ({l + 1},{s + 1})")
        return self

    def level(self, likelihood: int, severity: int) -> RiskLevel:
        return self.levels[likelihood - 1][severity - 1]


def load_matrix(document: Union[bytes, str]) -> RiskMatrix:
    if isinstance(document, bytes):
        document = document.decode("utf-8")
    try:
        tree = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ParseError(f"matrix is not valid JSON: {exc}") from exc
    if not isinstance(tree, dict) or set(tree) - {"version", "levels"}:
        raise SchemaError("matrix document must carry only 'version' and 'levels'")
    try:
        return RiskMatrix(version=tree.get("version", ""), levels=tree.get("levels", ()))
    except pydantic.ValidationError as exc:
        raise SchemaError(str(exc)) from exc


@lru_cache(maxsize=None)
def default_matrix() -> RiskMatrix:
    from .catalog import seed_bytes
    return load_matrix(seed_bytes("matrix.json"))


def score_risk(likelihood: int, severity: int, matrix: RiskMatrix) -> RiskLevel:
    """Exact cell lookup; ordinals outside 1-5 are an error."""
    if not (1 <= likelihood <= 5) or not (1 <= severity <= 5):
        raise OutOfRange(f"likelihood/severity must be within 1-5, got ({likelihood},{severity})")
    return matrix.level(likelihood, severity)


# ---------------------------------------------------------------------------
# Mitigation arithmetic
# ---------------------------------------------------------------------------

def apply_mitigations(risk: RiskItem, matrix: RiskMatrix) -> RiskItem:
    """Fill in the residual: deltas sum per axis and clamp at 1; an Eliminate
    strategy forces the residual level to Low and says so in the note."""
    if not risk.scored:
        raise OutOfRange(f"risk {risk.id!r} has no likelihood/severity scores yet")
    assert risk.likelihood is not None and risk.severity is not None
    likelihood_drop = sum(m.likelihood_delta for m in risk.mitigations)
    severity_drop = sum(m.severity_delta for m in risk.mitigations)
    residual_likelihood = max(1, risk.likelihood - likelihood_drop)
    residual_severity = max(1, risk.severity - severity_drop)
    level = score_risk(residual_likelihood, residual_severity, matrix)
    note = ""
    if any(m.strategy == MitigationStrategy.Eliminate for m in risk.mitigations):
        level = RiskLevel.Low
        note = "risk eliminated; residual level forced to Low"
    return risk.model_copy(update={"residual": ResidualScore(
        likelihood=residual_likelihood,
        severity=residual_severity,
        level=level,
        note=note,
    )})


# ---------------------------------------------------------------------------
# Acceptability policy
# ---------------------------------------------------------------------------

class Acceptability(str, Enum):
    Acceptable = "Acceptable"
    Unacceptable = "Unacceptable"
    ConsultAuthority = "ConsultAuthority"


class AcceptabilityPolicy(Frozen):
    version: str = ""
    policy: dict[RiskLevel, Acceptability]

    @model_validator(mode="after")
    def _total(self) -> "AcceptabilityPolicy":
        missing = set(RiskLevel) - set(self.policy)
        if missing:
            raise ValueError(f"policy must map every level; missing {sorted(m.value for m in missing)}")
        return self


def load_acceptability(document: Union[bytes, str]) -> AcceptabilityPolicy:
    if isinstance(document, bytes):
        document = document.decode("utf-8")
    try:
        tree = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ParseError(f"policy is not valid JSON: {exc}") from exc
    if not isinstance(tree, dict) or set(tree) - {"version", "policy"}:
        raise SchemaError("policy document must carry only 'version' and 'policy'")
    try:
        return AcceptabilityPolicy(version=tree.get("version", ""), policy=tree.get("policy", {}))
    except pydantic.ValidationError as exc:
        raise SchemaError(str(exc)) from exc


@lru_cache(maxsize=None)
def default_acceptability() -> AcceptabilityPolicy:
    from .catalog import seed_bytes
    return load_acceptability(seed_bytes("acceptability.json"))


def residual_acceptability(risk: RiskItem, policy: AcceptabilityPolicy) -> Acceptability:
    if risk.residual is None:
        raise OutOfRange(f"risk {risk.id!r} has no residual yet; apply mitigations first")
    return policy.policy[risk.residual.level]


# ---------------------------------------------------------------------------
# Candidate suggestion
# ---------------------------------------------------------------------------

LOW_ACCURACY_THRESHOLD = 2


def enumerate_candidate_risks(
    f: FriaDescription,
    taxonomies: Optional[dict] = None,
) -> tuple[RiskItem, ...]:
    """Rule-based draft suggestions from the deployment description. Drafts
    carry no scores; a human assigns likelihood and severity. Suggested kinds
    and sources are checked against the risk taxonomies."""
    from .catalog import TaxonomyKind, default_taxonomies

    taxonomies = taxonomies or default_taxonomies()
    risk_ids = taxonomies[TaxonomyKind.Risk].ids()
    source_ids = taxonomies[TaxonomyKind.RiskSource].ids()
    drafts: list[RiskItem] = []
    counter = 0

    def next_id() -> str:
        nonlocal counter
        counter += 1
        return f"draft-{counter:03d}"

    for dependency in f.deployment.hardware_software:
        drafts.append(RiskItem(
            id=next_id(),
            risk_kind="component_failure",
            sources=frozenset({"system_component"}),
            threat_description=f"dependency {dependency!r} fails in operation",
        ))
    for item in f.involved_data.outputs:
        drafts.append(RiskItem(
            id=next_id(),
            risk_kind="incorrect_output",
            sources=frozenset({"system_itself"}),
            threat_description=f"output {item.name!r} is wrong for some persons",
        ))
    low_quality = [
        item for item in list(f.involved_data.inputs) + list(f.involved_data.outputs)
        if item.quality.accuracy <= LOW_ACCURACY_THRESHOLD
    ]
    for item in low_quality:
        drafts.append(RiskItem(
            id=next_id(),
            risk_kind="incorrect_output",
            sources=frozenset({"system_component"}),
            threat_description=(
                f"data component {item.name!r} has low accuracy "
                f"({item.quality.accuracy}/5) and skews outputs"
            ),
        ))
    for draft in drafts:
        assert draft.risk_kind in risk_ids and draft.sources <= source_ids
    return tuple(drafts)
