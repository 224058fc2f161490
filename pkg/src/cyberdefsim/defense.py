"""The 23-action defense space: coverage, block odds, and collateral costs."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .attack_graph import AttackGraph, Technique

INACTIVE = "inactive"
REACTIVE = "reactive"
PROACTIVE = "proactive"


class CatalogError(ValueError):
    """Raised when a catalog document fails validation."""


@dataclass(frozen=True)
class CostParams:
    impl_cost: float = 0.2
    unit_interruption_cost: float = 0.1
    powerlaw_exponent: float = 2.5
    powerlaw_max: int = 50
    depth_attenuation: float = 0.7

    def __post_init__(self):
        if self.impl_cost < 0 or self.unit_interruption_cost < 0:
            raise CatalogError("costs must be non-negative")
        if self.powerlaw_exponent <= 1:
            raise CatalogError("powerlaw_exponent must exceed 1")
        if self.powerlaw_max < 1:
            raise CatalogError("powerlaw_max must be positive")
        if not 0 < self.depth_attenuation <= 1:
            raise CatalogError("depth_attenuation must lie in (0,1]")


@dataclass(frozen=True)
class DefenseAction:
    id: int
    kind: str
    name: str
    covered_techniques: frozenset[int]
    block_prob: float
    fp_scale: float


class DefenseCatalog:
    """Immutable action catalog; shareable read-only across workers."""

    def __init__(self, actions, reactive_block_prob, cost_params, graph,
                 relaxed_counts=False):
        self.actions: list[DefenseAction] = sorted(actions, key=lambda a: a.id)
        self.reactive_block_prob = float(reactive_block_prob)
        self.cost_params = cost_params
        self._validate(graph, relaxed_counts)
        # truncated power-law pmf for interruption draws
        k = np.arange(1, cost_params.powerlaw_max + 1, dtype=float)
        w = k ** (-cost_params.powerlaw_exponent)
        self._pl_cdf = np.cumsum(w / w.sum())

    def _validate(self, graph: AttackGraph, relaxed_counts: bool):
        ids = [a.id for a in self.actions]
        if ids != list(range(len(self.actions))):
            raise CatalogError(f"action ids must be contiguous from 0, got {ids}")
        if not 0 <= self.reactive_block_prob <= 1:
            raise CatalogError("reactive_block_prob out of [0,1]")
        kinds = [a.kind for a in self.actions]
        if kinds.count(INACTIVE) != 1 or self.actions[0].kind != INACTIVE:
            raise CatalogError("exactly one inactive action, at id 0")
        if kinds.count(REACTIVE) != 1 or self.actions[1].kind != REACTIVE:
            raise CatalogError("exactly one reactive action, at id 1")
        if not relaxed_counts and kinds.count(PROACTIVE) != 21:
            raise CatalogError(
                f"expected 21 proactive actions, got {kinds.count(PROACTIVE)}"
            )
        for a in self.actions:
            if not 0 <= a.block_prob <= 1:
                raise CatalogError(f"action {a.id}: block_prob out of [0,1]")
            if a.fp_scale < 0:
                raise CatalogError(f"action {a.id}: fp_scale must be non-negative")
            if a.kind == INACTIVE and (a.covered_techniques or a.fp_scale != 0):
                raise CatalogError("inactive action must have no coverage and fp_scale 0")
            for tid in a.covered_techniques:
                if tid not in graph.techniques:
                    raise CatalogError(f"action {a.id} covers unknown technique {tid}")
        covered = set().union(
            *(a.covered_techniques for a in self.actions if a.kind == PROACTIVE),
            set(),
        )
        missing = set(graph.techniques) - covered
        if missing:
            raise CatalogError(
                f"techniques without any proactive mitigation: {sorted(missing)}"
            )

    def __len__(self) -> int:
        return len(self.actions)

    def to_document(self) -> dict:
        return {
            "reactive_block_prob": self.reactive_block_prob,
            "cost": {
                "impl_cost": self.cost_params.impl_cost,
                "unit_interruption_cost": self.cost_params.unit_interruption_cost,
                "powerlaw_exponent": self.cost_params.powerlaw_exponent,
                "powerlaw_max": self.cost_params.powerlaw_max,
                "depth_attenuation": self.cost_params.depth_attenuation,
            },
            "actions": [
                {
                    "id": a.id,
                    "kind": a.kind,
                    "name": a.name,
                    "covers": sorted(a.covered_techniques),
                    "block_prob": a.block_prob,
                    "fp_scale": a.fp_scale,
                }
                for a in self.actions
            ],
        }


def load_catalog(source, graph: AttackGraph, relaxed_counts: bool = False) -> DefenseCatalog:
    """Build a validated DefenseCatalog from a dict or a JSON file path."""
    if isinstance(source, (str, Path)):
        doc = json.loads(Path(source).read_text())
    else:
        doc = source
    try:
        cost = CostParams(**doc.get("cost", {}))
        actions = [
            DefenseAction(
                id=int(a["id"]),
                kind=str(a["kind"]),
                name=str(a["name"]),
                covered_techniques=frozenset(int(t) for t in a.get("covers", [])),
                block_prob=float(a.get("block_prob", 0.0)),
                fp_scale=float(a.get("fp_scale", 0.0)),
            )
            for a in doc["actions"]
        ]
        reactive_p = float(doc["reactive_block_prob"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CatalogError(f"malformed catalog document: {exc}") from exc
    for a in actions:
        if a.kind not in (INACTIVE, REACTIVE, PROACTIVE):
            raise CatalogError(f"action {a.id}: unknown kind {a.kind!r}")
    return DefenseCatalog(actions, reactive_p, cost, graph, relaxed_counts=relaxed_counts)


def block_probability(catalog: DefenseCatalog, action: DefenseAction,
                      target: Technique) -> float:
    """Chance `action` stops an attempt on `target` this timestep."""
    if action.kind == INACTIVE:
        return 0.0
    if action.kind == REACTIVE:
        return catalog.reactive_block_prob
    return action.block_prob if target.id in action.covered_techniques else 0.0


def sample_interruptions(catalog: DefenseCatalog, action: DefenseAction,
                         depth: int, rng) -> int:
    """Benign operations interrupted by executing `action` at stage `depth`.

    Raw count follows the truncated power law P(k) ~ k^-exponent on
    1..powerlaw_max, then shrinks geometrically with attack depth.
    """
    if action.kind == INACTIVE:
        return 0
    k = int(np.searchsorted(catalog._pl_cdf, rng.random()) + 1)
    scaled = k * action.fp_scale * catalog.cost_params.depth_attenuation ** depth
    return int(np.floor(scaled + 0.5))


def action_cost(catalog: DefenseCatalog, action: DefenseAction,
                interrupted: int) -> float:
    if interrupted < 0:
        raise ValueError("interrupted count must be non-negative")
    if action.kind == INACTIVE:
        return 0.0
    p = catalog.cost_params
    return p.impl_cost + p.unit_interruption_cost * interrupted
