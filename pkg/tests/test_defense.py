"""Unit tests for the defense action catalog and its cost model."""

import numpy as np
import pytest

from cyberdefsim.attack_graph import load_graph
from cyberdefsim.defense import (
    CatalogError,
    CostParams,
    INACTIVE,
    PROACTIVE,
    REACTIVE,
    action_cost,
    block_probability,
    load_catalog,
    sample_interruptions,
)
from cyberdefsim.harness import default_catalog_path, default_graph_path


@pytest.fixture(scope="module")
def graph():
    return load_graph(default_graph_path())


@pytest.fixture(scope="module")
def catalog(graph):
    return load_catalog(default_catalog_path(), graph)


def test_default_catalog_shape(catalog):
    assert len(catalog) == 23
    kinds = [a.kind for a in catalog.actions]
    assert kinds[0] == INACTIVE and kinds[1] == REACTIVE
    assert kinds.count(PROACTIVE) == 21
    assert [a.id for a in catalog.actions] == list(range(23))


def test_every_technique_has_proactive_coverage(catalog, graph):
    covered = set().union(
        *(a.covered_techniques for a in catalog.actions if a.kind == PROACTIVE)
    )
    assert covered == set(graph.techniques)


def test_block_probability_semantics(catalog, graph):
    inactive, reactive = catalog.actions[0], catalog.actions[1]
    proactive = catalog.actions[2]
    target_id = next(iter(proactive.covered_techniques))
    covered = graph.techniques[target_id]
    uncovered = graph.techniques[
        next(t for t in graph.techniques if t not in proactive.covered_techniques)
    ]
    assert block_probability(catalog, inactive, covered) == 0.0
    assert block_probability(catalog, reactive, covered) == catalog.reactive_block_prob
    assert block_probability(catalog, proactive, covered) == proactive.block_prob
    assert block_probability(catalog, proactive, uncovered) == 0.0


def test_action_cost(catalog):
    inactive, reactive = catalog.actions[0], catalog.actions[1]
    p = catalog.cost_params
    assert action_cost(catalog, inactive, 0) == 0.0
    assert action_cost(catalog, reactive, 0) == p.impl_cost
    assert action_cost(catalog, reactive, 4) == pytest.approx(
        p.impl_cost + 4 * p.unit_interruption_cost
    )
    with pytest.raises(ValueError):
        action_cost(catalog, reactive, -1)


def test_interruptions_inactive_free(catalog):
    rng = np.random.default_rng(0)
    assert all(
        sample_interruptions(catalog, catalog.actions[0], d, rng) == 0
        for d in range(8)
    )


def test_interruptions_attenuate_with_depth(catalog):
    action = next(a for a in catalog.actions if a.fp_scale == 1.0)
    means = []
    for depth in (0, 3, 6):
        rng = np.random.default_rng(99)
        means.append(
            np.mean([sample_interruptions(catalog, action, depth, rng)
                     for _ in range(5000)])
        )
    assert means[0] > means[1] > means[2]


def test_cost_params_validation():
    with pytest.raises(CatalogError):
        CostParams(impl_cost=-1)
    with pytest.raises(CatalogError):
        CostParams(powerlaw_exponent=1.0)
    with pytest.raises(CatalogError):
        CostParams(depth_attenuation=0.0)


def test_catalog_document_roundtrip(catalog, graph):
    doc = catalog.to_document()
    clone = load_catalog(doc, graph)
    assert clone.to_document() == doc


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d["actions"][0].update(kind="proactive"),  # no inactive
        lambda d: d["actions"][1].update(kind="proactive"),  # no reactive
        lambda d: d["actions"][2].update(block_prob=1.5),
        lambda d: d["actions"][2].update(covers=[999]),
        lambda d: d["actions"][0].update(fp_scale=1.0),
        lambda d: d.update(reactive_block_prob=2.0),
        lambda d: d["actions"][2].update(id=99),
    ],
)
def test_catalog_validation(mutate, catalog, graph):
    doc = catalog.to_document()
    mutate(doc)
    with pytest.raises(CatalogError):
        load_catalog(doc, graph)


def test_uncovered_technique_rejected(catalog, graph):
    doc = catalog.to_document()
    victim = sorted(graph.techniques)[0]
    for a in doc["actions"]:
        if a["kind"] == PROACTIVE and victim in a["covers"]:
            a["covers"] = [t for t in a["covers"] if t != victim]
    with pytest.raises(CatalogError, match="without any proactive"):
        load_catalog(doc, graph)
