import numpy as np
import pytest

from enaqt.topology import (
    AncillaMode,
    AncillaWiring,
    Archetype,
    NetworkSpec,
    build_archetype,
    has_critical_link,
    path_count,
)


def test_linear_chain_edges():
    assert build_archetype(Archetype.LINEAR, 5).edges == [(0, 1), (1, 2), (2, 3), (3, 4)]


def test_complete_graph_on_three_sites():
    assert len(build_archetype("maximally_connected", 3).edges) == 3


def test_noncritical_drops_only_source_sink_edge():
    spec = build_archetype(Archetype.NON_CRITICAL, 5)
    assert len(spec.edges) == 9
    assert (0, 4) not in spec.edges


def test_loop_closes_ring():
    spec = build_archetype(Archetype.LOOP, 5)
    assert len(spec.edges) == 5 and (0, 4) in spec.edges


@pytest.mark.parametrize("kind,expected", [
    (Archetype.LOOP, True),
    (Archetype.LINEAR, False),
    (Archetype.NON_CRITICAL, False),
    (Archetype.MAXIMALLY_CONNECTED, True),
])
def test_critical_link(kind, expected):
    assert has_critical_link(build_archetype(kind, 5)) is expected


@pytest.mark.parametrize("kind,n,count", [
    (Archetype.LINEAR, 5, 1),
    (Archetype.LOOP, 5, 2),
    (Archetype.MAXIMALLY_CONNECTED, 4, 5),
    (Archetype.MAXIMALLY_CONNECTED, 5, 16),
])
def test_path_count(kind, n, count):
    assert path_count(build_archetype(kind, n)) == count


def test_default_sink_is_last_site():
    spec = NetworkSpec(3, np.ones((3, 3)) - np.eye(3))
    assert spec.sink_site == 2 and spec.source_site == 0


def test_adjacency_is_read_only():
    spec = build_archetype(Archetype.LINEAR, 3)
    with pytest.raises(ValueError):
        spec.adjacency[0, 2] = True


@pytest.mark.parametrize("adj", [
    [[0, 1], [0, 0]],
    [[1, 1], [1, 0]],
    [[0, 1, 0], [1, 0, 1]],
])
def test_invalid_adjacency_rejected(adj):
    n = len(adj)
    with pytest.raises(ValueError):
        NetworkSpec(n, adj)


def test_source_equal_sink_rejected():
    with pytest.raises(ValueError):
        NetworkSpec(2, [[0, 1], [1, 0]], sink_site=0, source_site=0)


def test_archetype_too_small():
    with pytest.raises(ValueError):
        build_archetype(Archetype.NON_CRITICAL, 2)


def test_communal_wiring():
    w = AncillaWiring.communal(4, open_to_environment=True)
    assert w.n_ancillas == 1 and w.mode is AncillaMode.COMMUNAL
    assert w.pairs() == [(i, 0) for i in range(4)]


def test_individual_wiring_subset():
    w = AncillaWiring.individual(4, sites=[1, 3])
    assert w.pairs() == [(1, 0), (3, 1)]


def test_invalid_wirings():
    with pytest.raises(ValueError):
        AncillaWiring(np.array([[True], [False]]), AncillaMode.COMMUNAL)
    with pytest.raises(ValueError):
        AncillaWiring(np.array([[True, True], [False, False]]), AncillaMode.INDIVIDUAL)


def test_ancilla_must_match_network():
    with pytest.raises(ValueError):
        build_archetype(Archetype.LINEAR, 3, AncillaWiring.communal(4))


@pytest.mark.parametrize("wiring", [None, AncillaWiring.communal(4, True), AncillaWiring.individual(4, [0, 2])])
def test_dict_round_trip(wiring):
    spec = build_archetype(Archetype.LOOP, 4, wiring)
    back = NetworkSpec.from_dict(spec.to_dict())
    assert back.edges == spec.edges
    assert back.n_ancillas == spec.n_ancillas
    assert back.to_dict() == spec.to_dict()


def test_from_dict_by_archetype_name():
    spec = NetworkSpec.from_dict({"n_sites": 5, "archetype": "noncritical"})
    assert spec.label == "noncritical" and len(spec.edges) == 9
