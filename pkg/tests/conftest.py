import pytest

from diskphase.potentials import LipschitzPerturbation, MonotoneGraph, PotentialPair


@pytest.fixture
def cubic_pair():
    return PotentialPair(
        bulk_graph=MonotoneGraph.cubic(),
        bulk_pi=LipschitzPerturbation.neg_identity(),
        surf_graph=MonotoneGraph.cubic(),
        surf_pi=LipschitzPerturbation.neg_identity(),
    )


@pytest.fixture
def linear_pair():
    return PotentialPair(
        bulk_graph=MonotoneGraph.zero(),
        bulk_pi=LipschitzPerturbation.zero(),
        surf_graph=MonotoneGraph.zero(),
        surf_pi=LipschitzPerturbation.zero(),
    )
