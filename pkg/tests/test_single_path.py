"""
Unit tests for the single_path module.
Tests widest-path selection and the one-payment-at-a-time baseline.
"""

from pcnflow.network import Demand, FlowNetwork
from pcnflow.outcomes import Infeasible
from pcnflow.single_path import SinglePathRouter, single_path_batch, single_path_route

from conftest import S, T, V2, V3


class TestWidestPath:
    """Test cases for SinglePathRouter.widest_path."""

    def test_diamond(self, diamond_net: FlowNetwork):
        bottleneck, path = SinglePathRouter(diamond_net).widest_path(S, T)
        assert bottleneck == 2000
        assert path == [S, V3, T]

    def test_unreachable(self):
        net = FlowNetwork(3, [], 0, 2)
        assert SinglePathRouter(net).widest_path(0, 2) == (0, None)

    def test_zero_capacity_edges_ignored(self, diamond_net: FlowNetwork):
        drained = diamond_net.with_capacities({(V2, T): 0, (V3, T): 0})
        assert SinglePathRouter(drained).widest_path(S, T) == (0, None)


class TestRoute:
    """Test cases for single_path_route and single_path_batch."""

    def test_bottleneck_too_small(self, diamond_net: FlowNetwork):
        router = SinglePathRouter(diamond_net)
        assert single_path_route(router, S, T, 3000) == Infeasible(delivered=0)

    def test_success_consumes_path(self, diamond_net: FlowNetwork):
        router = SinglePathRouter(diamond_net)
        outcome = single_path_route(router, S, T, 2000)
        assert outcome.ok
        assert outcome.path == (S, V3, T)
        assert outcome.flow.excess(T) == 2000
        assert router.capacity[(S, V3)] == 0
        assert router.capacity[(V3, T)] == 1000
        assert diamond_net.capacity(S, V3) == 2000

    def test_zero_amount(self, diamond_net: FlowNetwork):
        outcome = single_path_route(SinglePathRouter(diamond_net), S, T, 0)
        assert outcome.ok
        assert outcome.path is None

    def test_batch_is_sequential(self, diamond_net: FlowNetwork):
        outcomes = single_path_batch(diamond_net, [Demand(S, T, 2000), Demand(S, T, 2000)])
        assert [o.ok for o in outcomes] == [True, False]

    def test_batch_splits_over_paths(self, diamond_net: FlowNetwork):
        outcomes = single_path_batch(diamond_net, [Demand(S, T, 1000)] * 3)
        assert [o.path for o in outcomes] == [(S, V3, T), (S, V2, V3, T), (S, V2, T)]
