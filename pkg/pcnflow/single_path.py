"""
Single path - Widest-path routing baseline.

Payments are routed one at a time along the path of largest bottleneck
capacity; a payment succeeds only if that bottleneck covers it in full.
"""

import heapq
from typing import Dict, List, Optional, Sequence, Tuple

from .amount import Amount, NodeId
from .logger import setup_logger
from .network import Demand, FlowAssignment, FlowNetwork
from .outcomes import Infeasible, Outcome, Success


logger = setup_logger("pcnflow.single_path")


class SinglePathRouter:
    """Widest-path router over a private, mutable copy of the channel capacities."""

    def __init__(self, net: FlowNetwork):
        self.net = net
        self.capacity: Dict[Tuple[NodeId, NodeId], Amount] = dict(net.capacities)

    def widest_path(self, source: NodeId, sink: NodeId) -> Tuple[Amount, Optional[List[NodeId]]]:
        """
        Max-bottleneck Dijkstra.

        Returns:
            (bottleneck, path) with path None when the sink is unreachable over
            positive-capacity channels
        """
        best: Dict[NodeId, Amount] = {source: -1}
        prev: Dict[NodeId, NodeId] = {}
        heap: List[Tuple[Amount, NodeId]] = [(0, source)]
        done = set()
        while heap:
            negative, u = heapq.heappop(heap)
            if u in done:
                continue
            done.add(u)
            if u == sink:
                break
            width = -negative if u != source else None
            for v in self.net.out_neighbors(u):
                c = self.capacity.get((u, v), 0)
                if c <= 0 or v in done:
                    continue
                through = c if width is None else min(width, c)
                if through > best.get(v, 0):
                    best[v] = through
                    prev[v] = u
                    heapq.heappush(heap, (-through, v))

        if sink not in prev:
            return 0, None
        path = [sink]
        while path[-1] != source:
            path.append(prev[path[-1]])
        path.reverse()
        return best[sink], path

    def route(self, source: NodeId, sink: NodeId, amount: Amount) -> Outcome:
        """Route amount along the widest path, consuming capacity on success."""
        if amount == 0:
            return Success(delivered=0)
        bottleneck, path = self.widest_path(source, sink)
        if path is None or bottleneck < amount:
            return Infeasible(delivered=0)

        flow = FlowAssignment()
        for u, v in zip(path, path[1:]):
            self.capacity[(u, v)] -= amount
            flow.push(u, v, amount)
        return Success(delivered=amount, flow=flow, path=tuple(path))


def single_path_route(net_state: SinglePathRouter, s: NodeId, t: NodeId, d: Amount) -> Outcome:
    """Route d from s to t on the widest path of net_state."""
    return net_state.route(s, t, d)


def single_path_batch(net: FlowNetwork, demands: Sequence[Demand]) -> List[Outcome]:
    """Route demands in order, each on the capacity the earlier ones left."""
    router = SinglePathRouter(net)
    outcomes = [router.route(s, t, d) for s, t, d in demands]
    logger.debug(f"single path batch: {sum(o.ok for o in outcomes)}/{len(outcomes)} succeeded")
    return outcomes
