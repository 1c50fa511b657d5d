"""
Actors - Node-local state machines of the distributed locked-push protocol.

An actor sees only its own excess and heights, the channels it is an
endpoint of, and what its neighbors told it. It reacts to one message at a
time and returns the messages it wants sent.
"""

import hashlib
import json
from dataclasses import asdict, dataclass, field
from typing import Dict, Iterator, List, Mapping, Optional, Protocol, Sequence, Set, Tuple

from .amount import Amount, CommodityId, NodeId
from .logger import setup_logger


logger = setup_logger("pcnflow.actors")


class ProtocolError(RuntimeError):
    """Raised when a message breaks the protocol or an actor leaves its local view."""
    pass


@dataclass(frozen=True)
class Message:
    src: NodeId
    dst: NodeId
    commodity: CommodityId

    @property
    def kind(self) -> str:
        return type(self).__name__

    def to_dict(self) -> Dict[str, object]:
        data: Dict[str, object] = {"kind": self.kind}
        data.update(asdict(self))
        return data


@dataclass(frozen=True)
class PushRequest(Message):
    amount: Amount = 0
    sender_height: int = 0


@dataclass(frozen=True)
class PushAccept(Message):
    amount: Amount = 0


@dataclass(frozen=True)
class PushReject(Message):
    actual_height: int = 0


@dataclass(frozen=True)
class HeightUpdate(Message):
    new_height: int = 0


@dataclass(frozen=True)
class Commit(Message):
    success: bool = False


class CommitLog(Protocol):
    """Write-only sink for committed operations."""

    def push(self, i: CommodityId, u: NodeId, v: NodeId, amount: Amount) -> None: ...

    def relabel(self, i: CommodityId, u: NodeId, height: int) -> None: ...


@dataclass
class ChannelState:
    """One endpoint's copy of a channel, oriented from the owner towards the neighbor."""

    out_capacity: Amount
    in_capacity: Amount
    flows: Dict[CommodityId, Amount] = field(default_factory=dict)
    locked_out: Amount = 0
    locked_in: Amount = 0

    def flow(self, i: CommodityId) -> Amount:
        """f_i(owner, neighbor); zero when commodity i never used the channel."""
        return self.flows.get(i, 0)

    def residual(self, i: CommodityId) -> Amount:
        """c_i(owner, neighbor)."""
        return self.out_capacity - self.locked_out + max(0, -self.flow(i))

    def reverse_residual(self, i: CommodityId) -> Amount:
        """c_i(neighbor, owner)."""
        return self.in_capacity - self.locked_in + max(0, self.flow(i))

    def shift(self, i: CommodityId, delta: Amount) -> None:
        """f_i(owner, neighbor) += delta, keeping both lock totals in step."""
        before = self.flow(i)
        after = before + delta
        self.locked_out += max(0, after) - max(0, before)
        self.locked_in += max(0, -after) - max(0, -before)
        if after:
            self.flows[i] = after
        else:
            self.flows.pop(i, None)

    def drop(self, i: CommodityId) -> None:
        """Remove commodity i from the channel and release its locks."""
        if i in self.flows:
            self.shift(i, -self.flows[i])

    def snapshot(self) -> Dict[str, object]:
        return {
            "flows": {str(i): value for i, value in sorted(self.flows.items())},
            "locked_out": self.locked_out,
            "locked_in": self.locked_in,
        }


class LocalChannels(Mapping):
    """Incident channels of one actor; any other key is a locality breach."""

    def __init__(self, owner: NodeId, channels: Mapping[NodeId, ChannelState]):
        self._owner = owner
        self._channels = dict(sorted(channels.items()))
        self.accessed: Set[NodeId] = set()

    def __getitem__(self, neighbor: NodeId) -> ChannelState:
        if neighbor not in self._channels:
            logger.error(f"Actor {self._owner} accessed non-incident channel to {neighbor}")
            raise ProtocolError(f"Actor {self._owner} has no channel to {neighbor}")
        self.accessed.add(neighbor)
        return self._channels[neighbor]

    def __iter__(self) -> Iterator[NodeId]:
        return iter(self._channels)

    def __len__(self) -> int:
        return len(self._channels)


@dataclass(frozen=True)
class CommodityRole:
    """What an actor knows about a commodity: its sink, pre-source and demand."""

    sink: NodeId
    pre_source: NodeId
    demand: Amount


class NodeActor:
    """A payment-channel node running the locked-push protocol for every commodity."""

    def __init__(
        self,
        node_id: NodeId,
        channels: Mapping[NodeId, ChannelState],
        roles: Sequence[CommodityRole],
        initial_heights: Mapping[NodeId, Mapping[CommodityId, int]],
        height_cap: int,
        commit_log: CommitLog,
    ):
        """
        Args:
            node_id: This actor's node
            channels: Local channel copies keyed by neighbor
            roles: Sink, pre-source and demand per commodity
            initial_heights: Starting heights of this node and its neighbors per commodity
            height_cap: Relabels above this height are not allowed
            commit_log: Receives every push this actor accepts and every relabel it makes
        """
        self.id = node_id
        self.channels = LocalChannels(node_id, channels)
        self.roles = list(roles)
        self.height_cap = height_cap
        self._commit_log = commit_log

        k = len(self.roles)
        own = initial_heights.get(node_id, {})
        self.own_heights: List[int] = [own.get(i, 0) for i in range(k)]
        self.neighbor_heights: Dict[Tuple[CommodityId, NodeId], int] = {}
        for neighbor in self.channels:
            theirs = initial_heights.get(neighbor, {})
            for i in range(k):
                self.neighbor_heights[(i, neighbor)] = theirs.get(i, 0)
        self.excess: List[Amount] = [0] * k
        self.pending: Dict[Tuple[CommodityId, NodeId], Amount] = {}
        self.decided: Dict[CommodityId, bool] = {}

    def __repr__(self) -> str:
        return f"NodeActor(id={self.id}, channels={len(self.channels)})"

    def _is_terminal(self, i: CommodityId) -> bool:
        role = self.roles[i]
        return self.id in (role.sink, role.pre_source)

    def seed_flow(self, i: CommodityId, neighbor: NodeId, amount: Amount) -> None:
        """Apply the initial pre-source saturation to this endpoint."""
        self.channels[neighbor].shift(i, amount)
        self.excess[i] -= amount

    def start(self) -> List[Message]:
        """Messages to send at time zero."""
        messages: List[Message] = []
        for i, role in enumerate(self.roles):
            if role.sink == self.id and role.demand == 0:
                messages.extend(self._decide(i, True))
        messages.extend(self.progress_all())
        return messages

    def progress_all(self) -> List[Message]:
        """Try to make progress on every commodity, in index order."""
        messages: List[Message] = []
        for i in range(len(self.roles)):
            messages.extend(self.try_progress(i))
        return messages

    def propose_push(self, i: CommodityId, v: NodeId) -> Optional[PushRequest]:
        """Reserve δ = min(x_i, local c_i(u,v)) and request the push, if v looks lower."""
        if self.excess[i] <= 0 or (i, v) in self.pending:
            return None
        channel = self.channels[v]
        residual = channel.residual(i)
        height = self.own_heights[i]
        if residual <= 0 or self.neighbor_heights[(i, v)] >= height:
            return None
        delta = min(self.excess[i], residual)
        self.excess[i] -= delta
        self.pending[(i, v)] = delta
        logger.debug("propose %s->%s delta=%s", self.id, v, delta, extra={"commodity": i, "node": self.id})
        return PushRequest(self.id, v, i, amount=delta, sender_height=height)

    def _relabel_target(self, i: CommodityId) -> Optional[int]:
        lowest = None
        for neighbor in self.channels:
            if self.channels[neighbor].residual(i) > 0:
                believed = self.neighbor_heights[(i, neighbor)]
                if lowest is None or believed < lowest:
                    lowest = believed
        return None if lowest is None else lowest + 1

    def try_progress(self, i: CommodityId) -> List[Message]:
        """
        Propose to every eligible neighbor; relabel when nothing can be proposed.

        A relabel waits until no proposal of any commodity is in flight, so the
        local channel view it is based on is exact.
        """
        if self._is_terminal(i):
            return []
        messages: List[Message] = []
        while self.excess[i] > 0:
            for neighbor in self.channels:
                if self.excess[i] <= 0:
                    break
                request = self.propose_push(i, neighbor)
                if request is not None:
                    messages.append(request)
            if messages or self.excess[i] <= 0 or self.pending:
                break
            target = self._relabel_target(i)
            if target is None or target > self.height_cap:
                logger.debug("stuck with excess %s", self.excess[i], extra={"commodity": i, "node": self.id})
                break
            messages.extend(self._relabel(i, target))
        return messages

    def _relabel(self, i: CommodityId, target: int) -> List[Message]:
        previous = self.own_heights[i]
        self.own_heights[i] = target
        self._commit_log.relabel(i, self.id, target)
        logger.debug("relabel %s -> %s", previous, target, extra={"commodity": i, "node": self.id})
        return [HeightUpdate(self.id, neighbor, i, new_height=target) for neighbor in self.channels]

    def handle(self, message: Message) -> List[Message]:
        """Dispatch one delivered message."""
        if message.dst != self.id:
            raise ProtocolError(f"Actor {self.id} received a message for {message.dst}")
        if isinstance(message, PushRequest):
            return self.handle_push_request(message)
        if isinstance(message, (PushAccept, PushReject)):
            return self.handle_push_reply(message)
        if isinstance(message, HeightUpdate):
            return self.handle_height_update(message)
        if isinstance(message, Commit):
            return self.handle_commit(message)
        raise ProtocolError(f"Unknown message {message!r}")

    def handle_push_request(self, message: PushRequest) -> List[Message]:
        """Accept at the reduced δ' = min(δ, current c_i(u,v)) if this node is truly lower."""
        i, u = message.commodity, message.src
        channel = self.channels[u]
        height = self.own_heights[i]
        accepted = min(message.amount, channel.reverse_residual(i))
        if height >= message.sender_height or accepted <= 0:
            return [PushReject(self.id, u, i, actual_height=height)]

        channel.shift(i, -accepted)
        self.excess[i] += accepted
        self._commit_log.push(i, u, self.id, accepted)
        messages: List[Message] = [PushAccept(self.id, u, i, amount=accepted)]

        role = self.roles[i]
        if role.sink == self.id and self.excess[i] == role.demand and i not in self.decided:
            messages.extend(self._decide(i, True))
        elif role.pre_source == self.id and role.demand > 0 and self.excess[i] == 0 and i not in self.decided:
            messages.extend(self._decide(i, False))
        messages.extend(self.try_progress(i))
        return messages

    def handle_push_reply(self, message: Message) -> List[Message]:
        """Settle a pending proposal; rejected amounts return to excess and refresh the neighbor's height."""
        i, v = message.commodity, message.src
        key = (i, v)
        if key not in self.pending:
            logger.error(f"Actor {self.id} got {message.kind} from {v} without a pending proposal")
            raise ProtocolError(f"Reply {message!r} has no matching proposal")
        reserved = self.pending.pop(key)

        if isinstance(message, PushAccept):
            if not 0 < message.amount <= reserved:
                raise ProtocolError(f"Accepted amount {message.amount} outside (0, {reserved}]")
            self.channels[v].shift(i, message.amount)
            self.excess[i] += reserved - message.amount
        else:
            self.excess[i] += reserved
            self.neighbor_heights[key] = max(self.neighbor_heights[key], message.actual_height)
        return self.progress_all()

    def handle_height_update(self, message: HeightUpdate) -> List[Message]:
        """Raise the cached height of the sender; never lowers it."""
        key = (message.commodity, message.src)
        self.neighbor_heights[key] = max(self.neighbor_heights[key], message.new_height)
        return self.try_progress(message.commodity)

    def handle_commit(self, message: Commit) -> List[Message]:
        """Record the decision and flood it to every other neighbor once."""
        if message.commodity in self.decided:
            return []
        return self._decide(message.commodity, message.success, skip=message.src)

    def _decide(self, i: CommodityId, success: bool, skip: Optional[NodeId] = None) -> List[Message]:
        self.decided[i] = success
        return [Commit(self.id, neighbor, i, success=success) for neighbor in self.channels if neighbor != skip]

    def rollback(self, i: CommodityId) -> None:
        """Forget commodity i on every local channel."""
        for neighbor in self.channels:
            self.channels[neighbor].drop(i)
        self.excess[i] = 0

    def has_pending(self) -> bool:
        """True while a proposal awaits a reply."""
        return bool(self.pending)

    def snapshot(self) -> Dict[str, object]:
        return {
            "id": self.id,
            "heights": list(self.own_heights),
            "excess": list(self.excess),
            "pending": {f"{i}:{v}": amount for (i, v), amount in sorted(self.pending.items())},
            "channels": {str(nb): self.channels[nb].snapshot() for nb in self.channels},
        }

    def digest(self) -> str:
        """Short content hash of the actor's state, for traces."""
        payload = json.dumps(self.snapshot(), sort_keys=True).encode()
        return hashlib.sha1(payload, usedforsecurity=False).hexdigest()[:12]
