"""Deterministic in-process network joining Instances.

Messages travel as encoded frames. In-flight deliveries are ordered by (deliver_tick,
message_id) with enqueue order as the last tie-break, so duplicated deliveries of one message
stay in a stable order.
"""
import heapq
import logging
from collections import OrderedDict, deque
from typing import Deque, Dict, List, Mapping, Optional, Tuple

from agora.errors import DuplicateInstance, StaleResponse
from agora.federation.codec import decode_message, encode_message
from agora.federation.federation_types import EnqueueReceipt, FedMessage, LinkSpec, MessageKind
from agora.federation.protocol import receive_frame
from agora.kernel.instance import set_clock
from agora.kernel.kernel_types import DEDUP_CACHE_SIZE, Instance

logger = logging.getLogger(__name__)

LinkKey = Tuple[str, str]


def link_key(a: str, b: str) -> LinkKey:
    return (a, b) if a <= b else (b, a)


class SimNetwork:
    def __init__(
        self,
        links: Optional[Mapping[LinkKey, LinkSpec]] = None,
        default_link: LinkSpec = LinkSpec(),
        history: int = DEDUP_CACHE_SIZE,
    ) -> None:
        self.instances: Dict[str, Instance] = {}
        self.links: Dict[LinkKey, LinkSpec] = {link_key(*k): v for k, v in (links or {}).items()}
        self.default_link = default_link
        self._queue: List[Tuple[int, str, int, bytes]] = []
        self._enqueued = 0
        self.history = history
        # in_reply_to -> first response delivered for it; at most `history`, oldest evicted first.
        self.responses: "OrderedDict[str, FedMessage]" = OrderedDict()
        self.delivered: Deque[Tuple[int, str, str]] = deque(maxlen=history)

    def join(self, instance: Instance) -> None:
        if instance.instance_id in self.instances:
            raise DuplicateInstance(instance.instance_id)
        self.instances[instance.instance_id] = instance
        instance.federation = self

    def link(self, a: str, b: str, spec: LinkSpec) -> None:
        self.links[link_key(a, b)] = spec

    def link_for(self, a: str, b: str) -> LinkSpec:
        return self.links.get(link_key(a, b), self.default_link)

    def transmit(self, message: FedMessage, now: int) -> EnqueueReceipt:
        spec = self.link_for(message.from_instance, message.to_instance)
        if spec.drop:
            logger.debug(
                "link %s-%s drops %s",
                message.from_instance,
                message.to_instance,
                message.message_id,
            )
            return EnqueueReceipt(message.message_id, None, 0)
        deliver_tick = now + spec.delay_ticks
        copies = 2 if spec.duplicate else 1
        frame = encode_message(message)
        for _ in range(copies):
            heapq.heappush(self._queue, (deliver_tick, message.message_id, self._enqueued, frame))
            self._enqueued += 1
        return EnqueueReceipt(message.message_id, deliver_tick, copies)

    def in_flight(self) -> int:
        return len(self._queue)

    def pump(self, tick: int) -> int:
        """Deliver everything due at or before `tick`, including replies produced on the way."""
        count = 0
        while self._queue and self._queue[0][0] <= tick:
            deliver_tick, mid, _, frame = heapq.heappop(self._queue)
            message = decode_message(frame)
            target = self.instances.get(message.to_instance)
            if target is None:
                logger.warning("no instance %s; %s dropped", message.to_instance, mid)
                continue
            set_clock(target, deliver_tick)
            self.delivered.append((deliver_tick, mid, message.to_instance))
            count += 1
            try:
                receive_frame(target, frame, self)
            except StaleResponse as exc:
                logger.debug("%s", exc)
                continue
            if message.kind == MessageKind.RESPONSE.value and message.in_reply_to:
                self._keep_response(message)
        return count

    def _keep_response(self, message: FedMessage) -> None:
        assert message.in_reply_to is not None
        if message.in_reply_to in self.responses:
            return
        self.responses[message.in_reply_to] = message
        while len(self.responses) > self.history:
            self.responses.popitem(last=False)

    def take_response(self, request_id: str) -> Optional[FedMessage]:
        """Hand over (and forget) the response delivered for `request_id`, if any."""
        return self.responses.pop(request_id, None)
