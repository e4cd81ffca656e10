"""Federation over real byte streams (asyncio TCP).

Each connection carries one request at a time. Every touch of an Instance goes through that
Instance's asyncio lock, so concurrent connections still see a single writer.
"""
import asyncio
import logging
from typing import Any, Dict, List, Optional, Tuple

from agora.base_types import SYSTEM_ACTOR, Actor
from agora.federation.codec import (
    HEADER,
    HEADER_SIZE,
    MAX_MESSAGE_SIZE,
    MalformedMessage,
    decode_message,
    encode_frame,
)
from agora.federation.federation_types import EnqueueReceipt, FedMessage
from agora.federation.protocol import handle_response, receive_frame, send
from agora.kernel.kernel_types import Instance

logger = logging.getLogger(__name__)

_LOCKS: Dict[Tuple[int, str], asyncio.Lock] = {}


def instance_lock(instance: Instance) -> asyncio.Lock:
    """One lock per Instance within the running event loop."""
    key = (id(asyncio.get_running_loop()), instance.instance_id)
    lock = _LOCKS.get(key)
    if lock is None:
        lock = _LOCKS[key] = asyncio.Lock()
    return lock


async def read_frame(reader: asyncio.StreamReader) -> bytes:
    header = await reader.readexactly(HEADER_SIZE)
    (length,) = HEADER.unpack(header)
    if length > MAX_MESSAGE_SIZE:
        raise MalformedMessage(f"message too large: {length} bytes (max {MAX_MESSAGE_SIZE})")
    if length == 0:
        return b""
    return await reader.readexactly(length)


async def write_frame(writer: asyncio.StreamWriter, message: FedMessage) -> None:
    writer.write(encode_frame(message))
    await writer.drain()


class FederationServer:
    def __init__(self, instance: Instance, host: str = "127.0.0.1", port: int = 0) -> None:
        self.instance = instance
        self.host = host
        self.port = port
        self.server: Optional[asyncio.AbstractServer] = None

    async def start(self) -> None:
        self.server = await asyncio.start_server(self.handle_client, self.host, self.port)
        self.port = self.server.sockets[0].getsockname()[1]
        logger.info(
            "%s serving federation on %s:%d", self.instance.instance_id, self.host, self.port
        )

    async def stop(self) -> None:
        if self.server:
            self.server.close()
            await self.server.wait_closed()

    async def handle_client(
        self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter
    ) -> None:
        try:
            while True:
                try:
                    body = await read_frame(reader)
                except asyncio.IncompleteReadError:
                    break
                except MalformedMessage as exc:
                    logger.warning("dropping connection: %s", exc)
                    break
                async with instance_lock(self.instance):
                    response = receive_frame(self.instance, body, None)
                if response is not None:
                    await write_frame(writer, response)
        finally:
            writer.close()
            await writer.wait_closed()


class _Outbox:
    """Stands in for the network while `send` records a request."""

    def __init__(self) -> None:
        self.messages: List[FedMessage] = []

    def transmit(self, message: FedMessage, now: int) -> EnqueueReceipt:
        self.messages.append(message)
        return EnqueueReceipt(message.message_id, now, 1)


class FederationClient:
    def __init__(self, instance: Instance, host: str, port: int) -> None:
        self.instance = instance
        self.host = host
        self.port = port
        self._reader: Optional[asyncio.StreamReader] = None
        self._writer: Optional[asyncio.StreamWriter] = None

    async def connect(self) -> None:
        self._reader, self._writer = await asyncio.open_connection(self.host, self.port)

    async def close(self) -> None:
        if self._writer is not None:
            self._writer.close()
            await self._writer.wait_closed()
            self._writer = self._reader = None

    async def request(
        self,
        to_instance: str,
        kind: str,
        target: Dict[str, Any],
        op: str,
        args: Optional[Dict[str, Any]] = None,
        actor: Actor = SYSTEM_ACTOR,
        module_id: str = "",
    ) -> FedMessage:
        """Send one request and wait for its response; the response is applied locally."""
        if self._writer is None or self._reader is None:
            await self.connect()
        assert self._writer is not None and self._reader is not None
        outbox = _Outbox()
        async with instance_lock(self.instance):
            send(self.instance, outbox, to_instance, kind, target, op, args, actor, module_id)
        await write_frame(self._writer, outbox.messages[0])
        response = decode_message(await read_frame(self._reader))
        async with instance_lock(self.instance):
            handle_response(self.instance, response)
        return response
