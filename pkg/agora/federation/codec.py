"""Wire format: a 4-byte big-endian length prefix, then the message as canonical UTF-8 JSON."""
import json
import struct
from typing import Any, List, Tuple

from agora.federation.federation_types import MESSAGE_FIELDS, FedMessage, MessageKind, Status
from agora.utils.serialization import canonical_json

HEADER = struct.Struct(">I")
HEADER_SIZE = HEADER.size
MAX_MESSAGE_SIZE = 1024 * 1024


class MalformedMessage(ValueError):
    """Bytes that do not decode to a FedMessage."""


def encode_message(message: FedMessage) -> bytes:
    return canonical_json(message.to_value()).encode("utf-8")


def encode_frame(message: FedMessage) -> bytes:
    body = encode_message(message)
    if len(body) > MAX_MESSAGE_SIZE:
        raise MalformedMessage(f"message too large: {len(body)} bytes (max {MAX_MESSAGE_SIZE})")
    return HEADER.pack(len(body)) + body


def message_from_value(value: Any) -> FedMessage:
    if not isinstance(value, dict):
        raise MalformedMessage("message must be a JSON object")
    missing = [name for name in MESSAGE_FIELDS if name not in value]
    if missing:
        raise MalformedMessage(f"missing fields: {', '.join(missing)}")
    kinds = {k.value for k in MessageKind}
    if value["kind"] not in kinds:
        raise MalformedMessage(f"unknown kind {value['kind']!r}")
    if value["status"] is not None and value["status"] not in {s.value for s in Status}:
        raise MalformedMessage(f"unknown status {value['status']!r}")
    target, args = value["target"], value["args"]
    if not isinstance(target, dict) or not isinstance(args, dict):
        raise MalformedMessage("target and args must be objects")
    for name in ("message_id", "from_instance", "to_instance", "op"):
        if not isinstance(value[name], str):
            raise MalformedMessage(f"{name} must be a string")
    return FedMessage(
        message_id=value["message_id"],
        from_instance=value["from_instance"],
        to_instance=value["to_instance"],
        kind=value["kind"],
        target=target,
        op=value["op"],
        args=args,
        in_reply_to=value["in_reply_to"],
        status=value["status"],
        payload=value["payload"],
    )


def decode_message(body: bytes) -> FedMessage:
    try:
        value = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedMessage(str(exc)) from exc
    return message_from_value(value)


def split_frames(buffer: bytes) -> Tuple[List[bytes], bytes]:
    """Cut complete frame bodies off the front of `buffer`; returns (bodies, remainder)."""
    bodies: List[bytes] = []
    while len(buffer) >= HEADER_SIZE:
        (length,) = HEADER.unpack_from(buffer)
        if length > MAX_MESSAGE_SIZE:
            raise MalformedMessage(f"message too large: {length} bytes (max {MAX_MESSAGE_SIZE})")
        if len(buffer) < HEADER_SIZE + length:
            break
        bodies.append(buffer[HEADER_SIZE : HEADER_SIZE + length])
        buffer = buffer[HEADER_SIZE + length :]
    return bodies, buffer
