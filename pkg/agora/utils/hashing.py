import hashlib

FNV_OFFSET_BASIS = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_U64 = (1 << 64) - 1


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a."""
    h = FNV_OFFSET_BASIS
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & _U64
    return h


def fnv1a64_hex(data: bytes) -> str:
    return f"{fnv1a64(data):016x}"


def sha256_hex(text: str) -> str:
    """Content hash used for module sources."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def message_id(instance_id: str, counter: int) -> str:
    """128-bit message id (32 hex chars) derived from the sender and its send counter."""
    return hashlib.sha256(f"{instance_id}\x00{counter}".encode("utf-8")).hexdigest()[:32]
