from agora.systems.policy import breaks, comparator, enactor  # noqa: F401
