from agora.systems.election import election  # noqa: F401
