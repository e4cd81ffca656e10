from agora.systems.contract import contract  # noqa: F401
