from agora.systems.jury import jury  # noqa: F401
