from agora.systems.voting import petition, rank, referendum  # noqa: F401
