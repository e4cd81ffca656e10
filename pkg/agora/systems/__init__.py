"""Built-in module kinds. Importing this package registers every behaviour."""
from agora.systems import contract, election, jury, policy, voting  # noqa: F401
from agora.systems import monitor, sortition, staking  # noqa: F401
