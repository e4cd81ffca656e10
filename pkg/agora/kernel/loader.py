"""Build a live Instance from a parsed govspec document.

Loading runs in fixed phases (entities, orgs in preorder, memberships, permission tables,
installs, wiring) so that two documents with the same canonical form produce the same log.
"""
from typing import Optional, Set

from agora.base_types import INSTANCE_LEVEL, SYSTEM_ACTOR
from agora.errors import ConfigReferenceError, UnknownEntity, UnknownModule
from agora.kernel import instance as kernel
from agora.kernel.kernel_types import DEDUP_CACHE_SIZE, Instance, PlatformBinding
from agora.lang.govspec import module_ids
from agora.lang.lang_types import GovSpecDoc
from agora.runtime import dispatcher
from agora.runtime.repository import ModuleRepository


def create_instance(
    doc: GovSpecDoc,
    repository: ModuleRepository,
    seed: Optional[int] = None,
    binding: Optional[PlatformBinding] = None,
    registry: Optional[Set[str]] = None,
    dedup_cache_size: int = DEDUP_CACHE_SIZE,
) -> Instance:
    instance = kernel.new_instance(
        doc.instance_id,
        doc.seed if seed is None else seed,
        binding or doc.platform,
        doc.external_api,
        registry,
        dedup_cache_size,
    )
    instance.repository = repository
    for user in doc.users:
        kernel.create_user(instance, user.user_id, user.kind, user.attributes)
    for resource in doc.resources:
        kernel.create_resource(
            instance,
            resource.resource_id,
            resource.resource_type,
            resource.state,
            resource.platform_handle,
        )

    blocks = list(doc.orgs())
    for block in blocks:
        for child in block.children:
            kernel.create_org(instance, block.path, child.org_id, SYSTEM_ACTOR)
    for block in blocks:
        for ref in block.members:
            try:
                kernel.add_member(instance, block.path, ref, SYSTEM_ACTOR)
            except UnknownEntity as exc:
                raise ConfigReferenceError(ref.render()) from exc

    for grant in doc.grants:
        kernel.grant(instance, INSTANCE_LEVEL, grant)
    for restriction in doc.restrictions:
        kernel.restrict(instance, INSTANCE_LEVEL, restriction)
    for block in blocks:
        for grant in block.grants:
            kernel.grant(instance, block.path, grant)
        for restriction in block.restrictions:
            kernel.restrict(instance, block.path, restriction)

    for module_id, (kind, decl, path) in module_ids(doc).items():
        try:
            manifest = repository.manifest(kind)
        except UnknownModule as exc:
            raise ConfigReferenceError(kind, f"undeclared module kind {kind!r}") from exc
        dispatcher.install(instance, path, manifest, decl.policies, SYSTEM_ACTOR, module_id)

    for block in blocks:
        for wire in block.wires:
            for module_id in (wire.source_module, wire.target_module):
                if module_id not in instance.modules:
                    raise ConfigReferenceError(
                        module_id, f"wire names undeclared module {module_id}"
                    )
            dispatcher.wire(
                instance, wire.source_module, wire.output, wire.target_module, wire.input
            )
    return instance
