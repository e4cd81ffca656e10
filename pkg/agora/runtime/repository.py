import logging
import os
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Union

from agora.errors import GovSpecError, UnknownModule
from agora.lang.manifest import parse_manifest
from agora.runtime.behavior import behavior_source
from agora.runtime.runtime_types import ModuleManifest

logger = logging.getLogger(__name__)

MANIFEST_SUFFIX = ".module"
BUILTIN_DIR = Path(__file__).resolve().parent.parent / "configs" / "modules"
SOURCE_SEPARATOR = "\n# --- behaviour source ---\n"


def split_module_path(value: Optional[str]) -> List[str]:
    return [p for p in (value or "").split(os.pathsep) if p]


class ModuleRepository:
    """Module kinds available for install, read from directory trees of manifest files.

    Later directories shadow earlier ones, so a community repository can replace a built-in
    kind by shipping a manifest with the same name.
    """

    def __init__(
        self, paths: Iterable[Union[str, Path]] = (), include_builtin: bool = True
    ) -> None:
        self.paths: List[Path] = [BUILTIN_DIR] if include_builtin else []
        self.paths += [Path(p) for p in paths]
        self._manifests: Dict[str, ModuleManifest] = {}
        self._by_hash: Dict[str, ModuleManifest] = {}
        for directory in self.paths:
            self._load_dir(directory)

    def _load_dir(self, directory: Path) -> None:
        if not directory.is_dir():
            logger.warning("module repository %s is not a directory; skipped", directory)
            return
        for path in sorted(directory.rglob(f"*{MANIFEST_SUFFIX}")):
            self.add_text(path.read_text(encoding="utf-8"), str(path))

    def add_text(self, text: str, origin: str = "<manifest>") -> ModuleManifest:
        """Register a manifest given as text; its source is the text plus the behaviour code."""
        result = parse_manifest(text)
        if not result.ok:
            raise GovSpecError(result.diagnostics, origin)
        manifest: ModuleManifest = result.doc
        source = text + SOURCE_SEPARATOR + behavior_source(manifest.behavior)
        manifest = parse_manifest(text, source_text=source).doc
        if manifest.module_kind in self._manifests:
            logger.debug("%s shadows module kind %s", origin, manifest.module_kind)
        self._manifests[manifest.module_kind] = manifest
        self._by_hash[manifest.source_ref.hash] = manifest
        return manifest

    def manifest(self, kind: str) -> ModuleManifest:
        manifest = self._manifests.get(kind)
        if manifest is None:
            raise UnknownModule(f"no module kind {kind!r} in the repository")
        return manifest

    def by_hash(self, source_hash: str) -> Optional[ModuleManifest]:
        return self._by_hash.get(source_hash)

    def kinds(self) -> List[str]:
        return sorted(self._manifests)
