from typing import List

from agora.base_types import ROOT_PATH, OrgPath


def child_path(parent: OrgPath, org_id: str) -> OrgPath:
    return f"/{org_id}" if parent == ROOT_PATH else f"{parent}/{org_id}"


def ancestry(path: OrgPath) -> List[OrgPath]:
    """Org paths from the root down to `path`, inclusive."""
    if path == ROOT_PATH:
        return [ROOT_PATH]
    parts = [p for p in path.split("/") if p]
    out = [ROOT_PATH]
    for i in range(len(parts)):
        out.append("/" + "/".join(parts[: i + 1]))
    return out


def is_within(path: OrgPath, scope: OrgPath) -> bool:
    """True when `path` is `scope` or one of its descendants."""
    if scope == ROOT_PATH:
        return True
    return path == scope or path.startswith(scope + "/")


def depth(path: OrgPath) -> int:
    return len(ancestry(path)) - 1


def match_pattern(path: OrgPath, pattern: str) -> bool:
    """Org path patterns: exact, "<p>/*" for direct children, "<p>/**" for <p> and descendants."""
    if pattern.endswith("/**"):
        base = pattern[:-3] or ROOT_PATH
        return is_within(path, base)
    if pattern.endswith("/*"):
        base = pattern[:-2] or ROOT_PATH
        return path != base and is_within(path, base) and depth(path) == depth(base) + 1
    return path == pattern
