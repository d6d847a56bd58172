"""Dataset discovery: directory layout <root>/<category>/<stack_id>/plane_<k>.png
or an explicit manifest.json listing (category, stack path) entries."""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

from ..errors import PipelineError
from ..imagecore import FocalStack, load_image, to_grayscale

MANIFEST_FORMAT_VERSION = "1"

_PLANE_RE = re.compile(r"plane_(\d+)\.(png|tif|tiff)$", re.IGNORECASE)


@dataclass(frozen=True)
class Manifest:
    entries: tuple[tuple[str, Path], ...]  # (category, stack directory)
    version: str = MANIFEST_FORMAT_VERSION

    def categories(self) -> tuple[str, ...]:
        return tuple(sorted({c for c, _ in self.entries}))


def load_stack_dir(path: str | Path) -> FocalStack:
    """Read plane_<k>.* files (sorted by k) into a grayscale focal stack."""
    path = Path(path)
    planes = []
    for f in sorted(path.iterdir()):
        m = _PLANE_RE.match(f.name)
        if m:
            planes.append((int(m.group(1)), f))
    if not planes:
        raise PipelineError(f"{path} holds no plane_<k> images")
    planes.sort(key=lambda t: t[0])
    return FocalStack(planes=tuple(to_grayscale(load_image(f)) for _, f in planes))


def load_manifest(root: str | Path) -> Manifest:
    """Accept either a manifest.json file, a directory containing one, or a
    category/stack directory tree."""
    root = Path(root)
    json_path = root if root.suffix == ".json" else root / "manifest.json"
    if json_path.exists():
        payload = json.loads(json_path.read_text())
        if payload.get("format_version") != MANIFEST_FORMAT_VERSION:
            raise PipelineError(f"unsupported manifest version {payload.get('format_version')!r}")
        base = json_path.parent
        entries = []
        for e in payload["entries"]:
            stack = (base / e["path"]).resolve()
            if not stack.exists():
                raise FileNotFoundError(str(stack))
            entries.append((str(e["category"]), stack))
        if not entries:
            raise PipelineError("manifest lists no entries")
        return Manifest(entries=tuple(entries))

    if not root.is_dir():
        raise FileNotFoundError(str(root))
    entries = []
    for cat_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        for stack_dir in sorted(p for p in cat_dir.iterdir() if p.is_dir()):
            entries.append((cat_dir.name, stack_dir))
    if not entries:
        raise PipelineError(f"{root} holds no <category>/<stack> directories")
    return Manifest(entries=tuple(entries))


def save_manifest(manifest: Manifest, path: str | Path) -> None:
    base = Path(path).parent
    payload = {
        "format_version": manifest.version,
        "entries": [
            {"category": c, "path": str(p.relative_to(base) if p.is_relative_to(base) else p)}
            for c, p in manifest.entries
        ],
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True))
