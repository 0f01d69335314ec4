"""Line-delimited dataset manifest (format documented in docs/file_formats.md)."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

MANIFEST_VERSION = 1
SPLITS = ("train", "val", "test")


@dataclass(frozen=True)
class ManifestEntry:
    sample_id: str
    image_path: str  # relative to the manifest's directory
    mask_path: str
    split: str


@dataclass
class Manifest:
    entries: list[ManifestEntry]
    version: int = MANIFEST_VERSION
    root: Path | None = field(default=None, compare=False)

    def split(self, name: str) -> list[ManifestEntry]:
        if name not in SPLITS:
            raise ValueError(f"unknown split {name!r}; expected one of {SPLITS}")
        return [e for e in self.entries if e.split == name]

    def resolve(self, entry: ManifestEntry) -> tuple[Path, Path]:
        if self.root is None:
            raise ValueError("manifest has no root directory; read or write it first")
        return self.root / entry.image_path, self.root / entry.mask_path


def write_manifest(manifest: Manifest, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    seen = set()
    lines = [f"gcdm-manifest {manifest.version}"]
    for e in manifest.entries:
        if e.sample_id in seen:
            raise ValueError(f"duplicate sample id {e.sample_id!r}")
        seen.add(e.sample_id)
        if e.split not in SPLITS:
            raise ValueError(f"bad split {e.split!r} for {e.sample_id!r}")
        lines.append(f"{e.sample_id}\t{e.image_path}\t{e.mask_path}\t{e.split}")
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text("\n".join(lines) + "\n", encoding="utf-8")
    os.replace(tmp, path)
    manifest.root = path.parent


def read_manifest(path) -> Manifest:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ValueError(f"{path}: empty manifest")
    header = lines[0].split()
    if len(header) != 2 or header[0] != "gcdm-manifest":
        raise ValueError(f"{path}: not a manifest file")
    version = int(header[1])
    if version != MANIFEST_VERSION:
        raise ValueError(f"{path}: manifest version {version} unsupported (expected {MANIFEST_VERSION})")
    entries = []
    seen = set()
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise ValueError(f"{path}:{lineno}: expected 4 tab-separated fields")
        entry = ManifestEntry(*parts)
        if entry.sample_id in seen:
            raise ValueError(f"{path}:{lineno}: duplicate sample id {entry.sample_id!r}")
        seen.add(entry.sample_id)
        if entry.split not in SPLITS:
            raise ValueError(f"{path}:{lineno}: unknown split {entry.split!r}")
        for rel in (entry.image_path, entry.mask_path):
            if not (path.parent / rel).exists():
                raise FileNotFoundError(f"{path}:{lineno}: missing file {rel}")
        entries.append(entry)
    return Manifest(entries, version=version, root=path.parent)
