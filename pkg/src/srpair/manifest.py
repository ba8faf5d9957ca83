"""The pair manifest: the JSON interchange format between all pipeline stages.

Schema (version "1"):

    {"version": "1",
     "entries": [{"hr": "...", "lr": "...", "class": "interpolation",
                  "scale": 4, "level": null, "provenance": "..."}]}

Paths are stored relative to the manifest file with POSIX separators, so a
manifest plus its image tree can be moved or shipped as a unit. Writing is
canonical: the same manifest always serializes to the same bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ManifestError

VERSION = "1"

PAIR_CLASSES = ("interpolation", "cnn", "gan", "video", "realworld")


@dataclass(frozen=True)
class PairEntry:
    hr: str
    lr: str
    cls: str
    scale: int
    level: int | None = None
    provenance: str = ""

    def __post_init__(self):
        if self.cls not in PAIR_CLASSES:
            raise ManifestError(f"unknown pair class {self.cls!r}")
        if self.cls == "gan":
            if self.level not in (1, 2, 3):
                raise ManifestError(f"gan entries require level in {{1,2,3}}, got {self.level}")
        elif self.level is not None:
            raise ManifestError(f"class {self.cls!r} must not carry a level")
        if self.scale < 1:
            raise ManifestError(f"scale must be >= 1, got {self.scale}")


@dataclass
class PairManifest:
    entries: list[PairEntry] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)
    version: str = VERSION

    def to_json(self) -> str:
        doc: dict = {
            "version": self.version,
            "entries": [
                {
                    "hr": e.hr,
                    "lr": e.lr,
                    "class": e.cls,
                    "scale": e.scale,
                    "level": e.level,
                    "provenance": e.provenance,
                }
                for e in self.entries
            ],
        }
        if self.skipped:
            doc["skipped"] = list(self.skipped)
        return json.dumps(doc, indent=2) + "\n"

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def from_json(cls, text: str) -> "PairManifest":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"not valid JSON: {exc}") from exc
        if not isinstance(doc, dict) or doc.get("version") != VERSION:
            raise ManifestError(f"unsupported manifest version {doc.get('version')!r}")
        entries = []
        for raw in doc.get("entries", []):
            try:
                entries.append(
                    PairEntry(
                        hr=raw["hr"],
                        lr=raw["lr"],
                        cls=raw["class"],
                        scale=int(raw["scale"]),
                        level=raw.get("level"),
                        provenance=raw.get("provenance", ""),
                    )
                )
            except KeyError as exc:
                raise ManifestError(f"entry missing field {exc}") from exc
        return cls(entries=entries, skipped=list(doc.get("skipped", [])))

    @classmethod
    def read(cls, path: str | Path) -> "PairManifest":
        return cls.from_json(Path(path).read_text())

    def validate_files(self, base_dir: str | Path) -> None:
        """Check that every referenced image exists under ``base_dir``."""
        base = Path(base_dir)
        missing = []
        for e in self.entries:
            for p in (e.hr, e.lr):
                if not (base / p).is_file():
                    missing.append(p)
        if missing:
            raise ManifestError(f"manifest references missing files: {missing[:5]}")
