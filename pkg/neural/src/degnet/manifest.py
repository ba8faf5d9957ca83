"""Reader/writer for the pair-manifest JSON interchange format.

This mirrors the schema of the dataset toolkit (version "1") so that the
two packages exchange files without sharing code:

    {"version": "1",
     "entries": [{"hr": ..., "lr": ..., "class": ..., "scale": ...,
                  "level": ..., "provenance": ...}]}
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

VERSION = "1"


@dataclass(frozen=True)
class PairEntry:
    hr: str
    lr: str
    cls: str
    scale: int
    level: int | None = None
    provenance: str = ""


@dataclass
class Manifest:
    entries: list[PairEntry] = field(default_factory=list)

    @classmethod
    def read(cls, path: str | Path) -> "Manifest":
        doc = json.loads(Path(path).read_text())
        if doc.get("version") != VERSION:
            raise ValueError(f"unsupported manifest version {doc.get('version')!r}")
        return cls(
            entries=[
                PairEntry(
                    hr=e["hr"],
                    lr=e["lr"],
                    cls=e["class"],
                    scale=int(e["scale"]),
                    level=e.get("level"),
                    provenance=e.get("provenance", ""),
                )
                for e in doc.get("entries", [])
            ]
        )

    def write(self, path: str | Path) -> None:
        doc = {
            "version": VERSION,
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
        Path(path).write_text(json.dumps(doc, indent=2) + "\n")
