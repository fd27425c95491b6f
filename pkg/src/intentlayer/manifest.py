"""Run manifests: enough provenance to reproduce any command's outputs
bit-identically (command argv, resolved configuration, seeds, input and
output content fingerprints)."""
from __future__ import annotations

import datetime
import hashlib
import json
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from . import __version__


def sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass(frozen=True)
class RunManifest:
    command: str
    argv: tuple[str, ...]
    config: Mapping[str, object]
    seeds: tuple[int, ...]
    inputs: Mapping[str, str]  # path -> sha256
    outputs: Mapping[str, str]  # path -> sha256
    toolkit_version: str = __version__
    created: str = ""

    def to_json(self) -> str:
        return json.dumps(
            {
                "command": self.command,
                "argv": list(self.argv),
                "config": dict(self.config),
                "seeds": list(self.seeds),
                "inputs": dict(self.inputs),
                "outputs": dict(self.outputs),
                "toolkit_version": self.toolkit_version,
                "created": self.created,
            },
            indent=2,
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        obj = json.loads(text)
        return cls(
            command=obj["command"],
            argv=tuple(obj["argv"]),
            config=obj.get("config", {}),
            seeds=tuple(obj.get("seeds", ())),
            inputs=dict(obj.get("inputs", {})),
            outputs=dict(obj.get("outputs", {})),
            toolkit_version=obj.get("toolkit_version", ""),
            created=obj.get("created", ""),
        )


def write_manifest(
    command: str,
    argv: Sequence[str],
    config: Mapping[str, object],
    seeds: Sequence[int],
    input_paths: Sequence[str],
    output_paths: Sequence[str],
    manifest_path: Optional[str] = None,
) -> Optional[str]:
    """Fingerprint inputs/outputs and write the manifest next to the first
    output (or to an explicit path). No outputs, no manifest."""
    if not output_paths and manifest_path is None:
        return None
    manifest = RunManifest(
        command=command,
        argv=tuple(argv),
        config=config,
        seeds=tuple(seeds),
        inputs={p: sha256_file(p) for p in input_paths},
        outputs={p: sha256_file(p) for p in output_paths},
        created=datetime.datetime.now(datetime.timezone.utc).isoformat(),
    )
    path = manifest_path or output_paths[0] + ".manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(manifest.to_json() + "\n")
    return path


def load_manifest(path: str) -> RunManifest:
    with open(path, encoding="utf-8") as fh:
        return RunManifest.from_json(fh.read())
