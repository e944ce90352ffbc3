"""
Run manifests - what a command was asked to do, written before it starts
"""
import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Union

from django.utils import timezone

from transhp import __version__
from .options import format_option

logger = logging.getLogger(__name__)

MANIFEST_NAME = 'manifest.json'


def file_fingerprint(path: Union[str, Path]) -> str:
    digest = hashlib.sha256()
    with Path(path).open('rb') as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b''):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass
class RunManifest:
    """
    Everything needed to repeat a command invocation

    ``config`` holds the resolved options as strings, in the same
    ``key=value`` vocabulary the config files use, so a manifest's config can
    be fed back through ``--config``.
    """
    command: str
    config: Dict[str, str]
    seed: Optional[int] = None
    inputs: Dict[str, str] = field(default_factory=dict)
    outputs: List[str] = field(default_factory=list)
    version: str = __version__
    created_at: str = ''

    @classmethod
    def create(cls, command: str, config: Dict[str, object], seed: Optional[int] = None,
               inputs: Optional[List[Union[str, Path]]] = None) -> 'RunManifest':
        return cls(
            command=command,
            config={key: format_option(value) for key, value in sorted(config.items())},
            seed=seed,
            inputs={str(path): file_fingerprint(path) for path in (inputs or []) if path and Path(path).is_file()},
            created_at=timezone.now().isoformat(),
        )

    def add_output(self, path: Union[str, Path]) -> None:
        self.outputs.append(str(path))

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    def write(self, directory: Union[str, Path]) -> Path:
        path = Path(directory) / MANIFEST_NAME
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json() + '\n')
        logger.info(f"Wrote manifest {path}")
        return path

    def config_text(self) -> str:
        """The resolved config in config-file grammar"""
        return ''.join(f"{key}={value}\n" for key, value in self.config.items())

    @classmethod
    def load(cls, path: Union[str, Path]) -> 'RunManifest':
        path = Path(path)
        if path.is_dir():
            path = path / MANIFEST_NAME
        return cls(**json.loads(path.read_text()))
