"""
Base class for experiment commands

Subclasses declare FIELDS (option name -> converter) and DEFAULTS, add their
own flags with ``default=None`` so an absent flag falls through to the config
file and preset layers, and implement ``run``. Domain errors become
CommandError, so the exit status is nonzero exactly when one fires.
"""
import logging
import os
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, Mapping, Optional

from django.conf import settings
from django.core.exceptions import ImproperlyConfigured, ValidationError
from django.core.management.base import BaseCommand, CommandError

from transhp.exceptions import TransHPError
from .manifest import RunManifest
from .options import load_config_file, parse_bool, resolve_options

logger = logging.getLogger(__name__)

COMMON_FIELDS: Dict[str, Callable[[Any], Any]] = {
    'output': str,
    'seed': int,
    'deterministic': parse_bool,
}


def deterministic_mode(flag: Optional[bool] = None) -> bool:
    """A flag, the setting, or TRANSHP_DETERMINISTIC=1 in the environment turns it on"""
    return bool(flag) or settings.TRANSHP_DETERMINISTIC or os.environ.get('TRANSHP_DETERMINISTIC') == '1'


class ExperimentCommand(BaseCommand):
    FIELDS: Dict[str, Callable[[Any], Any]] = {}
    DEFAULTS: Dict[str, Any] = {}

    def add_arguments(self, parser):
        parser.add_argument('--config', help='KEY=value file; flags override it, it overrides the preset')
        parser.add_argument('--output', help='Output directory (default: TRANSHP_OUTPUT_DIR/<command>)')
        parser.add_argument('--seed', type=int, default=None, help='Random seed')
        parser.add_argument('--deterministic', action='store_true', default=None,
                            help='Single-threaded evaluation; bitwise-reproducible outputs')
        self.add_experiment_arguments(parser)

    def add_experiment_arguments(self, parser):
        pass

    @property
    def command_name(self) -> str:
        return self.__module__.rsplit('.', 1)[-1]

    @property
    def fields(self) -> Dict[str, Callable[[Any], Any]]:
        return {**COMMON_FIELDS, **self.FIELDS}

    def preset_values(self, name: Optional[str]) -> Mapping[str, Any]:
        """Values of a named preset; commands with presets override this"""
        return {}

    def resolve(self, options: Mapping[str, Any]) -> Dict[str, Any]:
        file_values = load_config_file(options['config']) if options.get('config') else {}
        flags = {name: options.get(name) for name in self.fields}
        preset_name = flags.get('preset') or file_values.get('preset') or self.DEFAULTS.get('preset')
        resolved = resolve_options(self.fields, flags, file_values, self.preset_values(preset_name), self.DEFAULTS)
        resolved['deterministic'] = deterministic_mode(resolved.get('deterministic'))
        return resolved

    def output_dir(self, resolved: Mapping[str, Any]) -> Path:
        if resolved.get('output'):
            return Path(resolved['output'])
        return Path(settings.TRANSHP_OUTPUT_DIR) / self.command_name

    def eval_workers(self, resolved: Mapping[str, Any]) -> int:
        return 1 if resolved['deterministic'] else settings.TRANSHP_EVAL_WORKERS

    def start_manifest(self, resolved: Mapping[str, Any], out_dir: Path,
                       inputs: Iterable = ()) -> RunManifest:
        manifest = RunManifest.create(self.command_name, dict(resolved), seed=resolved.get('seed'),
                                      inputs=list(inputs))
        manifest.write(out_dir)
        return manifest

    def finish_manifest(self, manifest: RunManifest, out_dir: Path) -> None:
        manifest.write(out_dir)
        self.stdout.write(self.style.SUCCESS(f"{self.command_name}: wrote {len(manifest.outputs)} files to {out_dir}"))

    def handle(self, *args, **options):
        try:
            self.run(self.resolve(options))
        except CommandError:
            raise
        except (TransHPError, ValidationError, ImproperlyConfigured, OSError, ValueError, IndexError) as exc:
            logger.error(f"{self.command_name} failed: {exc}", exc_info=True)
            raise CommandError(f"{self.command_name} failed: {exc}") from exc

    def run(self, resolved: Dict[str, Any]) -> None:
        raise NotImplementedError('subclasses implement run()')
