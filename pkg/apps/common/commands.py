"""
Shared base class for the engine's management commands.

Every command accepts ``--seed``, ``--out`` and ``--config <key-value file>``.
Values given on the command line win over the config file, which wins over
project settings.
"""
import logging
from pathlib import Path

import orjson
from decouple import Config, RepositoryEnv, UndefinedValueError
from django.core.management.base import BaseCommand, CommandError
from pydantic import ValidationError

from apps.common.errors import EngineError, ValidationFailure

logger = logging.getLogger(__name__)

EXIT_INTERNAL_ERROR = 1
EXIT_VALIDATION_FAILURE = 2


class EngineCommand(BaseCommand):
    """Base command: global flags, config-file lookup and exit-code mapping."""

    requires_system_checks = []

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)
        parser.add_argument('--seed', type=int, default=None, help='Seed for every random stream')
        parser.add_argument('--out', type=str, default=None, help='Output file or directory')
        parser.add_argument('--config', type=str, default=None, help='Key-value configuration file')
        return parser

    def execute(self, *args, **options):
        self.file_config = None
        if options.get('config'):
            config_path = Path(options['config'])
            if not config_path.exists():
                raise CommandError(
                    f'Config file {config_path} does not exist.',
                    returncode=EXIT_VALIDATION_FAILURE,
                )
            self.file_config = Config(RepositoryEnv(str(config_path)))

        try:
            return super().execute(*args, **options)
        except ValidationFailure as exc:
            logger.error(f'Validation failed: {exc}')
            raise CommandError(str(exc), returncode=EXIT_VALIDATION_FAILURE) from exc
        except ValidationError as exc:
            logger.error(f'Invalid configuration: {exc}')
            raise CommandError(f'Invalid configuration: {exc}', returncode=EXIT_VALIDATION_FAILURE) from exc
        except EngineError as exc:
            logger.error(f'{type(exc).__name__}: {exc}')
            raise CommandError(f'{type(exc).__name__}: {exc}', returncode=EXIT_INTERNAL_ERROR) from exc

    def option(self, options, name, key=None, default=None, cast=None):
        """
        Resolve an option: command line first, then the ``--config`` file
        (under ``key``, defaulting to the upper-cased option name), then
        ``default``.
        """
        value = options.get(name)
        if value is not None:
            return value
        if self.file_config is not None:
            lookup = key or name.upper()
            try:
                if cast is not None:
                    return self.file_config(lookup, cast=cast)
                return self.file_config(lookup)
            except UndefinedValueError:
                pass
        return default

    def require(self, options, name, key=None, cast=None):
        """Like ``option`` but fail with a usage error when nothing is set."""
        value = self.option(options, name, key=key, cast=cast)
        if value is None:
            raise CommandError(f'--{name.replace("_", "-")} is required.', returncode=EXIT_VALIDATION_FAILURE)
        return value

    def write_json(self, path, payload):
        """Write a deterministic JSON document (sorted keys, fixed indent)."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(
            orjson.dumps(payload, option=orjson.OPT_SORT_KEYS | orjson.OPT_INDENT_2 | orjson.OPT_APPEND_NEWLINE)
        )
        self.stdout.write(self.style.SUCCESS(f'Wrote {path}'))
