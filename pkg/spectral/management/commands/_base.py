import logging

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError
from rest_framework import serializers

from spectral.exceptions import SchemaValidationError, SpectralError
from spectral.serializers import AnalysisConfigSerializer, validate_or_raise
from spectral.services.pipeline import AnalysisConfig

logger = logging.getLogger(__name__)


def spectral_setting(name: str):
    return settings.SPECTRAL_SETTINGS[name]


class SpectralCommand(BaseCommand):
    """Comando base: traduce los errores del paquete a códigos de salida (1 validación, 2 ejecución)."""

    def handle(self, *args, **options):
        try:
            return self.run(*args, **options)
        except serializers.ValidationError as e:
            error = SchemaValidationError(f"Entrada inválida: {e.detail}", errors=e.detail)
            logger.error(f"Error de validación: {error}")
            raise CommandError(str(error), returncode=error.exit_code)
        except SpectralError as e:
            logger.error(f"Error en {self.__module__.rsplit('.', 1)[-1]}: {e}")
            raise CommandError(str(e), returncode=e.exit_code)

    def run(self, *args, **options):
        raise NotImplementedError

    def write_stdout(self, payload: bytes):
        self.stdout.write(payload.decode("utf-8"), ending="")


def add_data_arguments(parser, require_data: bool = True):
    parser.add_argument("--data", dest="data_path", required=require_data, help="CSV de respuestas")
    parser.add_argument("--schema", dest="schema_path", required=require_data, help="JSON con el esquema de preguntas")
    parser.add_argument("--topic", help="Tópico a analizar")
    parser.add_argument("--questions", nargs="+", help="Lista explícita de preguntas")
    parser.add_argument("--bin-width-years", type=int)
    parser.add_argument("--question-policy", choices=["intersection", "per_bin"], default="intersection")
    parser.add_argument("--weight-column")
    parser.add_argument("--year-column")
    parser.add_argument("--missing-sentinels", nargs="*")
    parser.add_argument("--workers", type=int)


def add_analysis_arguments(parser):
    add_data_arguments(parser)
    parser.add_argument("--norm", choices=["spectral", "frobenius", "nuclear"], default="spectral")
    parser.add_argument("--group-var", dest="group_vars", action="append", default=[],
                        help="Variable de agrupación (repetible)")
    parser.add_argument("--min-cell", type=int)
    parser.add_argument("--baseline-bin", help="Etiqueta del bin base (por defecto el primero)")


def analysis_config_from_options(options, **overrides) -> AnalysisConfig:
    """Combina las opciones de la CLI con los valores por defecto de ``SPECTRAL_SETTINGS``."""

    def pick(key, setting):
        value = options.get(key)
        return spectral_setting(setting) if value is None else value

    payload = {
        "data_path": options.get("data_path"),
        "schema_path": options.get("schema_path"),
        "topic": options.get("topic"),
        "questions": options.get("questions"),
        "bin_width_years": pick("bin_width_years", "BIN_WIDTH_YEARS"),
        "norm": options.get("norm") or "spectral",
        "question_policy": options.get("question_policy") or "intersection",
        "group_vars": list(options.get("group_vars") or []),
        "min_cell": pick("min_cell", "MIN_CELL"),
        "baseline_bin": options.get("baseline_bin"),
        "weight_column": pick("weight_column", "WEIGHT_COLUMN"),
        "year_column": pick("year_column", "YEAR_COLUMN"),
        "missing_sentinels": list(pick("missing_sentinels", "MISSING_SENTINELS")),
        "seed": options.get("seed") or 0,
        "workers": pick("workers", "WORKERS"),
        "bootstrap_max_failure_rate": spectral_setting("BOOTSTRAP_MAX_FAILURE_RATE"),
    }
    payload.update(overrides)
    serializer = validate_or_raise(AnalysisConfigSerializer(data=payload), "Configuración")
    return AnalysisConfig.from_validated(serializer.validated_data)
