from spectral.services.pipeline import FORMATS, emit, format_from_path, run_analysis, to_json_bytes

from ._base import SpectralCommand, add_analysis_arguments, analysis_config_from_options, spectral_setting


class Command(SpectralCommand):
    help = 'Calcula la polarización espectral por bin de años y sus descomposiciones'

    def add_arguments(self, parser):
        add_analysis_arguments(parser)
        parser.add_argument("--bootstrap-b", type=int, help="Réplicas bootstrap por bin (omitido: sin bootstrap)")
        parser.add_argument("--bootstrap-level", type=float)
        parser.add_argument("--seed", type=int, default=0)
        parser.add_argument("--no-trace-decomposition", action="store_true")
        parser.add_argument("--out", action="append", default=[],
                            help=f"Archivo de salida ({', '.join(FORMATS)}); repetible. Sin --out se escribe JSON")

    def run(self, *args, **options):
        level = options.get("bootstrap_level")
        config = analysis_config_from_options(
            options,
            bootstrap_b=options.get("bootstrap_b"),
            bootstrap_level=spectral_setting("BOOTSTRAP_LEVEL") if level is None else level,
            trace_decomposition=not options["no_trace_decomposition"],
        )
        outputs = [(path, format_from_path(path)) for path in options["out"]]
        result = run_analysis(config)

        if not outputs:
            self.write_stdout(to_json_bytes(result.to_dict()))
            return
        for path, fmt in outputs:
            emit(result, fmt, path)
            self.stdout.write(self.style.SUCCESS(f'Resultado escrito en {path}'))
