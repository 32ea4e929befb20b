from spectral.exceptions import SchemaValidationError
from spectral.services.decompose import trace_concentration_change, trace_concentration_counterfactuals
from spectral.services.pipeline import FORMATS, emit, format_from_path, load_json, run_analysis, to_json_bytes, write_json
from spectral.services.symmat import make_sym

from ._base import SpectralCommand, add_analysis_arguments, analysis_config_from_options


def _load_matrix_series(path):
    payload = load_json(path)
    if not isinstance(payload, list) or not payload:
        raise SchemaValidationError("Se esperaba un arreglo no vacío de {\"bin\", \"sigma\"}")
    series = []
    for i, item in enumerate(payload):
        if not isinstance(item, dict) or "sigma" not in item:
            raise SchemaValidationError(f"Elemento #{i}: falta 'sigma'")
        label = str(item.get("bin", i))
        series.append((label, make_sym(item["sigma"], tol=1e-9)))
    return series


class Command(SpectralCommand):
    help = 'Descomposiciones traza × concentración y dentro/entre grupos'

    def add_arguments(self, parser):
        subparsers = parser.add_subparsers(dest="action", required=True)

        trace = subparsers.add_parser("trace-concentration", help="Contrafactuales de varianza total y concentración")
        trace.add_argument("--matrices", required=True, help="JSON: [{\"bin\": ..., \"sigma\": [[...]]}, ...]")
        trace.add_argument("--baseline-bin")
        trace.add_argument("--out", help="Archivo JSON de salida (omitido: stdout)")

        groups = subparsers.add_parser("groups", help="Descomposición dentro/entre grupos por bin")
        add_analysis_arguments(groups)
        groups.add_argument("--out", action="append", default=[], help=f"Archivo de salida ({', '.join(FORMATS)})")

    def run(self, *args, **options):
        if options["action"] == "trace-concentration":
            return self._trace(options)
        return self._groups(options)

    def _trace(self, options):
        series = _load_matrix_series(options["matrices"])
        counterfactuals = trace_concentration_counterfactuals(series, options.get("baseline_bin"))
        base_label = counterfactuals.baseline
        base_sigma = dict(series)[base_label]
        payload = {
            "series": counterfactuals.to_dict(),
            "changes": [
                {"bin": label, **trace_concentration_change(base_sigma, sigma).to_dict()}
                for label, sigma in series
            ],
        }
        if options.get("out"):
            write_json(payload, options["out"])
            self.stdout.write(self.style.SUCCESS(f'Resultado escrito en {options["out"]}'))
        else:
            self.write_stdout(to_json_bytes(payload))

    def _groups(self, options):
        config = analysis_config_from_options(options, trace_decomposition=False)
        if not config.group_vars:
            raise SchemaValidationError("Indique al menos una --group-var")
        outputs = [(path, format_from_path(path)) for path in options["out"]]
        result = run_analysis(config)
        if not outputs:
            self.write_stdout(to_json_bytes(result.to_dict()))
            return
        for path, fmt in outputs:
            emit(result, fmt, path)
            self.stdout.write(self.style.SUCCESS(f'Resultado escrito en {path}'))
