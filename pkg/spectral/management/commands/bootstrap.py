import pandas as pd

from spectral.exceptions import BinError, EmptySeriesError, PreconditionError, SpectralError
from spectral.services.estimate import bootstrap_rho
from spectral.services.pipeline import CSV, JSON, format_from_path, ingest, to_json_bytes, write_bytes

from ._base import SpectralCommand, add_data_arguments, analysis_config_from_options, spectral_setting


class Command(SpectralCommand):
    help = 'Intervalos bootstrap por percentiles de ρ̂ para cada bin'

    def add_arguments(self, parser):
        add_data_arguments(parser)
        parser.add_argument("--B", dest="B", type=int)
        parser.add_argument("--level", type=float)
        parser.add_argument("--seed", type=int, default=0)
        parser.add_argument("--out", help="Archivo .json o .csv (omitido: JSON por stdout)")

    def run(self, *args, **options):
        B = spectral_setting("BOOTSTRAP_B") if options.get("B") is None else options["B"]
        level = spectral_setting("BOOTSTRAP_LEVEL") if options.get("level") is None else options["level"]
        config = analysis_config_from_options(options, bootstrap_b=B, bootstrap_level=level)
        fmt = format_from_path(options["out"]) if options.get("out") else JSON
        if fmt not in (JSON, CSV):
            raise PreconditionError(f"Formato no soportado para bootstrap: {fmt}")

        ingested = ingest(config.data_path, config.schema_path, config)
        if not ingested.bins:
            raise EmptySeriesError("Ningún bin tiene respondentes suficientes")
        rows = []
        for data in ingested.bins:
            try:
                result = bootstrap_rho(
                    data.dataset, config.bootstrap.B, config.bootstrap.level, config.bootstrap.seed,
                    workers=config.workers,
                    max_failure_rate=config.bootstrap.max_failure_rate,
                )
            except SpectralError as e:
                raise BinError(data.label, e) from e
            rows.append({"bin": data.label, "n_respondents": data.dataset.n, **result.to_dict()})
            self.stderr.write(f'{data.label}: ρ̂ = {result.point:.4f} [{result.ci_low:.4f}, {result.ci_high:.4f}]')

        if fmt == CSV:
            flat = pd.DataFrame([{k: v for k, v in row.items() if k not in ("replicates", "failed")} for row in rows])
            payload = flat.to_csv(index=False, lineterminator="\n").encode("utf-8")
        else:
            payload = to_json_bytes({"bins": rows})
        if options.get("out"):
            write_bytes(options["out"], payload)
            self.stdout.write(self.style.SUCCESS(f'Resultado escrito en {options["out"]}'))
        else:
            self.write_stdout(payload)
