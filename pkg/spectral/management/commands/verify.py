from spectral.exceptions import PreconditionError
from spectral.serializers import LatentModelSerializer, validate_or_raise
from spectral.services.estimate import consistency_check, normality_check
from spectral.services.latent import population_covariance, rank_one_fuzz, strict_increase_fuzz
from spectral.services.pipeline import load_json, to_json_bytes, write_json
from spectral.services.symmat import diag

from ._base import SpectralCommand, spectral_setting


class Command(SpectralCommand):
    help = 'Verificación Monte Carlo de consistencia, normalidad y monotonía del índice espectral'

    def add_arguments(self, parser):
        subparsers = parser.add_subparsers(dest="action", required=True)

        asym = subparsers.add_parser("asymptotics", help="Consistencia y normalidad asintótica de λ̂")
        asym.add_argument("--sigma-diag", type=float, nargs="+", default=[2.0, 1.0],
                          help="Covarianza poblacional diagonal (muestreo normal)")
        asym.add_argument("--model", help="JSON de un modelo latente; reemplaza a --sigma-diag en la consistencia")
        asym.add_argument("--n-grid", type=int, nargs="+", default=[100, 400, 1600, 6400])
        asym.add_argument("--trials", type=int, default=200)
        asym.add_argument("--normality-n", type=int, default=2000)
        asym.add_argument("--normality-trials", type=int, default=2000)
        asym.add_argument("--skip-normality", action="store_true")
        asym.add_argument("--seed", type=int, default=0)
        asym.add_argument("--workers", type=int)
        asym.add_argument("--out", help="Archivo JSON de salida (omitido: stdout)")

        mono = subparsers.add_parser("monotonicity", help="Pruebas difusas de monotonía de ρ")
        mono.add_argument("--cases", type=int, default=1000)
        mono.add_argument("--strict-cases", type=int, default=200)
        mono.add_argument("--p-max", type=int, default=6)
        mono.add_argument("--grid-points", type=int, default=50)
        mono.add_argument("--seed", type=int, default=0)
        mono.add_argument("--out", help="Archivo JSON de salida (omitido: stdout)")

    def run(self, *args, **options):
        if options["action"] == "asymptotics":
            report = self._asymptotics(options)
        else:
            report = self._monotonicity(options)
        if options.get("out"):
            write_json(report, options["out"])
            self.stdout.write(self.style.SUCCESS(f'Reporte escrito en {options["out"]}'))
        else:
            self.write_stdout(to_json_bytes(report))

    def _asymptotics(self, options):
        workers = spectral_setting("WORKERS") if options.get("workers") is None else options["workers"]
        if workers < 1:
            raise PreconditionError("--workers debe ser al menos 1")
        seed = options["seed"]
        if options.get("model"):
            model = validate_or_raise(LatentModelSerializer(data=load_json(options["model"])), "Modelo").to_model()
            population, pop_sigma = model, population_covariance(model)
        else:
            pop_sigma = diag(options["sigma_diag"])
            population = pop_sigma

        table = consistency_check(population, options["n_grid"], options["trials"], seed, workers)
        report = {"seed": seed, "consistency": table.to_dict()}
        if options["skip_normality"]:
            return report
        try:
            normality = normality_check(
                pop_sigma, options["normality_n"], options["normality_trials"], seed, workers,
            )
            report["normality"] = normality.to_dict()
        except PreconditionError as e:
            self.stderr.write(f'Normalidad omitida: {e}')
            report["normality"] = {"skipped": str(e)}
        return report

    def _monotonicity(self, options):
        seed = options["seed"]
        rank_one = rank_one_fuzz(options["cases"], seed, options["p_max"], options["grid_points"])
        strict = strict_increase_fuzz(options["strict_cases"], seed, options["p_max"])
        return {
            "seed": seed,
            "rank_one": rank_one,
            "strict_increase": strict,
            "passed": rank_one["violations"] == 0 and strict["violations"] == 0,
        }
