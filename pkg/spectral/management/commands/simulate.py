import numpy as np
import pandas as pd

from spectral.serializers import LatentModelSerializer, validate_or_raise
from spectral.services.estimate import pairwise_covariance
from spectral.services.latent import population_covariance, sample, strict_increase_check
from spectral.services.pipeline import load_json, write_bytes, write_json
from spectral.services.symmat import eigenvalues

from ._base import SpectralCommand, spectral_setting


class Command(SpectralCommand):
    help = 'Muestrea respuestas del modelo latente x = β y + e'

    def add_arguments(self, parser):
        subparsers = parser.add_subparsers(dest="action", required=True)
        latent = subparsers.add_parser("latent", help="Muestra del modelo latente y reporte poblacional")
        latent.add_argument("--model", required=True, help="JSON {\"a\", \"beta\", \"gamma\", \"y_dist\", \"e_dist\"}")
        latent.add_argument("--n", type=int, required=True)
        latent.add_argument("--seed", type=int, default=0)
        latent.add_argument("--year", type=int, default=0)
        latent.add_argument("--weight-column")
        latent.add_argument("--a-grid", type=float, nargs="+",
                            help="Grilla de a para el reporte de monotonía (por defecto a·[0.25, 4])")
        latent.add_argument("--out", required=True, help="CSV con la muestra")
        latent.add_argument("--report", help="JSON con la covarianza poblacional y la monotonía en a")

    def run(self, *args, **options):
        serializer = validate_or_raise(LatentModelSerializer(data=load_json(options["model"])), "Modelo")
        model = serializer.to_model()
        data = sample(model, options["n"], options["seed"])

        weight_column = options.get("weight_column") or spectral_setting("WEIGHT_COLUMN")
        table = pd.DataFrame(data.values, columns=data.questions)
        table.insert(0, weight_column, data.weights)
        table.insert(0, "year", options["year"])
        table.insert(0, "id", np.arange(1, data.n + 1))
        write_bytes(options["out"], table.to_csv(index=False, float_format="%.17g", lineterminator="\n").encode("utf-8"))
        self.stdout.write(self.style.SUCCESS(f'Muestra de {data.n} filas escrita en {options["out"]}'))

        if not options.get("report"):
            return
        a_grid = options.get("a_grid") or (model.a * np.linspace(0.25, 4.0, 16)).tolist()
        sigma = population_covariance(model)
        report = {
            "model": model.to_dict(),
            "n": data.n,
            "seed": options["seed"],
            "population_covariance": sigma.to_list(),
            "population_eigenvalues": list(eigenvalues(sigma).values),
            "sample_eigenvalues": list(pairwise_covariance(data).spectrum.values) if data.n >= 2 else None,
            "strict_increase": strict_increase_check(model, a_grid).to_dict(),
        }
        write_json(report, options["report"])
        self.stdout.write(self.style.SUCCESS(f'Reporte escrito en {options["report"]}'))
