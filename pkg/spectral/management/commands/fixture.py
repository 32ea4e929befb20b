from spectral.exceptions import SchemaValidationError
from spectral.serializers import FixtureSpecSerializer, validate_or_raise
from spectral.services.pipeline import FixtureSpec, load_json, make_fixture

from ._base import SpectralCommand

_OVERRIDES = ("scales", "n_per_bin", "bins", "start_year", "bin_width_years", "missingness", "other_rate",
              "group_var", "a_start", "a_end")


class Command(SpectralCommand):
    help = 'Genera un CSV sintético con forma de encuesta y su esquema de preguntas'

    def add_arguments(self, parser):
        parser.add_argument("--spec", help="JSON con los parámetros del generador")
        parser.add_argument("--scales", type=int, nargs="+", help="Número de códigos por pregunta")
        parser.add_argument("--n-per-bin", type=int)
        parser.add_argument("--bins", type=int)
        parser.add_argument("--start-year", type=int)
        parser.add_argument("--bin-width-years", type=int)
        parser.add_argument("--missingness", type=float)
        parser.add_argument("--other-rate", type=float)
        parser.add_argument("--group-var")
        parser.add_argument("--a-start", type=float)
        parser.add_argument("--a-end", type=float)
        parser.add_argument("--seed", type=int, default=0)
        parser.add_argument("--out-dir", required=True)
        parser.add_argument("--stem", default="fixture")

    def run(self, *args, **options):
        payload = load_json(options["spec"]) if options.get("spec") else {}
        if not isinstance(payload, dict):
            raise SchemaValidationError("La especificación debe ser un objeto JSON")
        for key in _OVERRIDES:
            if options.get(key) is not None:
                payload[key] = options[key]
        serializer = validate_or_raise(FixtureSpecSerializer(data=payload), "Especificación")
        spec = FixtureSpec.from_validated(serializer.validated_data)

        data_path, schema_path = make_fixture(spec, options["seed"], options["out_dir"], options["stem"])
        self.stdout.write(self.style.SUCCESS(f'Datos: {data_path}\nEsquema: {schema_path}'))
