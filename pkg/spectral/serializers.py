from rest_framework import serializers

from .exceptions import SchemaValidationError
from .services.encode import QuestionSchema, normalize_code
from .services.latent import EDistribution, LatentModel, YDistribution
from .services.symmat import NormKind, make_sym


class CodeField(serializers.Field):
    """Código de respuesta crudo: entero o texto, normalizado a texto."""

    def to_internal_value(self, data):
        if isinstance(data, (bool, list, dict)):
            raise serializers.ValidationError("Código inválido.")
        code = normalize_code(data)
        if code is None:
            raise serializers.ValidationError("El código no puede estar vacío.")
        return code

    def to_representation(self, value):
        return value


def validate_or_raise(serializer: serializers.Serializer, label: str) -> serializers.Serializer:
    if not serializer.is_valid():
        raise SchemaValidationError(f"{label} inválido: {serializer.errors}", errors=serializer.errors)
    return serializer


# ---- Esquema de preguntas ----

class QuestionSchemaSerializer(serializers.Serializer):
    question_id = serializers.CharField(max_length=200)
    ordered_codes = serializers.ListField(child=CodeField(), min_length=2)
    excluded_codes = serializers.ListField(child=CodeField(), required=False, default=list)
    topics = serializers.ListField(child=serializers.CharField(), required=False, default=list)

    def validate_ordered_codes(self, value):
        if len(set(value)) != len(value):
            raise serializers.ValidationError("Los códigos ordenados no pueden repetirse.")
        return value

    def validate(self, data):
        overlap = set(data["ordered_codes"]) & set(data.get("excluded_codes", []))
        if overlap:
            raise serializers.ValidationError(
                {"excluded_codes": f"Códigos excluidos y ordenados se solapan: {sorted(overlap)}"}
            )
        return data

    def to_schema(self) -> QuestionSchema:
        data = self.validated_data
        return QuestionSchema(
            question_id=data["question_id"],
            ordered_codes=tuple(data["ordered_codes"]),
            excluded_codes=tuple(data.get("excluded_codes", [])),
            topics=tuple(data.get("topics", [])),
        )


def parse_schemas(payload) -> list:
    if not isinstance(payload, list):
        raise SchemaValidationError("El esquema debe ser un arreglo JSON de preguntas")
    items = []
    for i, item in enumerate(payload):
        ser = validate_or_raise(QuestionSchemaSerializer(data=item), f"Esquema #{i}")
        items.append(ser.to_schema())
    ids = [s.question_id for s in items]
    duplicated = sorted({q for q in ids if ids.count(q) > 1})
    if duplicated:
        raise SchemaValidationError(f"Preguntas duplicadas en el esquema: {duplicated}")
    return items


# ---- Modelo latente ----

class LatentModelSerializer(serializers.Serializer):
    a = serializers.FloatField()
    beta = serializers.ListField(child=serializers.FloatField(), min_length=1)
    gamma = serializers.ListField(child=serializers.ListField(child=serializers.FloatField()))
    y_dist = serializers.ChoiceField(choices=[d.value for d in YDistribution], default=YDistribution.NORMAL.value)
    e_dist = serializers.ChoiceField(choices=[d.value for d in EDistribution], default=EDistribution.NORMAL.value)

    def validate_a(self, value):
        if value <= 0:
            raise serializers.ValidationError("a debe ser mayor a 0.")
        return value

    def validate(self, data):
        p = len(data["beta"])
        gamma = data["gamma"]
        if len(gamma) != p or any(len(row) != p for row in gamma):
            raise serializers.ValidationError({"gamma": f"gamma debe ser {p}×{p}."})
        return data

    def to_model(self) -> LatentModel:
        data = self.validated_data
        return LatentModel(
            a=data["a"],
            beta=data["beta"],
            gamma=make_sym(data["gamma"], tol=1e-9),
            y_dist=data["y_dist"],
            e_dist=data["e_dist"],
        )


# ---- Generador de datos sintéticos ----

class FixtureSpecSerializer(serializers.Serializer):
    scales = serializers.ListField(child=serializers.IntegerField(min_value=2, max_value=11), min_length=1)
    n_per_bin = serializers.IntegerField(min_value=1)
    bins = serializers.IntegerField(min_value=1)
    start_year = serializers.IntegerField(default=1990)
    bin_width_years = serializers.IntegerField(min_value=1, default=5)
    missingness = serializers.FloatField(min_value=0.0, max_value=1.0, default=0.0)
    other_rate = serializers.FloatField(min_value=0.0, max_value=1.0, default=0.0)
    topic = serializers.CharField(default="synthetic")
    group_var = serializers.CharField(default="party")
    group_labels = serializers.ListField(child=serializers.CharField(), min_length=1, default=lambda: ["dem", "rep"])
    group_missing_rate = serializers.FloatField(min_value=0.0, max_value=1.0, default=0.0)
    beta = serializers.ListField(child=serializers.FloatField(), required=False)
    a_start = serializers.FloatField(default=1.0)
    a_end = serializers.FloatField(required=False)
    noise_variance = serializers.FloatField(min_value=0.0, default=0.5)
    group_shift_start = serializers.FloatField(default=0.0)
    group_shift_end = serializers.FloatField(required=False)
    within_scale_start = serializers.FloatField(default=1.0)
    within_scale_end = serializers.FloatField(required=False)
    response_range = serializers.FloatField(default=3.0)
    weight_min = serializers.FloatField(default=0.5)
    weight_max = serializers.FloatField(default=2.0)
    y_dist = serializers.ChoiceField(choices=[d.value for d in YDistribution], default=YDistribution.NORMAL.value)
    weight_column = serializers.CharField(default="WTSSPS")

    def validate_a_start(self, value):
        if value <= 0:
            raise serializers.ValidationError("a_start debe ser mayor a 0.")
        return value

    def validate_response_range(self, value):
        if value <= 0:
            raise serializers.ValidationError("response_range debe ser mayor a 0.")
        return value

    def validate(self, data):
        if data.get("beta") is not None and len(data["beta"]) != len(data["scales"]):
            raise serializers.ValidationError({"beta": "beta debe tener una entrada por pregunta."})
        if data.get("a_end") is not None and data["a_end"] <= 0:
            raise serializers.ValidationError({"a_end": "a_end debe ser mayor a 0."})
        if data["weight_min"] <= 0 or data["weight_max"] < data["weight_min"]:
            raise serializers.ValidationError({"weight_min": "Se requiere 0 < weight_min <= weight_max."})
        for key in ("within_scale_start", "within_scale_end"):
            if data.get(key) is not None and data[key] < 0:
                raise serializers.ValidationError({key: "La escala no puede ser negativa."})
        return data


# ---- Configuración del análisis ----

class AnalysisConfigSerializer(serializers.Serializer):
    data_path = serializers.CharField()
    schema_path = serializers.CharField()
    topic = serializers.CharField(required=False, allow_null=True, default=None)
    questions = serializers.ListField(child=serializers.CharField(), required=False, allow_null=True, default=None)
    bin_width_years = serializers.IntegerField(min_value=1, default=5)
    norm = serializers.ChoiceField(choices=[k.value for k in NormKind], default=NormKind.SPECTRAL.value)
    question_policy = serializers.ChoiceField(choices=["intersection", "per_bin"], default="intersection")
    group_vars = serializers.ListField(child=serializers.CharField(), required=False, default=list)
    min_cell = serializers.IntegerField(min_value=1, default=2)
    baseline_bin = serializers.CharField(required=False, allow_null=True, default=None)
    weight_column = serializers.CharField(default="WTSSPS")
    year_column = serializers.CharField(default="year")
    missing_sentinels = serializers.ListField(child=serializers.CharField(), required=False, default=list)
    bootstrap_b = serializers.IntegerField(min_value=1, required=False, allow_null=True, default=None)
    bootstrap_level = serializers.FloatField(default=0.95)
    bootstrap_max_failure_rate = serializers.FloatField(min_value=0, max_value=1, default=0.01)
    seed = serializers.IntegerField(min_value=0, default=0)
    trace_decomposition = serializers.BooleanField(default=True)
    workers = serializers.IntegerField(min_value=1, default=1)

    def validate_bootstrap_level(self, value):
        if not 0 < value < 1:
            raise serializers.ValidationError("El nivel debe estar en (0, 1).")
        return value

    def validate(self, data):
        if data.get("topic") and data.get("questions"):
            raise serializers.ValidationError("Indique un tópico o una lista de preguntas, no ambos.")
        return data
