# spectral/services/pipeline.py
"""Ingesta, agrupación temporal, orquestación del análisis y emisión de resultados."""
import hashlib
import json
import logging
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from django.core.serializers.json import DjangoJSONEncoder

from ..exceptions import (
    BinError, EmptySeriesError, IoError, MissingWeightError, ParseError, PreconditionError,
    SchemaMismatchError, SpectralError, UnknownGroupVariableError,
)
from .charts import render_series_chart
from .dataset import SurveyDataset
from .decompose import (
    CounterfactualSeries, GroupDecomposition, group_decompose, trace_concentration_counterfactuals,
    within_between_counterfactuals,
)
from .encode import EncodingCounts, QuestionSchema, encode_dataset
from .estimate import (
    DEFAULT_MAX_FAILURE_RATE, BootstrapResult, PolarizationIndex, bootstrap_rho, pairwise_covariance,
    polarization_index, run_replicates,
)
from .latent import YDistribution, draw_unit_latent
from .symmat import NormKind, SymMatrix

logger = logging.getLogger(__name__)

INTERSECTION = "intersection"
PER_BIN = "per_bin"
MIN_BIN_RESPONDENTS = 2
MIN_QUESTION_RESPONSES = 2

DROP_NO_RESPONSES = "no_responses"
DROP_EMPTY_BIN = "empty_bin"


# ---- Configuración ----

@dataclass(frozen=True)
class BootstrapSpec:
    B: int
    level: float = 0.95
    seed: int = 0
    max_failure_rate: float = DEFAULT_MAX_FAILURE_RATE


@dataclass(frozen=True)
class AnalysisConfig:
    data_path: str
    schema_path: str
    topic: Optional[str] = None
    questions: Optional[Tuple[str, ...]] = None
    bin_width_years: int = 5
    norm: NormKind = NormKind.SPECTRAL
    question_policy: str = INTERSECTION
    group_vars: Tuple[str, ...] = ()
    min_cell: int = 2
    baseline_bin: Optional[str] = None
    weight_column: str = "WTSSPS"
    year_column: str = "year"
    missing_sentinels: Tuple[str, ...] = ()
    bootstrap: Optional[BootstrapSpec] = None
    trace_decomposition: bool = True
    workers: int = 1

    def __post_init__(self):
        if self.bin_width_years < 1:
            raise PreconditionError("bin_width_years debe ser al menos 1")
        if self.question_policy not in (INTERSECTION, PER_BIN):
            raise PreconditionError(f"Política de preguntas desconocida: {self.question_policy}")
        object.__setattr__(self, "norm", NormKind(self.norm))
        object.__setattr__(self, "group_vars", tuple(self.group_vars))
        if self.questions is not None:
            object.__setattr__(self, "questions", tuple(self.questions))
        object.__setattr__(self, "missing_sentinels", tuple(self.missing_sentinels))

    @property
    def group_var(self) -> Optional[str]:
        return self.group_vars[0] if self.group_vars else None

    @classmethod
    def from_validated(cls, data: dict) -> "AnalysisConfig":
        """Construye la configuración desde ``AnalysisConfigSerializer.validated_data``."""
        bootstrap = None
        if data.get("bootstrap_b"):
            bootstrap = BootstrapSpec(
                B=data["bootstrap_b"], level=data["bootstrap_level"], seed=data["seed"],
                max_failure_rate=data["bootstrap_max_failure_rate"],
            )
        return cls(
            data_path=data["data_path"],
            schema_path=data["schema_path"],
            topic=data.get("topic"),
            questions=tuple(data["questions"]) if data.get("questions") else None,
            bin_width_years=data["bin_width_years"],
            norm=data["norm"],
            question_policy=data["question_policy"],
            group_vars=tuple(data.get("group_vars") or ()),
            min_cell=data["min_cell"],
            baseline_bin=data.get("baseline_bin"),
            weight_column=data["weight_column"],
            year_column=data["year_column"],
            missing_sentinels=tuple(data.get("missing_sentinels") or ()),
            bootstrap=bootstrap,
            trace_decomposition=data["trace_decomposition"],
            workers=data["workers"],
        )

    def to_dict(self) -> dict:
        return {
            "topic": self.topic,
            "questions": list(self.questions) if self.questions else None,
            "bin_width_years": self.bin_width_years,
            "norm": self.norm.value,
            "question_policy": self.question_policy,
            "group_vars": list(self.group_vars),
            "min_cell": self.min_cell,
            "baseline_bin": self.baseline_bin,
            "weight_column": self.weight_column,
            "bootstrap": None if self.bootstrap is None else {
                "B": self.bootstrap.B, "level": self.bootstrap.level, "seed": self.bootstrap.seed,
                "max_failure_rate": self.bootstrap.max_failure_rate,
            },
        }


# ---- Lectura de archivos ----

def load_json(path) -> object:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise PreconditionError(f"No existe el archivo {path}")
    except json.JSONDecodeError as e:
        raise ParseError(f"JSON inválido en {path}: {e.msg}", line=e.lineno, column=str(e.colno))


def load_schemas(path) -> List[QuestionSchema]:
    from ..serializers import parse_schemas

    return parse_schemas(load_json(path))


def select_schemas(schemas: Sequence[QuestionSchema], topic: Optional[str] = None,
                   questions: Optional[Sequence[str]] = None) -> List[QuestionSchema]:
    if questions:
        by_id = {s.question_id: s for s in schemas}
        unknown = [q for q in questions if q not in by_id]
        if unknown:
            raise SchemaMismatchError(f"Preguntas sin esquema: {', '.join(unknown)}")
        return [by_id[q] for q in questions]
    if topic:
        selected = [s for s in schemas if topic in s.topics]
        if not selected:
            raise SchemaMismatchError(f"Ninguna pregunta pertenece al tópico {topic}")
        return selected
    return list(schemas)


_LINE_PATTERN = re.compile(r"line (\d+)")


def read_table(path, sentinels: Sequence[str] = ()) -> pd.DataFrame:
    try:
        return pd.read_csv(
            path, dtype=str, keep_default_na=False, na_values=[""] + list(sentinels), encoding="utf-8",
        )
    except FileNotFoundError:
        raise PreconditionError(f"No existe el archivo {path}")
    except pd.errors.EmptyDataError:
        raise ParseError(f"CSV vacío: {path}", line=1)
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        match = _LINE_PATTERN.search(str(e))
        raise ParseError(f"CSV inválido en {path}: {e}", line=int(match.group(1)) if match else None)


# ---- Ingesta ----

@dataclass
class BinData:
    label: str
    start: int
    end: int
    dataset: SurveyDataset
    dropped_questions: List[str] = field(default_factory=list)


@dataclass
class IngestResult:
    bins: List[BinData]
    questions: List[str]
    dropped_questions: List[str]
    drop_reasons: Dict[str, int]
    empty_bins: List[str]
    encoding: Dict[str, EncodingCounts]
    rows_total: int

    def to_dict(self) -> dict:
        return {
            "rows_total": self.rows_total,
            "rows_binned": sum(b.dataset.n for b in self.bins),
            "drop_reasons": dict(self.drop_reasons),
            "empty_bins": list(self.empty_bins),
            "questions": list(self.questions),
            "dropped_questions": list(self.dropped_questions),
            "encoding": {q: c.to_dict() for q, c in self.encoding.items()},
        }


def bin_label(start: int, width: int) -> str:
    return f"{start}-{start + width}"


def _parse_years(table: pd.DataFrame, column: str) -> np.ndarray:
    if column not in table.columns:
        raise ParseError(f"Falta la columna de año '{column}'", line=1, column=column)
    years = pd.to_numeric(table[column], errors="coerce")
    bad = years.isna() | (years != years.round())
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0])
        raise ParseError("Año no entero", line=row + 2, column=column)
    return years.to_numpy(dtype=int)


def _parse_weights(table: pd.DataFrame, column: str) -> np.ndarray:
    if column not in table.columns:
        raise MissingWeightError(f"Falta la columna de pesos '{column}'")
    weights = pd.to_numeric(table[column], errors="coerce").to_numpy(dtype=float)
    bad = ~np.isfinite(weights) | (weights <= 0)
    if bad.any():
        row = int(np.flatnonzero(bad)[0])
        raise MissingWeightError(f"Peso faltante o no positivo en la fila {row + 1} (línea {row + 2})", row=row + 1)
    return weights


def _group_columns(table: pd.DataFrame, group_vars: Sequence[str]) -> Dict[str, np.ndarray]:
    groups = {}
    for var in group_vars:
        if var not in table.columns:
            raise UnknownGroupVariableError(f"Variable de grupo desconocida: {var}")
        column = table[var]
        groups[var] = np.array([None if pd.isna(x) else str(x) for x in column], dtype=object)
    return groups


def ingest(data_path, schema_path, config: AnalysisConfig) -> IngestResult:
    schemas = select_schemas(load_schemas(schema_path), config.topic, config.questions)
    table = read_table(data_path, config.missing_sentinels)
    question_ids = [s.question_id for s in schemas]
    absent = [q for q in question_ids if q not in table.columns]
    if absent:
        raise SchemaMismatchError(f"Preguntas del esquema ausentes en los datos: {', '.join(absent)}")

    years = _parse_years(table, config.year_column)
    weights = _parse_weights(table, config.weight_column)
    groups = _group_columns(table, config.group_vars)
    encoded = encode_dataset(schemas, table[question_ids], config.missing_sentinels)
    rows_total = len(table)
    logger.info(f"Ingesta: {rows_total} filas, {len(question_ids)} preguntas")

    drop_reasons = {DROP_NO_RESPONSES: 0, DROP_EMPTY_BIN: 0}
    if rows_total == 0:
        return IngestResult([], question_ids, [], drop_reasons, [], encoded.counts, 0)

    width = config.bin_width_years
    anchor = (int(years.min()) // width) * width
    bin_index = (years - anchor) // width
    has_response = (~np.isnan(encoded.values)).any(axis=1)
    drop_reasons[DROP_NO_RESPONSES] = int((~has_response).sum())

    kept_bins = []
    empty_bins = []
    for idx in range(int(bin_index.max()) + 1):
        start = anchor + idx * width
        label = bin_label(start, width)
        rows = np.flatnonzero((bin_index == idx) & has_response)
        if rows.size < MIN_BIN_RESPONDENTS:
            if rows.size or np.any(bin_index == idx):
                logger.warning(f"Bin {label} con {rows.size} respondentes: descartado")
                empty_bins.append(label)
            drop_reasons[DROP_EMPTY_BIN] += int(rows.size)
            continue
        kept_bins.append((label, start, rows))

    def responses(rows: np.ndarray) -> np.ndarray:
        return (~np.isnan(encoded.values[rows])).sum(axis=0)

    if config.question_policy == INTERSECTION:
        keep = np.ones(len(question_ids), dtype=bool)
        for _, _, rows in kept_bins:
            keep &= responses(rows) >= MIN_QUESTION_RESPONSES
        if not kept_bins:
            keep[:] = False
        per_bin_keep = [keep for _ in kept_bins]
    else:
        per_bin_keep = [responses(rows) >= MIN_QUESTION_RESPONSES for _, _, rows in kept_bins]
        keep = np.zeros(len(question_ids), dtype=bool)
        for mask in per_bin_keep:
            keep |= mask

    dropped = [q for q, k in zip(question_ids, keep) if not k]
    if dropped:
        logger.warning(f"Preguntas descartadas por la política {config.question_policy}: {', '.join(dropped)}")

    bins = []
    for (label, start, rows), mask in zip(kept_bins, per_bin_keep):
        cols = np.flatnonzero(mask)
        dataset = SurveyDataset(
            questions=[question_ids[c] for c in cols],
            values=encoded.values[np.ix_(rows, cols)],
            weights=weights[rows],
            years=years[rows],
            groups={var: labels[rows] for var, labels in groups.items()},
        )
        bins.append(BinData(
            label=label, start=start, end=start + width, dataset=dataset,
            dropped_questions=[question_ids[c] for c in np.flatnonzero(~mask)],
        ))
    logger.info(f"Ingesta: {len(bins)} bins conservados, {len(empty_bins)} descartados")
    return IngestResult(
        bins=bins,
        questions=[q for q, k in zip(question_ids, keep) if k],
        dropped_questions=dropped,
        drop_reasons=drop_reasons,
        empty_bins=empty_bins,
        encoding=encoded.counts,
        rows_total=rows_total,
    )


# ---- Análisis ----

@dataclass
class BinResult:
    bin_label: str
    start: int
    end: int
    n_respondents: int
    kish_n_eff: float
    questions: List[str]
    sigma: SymMatrix
    index: PolarizationIndex
    headline: float
    question_variances: Dict[str, float]
    decompositions: Dict[str, GroupDecomposition] = field(default_factory=dict)
    bootstrap: Optional[BootstrapResult] = None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "bin": self.bin_label,
            "start": self.start,
            "end": self.end,
            "n_respondents": self.n_respondents,
            "kish_n_eff": self.kish_n_eff,
            "questions": list(self.questions),
            "index": self.index.to_dict(),
            "headline": self.headline,
            "question_variances": dict(self.question_variances),
            "sigma": self.sigma.to_list(),
            "decompositions": {var: d.to_dict() for var, d in self.decompositions.items()},
            "bootstrap": self.bootstrap.to_dict() if self.bootstrap else None,
            "diagnostics": dict(self.diagnostics),
        }


@dataclass
class AnalysisResult:
    config: AnalysisConfig
    bins: List[BinResult]
    ingest: IngestResult
    trace_series: Optional[CounterfactualSeries] = None
    group_series: Dict[str, CounterfactualSeries] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "ingest": self.ingest.to_dict(),
            "bins": [b.to_dict() for b in self.bins],
            "series": {
                "trace_concentration": self.trace_series.to_dict() if self.trace_series else None,
                "groups": {var: s.to_dict() for var, s in self.group_series.items()},
            },
        }


def analyze_bin(data: BinData, config: AnalysisConfig) -> BinResult:
    dataset = data.dataset
    cov = pairwise_covariance(dataset)
    index = polarization_index(cov)
    diagnostics = cov.diagnostics(dataset.questions)
    diagnostics["dropped_questions"] = list(data.dropped_questions)
    if cov.lambda_min < 0:
        logger.warning(f"Bin {data.label}: estimación no PSD (λ_min = {cov.lambda_min:.3e})")

    decompositions = {
        var: group_decompose(dataset, var, config.min_cell) for var in config.group_vars
    }
    boot = None
    if config.bootstrap is not None:
        spec = config.bootstrap
        boot = bootstrap_rho(
            dataset, spec.B, spec.level, spec.seed,
            workers=config.workers, max_failure_rate=spec.max_failure_rate,
        )

    return BinResult(
        bin_label=data.label,
        start=data.start,
        end=data.end,
        n_respondents=dataset.n,
        kish_n_eff=cov.kish_n_eff,
        questions=list(dataset.questions),
        sigma=cov.sigma,
        index=index,
        headline=index.norm(config.norm),
        question_variances={q: float(v) for q, v in zip(dataset.questions, np.diag(cov.sigma.entries))},
        decompositions=decompositions,
        bootstrap=boot,
        diagnostics=diagnostics,
    )


def _analyze_bin_annotated(data: BinData, config: AnalysisConfig) -> BinResult:
    try:
        return analyze_bin(data, config)
    except SpectralError as e:
        logger.error(f"Error en el bin {data.label}: {e}")
        raise BinError(data.label, e) from e


def run_analysis(config: AnalysisConfig) -> AnalysisResult:
    ingested = ingest(config.data_path, config.schema_path, config)
    if not ingested.bins:
        raise EmptySeriesError("Ningún bin tiene respondentes suficientes")

    results = run_replicates(
        lambda i: _analyze_bin_annotated(ingested.bins[i], config), len(ingested.bins), config.workers,
    )

    trace_series = None
    group_series = {}
    if len(results) >= 2:
        if config.trace_decomposition:
            trace_series = trace_concentration_counterfactuals(
                [(r.bin_label, r.sigma) for r in results], config.baseline_bin,
            )
        for var in config.group_vars:
            group_series[var] = within_between_counterfactuals(
                [(r.bin_label, r.decompositions[var]) for r in results], config.baseline_bin,
            )
    logger.info(f"Análisis completado: {len(results)} bins")
    return AnalysisResult(
        config=config, bins=results, ingest=ingested, trace_series=trace_series, group_series=group_series,
    )


# ---- Emisión ----

JSON = "json"
CSV = "csv"
SVG = "svg"
FORMATS = (JSON, CSV, SVG)


def format_from_path(path) -> str:
    suffix = Path(path).suffix.lower().lstrip(".")
    if suffix not in FORMATS:
        raise PreconditionError(f"Formato de salida desconocido: {path}")
    return suffix


def _label_column(label: str) -> str:
    # etiquetas no alfanuméricas llevan un sufijo hash: "a b" y "a-b" no comparten columna
    if re.fullmatch(r"[0-9A-Za-z]+", label):
        return label
    safe = re.sub(r"[^0-9A-Za-z]+", "_", label).strip("_")
    digest = hashlib.sha1(label.encode("utf-8")).hexdigest()[:8]
    return f"{safe}_{digest}"


def flat_rows(result: AnalysisResult) -> pd.DataFrame:
    rows = []
    for i, r in enumerate(result.bins):
        row = {
            "bin": r.bin_label,
            "start": r.start,
            "end": r.end,
            "n_respondents": r.n_respondents,
            "kish_n_eff": r.kish_n_eff,
            "p": len(r.questions),
            "rho": r.index.rho,
            "trace": r.index.trace,
            "concentration": r.index.concentration,
            "norm_spectral": r.index.norm_spectral,
            "norm_frobenius": r.index.norm_frobenius,
            "norm_nuclear": r.index.norm_nuclear,
            "headline": r.headline,
            "lambda_min": r.diagnostics.get("lambda_min"),
        }
        if r.bootstrap is not None:
            row.update({
                "boot_ci_low": r.bootstrap.ci_low,
                "boot_ci_high": r.bootstrap.ci_high,
                "boot_se": r.bootstrap.standard_error,
            })
        if result.trace_series is not None:
            row["variance_only"] = result.trace_series.variance_only[i]
            row["concentration_only"] = result.trace_series.concentration_only[i]
        for var, d in r.decompositions.items():
            row[f"{var}_rho_within"] = d.rho_within
            row[f"{var}_rho_between"] = d.rho_between
            row[f"{var}_slack_b"] = d.slack_b
            row[f"{var}_slack_w"] = d.slack_w
            row[f"{var}_dropped_weight_share"] = d.dropped_weight_share
            for label, rho in zip(d.group_labels, d.group_rho):
                row[f"{var}_group_rho_{_label_column(label)}"] = rho
            series = result.group_series.get(var)
            if series is not None:
                row[f"{var}_within_only"] = series.within_only[i]
                row[f"{var}_between_only"] = series.between_only[i]
        rows.append(row)
    return pd.DataFrame(rows)


def chart_series(result: AnalysisResult) -> Dict[str, List[float]]:
    series = {"observado (ρ)": [r.index.rho for r in result.bins]}
    if result.config.norm is not NormKind.SPECTRAL:
        series[f"norma {result.config.norm.value}"] = [r.headline for r in result.bins]
    if result.trace_series is not None:
        series["solo varianza total"] = result.trace_series.variance_only
        series["solo concentración"] = result.trace_series.concentration_only
    for var, s in result.group_series.items():
        series[f"solo dentro ({var})"] = s.within_only
        series[f"solo entre ({var})"] = s.between_only
    return series


def write_bytes(out_path, payload: bytes):
    try:
        path = Path(out_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(payload)
    except OSError as e:
        raise IoError(f"No se pudo escribir {out_path}: {e}")
    logger.info(f"Archivo escrito: {out_path}")


def to_json_bytes(payload) -> bytes:
    return (json.dumps(payload, indent=2, cls=DjangoJSONEncoder, allow_nan=False) + "\n").encode("utf-8")


def write_json(payload, out_path):
    write_bytes(out_path, to_json_bytes(payload))


def emit(result: AnalysisResult, fmt: str, out_path) -> Path:
    if fmt not in FORMATS:
        raise PreconditionError(f"Formato desconocido: {fmt}")
    if fmt == JSON:
        payload = to_json_bytes(result.to_dict())
    elif fmt == CSV:
        payload = flat_rows(result).to_csv(index=False, lineterminator="\n").encode("utf-8")
    else:
        if not result.bins:
            raise PreconditionError("No se puede graficar un resultado vacío")
        title = f"Polarización: {result.config.topic or 'preguntas seleccionadas'}"
        payload = render_series_chart([r.bin_label for r in result.bins], chart_series(result), title)
    write_bytes(out_path, payload)
    return Path(out_path)


# ---- Datos sintéticos con forma de encuesta ----

@dataclass(frozen=True)
class FixtureSpec:
    scales: Tuple[int, ...]
    n_per_bin: int
    bins: int
    start_year: int = 1990
    bin_width_years: int = 5
    missingness: float = 0.0
    other_rate: float = 0.0
    topic: str = "synthetic"
    group_var: str = "party"
    group_labels: Tuple[str, ...] = ("dem", "rep")
    group_missing_rate: float = 0.0
    beta: Optional[Tuple[float, ...]] = None
    a_start: float = 1.0
    a_end: Optional[float] = None
    noise_variance: float = 0.5
    group_shift_start: float = 0.0
    group_shift_end: Optional[float] = None
    within_scale_start: float = 1.0
    within_scale_end: Optional[float] = None
    response_range: float = 3.0
    weight_min: float = 0.5
    weight_max: float = 2.0
    y_dist: str = YDistribution.NORMAL.value
    weight_column: str = "WTSSPS"

    @classmethod
    def from_validated(cls, data: dict) -> "FixtureSpec":
        values = dict(data)
        values["scales"] = tuple(values["scales"])
        values["group_labels"] = tuple(values["group_labels"])
        if values.get("beta") is not None:
            values["beta"] = tuple(values["beta"])
        return cls(**values)

    def _ramp(self, start: float, end: Optional[float], b: int) -> float:
        if end is None or self.bins == 1:
            return start
        return start + (end - start) * b / (self.bins - 1)

    def latent_variance(self, b: int) -> float:
        return self._ramp(self.a_start, self.a_end, b)

    def group_shift(self, b: int) -> float:
        return self._ramp(self.group_shift_start, self.group_shift_end, b)

    def within_scale(self, b: int) -> float:
        return self._ramp(self.within_scale_start, self.within_scale_end, b)


OTHER_CODE = "99"


def _discretize(x: np.ndarray, k: int, response_range: float) -> np.ndarray:
    """Valores continuos → índice de código 0..k-1 sobre una grilla uniforme en [-range, range]."""
    u = np.clip(x / response_range, -1.0, 1.0)
    return np.rint((u + 1.0) / 2.0 * (k - 1)).astype(int)


def fixture_schemas(spec: FixtureSpec) -> List[QuestionSchema]:
    return [
        QuestionSchema(
            question_id=f"q{j + 1}",
            ordered_codes=tuple(str(c) for c in range(1, k + 1)),
            excluded_codes=(OTHER_CODE,),
            topics=(spec.topic,),
        )
        for j, k in enumerate(spec.scales)
    ]


def generate_fixture_table(spec: FixtureSpec, seed: int) -> pd.DataFrame:
    p = len(spec.scales)
    beta = np.asarray(spec.beta if spec.beta is not None else np.ones(p), dtype=float)
    labels = np.asarray(spec.group_labels, dtype=object)
    centers = np.linspace(-1.0, 1.0, len(labels)) if len(labels) > 1 else np.zeros(1)
    y_dist = YDistribution(spec.y_dist)

    frames = []
    for b in range(spec.bins):
        rng = np.random.default_rng([int(seed), b])
        n = spec.n_per_bin
        group_idx = rng.integers(0, len(labels), size=n)
        y = np.sqrt(spec.latent_variance(b)) * draw_unit_latent(rng, y_dist, n)
        noise = np.sqrt(spec.noise_variance) * rng.standard_normal((n, p))
        within = np.sqrt(spec.within_scale(b)) * (np.outer(y, beta) + noise)
        x = np.outer(spec.group_shift(b) * centers[group_idx], beta) + within

        frame = {
            "id": np.arange(b * n, (b + 1) * n) + 1,
            "year": spec.start_year + b * spec.bin_width_years + rng.integers(0, spec.bin_width_years, size=n),
            spec.weight_column: np.round(rng.uniform(spec.weight_min, spec.weight_max, size=n), 6),
        }
        group_column = labels[group_idx].copy()
        group_column[rng.random(n) < spec.group_missing_rate] = ""
        frame[spec.group_var] = group_column

        for j, k in enumerate(spec.scales):
            codes = (_discretize(x[:, j], k, spec.response_range) + 1).astype(str).astype(object)
            codes[rng.random(n) < spec.other_rate] = OTHER_CODE
            codes[rng.random(n) < spec.missingness] = ""
            frame[f"q{j + 1}"] = codes
        frames.append(pd.DataFrame(frame))
    return pd.concat(frames, ignore_index=True)


def make_fixture(spec: FixtureSpec, seed: int, out_dir, stem: str = "fixture") -> Tuple[Path, Path]:
    """Escribe ``<stem>.csv`` y ``<stem>_schema.json`` en ``out_dir``."""
    table = generate_fixture_table(spec, seed)
    out = Path(out_dir)
    data_path = out / f"{stem}.csv"
    schema_path = out / f"{stem}_schema.json"
    write_bytes(data_path, table.to_csv(index=False, lineterminator="\n").encode("utf-8"))
    write_json([s.to_dict() for s in fixture_schemas(spec)], schema_path)
    return data_path, schema_path


def fixture_config(data_path, schema_path, spec: FixtureSpec, **overrides) -> AnalysisConfig:
    config = AnalysisConfig(
        data_path=str(data_path),
        schema_path=str(schema_path),
        topic=spec.topic,
        bin_width_years=spec.bin_width_years,
        weight_column=spec.weight_column,
    )
    return replace(config, **overrides)
