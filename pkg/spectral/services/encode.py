# spectral/services/encode.py
"""Codificación de respuestas ordinales a la escala fija [-1, +1]."""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..exceptions import SchemaMismatchError, SchemaValidationError

logger = logging.getLogger(__name__)

PRESENT = "present"
MISSING = "missing"
EXCLUDED = "excluded"
UNRECOGNIZED = "unrecognized"


def normalize_code(raw) -> Optional[str]:
    """Lleva un código crudo a su forma canónica de texto; ``None`` si está ausente."""
    if raw is None:
        return None
    if isinstance(raw, float):
        if math.isnan(raw):
            return None
        if raw.is_integer():
            return str(int(raw))
    text = str(raw).strip()
    return text or None


@dataclass(frozen=True)
class QuestionSchema:
    question_id: str
    ordered_codes: Tuple[str, ...]
    excluded_codes: Tuple[str, ...] = ()
    topics: Tuple[str, ...] = ()

    def __post_init__(self):
        ordered = tuple(normalize_code(c) for c in self.ordered_codes)
        excluded = tuple(normalize_code(c) for c in self.excluded_codes)
        if len(ordered) < 2:
            raise SchemaValidationError(f"{self.question_id}: se requieren al menos 2 códigos ordenados")
        if any(c is None for c in ordered + excluded):
            raise SchemaValidationError(f"{self.question_id}: códigos vacíos en el esquema")
        if len(set(ordered)) != len(ordered):
            raise SchemaValidationError(f"{self.question_id}: códigos ordenados duplicados")
        if set(ordered) & set(excluded):
            raise SchemaValidationError(f"{self.question_id}: códigos excluidos y ordenados se solapan")
        object.__setattr__(self, "ordered_codes", ordered)
        object.__setattr__(self, "excluded_codes", excluded)
        object.__setattr__(self, "topics", tuple(self.topics))

    @property
    def scale(self) -> Dict[str, float]:
        # (2i - (K-1)) / (K-1): extremos exactos en ±1 y antisimetría exacta al invertir
        k = len(self.ordered_codes) - 1
        return {code: (2 * i - k) / k for i, code in enumerate(self.ordered_codes)}

    def reversed(self) -> "QuestionSchema":
        return QuestionSchema(
            question_id=self.question_id,
            ordered_codes=tuple(reversed(self.ordered_codes)),
            excluded_codes=self.excluded_codes,
            topics=self.topics,
        )

    def to_dict(self) -> dict:
        return {
            "question_id": self.question_id,
            "ordered_codes": list(self.ordered_codes),
            "excluded_codes": list(self.excluded_codes),
            "topics": list(self.topics),
        }


class EncodedValue(NamedTuple):
    value: Optional[float]
    status: str

    @property
    def is_missing(self) -> bool:
        return self.value is None


@dataclass
class EncodingCounts:
    present: int = 0
    missing: int = 0
    excluded: int = 0
    unrecognized: int = 0

    def to_dict(self) -> dict:
        return {
            "present": self.present,
            "missing": self.missing,
            "excluded": self.excluded,
            "unrecognized": self.unrecognized,
        }


@dataclass
class EncodedTable:
    """Tabla codificada: NaN marca celdas faltantes."""

    question_ids: List[str]
    values: np.ndarray
    counts: Dict[str, EncodingCounts] = field(default_factory=dict)

    @property
    def missing_mask(self) -> np.ndarray:
        return np.isnan(self.values)


def encode_value(schema: QuestionSchema, raw) -> EncodedValue:
    code = normalize_code(raw)
    if code is None:
        return EncodedValue(None, MISSING)
    if code in schema.excluded_codes:
        return EncodedValue(None, EXCLUDED)
    value = schema.scale.get(code)
    if value is None:
        return EncodedValue(None, UNRECOGNIZED)
    return EncodedValue(value, PRESENT)


def _encode_column(schema: QuestionSchema, column: pd.Series, sentinels: Sequence[str]):
    codes = column.map(normalize_code)
    if sentinels:
        codes = codes.where(~codes.isin(list(sentinels)), None)
    absent = codes.isna()
    excluded = codes.isin(list(schema.excluded_codes))
    values = codes.map(schema.scale)
    present = values.notna()
    counts = EncodingCounts(
        present=int(present.sum()),
        missing=int(absent.sum()),
        excluded=int(excluded.sum()),
        unrecognized=int((~absent & ~excluded & ~present).sum()),
    )
    return values.to_numpy(dtype=float, na_value=np.nan), counts


def encode_dataset(
    schemas: Sequence[QuestionSchema],
    raw_table: pd.DataFrame,
    sentinels: Sequence[str] = (),
) -> EncodedTable:
    """Codifica cada columna de ``raw_table`` con el esquema de su pregunta."""
    by_id = {s.question_id: s for s in schemas}
    columns = [str(c) for c in raw_table.columns]
    missing_schema = [c for c in columns if c not in by_id]
    if missing_schema:
        raise SchemaMismatchError(f"Columnas sin esquema: {', '.join(missing_schema)}")

    n = len(raw_table)
    values = np.full((n, len(columns)), np.nan)
    counts: Dict[str, EncodingCounts] = {}
    for j, qid in enumerate(columns):
        col_values, col_counts = _encode_column(by_id[qid], raw_table.iloc[:, j], sentinels)
        values[:, j] = col_values
        counts[qid] = col_counts
        if col_counts.unrecognized:
            logger.warning(f"Pregunta {qid}: {col_counts.unrecognized} códigos no reconocidos tratados como faltantes")

    return EncodedTable(question_ids=columns, values=values, counts=counts)
