# spectral/services/dataset.py
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np

from ..exceptions import MissingWeightError, PreconditionError, UnknownGroupVariableError


@dataclass(frozen=True, eq=False)
class SurveyDataset:
    """Respondentes × preguntas codificadas (NaN = faltante), con peso, año y grupos.

    ``groups`` asocia cada variable de agrupación con un arreglo de etiquetas
    (``None`` cuando la etiqueta está ausente).
    """

    questions: List[str]
    values: np.ndarray
    weights: np.ndarray
    years: np.ndarray
    groups: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        values = np.array(self.values, dtype=float, ndmin=2, copy=True)
        n = len(self.weights)
        if values.size == 0:
            values = values.reshape(n, len(self.questions))
        if values.shape != (n, len(self.questions)):
            raise PreconditionError(
                f"Forma de valores {values.shape} no coincide con ({n}, {len(self.questions)})"
            )
        weights = np.array(self.weights, dtype=float, copy=True)
        bad = np.flatnonzero(~np.isfinite(weights) | (weights <= 0))
        if bad.size:
            raise MissingWeightError(f"Peso no positivo o no finito en la fila {int(bad[0])}", row=int(bad[0]))
        years = np.array(self.years, dtype=int, copy=True).reshape(n)
        groups = {}
        for name, labels in self.groups.items():
            arr = np.array(labels, dtype=object, copy=True).reshape(n)
            arr.setflags(write=False)
            groups[name] = arr
        for arr in (values, weights, years):
            arr.setflags(write=False)
        object.__setattr__(self, "questions", list(self.questions))
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "years", years)
        object.__setattr__(self, "groups", groups)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def take(self, rows: Sequence[int]) -> "SurveyDataset":
        idx = np.asarray(rows, dtype=int)
        return SurveyDataset(
            questions=self.questions,
            values=self.values[idx],
            weights=self.weights[idx],
            years=self.years[idx],
            groups={name: labels[idx] for name, labels in self.groups.items()},
        )

    def group_labels(self, group_var: str) -> np.ndarray:
        if group_var not in self.groups:
            raise UnknownGroupVariableError(f"Variable de grupo desconocida: {group_var}")
        return self.groups[group_var]
