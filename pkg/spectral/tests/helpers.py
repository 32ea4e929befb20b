import numpy as np

from spectral.services.dataset import SurveyDataset
from spectral.services.symmat import SymMatrix


def complete_dataset(values, weights=None, year=0, groups=None, questions=None) -> SurveyDataset:
    """Conjunto en un único año, pesos unitarios por defecto."""
    arr = np.array(values, dtype=float, ndmin=2)
    n, p = arr.shape
    return SurveyDataset(
        questions=questions or [f"q{j + 1}" for j in range(p)],
        values=arr,
        weights=np.ones(n) if weights is None else np.asarray(weights, dtype=float),
        years=np.full(n, year, dtype=int),
        groups={k: np.asarray(v, dtype=object) for k, v in (groups or {}).items()},
    )


def reweighted(data: SurveyDataset, weights) -> SurveyDataset:
    return SurveyDataset(data.questions, data.values, weights, data.years, data.groups)


def permuted(m: SymMatrix, order) -> SymMatrix:
    idx = np.asarray(order)
    return SymMatrix(m.entries[np.ix_(idx, idx)])
