# spectral/services/estimate.py
"""Estimación ponderada de la covarianza por pares completos, índice ρ̂ y bootstrap."""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Union

import numpy as np

from ..exceptions import (
    DegenerateWeightsError, EmptyDatasetError, FailureRateError, NonPSDError, PreconditionError,
    SpectralError, ZeroVarianceError,
)
from .dataset import SurveyDataset
from .latent import LatentModel, draw_responses, population_covariance
from .symmat import NormKind, Spectrum, SymMatrix, eigenvalues, norm_from_spectrum, trace

logger = logging.getLogger(__name__)

MIN_PAIRS = 2
DEFAULT_MAX_FAILURE_RATE = 0.01


@dataclass(frozen=True, eq=False)
class PairwiseMoments:
    """Momentos ponderados por par (j, k) sobre S_jk, el conjunto de filas con j y k presentes.

    ``wsum[j, k]`` = Σ w, ``first[j, k]`` = Σ w x_j, ``cross[j, k]`` = Σ w x_j x_k y
    ``count[j, k]`` = |S_jk|.
    """

    wsum: np.ndarray
    first: np.ndarray
    cross: np.ndarray
    count: np.ndarray

    @classmethod
    def from_arrays(cls, values: np.ndarray, weights: np.ndarray) -> "PairwiseMoments":
        present = ~np.isnan(values)
        mask = present.astype(float)
        x0 = np.where(present, values, 0.0)
        wx = x0 * weights[:, None]
        return cls(
            wsum=mask.T @ (mask * weights[:, None]),
            first=wx.T @ mask,
            cross=wx.T @ x0,
            count=(mask.T @ mask).round().astype(int),
        )

    def means(self):
        """(m_j^{jk}, m_k^{jk}) como matrices p×p; cero donde S_jk está vacío."""
        with np.errstate(invalid="ignore", divide="ignore"):
            row = np.where(self.wsum > 0, self.first / self.wsum, 0.0)
        return row, row.T

    def covariance(self) -> np.ndarray:
        # Σ w (x_j - m_j)(x_k - m_k) / Σ w  ==  cross/wsum - m_j m_k  sobre S_jk
        m_j, m_k = self.means()
        with np.errstate(invalid="ignore", divide="ignore"):
            cov = np.where(self.wsum > 0, self.cross / self.wsum, 0.0) - m_j * m_k
        cov = (cov + cov.T) / 2.0
        np.fill_diagonal(cov, np.maximum(np.diag(cov), 0.0))
        return cov


@dataclass(frozen=True, eq=False)
class CovarianceEstimate:
    sigma: SymMatrix
    pair_n: np.ndarray
    pair_wsum: np.ndarray
    kish_n_eff: float
    lambda_min: float
    spectrum: Spectrum
    insufficient: np.ndarray

    @property
    def has_insufficient_pairs(self) -> bool:
        return bool(self.insufficient.any())

    def diagnostics(self, questions: Optional[Sequence[str]] = None) -> dict:
        pairs = np.argwhere(np.triu(self.insufficient))
        names = list(questions) if questions is not None else None
        return {
            "lambda_min": self.lambda_min,
            "non_psd": self.lambda_min < 0,
            "kish_n_eff": self.kish_n_eff,
            "insufficient_pairs": [
                [names[j], names[k]] if names else [int(j), int(k)] for j, k in pairs
            ],
        }


@dataclass(frozen=True)
class PolarizationIndex:
    rho: float
    trace: float
    concentration: float
    spectrum: Spectrum
    norm_spectral: float
    norm_frobenius: float
    norm_nuclear: float

    def norm(self, kind: NormKind) -> float:
        return {
            NormKind.SPECTRAL: self.norm_spectral,
            NormKind.FROBENIUS: self.norm_frobenius,
            NormKind.NUCLEAR: self.norm_nuclear,
        }[NormKind(kind)]

    def to_dict(self) -> dict:
        return {
            "rho": self.rho,
            "trace": self.trace,
            "concentration": self.concentration,
            "eigenvalues": list(self.spectrum.values),
            "norm_spectral": self.norm_spectral,
            "norm_frobenius": self.norm_frobenius,
            "norm_nuclear": self.norm_nuclear,
        }


@dataclass
class BootstrapResult:
    point: float
    replicates: List[float]
    ci_low: float
    ci_high: float
    seed: int
    B: int
    level: float
    failed: List[int] = field(default_factory=list)

    @property
    def standard_error(self) -> float:
        return float(np.std(self.replicates, ddof=1)) if len(self.replicates) > 1 else 0.0

    def to_dict(self) -> dict:
        return {
            "point": self.point,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "standard_error": self.standard_error,
            "seed": self.seed,
            "B": self.B,
            "level": self.level,
            "failed": list(self.failed),
            "replicates": list(self.replicates),
        }


def kish_effective_n(weights: np.ndarray) -> float:
    total = float(np.sum(weights))
    squares = float(np.sum(weights ** 2))
    return total * total / squares if squares > 0 else 0.0


def pairwise_covariance(data: SurveyDataset) -> CovarianceEstimate:
    if data.n == 0 or data.p == 0:
        raise EmptyDatasetError(f"Conjunto vacío (n={data.n}, p={data.p})")
    if data.n < 2:
        raise PreconditionError("La estimación de la covarianza requiere al menos 2 respondentes")

    moments = PairwiseMoments.from_arrays(data.values, data.weights)
    if np.any((moments.count > 0) & (moments.wsum <= 0)):
        raise DegenerateWeightsError("Pesos con suma nula sobre un conjunto de pares no vacío")

    insufficient = moments.count < MIN_PAIRS
    cov = np.where(insufficient, 0.0, moments.covariance())
    if insufficient.any():
        logger.warning(f"{int(np.triu(insufficient).sum())} entradas con menos de {MIN_PAIRS} pares completos")

    sigma = SymMatrix(cov)
    spectrum = eigenvalues(sigma)
    if spectrum.smallest < 0:
        logger.debug(f"Estimación no PSD: λ_min = {spectrum.smallest:.3e}")
    return CovarianceEstimate(
        sigma=sigma,
        pair_n=moments.count,
        pair_wsum=moments.wsum,
        kish_n_eff=kish_effective_n(data.weights),
        lambda_min=spectrum.smallest,
        spectrum=spectrum,
        insufficient=insufficient,
    )


def index_from_spectrum(spectrum: Spectrum, total: float) -> PolarizationIndex:
    rho = spectrum.largest
    if total <= 0:
        raise ZeroVarianceError("Traza nula: la concentración espectral no está definida", rho=max(rho, 0.0))
    return PolarizationIndex(
        rho=rho,
        trace=total,
        concentration=rho / total,
        spectrum=spectrum,
        norm_spectral=norm_from_spectrum(spectrum, NormKind.SPECTRAL),
        norm_frobenius=norm_from_spectrum(spectrum, NormKind.FROBENIUS),
        norm_nuclear=norm_from_spectrum(spectrum, NormKind.NUCLEAR),
    )


def polarization_index(cov: CovarianceEstimate) -> PolarizationIndex:
    return index_from_spectrum(cov.spectrum, trace(cov.sigma))


def run_replicates(fn: Callable[[int], object], count: int, workers: int = 1) -> list:
    """Ejecuta ``fn(r)`` para r = 0..count-1; el orden del resultado no depende de ``workers``."""
    if workers <= 1 or count <= 1:
        return [fn(r) for r in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(count)))


def replicate_rng(seed: int, *stream) -> np.random.Generator:
    return np.random.default_rng([int(seed), *[int(s) for s in stream]])


def percentile_interval(sorted_values: np.ndarray, level: float):
    count = len(sorted_values)
    lo = int(math.floor((1.0 - level) / 2.0 * count))
    hi = int(math.ceil((1.0 + level) / 2.0 * count)) - 1
    lo = min(max(lo, 0), count - 1)
    hi = min(max(hi, lo), count - 1)
    return float(sorted_values[lo]), float(sorted_values[hi])


def bootstrap_rho(
    data: SurveyDataset,
    B: int,
    level: float,
    seed: int,
    workers: int = 1,
    max_failure_rate: float = DEFAULT_MAX_FAILURE_RATE,
) -> BootstrapResult:
    """Bootstrap por percentiles remuestreando respondentes (con sus pesos)."""
    if B < 1:
        raise PreconditionError("B debe ser al menos 1")
    if not 0 < level < 1:
        raise PreconditionError("level debe estar en (0, 1)")
    if data.n < 2:
        raise PreconditionError("El bootstrap requiere al menos 2 respondentes")

    point = pairwise_covariance(data).spectrum.largest

    def replicate(r: int) -> Optional[float]:
        rows = replicate_rng(seed, r).integers(0, data.n, size=data.n)
        try:
            return pairwise_covariance(data.take(rows)).spectrum.largest
        except SpectralError as e:
            logger.error(f"Réplica bootstrap {r} fallida: {e}")
            return None

    outcomes = run_replicates(replicate, B, workers)
    failed = [r for r, value in enumerate(outcomes) if value is None]
    if len(failed) > max_failure_rate * B:
        raise FailureRateError(
            f"{len(failed)} de {B} réplicas fallaron (máximo {max_failure_rate:.1%})",
            failed=len(failed), total=B,
        )
    replicates = [value for value in outcomes if value is not None]
    ci_low, ci_high = percentile_interval(np.sort(np.asarray(replicates)), level)
    return BootstrapResult(
        point=point, replicates=replicates, ci_low=ci_low, ci_high=ci_high,
        seed=int(seed), B=B, level=level, failed=failed,
    )


# ---- Verificación Monte Carlo de las propiedades asintóticas ----

Population = Union[SymMatrix, LatentModel]


def _as_model(population: Population) -> LatentModel:
    if isinstance(population, LatentModel):
        return population
    if eigenvalues(population).smallest < -1e-9:
        raise NonPSDError("La covarianza poblacional no es semidefinida positiva")
    return LatentModel(a=1.0, beta=np.zeros(population.dim), gamma=population)


def _sample_rho_spectrum(model: LatentModel, n: int, rng: np.random.Generator) -> np.ndarray:
    values = draw_responses(model, n, rng)
    data = SurveyDataset(
        questions=[f"x{j + 1}" for j in range(model.p)],
        values=values,
        weights=np.ones(n),
        years=np.zeros(n, dtype=int),
    )
    return pairwise_covariance(data).spectrum.as_array()


@dataclass
class ConsistencyRow:
    n: int
    trials: int
    mean_abs_error: float
    mean_estimate: float

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "trials": self.trials,
            "mean_abs_error": self.mean_abs_error,
            "mean_estimate": self.mean_estimate,
        }


@dataclass
class ConsistencyTable:
    population_rho: float
    rows: List[ConsistencyRow]

    @property
    def errors(self) -> List[float]:
        return [row.mean_abs_error for row in self.rows]

    @property
    def strictly_decreasing(self) -> bool:
        errors = self.errors
        return all(b < a for a, b in zip(errors, errors[1:]))

    def to_dict(self) -> dict:
        return {
            "population_rho": self.population_rho,
            "rows": [row.to_dict() for row in self.rows],
            "strictly_decreasing": self.strictly_decreasing,
        }


def consistency_check(
    population: Population,
    n_grid: Sequence[int],
    trials: int,
    seed: int,
    workers: int = 1,
) -> ConsistencyTable:
    """Error medio |λ̂₁ - λ₁| por tamaño muestral.

    ``population`` es una covarianza (muestreo normal) o un ``LatentModel``
    (permite y no normal, p. ej. rademacher).
    """
    model = _as_model(population)
    rho = eigenvalues(population_covariance(model)).largest
    rows = []
    if trials <= 0:
        return ConsistencyTable(population_rho=rho, rows=rows)

    for i, n in enumerate(n_grid):
        estimates = np.array(run_replicates(
            lambda t: _sample_rho_spectrum(model, int(n), replicate_rng(seed, i, t))[0],
            trials, workers,
        ))
        rows.append(ConsistencyRow(
            n=int(n),
            trials=trials,
            mean_abs_error=float(np.mean(np.abs(estimates - rho))),
            mean_estimate=float(np.mean(estimates)),
        ))
        logger.info(f"Consistencia n={n}: error medio {rows[-1].mean_abs_error:.4f}")
    return ConsistencyTable(population_rho=rho, rows=rows)


@dataclass
class NormalityReport:
    n: int
    trials: int
    eigenvalues: List[float]
    empirical_variance: List[float]
    expected_variance: List[float]

    @property
    def relative_errors(self) -> List[float]:
        return [abs(e - x) / x for e, x in zip(self.empirical_variance, self.expected_variance)]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "trials": self.trials,
            "eigenvalues": self.eigenvalues,
            "empirical_variance": self.empirical_variance,
            "expected_variance": self.expected_variance,
            "relative_errors": self.relative_errors,
        }


def normality_check(pop_sigma: SymMatrix, n: int, trials: int, seed: int, workers: int = 1) -> NormalityReport:
    """Varianza empírica de √n(λ̂ᵢ - λᵢ) frente a 2λᵢ² (caso normal)."""
    lam = eigenvalues(pop_sigma).as_array()
    if lam[-1] < -1e-9:
        raise NonPSDError("La covarianza poblacional no es semidefinida positiva")
    gaps = -np.diff(lam)
    if np.any(gaps <= 1e-8 * max(1.0, lam[0])):
        raise PreconditionError("normality_check requiere autovalores distintos")
    if trials < 2:
        raise PreconditionError("Se requieren al menos 2 ensayos")

    model = _as_model(pop_sigma)
    draws = np.array(run_replicates(
        lambda t: _sample_rho_spectrum(model, n, replicate_rng(seed, t)),
        trials, workers,
    ))
    scaled = np.sqrt(n) * (draws - lam)
    return NormalityReport(
        n=n,
        trials=trials,
        eigenvalues=lam.tolist(),
        empirical_variance=np.var(scaled, axis=0, ddof=1).tolist(),
        expected_variance=(2.0 * lam ** 2).tolist(),
    )
