# spectral/services/latent.py
"""Modelo latente unidimensional x = β y + e.

Covarianza poblacional, muestreo y verificación numérica de la monotonía de
ρ(a ββᵀ + Γ) en ``a`` (y de su versión general para actualizaciones de rango uno).
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np

from ..exceptions import NonPSDError, NonPSDGammaError, PreconditionError, SchemaValidationError
from .dataset import SurveyDataset
from .symmat import (
    NormKind, SymMatrix, eigen_decomposition, eigenvalues, matrix_norm, outer, spectral_radius,
)

logger = logging.getLogger(__name__)

PSD_TOLERANCE = 1e-9
DECREASE_TOLERANCE = 1e-9
STRICTNESS_TOLERANCE = 1e-12
PROJECTION_THRESHOLD = 1e-8
CLUSTER_TOLERANCE = 1e-8

_UNIT_UNIFORM_HALF_WIDTH = np.sqrt(3.0)


class YDistribution(str, Enum):
    NORMAL = "normal"
    RADEMACHER = "rademacher"
    UNIFORM = "uniform"


class EDistribution(str, Enum):
    NORMAL = "normal"
    UNIFORM = "uniform"


@dataclass(frozen=True, eq=False)
class LatentModel:
    a: float
    beta: np.ndarray
    gamma: SymMatrix
    y_dist: YDistribution = YDistribution.NORMAL
    e_dist: EDistribution = EDistribution.NORMAL

    def __post_init__(self):
        beta = np.array(self.beta, dtype=float, ndmin=1, copy=True)
        if not self.a > 0 or not np.isfinite(self.a):
            raise SchemaValidationError(f"a debe ser positivo y finito, se recibió {self.a}")
        if beta.ndim != 1 or beta.shape[0] != self.gamma.dim:
            raise SchemaValidationError(
                f"beta tiene longitud {beta.shape} pero gamma es {self.gamma.dim}×{self.gamma.dim}"
            )
        beta.setflags(write=False)
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "y_dist", YDistribution(self.y_dist))
        object.__setattr__(self, "e_dist", EDistribution(self.e_dist))

    @property
    def p(self) -> int:
        return self.gamma.dim

    def with_a(self, a: float) -> "LatentModel":
        return LatentModel(a, self.beta, self.gamma, self.y_dist, self.e_dist)

    def to_dict(self) -> dict:
        return {
            "a": self.a,
            "beta": self.beta.tolist(),
            "gamma": self.gamma.to_list(),
            "y_dist": self.y_dist.value,
            "e_dist": self.e_dist.value,
        }


@dataclass
class MonotonicityReport:
    a_grid: List[float]
    rho_values: List[float]
    violations: int
    strict_region_verified: bool
    strict_steps: int = 0
    strict_failures: int = 0
    notes: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.violations == 0 and self.strict_region_verified

    def to_dict(self) -> dict:
        return {
            "a_grid": list(self.a_grid),
            "rho_values": list(self.rho_values),
            "violations": self.violations,
            "strict_region_verified": self.strict_region_verified,
            "strict_steps": self.strict_steps,
            "strict_failures": self.strict_failures,
            "notes": list(self.notes),
            "passed": self.passed,
        }


def population_covariance(model: LatentModel) -> SymMatrix:
    return outer(model.beta, model.a) + model.gamma


def _require_psd(m: SymMatrix, error_cls, label: str):
    lam_min = eigenvalues(m).smallest
    if lam_min < -PSD_TOLERANCE:
        raise error_cls(f"{label} no es semidefinida positiva (λ_min = {lam_min:.3e})")


def _matrix_sqrt(m: SymMatrix) -> np.ndarray:
    lam, vecs = eigen_decomposition(m)
    return (vecs * np.sqrt(np.clip(lam, 0.0, None))) @ vecs.T


def draw_unit_latent(rng: np.random.Generator, dist: YDistribution, n: int) -> np.ndarray:
    if dist is YDistribution.RADEMACHER:
        return rng.choice(np.array([-1.0, 1.0]), size=n)
    if dist is YDistribution.UNIFORM:
        return rng.uniform(-_UNIT_UNIFORM_HALF_WIDTH, _UNIT_UNIFORM_HALF_WIDTH, size=n)
    return rng.standard_normal(n)


def _draw_noise(rng: np.random.Generator, dist: EDistribution, shape) -> np.ndarray:
    if dist is EDistribution.UNIFORM:
        return rng.uniform(-_UNIT_UNIFORM_HALF_WIDTH, _UNIT_UNIFORM_HALF_WIDTH, size=shape)
    return rng.standard_normal(shape)


def draw_responses(model: LatentModel, n: int, rng: np.random.Generator) -> np.ndarray:
    """n×p respuestas continuas con Var(y) = a y Var(e) = Γ."""
    y = np.sqrt(model.a) * draw_unit_latent(rng, model.y_dist, n)
    e = _draw_noise(rng, model.e_dist, (n, model.p)) @ _matrix_sqrt(model.gamma)
    return np.outer(y, model.beta) + e


def sample(model: LatentModel, n: int, seed) -> SurveyDataset:
    if n < 1:
        raise PreconditionError("n debe ser al menos 1")
    _require_psd(model.gamma, NonPSDGammaError, "Γ")
    rng = np.random.default_rng(seed)
    values = draw_responses(model, n, rng)
    return SurveyDataset(
        questions=[f"x{j + 1}" for j in range(model.p)],
        values=values,
        weights=np.ones(n),
        years=np.zeros(n, dtype=int),
    )


def _check_grid(grid: Sequence[float], positive: bool) -> np.ndarray:
    arr = np.asarray(list(grid), dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise PreconditionError("La grilla debe ser una lista no vacía")
    if np.any(np.diff(arr) <= 0):
        raise PreconditionError("La grilla debe ser estrictamente ascendente")
    if positive and np.any(arr <= 0):
        raise PreconditionError("La grilla de a debe ser positiva")
    if not positive and np.any(arr < 0):
        raise PreconditionError("La grilla de c debe ser no negativa")
    return arr


def _count_decreases(values: np.ndarray) -> int:
    return int(np.sum(np.diff(values) < -DECREASE_TOLERANCE))


def rank_one_monotonicity(D: SymMatrix, v: Sequence[float], c_grid: Sequence[float]) -> MonotonicityReport:
    _require_psd(D, NonPSDError, "D")
    grid = _check_grid(c_grid, positive=False)
    update = outer(v)
    rhos = np.array([spectral_radius(update.scaled(c) + D) for c in grid])
    violations = _count_decreases(rhos)
    if violations:
        logger.warning(f"ρ(c vvᵀ + D) decreció en {violations} pasos de la grilla")
    return MonotonicityReport(
        a_grid=grid.tolist(),
        rho_values=rhos.tolist(),
        violations=violations,
        strict_region_verified=True,
    )


def principal_projection_norm(gamma: SymMatrix, beta: Sequence[float]) -> float:
    """‖P₁β‖, con P₁ el proyector sobre el autoespacio de λ₁(Γ)."""
    values, vectors = eigen_decomposition(gamma)
    top = float(np.max(values))
    scale = abs(top)
    in_cluster = values >= top - CLUSTER_TOLERANCE * scale
    basis = vectors[:, in_cluster]
    return float(np.linalg.norm(basis.T @ np.asarray(beta, dtype=float)))


def strict_increase_check(model: LatentModel, a_grid: Sequence[float]) -> MonotonicityReport:
    grid = _check_grid(a_grid, positive=True)
    gamma_norm = matrix_norm(model.gamma, NormKind.SPECTRAL)
    beta_nonzero = bool(np.any(model.beta != 0))
    projects = beta_nonzero and principal_projection_norm(model.gamma, model.beta) > PROJECTION_THRESHOLD

    rhos = np.array([spectral_radius(population_covariance(model.with_a(a))) for a in grid])
    diffs = np.diff(rhos)
    strict_steps = 0
    strict_failures = 0
    notes = []
    for i, diff in enumerate(diffs):
        above_gamma = beta_nonzero and grid[i] > gamma_norm
        if not (above_gamma or projects):
            continue
        strict_steps += 1
        if not diff > STRICTNESS_TOLERANCE * max(1.0, rhos[i + 1]):
            strict_failures += 1
            notes.append(f"sin aumento estricto entre a={grid[i]:g} y a={grid[i + 1]:g}")

    violations = _count_decreases(rhos)
    if violations or strict_failures:
        logger.warning(
            f"Monotonía fallida: {violations} decrecimientos, {strict_failures} fallas de estrictez"
        )
    return MonotonicityReport(
        a_grid=grid.tolist(),
        rho_values=rhos.tolist(),
        violations=violations,
        strict_region_verified=strict_failures == 0,
        strict_steps=strict_steps,
        strict_failures=strict_failures,
        notes=notes,
    )


# ---- Generadores aleatorios para las pruebas difusas ----

def random_psd(rng: np.random.Generator, p: int, rank: Optional[int] = None) -> SymMatrix:
    k = p if rank is None else rank
    factor = rng.standard_normal((p, k))
    product = factor @ factor.T
    return SymMatrix((product + product.T) / 2.0)


def rank_one_fuzz(cases: int, seed: int, p_max: int = 6, grid_points: int = 50) -> dict:
    """Casos aleatorios (D PSD, v, grilla c) del lema de actualización de rango uno."""
    failures = []
    for case in range(cases):
        rng = np.random.default_rng([seed, case])
        p = int(rng.integers(1, p_max + 1))
        rank = int(rng.integers(0, p + 1))
        D = random_psd(rng, p, rank)
        v = rng.standard_normal(p)
        c_grid = np.sort(rng.uniform(0.0, 5.0, size=grid_points))
        report = rank_one_monotonicity(D, v, c_grid)
        if report.violations:
            failures.append(case)
    return {"cases": cases, "seed": seed, "failed_cases": failures, "violations": len(failures)}


def strict_increase_fuzz(cases: int, seed: int, p_max: int = 6, grid_points: int = 20) -> dict:
    """Modelos aleatorios con la grilla de a por encima de ‖Γ‖₂: se exige aumento estricto."""
    failures = []
    for case in range(cases):
        rng = np.random.default_rng([seed, case])
        p = int(rng.integers(1, p_max + 1))
        gamma = random_psd(rng, p)
        beta = rng.standard_normal(p)
        model = LatentModel(a=1.0, beta=beta, gamma=gamma)
        gamma_norm = matrix_norm(gamma, NormKind.SPECTRAL)
        a_grid = gamma_norm * (1.0 + np.linspace(0.05, 3.0, grid_points)) + 1e-3
        report = strict_increase_check(model, a_grid)
        if not report.passed:
            failures.append(case)
    return {"cases": cases, "seed": seed, "failed_cases": failures, "violations": len(failures)}
