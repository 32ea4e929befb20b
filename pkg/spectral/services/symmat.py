# spectral/services/symmat.py
"""Núcleo de matrices simétricas densas: construcción, autovalores y normas."""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence, Tuple

import numpy as np

from ..exceptions import AsymmetryError, ConvergenceError, NonFiniteError, PreconditionError

logger = logging.getLogger(__name__)

MAX_SWEEPS = 100
OFF_DIAGONAL_TOLERANCE = 1e-12


class NormKind(str, Enum):
    SPECTRAL = "spectral"
    FROBENIUS = "frobenius"
    NUCLEAR = "nuclear"


@dataclass(frozen=True, eq=False)
class SymMatrix:
    """Matriz simétrica p×p, inmutable (el arreglo interno es de solo lectura)."""

    entries: np.ndarray

    def __post_init__(self):
        arr = np.array(self.entries, dtype=float, copy=True)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
            raise PreconditionError(f"Se esperaba una matriz cuadrada no vacía, forma {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise NonFiniteError("La matriz contiene valores NaN/inf")
        if not np.array_equal(arr, arr.T):
            raise AsymmetryError("La matriz no es exactamente simétrica; use make_sym")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __add__(self, other: "SymMatrix") -> "SymMatrix":
        return SymMatrix(self.entries + other.entries)

    def __sub__(self, other: "SymMatrix") -> "SymMatrix":
        return SymMatrix(self.entries - other.entries)

    def scaled(self, alpha: float) -> "SymMatrix":
        return SymMatrix(alpha * self.entries)

    def to_list(self) -> list:
        return self.entries.tolist()

    def __repr__(self):
        return f"SymMatrix({self.entries.tolist()})"


@dataclass(frozen=True)
class Spectrum:
    """Autovalores en orden descendente."""

    values: Tuple[float, ...]

    @property
    def largest(self) -> float:
        return self.values[0]

    @property
    def smallest(self) -> float:
        return self.values[-1]

    def __len__(self):
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


def make_sym(raw, tol: float = 0.0) -> SymMatrix:
    """Valida la simetría de ``raw`` dentro de ``tol`` relativo y devuelve (raw + rawᵀ)/2."""
    if tol < 0:
        raise PreconditionError("tol debe ser no negativo")
    arr = np.array(raw, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise PreconditionError(f"Se esperaba una matriz cuadrada no vacía, forma {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError("La matriz contiene valores NaN/inf")

    gap = float(np.max(np.abs(arr - arr.T)))
    bound = tol * max(1.0, float(np.max(np.abs(arr))))
    if gap > bound:
        raise AsymmetryError(f"Asimetría {gap:.3e} supera la tolerancia {bound:.3e}")
    return SymMatrix((arr + arr.T) / 2.0)


def identity(p: int) -> SymMatrix:
    return SymMatrix(np.eye(p))


def diag(values: Iterable[float]) -> SymMatrix:
    return SymMatrix(np.diag(np.asarray(list(values), dtype=float)))


def outer(v: Sequence[float], c: float = 1.0) -> SymMatrix:
    """c·v vᵀ."""
    vec = np.asarray(v, dtype=float)
    return SymMatrix(c * np.outer(vec, vec))


def _off_norm(a: np.ndarray) -> float:
    return float(np.sqrt(2.0 * np.sum(np.triu(a, 1) ** 2)))


def _jacobi(a: np.ndarray, accumulate: bool = False):
    """Método cíclico de Jacobi.

    Devuelve la diagonal final (autovalores sin ordenar) y, si ``accumulate``,
    la matriz ortogonal cuyas columnas son los autovectores correspondientes.
    """
    a = np.array(a, dtype=float, copy=True)
    p = a.shape[0]
    v = np.eye(p) if accumulate else None
    tol = OFF_DIAGONAL_TOLERANCE * float(np.linalg.norm(a))

    for sweep in range(MAX_SWEEPS + 1):
        if _off_norm(a) <= tol:
            return np.diag(a).copy(), v
        if sweep == MAX_SWEEPS:
            break
        for i in range(p - 1):
            for j in range(i + 1, p):
                apq = a[i, j]
                if apq == 0.0:
                    continue
                theta = (a[j, j] - a[i, i]) / (2.0 * apq)
                t = np.copysign(1.0, theta) / (abs(theta) + np.hypot(theta, 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c

                col_i = a[:, i].copy()
                a[:, i] = c * col_i - s * a[:, j]
                a[:, j] = s * col_i + c * a[:, j]
                row_i = a[i, :].copy()
                a[i, :] = c * row_i - s * a[j, :]
                a[j, :] = s * row_i + c * a[j, :]
                a[i, j] = a[j, i] = 0.0

                if v is not None:
                    vi = v[:, i].copy()
                    v[:, i] = c * vi - s * v[:, j]
                    v[:, j] = s * vi + c * v[:, j]

    logger.error(f"Jacobi no convergió en {MAX_SWEEPS} barridos (p={p}, off={_off_norm(a):.3e})")
    raise ConvergenceError(f"Jacobi no convergió en {MAX_SWEEPS} barridos")


def eigenvalues(m: SymMatrix) -> Spectrum:
    values, _ = _jacobi(m.entries)
    return Spectrum(tuple(float(x) for x in np.sort(values)[::-1]))


def eigen_decomposition(m: SymMatrix) -> Tuple[np.ndarray, np.ndarray]:
    """Autovalores en orden descendente y autovectores por columna."""
    values, vectors = _jacobi(m.entries, accumulate=True)
    order = np.argsort(values)[::-1]
    return values[order], vectors[:, order]


def spectral_radius(m: SymMatrix) -> float:
    # Mayor autovalor (no el mayor en valor absoluto)
    return eigenvalues(m).largest


def norm_from_spectrum(spectrum: Spectrum, kind: NormKind) -> float:
    lam = spectrum.as_array()
    kind = NormKind(kind)
    if kind is NormKind.SPECTRAL:
        return float(np.max(np.abs(lam)))
    if kind is NormKind.FROBENIUS:
        return float(np.sqrt(np.sum(lam ** 2)))
    return float(np.sum(np.abs(lam)))


def matrix_norm(m: SymMatrix, kind: NormKind) -> float:
    return norm_from_spectrum(eigenvalues(m), kind)


def trace(m: SymMatrix) -> float:
    return float(np.trace(m.entries))
