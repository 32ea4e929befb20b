# spectral/exceptions.py
"""Jerarquía de errores del paquete.

Las subclases de ``InputValidationError`` señalan entradas inválidas (código de
salida 1 en la CLI); las de ``ComputationError`` fallos en tiempo de ejecución
(código de salida 2).
"""
from typing import Optional


class SpectralError(Exception):
    exit_code = 2


class InputValidationError(SpectralError):
    exit_code = 1


class ComputationError(SpectralError):
    exit_code = 2


# ---- Validación de entradas ----

class AsymmetryError(InputValidationError):
    pass


class NonFiniteError(InputValidationError):
    pass


class SchemaMismatchError(InputValidationError):
    pass


class SchemaValidationError(InputValidationError):
    def __init__(self, message: str, errors=None):
        super().__init__(message)
        self.errors = errors or {}


class EmptyDatasetError(InputValidationError):
    pass


class UnknownGroupVariableError(InputValidationError):
    pass


class ParseError(InputValidationError):
    def __init__(self, message: str, line: Optional[int] = None, column: Optional[str] = None):
        location = []
        if line is not None:
            location.append(f"línea {line}")
        if column is not None:
            location.append(f"columna {column}")
        super().__init__(f"{message} ({', '.join(location)})" if location else message)
        self.line = line
        self.column = column


class MissingWeightError(InputValidationError):
    def __init__(self, message: str, row: Optional[int] = None):
        super().__init__(message)
        self.row = row


class NonPSDError(InputValidationError):
    pass


class NonPSDGammaError(NonPSDError):
    pass


class PreconditionError(InputValidationError):
    pass


class EmptySeriesError(InputValidationError):
    pass


# ---- Errores de cómputo ----

class ConvergenceError(ComputationError):
    pass


class ZeroVarianceError(ComputationError):
    def __init__(self, message: str, rho: float = 0.0):
        super().__init__(message)
        self.rho = rho


class DegenerateWeightsError(ComputationError):
    pass


class FailureRateError(ComputationError):
    def __init__(self, message: str, failed: int = 0, total: int = 0):
        super().__init__(message)
        self.failed = failed
        self.total = total


class AllGroupsDroppedError(ComputationError):
    pass


class IoError(ComputationError):
    pass


class BinError(SpectralError):
    """Envuelve un error ocurrido al procesar un bin y antepone su etiqueta."""

    def __init__(self, bin_label: str, error: SpectralError):
        super().__init__(f"[{bin_label}] {error}")
        self.bin_label = bin_label
        self.error = error
        self.exit_code = error.exit_code
