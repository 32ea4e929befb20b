# spectral/services/decompose.py
"""Descomposiciones de ρ: traza × concentración espectral y dentro/entre grupos."""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import AllGroupsDroppedError, EmptySeriesError, PreconditionError, ZeroVarianceError
from .dataset import SurveyDataset
from .estimate import PairwiseMoments, pairwise_covariance
from .symmat import SymMatrix, spectral_radius, trace

logger = logging.getLogger(__name__)

DEFAULT_MIN_CELL = 2


@dataclass(frozen=True)
class TraceConcentrationChange:
    ratio_observed: float
    ratio_variance_only: float
    ratio_concentration_only: float

    def to_dict(self) -> dict:
        return {
            "ratio_observed": self.ratio_observed,
            "ratio_variance_only": self.ratio_variance_only,
            "ratio_concentration_only": self.ratio_concentration_only,
        }


@dataclass(frozen=True, eq=False)
class GroupDecomposition:
    group_var: str
    group_labels: List[str]
    shares: List[float]
    means: List[List[float]]
    sigmas: List[SymMatrix]
    adjusted_sigmas: List[SymMatrix]
    group_rho: List[float]
    sigma_within: SymMatrix
    sigma_between: SymMatrix
    pooled_sigma: SymMatrix
    pooled_rho: float
    pooled_rho_all_rows: float
    rho_within: float
    rho_between: float
    slack_b: float
    slack_w: float
    dropped_weight_share: float
    dropped_groups: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "group_var": self.group_var,
            "group_labels": list(self.group_labels),
            "shares": list(self.shares),
            "means": [list(m) for m in self.means],
            "group_rho": list(self.group_rho),
            "sigmas": [s.to_list() for s in self.sigmas],
            "sigma_within": self.sigma_within.to_list(),
            "sigma_between": self.sigma_between.to_list(),
            "pooled_rho": self.pooled_rho,
            "pooled_rho_all_rows": self.pooled_rho_all_rows,
            "rho_within": self.rho_within,
            "rho_between": self.rho_between,
            "slack_b": self.slack_b,
            "slack_w": self.slack_w,
            "dropped_weight_share": self.dropped_weight_share,
            "dropped_groups": list(self.dropped_groups),
        }


@dataclass
class CounterfactualSeries:
    """Serie observada y contrafactuales con un componente fijo en el bin base.

    Variante ``group``: ``within_only``/``between_only`` (se suman).
    Variante ``trace``: ``variance_only``/``concentration_only`` (se multiplican).
    """

    kind: str
    bins: List[str]
    observed: List[float]
    baseline: str
    within_only: Optional[List[float]] = None
    between_only: Optional[List[float]] = None
    variance_only: Optional[List[float]] = None
    concentration_only: Optional[List[float]] = None
    group_var: Optional[str] = None

    def components(self) -> Dict[str, List[float]]:
        if self.kind == "group":
            return {"within_only": self.within_only, "between_only": self.between_only}
        return {"variance_only": self.variance_only, "concentration_only": self.concentration_only}

    def to_dict(self) -> dict:
        data = {
            "kind": self.kind,
            "bins": list(self.bins),
            "baseline": self.baseline,
            "observed": list(self.observed),
        }
        if self.group_var is not None:
            data["group_var"] = self.group_var
        data.update({name: list(values) for name, values in self.components().items()})
        return data


# ---- Traza × concentración ----

def trace_concentration(sigma: SymMatrix) -> Tuple[float, float, float]:
    total = trace(sigma)
    rho = spectral_radius(sigma)
    if total <= 0:
        raise ZeroVarianceError("Traza nula: la concentración espectral no está definida", rho=max(rho, 0.0))
    return total, rho / total, rho


def trace_concentration_change(sigma0: SymMatrix, sigmat: SymMatrix) -> TraceConcentrationChange:
    tr0, conc0, rho0 = trace_concentration(sigma0)
    trt, conct, rhot = trace_concentration(sigmat)
    return TraceConcentrationChange(
        ratio_observed=rhot / rho0,
        ratio_variance_only=trt / tr0,
        ratio_concentration_only=conct / conc0,
    )


# ---- Dentro / entre grupos ----

def _is_absent(label) -> bool:
    if label is None:
        return True
    if isinstance(label, float) and np.isnan(label):
        return True
    return isinstance(label, str) and not label.strip()


def _symmetric(a: np.ndarray) -> SymMatrix:
    return SymMatrix((a + a.T) / 2.0)


def group_decompose(data: SurveyDataset, group_var: str, min_cell: int = DEFAULT_MIN_CELL) -> GroupDecomposition:
    """Σ = Σ_w + Σ_b entrada a entrada sobre los mismos conjuntos de pares S_jk."""
    raw_labels = data.group_labels(group_var)
    labels = np.array([None if _is_absent(x) else str(x) for x in raw_labels], dtype=object)
    present = np.array([x is not None for x in labels], dtype=bool)

    counts: Dict[str, int] = {}
    for label in labels[present]:
        counts[label] = counts.get(label, 0) + 1
    kept = sorted(label for label, count in counts.items() if count >= min_cell)
    dropped = sorted(label for label, count in counts.items() if count < min_cell)
    if not kept:
        raise AllGroupsDroppedError(
            f"Ningún grupo de {group_var} alcanza min_cell={min_cell} respondentes"
        )

    survivors = present & np.isin(labels, kept)
    total_weight = float(np.sum(data.weights))
    dropped_share = 1.0 - float(np.sum(data.weights[survivors])) / total_weight if total_weight > 0 else 0.0
    if dropped or not survivors.all():
        logger.info(
            f"{group_var}: grupos descartados {dropped or '[]'}, "
            f"peso descartado {dropped_share:.3%}"
        )

    pooled_all = pairwise_covariance(data)
    sub = data.take(np.flatnonzero(survivors))
    pooled_est = pairwise_covariance(sub)
    pooled = PairwiseMoments.from_arrays(sub.values, sub.weights)
    sub_labels = labels[survivors]
    pooled_mean_j, pooled_mean_k = pooled.means()
    survivor_weight = float(np.sum(sub.weights))

    within = np.zeros_like(pooled.wsum)
    between = np.zeros_like(pooled.wsum)
    shares, means, sigmas, adjusted, group_rho = [], [], [], [], []
    for label in kept:
        rows = sub_labels == label
        moments = PairwiseMoments.from_arrays(sub.values[rows], sub.weights[rows])
        with np.errstate(invalid="ignore", divide="ignore"):
            pair_share = np.where(pooled.wsum > 0, moments.wsum / pooled.wsum, 0.0)
        cov_g = moments.covariance()
        mean_j, mean_k = moments.means()

        within += pair_share * cov_g
        between += pair_share * (mean_j - pooled_mean_j) * (mean_k - pooled_mean_k)

        share = float(np.sum(sub.weights[rows])) / survivor_weight
        # G_g = (p_g^{jk} / p_g) ⊙ Σ_g, de modo que Σ_w = Σ_g p_g G_g exactamente
        adjusted_g = _symmetric(pair_share / share * cov_g)
        sigma_g = _symmetric(cov_g)
        shares.append(share)
        means.append(np.diag(mean_j).tolist())
        sigmas.append(sigma_g)
        adjusted.append(adjusted_g)
        group_rho.append(spectral_radius(sigma_g))

    sigma_within = _symmetric(within)
    sigma_between = _symmetric(between)
    rho_pooled = pooled_est.spectrum.largest
    rho_w_matrix = spectral_radius(sigma_within)
    rho_b_matrix = spectral_radius(sigma_between)
    rho_within = float(sum(p * spectral_radius(g) for p, g in zip(shares, adjusted)))

    return GroupDecomposition(
        group_var=group_var,
        group_labels=kept,
        shares=shares,
        means=means,
        sigmas=sigmas,
        adjusted_sigmas=adjusted,
        group_rho=group_rho,
        sigma_within=sigma_within,
        sigma_between=sigma_between,
        pooled_sigma=pooled_est.sigma,
        pooled_rho=rho_pooled,
        pooled_rho_all_rows=pooled_all.spectrum.largest,
        rho_within=rho_within,
        rho_between=rho_pooled - rho_within,
        slack_b=rho_w_matrix + rho_b_matrix - rho_pooled,
        slack_w=rho_within - rho_w_matrix,
        dropped_weight_share=dropped_share,
        dropped_groups=dropped,
    )


# ---- Series contrafactuales ----

def _baseline_index(labels: Sequence[str], baseline) -> int:
    if baseline is None:
        return 0
    if isinstance(baseline, int):
        if not 0 <= baseline < len(labels):
            raise PreconditionError(f"Índice de bin base fuera de rango: {baseline}")
        return baseline
    if baseline not in labels:
        raise PreconditionError(f"Bin base desconocido: {baseline}")
    return list(labels).index(baseline)


def within_between_counterfactuals(series: Sequence[Tuple[str, GroupDecomposition]], baseline=None) -> CounterfactualSeries:
    if not series:
        raise EmptySeriesError("La serie de descomposiciones está vacía")
    labels = [str(label) for label, _ in series]
    base = _baseline_index(labels, baseline)
    rho_w = [d.rho_within for _, d in series]
    rho_b = [d.rho_between for _, d in series]
    return CounterfactualSeries(
        kind="group",
        bins=labels,
        observed=[d.pooled_rho for _, d in series],
        baseline=labels[base],
        within_only=[w + rho_b[base] for w in rho_w],
        between_only=[rho_w[base] + b for b in rho_b],
        group_var=series[0][1].group_var,
    )


def trace_concentration_counterfactuals(series: Sequence[Tuple[str, SymMatrix]], baseline=None) -> CounterfactualSeries:
    if not series:
        raise EmptySeriesError("La serie de matrices está vacía")
    labels = [str(label) for label, _ in series]
    base = _baseline_index(labels, baseline)
    parts = [trace_concentration(sigma) for _, sigma in series]
    tr0, conc0, _ = parts[base]
    return CounterfactualSeries(
        kind="trace",
        bins=labels,
        observed=[rho for _, _, rho in parts],
        baseline=labels[base],
        variance_only=[tr * conc0 for tr, _, _ in parts],
        concentration_only=[tr0 * conc for _, conc, _ in parts],
    )
