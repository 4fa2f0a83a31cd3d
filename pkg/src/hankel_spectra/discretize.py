from __future__ import annotations

import math
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.constants import (
    DEFAULT_NODES_PER_PANEL,
    DEFAULT_TRUNCATION_EPS,
    EXP_SCALE_TRUNCATION_FACTOR,
    MIN_ATOM_WEIGHT,
)
from src.hankel_spectra.errors import EmptyMeasureError
from src.hankel_spectra.measures import AtomicMeasure, DensityMeasure, density
from src.hankel_spectra.quadrature import gauss_legendre, integrate_positive
from src.logger import get_logger

logger = get_logger(__name__)

UNIFORM_GRADING_KINDS = ("mehler_sigma", "rosenblum_rho")


class DiscretizationConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    n_nodes: int = Field(ge=1)
    truncation: tuple[float, float]
    rule: Literal["composite_gauss_legendre", "single_panel"] = "composite_gauss_legendre"
    panels: int | None = None
    grading: Literal["geometric", "uniform"] = "geometric"

    @field_validator("truncation")
    @classmethod
    def validate_truncation(cls, value: tuple[float, float]) -> tuple[float, float]:
        lo, hi = value
        if not (0 <= lo < hi < math.inf):
            raise ValueError(f"truncation must satisfy 0 <= t_lo < t_hi < inf, got {value}")
        return value

    @model_validator(mode="after")
    def validate_panels(self) -> DiscretizationConfig:
        if self.panels is not None and not 1 <= self.panels <= self.n_nodes:
            raise ValueError(f"panels must be in [1, {self.n_nodes}], got {self.panels}")
        return self

    @property
    def panel_count(self) -> int:
        if self.rule == "single_panel":
            return 1
        if self.panels is not None:
            return self.panels
        return max(1, self.n_nodes // DEFAULT_NODES_PER_PANEL)


def default_truncation(measure: DensityMeasure, truncate: float | None = None) -> tuple[float, float]:
    """Default truncation window: [eps, 40/beta] for exp_scale, the support clipped otherwise."""
    lo, hi = measure.support
    t_lo = max(lo, DEFAULT_TRUNCATION_EPS)
    if truncate is not None:
        t_hi = min(hi, truncate)
    elif math.isfinite(hi):
        t_hi = hi
    elif measure.kind == "exp_scale" and not measure.transforms:
        t_hi = EXP_SCALE_TRUNCATION_FACTOR / float(measure.params["beta"])
    else:
        raise ValueError(
            f"Density {measure.kind} has unbounded support; pass an explicit truncation"
        )
    if not t_hi > t_lo:
        raise ValueError(f"Empty truncation window [{t_lo}, {t_hi}] for support {measure.support}")
    return (t_lo, t_hi)


def default_grading(measure: DensityMeasure) -> str:
    """Uniform panels for the spectral densities on [0, pi], geometric toward 0 otherwise."""
    if measure.kind in UNIFORM_GRADING_KINDS and not measure.transforms:
        return "uniform"
    return "geometric"


def default_config(
    measure: DensityMeasure,
    n_nodes: int,
    truncate: float | None = None,
    t_lo: float | None = None,
    **overrides,
) -> DiscretizationConfig:
    lo, hi = default_truncation(measure, truncate)
    if t_lo is not None:
        lo = t_lo
    overrides.setdefault("grading", default_grading(measure))
    return DiscretizationConfig(n_nodes=n_nodes, truncation=(lo, hi), **overrides)


def panel_edges(cfg: DiscretizationConfig) -> np.ndarray:
    t_lo, t_hi = cfg.truncation
    count = cfg.panel_count
    if count > 1 and cfg.grading == "geometric" and t_lo > 0:
        edges = np.geomspace(t_lo, t_hi, count + 1)
    else:
        edges = np.linspace(t_lo, t_hi, count + 1)
    edges[0], edges[-1] = t_lo, t_hi
    return edges


def quadrature_rule(cfg: DiscretizationConfig) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the configured rule, in increasing node order."""
    edges = panel_edges(cfg)
    count = len(edges) - 1
    base, extra = divmod(cfg.n_nodes, count)
    nodes, weights = [], []
    for index in range(count):
        points = base + (1 if index < extra else 0)
        knots, knot_weights = gauss_legendre(float(edges[index]), float(edges[index + 1]), points)
        nodes.append(knots)
        weights.append(knot_weights)
    return np.concatenate(nodes), np.concatenate(weights)


def discretize(measure: DensityMeasure, cfg: DiscretizationConfig) -> AtomicMeasure:
    if not isinstance(measure, DensityMeasure):
        raise ValueError("discretize expects a density measure")
    nodes, rule_weights = quadrature_rule(cfg)
    weights = rule_weights * density(measure, nodes)
    keep = weights >= MIN_ATOM_WEIGHT
    dropped = int(np.count_nonzero(~keep))
    if dropped:
        logger.debug("Dropped %d of %d atoms below %g", dropped, len(nodes), MIN_ATOM_WEIGHT)
    if not np.any(keep):
        raise EmptyMeasureError(
            f"All {len(nodes)} quadrature atoms of {measure.kind} on {cfg.truncation} have negligible weight"
        )
    return AtomicMeasure.from_arrays(nodes[keep], weights[keep])


def tail_mass(measure: DensityMeasure, cfg: DiscretizationConfig) -> float:
    """Mass of ``measure`` outside the truncation window."""
    lo, hi = measure.support
    t_lo, t_hi = cfg.truncation

    def integrand(t: float) -> float:
        return density(measure, t)

    below = integrate_positive(integrand, lo, min(t_lo, hi)) if t_lo > lo else 0.0
    above = integrate_positive(integrand, max(t_hi, lo), hi) if hi > t_hi else 0.0
    return below + above
