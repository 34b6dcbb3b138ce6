"""End-of-anneal figures of merit."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hilbert import ProblemDiagonal


def residual_energy(psi_f, diag: ProblemDiagonal) -> float:
    """``<psi|H_p|psi> - E_0`` for a normalized final state."""
    weights = np.abs(np.asarray(psi_f)) ** 2
    return float(np.dot(weights, diag.as_float()) - diag.ground_energy)


def success_probability(psi_f, diag: ProblemDiagonal) -> float:
    """Born weight on basis states whose (integer) energy equals ``E_0`` exactly."""
    weights = np.abs(np.asarray(psi_f)) ** 2
    return float(np.sum(weights[diag.energies == diag.ground_energy]))


@dataclass(frozen=True)
class AnnealOutcome:
    residual_energy: float
    success_probability: float
    tau: float
    schedule: str
    driver: str
    graph_id: int = 0
    seed: int = 0
    colorable: bool = True

    def __post_init__(self):
        if self.residual_energy < -1e-9:
            raise ValueError(f"negative residual energy {self.residual_energy}")
        if not -1e-9 <= self.success_probability <= 1.0 + 1e-9:
            raise ValueError(f"success probability {self.success_probability} outside [0, 1]")


def outcome(psi_f, diag: ProblemDiagonal, tau, schedule, driver, graph_id=0, seed=0, colorable=True) -> AnnealOutcome:
    return AnnealOutcome(
        residual_energy(psi_f, diag),
        success_probability(psi_f, diag),
        float(tau),
        schedule,
        driver,
        graph_id,
        seed,
        colorable,
    )
