"""
Least-squares eigenspace objective and its gradients.

For relative data Y with offsets δ the model is V·D_δ·Vᵀ with
D_δ = diag(e^{-iφλ_k δ dt}). Samples sharing an offset are averaged first:
Σ‖Y - P_δ‖² = within_ss + Σ_δ n_δ‖Ȳ_δ - P_δ‖².

Dependencies: numpy
"""

from typing import Optional, Union

import numpy as np

from app.modules.lattice.schemas.lattice import FrequencySet, LatticeGeometry
from app.modules.lattice.services.lattice import TWO_PI_MHZ_NS
from app.modules.spamproc.schemas.spamproc import RelativeTimeSeries

PENALTY_FLOOR = 1e-14

Support = Union[LatticeGeometry, np.ndarray, None]


def _off_support_mask(omega: Support, n: int) -> np.ndarray:
    if omega is None:
        return np.zeros((n, n), dtype=bool)
    if isinstance(omega, LatticeGeometry):
        return ~omega.support_mask()
    return ~np.asarray(omega, dtype=bool)


class EigenspaceObjective:
    """
    f(V) = Σ_samples ‖Y - V·D·Vᵀ‖² + mu·‖(V·Λ·Vᵀ)_Ω̄‖_F

    The penalty norm is not squared; its subgradient is taken as zero when
    the off-support part vanishes.
    """

    def __init__(self, freqs: FrequencySet, data: RelativeTimeSeries, omega: Support = None):
        n = data.n
        if len(freqs) != n:
            raise ValueError(f"{len(freqs)} frequencies for N={n}")
        grouped = data.grouped()
        self.n = n
        self.freqs = freqs.freqs
        self.counts = grouped.counts.astype(float)
        self.means = grouped.means
        self.within_ss = grouped.within_ss
        self.total_weight = float(self.counts.sum())
        self.phases = np.exp(
            -1j * TWO_PI_MHZ_NS * (grouped.offsets * data.dt)[:, None] * self.freqs[None, :]
        )
        self.off_support = _off_support_mask(omega, n)

    def _residuals(self, V: np.ndarray) -> np.ndarray:
        model = np.einsum("ik,gk,jk->gij", V, self.phases, V)
        return self.means - model

    def fit(self, V: np.ndarray) -> float:
        residuals = self._residuals(V)
        return self.within_ss + float(np.einsum("g,gij->", self.counts, np.abs(residuals) ** 2))

    def _off_block(self, V: np.ndarray) -> np.ndarray:
        h = (V * self.freqs[None, :]) @ V.T
        return np.where(self.off_support, h, 0.0)

    def penalty(self, V: np.ndarray) -> float:
        return float(np.linalg.norm(self._off_block(V)))

    def value(self, V: np.ndarray, mu: float = 0.0) -> float:
        total = self.fit(V)
        if mu:
            total += mu * self.penalty(V)
        return total

    def euclidean_gradient(self, V: np.ndarray, mu: float = 0.0) -> np.ndarray:
        residuals = self._residuals(V)
        conj = residuals.conj()
        sym = conj + np.swapaxes(conj, 1, 2)
        grad = -2.0 * np.einsum("g,gij,jk,gk->ik", self.counts, sym, V, self.phases).real

        if mu:
            block = self._off_block(V)
            norm = np.linalg.norm(block)
            if norm >= PENALTY_FLOOR:
                grad += mu * 2.0 / norm * (block @ V) * self.freqs[None, :]
        return grad

    def riemannian_gradient(self, V: np.ndarray, mu: float = 0.0) -> np.ndarray:
        """Skew generator G = Γ·Vᵀ - V·Γᵀ; d/dt f(exp(tΞ)V) at 0 equals ½⟨G, Ξ⟩."""
        grad = self.euclidean_gradient(V, mu)
        return grad @ V.T - V @ grad.T


def objective(
    V: np.ndarray,
    freqs: FrequencySet,
    data: RelativeTimeSeries,
    mu: float,
    omega: Support,
) -> float:
    return EigenspaceObjective(freqs, data, omega).value(np.asarray(V, dtype=float), mu)


def riemannian_gradient(
    V: np.ndarray,
    freqs: FrequencySet,
    data: RelativeTimeSeries,
    mu: float,
    omega: Optional[Support],
) -> np.ndarray:
    return EigenspaceObjective(freqs, data, omega).riemannian_gradient(
        np.asarray(V, dtype=float), mu
    )
