"""Stochastic covariance compression: learn m synthetic SPD prototypes.

Prototypes are parameterized by their upper-triangular Cholesky factors,
which keeps every iterate on the SPD cone, and optimized by nonlinear
conjugate gradient on the stochastic-neighborhood KL loss under the
Jensen-Bregman log-det divergence.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .datasets import LabeledDataset, stratified_indices
from .errors import NotPositiveDefinite, TooFewInputs, ValidationError
from .neighborhood import (
    NeighborhoodModel,
    gradient_coeffs,
    kl_loss,
    select_gamma_sq,
)
from .optim import ncg_minimize
from .spd import cholesky

# steps taking a factor below this diagonal conditioning are rejected
_COND_FLOOR = 1e-14


@dataclass
class SccConfig:
    max_iter: int = 200
    gtol: float = 1e-6
    gamma_sq: float | None = None  # None: grid-picked at initialization
    seed: int = 0


@dataclass
class SccState:
    factors: list[np.ndarray]      # m upper-triangular (d, d)
    labels: np.ndarray             # m prototype labels
    gamma_sq: float
    loss_history: list[float] = field(default_factory=list)

    @property
    def m(self) -> int:
        return len(self.factors)

    def prototypes(self) -> list[np.ndarray]:
        """Reconstructed SPD prototypes B_j.T @ B_j."""
        return [B.T @ B for B in self.factors]

    def to_dataset(self, template: LabeledDataset) -> LabeledDataset:
        return LabeledDataset(
            family="covariance", dim=template.dim, members=self.prototypes(),
            labels=self.labels.copy(),
            metadata={"method": "scc", "gamma_sq": self.gamma_sq})


def scc_init(train: LabeledDataset, m: int, seed: int) -> SccState:
    """Class-stratified sample of m training covariances, Cholesky-factored."""
    if train.family != "covariance":
        raise ValidationError("scc requires a covariance dataset")
    if m > len(train):
        raise TooFewInputs(f"m={m} exceeds n={len(train)}")
    rng = np.random.default_rng(seed)
    idx = stratified_indices(train.labels, m, rng)
    factors = [cholesky(train.members[i]) for i in idx]
    return SccState(factors=factors, labels=train.labels[idx].copy(),
                    gamma_sq=1.0)


def jbld_distance_matrix(factors: list[np.ndarray],
                         members: list[np.ndarray]) -> np.ndarray:
    """(n, m) JBLD distances between training matrices and B_j.T B_j.

    Uses numpy's stacked Cholesky over all n members at once per prototype.
    """
    X = np.stack(members)  # (n, d, d)
    try:
        Lx = np.linalg.cholesky(X)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite("a training member is not SPD") from None
    logdet_X = 2.0 * np.log(np.diagonal(Lx, axis1=1, axis2=2)).sum(axis=1)
    n, m = X.shape[0], len(factors)
    D = np.empty((n, m))
    for j, B in enumerate(factors):
        S = B.T @ B
        logdet_S = 2.0 * np.sum(np.log(np.abs(np.diag(B))))
        L = np.linalg.cholesky(0.5 * (X + S))
        mid = 2.0 * np.log(np.diagonal(L, axis1=1, axis2=2)).sum(axis=1)
        D[:, j] = mid - 0.5 * (logdet_X + logdet_S)
    return D


def scc_loss_grad(state: SccState, train: LabeledDataset):
    """KL loss and its gradient w.r.t. each upper-triangular factor.

    Gradient for prototype j is sum_i c_ij * d jbld(X_i, B_j' B_j)/d B_j,
    assembled as 2 B_j W_j - (sum_i c_ij) B_j^-T with
    W_j = sum_i c_ij (X_i + S_j)^-1; the inverses are computed as one
    stacked batch per prototype.
    """
    members = train.members
    d = state.factors[0].shape[0]
    X = np.stack(members)  # (n, d, d)
    D = jbld_distance_matrix(state.factors, members)
    model = NeighborhoodModel(state.gamma_sq, state.labels, train.labels, D)
    loss = kl_loss(model)
    C = gradient_coeffs(model)
    grads = []
    eye = np.eye(d)
    for j, B in enumerate(state.factors):
        S = B.T @ B
        inv = np.linalg.inv(X + S)  # stacked (n, d, d)
        W = np.tensordot(C[:, j], inv, axes=1)
        Binv_T = scipy.linalg.solve_triangular(B, eye, lower=False).T
        G = 2.0 * (B @ W) - C[:, j].sum() * Binv_T
        grads.append(np.triu(G))
    return loss, grads


def _pack(factors: list[np.ndarray], iu) -> np.ndarray:
    return np.concatenate([B[iu] for B in factors])


def _unpack(x: np.ndarray, m: int, d: int, iu) -> list[np.ndarray]:
    k = d * (d + 1) // 2
    factors = []
    for j in range(m):
        B = np.zeros((d, d))
        B[iu] = x[j * k:(j + 1) * k]
        factors.append(B)
    return factors


def scc_compress(train: LabeledDataset, m: int,
                 config: SccConfig | None = None) -> SccState:
    """Learn m synthetic SPD prototypes by conjugate-gradient descent.

    Returns the state with the best training KL loss encountered; prototype
    labels stay fixed throughout.
    """
    config = config or SccConfig()
    state = scc_init(train, m, config.seed)
    d = train.dim
    iu = np.triu_indices(d)

    D0 = jbld_distance_matrix(state.factors, train.members)
    if config.gamma_sq is not None:
        state.gamma_sq = config.gamma_sq
    else:
        state.gamma_sq = select_gamma_sq(D0, state.labels, train.labels)

    def fg(x):
        factors = _unpack(x, m, d, iu)
        for B in factors:
            diag = np.abs(np.diag(B))
            if diag.min() == 0.0 or (diag.min() / diag.max()) ** 2 < _COND_FLOOR:
                return np.inf, np.zeros_like(x)
        trial = SccState(factors, state.labels, state.gamma_sq)
        loss, grads = scc_loss_grad(trial, train)
        return loss, _pack(grads, iu)

    result = ncg_minimize(fg, _pack(state.factors, iu),
                          max_iter=config.max_iter, gtol=config.gtol)
    best = SccState(
        factors=_unpack(result.x, m, d, iu),
        labels=state.labels,
        gamma_sq=state.gamma_sq,
        loss_history=result.history,
    )
    for B in best.factors:  # every returned factor must reconstruct to SPD
        try:
            np.linalg.cholesky(B.T @ B)
        except np.linalg.LinAlgError:
            raise NotPositiveDefinite("optimizer returned a degenerate factor")
    return best
