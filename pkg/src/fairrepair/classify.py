"""Weight-aware logistic regression, trained with damped Newton steps.

Deliberately minimal and dependency-free beyond numpy/scipy linear
algebra: full-batch Newton with backtracking line search on the penalized
negative log-likelihood, always initialised at zero, so fits are
deterministic. Row weights are normalised to mean one so the default L2
penalty has the same strength for weighted and unweighted data.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import expit


@dataclass(frozen=True, eq=False)
class LogisticModel:
    coefficients: np.ndarray
    intercept: float
    threshold: float = 0.5
    converged: bool = True
    grad_norm: float = 0.0
    loss_history: tuple = ()

    def to_json_dict(self) -> dict:
        return {
            "coefficients": [float(c) for c in self.coefficients],
            "intercept": float(self.intercept),
            "threshold": float(self.threshold),
        }

    @classmethod
    def from_json_dict(cls, payload: dict) -> "LogisticModel":
        return cls(
            coefficients=np.asarray(payload["coefficients"], dtype=float),
            intercept=float(payload["intercept"]),
            threshold=float(payload.get("threshold", 0.5)),
        )


def penalized_nll(beta, X, y, weights, l2):
    """Weighted negative log-likelihood plus (l2/2)||w||^2 (no intercept penalty)."""
    z = X @ beta[:-1] + beta[-1]
    nll = np.sum(weights * (np.logaddexp(0.0, z) - y * z))
    return float(nll + 0.5 * l2 * np.dot(beta[:-1], beta[:-1]))


def penalized_nll_grad(beta, X, y, weights, l2):
    z = X @ beta[:-1] + beta[-1]
    r = weights * (expit(z) - y)
    return np.concatenate([X.T @ r + l2 * beta[:-1], [np.sum(r)]])


def _hessian(beta, X, y, weights, l2):
    z = X @ beta[:-1] + beta[-1]
    p = expit(z)
    curv = weights * p * (1.0 - p)
    Xa = np.concatenate([X, np.ones((X.shape[0], 1))], axis=1)
    H = Xa.T @ (Xa * curv[:, None])
    H[np.diag_indices(X.shape[1])] += l2
    return H


def fit_logistic(
    X,
    y,
    weights=None,
    *,
    max_iter: int = 200,
    tol: float = 1e-8,
    l2: float = 1e-6,
    threshold: float = 0.5,
) -> LogisticModel:
    """Fit by maximising the weighted penalized log-likelihood.

    Converges when the gradient 2-norm drops below ``tol`` or after
    ``max_iter`` Newton steps; non-convergence is reported through a
    warning carrying the final gradient norm.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2:
        raise ValueError("X must be a 2-d array")
    if y.shape != (X.shape[0],) or not np.all(np.isin(y, (0, 1))):
        raise ValueError("y must be one 0/1 label per row")
    y = y.astype(float)
    if not (np.any(y == 0) and np.any(y == 1)):
        raise ValueError("training data contains a single class")
    if weights is None:
        w = np.ones(X.shape[0])
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != y.shape or np.any(w < 0) or np.sum(w) <= 0:
            raise ValueError("weights must be nonnegative with positive total")
        w = w * (X.shape[0] / np.sum(w))

    d = X.shape[1]
    beta = np.zeros(d + 1)
    loss = penalized_nll(beta, X, y, w, l2)
    history = [loss]
    grad = penalized_nll_grad(beta, X, y, w, l2)
    converged = False
    for _ in range(max_iter):
        gnorm = float(np.linalg.norm(grad))
        if gnorm < tol:
            converged = True
            break
        H = _hessian(beta, X, y, w, l2)
        try:
            step = np.linalg.solve(H, -grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, -grad, rcond=None)[0]
        descent = float(grad @ step)
        if not np.isfinite(descent) or descent >= 0:
            step = -grad
            descent = -float(grad @ grad)
        # Armijo backtracking keeps the recorded loss non-increasing.
        t = 1.0
        while True:
            candidate = beta + t * step
            new_loss = penalized_nll(candidate, X, y, w, l2)
            if new_loss <= loss + 1e-4 * t * descent:
                break
            t *= 0.5
            if t < 1e-14:
                candidate = beta
                new_loss = loss
                break
        if candidate is beta:
            break
        beta = candidate
        loss = new_loss
        history.append(loss)
        grad = penalized_nll_grad(beta, X, y, w, l2)
    gnorm = float(np.linalg.norm(grad))
    if gnorm < tol:
        converged = True
    if not converged:
        warnings.warn(
            f"logistic fit did not converge: final gradient norm {gnorm:.3e}",
            RuntimeWarning,
            stacklevel=2,
        )
    return LogisticModel(
        coefficients=beta[:-1].copy(),
        intercept=float(beta[-1]),
        threshold=threshold,
        converged=converged,
        grad_norm=gnorm,
        loss_history=tuple(history),
    )


def predict_proba(model: LogisticModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.coefficients.shape[0]:
        raise ValueError(
            f"feature dimension {X.shape[-1]} does not match model "
            f"({model.coefficients.shape[0]})"
        )
    return expit(X @ model.coefficients + model.intercept)


def predict(model: LogisticModel, X) -> np.ndarray:
    """Hard labels: 1 iff the predicted probability strictly exceeds the threshold."""
    return (predict_proba(model, X) > model.threshold).astype(np.int8)


def misclassification_error(pred, y, weights=None) -> float:
    """Weighted fraction of disagreeing predictions."""
    pred = np.asarray(pred)
    y = np.asarray(y)
    if pred.shape != y.shape:
        raise ValueError("pred and y must have equal length")
    mism = (pred != y).astype(float)
    if weights is None:
        return float(np.mean(mism))
    w = np.asarray(weights, dtype=float)
    if w.shape != y.shape:
        raise ValueError("weights must have one entry per row")
    return float(math.fsum((w * mism).tolist()) / math.fsum(w.tolist()))
