"""Two-layer softmax network trained with Moller's scaled conjugate gradient.

The architecture is input (selected features + bias) -> output (one unit per
category) with softmax activations and mean cross-entropy loss; weights start
at zero, which makes training deterministic for this convex objective.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import TooFewCategories, UntrainedModel
from ..features.extract import FeatureMatrix

GRADIENT_TOL = 1e-5


@dataclass(eq=False)
class PerceptronNet:
    weights: np.ndarray                  # (n_features + 1, n_categories)
    categories: tuple[str, ...]
    feature_indices: np.ndarray | None   # catalog indices if trained on a subset
    trained: bool = False
    converged: bool = False
    loss_history: list[float] = field(default_factory=list, repr=False)

    def classify(self, z: np.ndarray) -> str:
        return nn_classify(self, z)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _with_bias(X: np.ndarray) -> np.ndarray:
    return np.hstack([X, np.ones((X.shape[0], 1))])


def nn_loss_and_gradient(
    weights: np.ndarray, X1: np.ndarray, onehot: np.ndarray
) -> tuple[float, np.ndarray]:
    """Mean cross-entropy and its gradient for bias-augmented inputs X1."""
    probs = _softmax(X1 @ weights)
    n = X1.shape[0]
    loss = float(-(onehot * np.log(np.maximum(probs, 1e-300))).sum() / n)
    grad = X1.T @ (probs - onehot) / n
    return loss, grad


def _scg_minimize(w0, objective, max_iters, grad_tol):
    """Moller (1993) scaled conjugate gradient; returns (w, converged, losses)."""
    w = w0.copy()
    loss, grad = objective(w)
    losses = [loss]
    r = -grad
    p = r.copy()
    success = True
    lam, lam_bar = 1e-6, 0.0
    sigma0 = 1e-4
    n_params = w.size
    delta = 0.0
    converged = np.linalg.norm(r) < grad_tol

    k = 0
    while k < max_iters and not converged:
        k += 1
        p_sq = float(p @ p)
        if p_sq == 0.0:
            converged = True
            break
        if success:
            sigma = sigma0 / np.sqrt(p_sq)
            _, grad_probe = objective(w + sigma * p)
            s = (grad_probe - grad) / sigma
            delta = float(p @ s)
        delta += (lam - lam_bar) * p_sq
        if delta <= 0:  # make the Hessian approximation positive definite
            lam_bar = 2.0 * (lam - delta / p_sq)
            delta = -delta + lam * p_sq
            lam = lam_bar
        mu = float(p @ r)
        alpha = mu / delta
        loss_new, grad_new = objective(w + alpha * p)
        comparison = 2.0 * delta * (loss - loss_new) / mu**2
        if comparison >= 0:
            w = w + alpha * p
            loss = loss_new
            r_new = -grad_new
            grad = grad_new
            lam_bar = 0.0
            success = True
            losses.append(loss)
            if k % n_params == 0:
                p = r_new.copy()  # periodic restart
            else:
                beta = (float(r_new @ r_new) - float(r_new @ r)) / mu
                p = r_new + beta * p
            r = r_new
            if comparison >= 0.75:
                lam = max(lam * 0.25, 1e-15)
            if np.linalg.norm(r) < grad_tol:
                converged = True
        else:
            lam_bar = lam
            success = False
        if comparison < 0.25:
            lam = lam + delta * (1.0 - comparison) / p_sq
            if not np.isfinite(lam) or lam > 1e100:
                break
    return w, converged, losses


def train_nn(
    train: FeatureMatrix,
    epochs: int = 500,
    seed: int = 0,
    grad_tol: float = GRADIENT_TOL,
    feature_indices: np.ndarray | None = None,
) -> PerceptronNet:
    """Train until the gradient norm drops below grad_tol or the epoch limit.

    Hitting the limit is not an error: the model is returned with
    converged=False. The seed is accepted for interface symmetry; zero
    initialization makes the fit seed-independent.
    """
    del seed  # deterministic zero init; kept for a uniform training signature
    cats = train.categories
    if len(cats) < 2:
        raise TooFewCategories("network training needs at least two categories")
    cat_index = {c: i for i, c in enumerate(cats)}
    X1 = _with_bias(train.values)
    onehot = np.zeros((train.n_samples, len(cats)))
    onehot[np.arange(train.n_samples), [cat_index[lb] for lb in train.labels]] = 1.0

    shape = (X1.shape[1], len(cats))
    w0 = np.zeros(shape).ravel()

    def objective(wflat: np.ndarray):
        loss, grad = nn_loss_and_gradient(wflat.reshape(shape), X1, onehot)
        return loss, grad.ravel()

    if epochs == 0:
        loss0, _ = objective(w0)
        return PerceptronNet(
            weights=w0.reshape(shape), categories=cats, feature_indices=feature_indices,
            trained=True, converged=False, loss_history=[loss0],
        )
    w, converged, losses = _scg_minimize(w0, objective, max_iters=epochs, grad_tol=grad_tol)
    return PerceptronNet(
        weights=w.reshape(shape), categories=cats, feature_indices=feature_indices,
        trained=True, converged=converged, loss_history=losses,
    )


def nn_activations(net: PerceptronNet, z: np.ndarray) -> np.ndarray:
    if not net.trained:
        raise UntrainedModel("network has not been trained")
    z1 = np.concatenate([np.asarray(z, dtype=np.float64), [1.0]])
    return _softmax((z1 @ net.weights)[None, :])[0]


def nn_classify(net: PerceptronNet, z: np.ndarray) -> str:
    """Argmax of the output activations; ties break to the lowest index."""
    return net.categories[int(np.argmax(nn_activations(net, z)))]
