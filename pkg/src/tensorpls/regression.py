"""Latent-variable regression estimators.

Three fitting routines live here:

* :func:`fit_hopls` — tensor predictors, tensor responses. Each component is
  an orthogonal Tucker block sharing one latent vector between X and Y; the
  loadings come from an orthogonal Tucker decomposition of the mode-0
  cross-covariance tensor of the current residuals.
* :func:`fit_hopls2` — tensor predictors, matrix responses; the response side
  collapses to a rank-one term ``d_r * t_r q_r^T`` per component.
* :func:`fit_pls_nipals` — the classical two-way baseline.

An N-PLS-style baseline is the all-ranks-one configuration of
:func:`fit_hopls` (``FitConfig.uniform(..., 1)``); the rank-one blocks it
produces are plain outer products.

Latent vectors have unit norm, all loading matrices are column-orthonormal,
and models are immutable after fitting. Mode-0 mean-centering is on by
default and is undone at prediction time. Deflation subtracts each fitted
block from the running residuals, so residual norms never increase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .decomp import HooiSettings, hooi, leading_left_singular_vector, validate_ranks
from .errors import DegenerateDataError, RankError, ShapeMismatchError
from .tensor import (
    as_matrix,
    astensor,
    cross_cov_mode1,
    fold,
    fro_norm,
    kron_all,
    matricize,
    mode_n_product,
    multi_mode_product,
    tucker_assemble,
    tucker_contract,
)

__all__ = [
    "FitConfig",
    "HoplsComponent",
    "HoplsModel",
    "Hopls2Component",
    "Hopls2Model",
    "PlsModel",
    "center_mode1",
    "fit_hopls",
    "fit_hopls2",
    "fit_pls_nipals",
    "predict_hopls",
    "predict_hopls2",
    "predict_pls",
]

# Relative factor applied to the initial residual norms when FitConfig.epsilon
# is left unset.
DEFAULT_EPSILON_FACTOR = 1e-8


@dataclass(frozen=True)
class FitConfig:
    """Hyperparameters shared by the tensor estimators.

    Parameters
    ----------
    n_components : int
        Number of latent vectors to extract (R).
    x_ranks : tuple of int
        Loading counts for the non-sample modes of X, one per mode.
    y_ranks : tuple of int
        Same for Y; ignored when the response is a matrix.
    epsilon : float, optional
        Residual-norm stopping threshold. ``None`` means
        ``1e-8 * initial residual norm``, separately per side.
    center : bool
        Remove the mode-0 mean of X and Y before fitting (default on).
    """

    n_components: int
    x_ranks: tuple[int, ...]
    y_ranks: tuple[int, ...] = ()
    epsilon: float | None = None
    center: bool = True

    def __post_init__(self) -> None:
        if self.n_components < 1:
            raise RankError("n_components must be >= 1")
        object.__setattr__(self, "x_ranks", tuple(int(r) for r in self.x_ranks))
        object.__setattr__(self, "y_ranks", tuple(int(r) for r in self.y_ranks))
        if any(r < 1 for r in self.x_ranks + self.y_ranks):
            raise RankError("all loading counts must be >= 1")
        if self.epsilon is not None and self.epsilon < 0:
            raise RankError("epsilon must be >= 0")

    @classmethod
    def uniform(
        cls,
        n_components: int,
        lam: int,
        x_order: int,
        y_order: int | None = None,
        **kwargs,
    ) -> "FitConfig":
        """The same loading count ``lam`` on every non-sample mode."""
        y_ranks = (lam,) * (y_order - 1) if y_order is not None else ()
        return cls(n_components, (lam,) * (x_order - 1), y_ranks, **kwargs)

    @classmethod
    def variance_fraction(
        cls,
        n_components: int,
        eta: float,
        x_shape: Sequence[int],
        y_shape: Sequence[int] | None = None,
        **kwargs,
    ) -> "FitConfig":
        """Loading counts as a fixed fraction ``eta`` of each mode size."""
        if not 0 < eta <= 1:
            raise RankError("eta must be in (0, 1]")
        x_ranks = tuple(max(1, round(eta * d)) for d in x_shape[1:])
        y_ranks = (
            tuple(max(1, round(eta * d)) for d in y_shape[1:])
            if y_shape is not None
            else ()
        )
        return cls(n_components, x_ranks, y_ranks, **kwargs)

    @property
    def lam(self) -> int:
        """Uniform loading count, if the config was built that way."""
        counts = set(self.x_ranks) | set(self.y_ranks)
        if len(counts) != 1:
            raise ValueError("loading counts are not uniform")
        return counts.pop()


@dataclass(frozen=True)
class HoplsComponent:
    """One extracted block: latent vector, per-mode loadings, both cores."""

    t: np.ndarray
    x_loadings: tuple[np.ndarray, ...]
    y_loadings: tuple[np.ndarray, ...]
    x_core: np.ndarray
    y_core: np.ndarray

    def x_block(self) -> np.ndarray:
        return tucker_assemble(self.x_core, (self.t[:, None],) + self.x_loadings)

    def y_block(self) -> np.ndarray:
        return tucker_assemble(self.y_core, (self.t[:, None],) + self.y_loadings)


@dataclass(frozen=True)
class HoplsModel:
    """Fitted tensor-to-tensor model.

    ``x_weights`` and ``y_operator`` are the assembled prediction operators:
    latent scores of new data are ``matricize(x_new_centered, 0) @ x_weights``
    and the matricized prediction is ``scores @ y_operator.T``.
    """

    config: FitConfig
    components: tuple[HoplsComponent, ...]
    x_shape: tuple[int, ...]
    y_shape: tuple[int, ...]
    x_mean: np.ndarray | None
    y_mean: np.ndarray | None
    x_weights: np.ndarray
    y_operator: np.ndarray
    x_residual_norms: tuple[float, ...]
    y_residual_norms: tuple[float, ...]
    stop_reason: str

    @property
    def n_components(self) -> int:
        return len(self.components)

    @property
    def scores(self) -> np.ndarray:
        """Training latent vectors as columns (not mutually orthogonal)."""
        return np.column_stack([c.t for c in self.components])


@dataclass(frozen=True)
class Hopls2Component:
    t: np.ndarray
    x_loadings: tuple[np.ndarray, ...]
    x_core: np.ndarray
    q: np.ndarray
    d: float
    u: np.ndarray

    def x_block(self) -> np.ndarray:
        return tucker_assemble(self.x_core, (self.t[:, None],) + self.x_loadings)


@dataclass(frozen=True)
class Hopls2Model:
    """Fitted tensor-to-matrix model: Y ~ sum_r d_r * t_r q_r^T."""

    config: FitConfig
    components: tuple[Hopls2Component, ...]
    x_shape: tuple[int, ...]
    n_responses: int
    x_mean: np.ndarray | None
    y_mean: np.ndarray | None
    x_weights: np.ndarray
    x_residual_norms: tuple[float, ...]
    y_residual_norms: tuple[float, ...]
    stop_reason: str

    @property
    def n_components(self) -> int:
        return len(self.components)

    @property
    def y_loadings(self) -> np.ndarray:
        return np.column_stack([c.q for c in self.components])

    @property
    def coefs(self) -> np.ndarray:
        return np.array([c.d for c in self.components])


@dataclass(frozen=True)
class PlsModel:
    """Two-way NIPALS model: X ~ T P^T, Y ~ T D Q^T."""

    n_components: int
    x_weights: np.ndarray
    x_loadings: np.ndarray
    y_loadings: np.ndarray
    coefs: np.ndarray
    scores: np.ndarray
    x_mean: np.ndarray | None
    y_mean: np.ndarray | None
    x_feature_shape: tuple[int, ...]
    y_feature_shape: tuple[int, ...]
    x_residual_norms: tuple[float, ...]
    y_residual_norms: tuple[float, ...]


def center_mode1(t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Remove the mode-0 mean; returns (centered tensor, mean field)."""
    t = astensor(t)
    mean = t.mean(axis=0)
    return t - mean, mean


def _row_pinv(row: np.ndarray) -> np.ndarray:
    """Moore-Penrose pseudoinverse of a 1 x K row vector (K x 1 result).

    A row has a single singular value (its norm), so the usual
    rcond * s_max cutoff degenerates to the exact-zero check.
    """
    row = np.asarray(row).reshape(1, -1)
    s2 = float(np.dot(row[0], row[0]))
    if s2 == 0.0:
        return np.zeros((row.shape[1], 1))
    return row.T / s2


def _epsilons(cfg: FitConfig, e0: float, f0: float) -> tuple[float, float]:
    if cfg.epsilon is not None:
        return cfg.epsilon, cfg.epsilon
    return DEFAULT_EPSILON_FACTOR * e0, DEFAULT_EPSILON_FACTOR * f0


def fit_hopls(
    x,
    y,
    cfg: FitConfig,
    hooi_settings: HooiSettings = HooiSettings(),
) -> HoplsModel:
    """Fit the tensor-to-tensor model by sequential deflation.

    Per component: the cross-covariance tensor of the residuals is
    decomposed at rank ``x_ranks + y_ranks`` by orthogonal iteration, giving
    the X- and Y-loadings; the latent vector is the leading left singular
    vector of the X-residual projected on the X-loadings; both cores follow
    by contraction, and the fitted blocks are subtracted.

    Extraction stops early when a residual norm falls below epsilon
    (``stop_reason='epsilon'``), when the cross-covariance vanishes — no
    shared variance left — (``'zero_cross_cov'``), or degenerates
    (``'degenerate_core'``). The model keeps whatever components were found.
    """
    x = astensor(x)
    y = astensor(y)
    if x.ndim < 3 or y.ndim < 3:
        raise ShapeMismatchError(
            "fit_hopls needs order >= 3 on both sides; use fit_hopls2 for a matrix response"
        )
    if x.shape[0] != y.shape[0]:
        raise ShapeMismatchError(
            f"sample counts differ: {x.shape[0]} vs {y.shape[0]}"
        )
    if len(cfg.x_ranks) != x.ndim - 1 or len(cfg.y_ranks) != y.ndim - 1:
        raise RankError(
            "config must carry one loading count per non-sample mode of X and Y"
        )
    x_ranks = validate_ranks(cfg.x_ranks, x.shape[1:])
    y_ranks = validate_ranks(cfg.y_ranks, y.shape[1:])

    if cfg.center:
        e, x_mean = center_mode1(x)
        f, y_mean = center_mode1(y)
    else:
        e, f = x.copy(), y.copy()
        x_mean = y_mean = None

    x_norms = [fro_norm(e)]
    y_norms = [fro_norm(f)]
    eps_x, eps_y = _epsilons(cfg, x_norms[0], y_norms[0])

    n_modes_x = x.ndim - 1
    components: list[HoplsComponent] = []
    w_cols: list[np.ndarray] = []
    qstar_cols: list[np.ndarray] = []
    stop_reason = "completed"

    for _ in range(cfg.n_components):
        if x_norms[-1] == 0.0 or y_norms[-1] == 0.0:
            stop_reason = "zero_cross_cov"
            break
        if x_norms[-1] <= eps_x or y_norms[-1] <= eps_y:
            stop_reason = "epsilon"
            break
        c = cross_cov_mode1(e, f)
        if not np.any(c):
            stop_reason = "zero_cross_cov"
            break
        tuck = hooi(c, x_ranks + y_ranks, hooi_settings)
        ps = tuck.factors[:n_modes_x]
        qs = tuck.factors[n_modes_x:]
        proj = multi_mode_product(e, ps, range(1, x.ndim), transpose=True)
        if not np.any(proj):
            stop_reason = "degenerate_core"
            break
        t = leading_left_singular_vector(matricize(proj, 0))
        t_col = t[:, None]
        g = tucker_contract(e, (t_col,) + ps)
        d = tucker_contract(f, (t_col,) + qs)
        e = e - tucker_assemble(g, (t_col,) + ps)
        f = f - tucker_assemble(d, (t_col,) + qs)
        x_norms.append(fro_norm(e))
        y_norms.append(fro_norm(f))
        components.append(
            HoplsComponent(t=t, x_loadings=ps, y_loadings=qs, x_core=g, y_core=d)
        )
        w_cols.append(kron_all(ps[::-1]) @ _row_pinv(matricize(g, 0)))
        qstar_cols.append(kron_all(qs[::-1]) @ matricize(d, 0).T)

    n_x_feat = math.prod(x.shape[1:])
    n_y_feat = math.prod(y.shape[1:])
    return HoplsModel(
        config=cfg,
        components=tuple(components),
        x_shape=x.shape[1:],
        y_shape=y.shape[1:],
        x_mean=x_mean,
        y_mean=y_mean,
        x_weights=(
            np.hstack(w_cols) if w_cols else np.zeros((n_x_feat, 0))
        ),
        y_operator=(
            np.hstack(qstar_cols) if qstar_cols else np.zeros((n_y_feat, 0))
        ),
        x_residual_norms=tuple(x_norms),
        y_residual_norms=tuple(y_norms),
        stop_reason=stop_reason,
    )


def fit_hopls2(
    x,
    y,
    cfg: FitConfig,
    hooi_settings: HooiSettings = HooiSettings(),
) -> Hopls2Model:
    """Fit the tensor-to-matrix model.

    The cross-covariance here is the residual tensor contracted with the
    response matrix over mode 0; its rank-(1, x_ranks) decomposition yields
    the unit response loading ``q_r`` and the X-loadings. The latent vector
    sets the core's vectorization against the projected residual
    (pseudoinverse step) and is then normalized, all scale being absorbed
    into the regression scalar ``d_r``.
    """
    x = astensor(x)
    y = as_matrix(y)
    if x.ndim < 3:
        raise ShapeMismatchError("fit_hopls2 needs an order >= 3 predictor")
    if x.shape[0] != y.shape[0]:
        raise ShapeMismatchError(
            f"sample counts differ: {x.shape[0]} vs {y.shape[0]}"
        )
    if len(cfg.x_ranks) != x.ndim - 1:
        raise RankError(
            "config must carry one loading count per non-sample mode of X"
        )
    x_ranks = validate_ranks(cfg.x_ranks, x.shape[1:])

    if cfg.center:
        e, x_mean = center_mode1(x)
        f, y_mean = center_mode1(y)
    else:
        e, f = x.copy(), y.copy()
        x_mean = y_mean = None

    x_norms = [fro_norm(e)]
    y_norms = [fro_norm(f)]
    eps_x, eps_y = _epsilons(cfg, x_norms[0], y_norms[0])

    components: list[Hopls2Component] = []
    w_cols: list[np.ndarray] = []
    stop_reason = "completed"

    for _ in range(cfg.n_components):
        if x_norms[-1] == 0.0 or y_norms[-1] == 0.0:
            stop_reason = "zero_cross_cov"
            break
        if x_norms[-1] <= eps_x or y_norms[-1] <= eps_y:
            stop_reason = "epsilon"
            break
        c = mode_n_product(e, f.T, 0)
        if not np.any(c):
            stop_reason = "zero_cross_cov"
            break
        tuck = hooi(c, (1,) + x_ranks, hooi_settings)
        q = tuck.factors[0][:, 0]
        ps = tuck.factors[1:]
        c_core_row = matricize(tuck.core, 0)
        if not np.any(c_core_row):
            stop_reason = "degenerate_core"
            break
        proj = multi_mode_product(e, ps, range(1, x.ndim), transpose=True)
        t_raw = matricize(proj, 0) @ _row_pinv(c_core_row)
        norm_t = float(np.linalg.norm(t_raw))
        if norm_t == 0.0:
            stop_reason = "degenerate_core"
            break
        t = (t_raw / norm_t).ravel()
        t_col = t[:, None]
        g = tucker_contract(e, (t_col,) + ps)
        u = f @ q
        d = float(u @ t)
        e = e - tucker_assemble(g, (t_col,) + ps)
        f = f - d * np.outer(t, q)
        x_norms.append(fro_norm(e))
        y_norms.append(fro_norm(f))
        components.append(
            Hopls2Component(t=t, x_loadings=ps, x_core=g, q=q, d=d, u=u)
        )
        w_cols.append(kron_all(ps[::-1]) @ _row_pinv(matricize(g, 0)))

    n_x_feat = math.prod(x.shape[1:])
    return Hopls2Model(
        config=cfg,
        components=tuple(components),
        x_shape=x.shape[1:],
        n_responses=y.shape[1],
        x_mean=x_mean,
        y_mean=y_mean,
        x_weights=(
            np.hstack(w_cols) if w_cols else np.zeros((n_x_feat, 0))
        ),
        x_residual_norms=tuple(x_norms),
        y_residual_norms=tuple(y_norms),
        stop_reason=stop_reason,
    )


def fit_pls_nipals(
    x,
    y,
    n_components: int,
    center: bool = True,
    tol: float = 1e-10,
    max_iter: int = 500,
) -> PlsModel:
    """Two-way PLS via the classical alternating (NIPALS) iteration.

    Per component the inner loop alternates ``w <- X^T u``, ``t <- X w``,
    ``q <- Y^T t``, ``u <- Y q`` (w, q normalized) until the latent vector
    moves less than ``tol`` or ``max_iter`` is hit, then deflates
    ``X -= t p^T`` and ``Y -= d t q^T`` with ``d = u^T t / t^T t``. Scores
    of successive components come out mutually orthogonal.

    Fewer than ``n_components`` may be extractable (exhausted residual);
    the model records the achieved count.
    """
    x = as_matrix(x)
    y = as_matrix(y)
    if x.shape[0] != y.shape[0]:
        raise ShapeMismatchError(
            f"sample counts differ: {x.shape[0]} vs {y.shape[0]}"
        )
    if not np.any(y):
        raise DegenerateDataError("response matrix is all zeros")
    if not 1 <= n_components <= min(x.shape):
        raise RankError(
            f"n_components={n_components} out of range for X of shape {x.shape}"
        )

    if center:
        e, x_mean = center_mode1(x)
        f, y_mean = center_mode1(y)
    else:
        e, f = x.copy(), y.copy()
        x_mean = y_mean = None

    x_norms = [fro_norm(e)]
    y_norms = [fro_norm(f)]
    # Exhaustion guard: residuals this far below the initial norm carry no
    # extractable signal.
    tiny_x = 1e-12 * max(x_norms[0], 1.0)
    tiny_y = 1e-12 * max(y_norms[0], 1.0)

    ws, ts, p_list, q_list, ds = [], [], [], [], []
    for _ in range(n_components):
        if x_norms[-1] <= tiny_x or y_norms[-1] <= tiny_y:
            break
        u = f[:, int(np.argmax((f * f).sum(axis=0)))]
        t = np.zeros(e.shape[0])
        q = np.zeros(f.shape[1])
        degenerate = False
        for _ in range(max_iter):
            w = e.T @ u
            nw = np.linalg.norm(w)
            if nw == 0.0:
                degenerate = True
                break
            w = w / nw
            t_new = e @ w
            q = f.T @ t_new
            nq = np.linalg.norm(q)
            if nq == 0.0:
                degenerate = True
                break
            q = q / nq
            u = f @ q
            if np.linalg.norm(t_new - t) < tol:
                t = t_new
                break
            t = t_new
        tt = float(t @ t)
        if degenerate or tt == 0.0:
            break
        p = e.T @ t / tt
        d = float(u @ t) / tt
        e = e - np.outer(t, p)
        f = f - d * np.outer(t, q)
        x_norms.append(fro_norm(e))
        y_norms.append(fro_norm(f))
        ws.append(w)
        ts.append(t)
        p_list.append(p)
        q_list.append(q)
        ds.append(d)

    n_found = len(ws)
    return PlsModel(
        n_components=n_found,
        x_weights=np.column_stack(ws) if ws else np.zeros((x.shape[1], 0)),
        x_loadings=np.column_stack(p_list) if p_list else np.zeros((x.shape[1], 0)),
        y_loadings=np.column_stack(q_list) if q_list else np.zeros((y.shape[1], 0)),
        coefs=np.array(ds),
        scores=np.column_stack(ts) if ts else np.zeros((x.shape[0], 0)),
        x_mean=x_mean,
        y_mean=y_mean,
        x_feature_shape=(x.shape[1],),
        y_feature_shape=(y.shape[1],),
        x_residual_norms=tuple(x_norms),
        y_residual_norms=tuple(y_norms),
    )


def _check_new_x(model_shape: tuple[int, ...], x_new: np.ndarray) -> None:
    if x_new.shape[1:] != model_shape:
        raise ShapeMismatchError(
            f"new data trailing shape {x_new.shape[1:]} != training {model_shape}"
        )


def predict_hopls(
    model: HoplsModel, x_new, n_components: int | None = None
) -> np.ndarray:
    """Predict a tensor response for new observations.

    The matricized prediction is ``X_(0) W Q*^T`` built from the stored
    per-component operators; ``n_components`` restricts to a leading subset
    (components are extracted sequentially, so the first r components of a
    larger model *are* the r-component model).
    """
    x_new = astensor(x_new)
    if x_new.ndim != len(model.x_shape) + 1:
        raise ShapeMismatchError("new data has wrong order")
    _check_new_x(model.x_shape, x_new)
    r = model.n_components if n_components is None else min(n_components, model.n_components)
    if model.x_mean is not None:
        x_new = x_new - model.x_mean
    scores = matricize(x_new, 0) @ model.x_weights[:, :r]
    y_flat = scores @ model.y_operator[:, :r].T
    y = fold(y_flat, 0, (x_new.shape[0],) + model.y_shape)
    if model.y_mean is not None:
        y = y + model.y_mean
    return y


def predict_hopls2(
    model: Hopls2Model, x_new, n_components: int | None = None
) -> np.ndarray:
    """Predict a matrix response: ``X_(0) W D Q^T`` plus the training mean."""
    x_new = astensor(x_new)
    if x_new.ndim != len(model.x_shape) + 1:
        raise ShapeMismatchError("new data has wrong order")
    _check_new_x(model.x_shape, x_new)
    r = model.n_components if n_components is None else min(n_components, model.n_components)
    if model.x_mean is not None:
        x_new = x_new - model.x_mean
    if r == 0:
        y = np.zeros((x_new.shape[0], model.n_responses))
    else:
        scores = matricize(x_new, 0) @ model.x_weights[:, :r]
        y = (scores * model.coefs[:r]) @ model.y_loadings[:, :r].T
    if model.y_mean is not None:
        y = y + model.y_mean
    return y


def predict_pls(
    model: PlsModel, x_new, n_components: int | None = None
) -> np.ndarray:
    """Predict with the two-way model; scores are recovered sequentially."""
    x_new = as_matrix(x_new)
    if x_new.shape[1] != model.x_weights.shape[0]:
        raise ShapeMismatchError(
            f"new data has {x_new.shape[1]} features, expected {model.x_weights.shape[0]}"
        )
    r = model.n_components if n_components is None else min(n_components, model.n_components)
    e = x_new - model.x_mean if model.x_mean is not None else x_new.copy()
    y = np.zeros((x_new.shape[0], model.y_loadings.shape[0]))
    for j in range(r):
        t = e @ model.x_weights[:, j]
        e = e - np.outer(t, model.x_loadings[:, j])
        y += model.coefs[j] * np.outer(t, model.y_loadings[:, j])
    if model.y_mean is not None:
        y = y + model.y_mean
    return y
