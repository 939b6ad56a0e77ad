"""Simultaneous rank intervals from Tukey's honest significant difference."""

from __future__ import annotations

import numpy as np

from .core import Method, Observations, RankCiResult, build_result
from .errors import InvalidInput
from .studentized_range import DEFAULT_B, QuantileRequest, critical_value


def pair_scale(sigma) -> np.ndarray:
    """Matrix of sqrt(sigma_i^2 + sigma_j^2) (broadcasts over leading axes)."""
    s2 = np.asarray(sigma, dtype=float) ** 2
    return np.sqrt(s2[..., :, None] + s2[..., None, :])


def difference_cis(obs: Observations, q: float) -> tuple[np.ndarray, np.ndarray]:
    """Simultaneous intervals ``[a_ij, b_ij]`` for ``mu_i - mu_j`` (sorted order).

    The diagonal is set to ``[0, 0]`` and is never used for counting.
    """
    if q < 0:
        raise InvalidInput(f"critical value must be >= 0, got {q}")
    y = np.asarray(obs.y)
    diff = y[:, None] - y[None, :]
    half = pair_scale(obs.sigma) * q
    a, b = diff - half, diff + half
    np.fill_diagonal(a, 0.0)
    np.fill_diagonal(b, 0.0)
    return a, b


def rank_bounds(y, sigma, q) -> tuple[np.ndarray, np.ndarray]:
    """Lower and upper rank bounds for data ``y`` of shape ``(..., n)``.

    ``L_i = 1 + #{j: y_i - y_j - s_ij q > 0}`` and
    ``U_i = n - #{j: y_i - y_j + s_ij q < 0}``. Works in any item order; ``q``
    may be a scalar or broadcast against the leading axes.
    """
    y = np.asarray(y, dtype=float)
    n = y.shape[-1]
    diff = y[..., :, None] - y[..., None, :]
    half = pair_scale(sigma) * np.asarray(q, dtype=float)[..., None, None]
    lower = 1 + np.count_nonzero(diff - half > 0, axis=-1)
    upper = n - np.count_nonzero(diff + half < 0, axis=-1)
    return lower, upper


def tukey_rank_cis(
    obs: Observations,
    alpha: float,
    quantile_override: float | None = None,
    *,
    B: int = DEFAULT_B,
    seed: int = 0,
    quantile_method: str = "auto",
    alpha_nominal: float | None = None,
    workers: int | None = None,
) -> RankCiResult:
    """Joint ``1 - alpha`` intervals for the ranks of the means.

    ``quantile_override`` bypasses the quantile computation (the rescaler
    passes its own). ``alpha_nominal`` records the user's target level when
    ``alpha`` is a rescaled level.
    """
    if not 0 < alpha < 1:
        raise InvalidInput(f"alpha must lie in (0, 1), got {alpha}")
    if quantile_override is not None:
        if quantile_override < 0:
            raise InvalidInput("quantile_override must be >= 0")
        q = float(quantile_override)
    elif obs.n < 2:
        q = 0.0
    else:
        q = critical_value(QuantileRequest(tuple(obs.sigma), alpha, B, seed, quantile_method), workers)
    lower, upper = rank_bounds(obs.y, obs.sigma, q)
    return build_result(
        obs,
        lower,
        upper,
        method=Method.TUKEY,
        alpha_nominal=alpha if alpha_nominal is None else alpha_nominal,
        alpha_effective=alpha,
        seed=seed,
        quantile_used=q,
    )
