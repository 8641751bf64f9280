"""Reference prices: Black-Scholes, corridor, Bjerksund-Stensland (1993) and a binomial tree."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.special import erfc

from mpdata_pricing.errors import ConfigurationError

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class AnalyticInputs:
    S0: float
    K: float
    r: float
    sigma: float
    T: float

    def __post_init__(self):
        for name in ("S0", "K", "sigma", "T"):
            value = np.asarray(getattr(self, name), dtype=float)
            if not np.all(value > 0):
                raise ConfigurationError(f"{name} must be positive, got {getattr(self, name)}")
        if not math.isfinite(self.r):
            raise ConfigurationError(f"r must be finite, got {self.r}")


def norm_cdf(x):
    return 0.5 * erfc(-np.asarray(x, dtype=float) / SQRT2)


def generalized_bs_call(S, K, T, r, b, sigma):
    """European call with cost of carry b (b = r for a non-dividend stock)."""
    S = np.asarray(S, dtype=float)
    K = np.asarray(K, dtype=float)
    vol = sigma * math.sqrt(T)
    d1 = (np.log(S / K) + (b + 0.5 * sigma ** 2) * T) / vol
    d2 = d1 - vol
    return S * math.exp((b - r) * T) * norm_cdf(d1) - K * math.exp(-r * T) * norm_cdf(d2)


def bs_call(inputs: AnalyticInputs):
    return generalized_bs_call(inputs.S0, inputs.K, inputs.T, inputs.r, inputs.r, inputs.sigma)


def bs_put(inputs: AnalyticInputs):
    return bs_call(inputs) - inputs.S0 + inputs.K * math.exp(-inputs.r * inputs.T)


def corridor_value(S0, K1, K2, r, sigma, T):
    if K2 < K1:
        raise ConfigurationError(f"corridor needs K2 >= K1, got K1={K1}, K2={K2}")
    lower = bs_call(AnalyticInputs(S0, K1, r, sigma, T))
    upper = bs_call(AnalyticInputs(S0, K2, r, sigma, T))
    return lower - upper


def _phi(S, T, gamma, H, I, r, b, sigma):
    vol = sigma * math.sqrt(T)
    lam = (-r + gamma * b + 0.5 * gamma * (gamma - 1) * sigma ** 2) * T
    d = -(np.log(S / H) + (b + (gamma - 0.5) * sigma ** 2) * T) / vol
    kappa = 2 * b / sigma ** 2 + (2 * gamma - 1)
    return np.exp(lam) * S ** gamma * (norm_cdf(d) - (I / S) ** kappa * norm_cdf(d - 2 * np.log(I / S) / vol))


def bjerksund_stensland_call(S, K, T, r, b, sigma):
    """Flat-boundary approximation of the American call value.

    With b >= r early exercise is never optimal and the European value is
    returned. S and K may be arrays (the put duality swaps them).
    """
    if b >= r:
        return generalized_bs_call(S, K, T, r, b, sigma)

    S = np.asarray(S, dtype=float)
    K = np.asarray(K, dtype=float)
    s2 = sigma ** 2
    beta = (0.5 - b / s2) + math.sqrt((b / s2 - 0.5) ** 2 + 2 * r / s2)
    b_infinity = beta / (beta - 1) * K
    b_zero = np.maximum(K, r / (r - b) * K)
    h = -(b * T + 2 * sigma * math.sqrt(T)) * b_zero / (b_infinity - b_zero)
    trigger = b_zero + (b_infinity - b_zero) * (1 - np.exp(h))
    alpha = (trigger - K) * trigger ** (-beta)

    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        continuation = (
            alpha * S ** beta
            - alpha * _phi(S, T, beta, trigger, trigger, r, b, sigma)
            + _phi(S, T, 1, trigger, trigger, r, b, sigma)
            - _phi(S, T, 1, K, trigger, r, b, sigma)
            - K * _phi(S, T, 0, trigger, trigger, r, b, sigma)
            + K * _phi(S, T, 0, K, trigger, r, b, sigma)
        )
    value = np.where(S >= trigger, S - K, continuation)
    return value.item() if value.ndim == 0 else value


def bjerksund_stensland_put(inputs: AnalyticInputs):
    # put-call transformation: P(S, K, T, r, b) = C(K, S, T, r - b, -b), here b = r
    return bjerksund_stensland_call(inputs.K, inputs.S0, inputs.T, 0.0, -inputs.r, inputs.sigma)


def binomial_american_put(inputs: AnalyticInputs, n_steps: int, american: bool = True) -> float:
    """Cox-Ross-Rubinstein tree, optionally with early exercise at every node."""
    if int(n_steps) != n_steps or n_steps < 1:
        raise ConfigurationError(f"n_steps must be an integer >= 1, got {n_steps}")
    dt = inputs.T / n_steps
    up = math.exp(inputs.sigma * math.sqrt(dt))
    down = 1 / up
    growth = math.exp(inputs.r * dt)
    p = (growth - down) / (up - down)
    if not (math.isfinite(up) and up > down and 0 < p < 1):
        raise ConfigurationError(f"{n_steps} steps give a degenerate tree (p={p})")
    discount = 1 / growth

    # node j has j down-moves
    j = np.arange(n_steps + 1)
    spots = inputs.S0 * up ** (n_steps - 2 * j)
    values = np.maximum(inputs.K - spots, 0.0)
    for step in range(n_steps - 1, -1, -1):
        values = discount * (p * values[:-1] + (1 - p) * values[1:])
        if american:
            spots = inputs.S0 * up ** (step - 2 * j[:step + 1])
            values = np.maximum(values, inputs.K - spots)
    return float(values[0])


AMERICAN_PUT_REFERENCE = (
    # T, S0, f at C~0.005, BS93, European
    (0.25, 80, 19.998, 20.000, 18.089),
    (0.25, 90, 10.036, 10.011, 9.045),
    (0.25, 100, 3.229, 3.162, 3.037),
    (0.25, 110, 0.667, 0.649, 0.640),
    (0.25, 120, 0.089, 0.087, 0.086),
    (0.50, 80, 20.001, 20.000, 16.648),
    (0.50, 90, 10.290, 10.240, 8.834),
    (0.50, 100, 4.193, 4.109, 3.785),
    (0.50, 110, 1.412, 1.372, 1.312),
    (0.50, 120, 0.398, 0.385, 0.376),
    (3.00, 80, 19.998, 20.000, 10.253),
    (3.00, 90, 11.696, 11.668, 6.783),
    (3.00, 100, 6.931, 6.896, 4.406),
    (3.00, 110, 4.154, 4.118, 2.826),
    (3.00, 120, 2.510, 2.478, 1.797),
)

AMERICAN_PUT_MARKET = {"K": 100.0, "r": 0.08, "sigma": 0.2}


def american_put_reference() -> pd.DataFrame:
    """Published American-put prices (K=100, r=0.08, sigma=0.2)."""
    return pd.DataFrame(AMERICAN_PUT_REFERENCE, columns=["T", "S0", "numeric", "bs93", "european"])
