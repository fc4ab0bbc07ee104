"""Adaptive social learning over a network: discounted Bayesian updates,
geometric neighbor combination, and hard assignment.

Each agent keeps one soft belief vector on the state simplex. A network
round is: local update with the agent's own likelihood row (prior raised to
1 - sigma, so sigma trades accumulated evidence against adaptivity), then a
weighted geometric average with neighbors, then an argmax hard assignment.
All soft beliefs are floored at a small epsilon and renormalized so the
geometric combination stays finite.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigurationError, ModelError

DEFAULT_FLOOR = 1e-12
SIGMA_CAP = 0.99


def uniform_belief(num_states: int) -> np.ndarray:
    return np.full(num_states, 1.0 / num_states)


def floor_and_renormalize(probs: np.ndarray, floor: float = DEFAULT_FLOOR) -> np.ndarray:
    clipped = np.maximum(probs, floor)
    return clipped / clipped.sum()


def asl_local_update(prior: np.ndarray, likelihood_row: np.ndarray, sigma: float,
                     floor: float = DEFAULT_FLOOR) -> np.ndarray:
    """Discounted Bayes step: posterior(s) ~ L(s) * prior(s)**(1 - sigma).

    sigma = 0 is the plain Bayesian update; sigma = 1 discards the prior.
    The result is floored and renormalized.
    """
    prior = np.asarray(prior, dtype=float)
    lik = np.asarray(likelihood_row, dtype=float)
    if np.all(lik <= 0.0):
        raise ModelError("likelihood row is all zero; no state explains the observation")
    with np.errstate(divide="ignore"):
        log_prior = np.log(prior)
        # center the prior logs first so a uniform prior contributes exactly
        # zero for every sigma (the shift cancels in the normalization)
        logs = np.log(lik) + (1.0 - sigma) * (log_prior - log_prior.max())
    logs -= logs.max()
    post = np.exp(logs)
    post /= post.sum()
    return floor_and_renormalize(post, floor)


def geometric_combine(beliefs, weights) -> np.ndarray:
    """Weighted geometric mean of belief vectors, computed in the log domain.

    weights must be nonnegative and sum to 1; beliefs must be strictly
    positive (callers floor them first).
    """
    weights = np.asarray(weights, dtype=float)
    if abs(weights.sum() - 1.0) > 1e-9 or np.any(weights < 0):
        raise ConfigurationError("combination weights must be nonnegative and sum to 1")
    stacked = np.asarray(beliefs, dtype=float)
    logs = weights @ np.log(stacked)
    logs -= logs.max()
    out = np.exp(logs)
    return out / out.sum()


def hard_assign(soft: np.ndarray) -> np.ndarray:
    """Basis vector at the argmax; ties break toward the lowest state index."""
    soft = np.asarray(soft, dtype=float)
    out = np.zeros_like(soft)
    out[int(np.argmax(soft))] = 1.0
    return out


def network_belief_step(soft_beliefs, observations, env, combination, sigma,
                        floor: float = DEFAULT_FLOOR):
    """One synchronous belief round for all agents.

    All local updates complete before any combination reads them
    (double buffering), then each agent geometrically averages with column
    weights combination[:, k]. Returns (soft (K,S), hard (K,S)).
    """
    soft_beliefs = np.asarray(soft_beliefs, dtype=float)
    num_agents = soft_beliefs.shape[0]
    combination = np.asarray(combination, dtype=float)
    locals_ = np.stack([
        asl_local_update(soft_beliefs[k], env.likelihood_row(k, observations[k]), sigma, floor)
        for k in range(num_agents)
    ])
    soft_out = np.stack([
        floor_and_renormalize(geometric_combine(locals_, combination[:, k]), floor)
        for k in range(num_agents)
    ])
    hard_out = np.stack([hard_assign(soft_out[k]) for k in range(num_agents)])
    return soft_out, hard_out


def choose_sigma(drift: float, nu: float = 0.5) -> float:
    """Adaptivity exponent matched to the drift rate: nu / log(1/drift),
    clamped into (0, 0.99]."""
    if not 0.0 < drift < 1.0:
        raise ConfigurationError(f"drift must be in (0, 1), got {drift}")
    if nu <= 0.0:
        raise ConfigurationError(f"nu must be positive, got {nu}")
    return min(nu / math.log(1.0 / drift), SIGMA_CAP)


def empirical_error_probability(hard_states, true_states, window: int) -> np.ndarray:
    """Per-agent fraction of the trailing `window` steps whose hard estimate
    missed the true state.

    hard_states: (N, K) integer state estimates; true_states: (N,).
    """
    hard_states = np.asarray(hard_states)
    true_states = np.asarray(true_states)
    if hard_states.ndim == 1:
        hard_states = hard_states[:, None]
    n = hard_states.shape[0]
    if window <= 0:
        raise ConfigurationError("window must be positive")
    if n < window:
        raise ConfigurationError(f"trace length {n} shorter than window {window}")
    tail = hard_states[n - window:]
    truth = true_states[n - window:, None]
    return (tail != truth).mean(axis=0)


def belief_entropy(probs: np.ndarray) -> float:
    """Shannon entropy in nats; zero entries contribute zero."""
    p = np.asarray(probs, dtype=float)
    nz = p > 0
    return float(-(p[nz] * np.log(p[nz])).sum())
