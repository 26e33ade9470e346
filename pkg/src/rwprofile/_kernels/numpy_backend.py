"""Pure-numpy kernel implementations (reference semantics for the numba twin)."""

from __future__ import annotations

import math

import numpy as np


def bin_counts(bin_idx, api_idx, n_bins, n_apis):
    """Accumulate a [n_bins, n_apis] float64 count matrix."""
    if n_bins == 0 or n_apis == 0:
        return np.zeros((n_bins, n_apis), dtype=np.float64)
    flat = bin_idx.astype(np.int64) * n_apis + api_idx
    counts = np.bincount(flat, minlength=n_bins * n_apis)
    return counts.reshape(n_bins, n_apis).astype(np.float64)


def sliding_scores(counts, n_prev, n_curr, prev_len, curr_len, metric_id, weights):
    """Consistency score for every frame position of the sliding window.

    ``counts`` is the per-bin count matrix; a frame at position p compares
    the rate vector of bins [p, p+n_prev) against bins [p+n_prev, p+n_prev+n_curr).
    Returns (scores, valid). Invalid positions are skipped window pairs:
    both windows all-zero for the distance metrics, either window all-zero
    for the cosine metric (undefined there).
    """
    T, K = counts.shape
    frame = n_prev + n_curr
    n_pos = T - frame + 1
    if n_pos <= 0:
        return np.empty(0, np.float64), np.empty(0, np.bool_)
    cum = np.vstack([np.zeros((1, K)), np.cumsum(counts, axis=0)])
    prev = (cum[n_prev:n_prev + n_pos] - cum[0:n_pos]) / prev_len
    curr = (cum[frame:frame + n_pos] - cum[n_prev:n_prev + n_pos]) / curr_len
    prev_zero = prev.sum(axis=1) == 0.0
    curr_zero = curr.sum(axis=1) == 0.0

    scores = np.zeros(n_pos, np.float64)
    if metric_id == 0:  # cosine
        valid = ~(prev_zero | curr_zero)
        dot = (prev * curr).sum(axis=1)
        norm = np.sqrt((prev * prev).sum(axis=1) * (curr * curr).sum(axis=1))
        with np.errstate(invalid="ignore", divide="ignore"):
            sim = np.where(norm > 0, dot / norm, 0.0)
        scores = np.maximum(1.0 - sim, 0.0)
    else:
        valid = ~(prev_zero & curr_zero)
        diff = np.abs(curr - prev)
        if metric_id == 1:  # manhattan
            scores = diff.sum(axis=1)
        elif metric_id == 2:  # frequency-weighted manhattan
            scores = diff @ weights
        elif metric_id == 3:  # euclidean
            scores = np.sqrt((diff * diff).sum(axis=1))
        else:
            raise ValueError(f"unknown metric id {metric_id}")
    scores = np.where(valid, scores, np.nan)
    return scores, valid


def bocd_map(series, lam, mu0, kappa0, alpha0, beta0, keep_posterior):
    """Run-length recursion with a constant hazard and a normal observation
    model of unknown mean/variance (Student-t one-step predictive).

    Returns (map_run_lengths, posterior); ``posterior`` is the normalized
    run-length distribution per step (row t has t+2 live entries) when
    ``keep_posterior`` else an empty array. O(T^2) time.
    """
    T = series.shape[0]
    log_h = math.log(1.0 / lam)
    log_1mh = math.log(1.0 - 1.0 / lam)

    # lgamma ladder: LG[j] = lgamma(alpha0 + j/2); the predictive for run
    # length r needs lgamma(alpha_r + 1/2) - lgamma(alpha_r) = LG[r+1] - LG[r].
    lg = np.empty(T + 2, np.float64)
    for j in range(T + 2):
        lg[j] = math.lgamma(alpha0 + 0.5 * j)
    r_idx = np.arange(T + 1, dtype=np.float64)
    kappa_r = kappa0 + r_idx
    alpha_r = alpha0 + 0.5 * r_idx
    nu_r = 2.0 * alpha_r

    mu = np.empty(T + 1, np.float64)
    beta = np.empty(T + 1, np.float64)
    mu[0] = mu0
    beta[0] = beta0

    log_r = np.zeros(1, np.float64)
    map_rl = np.empty(T, np.int64)
    posterior = np.zeros((T, T + 1), np.float64) if keep_posterior \
        else np.empty((0, 0), np.float64)

    for t in range(T):
        x = series[t]
        n = t + 1  # live hypotheses: run lengths 0..t
        nu = nu_r[:n]
        scale2 = beta[:n] * (kappa_r[:n] + 1.0) / (alpha_r[:n] * kappa_r[:n])
        z2 = (x - mu[:n]) ** 2 / scale2
        logpred = (lg[1:n + 1] - lg[0:n]
                   - 0.5 * np.log(nu * math.pi * scale2)
                   - 0.5 * (nu + 1.0) * np.log1p(z2 / nu))

        joint = log_r + logpred
        new = np.empty(n + 1, np.float64)
        new[1:] = joint + log_1mh
        m = joint.max()
        new[0] = m + math.log(np.exp(joint - m).sum()) + log_h
        m = new.max()
        new -= m + math.log(np.exp(new - m).sum())
        log_r = new
        map_rl[t] = int(np.argmax(log_r))
        if keep_posterior:
            posterior[t, :n + 1] = np.exp(log_r)

        # posterior parameter update; both use the pre-update mu values
        new_beta = beta[:n] + kappa_r[:n] * (x - mu[:n]) ** 2 \
            / (2.0 * (kappa_r[:n] + 1.0))
        new_mu = (kappa_r[:n] * mu[:n] + x) / (kappa_r[:n] + 1.0)
        mu[1:n + 1] = new_mu
        beta[1:n + 1] = new_beta
        mu[0] = mu0
        beta[0] = beta0

    return map_rl, posterior
