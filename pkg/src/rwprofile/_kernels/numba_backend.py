"""JIT-compiled kernel implementations. Semantics mirror numpy_backend."""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True, nogil=True, fastmath=True)
def bin_counts(bin_idx, api_idx, n_bins, n_apis):
    out = np.zeros((n_bins, n_apis), dtype=np.float64)
    for i in range(bin_idx.shape[0]):
        out[bin_idx[i], api_idx[i]] += 1.0
    return out


@njit(cache=True, nogil=True, fastmath=True)
def sliding_scores(counts, n_prev, n_curr, prev_len, curr_len, metric_id, weights):
    T, K = counts.shape
    frame = n_prev + n_curr
    n_pos = T - frame + 1
    if n_pos <= 0:
        return np.empty(0, np.float64), np.empty(0, np.bool_)
    scores = np.full(n_pos, np.nan)
    valid = np.zeros(n_pos, np.bool_)
    prev = np.empty(K, np.float64)
    curr = np.empty(K, np.float64)
    for p in range(n_pos):
        prev_sum = 0.0
        curr_sum = 0.0
        for k in range(K):
            s = 0.0
            for b in range(p, p + n_prev):
                s += counts[b, k]
            prev[k] = s / prev_len
            prev_sum += prev[k]
            s = 0.0
            for b in range(p + n_prev, p + frame):
                s += counts[b, k]
            curr[k] = s / curr_len
            curr_sum += curr[k]
        if metric_id == 0:
            if prev_sum == 0.0 or curr_sum == 0.0:
                continue
            dot = 0.0
            np2 = 0.0
            nc2 = 0.0
            for k in range(K):
                dot += prev[k] * curr[k]
                np2 += prev[k] * prev[k]
                nc2 += curr[k] * curr[k]
            sim = dot / math.sqrt(np2 * nc2)
            v = 1.0 - sim
            scores[p] = v if v > 0.0 else 0.0
        else:
            if prev_sum == 0.0 and curr_sum == 0.0:
                continue
            if metric_id == 1:
                acc = 0.0
                for k in range(K):
                    acc += abs(curr[k] - prev[k])
                scores[p] = acc
            elif metric_id == 2:
                acc = 0.0
                for k in range(K):
                    acc += weights[k] * abs(curr[k] - prev[k])
                scores[p] = acc
            else:
                acc = 0.0
                for k in range(K):
                    d = curr[k] - prev[k]
                    acc += d * d
                scores[p] = math.sqrt(acc)
        valid[p] = True
    return scores, valid


@njit(cache=True, nogil=True)
def bocd_map(series, lam, mu0, kappa0, alpha0, beta0, keep_posterior):
    T = series.shape[0]
    log_h = math.log(1.0 / lam)
    log_1mh = math.log(1.0 - 1.0 / lam)

    lg = np.empty(T + 2, np.float64)
    for j in range(T + 2):
        lg[j] = math.lgamma(alpha0 + 0.5 * j)

    mu = np.empty(T + 1, np.float64)
    beta = np.empty(T + 1, np.float64)
    mu[0] = mu0
    beta[0] = beta0

    log_r = np.zeros(T + 1, np.float64)
    new = np.empty(T + 1, np.float64)
    joint = np.empty(T + 1, np.float64)
    map_rl = np.empty(T, np.int64)
    if keep_posterior:
        posterior = np.zeros((T, T + 1), np.float64)
    else:
        posterior = np.zeros((0, 0), np.float64)

    for t in range(T):
        x = series[t]
        n = t + 1
        m = -np.inf
        for r in range(n):
            kap = kappa0 + r
            alp = alpha0 + 0.5 * r
            nu = 2.0 * alp
            scale2 = beta[r] * (kap + 1.0) / (alp * kap)
            z2 = (x - mu[r]) * (x - mu[r]) / scale2
            logpred = (lg[r + 1] - lg[r]
                       - 0.5 * math.log(nu * math.pi * scale2)
                       - 0.5 * (nu + 1.0) * math.log1p(z2 / nu))
            joint[r] = log_r[r] + logpred
            if joint[r] > m:
                m = joint[r]
        acc = 0.0
        for r in range(n):
            acc += math.exp(joint[r] - m)
            new[r + 1] = joint[r] + log_1mh
        new[0] = m + math.log(acc) + log_h
        m = new[0]
        for r in range(1, n + 1):
            if new[r] > m:
                m = new[r]
        acc = 0.0
        for r in range(n + 1):
            acc += math.exp(new[r] - m)
        norm = m + math.log(acc)
        best = 0
        for r in range(n + 1):
            log_r[r] = new[r] - norm
            if log_r[r] > log_r[best]:
                best = r
        map_rl[t] = best
        if keep_posterior:
            for r in range(n + 1):
                posterior[t, r] = math.exp(log_r[r])

        # parameter update, in place from the tail so old values are read
        for r in range(n - 1, -1, -1):
            kap = kappa0 + r
            beta[r + 1] = beta[r] + kap * (x - mu[r]) * (x - mu[r]) \
                / (2.0 * (kap + 1.0))
            mu[r + 1] = (kap * mu[r] + x) / (kap + 1.0)
        mu[0] = mu0
        beta[0] = beta0

    return map_rl, posterior
