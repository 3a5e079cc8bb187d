"""Shared numba kernels behind both the reference path and the fast engine.

Every numeric primitive (basis evaluation, Gaussian residual sum, history
recursion, the full chain step) has exactly one implementation here, so
the readable module-level operations and the jitted sampling engine stay
bit-identical; an equality test holds the two loops together.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

BASIS_CONSTANT = 0
BASIS_LINEAR = 1
BASIS_SPLINE = 2

LOG_2PI = math.log(2.0 * math.pi)
SD_NUMERATOR = 2.4**2  # classic random-walk scaling numerator

KIND_MOVE = 0
KIND_BIRTH = 1
KIND_DEATH = 2


@njit(cache=True)
def _bisect_right(arr, n, v):
    lo, hi = 0, n
    while lo < hi:
        mid = (lo + hi) // 2
        if v < arr[mid]:
            hi = mid
        else:
            lo = mid + 1
    return lo


@njit(cache=True)
def natural_spline_moments(xk, yk, n, mo):
    """Second derivatives of the natural cubic spline, Thomas algorithm.

    Fills mo[:n]; zero end conditions. The system is diagonally dominant,
    so elimination without pivoting is stable.
    """
    mo[0] = 0.0
    mo[n - 1] = 0.0
    m = n - 2
    if m <= 0:
        return
    cp = np.empty(m)
    dp = np.empty(m)
    h0 = xk[1] - xk[0]
    h1 = xk[2] - xk[1]
    b = (h0 + h1) / 3.0
    d = (yk[2] - yk[1]) / h1 - (yk[1] - yk[0]) / h0
    cp[0] = (h1 / 6.0) / b
    dp[0] = d / b
    for j in range(1, m):
        hj = xk[j + 1] - xk[j]
        hj1 = xk[j + 2] - xk[j + 1]
        a = hj / 6.0
        b = (hj + hj1) / 3.0
        c = hj1 / 6.0
        d = (yk[j + 2] - yk[j + 1]) / hj1 - (yk[j + 1] - yk[j]) / hj
        den = b - a * cp[j - 1]
        cp[j] = c / den
        dp[j] = (d - a * dp[j - 1]) / den
    mo[m] = dp[m - 1]
    for j in range(m - 2, -1, -1):
        mo[j + 1] = dp[j] - cp[j] * mo[j + 2]


@njit(cache=True)
def eval_curve(basis_id, xk, yk, mo, n, q, out):
    """Evaluate the knot curve at arbitrary query points.

    Piecewise constant takes the left knot's value with the final knot
    exact at the right endpoint; linear and natural-spline segments are
    closed-form per segment.
    """
    for i in range(q.size):
        v = q[i]
        seg = _bisect_right(xk, n, v) - 1
        if basis_id == BASIS_CONSTANT:
            if seg < 0:
                seg = 0
            elif seg > n - 1:
                seg = n - 1
            out[i] = yk[seg]
            continue
        if seg < 0:
            seg = 0
        elif seg > n - 2:
            seg = n - 2
        h = xk[seg + 1] - xk[seg]
        if basis_id == BASIS_LINEAR:
            out[i] = yk[seg] + (v - xk[seg]) / h * (yk[seg + 1] - yk[seg])
        else:
            a = (xk[seg + 1] - v) / h
            b = (v - xk[seg]) / h
            out[i] = (
                a * yk[seg]
                + b * yk[seg + 1]
                + ((a**3 - a) * mo[seg] + (b**3 - b) * mo[seg + 1]) * h**2 / 6.0
            )


@njit(cache=True)
def curve_on_grid_kernel(basis_id, knot_idx, xk, yk, mo, n, grid_coords, out):
    """Grid evaluation with occupied sites pinned to their stored values."""
    eval_curve(basis_id, xk, yk, mo, n, grid_coords, out)
    for j in range(n):
        out[knot_idx[j]] = yk[j]


@njit(cache=True)
def residual_sumsq(pred, d):
    s = 0.0
    for i in range(d.size):
        r = d[i] - pred[i]
        s += r * r
    return s


@njit(cache=True)
def sumsq(x):
    s = 0.0
    for i in range(x.size):
        s += x[i] * x[i]
    return s


@njit(cache=True)
def log_prior_kernel(n, vals, a_min, a_max, log_count_table, log_loc_table, log_a_range):
    """Tabled count and location terms plus the uniform value box."""
    if n >= log_count_table.size:
        return -np.inf
    base = log_count_table[n] + log_loc_table[n]
    if base == -np.inf:
        return -np.inf
    for i in range(n):
        if vals[i] < a_min or vals[i] > a_max:
            return -np.inf
    return base - n * log_a_range


@njit(cache=True)
def batch_mean_cov(samples, mean_out, cov_out):
    """Batch mean and unbiased covariance of stacked history rows.

    Plain accumulation loops keep the result independent of buffer
    alignment, unlike BLAS-backed matrix products.
    """
    t0, ng = samples.shape
    for j in range(ng):
        s = 0.0
        for t in range(t0):
            s += samples[t, j]
        mean_out[j] = s / t0
    for i in range(ng):
        for j in range(i, ng):
            s = 0.0
            for t in range(t0):
                s += (samples[t, i] - mean_out[i]) * (samples[t, j] - mean_out[j])
            v = s / (t0 - 1)
            cov_out[i, j] = v
            cov_out[j, i] = v


@njit(cache=True)
def update_history_kernel(cov, mean, curve, t, track_drift):
    """One covariance/mean recursion step; both use the pre-update mean.

    Returns the max-abs covariance change when drift tracking is on. The
    untracked loop is branch-free so it vectorizes; per-entry arithmetic
    is identical either way.
    """
    t1 = t + 1
    ng = mean.size
    drift = 0.0
    if track_drift:
        for i in range(ng):
            dev_i = curve[i] - mean[i]
            for j in range(ng):
                upd = (dev_i * (curve[j] - mean[j]) - cov[i, j]) / t1
                cov[i, j] += upd
                a = abs(upd)
                if a > drift:
                    drift = a
    else:
        for i in range(ng):
            dev_i = curve[i] - mean[i]
            for j in range(ng):
                cov[i, j] += (dev_i * (curve[j] - mean[j]) - cov[i, j]) / t1
    for i in range(ng):
        mean[i] += (curve[i] - mean[i]) / t1
    return drift


@njit(cache=True)
def _log_normal_pdf(x, mu, var):
    return -0.5 * (LOG_2PI + math.log(var)) - (x - mu) ** 2 / (2.0 * var)


@njit(cache=True)
def _chol_lower(a, L):
    """Unblocked lower Cholesky; returns False on a nonpositive pivot.

    Plain loops keep the factor independent of buffer alignment, unlike
    LAPACK's blocked kernels, so both sampling loops agree bitwise.
    """
    n = a.shape[0]
    for i in range(n):
        for j in range(n):
            L[i, j] = 0.0
    for j in range(n):
        s = a[j, j]
        for k in range(j):
            s -= L[j, k] * L[j, k]
        if not s > 0.0:
            return False
        L[j, j] = math.sqrt(s)
        for i in range(j + 1, n):
            t = a[i, j]
            for k in range(j):
                t -= L[i, k] * L[j, k]
            L[i, j] = t / L[j, j]
    return True


@njit(cache=True)
def chol_with_jitter(a, L):
    """Cholesky with a single diagonal-jitter retry; mutates ``a`` on retry.

    Returns 0 on success, 1 when the jitter fallback was needed, -1 when
    the matrix is not positive definite even with the jitter.
    """
    if _chol_lower(a, L):
        return 0
    n = a.shape[0]
    tr = 0.0
    for i in range(n):
        tr += a[i, i]
    jit = 1e-8 * tr / n
    for i in range(n):
        a[i, i] += jit
    if _chol_lower(a, L):
        return 1
    return -1


@njit(cache=True)
def matvec(m, v, out):
    for i in range(m.shape[0]):
        s = 0.0
        for j in range(m.shape[1]):
            s += m[i, j] * v[j]
        out[i] = s


@njit(cache=True)
def chain_step_kernel(
    rng,
    # mutable chain state
    knot_idx,  # i8[ng] buffer, first n entries valid, sorted
    knot_val,  # f8[ng]
    curve,  # f8[ng] current grid curve, kept fresh
    state_f,  # f8[3]: log_lik, log_prior, log_sc
    state_i,  # i8[3]: n, move_counter, history_t
    cov,  # f8[ng, ng] adaptation history (zeros until adapting)
    mean_hist,  # f8[ng]
    # scratch buffers
    xk, yk, cand_idx, cand_val, cand_mo, pred,
    # problem constants
    basis_id, grid_coords, data_x, data_d, two_var, ll_const,
    log_count_table, log_loc_table, log_a_range, a_min, a_max,
    # proposal configuration
    adapting,  # 0/1
    eps, target_accept, gamma_exponent, sc_lo, sc_hi,
    conv_sigma_b2, conv_move_base,  # conventional: sigma const; move diag (SD/n)*base
    temperature,
    track_drift,  # 0/1
):
    """One kernel step for one chain, mutating the state arrays in place.

    Returns (kind, accepted, log_alpha, drift, dlog_sc). RNG consumption
    matches the module-level operations exactly: kind draw, proposal
    draws, then one uniform for the accept decision, which is skipped for
    blocked or zero-prior proposals.
    """
    ng = grid_coords.size
    n = state_i[0]
    ll_cur = state_f[0]
    lp_cur = state_f[1]

    kind = rng.integers(0, 3)
    accepted = 0
    log_alpha = -np.inf
    drift = 0.0
    dlog_sc = 0.0

    n_cand = n
    blocked = False
    log_fwd = 0.0
    log_rev = 0.0

    if kind == KIND_MOVE:
        cm = np.empty((n, n))
        if adapting == 1:
            scale = math.exp(state_f[2]) * (SD_NUMERATOR / n)
            for i in range(n):
                for j in range(n):
                    cm[i, j] = cov[knot_idx[i], knot_idx[j]]
                cm[i, i] += eps
            for i in range(n):
                for j in range(n):
                    cm[i, j] *= scale
        else:
            f = (SD_NUMERATOR / n) * conv_move_base
            for i in range(n):
                for j in range(n):
                    cm[i, j] = 0.0
                cm[i, i] = f
        chol = np.empty((n, n))
        if chol_with_jitter(cm, chol) < 0:
            raise ValueError("move covariance is not positive definite")
        z = rng.standard_normal(n)
        step = np.empty(n)
        matvec(chol, z, step)
        for i in range(n):
            cand_idx[i] = knot_idx[i]
            cand_val[i] = knot_val[i] + step[i]
        n_cand = n
    elif kind == KIND_BIRTH:
        n_free = ng - n
        if n_free == 0:
            blocked = True
        else:
            r = rng.integers(0, n_free)
            site = -1
            k = 0
            seen = 0
            for g in range(ng):
                if k < n and knot_idx[k] == g:
                    k += 1
                    continue
                if seen == r:
                    site = g
                    break
                seen += 1
            a_p = curve[site]
            if adapting == 1:
                sig = SD_NUMERATOR * (cov[site, site] + eps)
            else:
                sig = conv_sigma_b2
            a_b = a_p + math.sqrt(sig) * rng.standard_normal()
            pos = 0
            while pos < n and knot_idx[pos] < site:
                pos += 1
            for i in range(pos):
                cand_idx[i] = knot_idx[i]
                cand_val[i] = knot_val[i]
            cand_idx[pos] = site
            cand_val[pos] = a_b
            for i in range(pos, n):
                cand_idx[i + 1] = knot_idx[i]
                cand_val[i + 1] = knot_val[i]
            n_cand = n + 1
            log_fwd = -math.log(n_free) + _log_normal_pdf(a_b, a_p, sig)
            log_rev = -math.log(n_cand - 2)
    else:
        if n == 2:
            blocked = True
        else:
            pick = 1 + rng.integers(0, n - 2)
            site = knot_idx[pick]
            deleted = knot_val[pick]
            for i in range(pick):
                cand_idx[i] = knot_idx[i]
                cand_val[i] = knot_val[i]
            for i in range(pick + 1, n):
                cand_idx[i - 1] = knot_idx[i]
                cand_val[i - 1] = knot_val[i]
            n_cand = n - 1
            for i in range(n_cand):
                xk[i] = grid_coords[cand_idx[i]]
                yk[i] = cand_val[i]
            if basis_id == BASIS_SPLINE:
                natural_spline_moments(xk, yk, n_cand, cand_mo)
            point = np.empty(1)
            point[0] = grid_coords[site]
            value = np.empty(1)
            eval_curve(basis_id, xk, yk, cand_mo, n_cand, point, value)
            a_p_after = value[0]
            if adapting == 1:
                sig = SD_NUMERATOR * (cov[site, site] + eps)
            else:
                sig = conv_sigma_b2
            log_fwd = -math.log(n - 2)
            log_rev = -math.log(ng - n_cand) + _log_normal_pdf(deleted, a_p_after, sig)

    if not blocked:
        lp_cand = log_prior_kernel(
            n_cand, cand_val, a_min, a_max, log_count_table, log_loc_table, log_a_range
        )
        if lp_cand > -np.inf:
            for i in range(n_cand):
                xk[i] = grid_coords[cand_idx[i]]
                yk[i] = cand_val[i]
            if basis_id == BASIS_SPLINE:
                natural_spline_moments(xk, yk, n_cand, cand_mo)
            eval_curve(basis_id, xk, yk, cand_mo, n_cand, data_x, pred)
            ll_cand = ll_const - residual_sumsq(pred, data_d) / two_var
            raw = temperature * (ll_cand - ll_cur) + (lp_cand - lp_cur) + log_rev - log_fwd
            log_alpha = min(0.0, raw)
            if rng.random() < math.exp(log_alpha):
                accepted = 1
                for i in range(n_cand):
                    knot_idx[i] = cand_idx[i]
                    knot_val[i] = cand_val[i]
                state_i[0] = n_cand
                state_f[0] = ll_cand
                state_f[1] = lp_cand
                curve_on_grid_kernel(
                    basis_id, cand_idx, xk, yk, cand_mo, n_cand, grid_coords, curve
                )

    if adapting == 1:
        if kind == KIND_MOVE:
            state_i[1] += 1
            gamma = state_i[1] ** (-gamma_exponent)
            before = state_f[2]
            shifted = before + gamma * (math.exp(log_alpha) - target_accept)
            state_f[2] = min(max(shifted, sc_lo), sc_hi)
            dlog_sc = state_f[2] - before
        drift = update_history_kernel(cov, mean_hist, curve, state_i[2], track_drift == 1)
        state_i[2] += 1

    return kind, accepted, log_alpha, drift, dlog_sc


@njit(cache=True)
def sweep_block_kernel(
    rngs,  # uniform tuple of per-chain Generators
    swap_rng,
    knot_idx, knot_val, curve, state_f, state_i, cov, mean_hist,  # stacked per chain
    xk, yk, cand_idx, cand_val, cand_mo, pred,
    basis_id, grid_coords, data_x, data_d, two_var, ll_const,
    log_count_table, log_loc_table, log_a_range, a_min, a_max,
    adapting, eps, target_accept, gamma_exponent, sc_lo, sc_hi,
    conv_sigma_b2, conv_move_base,
    temps, swap_attempts, swap_accepts,
    t_start, n_block, thin,
    rec_steps, rec_curves, rec_n, rec_ll,
    history, collecting,  # (T, t0, ng) buffer, filled while collecting == 1
    att, acc,  # chain-0 per-kind counters, indexed by kind id
):
    """A block of sweeps with swap rounds and thinned recording inline.

    Calls chain_step_kernel per chain exactly as the per-step driver does,
    so block execution is bit-identical to stepwise execution; it only
    amortizes the call overhead.
    """
    n_chains = len(rngs)
    for s in range(n_block):
        t = t_start + s + 1
        for c in range(n_chains):
            kind, accepted, _, _, _ = chain_step_kernel(
                rngs[c],
                knot_idx[c], knot_val[c], curve[c], state_f[c], state_i[c],
                cov[c], mean_hist[c],
                xk[c], yk[c], cand_idx[c], cand_val[c], cand_mo[c], pred[c],
                basis_id, grid_coords, data_x, data_d, two_var, ll_const,
                log_count_table, log_loc_table, log_a_range, a_min, a_max,
                adapting, eps, target_accept, gamma_exponent, sc_lo, sc_hi,
                conv_sigma_b2, conv_move_base,
                temps[c], 0,
            )
            if c == 0:
                att[kind] += 1
                acc[kind] += accepted
            if collecting == 1:
                for j in range(grid_coords.size):
                    history[c, t - 1, j] = curve[c, j]
        parity = (t - 1) % 2
        for i in range(parity, n_chains - 1, 2):
            log_alpha = min(0.0, (temps[i] - temps[i + 1]) * (state_f[i + 1, 0] - state_f[i, 0]))
            swap_attempts[i] += 1
            if swap_rng.random() < math.exp(log_alpha):
                swap_accepts[i] += 1
                for j in range(grid_coords.size):
                    tmp_i = knot_idx[i, j]
                    knot_idx[i, j] = knot_idx[i + 1, j]
                    knot_idx[i + 1, j] = tmp_i
                    tmp_f = knot_val[i, j]
                    knot_val[i, j] = knot_val[i + 1, j]
                    knot_val[i + 1, j] = tmp_f
                    tmp_c = curve[i, j]
                    curve[i, j] = curve[i + 1, j]
                    curve[i + 1, j] = tmp_c
                for col in range(2):
                    tmp = state_f[i, col]
                    state_f[i, col] = state_f[i + 1, col]
                    state_f[i + 1, col] = tmp
                tmp_n = state_i[i, 0]
                state_i[i, 0] = state_i[i + 1, 0]
                state_i[i + 1, 0] = tmp_n
        if t % thin == 0:
            r = t // thin - 1
            rec_steps[r] = t
            for j in range(grid_coords.size):
                rec_curves[r, j] = curve[0, j]
            rec_n[r] = state_i[0, 0]
            rec_ll[r] = state_f[0, 0]
