"""Numba-compiled hot loops.

Everything here takes an explicit ``np.random.Generator`` and mutates only its
own outputs, so kernels are safe to run concurrently with independent streams.
Kernels report failures through status codes (numba cannot format exception
messages at runtime); the public wrappers raise.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

# Status codes shared by kernels.
OK = -1  # anything >= 0 is the failing period index

_TRUNC = 0.64  # Devroye truncation point for the J*(1, z) proposal
_A_INV_SQRT2T = 0.8838834764831844  # 1/sqrt(2*TRUNC)
_SQRT_T_HALF = 0.5656854249492381  # sqrt(TRUNC/2)
_PI2_8 = math.pi * math.pi / 8.0
_LOG_PI_2 = math.log(math.pi / 2.0)
_PG_P_IG_AT_ZERO = 0.4223027567786595  # p/(p+q) for z = 0


# ---------------------------------------------------------------------------
# Polya-Gamma PG(1, z), Devroye's alternating-series method
# ---------------------------------------------------------------------------

@njit(cache=True)
def _pg_coef(n, x, logx):
    # nth coefficient of the alternating series bounding the J* density
    if x > _TRUNC:
        b = math.pi * (n + 0.5)
        return b * math.exp(-0.5 * x * b * b)
    a = n + 0.5
    return math.pi * a * math.exp(-1.5 * (_LOG_PI_2 + logx) - 2.0 * a * a / x)


@njit(cache=True)
def _pg_rtinvgauss(rng, z, z2, cap):
    # InverseGaussian(1/z, 1) restricted to (0, TRUNC); z >= 0
    it = 0
    if z < 1.5625:  # mean 1/z above the truncation point: squeeze scheme
        while it < cap:
            it += 1
            e1 = rng.exponential(1.0)
            e2 = rng.exponential(1.0)
            if e1 * e1 <= 3.125 * e2:  # 2/TRUNC
                x = _TRUNC / ((1.0 + _TRUNC * e1) * (1.0 + _TRUNC * e1))
                if z <= 0.0 or math.log(rng.random()) <= -0.5 * z2 * x:
                    return x
        return -1.0
    while it < cap:  # mean below TRUNC: draw IG until inside
        it += 1
        y = rng.standard_normal()
        y = y * y
        w = (z + 0.5 * y) / z2
        x = w - math.sqrt(abs(w * w - 1.0 / z2))
        if rng.random() * (1.0 + x * z) > 1.0:
            x = 1.0 / (x * z2)
        if x < _TRUNC:
            return x
    return -1.0


@njit(cache=True)
def _pg_jacobi_star(rng, z, z2, kk, p_igauss, cap):
    # One J*(1, z) draw; PG(1, z) = J*(1, z/2)/4 handled by the caller.
    it = 0
    while it < cap:
        it += 1
        if rng.random() < p_igauss:
            x = _pg_rtinvgauss(rng, z, z2, cap)
            if x < 0.0:
                return -1.0
        else:
            x = _TRUNC + rng.exponential(1.0) / kk
        logx = math.log(x)
        s = _pg_coef(0, x, logx)
        u = rng.random() * s
        n = 0
        while True:
            n += 1
            if n % 2 == 1:
                s -= _pg_coef(n, x, logx)
                if u <= s:
                    return x
            else:
                s += _pg_coef(n, x, logx)
                if u > s:
                    break
    return -1.0


@njit(cache=True)
def pg_draw_one(rng, b, z, cap):
    """PG(b, z) for integer b >= 1 as a sum of b independent J* draws."""
    zh = 0.5 * abs(z)
    z2 = zh * zh
    kk = _PI2_8 + 0.5 * z2
    if zh > 0.0:
        ez = math.exp(zh)
        p = math.erfc(_A_INV_SQRT2T - zh * _SQRT_T_HALF) / ez \
            + math.erfc(_A_INV_SQRT2T + zh * _SQRT_T_HALF) * ez
        q = 0.5 * math.pi * math.exp(-kk * _TRUNC) / kk
        p_igauss = p / (p + q)
    else:
        p_igauss = _PG_P_IG_AT_ZERO
    total = 0.0
    for _ in range(b):
        x = _pg_jacobi_star(rng, zh, z2, kk, p_igauss, cap)
        if x < 0.0:
            return -1.0
        total += x
    return 0.25 * total


@njit(cache=True)
def pg_draw_vector(rng, z, cap, out):
    """Fill ``out`` with PG(1, z[i]) draws. Returns OK or the failing index."""
    for i in range(z.shape[0]):
        x = pg_draw_one(rng, 1, z[i], cap)
        if x < 0.0:
            return i
        out[i] = x
    return OK


# ---------------------------------------------------------------------------
# GIG(1/2, chi, psi) via the inverse-Gaussian reduction
# ---------------------------------------------------------------------------

@njit(cache=True)
def gig_half_draw(rng, chi, psi):
    """One GIG(1/2, chi, psi) draw; chi >= 0, psi > 0.

    X ~ GIG(1/2, chi, psi) is 1/Y for Y ~ InverseGaussian(sqrt(psi/chi), psi).
    For chi*psi below 1e-12 the chi/x term is numerically irrelevant and the
    exact Gamma(1/2, psi/2) limit is used instead (also avoids catastrophic
    cancellation in the IG draw when the IG mean explodes).
    """
    if chi * psi < 1e-12:
        g = rng.gamma(0.5, 2.0 / psi)
        if g <= 0.0:
            g = 1e-300
        return g
    mu = math.sqrt(psi / chi)
    y = rng.standard_normal()
    y = y * y
    x1 = mu + 0.5 * mu * mu * y / psi \
        - (0.5 * mu / psi) * math.sqrt(4.0 * mu * psi * y + mu * mu * y * y)
    if x1 <= 0.0:
        x1 = 1e-300
    if rng.random() <= mu / (mu + x1):
        out = 1.0 / x1
    else:
        out = x1 / (mu * mu)
    if out <= 0.0 or not math.isfinite(out):
        out = 1e-300
    return out


@njit(cache=True)
def gig_half_vector(rng, chi, psi, out):
    for t in range(chi.shape[0]):
        out[t] = gig_half_draw(rng, chi[t], psi[t])


# ---------------------------------------------------------------------------
# Small dense Cholesky with a jitter ladder (K is tiny)
# ---------------------------------------------------------------------------

@njit(cache=True)
def _chol_inplace(a, lo):
    # Returns True on success; lo receives the lower factor.
    k = a.shape[0]
    for i in range(k):
        for j in range(i + 1):
            s = a[i, j]
            for m in range(j):
                s -= lo[i, m] * lo[j, m]
            if i == j:
                if s <= 0.0 or not math.isfinite(s):
                    return False
                lo[i, i] = math.sqrt(s)
            else:
                lo[i, j] = s / lo[j, j]
        for j in range(i + 1, k):
            lo[i, j] = 0.0
    return True


@njit(cache=True)
def _chol_with_jitter(a, lo):
    # Jitter ladder 1e-10 -> 1e-6 (multiplicative on the largest diagonal).
    if _chol_inplace(a, lo):
        return True
    k = a.shape[0]
    dmax = 0.0
    for i in range(k):
        if a[i, i] > dmax:
            dmax = a[i, i]
    if dmax <= 0.0:
        dmax = 1.0
    jitter = 1e-10
    while jitter <= 1e-6:
        for i in range(k):
            a[i, i] += jitter * dmax
        if _chol_inplace(a, lo):
            return True
        jitter *= 100.0
    return False


@njit(cache=True)
def _mvn_draw(rng, mean, cov, lo, out):
    # out = mean + chol(cov) @ N(0, I); returns False on factorization failure
    k = mean.shape[0]
    if not _chol_with_jitter(cov, lo):
        return False
    for i in range(k):
        out[i] = mean[i]
    for j in range(k):
        e = rng.standard_normal()
        for i in range(j, k):
            out[i] += lo[i, j] * e
    return True


# ---------------------------------------------------------------------------
# Forward-filtering backward-sampling, random-walk transition
# ---------------------------------------------------------------------------

@njit(cache=True)
def ffbs_kernel(rng, obs, design, obs_var, innov_var, init_mean, init_var,
                states, init_draw):
    """Joint draw of the state path (and initial state) for the linear-Gaussian
    random-walk model  y_t = x_t' b_t + N(0, r_t),  b_t = b_{t-1} + N(0, diag(w_t)).

    states : (T, K) output. init_draw : (K,) output. Returns OK or failing t.
    """
    T = obs.shape[0]
    K = design.shape[1]
    fm = np.empty((T, K))
    fP = np.empty((T, K, K))
    m = init_mean.copy()
    P = np.zeros((K, K))
    for i in range(K):
        P[i, i] = init_var[i]
    px = np.empty(K)
    for t in range(T):
        for i in range(K):
            P[i, i] += innov_var[t, i]
        x = design[t]
        # px = P @ x ; S = x'Px + r_t
        s_obs = obs_var[t]
        for i in range(K):
            acc = 0.0
            for j in range(K):
                acc += P[i, j] * x[j]
            px[i] = acc
        S = s_obs
        for i in range(K):
            S += x[i] * px[i]
        if not math.isfinite(S) or S <= 0.0:
            return t
        e = obs[t]
        for i in range(K):
            e -= x[i] * m[i]
        for i in range(K):
            m[i] += px[i] * e / S
        for i in range(K):
            for j in range(K):
                P[i, j] -= px[i] * px[j] / S
        # symmetrize, floor, sanity-check
        for i in range(K):
            if not math.isfinite(P[i, i]):
                return t
            if P[i, i] < 1e-12:
                P[i, i] = 1e-12
            for j in range(i + 1, K):
                v = 0.5 * (P[i, j] + P[j, i])
                if not math.isfinite(v):
                    return t
                P[i, j] = v
                P[j, i] = v
        for i in range(K):
            fm[t, i] = m[i]
            for j in range(K):
                fP[t, i, j] = P[i, j]
    # backward pass
    lo = np.empty((K, K))
    cov = np.empty((K, K))
    mean = np.empty(K)
    draw = np.empty(K)
    for i in range(K):
        mean[i] = fm[T - 1, i]
        for j in range(K):
            cov[i, j] = fP[T - 1, i, j]
    if not _mvn_draw(rng, mean, cov, lo, draw):
        return T - 1
    for i in range(K):
        states[T - 1, i] = draw[i]
    a = np.empty((K, K))
    g = np.empty((K, K))
    for t in range(T - 2, -1, -1):
        # G = P_t (P_t + W_{t+1})^{-1}; solve via Cholesky of A = P_t + W
        for i in range(K):
            for j in range(K):
                a[i, j] = fP[t, i, j]
            a[i, i] += innov_var[t + 1, i]
        if not _chol_with_jitter(a, lo):
            return t
        # g = A^{-1} P_t  (A symmetric), then G = g' applied from the left
        for col in range(K):
            for i in range(K):
                draw[i] = fP[t, i, col]
            _forward_back_solve(lo, draw)
            for i in range(K):
                g[i, col] = draw[i]
        # mean = m_t + G (b_{t+1} - m_t), with G = g' (since P_t symmetric)
        for i in range(K):
            acc = fm[t, i]
            for j in range(K):
                acc += g[j, i] * (states[t + 1, j] - fm[t, j])
            mean[i] = acc
        # cov = P_t - G P_t = P_t - g' P_t
        for i in range(K):
            for j in range(K):
                acc = fP[t, i, j]
                for m2 in range(K):
                    acc -= g[m2, i] * fP[t, m2, j]
                cov[i, j] = acc
        for i in range(K):
            if cov[i, i] < 0.0:
                cov[i, i] = 0.0
            for j in range(i + 1, K):
                v = 0.5 * (cov[i, j] + cov[j, i])
                cov[i, j] = v
                cov[j, i] = v
        if not _mvn_draw(rng, mean, cov, lo, draw):
            return t
        for i in range(K):
            states[t, i] = draw[i]
    # initial state given b_1
    for i in range(K):
        for j in range(K):
            a[i, j] = 0.0
        a[i, i] = init_var[i] + innov_var[0, i]
        g[i, i] = init_var[i] / a[i, i]  # diagonal prior: G is diagonal
        mean[i] = init_mean[i] + g[i, i] * (states[0, i] - init_mean[i])
        for j in range(K):
            cov[i, j] = 0.0
        cov[i, i] = init_var[i] * (1.0 - g[i, i])
    if not _mvn_draw(rng, mean, cov, lo, draw):
        return 0
    for i in range(K):
        init_draw[i] = draw[i]
    return OK


@njit(cache=True)
def _forward_back_solve(lo, b):
    # Solve (L L') x = b in place.
    k = lo.shape[0]
    for i in range(k):
        s = b[i]
        for j in range(i):
            s -= lo[i, j] * b[j]
        b[i] = s / lo[i, i]
    for i in range(k - 1, -1, -1):
        s = b[i]
        for j in range(i + 1, k):
            s -= lo[j, i] * b[j]
        b[i] = s / lo[i, i]


# ---------------------------------------------------------------------------
# Scalar AR(1) FFBS (dynamic-shrinkage log-variance path)
# ---------------------------------------------------------------------------

@njit(cache=True)
def ar1_ffbs_kernel(rng, y, obs_off, obs_var, mu, phi, innov_var, out):
    """State s_t = mu + phi (s_{t-1} - mu) + N(0, q_t) with s_0 = mu fixed;
    observation y_t = s_t + obs_off[t] + N(0, obs_var[t])."""
    T = y.shape[0]
    fm = np.empty(T)
    fP = np.empty(T)
    m = mu
    P = 0.0
    for t in range(T):
        mpred = mu + phi * (m - mu)
        Ppred = phi * phi * P + innov_var[t]
        S = Ppred + obs_var[t]
        if not math.isfinite(S) or S <= 0.0:
            return t
        gain = Ppred / S
        m = mpred + gain * (y[t] - obs_off[t] - mpred)
        P = Ppred * (1.0 - gain)
        if P < 1e-14:
            P = 1e-14
        fm[t] = m
        fP[t] = P
    s = fm[T - 1] + math.sqrt(fP[T - 1]) * rng.standard_normal()
    out[T - 1] = s
    for t in range(T - 2, -1, -1):
        Ppred = phi * phi * fP[t] + innov_var[t + 1]
        gain = phi * fP[t] / Ppred
        mean = fm[t] + gain * (s - (mu + phi * (fm[t] - mu)))
        var = fP[t] - gain * phi * fP[t]
        if var < 0.0:
            var = 0.0
        s = mean + math.sqrt(var) * rng.standard_normal()
        out[t] = s
    return OK


# ---------------------------------------------------------------------------
# Single-site random-walk MH sweeps for log-scale paths
# ---------------------------------------------------------------------------

@njit(cache=True)
def _al_h_loglike(r, z, theta, tau_sq, h):
    # N(y; x'b + theta z e^h, tau^2 z e^{2h}) as a function of h, up to consts
    s = math.exp(h)
    var = tau_sq * z * s * s
    d = r - theta * z * s
    return -0.5 * math.log(var) - 0.5 * d * d / var


@njit(cache=True)
def al_scale_mh_sweep(rng, h, resid, v, theta, tau_sq, varsigma_sq,
                      m0, s0_sq, tuning_c):
    """One t-by-t MH sweep over the log-scale path of the asymmetric-Laplace
    likelihood. Mutates h; returns (h0_draw, acceptance_rate).

    z_t = v_t / exp(h_t) is fixed at the start of the sweep.
    """
    T = h.shape[0]
    S0 = s0_sq * varsigma_sq / (s0_sq + varsigma_sq)
    mbar0 = S0 * (m0 / s0_sq + h[0] / varsigma_sq)
    h0 = mbar0 + math.sqrt(S0) * rng.standard_normal()
    z = np.empty(T)
    for t in range(T):
        z[t] = v[t] / math.exp(h[t])
    sd = math.sqrt(tuning_c)
    n_acc = 0
    for t in range(T):
        hprev = h0 if t == 0 else h[t - 1]
        if t < T - 1:
            mbar = 0.5 * (hprev + h[t + 1])
            sbar = 0.5 * varsigma_sq
        else:
            mbar = hprev
            sbar = varsigma_sq
        hc = h[t]
        hp = hc + sd * rng.standard_normal()
        logratio = _al_h_loglike(resid[t], z[t], theta, tau_sq, hp) \
            - _al_h_loglike(resid[t], z[t], theta, tau_sq, hc) \
            - 0.5 * (hp - mbar) * (hp - mbar) / sbar \
            + 0.5 * (hc - mbar) * (hc - mbar) / sbar
        if math.log(rng.random()) < logratio:
            h[t] = hp
            n_acc += 1
    return h0, n_acc / T


@njit(cache=True)
def dhs_sweep_kernel(rng, eta, psi, phi, intercepts, xi, cap, log_s0,
                     log_offset, mix_prob, mix_mean, mix_var, phi_fixed,
                     phi_prop_sd, psi_clip):
    """One full dynamic-horseshoe Gibbs sweep for all K coefficients.

    intercepts holds [a0, a_1..a_K] (log global / per-coefficient scales).
    Mutates psi, phi, intercepts, xi in place. Returns OK or a failing index.
    """
    T, K = eta.shape
    n_mix = mix_prob.shape[0]
    ystar = np.empty(T)
    obs_off = np.empty(T)
    obs_var = np.empty(T)
    innov = np.empty(T)
    ycol = np.empty(T)
    out = np.empty(T)
    logp = np.empty(n_mix)
    lam_stat = np.empty(K)
    b_stat = np.empty(K)
    a0 = intercepts[0]
    for k in range(K):
        mu_k = a0 + intercepts[1 + k]
        # (i) PG auxiliaries tilted by the current innovations
        for t in range(T):
            if t == 0:
                nu = psi[0, k] - mu_k
            else:
                nu = (psi[t, k] - mu_k) - phi[k] * (psi[t - 1, k] - mu_k)
            x = pg_draw_one(rng, 1, nu, cap)
            if x < 0.0:
                return t
            xi[t, k] = x if x > 1e-12 else 1e-12
        # (ii) mixture indicators, then the path by FFBS
        for t in range(T):
            ystar[t] = math.log(eta[t, k] * eta[t, k] + log_offset)
            resid = ystar[t] - psi[t, k]
            best = -1e300
            for j in range(n_mix):
                d = resid - mix_mean[j]
                logp[j] = math.log(mix_prob[j]) - 0.5 * math.log(mix_var[j]) \
                    - 0.5 * d * d / mix_var[j]
                if logp[j] > best:
                    best = logp[j]
            total = 0.0
            for j in range(n_mix):
                logp[j] = math.exp(logp[j] - best)
                total += logp[j]
            u = rng.random() * total
            acc = 0.0
            comp = n_mix - 1
            for j in range(n_mix):
                acc += logp[j]
                if u <= acc:
                    comp = j
                    break
            obs_off[t] = mix_mean[comp]
            obs_var[t] = mix_var[comp]
            innov[t] = 1.0 / xi[t, k]
            ycol[t] = ystar[t]
        status = ar1_ffbs_kernel(rng, ycol, obs_off, obs_var, mu_k, phi[k],
                                 innov, out)
        if status != OK:
            return status
        for t in range(T):
            v = out[t]
            if v > psi_clip:
                v = psi_clip
            elif v < -psi_clip:
                v = -psi_clip
            psi[t, k] = v
        # (iii) AR coefficient: random-walk MH, Beta(10, 2) prior on (phi+1)/2
        if not phi_fixed:
            prop = phi[k] + phi_prop_sd * rng.standard_normal()
            if abs(prop) < 1.0:
                ll = 0.0
                for t in range(1, T):
                    dev_p = (psi[t, k] - mu_k) - prop * (psi[t - 1, k] - mu_k)
                    dev_c = (psi[t, k] - mu_k) - phi[k] * (psi[t - 1, k] - mu_k)
                    ll += -0.5 * xi[t, k] * (dev_p * dev_p - dev_c * dev_c)
                ll += 9.0 * (math.log1p(prop) - math.log1p(phi[k]))
                ll += math.log1p(-prop) - math.log1p(-phi[k])
                if math.log(rng.random()) < ll:
                    phi[k] = prop
    # intercept components: likelihood stats per coefficient
    for k in range(K):
        one_m = 1.0 - phi[k]
        ls = xi[0, k]
        bs = xi[0, k] * psi[0, k]
        for t in range(1, T):
            ls += one_m * one_m * xi[t, k]
            bs += one_m * xi[t, k] * (psi[t, k] - phi[k] * psi[t - 1, k])
        lam_stat[k] = ls
        b_stat[k] = bs
    # global intercept via PG augmentation of the log half-Cauchy prior
    xg = pg_draw_one(rng, 1, 2.0 * (a0 - log_s0), cap)
    if xg < 0.0:
        return 0
    if xg < 1e-12:
        xg = 1e-12
    prec = 4.0 * xg
    mean_num = 4.0 * xg * log_s0
    for k in range(K):
        prec += lam_stat[k]
        mean_num += b_stat[k] - lam_stat[k] * intercepts[1 + k]
    a0 = mean_num / prec + rng.standard_normal() / math.sqrt(prec)
    intercepts[0] = a0
    # coefficient intercepts
    for k in range(K):
        xl = pg_draw_one(rng, 1, 2.0 * intercepts[1 + k], cap)
        if xl < 0.0:
            return k
        if xl < 1e-12:
            xl = 1e-12
        prec = 4.0 * xl + lam_stat[k]
        mean = (b_stat[k] - lam_stat[k] * a0) / prec
        intercepts[1 + k] = mean + rng.standard_normal() / math.sqrt(prec)
    return OK


@njit(cache=True)
def sv_mh_sweep(rng, h, resid, varsigma_sq, m0, s0_sq, tuning_c):
    """Same sweep for a Gaussian likelihood N(resid; 0, exp(h_t))."""
    T = h.shape[0]
    S0 = s0_sq * varsigma_sq / (s0_sq + varsigma_sq)
    mbar0 = S0 * (m0 / s0_sq + h[0] / varsigma_sq)
    h0 = mbar0 + math.sqrt(S0) * rng.standard_normal()
    sd = math.sqrt(tuning_c)
    n_acc = 0
    for t in range(T):
        hprev = h0 if t == 0 else h[t - 1]
        if t < T - 1:
            mbar = 0.5 * (hprev + h[t + 1])
            sbar = 0.5 * varsigma_sq
        else:
            mbar = hprev
            sbar = varsigma_sq
        hc = h[t]
        hp = hc + sd * rng.standard_normal()
        r2 = resid[t] * resid[t]
        logratio = -0.5 * (hp - hc) - 0.5 * r2 * (math.exp(-hp) - math.exp(-hc)) \
            - 0.5 * (hp - mbar) * (hp - mbar) / sbar \
            + 0.5 * (hc - mbar) * (hc - mbar) / sbar
        if math.log(rng.random()) < logratio:
            h[t] = hp
            n_acc += 1
    return h0, n_acc / T
