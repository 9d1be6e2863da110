"""Pure-numpy implementations of the hot simulation and tree kernels.

These mirror the compiled versions in ``_kernels.pyx`` operation for
operation. Both backends consume pre-drawn standard normals with path-major
layout ``(n_paths, n_steps, ...)`` so that results are independent of the
backend's internal loop order.
"""

import math

import numpy as np


def gbm_paths(log_s0, drift, shock, normals, record_every):
    """Evolve correlated log-Euler paths and record exercise-date levels.

    log_s0 : (d,) initial log levels
    drift  : (d,) per-step log drift
    shock  : (d, d) per-step shock matrix (already scaled by sqrt(dt))
    normals: (n, steps, d) standard normals
    Returns levels of shape (n, steps // record_every + 1, d).
    """
    n, steps, d = normals.shape
    n_dates = steps // record_every
    out = np.empty((n, n_dates + 1, d))
    logs = np.tile(log_s0, (n, 1))
    out[:, 0, :] = np.exp(logs)
    for s in range(steps):
        logs += drift + normals[:, s, :] @ shock.T
        if (s + 1) % record_every == 0:
            out[:, (s + 1) // record_every, :] = np.exp(logs)
    return out


def hn_paths(log_s0, r_daily, lam, gamma, omega, alpha, beta, v0, normals, record_every):
    """Daily GARCH recursion for (log price, variance); records price levels.

    normals: (n, steps) standard normals. Returns (n, steps//record_every + 1, 1).
    """
    n, steps = normals.shape
    n_dates = steps // record_every
    out = np.empty((n, n_dates + 1, 1))
    logs = np.full(n, log_s0)
    v = np.full(n, v0)
    out[:, 0, 0] = np.exp(logs)
    for s in range(steps):
        eps = normals[:, s]
        sig = np.sqrt(v)
        logs += r_daily + lam * v + sig * eps
        v = omega + beta * v + alpha * (eps - gamma * sig) ** 2
        if (s + 1) % record_every == 0:
            out[:, (s + 1) // record_every, 0] = np.exp(logs)
    return out


def hn_loglik(returns, r_daily, lam, gamma, omega, alpha, beta, v0):
    """Gaussian conditional log-likelihood of the GARCH recursion."""
    ll = 0.0
    v = v0
    log2pi = math.log(2.0 * math.pi)
    for r in returns:
        if v <= 0.0 or not math.isfinite(v):
            return -1e300
        sig = math.sqrt(v)
        eps = (r - r_daily - lam * v) / sig
        ll += -0.5 * (log2pi + math.log(v) + eps * eps)
        v = omega + beta * v + alpha * (eps - gamma * sig) ** 2
    return ll


def lmm_paths(l0, sig, alive, front, delta, dt, normals, record_every):
    """Euler scheme for forward LIBOR rates under the spot measure.

    l0      : (n_rates,) initial rates; index 0 is the already-fixed spot rate
    sig     : (steps, n_rates, n_factors) volatility vector per rate per step
    alive   : (steps, n_rates) uint8, 1 while the rate has not yet fixed
    front   : (steps,) index of the rate accruing over the current period
    normals : (n, steps, n_factors) standard normals
    Returns (levels (n, n_dates+1, n_rates), accrual (n, n_dates), ok (n,) uint8).

    Per-step discounting compounds the frozen front rate: each step
    contributes (1 + delta * L_front) ** (-dt / delta); the per-exercise
    accrual entry is the product of its steps' factors.
    """
    n, steps, _ = normals.shape
    n_rates = l0.shape[0]
    n_dates = steps // record_every
    out = np.empty((n, n_dates + 1, n_rates))
    accrual = np.ones((n, n_dates))
    ok = np.ones(n, dtype=np.uint8)
    rates = np.tile(l0, (n, 1))
    logs = np.log(rates)
    out[:, 0, :] = rates
    sqdt = math.sqrt(dt)
    # overflow to inf is how blown-up paths get flagged below
    with np.errstate(over="ignore", invalid="ignore"):
        return _lmm_steps(
            l0, sig, alive, front, delta, dt, normals, record_every,
            out, accrual, ok, rates, logs, sqdt, n, steps, n_rates, n_dates,
        )


def _lmm_steps(l0, sig, alive, front, delta, dt, normals, record_every,
               out, accrual, ok, rates, logs, sqdt, n, steps, n_rates, n_dates):
    for s in range(steps):
        date_idx = s // record_every
        f = front[s]
        accrual[:, date_idx] *= (1.0 + delta * rates[:, f]) ** (-dt / delta)
        live = [i for i in range(n_rates) if alive[s, i]]
        if live:
            eps = normals[:, s, :]
            g = {j: delta * rates[:, j] / (1.0 + delta * rates[:, j]) for j in live}
            dots = {(j, i): float(sig[s, j] @ sig[s, i]) for i in live for j in live if j <= i}
            for i in live:
                si = sig[s, i]
                incr = -0.5 * float(si @ si) * dt * np.ones(n)
                for j in live:
                    if j <= i:
                        incr += g[j] * (dots[(j, i)] * dt)
                change = incr + (eps @ si) * sqdt
                # skip the exp/log round trip when nothing moved, so zero
                # volatility keeps the input rates bit-exact
                moved = change != 0.0
                logs[:, i] += change
                rates[moved, i] = np.exp(logs[moved, i])
        if (s + 1) % record_every == 0:
            out[:, (s + 1) // record_every, :] = rates
    bad = ~np.isfinite(out).all(axis=(1, 2)) | ~np.isfinite(accrual).all(axis=1)
    ok[bad] = 0
    return out, accrual, ok


def crr_values(s0, strike, rate, sigma, maturity, steps, is_put):
    """Recombining binomial tree; returns (american, european) in one pass."""
    dt = maturity / steps
    u = math.exp(sigma * math.sqrt(dt))
    d = 1.0 / u
    p = (math.exp(rate * dt) - d) / (u - d)
    disc = math.exp(-rate * dt)
    j = np.arange(steps + 1)
    st = s0 * u ** j * d ** (steps - j)
    if is_put:
        am = np.maximum(strike - st, 0.0)
    else:
        am = np.maximum(st - strike, 0.0)
    eu = am.copy()
    for i in range(steps - 1, -1, -1):
        st = st[1:] * d
        eu = disc * (p * eu[1:] + (1.0 - p) * eu[:-1])
        am = disc * (p * am[1:] + (1.0 - p) * am[:-1])
        if is_put:
            ex = np.maximum(strike - st, 0.0)
        else:
            ex = np.maximum(st - strike, 0.0)
        np.maximum(am, ex, out=am)
    return float(am[0]), float(eu[0])
