# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled simulation and tree kernels.

Mirrors ``_kernels_py`` operation for operation; see that module for the
argument contracts. Normals are pre-drawn by the caller, so the two
backends produce the same paths up to floating-point rounding.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, sqrt, isfinite

cnp.import_array()

DEF LOG2PI = 1.8378770664093453


def gbm_paths(cnp.ndarray[double, ndim=1] log_s0,
              cnp.ndarray[double, ndim=1] drift,
              cnp.ndarray[double, ndim=2] shock,
              cnp.ndarray[double, ndim=3] normals,
              int record_every):
    cdef Py_ssize_t n = normals.shape[0]
    cdef Py_ssize_t steps = normals.shape[1]
    cdef Py_ssize_t d = normals.shape[2]
    cdef Py_ssize_t n_dates = steps // record_every
    cdef cnp.ndarray[double, ndim=3] out = np.empty((n, n_dates + 1, d))
    cdef double[:, :, ::1] o = out
    cdef double[:, :, ::1] z = np.ascontiguousarray(normals)
    cdef double[::1] mu = drift
    cdef double[:, ::1] m = np.ascontiguousarray(shock)
    cdef double[::1] x0 = log_s0
    cdef double[64] logs
    cdef Py_ssize_t p, s, i, k
    cdef double acc
    if d > 64:
        raise ValueError("dimension too large for the compiled kernel")
    with nogil:
        for p in range(n):
            for i in range(d):
                logs[i] = x0[i]
                o[p, 0, i] = exp(logs[i])
            for s in range(steps):
                for i in range(d):
                    acc = mu[i]
                    for k in range(d):
                        acc += m[i, k] * z[p, s, k]
                    logs[i] += acc
                if (s + 1) % record_every == 0:
                    for i in range(d):
                        o[p, (s + 1) // record_every, i] = exp(logs[i])
    return out


def hn_paths(double log_s0, double r_daily, double lam, double gamma,
             double omega, double alpha, double beta, double v0,
             cnp.ndarray[double, ndim=2] normals, int record_every):
    cdef Py_ssize_t n = normals.shape[0]
    cdef Py_ssize_t steps = normals.shape[1]
    cdef Py_ssize_t n_dates = steps // record_every
    cdef cnp.ndarray[double, ndim=3] out = np.empty((n, n_dates + 1, 1))
    cdef double[:, :, ::1] o = out
    cdef double[:, ::1] z = np.ascontiguousarray(normals)
    cdef Py_ssize_t p, s
    cdef double logs, v, sig, eps, t
    with nogil:
        for p in range(n):
            logs = log_s0
            v = v0
            o[p, 0, 0] = exp(logs)
            for s in range(steps):
                eps = z[p, s]
                sig = sqrt(v)
                logs += r_daily + lam * v + sig * eps
                t = eps - gamma * sig
                v = omega + beta * v + alpha * t * t
                if (s + 1) % record_every == 0:
                    o[p, (s + 1) // record_every, 0] = exp(logs)
    return out


def hn_loglik(cnp.ndarray[double, ndim=1] returns, double r_daily,
              double lam, double gamma, double omega, double alpha,
              double beta, double v0):
    cdef double[::1] r = np.ascontiguousarray(returns)
    cdef Py_ssize_t n = r.shape[0]
    cdef Py_ssize_t t
    cdef double ll = 0.0
    cdef double v = v0
    cdef double sig, eps, w
    with nogil:
        for t in range(n):
            if v <= 0.0 or not isfinite(v):
                ll = -1e300
                break
            sig = sqrt(v)
            eps = (r[t] - r_daily - lam * v) / sig
            ll += -0.5 * (LOG2PI + log(v) + eps * eps)
            w = eps - gamma * sig
            v = omega + beta * v + alpha * w * w
    return ll


def lmm_paths(cnp.ndarray[double, ndim=1] l0,
              cnp.ndarray[double, ndim=3] sig,
              cnp.ndarray[cnp.uint8_t, ndim=2] alive,
              cnp.ndarray[cnp.int64_t, ndim=1] front,
              double delta, double dt,
              cnp.ndarray[double, ndim=3] normals, int record_every):
    cdef Py_ssize_t n = normals.shape[0]
    cdef Py_ssize_t steps = normals.shape[1]
    cdef Py_ssize_t nf = normals.shape[2]
    cdef Py_ssize_t n_rates = l0.shape[0]
    cdef Py_ssize_t n_dates = steps // record_every
    cdef cnp.ndarray[double, ndim=3] out = np.empty((n, n_dates + 1, n_rates))
    cdef cnp.ndarray[double, ndim=2] accrual = np.ones((n, n_dates))
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] ok = np.ones(n, dtype=np.uint8)
    cdef double[:, :, ::1] o = out
    cdef double[:, ::1] acc = accrual
    cdef cnp.uint8_t[::1] okv = ok
    cdef double[:, :, ::1] z = np.ascontiguousarray(normals)
    cdef double[:, :, ::1] sg = np.ascontiguousarray(sig)
    cdef cnp.uint8_t[:, ::1] al = np.ascontiguousarray(alive)
    cdef cnp.int64_t[::1] fr = front
    cdef double[::1] r0 = l0
    cdef double[64] rates
    cdef double[64] logs
    cdef double[64] g
    cdef Py_ssize_t p, s, i, j, k, f, date_idx
    cdef double incr, dot, shk, sqdt, fin
    if n_rates > 64:
        raise ValueError("too many rates for the compiled kernel")
    sqdt = sqrt(dt)
    with nogil:
        for p in range(n):
            fin = 1.0
            for i in range(n_rates):
                rates[i] = r0[i]
                logs[i] = log(rates[i])
                o[p, 0, i] = rates[i]
            for s in range(steps):
                date_idx = s // record_every
                f = fr[s]
                acc[p, date_idx] *= (1.0 + delta * rates[f]) ** (-dt / delta)
                for j in range(n_rates):
                    if al[s, j]:
                        g[j] = delta * rates[j] / (1.0 + delta * rates[j])
                for i in range(n_rates):
                    if not al[s, i]:
                        continue
                    dot = 0.0
                    for k in range(nf):
                        dot += sg[s, i, k] * sg[s, i, k]
                    incr = -0.5 * dot * dt
                    for j in range(i + 1):
                        if al[s, j]:
                            dot = 0.0
                            for k in range(nf):
                                dot += sg[s, j, k] * sg[s, i, k]
                            incr += g[j] * (dot * dt)
                    shk = 0.0
                    for k in range(nf):
                        shk += z[p, s, k] * sg[s, i, k]
                    # zero volatility keeps the input rates bit-exact
                    incr = incr + shk * sqdt
                    if incr != 0.0:
                        logs[i] += incr
                        rates[i] = exp(logs[i])
                if (s + 1) % record_every == 0:
                    for i in range(n_rates):
                        o[p, (s + 1) // record_every, i] = rates[i]
            for s in range(n_dates + 1):
                for i in range(n_rates):
                    if not isfinite(o[p, s, i]):
                        fin = 0.0
            for s in range(n_dates):
                if not isfinite(acc[p, s]):
                    fin = 0.0
            if fin == 0.0:
                okv[p] = 0
    return out, accrual, ok


def crr_values(double s0, double strike, double rate, double sigma,
               double maturity, int steps, bint is_put):
    cdef double dt = maturity / steps
    cdef double u = exp(sigma * sqrt(dt))
    cdef double d = 1.0 / u
    cdef double p = (exp(rate * dt) - d) / (u - d)
    cdef double disc = exp(-rate * dt)
    cdef cnp.ndarray[double, ndim=1] st_arr = np.empty(steps + 1)
    cdef cnp.ndarray[double, ndim=1] am_arr = np.empty(steps + 1)
    cdef cnp.ndarray[double, ndim=1] eu_arr = np.empty(steps + 1)
    cdef double[::1] st = st_arr
    cdef double[::1] am = am_arr
    cdef double[::1] eu = eu_arr
    cdef Py_ssize_t i, j
    cdef double ex
    with nogil:
        for j in range(steps + 1):
            st[j] = s0 * u ** j * d ** (steps - j)
            ex = strike - st[j] if is_put else st[j] - strike
            am[j] = ex if ex > 0.0 else 0.0
            eu[j] = am[j]
        for i in range(steps - 1, -1, -1):
            for j in range(i + 1):
                st[j] = st[j + 1] * d
                eu[j] = disc * (p * eu[j + 1] + (1.0 - p) * eu[j])
                am[j] = disc * (p * am[j + 1] + (1.0 - p) * am[j])
                ex = strike - st[j] if is_put else st[j] - strike
                if ex > am[j]:
                    am[j] = ex
    return am_arr[0], eu_arr[0]
