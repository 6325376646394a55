# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: side-wise local polynomial weights and their bias and
variance sums, and nearest-neighbour squared residuals.

Same signatures and semantics as ``_kernels_py``.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, pow, exp, erfc, INFINITY, NAN

cnp.import_array()

DEF MAXP = 12


cdef inline double _kern(double u, int kid) nogil:
    cdef double a = fabs(u)
    if kid == 0:
        return 1.0 - a if a < 1.0 else 0.0
    elif kid == 1:
        return 0.5 if a <= 1.0 else 0.0
    else:
        return 0.75 * (1.0 - u * u) if a < 1.0 else 0.0


cdef int _intercept_coefs(const double[:] x, double h, int kid, int p,
                          double* e) noexcept nogil:
    """Solve M e = e_1 for the kernel-weighted moment matrix; 0 on success."""
    cdef double M[MAXP][MAXP]
    cdef double mom[2 * MAXP]
    cdef Py_ssize_t i, a, b, piv, n = x.shape[0]
    cdef double u, k, up, t, best, last
    cdef int distinct = 0
    cdef bint have_last = False
    for a in range(2 * p - 1):
        mom[a] = 0.0
    for i in range(n):
        u = x[i] / h
        k = _kern(u, kid)
        if k <= 0.0:
            continue
        if not have_last or x[i] != last:
            distinct += 1
            last = x[i]
            have_last = True
        up = k
        for a in range(2 * p - 1):
            mom[a] += up
            up *= u
    if distinct < p:
        return 1
    for a in range(p):
        for b in range(p):
            M[a][b] = mom[a + b]
        e[a] = 1.0 if a == 0 else 0.0
    # Gaussian elimination with partial pivoting
    for a in range(p):
        piv = a
        best = fabs(M[a][a])
        for b in range(a + 1, p):
            if fabs(M[b][a]) > best:
                best = fabs(M[b][a])
                piv = b
        if best == 0.0:
            return 1
        if piv != a:
            for b in range(p):
                t = M[a][b]; M[a][b] = M[piv][b]; M[piv][b] = t
            t = e[a]; e[a] = e[piv]; e[piv] = t
        for b in range(a + 1, p):
            t = M[b][a] / M[a][a]
            for i in range(a, p):
                M[b][i] -= t * M[a][i]
            e[b] -= t * e[a]
    for a in range(p - 1, -1, -1):
        t = e[a]
        for b in range(a + 1, p):
            t -= M[a][b] * e[b]
        e[a] = t / M[a][a]
    return 0


cdef inline double _weight(double xi, double h, int kid, int p,
                           const double* e) noexcept nogil:
    cdef double u = xi / h
    cdef double k = _kern(u, kid)
    cdef double poly = 0.0, up = 1.0
    cdef int a
    if k <= 0.0:
        return 0.0
    for a in range(p):
        poly += e[a] * up
        up *= u
    return k * poly


def lp_side_weights(const double[:] x, double h, int kernel_id, int p):
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double e[MAXP]
    out = np.empty(n)
    cdef double[:] w = out
    if p > MAXP or _intercept_coefs(x, h, kernel_id, p, e) != 0:
        out[:] = np.nan
        return out
    for i in range(n):
        w[i] = _weight(x[i], h, kernel_id, p, e)
    return out


def lp_side_stats(const double[:] x, const double[:] sigma2, double h,
                  int kernel_id, int p):
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double e[MAXP]
    cdef double w, ax, A = 0.0, V = 0.0, H = 0.0
    if p > MAXP or _intercept_coefs(x, h, kernel_id, p, e) != 0:
        return (NAN, NAN, NAN)
    for i in range(n):
        w = _weight(x[i], h, kernel_id, p, e)
        if w == 0.0:
            continue
        ax = fabs(x[i])
        A += fabs(w) * pow(ax, p)
        V += w * w * sigma2[i]
        H += w * x[i] * x[i]
    return (A, V, H)


def nn_sq_residuals(const double[:] x, const double[:] y, int J):
    cdef Py_ssize_t m = x.shape[0], i, j, l, r, k, lo
    cdef double dl, dr, dJ, s
    cdef int count, need
    out = np.empty(m)
    cdef double[:] o = out
    for i in range(m):
        # J-th smallest distance by a two-pointer merge
        l = i - 1
        r = i + 1
        dJ = 0.0
        for k in range(J):
            dl = x[i] - x[l] if l >= 0 else INFINITY
            dr = x[r] - x[i] if r < m else INFINITY
            if dl <= dr:
                dJ = dl
                l -= 1
            else:
                dJ = dr
                r += 1
        # everything strictly closer than dJ is a neighbour
        s = 0.0
        count = 0
        l = i - 1
        while l >= 0 and x[i] - x[l] < dJ:
            s += y[l]; count += 1; l -= 1
        r = i + 1
        while r < m and x[r] - x[i] < dJ:
            s += y[r]; count += 1; r += 1
        need = J - count
        # ties at distance dJ: smallest indices first, so left block first
        lo = l
        while lo >= 0 and x[i] - x[lo] == dJ:
            lo -= 1
        j = lo + 1
        while need > 0 and j <= l:
            s += y[j]; need -= 1; j += 1
        while need > 0 and r < m and x[r] - x[i] == dJ:
            s += y[r]; need -= 1; r += 1
        s = y[i] - s / J
        o[i] = J / (J + 1.0) * s * s
    return out


cdef inline double _ncdf(double z) noexcept nogil:
    return 0.5 * erfc(-z * 0.7071067811865476)


def cv_scalar(double b, double alpha, double z_half):
    cdef double lo = (b if b > z_half else z_half) - 1.0
    cdef double hi = b + z_half + 1.0
    cdef double c = b + 0.7 * z_half
    cdef double f, dens, nxt
    cdef int it
    if c < z_half:
        c = z_half
    for it in range(100):
        f = _ncdf(-c - b) + _ncdf(b - c) - alpha
        if f > 0:
            lo = c
        else:
            hi = c
        dens = (exp(-0.5 * (c + b) * (c + b)) + exp(-0.5 * (c - b) * (c - b))) \
            * 0.3989422804014327
        nxt = c + f / dens if dens > 0 else c
        if not (lo < nxt < hi):
            nxt = 0.5 * (lo + hi)
        if fabs(nxt - c) <= 1e-15 * (c if c > 1.0 else 1.0) or hi - lo <= 4e-16 * (c if c > 1.0 else 1.0):
            return nxt
        c = nxt
    return c
