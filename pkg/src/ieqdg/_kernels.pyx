# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; see ``_kernels_py`` for the reference semantics."""
import numpy as np

cimport numpy as cnp
from libc.math cimport log, log1p, sqrt

cnp.import_array()


def scatter_add(const cnp.int64_t[::1] pos, const double[::1] vals, Py_ssize_t n):
    """``out[pos[i]] += vals[i]``."""
    out = np.zeros(n)
    cdef double[::1] o = out
    cdef Py_ssize_t i
    for i in range(pos.shape[0]):
        o[pos[i]] += vals[i]
    return out


cdef inline int _f_df(int kind, double u, double th, double thc, double s,
                      double* f, double* df) noexcept nogil:
    cdef double a, b
    if kind == 0:
        a = u * u - 1.0
        f[0] = 0.25 * a * a
        df[0] = u * a
        return 0
    if kind == 1:
        if u <= 0.0 or u >= 1.0:
            return 2
        f[0] = th * (u * log(u) + (1.0 - u) * log(1.0 - u)) + thc * u * (1.0 - u)
        df[0] = th * (log(u) - log1p(-u)) + thc * (1.0 - 2.0 * u)
        return 0
    if u < s:
        f[0] = th * ((1.0 - u) * log1p(-u) + u * log(s) + u * u / (2.0 * s) - s / 2.0)
        df[0] = th * (-log1p(-u) - 1.0 + log(s) + u / s)
    elif u > 1.0 - s:
        f[0] = th * (u * log(u) + (1.0 - u) * log(s) + (1.0 - u) * (1.0 - u) / (2.0 * s) - s / 2.0)
        df[0] = th * (log(u) + 1.0 - log(s) - (1.0 - u) / s)
    else:
        f[0] = th * (u * log(u) + (1.0 - u) * log(1.0 - u))
        df[0] = th * (log(u) - log1p(-u))
    f[0] += thc * u * (1.0 - u)
    df[0] += thc * (1.0 - 2.0 * u)
    return 0


def nodal_rhs(const double[:, ::1] eval_tab, const double[::1] scale,
              const double[:, ::1] proj_tab, const double[::1] fac,
              const double[:, ::1] u_coef, const double[:, ::1] u_base,
              const double[:, ::1] U_base, int kind, const double[::1] params):
    cdef Py_ssize_t C = u_coef.shape[0], m = u_coef.shape[1], Q = eval_tab.shape[0]
    H_arr = np.empty((C, Q))
    h2_arr = np.empty((C, Q))
    ub_arr = np.empty((C, Q))
    rhs_arr = np.zeros((C, m))
    cdef double[:, ::1] H = H_arr, h2 = h2_arr, ub = ub_arr, rhs = rhs_arr
    cdef double th = 0.5 * params[0], thc = 0.5 * params[1], s = params[2], B = params[3]
    cdef Py_ssize_t c, q, j
    cdef double uc, vb, f, df, rad, h, g
    cdef int status = 0
    with nogil:
        for c in range(C):
            for q in range(Q):
                uc = 0.0
                vb = 0.0
                for j in range(m):
                    uc = uc + u_coef[c, j] * eval_tab[q, j]
                    vb = vb + u_base[c, j] * eval_tab[q, j]
                uc = uc * scale[c]
                vb = vb * scale[c]
                status = _f_df(kind, uc, th, thc, s, &f, &df)
                if status != 0:
                    break
                rad = f + B
                if not rad > 0.0:
                    status = 1
                    break
                h = df / sqrt(rad)
                H[c, q] = h
                h2[c, q] = 0.5 * h * h
                ub[c, q] = vb
                g = (h2[c, q] * vb - h * U_base[c, q]) * fac[c]
                for j in range(m):
                    rhs[c, j] += g * proj_tab[q, j]
            if status != 0:
                break
    return H_arr, h2_arr, ub_arr, rhs_arr, status


def aux_update(const double[:, ::1] eval_tab, const double[::1] scale,
               const double[:, ::1] proj_tab, const double[::1] fac,
               const double[:, ::1] U_base, const double[:, ::1] H,
               const double[:, ::1] u_new, const double[:, ::1] ub_nodes):
    cdef Py_ssize_t C = u_new.shape[0], m = u_new.shape[1], Q = eval_tab.shape[0]
    U_arr = np.empty((C, Q))
    Uh_arr = np.zeros((C, m))
    Uhn_arr = np.empty((C, Q))
    cdef double[:, ::1] U = U_arr, Uh = Uh_arr, Uhn = Uhn_arr
    cdef Py_ssize_t c, q, j
    cdef double v, g
    with nogil:
        for c in range(C):
            for q in range(Q):
                v = 0.0
                for j in range(m):
                    v = v + u_new[c, j] * eval_tab[q, j]
                v = U_base[c, q] + 0.5 * H[c, q] * (v * scale[c] - ub_nodes[c, q])
                U[c, q] = v
                g = v * fac[c]
                for j in range(m):
                    Uh[c, j] += g * proj_tab[q, j]
            for q in range(Q):
                v = 0.0
                for j in range(m):
                    v = v + Uh[c, j] * eval_tab[q, j]
                Uhn[c, q] = v * scale[c]
    return U_arr, Uh_arr, Uhn_arr


def mass_plus(const double[::1] base, const double[:, ::1] weight, const double[:, ::1] mass_table,
              const cnp.int64_t[::1] pos, Py_ssize_t nnz):
    cdef Py_ssize_t C = weight.shape[0], Q = weight.shape[1], mm = mass_table.shape[1]
    out_arr = np.array(base, dtype=np.float64, copy=True)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t c, q, k
    cdef double acc
    with nogil:
        for c in range(C):
            for k in range(mm):
                acc = 0.0
                for q in range(Q):
                    acc = acc + weight[c, q] * mass_table[q, k]
                out[pos[c * mm + k]] += acc
    return out_arr
