# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: direct 2-D convolution, max pooling and row
scatter/gather. Contracts match kernels._pure exactly."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def conv2d_forward(cnp.float64_t[:, :, :, ::1] x, cnp.float64_t[:, :, :, ::1] k,
                   cnp.float64_t[::1] bias, int stride, int pad):
    cdef Py_ssize_t b = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3]
    cdef Py_ssize_t o = k.shape[0], kh = k.shape[2], kw = k.shape[3]
    cdef Py_ssize_t hp = h + 2 * pad, wp = w + 2 * pad
    cdef Py_ssize_t ho = (hp - kh) // stride + 1
    cdef Py_ssize_t wo = (wp - kw) // stride + 1
    xp_arr = np.zeros((b, c, hp, wp), dtype=np.float64)
    xp_arr[:, :, pad:pad + h, pad:pad + w] = x
    y_arr = np.empty((b, o, ho, wo), dtype=np.float64)
    cdef cnp.float64_t[:, :, :, ::1] xp = xp_arr
    cdef cnp.float64_t[:, :, :, ::1] y = y_arr
    cdef Py_ssize_t n, oc, ic, i, j, p, q
    cdef double kv
    cdef const double* xrow
    cdef double* yrow
    for n in range(b):
        for oc in range(o):
            for p in range(ho):
                for q in range(wo):
                    y[n, oc, p, q] = bias[oc]
            for ic in range(c):
                for i in range(kh):
                    for j in range(kw):
                        kv = k[oc, ic, i, j]
                        if stride == 1:
                            for p in range(ho):
                                xrow = &xp[n, ic, p + i, j]
                                yrow = &y[n, oc, p, 0]
                                for q in range(wo):
                                    yrow[q] += kv * xrow[q]
                        else:
                            for p in range(ho):
                                for q in range(wo):
                                    y[n, oc, p, q] += kv * xp[n, ic, p * stride + i, q * stride + j]
    return y_arr


def conv2d_backward(cnp.float64_t[:, :, :, ::1] x, cnp.float64_t[:, :, :, ::1] k,
                    cnp.float64_t[:, :, :, ::1] gy, int stride, int pad):
    cdef Py_ssize_t b = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3]
    cdef Py_ssize_t o = k.shape[0], kh = k.shape[2], kw = k.shape[3]
    cdef Py_ssize_t hp = h + 2 * pad, wp = w + 2 * pad
    cdef Py_ssize_t ho = gy.shape[2], wo = gy.shape[3]
    xp_arr = np.zeros((b, c, hp, wp), dtype=np.float64)
    xp_arr[:, :, pad:pad + h, pad:pad + w] = x
    gxp_arr = np.zeros((b, c, hp, wp), dtype=np.float64)
    gk_arr = np.zeros((o, c, kh, kw), dtype=np.float64)
    gb_arr = np.zeros(o, dtype=np.float64)
    cdef cnp.float64_t[:, :, :, ::1] xp = xp_arr
    cdef cnp.float64_t[:, :, :, ::1] gxp = gxp_arr
    cdef cnp.float64_t[:, :, :, ::1] gk = gk_arr
    cdef cnp.float64_t[::1] gb = gb_arr
    cdef Py_ssize_t n, oc, ic, i, j, p, q
    cdef double kv, acc, g
    cdef const double* xrow
    cdef const double* grow
    cdef double* gxrow
    for n in range(b):
        for oc in range(o):
            acc = 0.0
            for p in range(ho):
                for q in range(wo):
                    acc += gy[n, oc, p, q]
            gb[oc] += acc
            for ic in range(c):
                for i in range(kh):
                    for j in range(kw):
                        kv = k[oc, ic, i, j]
                        acc = 0.0
                        if stride == 1:
                            for p in range(ho):
                                xrow = &xp[n, ic, p + i, j]
                                gxrow = &gxp[n, ic, p + i, j]
                                grow = &gy[n, oc, p, 0]
                                for q in range(wo):
                                    acc += xrow[q] * grow[q]
                                    gxrow[q] += kv * grow[q]
                        else:
                            for p in range(ho):
                                for q in range(wo):
                                    g = gy[n, oc, p, q]
                                    acc += xp[n, ic, p * stride + i, q * stride + j] * g
                                    gxp[n, ic, p * stride + i, q * stride + j] += kv * g
                        gk[oc, ic, i, j] += acc
    if pad:
        return np.ascontiguousarray(gxp_arr[:, :, pad:pad + h, pad:pad + w]), gk_arr, gb_arr
    return gxp_arr, gk_arr, gb_arr


def maxpool2d_forward(cnp.float64_t[:, :, :, ::1] x, int window):
    cdef Py_ssize_t b = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3]
    cdef Py_ssize_t ho = h // window, wo = w // window
    y_arr = np.empty((b, c, ho, wo), dtype=np.float64)
    cdef cnp.float64_t[:, :, :, ::1] y = y_arr
    cdef Py_ssize_t n, ic, p, q, i, j
    cdef double v, m
    for n in range(b):
        for ic in range(c):
            for p in range(ho):
                for q in range(wo):
                    m = x[n, ic, p * window, q * window]
                    for i in range(window):
                        for j in range(window):
                            v = x[n, ic, p * window + i, q * window + j]
                            if v > m:
                                m = v
                    y[n, ic, p, q] = m
    return y_arr


def maxpool2d_backward(cnp.float64_t[:, :, :, ::1] x, cnp.float64_t[:, :, :, ::1] y,
                       cnp.float64_t[:, :, :, ::1] gy, int window):
    # gradient splits equally among entries tied for the window maximum
    cdef Py_ssize_t b = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3]
    cdef Py_ssize_t ho = h // window, wo = w // window
    gx_arr = np.zeros((b, c, h, w), dtype=np.float64)
    cdef cnp.float64_t[:, :, :, ::1] gx = gx_arr
    cdef Py_ssize_t n, ic, p, q, i, j, ties
    cdef double m, share
    for n in range(b):
        for ic in range(c):
            for p in range(ho):
                for q in range(wo):
                    m = y[n, ic, p, q]
                    ties = 0
                    for i in range(window):
                        for j in range(window):
                            if x[n, ic, p * window + i, q * window + j] == m:
                                ties += 1
                    share = gy[n, ic, p, q] / ties
                    for i in range(window):
                        for j in range(window):
                            if x[n, ic, p * window + i, q * window + j] == m:
                                gx[n, ic, p * window + i, q * window + j] = share
    return gx_arr


def scatter_add_rows(cnp.float64_t[:, ::1] out, cnp.int64_t[::1] idx,
                     cnp.float64_t[:, ::1] src):
    cdef Py_ssize_t e, j, n = idx.shape[0], d = src.shape[1]
    cdef Py_ssize_t r
    for e in range(n):
        r = idx[e]
        for j in range(d):
            out[r, j] += src[e, j]


def gather_rows(cnp.float64_t[:, ::1] x, cnp.int64_t[::1] idx):
    cdef Py_ssize_t e, j, n = idx.shape[0], d = x.shape[1]
    out_arr = np.empty((n, d), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] out = out_arr
    for e in range(n):
        for j in range(d):
            out[e, j] = x[idx[e], j]
    return out_arr
