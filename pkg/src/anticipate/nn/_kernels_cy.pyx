# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled implementations of the hot kernels.

Mirrors the call surface and math of ``_kernels_py``. The sequential
recurrence (where per-step NumPy dispatch overhead dominates) runs as C
loops with row-sequential memory access; the bulk input-side projections
and weight-gradient contractions stay as single BLAS matmuls, exactly
like the fallback.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, tanh

cnp.import_array()


cdef inline double _sigmoid(double v) nogil:
    if v >= 0.0:
        return 1.0 / (1.0 + exp(-v))
    cdef double e = exp(v)
    return e / (1.0 + e)


def gru_layer_forward(x, h0, wz, wr, wh, uz, ur, uh, bz, br, bh):
    """Run one GRU layer over a full sequence; returns (h, z, r, hc)."""
    cdef double[:, ::1] az_in = np.ascontiguousarray(x @ wz + bz)
    cdef double[:, ::1] ar_in = np.ascontiguousarray(x @ wr + br)
    cdef double[:, ::1] ah_in = np.ascontiguousarray(x @ wh + bh)
    cdef double[:, ::1] uz_v = np.ascontiguousarray(uz)
    cdef double[:, ::1] ur_v = np.ascontiguousarray(ur)
    cdef double[:, ::1] uh_v = np.ascontiguousarray(uh)
    cdef double[::1] h0_v = np.ascontiguousarray(h0, dtype=np.float64)

    cdef Py_ssize_t steps = az_in.shape[0]
    cdef Py_ssize_t hidden = h0_v.shape[0]
    h_arr = np.empty((steps, hidden))
    z_arr = np.empty((steps, hidden))
    r_arr = np.empty((steps, hidden))
    hc_arr = np.empty((steps, hidden))
    cdef double[:, ::1] h = h_arr
    cdef double[:, ::1] z = z_arr
    cdef double[:, ::1] r = r_arr
    cdef double[:, ::1] hc = hc_arr

    scratch = np.empty((3, hidden))
    cdef double[:, ::1] acc = scratch
    cdef Py_ssize_t t, i, j
    cdef double hp, ah

    with nogil:
        for t in range(steps):
            # acc rows: z-gate, r-gate pre-activations, then reset * h_prev
            for j in range(hidden):
                acc[0, j] = az_in[t, j]
                acc[1, j] = ar_in[t, j]
            for i in range(hidden):
                hp = h0_v[i] if t == 0 else h[t - 1, i]
                if hp != 0.0:
                    for j in range(hidden):
                        acc[0, j] += hp * uz_v[i, j]
                        acc[1, j] += hp * ur_v[i, j]
            for j in range(hidden):
                z[t, j] = _sigmoid(acc[0, j])
                r[t, j] = _sigmoid(acc[1, j])
                acc[2, j] = ah_in[t, j]
            for i in range(hidden):
                hp = h0_v[i] if t == 0 else h[t - 1, i]
                hp *= r[t, i]
                if hp != 0.0:
                    for j in range(hidden):
                        acc[2, j] += hp * uh_v[i, j]
            for j in range(hidden):
                hc[t, j] = tanh(acc[2, j])
                hp = h0_v[j] if t == 0 else h[t - 1, j]
                h[t, j] = (1.0 - z[t, j]) * hp + z[t, j] * hc[t, j]
    return h_arr, z_arr, r_arr, hc_arr


def gru_layer_backward(x, h0, wz, wr, wh, uz, ur, uh, h, z, r, hc, d_h):
    """Backpropagate through gru_layer_forward.

    Returns (dx, dwz, dwr, dwh, duz, dur, duh, dbz, dbr, dbh, dh0).
    The loop propagates the hidden-state carry and collects the per-step
    gate deltas; all weight gradients then batch into matmuls.
    """
    cdef double[::1] h0_v = np.ascontiguousarray(h0, dtype=np.float64)
    cdef double[:, ::1] uz_v = np.ascontiguousarray(uz)
    cdef double[:, ::1] ur_v = np.ascontiguousarray(ur)
    cdef double[:, ::1] uh_v = np.ascontiguousarray(uh)
    cdef double[:, ::1] h_v = np.ascontiguousarray(h)
    cdef double[:, ::1] z_v = np.ascontiguousarray(z)
    cdef double[:, ::1] r_v = np.ascontiguousarray(r)
    cdef double[:, ::1] hc_v = np.ascontiguousarray(hc)
    cdef double[:, ::1] dh_v = np.ascontiguousarray(d_h)

    cdef Py_ssize_t steps = h_v.shape[0]
    cdef Py_ssize_t hidden = h0_v.shape[0]

    da_z_arr = np.empty((steps, hidden))
    da_r_arr = np.empty((steps, hidden))
    da_h_arr = np.empty((steps, hidden))
    cdef double[:, ::1] da_z = da_z_arr
    cdef double[:, ::1] da_r = da_r_arr
    cdef double[:, ::1] da_h = da_h_arr

    carry_arr = np.zeros(hidden)
    cdef double[::1] carry = carry_arr
    scratch = np.empty((2, hidden))
    cdef double[:, ::1] buf = scratch
    cdef Py_ssize_t t, i, j
    cdef double dh, dz, dr, hp, a

    with nogil:
        for t in range(steps - 1, -1, -1):
            # buf[0] <- d(r * h_prev): da_h @ uh.T, and gate deltas for z, hc
            for j in range(hidden):
                hp = h0_v[j] if t == 0 else h_v[t - 1, j]
                dh = dh_v[t, j] + carry[j]
                dz = dh * (hc_v[t, j] - hp)
                da_h[t, j] = dh * z_v[t, j] * (1.0 - hc_v[t, j] * hc_v[t, j])
                da_z[t, j] = dz * z_v[t, j] * (1.0 - z_v[t, j])
                buf[1, j] = dh * (1.0 - z_v[t, j])  # dh_prev accumulator
            for i in range(hidden):
                a = 0.0
                for j in range(hidden):
                    a += da_h[t, j] * uh_v[i, j]
                buf[0, i] = a
            for j in range(hidden):
                hp = h0_v[j] if t == 0 else h_v[t - 1, j]
                dr = buf[0, j] * hp
                da_r[t, j] = dr * r_v[t, j] * (1.0 - r_v[t, j])
                buf[1, j] += buf[0, j] * r_v[t, j]
            for i in range(hidden):
                a = 0.0
                for j in range(hidden):
                    a += da_z[t, j] * uz_v[i, j] + da_r[t, j] * ur_v[i, j]
                carry[i] = buf[1, i] + a

    h_prev_seq = np.vstack((np.asarray(h0)[None, :], np.asarray(h)[:-1]))
    dwz = x.T @ da_z_arr
    dwr = x.T @ da_r_arr
    dwh = x.T @ da_h_arr
    duz = h_prev_seq.T @ da_z_arr
    dur = h_prev_seq.T @ da_r_arr
    duh = (np.asarray(r) * h_prev_seq).T @ da_h_arr
    dbz = da_z_arr.sum(axis=0)
    dbr = da_r_arr.sum(axis=0)
    dbh = da_h_arr.sum(axis=0)
    dx = da_z_arr @ np.asarray(wz).T + da_r_arr @ np.asarray(wr).T + da_h_arr @ np.asarray(wh).T
    return dx, dwz, dwr, dwh, duz, dur, duh, dbz, dbr, dbh, carry_arr


def conv1d_forward(x, w, b):
    """Width-5 correlation along rows, zero padded; see _kernels_py.

    The filters are transposed to (5, Cin, K) so the inner loop over
    output maps runs over contiguous memory; exactly-zero input entries
    (most of a one-hot matrix) skip their contribution entirely.
    """
    cdef double[:, ::1] x_v = np.ascontiguousarray(x)
    cdef double[:, :, ::1] wt = np.ascontiguousarray(np.asarray(w).transpose(2, 1, 0))
    cdef Py_ssize_t s_rows = x_v.shape[0]
    cdef Py_ssize_t cin = x_v.shape[1]
    cdef Py_ssize_t kout = wt.shape[2]
    y_arr = np.tile(np.asarray(b, dtype=np.float64), (s_rows, 1))
    cdef double[:, ::1] y = y_arr
    cdef Py_ssize_t s, k, c, d, src
    cdef double xv
    with nogil:
        for s in range(s_rows):
            for d in range(5):
                src = s + d - 2
                if 0 <= src < s_rows:
                    for c in range(cin):
                        xv = x_v[src, c]
                        if xv != 0.0:
                            for k in range(kout):
                                y[s, k] += xv * wt[d, c, k]
    return y_arr


def conv1d_backward(x, w, d_y, need_dx=True):
    """Gradients of conv1d_forward; returns (dx, dw, db).

    ``need_dx=False`` skips the input gradient (first-layer case), which
    together with the one-hot zero skip makes that call nearly free.
    """
    cdef double[:, ::1] x_v = np.ascontiguousarray(x)
    cdef double[:, :, ::1] wt = np.ascontiguousarray(np.asarray(w).transpose(2, 1, 0))
    cdef double[:, ::1] dy_v = np.ascontiguousarray(d_y)
    cdef Py_ssize_t s_rows = x_v.shape[0]
    cdef Py_ssize_t cin = x_v.shape[1]
    cdef Py_ssize_t kout = wt.shape[2]
    cdef bint with_dx = bool(need_dx)
    dx_arr = np.zeros((s_rows, cin)) if with_dx else None
    dwt_arr = np.zeros((5, cin, kout))
    cdef double[:, ::1] dx = dx_arr if with_dx else np.empty((1, 1))
    cdef double[:, :, ::1] dwt = dwt_arr
    cdef Py_ssize_t s, k, c, d, src
    cdef double xv, acc
    with nogil:
        for s in range(s_rows):
            for d in range(5):
                src = s + d - 2
                if 0 <= src < s_rows:
                    for c in range(cin):
                        xv = x_v[src, c]
                        if with_dx:
                            acc = 0.0
                            for k in range(kout):
                                acc += dy_v[s, k] * wt[d, c, k]
                                if xv != 0.0:
                                    dwt[d, c, k] += xv * dy_v[s, k]
                            dx[src, c] += acc
                        elif xv != 0.0:
                            for k in range(kout):
                                dwt[d, c, k] += xv * dy_v[s, k]
    db = np.asarray(d_y).sum(axis=0)
    return dx_arr, np.ascontiguousarray(dwt_arr.transpose(2, 1, 0)), db
