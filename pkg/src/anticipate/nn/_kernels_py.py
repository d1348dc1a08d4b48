"""Pure NumPy implementations of the hot kernels.

Same call surface as the compiled module ``_kernels_cy``; the dispatcher
in :mod:`anticipate.nn.kernels` picks whichever is available.

Conventions: sequences are row-major ``(T, D)`` arrays, float64. GRU
weights are right-multiplied (``x @ w``): input weights ``(D, H)``,
recurrent weights ``(H, H)``. The gate update is

    z_t  = sigmoid(x_t @ wz + h_{t-1} @ uz + bz)
    r_t  = sigmoid(x_t @ wr + h_{t-1} @ ur + br)
    hc_t = tanh(x_t @ wh + (r_t * h_{t-1}) @ uh + bh)
    h_t  = (1 - z_t) * h_{t-1} + z_t * hc_t
"""

from __future__ import annotations

import numpy as np


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # split by sign so exp never overflows
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def gru_layer_forward(x, h0, wz, wr, wh, uz, ur, uh, bz, br, bh):
    """Run one GRU layer over a full sequence.

    Returns ``(h, z, r, hc)``, each of shape ``(T, H)``; the caches
    ``z, r, hc`` feed :func:`gru_layer_backward`.
    """
    steps = x.shape[0]
    hidden = h0.shape[0]
    # input-side projections do not depend on the recurrence
    az_in = x @ wz + bz
    ar_in = x @ wr + br
    ah_in = x @ wh + bh
    h = np.empty((steps, hidden))
    z = np.empty((steps, hidden))
    r = np.empty((steps, hidden))
    hc = np.empty((steps, hidden))
    h_prev = h0
    for t in range(steps):
        z[t] = _sigmoid(az_in[t] + h_prev @ uz)
        r[t] = _sigmoid(ar_in[t] + h_prev @ ur)
        hc[t] = np.tanh(ah_in[t] + (r[t] * h_prev) @ uh)
        h[t] = (1.0 - z[t]) * h_prev + z[t] * hc[t]
        h_prev = h[t]
    return h, z, r, hc


def gru_layer_backward(x, h0, wz, wr, wh, uz, ur, uh, h, z, r, hc, d_h):
    """Backpropagate through :func:`gru_layer_forward`.

    ``d_h`` is the loss gradient w.r.t. every hidden state ``(T, H)``.
    Returns ``(dx, dwz, dwr, dwh, duz, dur, duh, dbz, dbr, dbh, dh0)``.
    """
    steps = x.shape[0]
    hidden = h0.shape[0]
    da_z = np.empty((steps, hidden))
    da_r = np.empty((steps, hidden))
    da_h = np.empty((steps, hidden))
    carry = np.zeros(hidden)
    for t in range(steps - 1, -1, -1):
        h_prev = h[t - 1] if t > 0 else h0
        dh = d_h[t] + carry
        # h_t = (1 - z) * h_prev + z * hc
        dz = dh * (hc[t] - h_prev)
        dhc = dh * z[t]
        dh_prev = dh * (1.0 - z[t])
        # hc = tanh(a_h), a_h = x @ wh + (r * h_prev) @ uh + bh
        dah = dhc * (1.0 - hc[t] * hc[t])
        drh = dah @ uh.T
        dr = drh * h_prev
        dh_prev = dh_prev + drh * r[t]
        daz = dz * z[t] * (1.0 - z[t])
        dar = dr * r[t] * (1.0 - r[t])
        dh_prev = dh_prev + daz @ uz.T + dar @ ur.T
        da_z[t] = daz
        da_r[t] = dar
        da_h[t] = dah
        carry = dh_prev
    h_prev_seq = np.vstack((h0[None, :], h[:-1]))
    dwz = x.T @ da_z
    dwr = x.T @ da_r
    dwh = x.T @ da_h
    duz = h_prev_seq.T @ da_z
    dur = h_prev_seq.T @ da_r
    duh = (r * h_prev_seq).T @ da_h
    dbz = da_z.sum(axis=0)
    dbr = da_r.sum(axis=0)
    dbh = da_h.sum(axis=0)
    dx = da_z @ wz.T + da_r @ wr.T + da_h @ wh.T
    return dx, dwz, dwr, dwh, duz, dur, duh, dbz, dbr, dbh, carry


def conv1d_forward(x, w, b):
    """Width-5 correlation along rows, zero-padded to keep the row count.

    ``x``: (S, Cin), ``w``: (K, Cin, 5), ``b``: (K); returns (S, K) with
    ``y[s, k] = b[k] + sum_{c, d} x[s + d - 2, c] * w[k, c, d]``.
    """
    s_rows, cin = x.shape
    k = w.shape[0]
    xp = np.zeros((s_rows + 4, cin))
    xp[2 : 2 + s_rows] = x
    cols = np.empty((s_rows, 5, cin))
    for d in range(5):
        cols[:, d, :] = xp[d : d + s_rows]
    wmat = w.transpose(2, 1, 0).reshape(5 * cin, k)
    return cols.reshape(s_rows, 5 * cin) @ wmat + b


def conv1d_backward(x, w, d_y, need_dx=True):
    """Gradients of :func:`conv1d_forward`; returns ``(dx, dw, db)``.

    ``need_dx=False`` skips the input gradient (first-layer case) and
    returns ``None`` in its place.
    """
    s_rows, cin = x.shape
    k = w.shape[0]
    xp = np.zeros((s_rows + 4, cin))
    xp[2 : 2 + s_rows] = x
    cols = np.empty((s_rows, 5, cin))
    for d in range(5):
        cols[:, d, :] = xp[d : d + s_rows]
    cols2 = cols.reshape(s_rows, 5 * cin)
    db = d_y.sum(axis=0)
    dw = np.ascontiguousarray((cols2.T @ d_y).reshape(5, cin, k).transpose(2, 1, 0))
    if not need_dx:
        return None, dw, db
    wmat = w.transpose(2, 1, 0).reshape(5 * cin, k)
    dcols = (d_y @ wmat.T).reshape(s_rows, 5, cin)
    dxp = np.zeros((s_rows + 4, cin))
    for d in range(5):
        dxp[d : d + s_rows] += dcols[:, d, :]
    return dxp[2 : 2 + s_rows].copy(), dw, db
