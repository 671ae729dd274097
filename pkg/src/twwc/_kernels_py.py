"""Pure-numpy versions of the hot loops; reference for the compiled module."""

from __future__ import annotations

import numpy as np


def ml_decode(logw, cb, side, obs):
    """Maximum-likelihood codeword index per trial.

    Parameters
    ----------
    logw : (A, V, B) float array
        ``log P(b | a, v)``: side symbol ``a``, codeword symbol ``v``,
        observation ``b``.
    cb : (N, n) int array
        Codebook.
    side, obs : (T, n) int arrays
        Receiver side information and observations, one row per trial.

    Returns
    -------
    (T,) int64 array. Ties go to the smallest index.
    """
    logw = np.asarray(logw, dtype=float)
    cb = np.asarray(cb, dtype=np.int64)
    side = np.atleast_2d(np.asarray(side, dtype=np.int64))
    obs = np.atleast_2d(np.asarray(obs, dtype=np.int64))
    n = cb.shape[1]
    g = logw[side, :, obs]  # (T, n, V)
    scores = g[:, np.arange(n)[None, :], cb].sum(axis=2)  # (T, N)
    return np.argmax(scores, axis=1).astype(np.int64)


def z_likelihoods(wz, cb1, cb2, nz):
    """``P(z^n | c1, c2)`` for every codeword pair and every ``z^n``.

    ``wz[v1, v2, z]`` is the per-letter law. The last axis enumerates
    ``z^n`` with the first letter most significant.
    """
    wz = np.asarray(wz, dtype=float)
    cb1 = np.asarray(cb1, dtype=np.int64)
    cb2 = np.asarray(cb2, dtype=np.int64)
    n1, n = cb1.shape
    n2 = cb2.shape[0]
    out = np.ones((n1, n2, 1))
    for t in range(n):
        letter = wz[cb1[:, t][:, None], cb2[:, t][None, :], :]  # (N1, N2, nz)
        out = (out[:, :, :, None] * letter[:, :, None, :]).reshape(n1, n2, -1)
    return out
