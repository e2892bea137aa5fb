"""NumPy implementation of the elementary-term Gram kernel.

Used when the compiled extension is unavailable or disabled with
``ISOMLAB_PURE_PYTHON=1``.
"""
import numpy as np


def term_kernel(shifts_a, decays_a, shifts_b, decays_b):
    """Kernel matrix ``K[j, k] = <S_{s_j} f_{z_j}, S_{t_k} f_{w_k}>``.

    Parameters
    ----------
    shifts_a : (n, d) float array
    decays_a : (n, d) complex array
    shifts_b : (m, d) float array
    decays_b : (m, d) complex array

    Returns
    -------
    (n, m) complex array
    """
    s = np.asarray(shifts_a, dtype=float)[:, None, :]
    z = np.asarray(decays_a, dtype=complex)[:, None, :]
    t = np.asarray(shifts_b, dtype=float)[None, :, :]
    w = np.asarray(decays_b, dtype=complex)[None, :, :]

    zc = np.conj(z)
    norm = 2.0 * np.sqrt(z.real * w.real) / (zc + w)
    gap = t - s
    # s <= t: exp(-conj(z) (t - s));  s > t: exp(-w (s - t))
    expo = np.where(gap >= 0.0, -zc * gap, w * gap)
    return np.prod(norm, axis=2) * np.exp(np.sum(expo, axis=2))
