"""Unit conversions and physical constants used throughout the package.

Powers are carried in watt internally; interfaces speak dB/dBm where that is
the natural engineering unit.  Loss coefficients use dB/km externally and
1/km (power attenuation) inside propagation formulas.
"""

import numpy as np
from scipy.constants import h as PLANCK, c as LIGHT_SPEED  # noqa: F401

# 10 / ln(10): dB per neper (power convention)
DB_PER_NEPER = 10.0 / np.log(10.0)

# Powers below this are treated as zero to avoid log underflow.
POWER_FLOOR_W = 1e-15


def db_to_lin(x_db):
    """dB -> linear power ratio."""
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def lin_to_db(x):
    """Linear power ratio -> dB; values at/below the floor map to -inf safely."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(np.maximum(x, POWER_FLOOR_W * 1e-15))


def dbm_to_w(p_dbm):
    """dBm -> watt."""
    return 1e-3 * db_to_lin(p_dbm)


def w_to_dbm(p_w):
    """watt -> dBm."""
    return lin_to_db(np.asarray(p_w, dtype=float) / 1e-3)


def alpha_db_km_to_inv_km(alpha_db_km):
    """Loss coefficient dB/km -> 1/km (power attenuation)."""
    return np.asarray(alpha_db_km, dtype=float) / DB_PER_NEPER


def clamp_floor(p_w):
    """Clamp sub-floor powers to exactly zero (numerical floor)."""
    p = np.asarray(p_w, dtype=float).copy()
    p[p < POWER_FLOOR_W] = 0.0
    return p
