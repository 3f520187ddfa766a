"""dB / dBm / linear unit conversions.

Configs and CLI flags speak dB, dBm and MHz; everything internal is linear
Watts and Hz.  Conversions happen once, at the boundary.
"""

import numpy as np


def db_to_linear(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x_lin):
    return 10.0 * np.log10(x_lin)


def dbm_to_watts(x_dbm):
    return 10.0 ** (np.asarray(x_dbm, dtype=float) / 10.0) / 1000.0


def watts_to_dbm(x_w):
    return 10.0 * np.log10(np.asarray(x_w, dtype=float) * 1000.0)
