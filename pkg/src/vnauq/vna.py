"""One-port VNA physics: standard models, measurement equation, SOL solve.

Every function accepts Python scalars or numpy arrays that broadcast
against each other; the Monte Carlo engine calls them on whole batches of
draws at one frequency.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularDenominatorError, SingularSystemError, UnphysicalModelError

C_LIGHT = 299792458.0
SINGULAR_TOL = 1e-12
DISTINCT_TOL = 1e-9


@dataclass(frozen=True)
class OpenStandardModel:
    c0: float = 0.0
    c1: float = 0.0
    c2: float = 0.0
    c3: float = 0.0
    offset_length: float = 0.0
    ref_impedance: float = 50.0

    def __post_init__(self):
        if not self.ref_impedance > 0:
            raise ValueError("ref_impedance must be positive")
        if self.offset_length < 0:
            raise ValueError("offset_length must be >= 0")


@dataclass(frozen=True)
class ShortStandardModel:
    l0: float = 0.0
    l1: float = 0.0
    l2: float = 0.0
    l3: float = 0.0
    offset_length: float = 0.0
    ref_impedance: float = 50.0

    def __post_init__(self):
        if not self.ref_impedance > 0:
            raise ValueError("ref_impedance must be positive")
        if self.offset_length < 0:
            raise ValueError("offset_length must be >= 0")


@dataclass(frozen=True)
class LoadStandardModel:
    residual_reflection: complex = 0j

    def __post_init__(self):
        if not abs(self.residual_reflection) < 0.1:
            raise ValueError("load residual reflection must have magnitude < 0.1")


@dataclass(frozen=True)
class ErrorTerms:
    """Directivity, source match and reflection tracking at one frequency (or a batch)."""

    e_d: complex
    e_s: complex
    e_r: complex

    def __post_init__(self):
        if np.any(np.abs(self.e_r) == 0):
            raise ValueError("reflection tracking must be nonzero")


IDEAL_TERMS = ErrorTerms(0j, 0j, 1 + 0j)


@dataclass(frozen=True)
class RandomErrorDraw:
    """Cable transmission, cable/connector reflection and receiver noise of one connection."""

    t_cc: complex = 1 + 0j
    r_cc: complex = 0j
    noise: complex = 0j

    def __post_init__(self):
        if np.any(np.abs(np.asarray(self.t_cc) - 1) >= 1) or np.any(np.abs(self.r_cc) >= 1):
            raise ValueError("random error draw outside |t_cc - 1| < 1, |r_cc| < 1")


NO_RANDOM_ERROR = RandomErrorDraw()


def _check_frequency(f):
    if np.any(np.asarray(f) <= 0):
        raise ValueError("frequency must be positive")


def offset_phase(f, length):
    """Round-trip phase factor exp(-j 4 pi l / lambda) of an offset line."""
    return np.exp(-4j * np.pi * np.asarray(length) * np.asarray(f) / C_LIGHT)


def _poly(f, a0, a1, a2, a3):
    return a0 + f * (a1 + f * (a2 + f * a3))


def gamma_open_params(f, c0, c1, c2, c3, offset_length, ref_impedance=50.0):
    """Array form of :func:`gamma_open` taking the model coefficients directly."""
    _check_frequency(f)
    c = _poly(np.asarray(f, dtype=float), c0, c1, c2, c3)
    if np.any(c < 0):
        raise UnphysicalModelError("open fringing capacitance is negative at this frequency")
    # (Zo - Zr)/(Zo + Zr) with Zo = 1/(j w C), rewritten to stay finite at C = 0
    x = 2j * np.pi * f * c * ref_impedance
    return (1 - x) / (1 + x) * offset_phase(f, offset_length)


def gamma_open(f, model: OpenStandardModel):
    """Reflection coefficient of an offset open with a cubic fringing capacitance."""
    return gamma_open_params(
        f, model.c0, model.c1, model.c2, model.c3, model.offset_length, model.ref_impedance
    )


def gamma_short_params(f, l0, l1, l2, l3, offset_length, ref_impedance=50.0):
    _check_frequency(f)
    z = 2j * np.pi * f * _poly(np.asarray(f, dtype=float), l0, l1, l2, l3)
    return (z - ref_impedance) / (z + ref_impedance) * offset_phase(f, offset_length)


def gamma_short(f, model: ShortStandardModel):
    """Reflection coefficient of an offset short with a cubic series inductance."""
    return gamma_short_params(
        f, model.l0, model.l1, model.l2, model.l3, model.offset_length, model.ref_impedance
    )


def gamma_load(model: LoadStandardModel):
    return complex(model.residual_reflection)


def raw_measurement_unchecked(gamma_x, e_d, e_s, e_r, t_cc, r_cc, noise):
    """Measurement equation on arrays; returns ``(value, ok)``.

    ``ok`` is False wherever a denominator falls below the singularity
    threshold. The value there is not meaningful.
    """
    d1 = 1 - r_cc * gamma_x
    ok = np.abs(d1) > SINGULAR_TOL
    g = r_cc + t_cc**2 * gamma_x / np.where(ok, d1, 1)
    d2 = 1 - e_s * g
    ok = ok & (np.abs(d2) > SINGULAR_TOL)
    value = e_d + e_r * g / np.where(ok, d2, 1) + noise
    return value, ok


def raw_measurement(gamma_x, terms: ErrorTerms, rand: RandomErrorDraw = NO_RANDOM_ERROR):
    """Uncorrected reading of ``gamma_x`` through the error box and cable/connector."""
    value, ok = raw_measurement_unchecked(
        gamma_x, terms.e_d, terms.e_s, terms.e_r, rand.t_cc, rand.r_cc, rand.noise
    )
    if not np.all(ok):
        raise SingularDenominatorError("measurement equation denominator vanishes")
    return value


def calibrate_unchecked(s_m11, e_d, e_s, e_r):
    num = s_m11 - e_d
    den = e_r + num * e_s
    ok = np.abs(den) > SINGULAR_TOL
    return num / np.where(ok, den, 1), ok


def calibrate(s_m11, terms: ErrorTerms):
    """Remove the three-term error model from a raw reading."""
    value, ok = calibrate_unchecked(s_m11, terms.e_d, terms.e_s, terms.e_r)
    if not np.all(ok):
        raise SingularDenominatorError("calibration denominator vanishes")
    return value


def solve_error_terms_unchecked(m, g):
    """Batched SOL solve. ``m`` and ``g`` have shape (..., 3); returns (e_d, e_s, e_r, ok).

    Each standard obeys ``m = e_d + e_r g / (1 - e_s g)``. Multiplying out
    gives an equation linear in ``(e_d, e_s, delta)`` with
    ``delta = e_d e_s - e_r``::

        e_d + (g m) e_s - g delta = m

    and ``e_r = e_d e_s - delta`` is recovered afterwards.
    """
    m = np.asarray(m, dtype=complex)
    g = np.asarray(g, dtype=complex)
    m, g = np.broadcast_arrays(m, g)
    a = np.stack([np.ones_like(g), g * m, -g], axis=-1)
    # pairwise distinctness of the standards decides solvability
    diffs = np.stack(
        [g[..., 0] - g[..., 1], g[..., 0] - g[..., 2], g[..., 1] - g[..., 2]], axis=-1
    )
    ok = np.all(np.abs(diffs) > DISTINCT_TOL, axis=-1)
    det = np.linalg.det(a)
    ok = ok & (np.abs(det) > SINGULAR_TOL)
    safe = np.where(ok[..., None, None], a, np.eye(3))
    x = np.linalg.solve(safe, m[..., None])[..., 0]
    e_d, e_s, delta = x[..., 0], x[..., 1], x[..., 2]
    e_r = e_d * e_s - delta
    ok = ok & (np.abs(e_r) > 0)
    return e_d, e_s, e_r, ok


def solve_error_terms(m_open, m_short, m_load, g_open, g_short, g_load) -> ErrorTerms:
    """Error terms that map the three known standards onto their measured values."""
    g = np.array([g_open, g_short, g_load], dtype=complex)
    d = np.abs([g[0] - g[1], g[0] - g[2], g[1] - g[2]])
    if np.any(d <= DISTINCT_TOL):
        raise SingularSystemError("calibration standards are not pairwise distinct")
    e_d, e_s, e_r, ok = solve_error_terms_unchecked([m_open, m_short, m_load], g)
    if not ok:
        raise SingularSystemError("SOL system is singular for these measurements")
    return ErrorTerms(complex(e_d), complex(e_s), complex(e_r))
