"""GUP-modified dispersion relation and its closed-form derived quantities.

The generalized uncertainty relation ``dx >= hbar/dp + alpha' l_p^2 dp/hbar``
with ``dx ~ lambda_bar`` and ``p = hbar k`` gives the reduced wavelength
``lambda_bar = 1/k + alpha' l_p^2 k`` and the dispersion relation

    omega(k) = c k / (1 + alpha' l_p^2 k^2).

Every function here accepts a scalar or an array for the wave number (or
momentum) and returns the same shape.  Scalars come back as Python floats.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DispersionSingularity, NonPositiveWavelength

__all__ = [
    "SINGULARITY_TOL",
    "DispersionModel",
    "DispersionSample",
    "gen_wavelength",
    "omega_exact",
    "omega_first_order",
    "group_velocity_exact",
    "group_velocity_first_order",
    "gvd_beta_exact",
    "gvd_beta_first_order",
    "omega_third_derivative",
    "effective_planck",
    "energy_of_momentum",
    "sample",
]

SINGULARITY_TOL = 1e-12


@dataclass(frozen=True)
class DispersionModel:
    """Parameters of the GUP dispersion relation (natural units by default).

    ``alpha_prime`` may take either sign; for ``alpha_prime < 0`` the relation
    has a pole at ``k = 1 / (l_p sqrt(|alpha_prime|))``.
    """

    alpha_prime: float = 0.0
    l_p: float = 1.0
    c: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.alpha_prime):
            raise ValueError("alpha_prime must be finite")
        for name in ("l_p", "c", "hbar"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")

    @property
    def a(self) -> float:
        """The combination alpha' l_p^2 that multiplies k^2 everywhere."""
        return self.alpha_prime * self.l_p**2

    @property
    def pole(self) -> float | None:
        """Positive wave number of the dispersion pole, or None for alpha' >= 0."""
        if self.alpha_prime >= 0:
            return None
        return 1.0 / (self.l_p * math.sqrt(-self.alpha_prime))

    def epsilon(self, k0: float) -> float:
        """Dimensionless control parameter alpha' l_p^2 k0^2."""
        return self.a * k0**2

    @classmethod
    def from_epsilon(cls, epsilon: float, k0: float, **kwargs) -> "DispersionModel":
        """Model whose alpha' l_p^2 k0^2 equals ``epsilon``."""
        l_p = kwargs.get("l_p", 1.0)
        return cls(alpha_prime=epsilon / (l_p * k0) ** 2, **kwargs)

    # duck-typed hook used by the spectral synthesizer
    def omega(self, k):
        return omega_exact(k, self)


@dataclass(frozen=True)
class DispersionSample:
    k: float
    omega: float
    v_g: float
    beta: float


def _out(x):
    if np.ndim(x) == 0:
        return float(x)
    return x


def _denominator(k, m: DispersionModel):
    k = np.asarray(k, dtype=float)
    d = 1.0 + m.a * k * k
    if np.any(np.abs(d) < SINGULARITY_TOL):
        bad = np.atleast_1d(k)[np.atleast_1d(np.abs(d) < SINGULARITY_TOL)]
        raise DispersionSingularity(
            f"1 + alpha' l_p^2 k^2 vanishes at k = {bad[0]!r} (alpha'={m.alpha_prime!r})"
        )
    return k, d


def gen_wavelength(k, m: DispersionModel):
    """Generalized reduced wavelength ``1/k + alpha' l_p^2 k``.

    Raises NonPositiveWavelength when the result is <= 0, which can only happen
    for negative alpha' beyond the pole.
    """
    k = np.asarray(k, dtype=float)
    if np.any(k <= 0):
        raise ValueError("gen_wavelength requires k > 0")
    lam = 1.0 / k + m.a * k
    if np.any(lam <= 0):
        raise NonPositiveWavelength(
            f"reduced wavelength {np.min(lam)!r} <= 0 for alpha'={m.alpha_prime!r}"
        )
    return _out(lam)


def omega_exact(k, m: DispersionModel):
    k, d = _denominator(k, m)
    return _out(m.c * k / d)


def omega_first_order(k, m: DispersionModel):
    k = np.asarray(k, dtype=float)
    return _out(m.c * k * (1.0 - m.a * k * k))


def group_velocity_exact(k0, m: DispersionModel):
    """d omega / dk = c (1 - a k^2) / (1 + a k^2)^2 with a = alpha' l_p^2."""
    k0, d = _denominator(k0, m)
    return _out(m.c * (1.0 - m.a * k0 * k0) / (d * d))


def group_velocity_first_order(k0, m: DispersionModel):
    k0 = np.asarray(k0, dtype=float)
    return _out(m.c * (1.0 - 3.0 * m.a * k0 * k0))


def gvd_beta_exact(k0, m: DispersionModel):
    """Half the second derivative of omega, in the unsimplified rational form.

    beta = [-3 a c k (1+a k^2)^2 + 4 a^2 c k^3 (1+a k^2)] / (1+a k^2)^4
    """
    k0, d = _denominator(k0, m)
    a, c = m.a, m.c
    num = -3.0 * a * c * k0 * d * d + 4.0 * a * a * c * k0**3 * d
    return _out(num / d**4)


def gvd_beta_first_order(k0, m: DispersionModel):
    k0 = np.asarray(k0, dtype=float)
    return _out(-3.0 * m.a * m.c * k0)


def omega_third_derivative(k0, m: DispersionModel):
    """d^3 omega / dk^3 = -6 a c (1 - 6 a k^2 + a^2 k^4) / (1 + a k^2)^4."""
    k0, d = _denominator(k0, m)
    a = m.a
    ak2 = a * k0 * k0
    return _out(-6.0 * a * m.c * (1.0 - 6.0 * ak2 + ak2 * ak2) / d**4)


def effective_planck(k, m: DispersionModel):
    """Wave-number dependent Planck constant hbar (1 - alpha' l_p^2 k^2)."""
    k = np.asarray(k, dtype=float)
    return _out(m.hbar * (1.0 - m.a * k * k))


def energy_of_momentum(p, m: DispersionModel):
    """E'(p) = p c / (1 + alpha' (l_p p / hbar)^2)."""
    p = np.asarray(p, dtype=float)
    d = 1.0 + m.alpha_prime * (m.l_p * p / m.hbar) ** 2
    if np.any(np.abs(d) < SINGULARITY_TOL):
        raise DispersionSingularity(
            f"1 + alpha' (l_p p/hbar)^2 vanishes (alpha'={m.alpha_prime!r})"
        )
    return _out(p * m.c / d)


def sample(k, m: DispersionModel, first_order: bool = False) -> list[DispersionSample]:
    """Tabulate (k, omega, v_g, beta) at each wave number in ``k``."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    if first_order:
        fns = (omega_first_order, group_velocity_first_order, gvd_beta_first_order)
    else:
        fns = (omega_exact, group_velocity_exact, gvd_beta_exact)
    w, v, b = (np.atleast_1d(f(k, m)) for f in fns)
    return [DispersionSample(float(ki), float(wi), float(vi), float(bi))
            for ki, wi, vi, bi in zip(k, w, v, b)]
