"""Closed-form Gaussian packet propagation under a quadratic dispersion expansion.

A packet with spectral amplitude ``g(k) = exp(-alpha (k - k0)^2)`` and
``omega(k) ~ omega0 + v_g (k - k0) + beta (k - k0)^2`` integrates to

    f(x, t) = exp(i(k0 x - omega0 t)) sqrt(pi / (alpha + i beta t))
              * exp(-(x - v_g t)^2 / (4 (alpha + i beta t)))

whose intensity is a Gaussian of variance ``(alpha^2 + beta^2 t^2) / alpha``.
Widths in this module are RMS widths of ``|f|^2``, so the t = 0 width is
``sqrt(alpha)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import dispersion as disp
from .dispersion import DispersionModel
from .errors import NegativeRadicand

__all__ = [
    "GaussianPacketSpec",
    "QuadraticPropagator",
    "analytic_field",
    "analytic_intensity",
    "width_ratio",
    "initial_width",
    "gup_width_exact",
    "gup_width_first_order",
    "gup_width_paper_first_order",
    "PaperLiteralWidth",
]


@dataclass(frozen=True)
class GaussianPacketSpec:
    alpha: float
    k0: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"alpha must be positive, got {self.alpha!r}")
        if not math.isfinite(self.k0):
            raise ValueError("k0 must be finite")

    @property
    def sigma_k(self) -> float:
        """Standard deviation of the amplitude g(k) viewed as a Gaussian in k."""
        return 1.0 / math.sqrt(2.0 * self.alpha)

    @classmethod
    def from_sigma_k(cls, sigma_k: float, k0: float) -> "GaussianPacketSpec":
        return cls(alpha=1.0 / (2.0 * sigma_k**2), k0=k0)

    def amplitude(self, k):
        k = np.asarray(k, dtype=float)
        return np.exp(-self.alpha * (k - self.k0) ** 2)


@dataclass(frozen=True)
class QuadraticPropagator:
    """Second-order Taylor data of omega(k) about the carrier."""

    omega0: float
    v_g: float
    beta: float

    @classmethod
    def from_model(cls, k0: float, m: DispersionModel, first_order: bool = False):
        if first_order:
            return cls(disp.omega_first_order(k0, m),
                       disp.group_velocity_first_order(k0, m),
                       disp.gvd_beta_first_order(k0, m))
        return cls(disp.omega_exact(k0, m),
                   disp.group_velocity_exact(k0, m),
                   disp.gvd_beta_exact(k0, m))


def analytic_field(x, t, spec: GaussianPacketSpec, prop: QuadraticPropagator):
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    q = spec.alpha + 1j * prop.beta * t
    # principal branch: Re(q) = alpha > 0 keeps the root continuous in t
    f = (np.exp(1j * (spec.k0 * x - prop.omega0 * t))
         * np.sqrt(np.pi / q)
         * np.exp(-((x - prop.v_g * t) ** 2) / (4.0 * q)))
    return complex(f) if f.ndim == 0 else f


def analytic_intensity(x, t, spec: GaussianPacketSpec, prop: QuadraticPropagator):
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    s = spec.alpha**2 + (prop.beta * t) ** 2
    out = np.sqrt(np.pi**2 / s) * np.exp(-spec.alpha * (x - prop.v_g * t) ** 2 / (2.0 * s))
    return float(out) if out.ndim == 0 else out


def width_ratio(t, spec: GaussianPacketSpec, prop: QuadraticPropagator | float):
    """(dx)_t / (dx)_0 = sqrt(1 + beta^2 t^2 / alpha^2).

    ``prop`` may be a propagator or a bare beta value.
    """
    beta = prop.beta if isinstance(prop, QuadraticPropagator) else float(prop)
    t = np.asarray(t, dtype=float)
    out = np.sqrt(1.0 + (beta * t / spec.alpha) ** 2)
    return float(out) if out.ndim == 0 else out


def initial_width(spec: GaussianPacketSpec) -> float:
    return math.sqrt(spec.alpha)


def gup_width_exact(t, spec: GaussianPacketSpec, m: DispersionModel):
    beta = disp.gvd_beta_exact(spec.k0, m)
    return initial_width(spec) * width_ratio(t, spec, beta)


def gup_width_first_order(t, spec: GaussianPacketSpec, m: DispersionModel):
    beta = disp.gvd_beta_first_order(spec.k0, m)
    return initial_width(spec) * width_ratio(t, spec, beta)


@dataclass(frozen=True)
class PaperLiteralWidth:
    width: float
    paper_literal: bool = True


def gup_width_paper_first_order(t: float, spec: GaussianPacketSpec,
                                m: DispersionModel) -> PaperLiteralWidth:
    """Diagnostic: (dx)_0 sqrt(1 - 3 alpha' l_p^2 c k0 t^2 / alpha^2).

    An alternative first-order width law, kept for comparison only.  It is
    linear in alpha' and can shrink the packet, unlike the quadratic law with
    the first-order beta, which is what :func:`gup_width_first_order` uses.
    """
    radicand = 1.0 - 3.0 * m.a * m.c * spec.k0 * t**2 / spec.alpha**2
    if radicand < 0:
        raise NegativeRadicand(f"radicand {radicand!r} < 0 at t={t!r}")
    return PaperLiteralWidth(initial_width(spec) * math.sqrt(radicand))
