"""Generalized (fourth-order) Klein-Gordon equation and the GUP momentum operator.

The first-order-in-alpha' field equation is

    psi_tt = c^2 psi_xx - q psi_xxxx - (m0 c^2 / hbar)^2 psi,

with plane-wave dispersion ``omega^2 = c^2 k^2 + q k^4 + (m0 c^2/hbar)^2``.
Two sign conventions are supported for ``q``:

``derivation_consistent`` (default)
    ``q = -2 alpha' l_p^2 c^2``, so that ``omega ~ c k (1 - alpha' l_p^2 k^2)``
    agrees with the expansion of the exact GUP dispersion.
``paper_literal``
    ``q = +2 alpha' l_p^2 c^2``, the opposite sign, kept as a switch.

Both solvers act on periodic grids.  ``evolve_spectral`` solves each Fourier
mode exactly; ``evolve_fd`` is an explicit leapfrog scheme with second-order
central stencils, run through the compiled kernel when available.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .errors import StabilityViolation, UnstableModes
from .packet import GaussianPacketSpec
from .spectral import FieldSnapshot, KGrid, sample_spectrum, synthesize

__all__ = [
    "DERIVATION_CONSISTENT",
    "PAPER_LITERAL",
    "GKGParams",
    "GKGState",
    "GKGBranch",
    "gkg_dispersion_sq",
    "grid_wavenumbers",
    "evolve_spectral",
    "evolve_fd",
    "fd_dispersion_sq",
    "fd_stability_bound",
    "mode_energy",
    "energy",
    "apply_momentum_op",
    "apply_momentum_op_sq",
    "momentum_eigenvalue",
    "momentum_sq_eigenvalue",
    "momentum_sq_discrepancy",
    "opcheck",
    "build_initial_data",
]

DERIVATION_CONSISTENT = "derivation_consistent"
PAPER_LITERAL = "paper_literal"
_CONVENTIONS = (DERIVATION_CONSISTENT, PAPER_LITERAL)
_POLICIES = ("error", "allow_flagged")
CFL_SAFETY = 0.9


@dataclass(frozen=True)
class GKGParams:
    alpha_prime: float = 0.0
    l_p: float = 1.0
    c: float = 1.0
    hbar: float = 1.0
    m0: float = 0.0
    sign_convention: str = DERIVATION_CONSISTENT
    instability_policy: str = "error"

    def __post_init__(self):
        if self.m0 < 0:
            raise ValueError("m0 must be >= 0")
        for name in ("l_p", "c", "hbar"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.sign_convention not in _CONVENTIONS:
            raise ValueError(f"sign_convention must be one of {_CONVENTIONS}")
        if self.instability_policy not in _POLICIES:
            raise ValueError(f"instability_policy must be one of {_POLICIES}")

    @property
    def beta_prime(self) -> float:
        """Momentum-operator coefficient alpha' l_p^2 / hbar^2."""
        return self.alpha_prime * self.l_p**2 / self.hbar**2

    @property
    def quartic(self) -> float:
        """Coefficient q of k^4 in omega^2."""
        sign = -1.0 if self.sign_convention == DERIVATION_CONSISTENT else 1.0
        return sign * 2.0 * self.alpha_prime * self.l_p**2 * self.c**2

    @property
    def mass_term(self) -> float:
        return (self.m0 * self.c**2 / self.hbar) ** 2


@dataclass
class GKGState:
    psi: FieldSnapshot
    psi_dot: FieldSnapshot
    unstable: bool = False
    sign_convention: str = DERIVATION_CONSISTENT
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.psi.same_grid(self.psi_dot):
            raise ValueError("psi and psi_dot live on different grids")
        if self.psi.t != self.psi_dot.t:
            raise ValueError("psi and psi_dot carry different times")

    @property
    def t(self) -> float:
        return self.psi.t


def gkg_dispersion_sq(k, p: GKGParams):
    """omega^2(k) implied by the field equation; negative values mean growth."""
    k = np.asarray(k, dtype=float)
    k2 = k * k
    out = p.c**2 * k2 + p.quartic * k2 * k2 + p.mass_term
    return float(out) if out.ndim == 0 else out


class GKGBranch:
    """Positive-frequency branch omega(k) = sqrt(omega^2), for Fourier synthesis."""

    def __init__(self, params: GKGParams):
        self.params = params

    def omega(self, k):
        w2 = np.asarray(gkg_dispersion_sq(k, self.params))
        if np.any(w2 < 0):
            raise UnstableModes("negative omega^2 on the synthesis grid",
                                _k_range(np.asarray(k), w2))
        return np.sqrt(w2)


def grid_wavenumbers(f: FieldSnapshot) -> np.ndarray:
    return 2.0 * math.pi * np.fft.fftfreq(f.n, d=f.dx)


def _k_range(k, w2):
    bad = np.abs(np.atleast_1d(k)[np.atleast_1d(w2) < 0])
    return (float(bad.min()), float(bad.max())) if bad.size else None


def _check_unstable(k, w2, p: GKGParams) -> bool:
    unstable = bool(np.any(w2 < 0))
    if unstable and p.instability_policy == "error":
        lo, hi = _k_range(k, w2)
        raise UnstableModes(
            f"omega^2 < 0 for {lo:.6g} <= |k| <= {hi:.6g} "
            f"({p.sign_convention}, alpha'={p.alpha_prime!r})",
            (lo, hi),
        )
    return unstable


def _snapshot_like(f: FieldSnapshot, values, t) -> FieldSnapshot:
    return FieldSnapshot(x0=f.x0, dx=f.dx, values=values, t=t)


def evolve_spectral(state: GKGState, p: GKGParams, t: float) -> GKGState:
    """Exact per-mode evolution of ``state`` by a time interval ``t``."""
    k = grid_wavenumbers(state.psi)
    w2 = gkg_dispersion_sq(k, p)
    unstable = _check_unstable(k, w2, p)
    a = np.fft.fft(state.psi.values)
    b = np.fft.fft(state.psi_dot.values)

    stable = w2 >= 0
    w = np.sqrt(np.abs(w2))
    wt = w * t
    # sin(wt)/w written through sinc so that the w = 0 mode gives t
    cos_t = np.cos(wt)
    sin_over_w = t * np.sinc(wt / math.pi)
    w_sin = -w * np.sin(wt)
    if unstable:
        g = ~stable
        cos_t[g] = np.cosh(wt[g])
        sin_over_w[g] = np.sinh(wt[g]) / w[g]
        w_sin[g] = w[g] * np.sinh(wt[g])

    a_t = a * cos_t + b * sin_over_w
    b_t = a * w_sin + b * cos_t
    t_new = state.t + t
    return GKGState(
        psi=_snapshot_like(state.psi, np.fft.ifft(a_t), t_new),
        psi_dot=_snapshot_like(state.psi_dot, np.fft.ifft(b_t), t_new),
        unstable=state.unstable or unstable,
        sign_convention=p.sign_convention,
        meta=dict(state.meta, solver="spectral"),
    )


def fd_dispersion_sq(k, dx: float, p: GKGParams):
    """omega^2 seen by the central stencils: k replaced by (2/dx) sin(k dx/2)."""
    K = 2.0 / dx * np.sin(np.asarray(k, dtype=float) * dx / 2.0)
    return gkg_dispersion_sq(K, p)


def fd_stability_bound(f: FieldSnapshot, p: GKGParams, safety: float = CFL_SAFETY) -> float:
    """Largest leapfrog step: safety * 2 / max|omega| over the grid's modes."""
    w2 = fd_dispersion_sq(grid_wavenumbers(f), f.dx, p)
    w2 = w2[w2 >= 0]
    w_max = math.sqrt(float(w2.max())) if w2.size else 0.0
    return math.inf if w_max == 0 else safety * 2.0 / w_max


def _stencil(u, dx, p: GKGParams):
    up1, um1 = np.roll(u, -1), np.roll(u, 1)
    lap = (up1 - 2.0 * u + um1) / dx**2
    bih = (np.roll(u, -2) - 4.0 * up1 + 6.0 * u - 4.0 * um1 + np.roll(u, 2)) / dx**4
    return p.c**2 * lap - p.quartic * bih - p.mass_term * u


def evolve_fd(state: GKGState, p: GKGParams, dt: float, n_steps: int) -> GKGState:
    """Leapfrog integration over ``n_steps`` steps of size ``dt``.

    The first step is a second-order Taylor start, and the returned time
    derivative is the centred difference around the final level.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    f = state.psi
    if f.n < 5:
        raise ValueError("evolve_fd needs at least 5 grid points")
    k = grid_wavenumbers(f)
    unstable = _check_unstable(k, gkg_dispersion_sq(k, p), p)
    dt_max = fd_stability_bound(f, p)
    if dt > dt_max:
        raise StabilityViolation(f"dt={dt!r} exceeds the leapfrog bound {dt_max!r}",
                                 dt=dt, dt_max=dt_max)
    if n_steps == 0:
        return replace(state, meta=dict(state.meta, solver="fd"))

    u0 = f.values
    u1 = u0 + dt * state.psi_dot.values + 0.5 * dt**2 * _stencil(u0, f.dx, p)
    c2 = p.c**2 * dt**2 / f.dx**2
    c4 = -p.quartic * dt**2 / f.dx**4
    c0 = -p.mass_term * dt**2
    u_prev, u_cur = kernels.leapfrog(u0, u1, n_steps - 1, c2, c4, c0)
    _, u_next = kernels.leapfrog(u_prev, u_cur, 1, c2, c4, c0)
    t_new = state.t + n_steps * dt
    return GKGState(
        psi=_snapshot_like(f, u_cur, t_new),
        psi_dot=_snapshot_like(f, (u_next - u_prev) / (2.0 * dt), t_new),
        unstable=state.unstable or unstable,
        sign_convention=p.sign_convention,
        meta=dict(state.meta, solver="fd", dt=dt, dt_max=dt_max),
    )


def mode_energy(state: GKGState, p: GKGParams) -> np.ndarray:
    """|psi_dot_hat|^2 + omega^2 |psi_hat|^2 per Fourier mode."""
    k = grid_wavenumbers(state.psi)
    a = np.fft.fft(state.psi.values)
    b = np.fft.fft(state.psi_dot.values)
    return np.abs(b) ** 2 + gkg_dispersion_sq(k, p) * np.abs(a) ** 2


def energy(state: GKGState, p: GKGParams) -> float:
    return float(np.sum(mode_energy(state, p)))


def momentum_eigenvalue(k, beta_prime: float, hbar: float = 1.0):
    """Plane-wave eigenvalue of (hbar/i)(1 + beta' ((hbar/i) d/dx)^2) d/dx."""
    k = np.asarray(k, dtype=float)
    out = hbar * k * (1.0 + beta_prime * hbar**2 * k * k)
    return float(out) if out.ndim == 0 else out


def momentum_sq_eigenvalue(k, beta_prime: float, hbar: float = 1.0):
    """Plane-wave eigenvalue of -hbar^2 d^2 + 2 beta' hbar^4 d^4."""
    k = np.asarray(k, dtype=float)
    out = hbar**2 * k * k * (1.0 + 2.0 * beta_prime * hbar**2 * k * k)
    return float(out) if out.ndim == 0 else out


def momentum_sq_discrepancy(k, beta_prime: float, hbar: float = 1.0):
    """(p eigenvalue)^2 minus the truncated p^2 eigenvalue: beta'^2 hbar^6 k^6."""
    return momentum_eigenvalue(k, beta_prime, hbar) ** 2 - momentum_sq_eigenvalue(k, beta_prime, hbar)


def _apply_multiplier(f: FieldSnapshot, symbol) -> FieldSnapshot:
    return _snapshot_like(f, np.fft.ifft(symbol * np.fft.fft(f.values)), f.t)


def apply_momentum_op(f: FieldSnapshot, p: GKGParams | float, hbar: float | None = None):
    """Apply the generalized momentum operator spectrally.

    ``p`` is a GKGParams (beta' = alpha' l_p^2 / hbar^2) or a bare beta'.
    """
    beta_prime, hb = _beta_hbar(p, hbar)
    return _apply_multiplier(f, momentum_eigenvalue(grid_wavenumbers(f), beta_prime, hb))


def apply_momentum_op_sq(f: FieldSnapshot, p: GKGParams | float, hbar: float | None = None):
    beta_prime, hb = _beta_hbar(p, hbar)
    return _apply_multiplier(f, momentum_sq_eigenvalue(grid_wavenumbers(f), beta_prime, hb))


def _beta_hbar(p, hbar):
    if isinstance(p, GKGParams):
        return p.beta_prime, p.hbar if hbar is None else hbar
    return float(p), 1.0 if hbar is None else hbar


def opcheck(beta_prime: float, k: float, hbar: float = 1.0, n: int = 64,
            mode: int = 8) -> dict:
    """Apply both operators to a grid plane wave of wave number ``k``.

    The box length is chosen so that ``k`` is exactly Fourier mode ``mode``.
    Returns the analytic eigenvalues and the worst relative error between the
    numerically measured and analytic values.
    """
    if k == 0:
        raise ValueError("k must be non-zero")
    length = 2.0 * math.pi * mode / abs(k)
    dx = length / n
    x = np.arange(n) * dx
    f = FieldSnapshot(0.0, dx, np.exp(1j * k * x))
    lam_p = momentum_eigenvalue(k, beta_prime, hbar)
    lam_p2 = momentum_sq_eigenvalue(k, beta_prime, hbar)
    got_p = apply_momentum_op(f, beta_prime, hbar).values / f.values
    got_p2 = apply_momentum_op_sq(f, beta_prime, hbar).values / f.values
    err = max(float(np.max(np.abs(got_p - lam_p))) / abs(lam_p),
              float(np.max(np.abs(got_p2 - lam_p2))) / abs(lam_p2))
    return {
        "eigenvalue_p": lam_p,
        "eigenvalue_p_sq": lam_p2,
        "relative_error": err,
    }


def build_initial_data(spec: GaussianPacketSpec, p: GKGParams, branch: str = "positive_frequency",
                       n: int = 1024, length: float = 200.0, x0: float | None = None,
                       n_sigma: float = 6.0) -> GKGState:
    """Gaussian packet on a periodic box of ``n`` points and size ``length``.

    ``positive_frequency`` sets psi_dot_hat = -i omega psi_hat on the spectrum
    support; ``standing`` sets psi_dot = 0.
    """
    if branch not in ("positive_frequency", "standing"):
        raise ValueError(f"unknown branch {branch!r}")
    grid = KGrid.fft_modes(n, length)
    g = sample_spectrum(spec, grid, n_sigma=n_sigma)
    if x0 is None:
        x0 = -0.5 * length

    class _Static:
        @staticmethod
        def omega(k):
            return np.zeros_like(k)

    psi = synthesize(g, grid, _Static, 0.0, x0=x0)
    if branch == "standing":
        psi_dot = np.zeros(n, dtype=complex)
    else:
        k = grid_wavenumbers(psi)
        psi_hat = np.fft.fft(psi.values)
        w2 = gkg_dispersion_sq(k, p)
        support = np.abs(psi_hat) > 1e-14 * np.abs(psi_hat).max()
        if np.any(w2[support] < 0):
            lo, hi = _k_range(k[support], w2[support])
            raise UnstableModes(
                f"omega^2 < 0 on the packet spectrum for {lo:.6g} <= |k| <= {hi:.6g}",
                (lo, hi),
            )
        w = np.sqrt(np.clip(w2, 0.0, None))
        psi_dot = np.fft.ifft(-1j * w * psi_hat)
    return GKGState(psi=psi, psi_dot=_snapshot_like(psi, psi_dot, 0.0),
                    sign_convention=p.sign_convention,
                    meta={"branch": branch, "grid": grid})
