"""System Hamiltonian assembly, drive/steady-state algebra, and the
effective cavity-mediated exchange between gate qubits.

All rates are angular frequencies (rad/s) with hbar = 1, except
`drive_amplitude` which takes SI watts and returns 1/s. JSON configs carry
frequencies in Hz under mandatory `*_hz` keys and are multiplied by 2*pi
on ingestion.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.constants import hbar as HBAR_SI

from .duffing import DuffingSpectrum
from .fockspace import Operator, SpaceDescriptor, annihilation_op, embed, quadrature_op


class ResonanceProximityError(ValueError):
    """Detuning too close to a beam transition for the dispersive treatment."""


# dataclass field -> JSON key for Hz-valued entries (x 2*pi on load)
_HZ_KEYS = {
    "Delta": "Delta_hz",
    "g_G": "g_G_hz",
    "G_tilde": "G_tilde_hz",
    "omega_G": "omega_G_hz",
    "lam": "lambda_hz",
    "kappa": "kappa_hz",
    "gamma_m": "gamma_m_hz",
    "eps_L": "eps_L_hz",
    "omega_L": "omega_L_hz",
    "g0": "g0_hz",
}
_PLAIN_KEYS = {"n_th": "n_th", "P_in": "P_in", "T": "T", "Q": "Q"}


@dataclass(frozen=True)
class PhysicalParams:
    """Physical constants of one scenario (angular frequencies, rad/s).

    Delta may carry either sign; every rate must be nonnegative. Optional
    fields default to None and are filled by the scenario runner (gamma_m
    from Q, n_th from T) when absent.
    """

    Delta: float = 0.0
    g_G: float = 0.0
    G_tilde: float = 0.0
    omega_G: float = 0.0
    lam: float = 0.0
    kappa: float = 0.0
    gamma_m: float | None = None
    n_th: float | None = None
    eps_L: float | None = None
    omega_L: float | None = None
    P_in: float | None = None
    g0: float | None = None
    T: float | None = None
    Q: float | None = None

    def __post_init__(self):
        for name in ("g_G", "G_tilde", "omega_G", "kappa", "gamma_m", "n_th", "Q", "T"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"{name} must be nonnegative, got {v}")
        if self.gamma_m is not None and self.Q and self.omega_G:
            expected = self.omega_G / self.Q
            if abs(self.gamma_m - expected) > 1e-10 * max(abs(expected), 1e-300):
                raise ValueError(
                    f"gamma_m = {self.gamma_m} inconsistent with omega_G/Q = {expected}"
                )

    @classmethod
    def from_config(cls, mapping: dict) -> "PhysicalParams":
        """Build from a JSON-style mapping; frequencies must use `*_hz` keys."""
        known = set(_HZ_KEYS.values()) | set(_PLAIN_KEYS.values())
        unknown = set(mapping) - known
        if unknown:
            raise ValueError(f"unknown parameter keys {sorted(unknown)}; expected {sorted(known)}")
        kw = {}
        for field_name, key in _HZ_KEYS.items():
            if key in mapping:
                kw[field_name] = 2.0 * np.pi * float(mapping[key])
        for field_name, key in _PLAIN_KEYS.items():
            if key in mapping:
                kw[field_name] = float(mapping[key])
        return cls(**kw)

    def with_values(self, **kw) -> "PhysicalParams":
        return replace(self, **kw)


@dataclass(frozen=True)
class EffectiveGateParams:
    """Exchange rate and Stark shifts of the dispersive gate Hamiltonian."""

    Omega: float
    stark_shifts: tuple[float, float]
    X_G: float
    omega_G: float


def drive_amplitude(P_in: float, kappa: float, omega_L: float) -> float:
    """Laser drive amplitude eps_L = 2 sqrt(P_in kappa / (hbar omega_L)), in 1/s."""
    if P_in < 0 or kappa <= 0 or omega_L <= 0:
        raise ValueError("P_in must be >= 0 and kappa, omega_L positive")
    return 2.0 * np.sqrt(P_in * kappa / (HBAR_SI * omega_L))


def steady_amplitude(eps_L: float, Delta: float, kappa: float) -> complex:
    """Steady intracavity amplitude alpha = eps_L / (2 Delta + i kappa)."""
    den = 2.0 * Delta + 1j * kappa
    if den == 0:
        raise ValueError("2*Delta + i*kappa must be nonzero")
    return complex(eps_L / den)


def enhanced_coupling(alpha: complex, g0: float) -> float:
    """Linearized optomechanical coupling g = sqrt(2) |alpha| g0."""
    if g0 < 0:
        raise ValueError("g0 must be nonnegative")
    return float(np.sqrt(2.0) * abs(alpha) * g0)


def cavity_quadrature(dim: int, convention: str = "symmetric") -> Operator:
    """X_c as (a+a†)/sqrt(2) ("symmetric") or a+a† ("bare").

    The bare form is the drive-phase-fixed quadrature (alpha real positive);
    the symmetric form mirrors the beam normalization, with g_G absorbing
    the residual sqrt(2).
    """
    if convention == "symmetric":
        return quadrature_op(dim)
    if convention == "bare":
        a = annihilation_op(dim)
        return Operator(a.space, a.data + a.data.conj().T, hermitian=True)
    raise ValueError(f"quadrature convention must be 'symmetric' or 'bare', got {convention!r}")


def system_hamiltonian(
    p: PhysicalParams, space: SpaceDescriptor, quadrature_convention: str = "symmetric"
) -> Operator:
    """Linearized cavity + two driven Duffing beams:

    H = -Delta a†a + sum_j g_G X_c X_j - G_tilde X_1 X_2
        + sum_j [omega_G b_j†b_j + (lam/2)(b_j† + b_j)^4]
    """
    if len(space.dims) != 3:
        raise ValueError(f"space must have exactly 3 factors (cavity, beam, beam), got {len(space.dims)}")
    n_cav = space.dims[0]
    a = embed(annihilation_op(n_cav), space, 0)
    x_c = embed(cavity_quadrature(n_cav, quadrature_convention), space, 0)
    h = (-p.Delta) * (a.dag() @ a)
    for slot in (1, 2):
        n_b = space.dims[slot]
        b = embed(annihilation_op(n_b), space, slot)
        x_j = embed(quadrature_op(n_b), space, slot)
        x4 = b.data + b.data.conj().T
        quartic = Operator(space, np.linalg.matrix_power(x4, 4))
        h = h + p.g_G * (x_c @ x_j) + p.omega_G * (b.dag() @ b) + (0.5 * p.lam) * quartic
    x1 = embed(quadrature_op(space.dims[1]), space, 1)
    x2 = embed(quadrature_op(space.dims[2]), space, 2)
    h = h - p.G_tilde * (x1 @ x2)
    return Operator(space, h.data, hermitian=True)


def effective_gate_hamiltonian(spec: DuffingSpectrum, g_G: float, Delta: float) -> EffectiveGateParams:
    """Second-order exchange rate Omega = Delta X_G^2 g_G^2 / (Delta^2 - omega_G^2)
    and the per-level Stark sums, from a beam spectrum.

    Guards the dispersive assumption: every |Delta - delta_nm| within the
    trusted block must exceed 10 |g_G|.
    """
    k = spec.dim_trust
    for n in range(k):
        for m in range(k):
            if n == m:
                continue
            gap = abs(Delta - spec.delta[n, m])
            if gap < 10.0 * abs(g_G):
                raise ResonanceProximityError(
                    f"|Delta - delta[{n},{m}]| = {gap} < 10 g_G = {10*abs(g_G)}"
                )
    x10 = abs(spec.X[0, 1])
    omega_g = spec.delta[1, 0]
    omega = Delta * x10**2 * g_G**2 / (Delta**2 - omega_g**2)
    shifts = []
    for level in (0, 1):
        s = 0.0
        for m in range(k):
            s += abs(spec.X[level, m]) ** 2 / (Delta + spec.delta[level, m])
        shifts.append(0.5 * g_G**2 * s)
    return EffectiveGateParams(float(omega), (shifts[0], shifts[1]), float(x10), float(omega_g))


def exchange_rate_paths(spec: DuffingSpectrum, g_G: float, Delta: float) -> float:
    """Exchange coefficient summed over the two second-order paths,
    (g^2 X_G^2 / 2)[1/(Delta + omega_G) + 1/(Delta - omega_G)]; identical to
    the closed-form Omega and kept as an independent code path."""
    x10 = abs(spec.X[0, 1])
    omega_g = spec.delta[1, 0]
    return float(0.5 * g_G**2 * x10**2 * (1.0 / (Delta + omega_g) + 1.0 / (Delta - omega_g)))


def rabi_angle(Omega: float, t: float) -> float:
    """Accumulated exchange angle Omega * t for constant coupling."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    return Omega * t


def rabi_angle_from_profile(
    times: np.ndarray, g_profile: np.ndarray, X_G: float, omega_G: float, Delta: float
) -> float:
    """Exchange angle for time-dependent coupling:
    (Delta X_G^2 / (Delta^2 - omega_G^2)) * int g_G(t')^2 dt', trapezoidal."""
    times = np.asarray(times, dtype=float)
    g_profile = np.asarray(g_profile, dtype=float)
    if times.ndim != 1 or times.shape != g_profile.shape or times.size < 2:
        raise ValueError("times and g_profile must be equal-length 1-D arrays, >= 2 samples")
    if np.any(np.diff(times) <= 0):
        raise ValueError("times must be strictly increasing")
    integral = float(np.trapezoid(g_profile**2, times))
    return Delta * X_G**2 / (Delta**2 - omega_G**2) * integral
