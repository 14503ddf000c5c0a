"""Open-system (Lindblad) and closed-system propagation on a time grid.

The generator here is always time-independent, which the integrators
exploit:

* ``expm`` (default): exact propagator stepping, rho_{k+1} = e^{L dt} rho_k.
  Deterministic and unconditionally stable.
* ``rk4``: fixed-step classic Runge-Kutta. For a linear autonomous system a
  fixed-step RK4 sweep is exactly multiplication by the stability polynomial
  I + hL + ... + (hL)^4/24, so the substeps between output points are applied
  as a matrix power; identical to sequential stepping up to rounding and
  byte-deterministic across runs.
* ``rk45``: adaptive embedded Dormand-Prince 4(5) on the vectorized density
  matrix with per-step max-norm error control.

Every path symmetrizes the density matrix at accepted steps and records the
pre-symmetrization Hermiticity drift, the trace drift and the minimum output
eigenvalue in ``Trajectory.stats``.
"""
from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.constants import hbar as HBAR_SI, k as KB_SI
from scipy.linalg import eigh, expm

from .fockspace import Operator, QuantumState, SpaceDescriptor, annihilation_op, embed


class IntegrationError(RuntimeError):
    """Step control failed; carries the integrator diagnostics."""

    def __init__(self, message: str, stats: dict):
        super().__init__(f"{message} (diagnostics: {stats})")
        self.stats = stats


def thermal_occupation(omega: float, T: float) -> float:
    """Bose-Einstein occupation 1/(exp(hbar omega / kB T) - 1); 0 at T = 0."""
    if omega <= 0:
        raise ValueError("omega must be positive")
    if T < 0:
        raise ValueError("temperature must be nonnegative")
    if T == 0.0:
        return 0.0
    return float(1.0 / np.expm1(HBAR_SI * omega / (KB_SI * T)))


def mech_damping(omega: float, Q: float) -> float:
    """Mechanical damping rate gamma_m = omega / Q."""
    if Q <= 0:
        raise ValueError("Q must be positive")
    return omega / Q


@dataclass(frozen=True)
class CollapseSet:
    """Collapse operators with their rates already folded in as sqrt(rate)*C."""

    ops: tuple[Operator, ...]

    def __post_init__(self):
        ops = tuple(self.ops)
        if ops:
            space = ops[0].space
            for op in ops:
                if op.space != space:
                    raise ValueError("all collapse operators must share one space")
        object.__setattr__(self, "ops", ops)

    @property
    def space(self) -> SpaceDescriptor | None:
        return self.ops[0].space if self.ops else None

    @classmethod
    def standard_channels(
        cls,
        space: SpaceDescriptor,
        kappa: float,
        gamma_m: float,
        n_th: float,
        cavity_slot: int = 0,
        beam_slots: Sequence[int] = (1, 2),
    ) -> "CollapseSet":
        """Cavity decay sqrt(kappa) a plus thermal beam channels
        sqrt(gamma_m n_th) b_j† and sqrt(gamma_m (n_th+1)) b_j."""
        ops = []
        if kappa > 0:
            a = embed(annihilation_op(space.dims[cavity_slot]), space, cavity_slot)
            ops.append(np.sqrt(kappa) * a)
        for slot in beam_slots:
            b = embed(annihilation_op(space.dims[slot]), space, slot)
            if gamma_m * n_th > 0:
                ops.append(np.sqrt(gamma_m * n_th) * b.dag())
            if gamma_m * (n_th + 1.0) > 0:
                ops.append(np.sqrt(gamma_m * (n_th + 1.0)) * b)
        return cls(tuple(ops))


def lindblad_rhs(H: Operator, collapse: CollapseSet, rho: QuantumState | np.ndarray) -> np.ndarray:
    """rho_dot = -i[H, rho] + sum_k (C rho C† - (C†C rho + rho C†C)/2)."""
    mat = rho.to_density().data if isinstance(rho, QuantumState) else np.asarray(rho, dtype=complex)
    if mat.shape != H.data.shape:
        raise ValueError("state and Hamiltonian live on different spaces")
    if collapse.ops and collapse.space != H.space:
        raise ValueError("collapse operators and Hamiltonian live on different spaces")
    out = -1j * (H.data @ mat - mat @ H.data)
    for op in collapse.ops:
        c = op.data
        cdc = c.conj().T @ c
        out += c @ mat @ c.conj().T - 0.5 * (cdc @ mat + mat @ cdc)
    return out


def liouvillian(H: Operator, collapse: CollapseSet) -> np.ndarray:
    """Dense superoperator acting on row-major vec(rho)."""
    if collapse.ops and collapse.space != H.space:
        raise ValueError("collapse operators and Hamiltonian live on different spaces")
    d = H.dim
    eye = np.eye(d, dtype=complex)
    L = -1j * (np.kron(H.data, eye) - np.kron(eye, H.data.T))
    for op in collapse.ops:
        c = op.data
        cdc = c.conj().T @ c
        L += np.kron(c, c.conj()) - 0.5 * (np.kron(cdc, eye) + np.kron(eye, cdc.T))
    return L


class Propagator:
    """Reusable e^{L dt} stepper for one generator and one step size."""

    def __init__(self, H: Operator, collapse: CollapseSet, dt: float):
        self.dim = H.dim
        self.dt = dt
        self.matrix = expm(liouvillian(H, collapse) * dt)

    def advance(self, vec: np.ndarray) -> np.ndarray:
        """One step for a vec(rho) column, or a (d*d, k) batch of them."""
        return self.matrix @ vec


@dataclass(frozen=True)
class EvolveOptions:
    method: str = "expm"  # expm | rk4 | rk45
    rtol: float = 1e-9
    atol: float = 1e-12
    trace_tol: float = 1e-6
    max_retries: int = 8
    substep_phase: float = 3e-3  # rk4: fastest phase advanced per substep
    store_states: bool = True


@dataclass
class Trajectory:
    """Time grid plus per-time states and named real observable series."""

    times: np.ndarray
    states: list | None
    observables: dict[str, np.ndarray]
    stats: dict = field(default_factory=dict)

    def to_csv(self, path) -> None:
        """t_s column followed by one column per observable; 17 significant
        digits, comma separator, LF line endings; written atomically."""
        names = list(self.observables)
        tmp_fd, tmp_path = tempfile.mkstemp(dir=os.path.dirname(os.path.abspath(path)), suffix=".tmp")
        try:
            with os.fdopen(tmp_fd, "w", newline="\n") as fh:
                fh.write(",".join(["t_s"] + names) + "\n")
                cols = [self.observables[n] for n in names]
                for i, t in enumerate(self.times):
                    row = [format(t, ".17g")] + [format(c[i], ".17g") for c in cols]
                    fh.write(",".join(row) + "\n")
            os.replace(tmp_path, path)
        except BaseException:
            if os.path.exists(tmp_path):
                os.unlink(tmp_path)
            raise


def _check_grid(t_grid: np.ndarray) -> np.ndarray:
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size < 2:
        raise ValueError("time grid must be 1-D with at least two points")
    if t[0] != 0.0:
        raise ValueError("time grid must start at 0")
    if np.any(np.diff(t) <= 0):
        raise ValueError("time grid must be strictly ascending")
    return t


def _spectral_scale(H: Operator, collapse: CollapseSet) -> float:
    evals = np.linalg.eigvalsh(H.data)
    scale = float(evals[-1] - evals[0])
    for op in collapse.ops:
        scale += float(np.linalg.norm(op.data, 2) ** 2)
    return max(scale, 1e-300)


def _rk4_polynomial(A: np.ndarray) -> np.ndarray:
    eye = np.eye(A.shape[0], dtype=complex)
    A2 = A @ A
    return eye + A + A2 / 2.0 + (A2 @ A) / 6.0 + (A2 @ A2) / 24.0


# Dormand-Prince 5(4) tableau
_DP_A = [
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_DP_ERR = _DP_B5 - _DP_B4


def _symmetrize(v: np.ndarray, d: int) -> tuple[np.ndarray, float]:
    rho = v.reshape(d, d)
    drift = float(np.max(np.abs(rho - rho.conj().T)))
    rho = 0.5 * (rho + rho.conj().T)
    return rho.reshape(-1), drift


def _rk45_sweep(L, v0, t_grid, rtol, atol, d):
    """One adaptive pass over the grid; returns (outputs, herm_drift, n_steps, n_rejected)."""
    h = (t_grid[1] - t_grid[0]) / 10.0
    t = 0.0
    v = v0.copy()
    outputs = [v0.copy()]
    herm_drift = 0.0
    n_steps = n_rejected = 0
    k = [None] * 7
    k[0] = L @ v
    for t_next in t_grid[1:]:
        while t < t_next - 1e-18 * max(1.0, t_next):
            h = min(h, t_next - t)
            for i in range(1, 7):
                vi = v + h * sum(a * k[j] for j, a in enumerate(_DP_A[i]) if a != 0.0)
                k[i] = L @ vi
            v5 = v + h * sum(b * k[j] for j, b in enumerate(_DP_B5) if b != 0.0)
            err_vec = h * sum(e * k[j] for j, e in enumerate(_DP_ERR) if e != 0.0)
            tol = atol + rtol * max(np.max(np.abs(v)), np.max(np.abs(v5)))
            err = np.max(np.abs(err_vec)) / tol
            if err <= 1.0:
                t += h
                v, drift = _symmetrize(v5, d)
                herm_drift = max(herm_drift, drift)
                k[0] = L @ v  # symmetrization invalidates FSAL reuse of k[6]
                n_steps += 1
            else:
                n_rejected += 1
            h *= float(np.clip(0.9 * (max(err, 1e-10)) ** (-0.2), 0.2, 5.0))
        outputs.append(v.copy())
    return outputs, herm_drift, n_steps, n_rejected


def evolve_master(
    H: Operator,
    collapse: CollapseSet,
    rho0: QuantumState,
    t_grid: np.ndarray,
    options: EvolveOptions | None = None,
    observables: Mapping[str, Callable[[np.ndarray], float]] | None = None,
) -> Trajectory:
    """Integrate the master equation over the grid and record observables.

    The trace drift over the full run must stay below options.trace_tol;
    otherwise the step size (rk4) or tolerance (rk45) is reduced and the
    sweep restarts, up to options.max_retries, then IntegrationError.
    """
    opts = options or EvolveOptions()
    t = _check_grid(t_grid)
    if rho0.space != H.space:
        raise ValueError("initial state and Hamiltonian live on different spaces")
    d = H.dim
    v0 = rho0.to_density().data.reshape(-1)
    stats: dict = {"method": opts.method, "retries": 0}

    if opts.method == "expm":
        outputs, herm = _expm_sweep(H, collapse, v0, t, d)
        stats["n_steps"] = len(t) - 1
    elif opts.method == "rk4":
        outputs, herm = _rk4_sweep_retrying(H, collapse, v0, t, d, opts, stats)
    elif opts.method == "rk45":
        outputs, herm = _rk45_sweep_retrying(H, collapse, v0, t, d, opts, stats)
    else:
        raise ValueError(f"unknown integrator method {opts.method!r}")

    traces = np.array([v.reshape(d, d).trace().real for v in outputs])
    trace_drift = float(np.max(np.abs(traces - 1.0)))
    if trace_drift > opts.trace_tol:
        stats["max_trace_drift"] = trace_drift
        raise IntegrationError("trace drift above tolerance after all retries", stats)
    stats["max_trace_drift"] = trace_drift
    stats["max_herm_drift"] = herm

    min_eig = np.inf
    states = [] if opts.store_states else None
    obs_series = {name: np.empty(len(t)) for name in (observables or {})}
    for i, v in enumerate(outputs):
        rho = v.reshape(d, d)
        min_eig = min(min_eig, float(np.linalg.eigvalsh(rho)[0]))
        for name, fn in (observables or {}).items():
            obs_series[name][i] = fn(rho)
        if states is not None:
            states.append(rho)
    stats["min_eigenvalue"] = min_eig
    return Trajectory(t, states, obs_series, stats)


def _expm_sweep(H, collapse, v0, t, d):
    dts = np.diff(t)
    herm = 0.0
    outputs = [v0.copy()]
    v = v0.copy()
    if np.allclose(dts, dts[0], rtol=1e-9, atol=0.0):
        prop = Propagator(H, collapse, float(dts[0]))
        for _ in range(len(t) - 1):
            v, drift = _symmetrize(prop.advance(v), d)
            herm = max(herm, drift)
            outputs.append(v.copy())
    else:
        L = liouvillian(H, collapse)
        cache: dict[float, np.ndarray] = {}
        for dt in dts:
            key = float(dt)
            if key not in cache:
                cache[key] = expm(L * key)
            v, drift = _symmetrize(cache[key] @ v, d)
            herm = max(herm, drift)
            outputs.append(v.copy())
    return outputs, herm


def _rk4_sweep_retrying(H, collapse, v0, t, d, opts, stats):
    dts = np.diff(t)
    if not np.allclose(dts, dts[0], rtol=1e-9, atol=0.0):
        raise ValueError("rk4 fixed-step mode needs a uniform output grid")
    dt_out = float(dts[0])
    L = liouvillian(H, collapse)
    scale = _spectral_scale(H, collapse)
    m = max(1, int(np.ceil(dt_out * scale / opts.substep_phase)))
    for retry in range(opts.max_retries + 1):
        step = _rk4_polynomial(L * (dt_out / m))
        step_out = np.linalg.matrix_power(step, m)
        v = v0.copy()
        outputs = [v0.copy()]
        herm = 0.0
        ok = True
        for _ in range(len(t) - 1):
            v, drift = _symmetrize(step_out @ v, d)
            herm = max(herm, drift)
            if abs(v.reshape(d, d).trace().real - 1.0) > opts.trace_tol:
                ok = False
                break
            outputs.append(v.copy())
        stats.update(n_substeps_per_interval=m, retries=retry)
        if ok:
            return outputs, herm
        m *= 2
    stats["max_trace_drift"] = abs(v.reshape(d, d).trace().real - 1.0)
    raise IntegrationError("fixed-step halving exhausted", stats)


def _rk45_sweep_retrying(H, collapse, v0, t, d, opts, stats):
    L = liouvillian(H, collapse)
    rtol, atol = opts.rtol, opts.atol
    for retry in range(opts.max_retries + 1):
        outputs, herm, n_steps, n_rejected = _rk45_sweep(L, v0, t, rtol, atol, d)
        stats.update(n_steps=n_steps, n_rejected=n_rejected, retries=retry,
                     rtol_used=rtol, atol_used=atol)
        traces = np.array([v.reshape(d, d).trace().real for v in outputs])
        if np.max(np.abs(traces - 1.0)) <= opts.trace_tol:
            return outputs, herm
        rtol /= 10.0
        atol /= 10.0
    stats["max_trace_drift"] = float(np.max(np.abs(traces - 1.0)))
    raise IntegrationError("tolerance tightening exhausted", stats)


def evolve_unitary(
    H: Operator,
    psi0: QuantumState,
    t_grid: np.ndarray,
    observables: Mapping[str, Callable[[np.ndarray], float]] | None = None,
) -> Trajectory:
    """Closed-system |psi(t)> = e^{-iHt}|psi0> through one eigendecomposition."""
    if not H.is_hermitian(rtol=1e-10):
        raise ValueError("Hamiltonian must be Hermitian")
    if psi0.kind != "ket":
        raise ValueError("evolve_unitary needs a ket initial state")
    if psi0.space != H.space:
        raise ValueError("initial state and Hamiltonian live on different spaces")
    t = _check_grid(t_grid)
    energies, vecs = eigh(H.data)
    coeff = vecs.conj().T @ psi0.data
    phases = np.exp(-1j * np.outer(t, energies))
    kets = (vecs @ (phases * coeff).T).T  # shape (n_t, d)
    norms = np.linalg.norm(kets, axis=1)
    if np.max(np.abs(norms - 1.0)) > 1e-10:
        raise IntegrationError("norm drift in unitary evolution", {"max_drift": float(np.max(np.abs(norms - 1.0)))})
    obs_series = {name: np.empty(len(t)) for name in (observables or {})}
    for i in range(len(t)):
        for name, fn in (observables or {}).items():
            obs_series[name][i] = fn(kets[i])
    states = [kets[i] for i in range(len(t))]
    return Trajectory(t, states, obs_series, {"method": "eig", "max_norm_drift": float(np.max(np.abs(norms - 1.0)))})
