"""Time evolution of state vectors under static and driven Hamiltonians.

The workhorse is a Lanczos (Hermitian Krylov) approximation of
``exp(-i H dt) psi`` with full reorthogonalization, an a-posteriori residual
estimate, and recursive step splitting when the subspace cap is reached.
Sinusoidally driven Hamiltonians are integrated with commutator-free
exponential substeps (fourth-order Gauss scheme by default, midpoint-frozen
second order available), each exponential going through the same Lanczos
core. Multi-segment protocols (forward plus sign-flipped backward
evolution, with or without drive) are executed by ``run_protocol``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
import scipy.linalg as sla

from .fockspace import FockBasis, StateVector
from .operators import (
    AnharmonicityProfile,
    CouplingProfile,
    DriveSpec,
    SparseOperator,
    TransverseProfile,
    build_hopping,
    build_number_weighted,
    build_onsite_anharmonicity,
    build_transverse,
)

__all__ = [
    "NumericsError",
    "evolve_static",
    "evolve_driven",
    "Segment",
    "Protocol",
    "Trajectory",
    "reverse_of",
    "run_protocol",
    "default_substep_ns",
]

_TWO_PI = 2.0 * math.pi

DEFAULT_TOL = 1e-10
DEFAULT_KRYLOV_DIM = 30
SUBSTEPS_PER_PERIOD = 64


class NumericsError(RuntimeError):
    """Propagation failed to converge within the configured limits."""


def _expm_tridiag_e1(alpha: np.ndarray, beta: np.ndarray, dt: float):
    """First column of exp(-i dt T) and the Ritz spread, T tridiagonal."""
    if alpha.size == 1:
        return np.array([np.exp(-1j * dt * alpha[0])]), 0.0
    w, v = sla.eigh_tridiagonal(alpha, beta)
    return (v * np.exp(-1j * dt * w)) @ v[0].conj(), float(w[-1] - w[0])


def _lanczos_step(matvec, psi, dt, tol, m_max):
    """One Krylov approximation of exp(-i dt H) psi.

    Returns (result, converged). The residual estimate is the weight the
    small exponential places on the last Lanczos vector times the next
    off-diagonal coupling. That estimate is only meaningful once the
    subspace size reaches the spectral-spread scale |dt| (wmax - wmin) / 2,
    where superlinear convergence sets in; below it the last component can
    dip near zero accidentally, so acceptance is gated on both.
    """
    n = psi.size
    V = np.empty((m_max, n), dtype=np.complex128)
    alpha = np.empty(m_max)
    beta = np.empty(m_max)
    scale = np.linalg.norm(psi)
    V[0] = psi / scale
    w = matvec(V[0])
    alpha[0] = np.vdot(V[0], w).real
    w = w - alpha[0] * V[0]
    for m in range(1, m_max + 1):
        b = np.linalg.norm(w)
        if m == m_max or b < 1e-14:
            y, spread = _expm_tridiag_e1(alpha[:m], beta[: m - 1], dt)
            out = scale * (y @ V[:m])
            if b < 1e-14:
                return out, True
            converged = m >= 0.5 * abs(dt) * spread and abs(b * dt * y[m - 1]) < tol
            return out, converged
        beta[m - 1] = b
        V[m] = w / b
        w = matvec(V[m])
        w = w - b * V[m - 1]
        a = np.vdot(V[m], w).real
        w = w - a * V[m]
        alpha[m] = a
        # Full reorthogonalization keeps the basis numerically orthonormal,
        # which is what preserves unitarity of the projected exponential.
        w = w - V[: m + 1].conj() @ w @ V[: m + 1]
        # Cheap convergence probe before growing the subspace further.
        if m >= 2:
            y, spread = _expm_tridiag_e1(alpha[: m + 1], beta[:m], dt)
            if m + 1 >= 0.5 * abs(dt) * spread and \
                    abs(np.linalg.norm(w) * dt * y[m]) < tol:
                return scale * (y @ V[: m + 1]), True
    raise AssertionError("unreachable")


def _krylov_expm(matvec, psi, dt, tol, m_max, max_halvings=48):
    if dt == 0.0:
        return psi.copy()
    out, converged = _lanczos_step(matvec, psi, dt, tol, m_max)
    if converged:
        return out
    if max_halvings <= 0:
        raise NumericsError(
            f"Krylov propagation did not converge at subspace size {m_max}"
        )
    half = _krylov_expm(matvec, psi, dt / 2, tol, m_max, max_halvings - 1)
    return _krylov_expm(matvec, half, dt / 2, tol, m_max, max_halvings - 1)


def _finish(basis: FockBasis, raw: np.ndarray, tol: float) -> StateVector:
    nrm = float(np.linalg.norm(raw))
    if abs(nrm - 1.0) > max(1e-8, 100 * tol):
        raise NumericsError(f"propagated state norm drifted to {nrm:.3e}")
    return StateVector(basis, raw / nrm, normalize=False)


def evolve_static(
    H: SparseOperator,
    psi: StateVector,
    dt_ns: float,
    tol: float = DEFAULT_TOL,
    m_max: int = DEFAULT_KRYLOV_DIM,
    max_halvings: int = 48,
) -> StateVector:
    """Apply ``exp(-i H dt)`` to a state via adaptive Lanczos.

    H must carry the hermitian tag and live on the state's basis. The
    returned state has unit norm; a pre-normalization drift above 1e-8
    raises NumericsError rather than being silently absorbed.
    """
    if not H.hermitian:
        raise ValueError("evolve_static requires a Hermitian operator")
    if H.basis != psi.basis:
        raise ValueError("operator and state live on different bases")
    if dt_ns == 0.0:
        return psi.copy()
    raw = _krylov_expm(H.matvec, psi.amplitudes, float(dt_ns), tol, m_max, max_halvings)
    return _finish(psi.basis, raw, tol)


# Fourth-order commutator-free coefficients (two Gauss nodes per substep).
_SQRT3 = math.sqrt(3.0)
_CF4_LO = (3.0 - 2.0 * _SQRT3) / 12.0
_CF4_HI = (3.0 + 2.0 * _SQRT3) / 12.0


def evolve_driven(
    H_static: SparseOperator,
    D: SparseOperator,
    drive: DriveSpec,
    psi: StateVector,
    t0_ns: float,
    t1_ns: float,
    dt_sub_ns: float,
    tol: float = DEFAULT_TOL,
    m_max: int = DEFAULT_KRYLOV_DIM,
    scheme: str = "cf4",
) -> StateVector:
    """Evolve under ``H_static + cos(nu (t - t0)) D`` from t0 to t1.

    The interval is split into substeps no longer than dt_sub_ns. The
    default scheme is a fourth-order commutator-free integrator: each
    substep applies two exponentials of ``H_static + gamma D`` for time h/2,
    with gamma mixing the cosine sampled at the two Gauss nodes of the
    substep. ``scheme="midpoint"`` selects the second-order variant with
    the Hamiltonian frozen at the substep midpoint. D must be diagonal;
    use build_number_weighted for the modulation term.
    """
    if not H_static.hermitian:
        raise ValueError("static part must be Hermitian")
    if H_static.basis != psi.basis or D.basis != psi.basis:
        raise ValueError("operators and state live on different bases")
    if not D.is_diagonal():
        raise ValueError("drive weight operator must be diagonal")
    if t1_ns < t0_ns:
        raise ValueError("t1 must not precede t0")
    if not dt_sub_ns > 0:
        raise ValueError("substep size must be positive")
    if scheme not in ("cf4", "midpoint"):
        raise ValueError(f"unknown integrator scheme {scheme!r}")
    span = float(t1_ns - t0_ns)
    if span == 0.0:
        return psi.copy()
    d = np.real(D.diagonal())
    nu = drive.nu
    origin = drive.phase_origin_ns
    nsub = max(1, math.ceil(span / dt_sub_ns - 1e-12))
    h = span / nsub
    Hmv = H_static.matvec
    raw = psi.amplitudes
    for k in range(nsub):
        t_k = t0_ns + k * h
        if scheme == "midpoint":
            c = math.cos(nu * (t_k + 0.5 * h - origin))
            cd = c * d

            def matvec(v, _cd=cd):
                return Hmv(v) + _cd * v

            raw = _krylov_expm(matvec, raw, h, tol, m_max)
        else:
            c1 = math.cos(nu * (t_k + (0.5 - _SQRT3 / 6.0) * h - origin))
            c2 = math.cos(nu * (t_k + (0.5 + _SQRT3 / 6.0) * h - origin))
            for g in (2.0 * (_CF4_HI * c1 + _CF4_LO * c2),
                      2.0 * (_CF4_LO * c1 + _CF4_HI * c2)):
                gd = g * d

                def matvec(v, _gd=gd):
                    return Hmv(v) + _gd * v

                raw = _krylov_expm(matvec, raw, 0.5 * h, tol, m_max)
    return _finish(psi.basis, raw, tol)


@dataclass(frozen=True)
class Segment:
    """One leg of a protocol: a duration plus the Hamiltonian that rules it.

    The coupling and transverse terms carry flippable signs while the
    anharmonicity never flips sign; it is only switched on or off (off is
    how a two-level reference without on-site interaction is expressed
    on a multilevel basis).
    """

    duration_ns: float
    coupling: CouplingProfile
    anharmonicity: AnharmonicityProfile
    transverse: TransverseProfile | None = None
    coupling_sign: int = 1
    transverse_sign: int = 1
    include_anharmonicity: bool = True
    drive: DriveSpec | None = None

    def __post_init__(self):
        if self.duration_ns < 0:
            raise ValueError("segment duration must be non-negative")
        if self.coupling_sign not in (-1, 1) or self.transverse_sign not in (-1, 1):
            raise ValueError("signs must be +1 or -1")

    def static_hamiltonian(self, basis: FockBasis) -> SparseOperator:
        H = float(self.coupling_sign) * build_hopping(basis, self.coupling)
        if self.include_anharmonicity:
            H = H + build_onsite_anharmonicity(basis, self.anharmonicity)
        if self.transverse is not None and not self.transverse.is_zero():
            H = H + float(self.transverse_sign) * build_transverse(basis, self.transverse)
        return H

    def drive_operator(self, basis: FockBasis) -> SparseOperator | None:
        if self.drive is None or not self.drive.is_active():
            return None
        return build_number_weighted(basis, self.drive.eps)


def reverse_of(segment: Segment, drive_override: DriveSpec | None = None) -> Segment:
    """Segment that undoes the given one in a time-reversal protocol.

    Without an override the coupling and transverse signs are negated and
    the anharmonicity is left untouched. With a drive override (the driven
    reversal recipe) the signs stay put and only the drive is replaced,
    since the amplitude change is what flips the period-averaged coupling.
    """
    if drive_override is not None:
        return replace(segment, drive=drive_override)
    return replace(
        segment,
        coupling_sign=-segment.coupling_sign,
        transverse_sign=-segment.transverse_sign,
    )


@dataclass(frozen=True)
class Protocol:
    """Ordered evolution segments plus a sampling schedule.

    Either uniform sampling every ``sample_dt_ns`` or stroboscopic sampling
    at integer multiples of the drive period. Segment boundaries are always
    sampled. With ``continuous_drive_phase`` the drive phase reference is
    global time zero; by default each segment restarts its drive phase.
    """

    segments: tuple
    sample_dt_ns: float | None = None
    stroboscopic: bool = False
    record_states: bool = False
    continuous_drive_phase: bool = False
    drive_substep_ns: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if self.stroboscopic and self.sample_dt_ns is not None:
            raise ValueError("choose either uniform or stroboscopic sampling")
        if self.sample_dt_ns is not None and not self.sample_dt_ns > 0:
            raise ValueError("sampling step must be positive")
        if self.drive_substep_ns is not None and not self.drive_substep_ns > 0:
            raise ValueError("drive substep must be positive")
        if self.stroboscopic and self._drive_period() is None:
            raise ValueError("stroboscopic sampling requires a driven segment")

    def _drive_period(self) -> float | None:
        periods = {
            round(seg.drive.period_ns, 12)
            for seg in self.segments
            if seg.drive is not None and seg.drive.is_active()
        }
        if not periods:
            return None
        if len(periods) > 1:
            raise ValueError("stroboscopic sampling needs a single drive period")
        return periods.pop()

    @property
    def total_ns(self) -> float:
        return float(sum(seg.duration_ns for seg in self.segments))

    def boundaries_ns(self) -> list:
        out = [0.0]
        for seg in self.segments:
            out.append(out[-1] + seg.duration_ns)
        return out

    def sample_times(self) -> np.ndarray:
        total = self.total_ns
        marks = list(self.boundaries_ns())
        if self.stroboscopic:
            step = self._drive_period()
        else:
            step = self.sample_dt_ns
        if step is not None and total > 0:
            k = 0
            t = 0.0
            while t <= total + 1e-9:
                marks.append(min(t, total))
                k += 1
                t = k * step
        marks.sort()
        out = [marks[0]]
        for t in marks[1:]:
            if t - out[-1] > 1e-9:
                out.append(t)
        return np.asarray(out)


@dataclass
class Trajectory:
    """Sampled times with optional retained states and observer records."""

    times_ns: np.ndarray
    records: list
    states: list | None = None


def default_substep_ns(drive: DriveSpec) -> float:
    """Default integration substep for a driven segment: T/64."""
    return drive.period_ns / SUBSTEPS_PER_PERIOD


def run_protocol(
    protocol: Protocol,
    psi0: StateVector,
    observer: Callable[[float, StateVector], object] | None = None,
    tol: float = DEFAULT_TOL,
    m_max: int = DEFAULT_KRYLOV_DIM,
) -> Trajectory:
    """Evolve through all segments, sampling on the protocol's schedule.

    The observer, if given, is called at every sample time with the current
    state; its non-None return values are collected into the trajectory's
    record list. States are retained only when the protocol asks for it.
    """
    basis = psi0.basis
    times = protocol.sample_times()
    records: list = []
    states: list | None = [] if protocol.record_states else None

    def emit(t: float, psi: StateVector) -> None:
        if states is not None:
            states.append(psi.copy())
        if observer is not None:
            rec = observer(t, psi)
            if rec is not None:
                records.append(rec)

    psi = psi0.copy()
    emit(float(times[0]), psi)
    cursor = 0.0
    next_sample = 1
    for seg in protocol.segments:
        seg_start = cursor
        seg_end = cursor + seg.duration_ns
        cursor = seg_end
        if seg.duration_ns == 0:
            continue  # its boundary coincides with a sample already taken
        H = seg.static_hamiltonian(basis)
        D = seg.drive_operator(basis)
        drive = None
        dt_sub = None
        if D is not None:
            origin_base = 0.0 if protocol.continuous_drive_phase else seg_start
            drive = replace(
                seg.drive, phase_origin_ns=origin_base + seg.drive.phase_origin_ns
            )
            dt_sub = protocol.drive_substep_ns or default_substep_ns(drive)
        t_prev = seg_start
        while next_sample < times.size and times[next_sample] <= seg_end + 1e-9:
            t_next = min(float(times[next_sample]), seg_end)
            if D is None:
                psi = evolve_static(H, psi, t_next - t_prev, tol=tol, m_max=m_max)
            else:
                psi = evolve_driven(
                    H, D, drive, psi, t_prev, t_next, dt_sub, tol=tol, m_max=m_max
                )
            emit(t_next, psi)
            t_prev = t_next
            next_sample += 1
    return Trajectory(times_ns=times, records=records, states=states)
