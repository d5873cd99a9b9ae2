"""Sparse Hamiltonian terms for a driven chain of K-level bosonic sites.

The model is assembled from four pieces: the nearest-neighbour hopping
``sum_j J_j (a+_j a_{j+1} + h.c.)``, the on-site anharmonicity
``sum_j (-U_j/2) n_j (n_j - 1)``, a diagonal number-weighted term used for
sinusoidal frequency modulation, and the transverse field
``(1/2) sum_j Omega_j (a+_j + a_j)``.

Unit convention: every user-facing frequency is quoted as ``f = value/2pi``
in MHz, exactly as device parameters are usually reported. Internally all
profiles store angular frequencies in rad/ns (``omega = 2*pi*f*1e-3``) and
time is measured in ns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .fockspace import FockBasis

__all__ = [
    "omega_from_mhz",
    "mhz_from_omega",
    "CouplingProfile",
    "AnharmonicityProfile",
    "TransverseProfile",
    "DriveSpec",
    "SparseOperator",
    "build_hopping",
    "build_onsite_anharmonicity",
    "build_number_weighted",
    "build_transverse",
    "total_number",
    "bessel_j0",
    "effective_coupling",
]

_TWO_PI = 2.0 * math.pi


def omega_from_mhz(f_mhz: float) -> float:
    """Angular frequency in rad/ns for a quoted value/2pi in MHz."""
    return _TWO_PI * f_mhz * 1e-3


def mhz_from_omega(omega: float) -> float:
    """Inverse of omega_from_mhz."""
    return omega * 1e3 / _TWO_PI


def _as_tuple(values, n: int, what: str) -> tuple:
    vals = tuple(float(v) for v in np.atleast_1d(values))
    if len(vals) == 1 and n > 1:
        vals = vals * n
    if len(vals) != n:
        raise ValueError(f"{what} needs {n} values, got {len(vals)}")
    return vals


@dataclass(frozen=True)
class CouplingProfile:
    """Nearest-neighbour hopping strengths, one per bond, in rad/ns."""

    values: tuple

    @classmethod
    def from_mhz(cls, values, n_bonds: int | None = None) -> "CouplingProfile":
        vals = np.atleast_1d(values)
        n = n_bonds if n_bonds is not None else len(vals)
        return cls(tuple(omega_from_mhz(v) for v in _as_tuple(vals, n, "coupling")))

    def mhz(self) -> list:
        return [mhz_from_omega(v) for v in self.values]

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class AnharmonicityProfile:
    """On-site interaction magnitudes U_j >= 0, in rad/ns.

    The defining sign lives in the operator: the diagonal term is
    ``-U_j/2 * n_j (n_j - 1)``, so profiles carry the positive magnitude.
    """

    values: tuple

    def __post_init__(self):
        if any(v < 0 for v in self.values):
            raise ValueError("anharmonicity magnitudes must be non-negative")

    @classmethod
    def from_mhz(cls, values, n_sites: int | None = None) -> "AnharmonicityProfile":
        vals = np.atleast_1d(values)
        n = n_sites if n_sites is not None else len(vals)
        return cls(tuple(omega_from_mhz(v) for v in _as_tuple(vals, n, "anharmonicity")))

    def mhz(self) -> list:
        return [mhz_from_omega(v) for v in self.values]

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class TransverseProfile:
    """Local transverse field strengths Omega_j, in rad/ns."""

    values: tuple

    @classmethod
    def from_mhz(cls, values, n_sites: int | None = None) -> "TransverseProfile":
        vals = np.atleast_1d(values)
        n = n_sites if n_sites is not None else len(vals)
        return cls(tuple(omega_from_mhz(v) for v in _as_tuple(vals, n, "transverse field")))

    def mhz(self) -> list:
        return [mhz_from_omega(v) for v in self.values]

    def is_zero(self) -> bool:
        return all(v == 0 for v in self.values)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class DriveSpec:
    """Sinusoidal site-frequency modulation ``eps_j cos(nu (t - t0))``.

    ``eps`` holds the signed per-site amplitudes and ``nu`` the drive
    frequency, both in rad/ns. ``phase_origin_ns`` is the time at which the
    cosine argument vanishes, interpreted by the protocol runner (by default
    relative to the start of the segment that carries the drive).
    """

    eps: tuple
    nu: float
    phase_origin_ns: float = 0.0

    def __post_init__(self):
        if any(e != 0 for e in self.eps) and not self.nu > 0:
            raise ValueError("drive frequency must be positive when any amplitude is nonzero")

    @classmethod
    def from_mhz(cls, eps_mhz, nu_mhz: float, phase_origin_ns: float = 0.0) -> "DriveSpec":
        eps = tuple(omega_from_mhz(v) for v in np.atleast_1d(eps_mhz))
        return cls(eps, omega_from_mhz(nu_mhz), phase_origin_ns)

    @classmethod
    def staggered_odd(
        cls, L: int, eps_mhz: float, nu_mhz: float, phase_origin_ns: float = 0.0
    ) -> "DriveSpec":
        """Drive sites 1, 3, 5, ... (1-based) with alternating signs.

        The driven sites get amplitudes +eps, -eps, +eps, ... and the others
        zero, so every bond sees a frequency-difference amplitude of eps.
        """
        eps = [0.0] * L
        sign = 1.0
        for j in range(0, L, 2):
            eps[j] = sign * eps_mhz
            sign = -sign
        return cls.from_mhz(eps, nu_mhz, phase_origin_ns)

    @property
    def period_ns(self) -> float:
        if not self.nu > 0:
            raise ValueError("drive has no period (nu = 0)")
        return _TWO_PI / self.nu

    def is_active(self) -> bool:
        return any(e != 0 for e in self.eps)

    def __len__(self) -> int:
        return len(self.eps)


class SparseOperator:
    """Sparse complex matrix over a FockBasis with a hermiticity tag.

    The tag is set by the builders, which emit conjugate entry pairs, so
    ``hermitian=True`` implies the matrix equals its adjoint exactly (not
    just to rounding).
    """

    def __init__(self, basis: FockBasis, matrix, hermitian: bool):
        matrix = sp.csr_matrix(matrix, dtype=np.complex128)
        if matrix.shape != (basis.dim, basis.dim):
            raise ValueError(
                f"matrix shape {matrix.shape} does not match basis dimension {basis.dim}"
            )
        self.basis = basis
        self.matrix = matrix
        self.hermitian = bool(hermitian)

    @classmethod
    def from_triplets(cls, basis, rows, cols, vals, hermitian: bool) -> "SparseOperator":
        m = sp.coo_matrix(
            (np.asarray(vals, dtype=np.complex128), (rows, cols)),
            shape=(basis.dim, basis.dim),
        )
        return cls(basis, m.tocsr(), hermitian)

    @classmethod
    def from_diagonal(cls, basis, diag) -> "SparseOperator":
        diag = np.asarray(diag, dtype=np.complex128)
        hermitian = bool(np.all(diag.imag == 0))
        return cls(basis, sp.diags(diag, format="csr"), hermitian)

    @property
    def dim(self) -> int:
        return self.basis.dim

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def matvec(self, vec: np.ndarray) -> np.ndarray:
        return self.matrix @ vec

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal()

    def is_diagonal(self) -> bool:
        off = self.matrix - sp.diags(self.matrix.diagonal())
        off.eliminate_zeros()
        return off.nnz == 0

    def expectation(self, state) -> complex:
        v = state.amplitudes if hasattr(state, "amplitudes") else np.asarray(state)
        val = complex(np.vdot(v, self.matrix @ v))
        return val.real if self.hermitian else val

    def _check_compatible(self, other: "SparseOperator") -> None:
        if self.basis != other.basis:
            raise ValueError("operators live on different bases")

    def __add__(self, other: "SparseOperator") -> "SparseOperator":
        self._check_compatible(other)
        return SparseOperator(
            self.basis, self.matrix + other.matrix, self.hermitian and other.hermitian
        )

    def __sub__(self, other: "SparseOperator") -> "SparseOperator":
        self._check_compatible(other)
        return SparseOperator(
            self.basis, self.matrix - other.matrix, self.hermitian and other.hermitian
        )

    def __neg__(self) -> "SparseOperator":
        return SparseOperator(self.basis, -self.matrix, self.hermitian)

    def __mul__(self, scalar) -> "SparseOperator":
        scalar = complex(scalar)
        hermitian = self.hermitian and scalar.imag == 0
        return SparseOperator(self.basis, self.matrix * scalar, hermitian)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        tag = "hermitian" if self.hermitian else "general"
        return f"SparseOperator({self.basis!r}, nnz={self.nnz}, {tag})"


def build_hopping(basis: FockBasis, profile: CouplingProfile) -> SparseOperator:
    """Hopping term ``sum_j J_j (a+_j a_{j+1} + h.c.)`` over the basis.

    Bosonic matrix elements ``a+|n> = sqrt(n+1)|n+1>`` truncated at K-1.
    The result conserves total occupation, so it is block diagonal over
    number sectors and valid on sector bases.
    """
    if len(profile) != basis.L - 1:
        raise ValueError(f"coupling profile needs {basis.L - 1} bonds, got {len(profile)}")
    n = basis.states
    codes = basis.codes
    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    vals: list[np.ndarray] = []
    for j, Jj in enumerate(profile.values):
        if Jj == 0:
            continue
        # a+_j a_{j+1}: needs headroom on j and a particle on j+1.
        mask = (n[:, j] < basis.K - 1) & (n[:, j + 1] > 0)
        if not np.any(mask):
            continue
        src = np.nonzero(mask)[0]
        amp = Jj * np.sqrt(
            (n[src, j].astype(np.float64) + 1.0) * n[src, j + 1].astype(np.float64)
        )
        tgt_codes = codes[src] + int(basis.site_radix[j]) - int(basis.site_radix[j + 1])
        tgt = basis.indices_from_codes(tgt_codes)
        rows.extend((tgt, src))
        cols.extend((src, tgt))
        vals.extend((amp, amp))
    if not rows:
        return SparseOperator(basis, sp.csr_matrix((basis.dim, basis.dim)), True)
    return SparseOperator.from_triplets(
        basis, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), True
    )


def build_onsite_anharmonicity(
    basis: FockBasis, profile: AnharmonicityProfile
) -> SparseOperator:
    """Diagonal term ``sum_j (-U_j/2) n_j (n_j - 1)``."""
    if len(profile) != basis.L:
        raise ValueError(f"anharmonicity profile needs {basis.L} sites, got {len(profile)}")
    n = basis.states.astype(np.float64)
    diag = (n * (n - 1.0)) @ (-0.5 * np.asarray(profile.values))
    return SparseOperator.from_diagonal(basis, diag)


def build_number_weighted(basis: FockBasis, weights: Sequence[float]) -> SparseOperator:
    """Diagonal term ``sum_j w_j n_j`` for arbitrary per-site weights."""
    weights = np.asarray(weights, dtype=np.float64)
    if weights.size != basis.L:
        raise ValueError(f"need {basis.L} weights, got {weights.size}")
    diag = basis.states.astype(np.float64) @ weights
    return SparseOperator.from_diagonal(basis, diag)


def total_number(basis: FockBasis) -> SparseOperator:
    """Total occupation operator ``sum_j n_j``."""
    return build_number_weighted(basis, np.ones(basis.L))


def build_transverse(basis: FockBasis, profile: TransverseProfile) -> SparseOperator:
    """Transverse term ``(1/2) sum_j Omega_j (a+_j + a_j)``.

    Breaks particle-number conservation, so it is only defined over the
    full (unrestricted) space; a sector basis raises ValueError.
    """
    if len(profile) != basis.L:
        raise ValueError(f"transverse profile needs {basis.L} sites, got {len(profile)}")
    if basis.sector is not None:
        raise ValueError(
            "transverse field breaks number conservation; build it on the full basis"
        )
    n = basis.states
    codes = basis.codes
    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    vals: list[np.ndarray] = []
    for j, Oj in enumerate(profile.values):
        if Oj == 0:
            continue
        mask = n[:, j] < basis.K - 1
        src = np.nonzero(mask)[0]
        amp = 0.5 * Oj * np.sqrt(n[src, j].astype(np.float64) + 1.0)
        tgt = basis.indices_from_codes(codes[src] + int(basis.site_radix[j]))
        rows.extend((tgt, src))
        cols.extend((src, tgt))
        vals.extend((amp, amp))
    if not rows:
        return SparseOperator(basis, sp.csr_matrix((basis.dim, basis.dim)), True)
    return SparseOperator.from_triplets(
        basis, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), True
    )


def bessel_j0(x: float) -> float:
    """Bessel function of the first kind, order zero.

    For |x| <= 9 the defining power series is summed directly. Beyond that
    the integral form ``J0(x) = (1/pi) int_0^pi cos(x sin t) dt`` is
    evaluated with the M-point periodic trapezoidal rule, whose aliasing
    error is ``2 (J_M + J_2M + ...)`` and therefore drops below 1e-13 once
    M comfortably exceeds |x|. Both branches are accurate to better than
    1e-10 in absolute terms.
    """
    x = abs(float(x))
    if x <= 9.0:
        q = 0.25 * x * x
        term = 1.0
        total = 1.0
        for k in range(1, 64):
            term *= -q / (k * k)
            total += term
            if abs(term) < 1e-18 * max(1.0, abs(total)):
                break
        return total
    m = int(1.8 * x) + 24
    theta = (_TWO_PI / m) * np.arange(m)
    return float(np.mean(np.cos(x * np.sin(theta))))


def effective_coupling(J: float, eps: float, nu: float) -> float:
    """Period-averaged hopping under sinusoidal modulation of amplitude eps.

    With every bond seeing a frequency-difference amplitude eps at drive
    frequency nu, the stroboscopic dynamics is that of a static chain with
    coupling ``J * J0(eps/nu)``. Units cancel, so J, eps and nu may be given
    in any one consistent frequency convention; the result carries J's.
    """
    if not nu > 0:
        raise ValueError("drive frequency must be positive")
    return J * bessel_j0(eps / nu)
