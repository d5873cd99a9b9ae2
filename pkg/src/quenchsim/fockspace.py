"""Truncated bosonic Fock spaces for a 1D chain of K-level sites.

Basis states are occupation vectors ``(n_0, ..., n_{L-1})`` with
``0 <= n_j <= K-1``, ordered lexicographically with site 0 as the most
significant digit (so for L=2, K=2 the order is 00, 01, 10, 11). A basis may
be restricted to the sector of fixed total occupation N, the natural arena
for number-conserving Hamiltonians.
"""

from __future__ import annotations

import math
from typing import Mapping, Sequence

import numpy as np

__all__ = [
    "Occupation",
    "FockBasis",
    "StateVector",
    "build_basis",
    "parse_product_state",
    "build_product_state",
    "embed_state",
]

# An occupation is just a tuple of per-site level indices.
Occupation = tuple


def _full_states(L: int, K: int) -> np.ndarray:
    codes = np.arange(K**L, dtype=np.int64)
    out = np.empty((K**L, L), dtype=np.int8)
    for j in range(L - 1, -1, -1):
        out[:, j] = codes % K
        codes //= K
    return out


def _sector_states(L: int, K: int, N: int) -> np.ndarray:
    """All occupation vectors with total N, in lexicographic order."""
    rows: list[list[int]] = []
    occ = [0] * L

    def descend(j: int, remaining: int) -> None:
        if j == L - 1:
            if remaining <= K - 1:
                occ[j] = remaining
                rows.append(list(occ))
            return
        headroom = (L - j - 1) * (K - 1)
        for n in range(max(0, remaining - headroom), min(K - 1, remaining) + 1):
            occ[j] = n
            descend(j + 1, remaining - n)

    descend(0, N)
    return np.array(rows, dtype=np.int8)


class FockBasis:
    """Ordered enumeration of occupation vectors with fast index lookup.

    Parameters
    ----------
    L : int
        Number of sites, at least 1.
    K : int
        Levels per site, at least 2. Occupations run from 0 to K-1.
    sector : int or None
        If given, restrict to states with total occupation ``sector``.

    Notes
    -----
    The unrestricted space has dimension ``K**L``. A sector basis with
    ``K >= N+1`` has the stars-and-bars dimension ``C(N+L-1, N)``.
    Instances are immutable and safe to share between threads.
    """

    def __init__(self, L: int, K: int, sector: int | None = None):
        L, K = int(L), int(K)
        if L < 1:
            raise ValueError(f"need at least one site, got L={L}")
        if K < 2:
            raise ValueError(f"need at least two levels per site, got K={K}")
        if sector is not None:
            sector = int(sector)
            if not 0 <= sector <= L * (K - 1):
                raise ValueError(
                    f"sector N={sector} outside [0, {L * (K - 1)}] for L={L}, K={K}"
                )
        self.L = L
        self.K = K
        self.sector = sector
        # Radix weights: site 0 is the most significant digit.
        self.site_radix = (K ** np.arange(L - 1, -1, -1)).astype(np.int64)
        if sector is None:
            self._states = _full_states(L, K)
        else:
            self._states = _sector_states(L, K, sector)
        self._states.setflags(write=False)
        self._codes = self._states.astype(np.int64) @ self.site_radix
        self._codes.setflags(write=False)
        # Hash map for O(1) lookups on sector bases; the full space maps
        # codes to indices directly.
        self._index: dict[int, int] | None = None
        if sector is not None:
            self._index = {int(c): i for i, c in enumerate(self._codes)}

    @property
    def dim(self) -> int:
        return self._states.shape[0]

    @property
    def states(self) -> np.ndarray:
        """Read-only (dim, L) array of occupation numbers."""
        return self._states

    @property
    def codes(self) -> np.ndarray:
        """Read-only radix-K integer code of every state, ascending."""
        return self._codes

    def __len__(self) -> int:
        return self.dim

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FockBasis)
            and self.L == other.L
            and self.K == other.K
            and self.sector == other.sector
        )

    def __hash__(self) -> int:
        return hash((self.L, self.K, self.sector))

    def __repr__(self) -> str:
        sec = "full" if self.sector is None else f"N={self.sector}"
        return f"FockBasis(L={self.L}, K={self.K}, {sec}, dim={self.dim})"

    def _code_of(self, occ: Sequence[int]) -> int:
        if len(occ) != self.L:
            raise ValueError(f"occupation has {len(occ)} sites, basis has {self.L}")
        code = 0
        for n, w in zip(occ, self.site_radix):
            n = int(n)
            if not 0 <= n < self.K:
                raise KeyError(f"occupation level {n} outside [0, {self.K - 1}]")
            code += n * int(w)
        return code

    def index_of(self, occ: Sequence[int]) -> int:
        """Position of an occupation vector in the basis.

        Raises KeyError for levels outside [0, K-1] or, on a sector basis,
        for occupations with the wrong total.
        """
        code = self._code_of(occ)
        if self._index is None:
            return code
        try:
            return self._index[code]
        except KeyError:
            raise KeyError(
                f"occupation {tuple(int(n) for n in occ)} not in sector N={self.sector}"
            ) from None

    def occupation_at(self, i: int) -> Occupation:
        """The i-th occupation vector in canonical order."""
        i = int(i)
        if not 0 <= i < self.dim:
            raise IndexError(f"index {i} outside [0, {self.dim})")
        return tuple(int(n) for n in self._states[i])

    def indices_from_codes(self, codes: np.ndarray) -> np.ndarray:
        """Vectorized code -> index map; every code must be present."""
        codes = np.asarray(codes, dtype=np.int64)
        if self._index is None:
            if codes.size and (codes.min() < 0 or codes.max() >= self.dim):
                raise KeyError("state code outside the full basis")
            return codes
        pos = np.searchsorted(self._codes, codes)
        ok = (pos < self.dim) & (self._codes[np.minimum(pos, self.dim - 1)] == codes)
        if not np.all(ok):
            raise KeyError(f"state codes missing from sector N={self.sector}")
        return pos

    def find_codes(self, codes: np.ndarray) -> np.ndarray:
        """Like indices_from_codes but returns -1 where a code is absent."""
        codes = np.asarray(codes, dtype=np.int64)
        if self._index is None:
            out = codes.copy()
            out[(codes < 0) | (codes >= self.dim)] = -1
            return out
        pos = np.searchsorted(self._codes, codes)
        pos_c = np.minimum(pos, self.dim - 1)
        ok = (pos < self.dim) & (self._codes[pos_c] == codes)
        return np.where(ok, pos_c, -1)


def build_basis(L: int, K: int, sector: int | None = None) -> FockBasis:
    """Construct a Fock basis; see FockBasis for the ordering contract."""
    return FockBasis(L, K, sector)


class StateVector:
    """Unit-norm complex amplitude vector over a FockBasis."""

    __slots__ = ("basis", "amplitudes")

    def __init__(self, basis: FockBasis, amplitudes, *, normalize: bool = True):
        amps = np.array(amplitudes, dtype=np.complex128, copy=True).ravel()
        if amps.size != basis.dim:
            raise ValueError(
                f"amplitude vector has length {amps.size}, basis dimension is {basis.dim}"
            )
        if normalize:
            nrm = float(np.linalg.norm(amps))
            if nrm < 1e-12:
                raise ValueError("cannot normalize a (near-)zero state vector")
            amps /= nrm
        self.basis = basis
        self.amplitudes = amps

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "StateVector":
        return StateVector(self.basis, self.amplitudes, normalize=False)

    def overlap(self, other: "StateVector") -> complex:
        """Inner product <self|other>; bases must match exactly."""
        if self.basis != other.basis:
            raise ValueError("overlap requires states over the same basis")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def __repr__(self) -> str:
        return f"StateVector({self.basis!r})"


def build_product_state(
    site_amplitudes: Sequence[Mapping[int, complex]], basis: FockBasis
) -> StateVector:
    """Tensor product of per-site superpositions, expressed over ``basis``.

    Each entry of ``site_amplitudes`` maps level -> amplitude for one site;
    levels absent from the map carry amplitude zero. The result is
    normalized. Raises ValueError if the product state has support outside
    the basis (wrong level or, for a sector basis, mixed totals).
    """
    if len(site_amplitudes) != basis.L:
        raise ValueError(
            f"got amplitudes for {len(site_amplitudes)} sites, basis has {basis.L}"
        )
    terms: list[tuple[int, complex]] = [(0, 1.0 + 0.0j)]
    for j, site in enumerate(site_amplitudes):
        options = [(int(lvl), complex(a)) for lvl, a in site.items() if a != 0]
        if not options:
            raise ValueError(f"site {j} has no nonzero amplitude")
        for lvl, _ in options:
            if not 0 <= lvl < basis.K:
                raise ValueError(f"site {j} level {lvl} outside [0, {basis.K - 1}]")
        radix = int(basis.site_radix[j])
        terms = [(code + lvl * radix, amp * a) for code, amp in terms for lvl, a in options]
    amps = np.zeros(basis.dim, dtype=np.complex128)
    codes = np.array([c for c, _ in terms], dtype=np.int64)
    idx = basis.find_codes(codes)
    if np.any(idx < 0):
        raise ValueError(
            f"product state has support outside the basis (sector N={basis.sector})"
        )
    for i, (_, amp) in zip(idx, terms):
        amps[i] += amp
    return StateVector(basis, amps)


def parse_product_state(spec: str, basis: FockBasis) -> StateVector:
    """Build a product state from a per-site token string.

    One token per site: a digit d puts the site in level d, and ``+`` puts it
    in the equal superposition of levels 0 and 1. Example: ``"0101010101"``
    is the ten-site alternating pattern with five particles.
    """
    if len(spec) != basis.L:
        raise ValueError(f"state string has {len(spec)} tokens, basis has {basis.L} sites")
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    sites: list[dict[int, complex]] = []
    for j, token in enumerate(spec):
        if token == "+":
            sites.append({0: inv_sqrt2, 1: inv_sqrt2})
        elif token.isdigit():
            level = int(token)
            if level >= basis.K:
                raise ValueError(
                    f"site {j}: level {level} outside [0, {basis.K - 1}]"
                )
            sites.append({level: 1.0})
        else:
            raise ValueError(f"site {j}: unknown token {token!r}")
    return build_product_state(sites, basis)


def embed_state(state: StateVector, target: FockBasis) -> StateVector:
    """Re-express a state over a larger basis with more levels per site.

    Amplitudes are copied onto the matching occupation vectors and all other
    amplitudes are zero, so norms and inner products are preserved exactly.
    The site count must match and the target must have at least as many
    levels; if the target is sector-restricted the state must lie in that
    sector.
    """
    src = state.basis
    if target.L != src.L:
        raise ValueError(f"site count mismatch: {src.L} vs {target.L}")
    if target.K < src.K:
        raise ValueError(f"target has fewer levels ({target.K}) than source ({src.K})")
    codes = src.states.astype(np.int64) @ target.site_radix
    idx = target.find_codes(codes)
    missing = (idx < 0) & (state.amplitudes != 0)
    if np.any(missing):
        raise ValueError(
            f"state has weight outside target sector N={target.sector}"
        )
    amps = np.zeros(target.dim, dtype=np.complex128)
    keep = idx >= 0
    amps[idx[keep]] = state.amplitudes[keep]
    return StateVector(target, amps, normalize=False)
