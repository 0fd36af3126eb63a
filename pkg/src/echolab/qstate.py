"""Quantum states on the torus and the spin sphere.

Position-grid states live on the N-site torus lattice x_l = 2*pi*l/N with
conjugate momenta p_l = 2*pi*l/N; spin states live on the |S,m> ladder with
m = S, S-1, ..., -S.  All constructors return unit-norm states (or unit-trace
density matrices) and the returned arrays are frozen against in-place writes,
so instances can be shared freely across workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

NORM_TOL = 1e-12


class BasisMismatchError(ValueError):
    """Two states (or a state and an operator) live on different bases."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TorusGrid:
    """N-dimensional Hilbert space of a particle on the 2*pi x 2*pi torus."""

    N: int

    def __post_init__(self):
        if self.N < 2:
            raise ValueError(f"torus grid needs N >= 2, got {self.N}")

    @property
    def hbar_eff(self) -> float:
        return 1.0 / self.N

    @property
    def x(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.N) / self.N

    @property
    def p(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.N) / self.N

    @property
    def dim(self) -> int:
        return self.N


@dataclass(frozen=True)
class SpinBasis:
    """|S,m> ladder basis, m ordered S, S-1, ..., -S."""

    S: float

    def __post_init__(self):
        twoS = round(2 * self.S)
        if twoS < 1 or abs(2 * self.S - twoS) > 1e-12:
            raise ValueError(f"S must be a positive (half-)integer, got {self.S}")

    @property
    def dim(self) -> int:
        return round(2 * self.S) + 1

    @property
    def m(self) -> np.ndarray:
        return self.S - np.arange(self.dim)


@dataclass(frozen=True)
class GenericBasis:
    """Unlabeled d-dimensional basis (environment states, toy models)."""

    dim_: int

    def __post_init__(self):
        if self.dim_ < 1:
            raise ValueError("basis dimension must be >= 1")

    @property
    def dim(self) -> int:
        return self.dim_


Basis = TorusGrid | SpinBasis | GenericBasis


@dataclass(frozen=True)
class StateVector:
    """Normalized complex amplitude vector over a labeled basis."""

    amplitudes: np.ndarray
    basis: Basis

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex)
        if amp.ndim != 1 or amp.shape[0] != self.basis.dim:
            raise ValueError(
                f"amplitude shape {amp.shape} does not match basis dim {self.basis.dim}"
            )
        n = np.linalg.norm(amp)
        if abs(n - 1.0) > NORM_TOL:
            raise ValueError(f"state not normalized: |norm - 1| = {abs(n - 1.0):.2e}")
        object.__setattr__(self, "amplitudes", _frozen(amp))

    @property
    def dim(self) -> int:
        return self.basis.dim

    def density(self) -> "DensityMatrix":
        """Pure-state projector |psi><psi|."""
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()), self.basis)


def normalized_state(amplitudes: np.ndarray, basis: Basis) -> StateVector:
    """Build a StateVector, normalizing exactly first."""
    amp = np.asarray(amplitudes, dtype=complex)
    n = np.linalg.norm(amp)
    if n == 0:
        raise ValueError("cannot normalize the zero vector")
    return StateVector(amp / n, basis)


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, trace-one density matrix over a labeled basis."""

    entries: np.ndarray
    basis: Basis

    _EIG_CHECK_DIM = 256

    def __post_init__(self):
        rho = np.asarray(self.entries, dtype=complex)
        d = self.basis.dim
        if rho.shape != (d, d):
            raise ValueError(f"entries shape {rho.shape} does not match basis dim {d}")
        herm = np.max(np.abs(rho - rho.conj().T))
        if herm > 1e-12:
            raise ValueError(f"density matrix not Hermitian: residue {herm:.2e}")
        tr = np.trace(rho).real
        if abs(tr - 1.0) > 1e-12:
            raise ValueError(f"density matrix trace {tr} != 1")
        if d <= self._EIG_CHECK_DIM:
            lo = np.linalg.eigvalsh(rho).min()
            if lo < -1e-10:
                raise ValueError(f"density matrix has negative eigenvalue {lo:.2e}")
        object.__setattr__(self, "entries", _frozen(rho))

    @property
    def dim(self) -> int:
        return self.basis.dim


@dataclass(frozen=True)
class WavepacketSpec:
    """Center and real-space width of a Gaussian packet on the torus."""

    x0: float
    p0: float
    nu: float

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError(f"packet width must be positive, got {self.nu}")
        object.__setattr__(self, "x0", float(np.mod(self.x0, 2 * np.pi)))
        object.__setattr__(self, "p0", float(np.mod(self.p0, 2 * np.pi)))


def coherent_width(grid: TorusGrid) -> float:
    """Symmetric coherent-state width sqrt(2*pi/N): equal x/p spread in grid units."""
    return float(np.sqrt(2 * np.pi / grid.N))


def gaussian_torus(grid: TorusGrid, spec: WavepacketSpec) -> StateVector:
    """Periodic Gaussian wavepacket, winding images summed to below 1e-14.

    Amplitudes follow exp[i*p0*(x - x0)*N/(2*pi) - (x - x0)^2/(2 nu^2)] summed
    over winding images x + 2*pi*w, then normalized exactly.  The momentum
    center p0 is a physical momentum in [0, 2*pi); lattice momenta are
    p = 2*pi*m/N.
    """
    if spec.nu > np.pi:
        raise ValueError(f"packet width nu={spec.nu} > pi is not a localized state")
    N = grid.N
    x = grid.x
    mom = spec.p0 * N / (2 * np.pi)  # momentum in lattice units
    psi = np.zeros(N, dtype=complex)
    w = 0
    while True:
        added = False
        for s in ((w, -w) if w else (0,)):
            d = x + 2 * np.pi * s - spec.x0
            if np.min(d * d) / (2 * spec.nu**2) < -np.log(1e-14):
                psi += np.exp(1j * mom * d - d * d / (2 * spec.nu**2))
                added = True
        if not added and w > 0:
            break
        w += 1
    return normalized_state(psi, grid)


def spin_coherent(S: float, theta: float, phi: float) -> StateVector:
    """SU(2) coherent state |theta,phi> on the |S,m> ladder.

    Uses the binomial amplitude formula in log space, stable up to S ~ 5000.
    """
    basis = SpinBasis(S)
    m = basis.m
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    logbin = 0.5 * (gammaln(2 * S + 1) - gammaln(S + m + 1) - gammaln(S - m + 1))
    with np.errstate(divide="ignore"):
        logamp = logbin + (S + m) * np.log(max(abs(c), 1e-300)) \
            + (S - m) * np.log(max(abs(s), 1e-300))
    amp = np.sign(c) ** np.round(S + m) * np.sign(s) ** np.round(S - m) \
        * np.exp(logamp - logamp.max())
    return normalized_state(amp * np.exp(-1j * m * phi), basis)


def _compass_parts(grid, spec, r0, p0):
    if p0 is None:
        p0 = r0 / spec.nu**2  # minimum-uncertainty diagonal relation
    packs = [
        gaussian_torus(grid, WavepacketSpec(spec.x0 - r0, spec.p0, spec.nu)),
        gaussian_torus(grid, WavepacketSpec(spec.x0 + r0, spec.p0, spec.nu)),
        gaussian_torus(grid, WavepacketSpec(spec.x0, spec.p0 + p0, spec.nu)),
        gaussian_torus(grid, WavepacketSpec(spec.x0, spec.p0 - p0, spec.nu)),
    ]
    return packs


def compass_pure(grid: TorusGrid, spec: WavepacketSpec, r0: float,
                 p0: float | None = None) -> StateVector:
    """Equal-weight coherent superposition of the four cardinal packets.

    Two packets are displaced by +-r0 in position, two by +-p0 in momentum
    (default p0 = r0/nu^2).  Normalization is exact, so overlapping packets
    are handled without bias; they merely stop being a four-point compass.
    """
    packs = _compass_parts(grid, spec, r0, p0)
    return normalized_state(sum(p.amplitudes for p in packs), grid)


def compass_mixture(grid: TorusGrid, spec: WavepacketSpec, r0: float,
                    p0: float | None = None) -> DensityMatrix:
    """Equal-weight incoherent mixture of the four cardinal packets."""
    packs = _compass_parts(grid, spec, r0, p0)
    rho = sum(np.outer(p.amplitudes, p.amplitudes.conj()) for p in packs) / 4.0
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(rho / np.trace(rho).real, grid)


def overlap(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2."""
    if a.basis != b.basis:
        raise BasisMismatchError(f"overlap between {a.basis} and {b.basis}")
    v = np.vdot(a.amplitudes, b.amplitudes)
    return float(min(abs(v) ** 2, 1.0 + 1e-9))


def partial_trace(rho: DensityMatrix | np.ndarray, dims: tuple[int, int],
                  keep: int, basis: Basis | None = None) -> DensityMatrix:
    """Trace out one factor of a bipartite density matrix.

    dims declares the tensor factorization (N1, N2); keep is 1 or 2.
    """
    n1, n2 = dims
    entries = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho)
    if entries.shape != (n1 * n2, n1 * n2):
        raise ValueError(f"matrix of dim {entries.shape} does not factor as {n1}x{n2}")
    if keep not in (1, 2):
        raise ValueError("keep must be 1 or 2")
    t = entries.reshape(n1, n2, n1, n2)
    red = np.einsum("ikjk->ij", t) if keep == 1 else np.einsum("kikj->ij", t)
    red = 0.5 * (red + red.conj().T)
    if basis is None:
        basis = TorusGrid(red.shape[0])
    return DensityMatrix(red / np.trace(red).real, basis)


def purity(rho: DensityMatrix | np.ndarray) -> float:
    """Tr[rho^2], computed as the squared Frobenius norm (exact for Hermitian rho)."""
    entries = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho)
    return float(np.sum(np.abs(entries) ** 2).real)


def random_state(dim: int, seed, basis: Basis | None = None) -> StateVector:
    """Haar-like random pure state: iid complex Gaussians, normalized.

    seed may be an int or a numpy SeedSequence/Generator; fixed seeds give
    bit-identical vectors.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    if basis is None:
        basis = TorusGrid(dim) if dim >= 2 else GenericBasis(dim)
    return normalized_state(v, basis)
