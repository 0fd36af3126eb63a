"""Purity dynamics of coupled kicked rotators and the exact spin-1/2
dephasing toy model.

The bipartite state is kept as its (N1, N2) amplitude tensor; the reduced
density matrix is a single tensor contraction, the joint density matrix is
never materialized.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh

from . import qstate
from .dynamics import CoupledRotatorFloquet
from .qstate import DensityMatrix, StateVector, TorusGrid


@dataclass(frozen=True)
class BipartiteState:
    """Normalized joint state on the N1 x N2 position grid."""

    amplitudes: np.ndarray
    grid1: TorusGrid
    grid2: TorusGrid

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex)
        if a.shape != (self.grid1.N, self.grid2.N):
            raise ValueError(f"joint shape {a.shape} != ({self.grid1.N}, {self.grid2.N})")
        n = np.linalg.norm(a)
        if abs(n - 1) > 1e-12:
            raise ValueError(f"joint state not normalized: |norm-1| = {abs(n-1):.2e}")
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def product(cls, psi1: StateVector, psi2: StateVector) -> "BipartiteState":
        if not isinstance(psi1.basis, TorusGrid) or not isinstance(psi2.basis, TorusGrid):
            raise qstate.BasisMismatchError("bipartite states live on torus grids")
        return cls(np.outer(psi1.amplitudes, psi2.amplitudes), psi1.basis, psi2.basis)


@dataclass
class PuritySeries:
    """P(t) = Tr[rho_1(t)^2] at integer kicks, with run metadata."""

    times: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=int)
        self.values = np.asarray(self.values, dtype=float)
        nmin = 1.0 / min(self.meta.get("N1", 2**30), self.meta.get("N2", 2**30))
        if np.any(self.values < nmin - 1e-10) or np.any(self.values > 1 + 1e-10):
            raise ValueError("purity outside [1/min(N1,N2), 1]")
        if self.times.size and self.times[0] == 0 and abs(self.values[0] - 1) > 1e-10:
            raise ValueError("purity at t=0 differs from 1 for a product state")


def reduced_density(state: BipartiteState, keep: int) -> DensityMatrix:
    """Trace one factor out of the pure joint state."""
    a = state.amplitudes
    if keep == 1:
        rho = a @ a.conj().T
        basis = state.grid1
    elif keep == 2:
        rho = a.T @ a.conj()
        basis = state.grid2
    else:
        raise ValueError("keep must be 1 or 2")
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(rho / np.trace(rho).real, basis)


def _joint_purity(a: np.ndarray) -> float:
    # purity of either factor: sum of fourth powers of the singular values
    rho = a @ a.conj().T if a.shape[0] <= a.shape[1] else a.T @ a.conj()
    return float(np.sum(np.abs(rho) ** 2).real)


def purity_series(psi1: StateVector, psi2: StateVector,
                  F: CoupledRotatorFloquet, n_max: int) -> PuritySeries:
    """Reduced purity of a product state under the coupled-rotator map.

    Purity is accumulated as the squared Frobenius norm of the contracted
    reduced matrix, O(N^3) per kick via one matrix product.
    """
    joint = BipartiteState.product(psi1, psi2)
    if F.dims != (joint.grid1.N, joint.grid2.N):
        raise qstate.BasisMismatchError(f"engine dims {F.dims} != state dims")
    a = np.array(joint.amplitudes)
    vals = np.empty(n_max + 1)
    vals[0] = 1.0
    for n in range(1, n_max + 1):
        a = F.apply_joint(a, 1)
        vals[n] = min(_joint_purity(a), 1.0)
    meta = {"kind": "purity", "N1": F.dims[0], "N2": F.dims[1],
            "K1": F.K1, "K2": F.K2, "eps": F.eps}
    return PuritySeries(np.arange(n_max + 1), np.clip(vals, 0, 1), meta)


def purity_ensemble(sampler1, sampler2, F: CoupledRotatorFloquet, n_max: int,
                    n_samples: int, seed) -> PuritySeries:
    """Mean purity over an ensemble of initial product states."""
    streams = np.random.SeedSequence(seed).spawn(2 * n_samples)
    acc = np.zeros(n_max + 1)
    for k in range(n_samples):
        p1 = sampler1.sample(np.random.default_rng(streams[2 * k]))
        p2 = sampler2.sample(np.random.default_rng(streams[2 * k + 1]))
        acc += purity_series(p1, p2, F, n_max).values
    vals = acc / n_samples
    meta = {"kind": "purity_ensemble", "N1": F.dims[0], "N2": F.dims[1],
            "K1": F.K1, "K2": F.K2, "eps": F.eps,
            "n_samples": n_samples, "seed": seed}
    return PuritySeries(np.arange(n_max + 1), vals, meta)


def spin_dephasing_toy(alpha: complex, beta: complex, H_env: np.ndarray,
                       H_up: np.ndarray, H_down: np.ndarray,
                       phi0: StateVector | np.ndarray, ts: np.ndarray):
    """Exact fidelity amplitude and purity of the dephasing spin-1/2 model.

    A frozen two-level system couples to an environment through von Neumann
    branches H_up/H_down:

        f(t) = <phi0| e^{i (H_env + H_down) t} e^{-i (H_env + H_up) t} |phi0>
        P(t) = |alpha|^4 + |beta|^4 + 2 |alpha|^2 |beta|^2 |f(t)|^2

    Continuous-time propagation via one Hermitian diagonalization per branch.
    Returns (f, P) evaluated on the time grid ts.
    """
    if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1.0) > 1e-10:
        raise ValueError("need |alpha|^2 + |beta|^2 = 1")
    phi = np.asarray(phi0.amplitudes if isinstance(phi0, StateVector) else phi0,
                     dtype=complex)
    d = phi.shape[0]
    if d > 512:
        raise ValueError(f"environment dimension {d} exceeds the 512 guard")
    for name, H in (("H_env", H_env), ("H_up", H_up), ("H_down", H_down)):
        H = np.asarray(H)
        if H.shape != (d, d) or np.max(np.abs(H - H.conj().T)) > 1e-10:
            raise ValueError(f"{name} must be Hermitian of dim {d}")
    wu, vu = eigh(np.asarray(H_env) + np.asarray(H_up))
    wd, vd = eigh(np.asarray(H_env) + np.asarray(H_down))
    cu = vu.conj().T @ phi
    cd = vd.conj().T @ phi
    ts = np.asarray(ts, dtype=float)
    f = np.empty(ts.shape, dtype=complex)
    for i, t in enumerate(ts):
        evolved_up = vu @ (np.exp(-1j * wu * t) * cu)
        f[i] = np.vdot(vd @ (np.exp(-1j * wd * t) * cd), evolved_up)
    a2, b2 = abs(alpha) ** 2, abs(beta) ** 2
    P = a2**2 + b2**2 + 2 * a2 * b2 * np.abs(f) ** 2
    return f, P
