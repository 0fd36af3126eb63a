"""Floquet propagators for the kicked rotator, kicked top and coupled
rotators, their classical counterpart maps, and Lyapunov estimation.

Quantum conventions (gauge of the standard torus quantization):

* rotator, one period  F0 = exp[-i p^2 N/(4 pi)] exp[-i K N cos(x)/(2 pi)]
  applied kick-first; position/momentum switches are unitary DFTs, so a
  period costs two FFTs,
* top, one period      F0 = exp[-i K Sz^2/(2S)] exp[-i (pi/2) Sy] and the
  perturbed operator carries an extra exp[-i phi Sx] rotation (optionally a
  torsion detuning K -> K + dK instead),
* coupled rotators share the kick stage, with interaction phase
  eps * sqrt(N1 N2) * sin(x1 - x2 - 0.33), and a 2-D FFT pair per period.

All `apply`-style methods accept either a StateVector or a raw complex
array whose leading axis is the Hilbert-space index; extra trailing axes
are propagated as an ensemble batch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft
from scipy.linalg import eigh

from .qstate import BasisMismatchError, SpinBasis, StateVector, TorusGrid

DENSE_DIM_LIMIT = 4096


def _as_array(psi, dim):
    if isinstance(psi, StateVector):
        if psi.dim != dim:
            raise BasisMismatchError(f"state dim {psi.dim}, propagator dim {dim}")
        return np.array(psi.amplitudes, dtype=complex), True
    a = np.asarray(psi, dtype=complex)
    if a.shape[0] != dim:
        raise BasisMismatchError(f"array dim {a.shape[0]}, propagator dim {dim}")
    return a.copy(), False


def _wrap(result, was_state, basis):
    if was_state:
        return StateVector(result / np.linalg.norm(result), basis)
    return result


def spin_operators(S: float):
    """Dense Sx, Sy, Sz and the m ladder for spin S (m ordered S..-S)."""
    basis = SpinBasis(S)
    m = basis.m
    dim = basis.dim
    cp = np.sqrt(S * (S + 1) - m[1:] * (m[1:] + 1))
    sp = np.zeros((dim, dim))
    sp[np.arange(dim - 1), np.arange(1, dim)] = cp
    sm = sp.T
    return 0.5 * (sp + sm), -0.5j * (sp - sm), np.diag(m), m


def _dft(N: int) -> np.ndarray:
    l = np.arange(N)
    return np.exp(-2j * np.pi * np.outer(l, l) / N) / np.sqrt(N)


def _rotator_phases(N: int, K: float):
    l = np.arange(N)
    kinetic = np.exp(-1j * np.pi * l**2 / N)
    kick = np.exp(-1j * (K * N / (2 * np.pi)) * np.cos(2 * np.pi * l / N))
    return kinetic, kick


class KickedRotatorFloquet:
    """One-period unitary of the quantum kicked rotator on an N-site torus."""

    def __init__(self, grid: TorusGrid, K: float):
        self.grid = grid
        self.K = float(K)
        self._kinetic, self._kick = _rotator_phases(grid.N, K)

    @property
    def dim(self) -> int:
        return self.grid.N

    @property
    def basis(self):
        return self.grid

    def _step(self, a, conj=False):
        # a: 2-D (N, batch)
        if conj:
            b = scipy.fft.fft(a, axis=0, norm="ortho")
            b = self._kinetic.conj()[:, None] * b
            b = scipy.fft.ifft(b, axis=0, norm="ortho")
            return self._kick.conj()[:, None] * b
        b = self._kick[:, None] * a
        b = scipy.fft.fft(b, axis=0, norm="ortho")
        b = self._kinetic[:, None] * b
        return scipy.fft.ifft(b, axis=0, norm="ortho")

    def _run(self, psi, n, conj):
        a, was_state = _as_array(psi, self.dim)
        shape = a.shape
        a = a.reshape(self.dim, -1)
        for _ in range(int(n)):
            a = self._step(a, conj=conj)
        return _wrap(a.reshape(shape), was_state, self.grid)

    def apply(self, psi, n: int = 1):
        """F^n psi (n = 0 returns the input unchanged)."""
        return self._run(psi, n, conj=False)

    def adjoint_apply(self, psi, n: int = 1):
        """(F^dagger)^n psi; undoes apply to rounding accuracy."""
        return self._run(psi, n, conj=True)

    def dense_matrix(self) -> np.ndarray:
        """Explicit Floquet matrix in the position representation.

        Built from the analytic x-representation elements
        (1/sqrt(N)) e^{i pi (l-l')^2/N} e^{-i K N cos(x_l')/(2 pi)} times the
        quadratic Gauss-sum phase that fixes the split-step gauge.
        """
        N = self.dim
        if N > DENSE_DIM_LIMIT:
            raise ValueError(f"dense matrix guard: N={N} > {DENSE_DIM_LIMIT}")
        if N % 2:
            # analytic quadratic-phase form needs even N; fall back to columns
            return np.asarray(self.apply(np.eye(N, dtype=complex), 1))
        l = np.arange(N)
        gauss = np.sum(np.exp(-1j * np.pi * l**2 / N)) / np.sqrt(N)
        kin = np.exp(1j * np.pi * (l[:, None] - l[None, :]) ** 2 / N) * (gauss / np.sqrt(N))
        return kin * self._kick[None, :]


class KickedTopFloquet:
    """One-period unitary of the quantum kicked top at spin S.

    The unperturbed operator is torsion times the pi/2 y-rotation; the
    perturbed one adds an x-rotation by `phi` and/or a torsion detuning
    `dK` (the latter commutes with the parity of the top and therefore has
    a first-order dephasing contribution, which the x-rotation lacks).
    """

    def __init__(self, S: float, K: float, phi: float = 0.0, dK: float = 0.0):
        self.basis = SpinBasis(S)
        self.S, self.K, self.phi, self.dK = float(S), float(K), float(phi), float(dK)
        sx, sy, _, m = spin_operators(S)
        wy, vy = eigh(sy)
        self._ry = (vy * np.exp(-1j * (np.pi / 2) * wy)) @ vy.conj().T
        self._torsion = np.exp(-1j * ((K + dK) / (2 * S)) * m**2)
        if phi:
            wx, vx = eigh(sx)
            self._rx = (vx * np.exp(-1j * phi * wx)) @ vx.conj().T
        else:
            self._rx = None

    @property
    def dim(self) -> int:
        return self.basis.dim

    def _step(self, a, conj=False):
        if conj:
            if self._rx is not None:
                a = self._rx.conj().T @ a
            a = self._torsion.conj()[:, None] * a if a.ndim > 1 else self._torsion.conj() * a
            return self._ry.conj().T @ a
        a = self._ry @ a
        a = self._torsion[:, None] * a if a.ndim > 1 else self._torsion * a
        if self._rx is not None:
            a = self._rx @ a
        return a

    def apply(self, psi, n: int = 1):
        a, was_state = _as_array(psi, self.dim)
        for _ in range(int(n)):
            a = self._step(a)
        return _wrap(a, was_state, self.basis)

    def adjoint_apply(self, psi, n: int = 1):
        a, was_state = _as_array(psi, self.dim)
        for _ in range(int(n)):
            a = self._step(a, conj=True)
        return _wrap(a, was_state, self.basis)

    def dense_matrix(self) -> np.ndarray:
        if self.dim > DENSE_DIM_LIMIT:
            raise ValueError(f"dense matrix guard: dim={self.dim} > {DENSE_DIM_LIMIT}")
        F = self._torsion[:, None] * self._ry
        return self._rx @ F if self._rx is not None else F


class CoupledRotatorFloquet:
    """One-period unitary of two coupled kicked rotators on an N1 x N2 grid.

    The joint state is stored as an (N1, N2) position-grid array (leading
    two axes); a period is one joint kick phase plus a 2-D FFT pair.  With
    `reverse_first=True` the engine implements the partially time-reversed
    Hamiltonian -[H1 + Sigma1] + [H2 + Sigma2] + U: the particle-1 kinetic
    and kick phases are conjugated (with K1 -> K1 + dK1), particle 2 and the
    coupling stay unconjugated, and the stage order is mirrored so that the
    backward period exactly undoes a forward one when dK1 = eps = 0.
    """

    def __init__(self, grid1: TorusGrid, grid2: TorusGrid, K1: float, K2: float,
                 eps: float, dK1: float = 0.0, dK2: float = 0.0,
                 reverse_first: bool = False):
        self.grid1, self.grid2 = grid1, grid2
        self.K1, self.K2, self.eps = float(K1), float(K2), float(eps)
        self.dK1, self.dK2 = float(dK1), float(dK2)
        self.reverse_first = bool(reverse_first)
        N1, N2 = grid1.N, grid2.N
        s1 = -1.0 if reverse_first else 1.0
        x1, x2 = grid1.x, grid2.x
        X1, X2 = np.meshgrid(x1, x2, indexing="ij")
        kick_phase = (
            -s1 * ((K1 + dK1) * N1 / (2 * np.pi)) * np.cos(X1)
            - ((K2 + dK2) * N2 / (2 * np.pi)) * np.cos(X2)
            - eps * np.sqrt(N1 * N2) * np.sin(X1 - X2 - 0.33)
        )
        self._kick = np.exp(1j * kick_phase)
        l1, l2 = np.arange(N1), np.arange(N2)
        self._kin = (np.exp(-1j * s1 * np.pi * l1**2 / N1)[:, None]
                     * np.exp(-1j * np.pi * l2**2 / N2)[None, :])

    @property
    def dims(self) -> tuple[int, int]:
        return (self.grid1.N, self.grid2.N)

    @property
    def dim(self) -> int:
        return self.grid1.N * self.grid2.N

    def _step(self, a, conj=False):
        kick = self._kick.conj() if conj else self._kick
        kin = self._kin.conj() if conj else self._kin
        if self.reverse_first ^ conj:
            # mirrored stage order: kinetic first, then kick
            a = scipy.fft.fft2(a, axes=(0, 1), norm="ortho")
            a = kin[..., None] * a if a.ndim > 2 else kin * a
            a = scipy.fft.ifft2(a, axes=(0, 1), norm="ortho")
            return (kick[..., None] * a) if a.ndim > 2 else kick * a
        a = kick[..., None] * a if a.ndim > 2 else kick * a
        a = scipy.fft.fft2(a, axes=(0, 1), norm="ortho")
        a = kin[..., None] * a if a.ndim > 2 else kin * a
        return scipy.fft.ifft2(a, axes=(0, 1), norm="ortho")

    def apply_joint(self, joint: np.ndarray, n: int = 1) -> np.ndarray:
        """Propagate an (N1, N2[, batch]) joint position-grid array n periods."""
        a = np.asarray(joint, dtype=complex)
        if a.shape[:2] != self.dims:
            raise BasisMismatchError(f"joint shape {a.shape} != grids {self.dims}")
        for _ in range(int(n)):
            a = self._step(a)
        return a

    def adjoint_apply_joint(self, joint: np.ndarray, n: int = 1) -> np.ndarray:
        a = np.asarray(joint, dtype=complex)
        if a.shape[:2] != self.dims:
            raise BasisMismatchError(f"joint shape {a.shape} != grids {self.dims}")
        for _ in range(int(n)):
            a = self._step(a, conj=True)
        return a

    def apply(self, psi, n: int = 1):
        """Flat-vector interface; the leading axis is the N1*N2 joint index."""
        a, was_state = _as_array(psi, self.dim)
        shape = a.shape
        a = self.apply_joint(a.reshape(self.dims + shape[1:]), n)
        out = a.reshape(shape)
        basis = TorusGrid(self.dim)
        return _wrap(out, was_state, basis)

    def adjoint_apply(self, psi, n: int = 1):
        a, was_state = _as_array(psi, self.dim)
        shape = a.shape
        a = self.adjoint_apply_joint(a.reshape(self.dims + shape[1:]), n)
        return _wrap(a.reshape(shape), was_state, TorusGrid(self.dim))

    def dense_matrix(self) -> np.ndarray:
        if self.dim > DENSE_DIM_LIMIT:
            raise ValueError(f"dense matrix guard: dim={self.dim} > {DENSE_DIM_LIMIT}")
        eye = np.eye(self.dim, dtype=complex)
        cols = self.apply_joint(eye.reshape(self.dims + (self.dim,)), 1)
        return cols.reshape(self.dim, self.dim)


def boltzmann_backward(forward: CoupledRotatorFloquet, dK1: float,
                       dK2: float = 0.0) -> CoupledRotatorFloquet:
    """Backward engine for the Boltzmann echo protocol.

    Particle 1 is time-reversed with an imperfection dK1, particle 2 keeps
    running forward (optionally detuned by dK2), and the coupling is applied
    unconjugated with the same strength as in `forward`.
    """
    return CoupledRotatorFloquet(
        forward.grid1, forward.grid2, forward.K1, forward.K2, forward.eps,
        dK1=dK1, dK2=dK2, reverse_first=True,
    )


# ---------------------------------------------------------------------------
# classical maps

def standard_map_step(pt: np.ndarray, K: float) -> np.ndarray:
    """One step of the standard map: p' = p + K sin x, x' = x + p' (mod 2*pi)."""
    pt = np.asarray(pt, dtype=float)
    x, p = pt[..., 0], pt[..., 1]
    p1 = np.mod(p + K * np.sin(x), 2 * np.pi)
    x1 = np.mod(x + p1, 2 * np.pi)
    return np.stack([x1, p1], axis=-1)


def top_map_step(pt: np.ndarray, K: float) -> np.ndarray:
    """One step of the classical kicked-top map on the unit sphere."""
    pt = np.asarray(pt, dtype=float)
    x, y, z = pt[..., 0], pt[..., 1], pt[..., 2]
    c, s = np.cos(K * x), np.sin(K * x)
    out = np.stack([z * c + y * s, -z * s + y * c, -x], axis=-1)
    return out / np.linalg.norm(out, axis=-1, keepdims=True)


def _standard_tangent(pt, v, K):
    x = pt[..., 0]
    c = K * np.cos(x)
    vx, vp = v[..., 0], v[..., 1]
    return np.stack([vx * (1 + c) + vp, vx * c + vp], axis=-1)


def _top_tangent(pt, v, K):
    x, y, z = pt[..., 0], pt[..., 1], pt[..., 2]
    c, s = np.cos(K * x), np.sin(K * x)
    vx, vy, vz = v[..., 0], v[..., 1], v[..., 2]
    return np.stack([
        vx * (-z * K * s + y * K * c) + vy * s + vz * c,
        vx * (-z * K * c - y * K * s) + vy * c - vz * s,
        -vx,
    ], axis=-1)


_MAPS = {
    "standard": (standard_map_step, _standard_tangent, 2),
    "top": (top_map_step, _top_tangent, 3),
}


def _random_points(kind, n, rng):
    if kind == "standard":
        return rng.uniform(0, 2 * np.pi, size=(n, 2))
    z = rng.uniform(-1, 1, size=n)
    az = rng.uniform(0, 2 * np.pi, size=n)
    r = np.sqrt(1 - z * z)
    return np.stack([r * np.cos(az), r * np.sin(az), z], axis=-1)


def finite_time_lyapunov(kind: str, pts: np.ndarray, K: float, n_steps: int,
                         rng=None) -> np.ndarray:
    """Per-point finite-time exponent by tangent stretching (no transient)."""
    step, tangent, d = _MAPS[kind]
    rng = rng or np.random.default_rng(0)
    v = rng.standard_normal(pts.shape)
    v /= np.linalg.norm(v, axis=-1, keepdims=True)
    acc = np.zeros(pts.shape[0])
    p = pts.copy()
    for _ in range(n_steps):
        v = tangent(p, v, K)
        nv = np.linalg.norm(v, axis=-1)
        acc += np.log(nv)
        v /= nv[..., None]
        p = step(p, K)
    return acc / n_steps


@dataclass(frozen=True)
class LyapunovEstimate:
    lyapunov: float
    stderr: float
    n_init: int
    n_steps: int
    transient: int

    def __post_init__(self):
        if self.stderr < 0:
            raise ValueError("stderr must be nonnegative")


def benettin_lyapunov(map_kind: str, K: float, n_init: int, n_steps: int,
                      seed, transient: int = 100,
                      chaos_threshold: float = 0.05) -> LyapunovEstimate:
    """Largest Lyapunov exponent by tangent-vector renormalization.

    Averages finite-time exponents over n_init random initial conditions in
    the chaotic sea.  Candidates whose 200-kick finite-time exponent falls
    below `chaos_threshold` are redrawn (mixed-phase-space filter), a
    `transient`-kick warmup is discarded, and the tangent is renormalized
    every kick.
    """
    if n_init <= 0 or n_steps <= 0:
        raise ValueError("n_init and n_steps must be positive")
    if map_kind not in _MAPS:
        raise ValueError(f"unknown map kind {map_kind!r}")
    step, tangent, _ = _MAPS[map_kind]
    rng = np.random.default_rng(seed)

    pts = np.empty((0, _MAPS[map_kind][2]))
    attempts = 0
    while pts.shape[0] < n_init:
        cand = _random_points(map_kind, n_init - pts.shape[0], rng)
        lam = finite_time_lyapunov(map_kind, cand, K, 200, rng)
        pts = np.concatenate([pts, cand[lam > chaos_threshold]])
        attempts += 1
        if attempts > 200:
            raise ValueError(
                f"could not find {n_init} chaotic initial conditions at K={K}")

    for _ in range(transient):
        pts = step(pts, K)
    v = rng.standard_normal(pts.shape)
    v /= np.linalg.norm(v, axis=-1, keepdims=True)
    acc = np.zeros(n_init)
    for _ in range(n_steps):
        v = tangent(pts, v, K)
        nv = np.linalg.norm(v, axis=-1)
        acc += np.log(nv)
        v /= nv[..., None]
        pts = step(pts, K)
    lam = acc / n_steps
    return LyapunovEstimate(
        lyapunov=float(lam.mean()),
        stderr=float(lam.std(ddof=1) / np.sqrt(n_init)),
        n_init=n_init, n_steps=n_steps, transient=transient,
    )
