"""Echo observables: Loschmidt, prepared-state, displacement and Boltzmann
echoes, ensemble statistics, threshold times, and the response-spectrum
transform of the fidelity amplitude.

Every echo is evaluated at integer kick counts t = 0..n_max.  Series retain
the complex amplitude alongside the squared modulus, plus a metadata dict
recording model parameters and seeds, so an output file is self-describing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import qstate
from .dynamics import CoupledRotatorFloquet, boltzmann_backward, finite_time_lyapunov
from .qstate import SpinBasis, StateVector, TorusGrid, WavepacketSpec

VALUE_TOL = 1e-12


@dataclass
class EchoSeries:
    """Discrete-time echo record M(t), t = 0..n_max, with provenance."""

    times: np.ndarray
    values: np.ndarray
    amplitude: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=int)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.times.shape:
            raise ValueError("times/values shape mismatch")
        if np.any(self.values < -VALUE_TOL) or np.any(self.values > 1 + VALUE_TOL):
            raise ValueError("echo values outside [0, 1]")
        if self.times.size and self.times[0] == 0 and abs(self.values[0] - 1) > 1e-10:
            raise ValueError(f"echo at t=0 is {self.values[0]}, expected 1")

    def __len__(self):
        return self.times.size


@dataclass
class EchoEnsembleStats:
    """Per-kick mean and unbiased variance over an ensemble of initial states."""

    times: np.ndarray
    mean: np.ndarray
    variance: np.ndarray
    n_samples: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n_samples < 2:
            raise ValueError("ensemble statistics need n_samples >= 2")
        if np.any(self.variance < -1e-15):
            raise ValueError("negative variance")


def _compatible(F0, F):
    if getattr(F0, "dim", None) != getattr(F, "dim", None):
        raise qstate.BasisMismatchError(
            f"propagator dims differ: {getattr(F0, 'dim', None)} vs {getattr(F, 'dim', None)}")


def _amplitude_curves(psis: np.ndarray, F0, F, n_max: int) -> np.ndarray:
    """f(t) = <psi| (F^dag)^t F0^t |psi> for a (dim, m) batch, t = 0..n_max."""
    a = psis.copy()
    b = psis.copy()
    out = np.empty((n_max + 1, psis.shape[1]), dtype=complex)
    out[0] = np.sum(np.abs(psis) ** 2, axis=0)
    for n in range(1, n_max + 1):
        a = np.asarray(F0.apply(a, 1))
        b = np.asarray(F.apply(b, 1))
        out[n] = np.sum(b.conj() * a, axis=0)
    return out


def loschmidt(psi0: StateVector, F0, F, n_max: int) -> EchoSeries:
    """Loschmidt echo M_L(t) = |<psi0|(F^dag)^t F0^t|psi0>|^2."""
    _compatible(F0, F)
    amp = _amplitude_curves(np.asarray(psi0.amplitudes)[:, None], F0, F, n_max)[:, 0]
    values = np.clip(np.abs(amp) ** 2, 0.0, 1.0)
    meta = {"kind": "loschmidt", "n_max": n_max}
    return EchoSeries(np.arange(n_max + 1), values, amp, meta)


def prepared_echo(psi0: StateVector, F0, F, T: int, n_max: int) -> EchoSeries:
    """Loschmidt echo of the prepared state psi_T = F0^T psi0.

    T = 0 reduces to loschmidt exactly.
    """
    if T < 0:
        raise ValueError("preparation time T must be >= 0")
    psi_T = F0.apply(psi0, T) if T else psi0
    series = loschmidt(psi_T, F0, F, n_max)
    series.meta.update({"kind": "prepared_echo", "T": T})
    return series


# ---------------------------------------------------------------------------
# displacement echoes

@dataclass(frozen=True)
class DisplacementSpec:
    """Phase-space displacement in half-lattice units.

    kind 'momentum' boosts by P = m * 2*pi/N, kind 'spatial' shifts by
    X = m * 2*pi/N.  m may be any integer multiple of 1/2: integer m maps
    the lattice onto itself, half-integer m is commensurate with the
    half-step phase-space lattice (both are exactly unitary).
    """

    kind: str
    m: float

    def __post_init__(self):
        if self.kind not in ("momentum", "spatial"):
            raise ValueError(f"unknown displacement kind {self.kind!r}")
        if abs(2 * self.m - round(2 * self.m)) > 1e-9:
            raise ValueError(
                f"displacement m={self.m} is incommensurate (need a multiple of 1/2)")


def displacement_operator(grid: TorusGrid, disp: DisplacementSpec):
    """Return a callable applying the unitary displacement to a (N, m) batch."""
    N = grid.N
    if disp.kind == "momentum":
        phase = np.exp(1j * disp.m * grid.x)

        def op(a, inverse=False):
            f = phase.conj() if inverse else phase
            return f[:, None] * a if a.ndim > 1 else f * a
        return op
    m = disp.m
    if abs(m - round(m)) < 1e-12:
        shift = int(round(m))

        def op(a, inverse=False):
            return np.roll(a, -shift if inverse else shift, axis=0)
        return op
    phase = np.exp(-2j * np.pi * np.arange(N) * m / N)

    def op(a, inverse=False):
        f = phase.conj() if inverse else phase
        b = np.fft.fft(a, axis=0)
        b = f[:, None] * b if a.ndim > 1 else f * b
        return np.fft.ifft(b, axis=0)
    return op


def displacement_echo(psi0: StateVector, F0, disp: DisplacementSpec,
                      n_max: int) -> EchoSeries:
    """M_D(t) = |<psi0| D^dag (F0^dag)^t D F0^t |psi0>|^2."""
    if not isinstance(psi0.basis, TorusGrid):
        raise qstate.BasisMismatchError("displacement echoes live on the torus grid")
    D = displacement_operator(psi0.basis, disp)
    a = np.asarray(psi0.amplitudes)[:, None]
    b = D(a)
    out = np.empty(n_max + 1, dtype=complex)
    out[0] = np.vdot(b, D(a))
    for n in range(1, n_max + 1):
        a = np.asarray(F0.apply(a, 1))
        b = np.asarray(F0.apply(b, 1))
        out[n] = np.vdot(b, D(a))
    values = np.clip(np.abs(out) ** 2, 0.0, 1.0)
    meta = {"kind": f"displacement_{disp.kind}", "m": disp.m, "n_max": n_max}
    return EchoSeries(np.arange(n_max + 1), values, out, meta)


def displacement_plateau_prediction(N: int, m: float, nu: float) -> float:
    """Quantum-freeze plateau Max(4 e^{-(sigma P)^2/2} sin^2(PL/2)/(PL)^2, 1/N).

    In half-lattice units the oscillatory factor is sinc^2(m) with zeros at
    integer m, and the Gaussian envelope carries the packet width nu.
    """
    if m == 0:
        return 1.0
    osc = 4 * np.sin(np.pi * m) ** 2 / (2 * np.pi * m) ** 2
    return float(max(np.exp(-(nu * m) ** 2 / 2) * osc, 1.0 / N))


# ---------------------------------------------------------------------------
# ensembles

class GaussianPacketSampler:
    """Gaussian wavepackets with uniformly random phase-space centers."""

    def __init__(self, grid: TorusGrid, nu: float | None = None):
        self.grid = grid
        self.nu = float(nu) if nu is not None else qstate.coherent_width(grid)

    def sample(self, rng: np.random.Generator) -> StateVector:
        x0 = rng.uniform(0, 2 * np.pi)
        p0 = 2 * np.pi * rng.integers(0, self.grid.N) / self.grid.N
        return qstate.gaussian_torus(self.grid, WavepacketSpec(x0, p0, self.nu))

    def describe(self) -> dict:
        return {"sampler": "gaussian_packet", "N": self.grid.N, "nu": self.nu}


class SpinCoherentSampler:
    """Spin coherent states, optionally restricted to the classical chaotic sea."""

    def __init__(self, S: float, K: float | None = None, lam_min: float = 0.05,
                 filter_steps: int = 300):
        self.S, self.K, self.lam_min = float(S), K, float(lam_min)
        self.filter_steps = int(filter_steps)

    def sample(self, rng: np.random.Generator) -> StateVector:
        while True:
            z = rng.uniform(-1, 1)
            az = rng.uniform(0, 2 * np.pi)
            if self.K is None:
                break
            pt = np.array([[np.sqrt(1 - z * z) * np.cos(az),
                            np.sqrt(1 - z * z) * np.sin(az), z]])
            lam = finite_time_lyapunov("top", pt, self.K, self.filter_steps, rng)[0]
            if lam > self.lam_min:
                break
        return qstate.spin_coherent(self.S, np.arccos(z), az)

    def describe(self) -> dict:
        return {"sampler": "spin_coherent", "S": self.S, "K": self.K,
                "lam_min": self.lam_min}


class CompassSampler:
    """Pure compass states with random centers and fixed arm separations."""

    def __init__(self, grid: TorusGrid, r0: float, p0: float | None = None,
                 nu: float | None = None):
        self.grid, self.r0, self.p0 = grid, float(r0), p0
        self.nu = float(nu) if nu is not None else qstate.coherent_width(grid)

    def sample(self, rng: np.random.Generator) -> StateVector:
        spec = WavepacketSpec(rng.uniform(0, 2 * np.pi),
                              2 * np.pi * rng.integers(0, self.grid.N) / self.grid.N,
                              self.nu)
        return qstate.compass_pure(self.grid, spec, self.r0, self.p0)

    def describe(self) -> dict:
        return {"sampler": "compass", "N": self.grid.N, "r0": self.r0,
                "p0": self.p0, "nu": self.nu}


class RandomStateSampler:
    """Haar-like random pure states."""

    def __init__(self, dim: int):
        self.dim = int(dim)

    def sample(self, rng: np.random.Generator) -> StateVector:
        return qstate.random_state(self.dim, rng)

    def describe(self) -> dict:
        return {"sampler": "random_state", "dim": self.dim}


def sample_batch(sampler, n_samples: int, seed) -> np.ndarray:
    """Draw n_samples states as a (dim, n_samples) array, deterministically.

    Each sample gets its own child stream of the seed, so the batch content
    does not depend on evaluation order.
    """
    if n_samples < 1:
        raise ValueError("need at least one sample")
    streams = np.random.SeedSequence(seed).spawn(n_samples)
    cols = [sampler.sample(np.random.default_rng(s)) for s in streams]
    return np.stack([c.amplitudes for c in cols], axis=1)


def ensemble_stats(sampler, F0, F, n_max: int, n_samples: int,
                   seed) -> EchoEnsembleStats:
    """Mean and unbiased variance of the Loschmidt echo over an ensemble.

    The reduction is an indexed two-pass mean/variance over the sample axis,
    so results are bit-reproducible for a fixed seed regardless of worker
    scheduling.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    _compatible(F0, F)
    psis = sample_batch(sampler, n_samples, seed)
    amp = _amplitude_curves(psis, F0, F, n_max)
    vals = np.clip(np.abs(amp) ** 2, 0.0, 1.0)
    meta = {"kind": "ensemble", "seed": seed, "n_samples": n_samples}
    if hasattr(sampler, "describe"):
        meta.update(sampler.describe())
    return EchoEnsembleStats(
        times=np.arange(n_max + 1),
        mean=vals.mean(axis=1),
        variance=vals.var(axis=1, ddof=1),
        n_samples=n_samples,
        meta=meta,
    )


# ---------------------------------------------------------------------------
# Boltzmann echo

def boltzmann_echo(psi1: StateVector, env_sampler, Hf: CoupledRotatorFloquet,
                   Hb: CoupledRotatorFloquet, n_max: int, n_env: int = 20,
                   seed=0) -> EchoSeries:
    """Boltzmann echo: only subsystem 1 is time-reversed, subsystem 2 traced.

    M_B(t) = < <psi1| Tr_2[ U_b^t U_f^t rho_0 (U_f^dag)^t (U_b^dag)^t ] |psi1> >
    averaged over n_env environment initial states drawn from env_sampler
    (random pure states by default).  rho_0 = |psi1><psi1| x |chi><chi|.
    """
    if Hf.dims != Hb.dims:
        raise qstate.BasisMismatchError(
            f"forward/backward factorizations differ: {Hf.dims} vs {Hb.dims}")
    N1, N2 = Hf.dims
    if psi1.dim != N1:
        raise qstate.BasisMismatchError(f"system state dim {psi1.dim} != N1 = {N1}")
    if env_sampler is None:
        env_sampler = RandomStateSampler(N2)
    chis = sample_batch(env_sampler, n_env, seed)
    vals = np.zeros((n_max + 1, n_env))
    vals[0] = 1.0
    p1 = np.asarray(psi1.amplitudes)
    for e in range(n_env):
        fwd = np.outer(p1, chis[:, e])
        for n in range(1, n_max + 1):
            fwd = Hf.apply_joint(fwd, 1)
            back = Hb.apply_joint(fwd, n)
            v = p1.conj() @ back
            vals[n, e] = min(np.real(v.conj() @ v), 1.0)
    meta = {
        "kind": "boltzmann", "n_env": n_env, "seed": seed,
        "K1": Hf.K1, "K2": Hf.K2, "eps": Hf.eps,
        "dK1": Hb.dK1, "dK2": Hb.dK2, "N1": N1, "N2": N2,
    }
    if hasattr(env_sampler, "describe"):
        meta["env"] = env_sampler.describe()
    return EchoSeries(np.arange(n_max + 1), vals.mean(axis=1), None, meta)


# ---------------------------------------------------------------------------
# mixed-state echo

def mixed_state_echo(rho0: qstate.DensityMatrix, F0, F, n_max: int,
                     norm: float | None = None) -> EchoSeries:
    """Normalized mixed-state echo norm * Tr[rho_0(t|F0) rho_0(t|F)].

    The default normalization is 1/Tr[rho_0^2], which equals the factor 4 of
    a four-packet compass mixture whenever the packets are non-overlapping
    and guarantees M(0) = 1 otherwise; pass norm=4.0 to force the verbatim
    compass factor.
    """
    _compatible(F0, F)
    a = np.array(rho0.entries, dtype=complex)
    if norm is None:
        norm = 1.0 / qstate.purity(rho0)
    b = a.copy()

    def tr_ab(u, v):
        return float(np.real(np.sum(u * v.T)))

    out = np.empty(n_max + 1)
    out[0] = min(norm * tr_ab(a, b), 1.0)
    for n in range(1, n_max + 1):
        a = np.asarray(F0.apply(np.asarray(F0.apply(a, 1)).conj().T, 1)).conj().T
        b = np.asarray(F.apply(np.asarray(F.apply(b, 1)).conj().T, 1)).conj().T
        out[n] = min(norm * tr_ab(a, b), 1.0)
    meta = {"kind": "mixed_echo", "norm": norm, "n_max": n_max}
    return EchoSeries(np.arange(n_max + 1), np.clip(out, 0, 1), None, meta)


# ---------------------------------------------------------------------------
# scalar utilities

def threshold_time(series: EchoSeries, Mc: float) -> int:
    """First kick with value <= Mc; n_max + 1 if the threshold is never crossed."""
    if not (0.0 < Mc < 1.0):
        raise ValueError("threshold must lie in (0, 1)")
    dim = series.meta.get("dim")
    if dim is not None and Mc <= 1.0 / dim:
        raise ValueError(f"threshold {Mc} at or below the ergodic floor 1/{dim}")
    below = series.values <= Mc
    if below.any():
        return int(series.times[np.argmax(below)])
    return int(series.times[-1]) + 1


def response_spectrum(series: EchoSeries, omega: np.ndarray | None = None):
    """Response spectrum: Fourier transform of the fidelity amplitude.

    S(w) = (1/(2 pi n_max)) sum_t f(t) e^{-i w t} over the run window,
    symmetrized with f(-t) = f*(t) so the spectrum is real.  A golden-rule
    amplitude f ~ e^{-Gamma t/2} yields a Lorentzian of half-width Gamma/2.
    """
    if series.amplitude is None:
        raise ValueError("series has no amplitude data")
    f = np.asarray(series.amplitude)
    n_max = len(f) - 1
    if omega is None:
        omega = np.linspace(-np.pi, np.pi, 1024, endpoint=False)
    t = np.arange(1, n_max + 1)
    ph = np.exp(-1j * np.outer(omega, t))
    s = (f[0].real + 2 * np.real(ph @ f[1:])) / (2 * np.pi * max(n_max, 1))
    return np.asarray(omega), s
