"""Acceptance suite: every criterion at its stated tolerance, one printed
pass/fail line each.  Run with `pytest tests/test_acceptance.py -s` to see
the lines as they complete (they are also shown for failures by default).

Scaled parameters and tolerance interpretations that differ from the raw
criterion text are recorded in the decisions ledger; each test states its
effective parameters in the printed line.
"""

import numpy as np
import pytest

import echolab as el
from echolab import analysis, echoes, entanglement, phasespace, qstate

pytestmark = pytest.mark.acceptance


def report(num, name, ok, detail):
    print(f"ACCEPTANCE {num:>2} {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"criterion {num} {name}: {detail}"


def packet(g, x0=1.0, m0=7):
    return el.gaussian_torus(g, el.WavepacketSpec(x0, 2 * np.pi * m0 / g.N,
                                                  el.coherent_width(g)))


def value_window(v, hi, lo):
    t1 = int(np.argmax(v < hi))
    t2 = int(np.argmax(v < lo)) if (v < lo).any() else len(v) - 1
    return t1, max(t2, t1 + 4)


def test_01_oracle_equivalence():
    errs = []
    g = el.TorusGrid(128)
    F = el.KickedRotatorFloquet(g, 9.95)
    psi = packet(g).amplitudes
    dense = np.linalg.matrix_power(F.dense_matrix(), 20) @ psi
    errs.append(np.max(np.abs(np.asarray(F.apply(psi.copy(), 20)) - dense)))

    Ft = el.KickedTopFloquet(50, 13.1, phi=1e-3)
    sc = el.spin_coherent(50, 1.0, 0.5).amplitudes
    dense = np.linalg.matrix_power(Ft.dense_matrix(), 20) @ sc
    errs.append(np.max(np.abs(np.asarray(Ft.apply(sc.copy(), 20)) - dense)))

    g16 = el.TorusGrid(16)
    C = el.CoupledRotatorFloquet(g16, g16, 9.95, 10.09, 0.7 / 16)
    joint = np.outer(packet(g16).amplitudes, packet(g16, 2.0, 3).amplitudes)
    dense = (np.linalg.matrix_power(C.dense_matrix(), 20) @ joint.ravel()).reshape(16, 16)
    errs.append(np.max(np.abs(C.apply_joint(joint, 20) - dense)))

    worst = max(errs)
    report(1, "oracle equivalence", worst < 1e-10,
           f"max entrywise error {worst:.2e} (rotator/top/coupled)")


def test_02_classical_lyapunov():
    rows = []
    ok = True
    for K in (10.0, 20.0, 50.0):
        est = el.benettin_lyapunov("standard", K, 10000, 1000, seed=7)
        target = np.log(K / 2)
        rel = abs(est.lyapunov - target) / target
        ok &= rel < 0.05
        rows.append(f"K={K}: {est.lyapunov:.4f} vs ln(K/2)={target:.4f} ({100*rel:.1f}%)")
    report(2, "Benettin vs ln(K/2)", ok, "; ".join(rows))


def test_03_perturbative_gaussian():
    S, K, dK = 500, 13.1, 2e-5
    F0 = el.KickedTopFloquet(S, K)
    F1 = el.KickedTopFloquet(S, K, dK=dK)
    psis = echoes.sample_batch(el.SpinCoherentSampler(S), 100, 42)
    ts = np.unique(np.round(np.geomspace(1, 40000, 72)).astype(int))
    mean = analysis.spectral_echo_mean(psis, F0, F1, ts)
    # pre-saturation window: the Gaussian stage M in [0.05, 0.95]; below that
    # the shift distribution's non-Gaussian tails take over before the
    # 1/(2S) saturation is reached
    msk = (mean > 0.05) & (mean < 0.95)
    r2 = analysis.rsquared_linear((dK * ts[msk]) ** 2, np.log(mean[msk]))
    report(3, "perturbative Gaussian regime", r2 > 0.98,
           f"R^2 = {r2:.4f} over {int(msk.sum())} pre-saturation points, "
           f"torsion detuning dK={dK}")


def test_04_golden_rule():
    N = 4096
    g = el.TorusGrid(N)
    F0 = el.KickedRotatorFloquet(g, 9.95)
    ok = True
    rows = []
    for dKN, nmax in ((1.5, 170), (2.6, 80), (4.5, 40)):
        F1 = el.KickedRotatorFloquet(g, 9.95 + dKN / N)
        stats = el.ensemble_stats(el.GaussianPacketSampler(g), F0, F1, nmax, 200, 7)
        w = value_window(stats.mean, 0.6, 5.0 / N)
        rate = analysis.fit_exponential((stats.times, stats.mean), w, floor=1.0 / N).rate
        pred = el.predicted_gamma("rotator", dK=dKN / N, N=N)
        ok &= abs(rate - pred) < 0.25 * pred
        rows.append(f"dKN={dKN}: rate {rate:.3f} vs {pred:.3f}")
    # independent LDoS check (dense eigendecomposition guard at dim 1024)
    N2 = 1024
    g2 = el.TorusGrid(N2)
    F0b = el.KickedRotatorFloquet(g2, 9.95)
    for dKN in (2.5, 4.3, 7.5):
        F1b = el.KickedRotatorFloquet(g2, 9.95 + dKN / N2)
        gamma = el.lorentzian_fit(el.ldos(F0b, F1b))
        pred = el.predicted_gamma("rotator", dK=dKN / N2, N=N2)
        ok &= abs(gamma - pred) < 0.25 * pred
        rows.append(f"LDoS dKN={dKN}: {gamma:.3f} vs {pred:.3f}")
    report(4, "golden-rule rate = 0.024(dK N)^2", ok, "; ".join(rows))


def test_05_lyapunov_regime():
    N = 65536
    g = el.TorusGrid(N)
    psis = echoes.sample_batch(el.GaussianPacketSampler(g), 150, 11)
    rates = {}
    for K, dKN in ((10.0, 13.0), (10.0, 16.0), (50.0, 13.0)):
        F0 = el.KickedRotatorFloquet(g, K)
        F1 = el.KickedRotatorFloquet(g, K + dKN / N)
        amp = echoes._amplitude_curves(psis, F0, F1, 18)
        mean = np.clip(np.abs(amp) ** 2, 0, 1).mean(axis=1)
        t = np.arange(19)
        msk = (mean < 0.5) & (mean > 100.0 / N)
        rates[(K, dKN)] = -np.polyfit(t[msk], np.log(mean[msk]), 1)[0]
    spread = abs(rates[(10.0, 16.0)] - rates[(10.0, 13.0)]) / rates[(10.0, 13.0)]
    ordered = rates[(50.0, 13.0)] > max(rates[(10.0, 13.0)], rates[(10.0, 16.0)])
    ok = spread < 0.15 and ordered
    report(5, "Lyapunov regime saturation",
           ok,
           f"K=10 rates {rates[(10.0, 13.0)]:.3f}/{rates[(10.0, 16.0)]:.3f} "
           f"(spread {100*spread:.1f}%), K=50 rate {rates[(50.0, 13.0)]:.3f} orders "
           f"with ln(K/2)")


def test_06_saturation():
    N = 4096
    g = el.TorusGrid(N)
    F0 = el.KickedRotatorFloquet(g, 9.95)
    F1 = el.KickedRotatorFloquet(g, 9.95 + 4.6 / N)
    stats = el.ensemble_stats(el.GaussianPacketSampler(g), F0, F1, 60, 1000, 7)
    mean_sat = stats.mean[40:].mean()
    var_sat = stats.variance[40:].mean()
    ok = (0.5 / N < mean_sat < 2.0 / N) and (1 / (3 * N**2) < var_sat < 3.0 / N**2)
    report(6, "long-time saturation", ok,
           f"mean*N = {mean_sat*N:.2f} (factor-2 band), var*N^2 = {var_sat*N*N:.2f} "
           f"(factor-3 band)")


def test_07_prepared_echo():
    # (a) threshold times in the Lyapunov-dominated regime at K = 3.9
    S, K, phi = 500, 3.9, 1e-2
    F0 = el.KickedTopFloquet(S, K)
    F1 = el.KickedTopFloquet(S, K, phi=phi)
    sampler = el.SpinCoherentSampler(S, K=K, lam_min=0.35)
    psis = echoes.sample_batch(sampler, 100, 7)
    Mc = 1e-2

    def interp_tc(mean):
        i = int(np.argmax(mean <= Mc))
        a, b = np.log(mean[i - 1]), np.log(mean[i])
        return (i - 1) + (np.log(Mc) - a) / (b - a)

    tcs = {}
    for T in (0, 2, 4, 6):
        pT = np.asarray(F0.apply(psis, T)) if T else psis
        amp = echoes._amplitude_curves(pT, F0, F1, 30)
        mean = np.clip(np.abs(amp) ** 2, 0, 1).mean(axis=1)
        assert (mean <= Mc).any(), "echo never crossed the threshold"
        tcs[T] = interp_tc(mean)
    lam_hat = -np.log(Mc) / tcs[0]
    ok_a = all(abs(tcs[T] - (tcs[0] - T)) <= 1.0 for T in tcs)
    ok_a &= 0.2 < lam_hat < 0.8  # Lyapunov-scale effective exponent

    # (b) golden-rule regime: T-independent rates at K = 13.1
    F0g = el.KickedTopFloquet(S, 13.1)
    F1g = el.KickedTopFloquet(S, 13.1, phi=1e-3)
    psis_g = echoes.sample_batch(el.SpinCoherentSampler(S), 80, 5)
    rates = []
    for T in (0, 5, 10, 20):
        pT = np.asarray(F0g.apply(psis_g, T)) if T else psis_g
        amp = echoes._amplitude_curves(pT, F0g, F1g, 70)
        mean = np.clip(np.abs(amp) ** 2, 0, 1).mean(axis=1)
        rates.append(analysis.fit_exponential(
            (np.arange(71), mean), (2, 70), floor=1.0 / (2 * S)).rate)
    spread = (max(rates) - min(rates)) / min(rates)
    ok_b = spread < 0.10
    report(7, "prepared-state echo", ok_a and ok_b,
           f"t_c(T)={ {k: round(v, 2) for k, v in tcs.items()} } vs ttc line "
           f"(lam_hat={lam_hat:.2f}); golden-rule rate spread {100*spread:.1f}%")


def test_08_displacement_echo():
    # (a) freeze plateau across the oscillation structure
    N = 16384
    g = el.TorusGrid(N)
    F = el.KickedRotatorFloquet(g, 10.09)
    nu = el.coherent_width(g)
    psis = echoes.sample_batch(el.GaussianPacketSampler(g), 40, 2)
    ok = True
    rows = []
    for mu in (0.5, 1.0, 1.5, 2.5, 3.5, 4.5):
        D = np.exp(1j * mu * g.x)
        a = psis.copy()
        b = D[:, None] * psis
        M = np.empty((31, psis.shape[1]))
        M[0] = 1.0
        for n in range(1, 31):
            a = np.asarray(F.apply(a, 1))
            b = np.asarray(F.apply(b, 1))
            M[n] = np.abs(np.sum((D[:, None] * a).conj() * b, axis=0)) ** 2
        plateau = M[12:].mean()
        pred = el.displacement_plateau_prediction(N, mu, nu)
        ok &= abs(plateau - pred) < 0.25 * pred
        rows.append(f"mu={mu}: {plateau:.2e} vs {pred:.2e}")

    # (b) rate P-independent, grows with K
    N2 = 65536
    g2 = el.TorusGrid(N2)
    psis2 = echoes.sample_batch(el.GaussianPacketSampler(g2), 300, 11)
    def disp_rate(K, m, cols):
        F0 = el.KickedRotatorFloquet(g2, K)
        D = np.exp(1j * m * g2.x)
        a = cols.copy()
        b = D[:, None] * cols
        M = [np.ones(cols.shape[1])]
        for n in range(16):
            a = np.asarray(F0.apply(a, 1))
            b = np.asarray(F0.apply(b, 1))
            M.append(np.abs(np.sum((D[:, None] * a).conj() * b, axis=0)) ** 2)
        mean = np.array(M).mean(axis=1)
        t = np.arange(17)
        msk = (mean < 0.5) & (mean > 100.0 / N2)
        return -np.polyfit(t[msk], np.log(mean[msk]), 1)[0]

    r10 = [disp_rate(10.0, m, psis2) for m in (10, 20, 30)]
    spread = (max(r10) - min(r10)) / min(r10)
    r50 = disp_rate(50.0, 20, psis2[:, :100])
    ok_b = spread < 0.10 and r50 > max(r10)
    report(8, "displacement echo", ok and ok_b,
           "; ".join(rows) + f"; K=10 rates {np.round(r10,3)} (spread "
           f"{100*spread:.1f}%), K=50 rate {r50:.2f}")


def test_09_purity():
    # (a) asymmetric saturation
    ok = True
    rows = []
    for N2 in (128, 512):
        g1, g2 = el.TorusGrid(64), el.TorusGrid(N2)
        F = el.CoupledRotatorFloquet(g1, g2, 10.09, 50.09, 4.0 / np.sqrt(64 * N2))
        ser = entanglement.purity_ensemble(el.GaussianPacketSampler(g1),
                                           el.GaussianPacketSampler(g2), F, 40, 12, 3)
        sat = ser.values[25:].mean()
        pred = 1 / 64 + 1 / N2
        ok &= 0.5 * pred < sat < 2.0 * pred
        rows.append(f"N2={N2}: P_inf {sat:.4f} vs {pred:.4f}")

    # (b) golden-rule rate 2*Gamma_2 = 0.86 (eps N)^2
    N = 512
    g = el.TorusGrid(N)
    for epsN2 in (0.3, 0.6, 0.9):
        F = el.CoupledRotatorFloquet(g, g, 50.09, 50.09, np.sqrt(epsN2) / N)
        ser = entanglement.purity_ensemble(el.GaussianPacketSampler(g),
                                           el.GaussianPacketSampler(g), F, 45, 10, 5)
        w = value_window(ser.values, 0.6, 6.0 / N)
        rate = analysis.fit_exponential((ser.times, ser.values), w).rate
        pred = 0.86 * epsN2
        ok &= abs(rate - pred) < 0.25 * pred
        rows.append(f"(epsN)^2={epsN2}: rate {rate:.3f} vs {pred:.3f}")

    # (c) Lyapunov-dominated: rate proportional to lambda1, K2-independent
    rate_over_lam = []
    for K1 in (8.09, 12.09):
        lam = el.benettin_lyapunov("standard", K1, 400, 2000, 9).lyapunov
        F = el.CoupledRotatorFloquet(g, g, K1, 50.09, 4.0 / N)
        ser = entanglement.purity_ensemble(el.GaussianPacketSampler(g),
                                           el.GaussianPacketSampler(g), F, 25, 24, 3)
        t1 = int(np.argmax(ser.values < 0.7))
        t2 = int(np.argmax(ser.values < 10.0 / N))
        rate = analysis.fit_exponential((ser.times, ser.values), (t1, t2)).rate
        rate_over_lam.append(rate / lam)
        rows.append(f"K1={K1}: rate/lam = {rate/lam:.3f}")
    ok &= abs(rate_over_lam[1] - rate_over_lam[0]) < 0.20 * rate_over_lam[0]
    k2rates = []
    for K2 in (5.09, 10.09, 20.09, 50.09):
        F = el.CoupledRotatorFloquet(g, g, 5.09, K2, 4.0 / N)
        ser = entanglement.purity_ensemble(el.GaussianPacketSampler(g),
                                           el.GaussianPacketSampler(g), F, 10, 16, 3)
        k2rates.append(analysis.fit_exponential((ser.times, ser.values), (2, 6)).rate)
    spread = (max(k2rates) - min(k2rates)) / min(k2rates)
    ok &= spread < 0.20
    rows.append(f"K2 spread {100*spread:.1f}%")
    report(9, "purity decay", ok, "; ".join(rows))


def test_10_boltzmann_echo():
    N = 512
    g = el.TorusGrid(N)
    psi1 = packet(g, 1.1, 100)

    def mb_rate(dK1N, epsN, K2=10.0, dK2N=0.0, nmax=30):
        Hf = el.CoupledRotatorFloquet(g, g, 10.0, K2, epsN / N)
        Hb = el.boltzmann_backward(Hf, dK1N / N, dK2=dK2N / N)
        ser = el.boltzmann_echo(psi1, None, Hf, Hb, nmax, n_env=8, seed=3)
        w = value_window(ser.values, 0.6, 6.0 / N)
        return analysis.fit_exponential((ser.times, ser.values), w).rate

    ok = True
    rows = []
    for dK1N, epsN, nmax in ((1.94, 0.3, 30), (1.94, 0.62, 25), (4.0, 0.0, 20)):
        rate = mb_rate(dK1N, epsN, nmax=nmax)
        pred = 0.024 * dK1N**2 + 0.86 * epsN**2
        ok &= abs(rate - pred) < 0.25 * pred
        rows.append(f"(dK1N={dK1N}, epsN={epsN}): rate {rate:.3f} vs {pred:.3f}")

    base = mb_rate(4.0, 0.7, nmax=16)
    for K2, dK2N in ((5.0, 0.0), (20.0, 0.0), (10.0, 8.0)):
        other = mb_rate(4.0, 0.7, K2=K2, dK2N=dK2N, nmax=16)
        ok &= abs(other - base) < 0.25 * base
    rows.append(f"K2/dK2 invariance around rate {base:.3f}")

    floor_rate = mb_rate(0.0, 0.62, nmax=25)
    floor_pred = 0.86 * 0.62**2
    ok &= abs(floor_rate - floor_pred) < 0.25 * floor_pred
    rows.append(f"dK1->0 floor {floor_rate:.3f} vs 2*Gamma_U {floor_pred:.3f}")
    report(10, "Boltzmann echo", ok, "; ".join(rows))


def test_11_wigner_identities():
    N = 64
    g = el.TorusGrid(N)
    F0 = el.KickedRotatorFloquet(g, 9.95)
    F1 = el.KickedRotatorFloquet(g, 9.95 + 4.6 / N)
    psi_a = packet(g, np.pi, 0)
    psi_b = packet(g, np.pi, 0)
    ser = el.loschmidt(psi_a, F0, F1, 20)
    worst = 0.0
    for n in range(1, 21):
        psi_a = F0.apply(psi_a, 1)
        psi_b = F1.apply(psi_b, 1)
        Wa = el.wigner(psi_a)
        Wb = el.wigner(psi_b)
        worst = max(worst,
                    abs(Wa.norm() - 1),
                    abs(el.trace_product(Wa, Wa) - 1),
                    abs(el.trace_product(Wa, Wb) - ser.values[n]))
    report(11, "Wigner identities", worst < 1e-10,
           f"max violation over 20 kicks {worst:.2e}")


def test_12_regular_decay_exponents():
    # quantum t^-3/2-like decay (torsion-detuned top; x-rotation freezes by parity)
    S, K, dK = 1000, 1.1, 1.7e-3
    F0 = el.KickedTopFloquet(S, K)
    F1 = el.KickedTopFloquet(S, K + dK)
    psis = echoes.sample_batch(el.SpinCoherentSampler(S), 60, 12)
    ts = np.unique(np.round(np.geomspace(1, 3000, 42)).astype(int))
    mean = analysis.spectral_echo_mean(psis, F0, F1, ts)
    msk = (mean > 0.02) & (mean < 0.5)
    pq = np.polyfit(np.log(ts[msk]), np.log(mean[msk]), 1)[0]
    ok_q = abs(pq + 1.5) < 0.3

    # classical counterpart decays with a smaller (in magnitude) power
    rng_streams = np.random.SeedSequence(4).spawn(8)
    sample_ts = np.unique(np.round(np.geomspace(1, 6000, 30)).astype(int))
    acc = np.zeros(len(sample_ts))
    for s in rng_streams:
        rng = np.random.default_rng(s)
        z0 = rng.uniform(-0.8, 0.8)
        cloud = phasespace.gaussian_cloud_sphere(np.arccos(z0),
                                                 rng.uniform(0, 2 * np.pi),
                                                 np.sqrt(1e-3), 10000, rng)
        cloudB = cloud
        prev = 0
        for j, t in enumerate(sample_ts):
            cloud = el.liouville_propagate(cloud, "top", K, t - prev)
            cloudB = el.liouville_propagate(cloudB, "top", K + dK, t - prev)
            prev = t
            acc[j] += el.classical_fidelity(cloud, cloudB, 2e-4)
    acc /= 8
    mskc = (sample_ts >= 300) & (acc > 0.001) & (acc < 0.5)
    pc = np.polyfit(np.log(sample_ts[mskc]), np.log(acc[mskc]), 1)[0]
    ok_c = abs(pc + 1.0) < 0.3
    report(12, "regular-regime power laws", ok_q and ok_c,
           f"quantum exponent {pq:.2f} (target -1.5 +/- 0.3), classical "
           f"{pc:.2f} (target -1.0 +/- 0.3)")


def test_13_spin_toy_exactness():
    d = 64
    rng = np.random.default_rng(13)

    def goe(scale):
        A = rng.standard_normal((d, d))
        return scale * (A + A.T) / np.sqrt(8 * d)

    H_env, H_up, H_down = goe(1.0), goe(0.5), goe(0.5)
    phi0 = el.random_state(d, rng)
    alpha, beta = np.sqrt(0.3), np.sqrt(0.7)
    ts = np.linspace(0.0, 30.0, 61)
    f, P = el.spin_dephasing_toy(alpha, beta, H_env, H_up, H_down, phi0, ts)

    # independent oracle: full 2d x 2d joint evolution + partial trace
    up = np.array([1.0, 0.0])
    down = np.array([0.0, 1.0])
    H_joint = (np.kron(np.outer(up, up), H_env + H_up)
               + np.kron(np.outer(down, down), H_env + H_down))
    w, v = np.linalg.eigh(H_joint)
    psi0 = np.kron(np.array([alpha, beta]), phi0.amplitudes)
    c0 = v.conj().T @ psi0
    worst = 0.0
    for i, t in enumerate(ts):
        psit = v @ (np.exp(-1j * w * t) * c0)
        rho = np.outer(psit, psit.conj())
        red = qstate.partial_trace(rho, (2, d), keep=1, basis=el.GenericBasis(2))
        worst = max(worst, abs(el.purity(red) - P[i]),
                    abs(red.entries[0, 1] - alpha * np.conj(beta) * f[i]))
    report(13, "spin-toy exactness", worst < 1e-10,
           f"max |P - formula| and coherence residue {worst:.2e} at d={d}")
