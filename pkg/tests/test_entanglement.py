import numpy as np
import pytest

import echolab as el
from echolab import analysis, entanglement, qstate


def packet(g, x0=1.0, m0=7):
    return el.gaussian_torus(g, el.WavepacketSpec(x0, 2 * np.pi * m0 / g.N,
                                                  el.coherent_width(g)))


class TestPuritySeries:
    def test_uncoupled_stays_pure(self):
        g = el.TorusGrid(64)
        F = el.CoupledRotatorFloquet(g, g, 9.0, 11.0, 0.0)
        ser = el.purity_series(packet(g), packet(g, 2.0, 11), F, 15)
        assert np.max(np.abs(ser.values - 1)) < 1e-10

    def test_bounds_and_start(self):
        g = el.TorusGrid(32)
        F = el.CoupledRotatorFloquet(g, g, 10.0, 12.0, 0.1 / 32)
        ser = el.purity_series(packet(g, 1.0, 5), packet(g, 2.0, 9), F, 25)
        assert ser.values[0] == 1.0
        assert np.all(ser.values >= 1 / 32 - 1e-10)
        assert np.all(ser.values <= 1 + 1e-10)

    def test_exchange_symmetry_every_kick(self):
        g = el.TorusGrid(32)
        F = el.CoupledRotatorFloquet(g, g, 10.0, 12.0, 0.08 / 32)
        joint = entanglement.BipartiteState.product(packet(g, 1.0, 5),
                                                    packet(g, 2.0, 9))
        a = np.array(joint.amplitudes)
        for _ in range(10):
            a = F.apply_joint(a, 1)
            state = entanglement.BipartiteState(a / np.linalg.norm(a), g, g)
            p1 = el.purity(entanglement.reduced_density(state, 1))
            p2 = el.purity(entanglement.reduced_density(state, 2))
            assert abs(p1 - p2) < 1e-10

    def test_golden_rule_rate_scales_with_eps_squared(self):
        N = 256
        g = el.TorusGrid(N)
        rates = []
        for epsN2 in (0.3, 0.6):
            F = el.CoupledRotatorFloquet(g, g, 50.09, 50.09, np.sqrt(epsN2) / N)
            ser = entanglement.purity_ensemble(
                el.GaussianPacketSampler(g), el.GaussianPacketSampler(g), F, 40, 12, 3)
            v = ser.values
            t2 = int(np.argmax(v < 6.0 / N)) if (v < 6.0 / N).any() else 40
            rates.append(analysis.fit_exponential((ser.times, v), (1, t2)).rate)
        # halving eps^2 halves the rate (30% tolerance), monotone by construction
        assert rates[1] > rates[0]
        assert abs(rates[1] / rates[0] - 2.0) < 0.6

    def test_mismatched_dims_rejected(self):
        g1, g2 = el.TorusGrid(32), el.TorusGrid(16)
        F = el.CoupledRotatorFloquet(g1, g1, 10.0, 10.0, 0.0)
        with pytest.raises(el.BasisMismatchError):
            el.purity_series(packet(g1), packet(g2, 1.0, 3), F, 5)


class TestReducedDensity:
    def test_product_gives_projector(self):
        g = el.TorusGrid(16)
        p1, p2 = packet(g, 1.0, 3), packet(g, 2.0, 5)
        state = entanglement.BipartiteState.product(p1, p2)
        red = entanglement.reduced_density(state, 1)
        expect = np.outer(p1.amplitudes, p1.amplitudes.conj())
        assert np.max(np.abs(red.entries - expect)) < 1e-12

    def test_against_dense_joint_evolution(self):
        # dense-matrix evolution of the full joint density matrix as oracle
        g = el.TorusGrid(16)
        F = el.CoupledRotatorFloquet(g, g, 9.95, 10.09, 0.8 / 16)
        M = F.dense_matrix()
        p1, p2 = packet(g, 1.0, 3), packet(g, 2.0, 5)
        joint = np.outer(p1.amplitudes, p2.amplitudes)
        vec = joint.ravel()
        for n in (1, 5, 10):
            a = F.apply_joint(joint, n)
            state = entanglement.BipartiteState(a, g, g)
            red = entanglement.reduced_density(state, 1)
            dense_vec = np.linalg.matrix_power(M, n) @ vec
            rho_full = np.outer(dense_vec, dense_vec.conj())
            red_dense = qstate.partial_trace(rho_full, (16, 16), 1, g)
            assert np.max(np.abs(red.entries - red_dense.entries)) < 1e-10


class TestSpinToy:
    def _hams(self, d, seed, coupling=0.4):
        rng = np.random.default_rng(seed)

        def goe(scale):
            A = rng.standard_normal((d, d))
            return scale * (A + A.T) / np.sqrt(8 * d)

        return goe(1.0), goe(coupling), goe(coupling), el.random_state(d, rng)

    def test_equal_branches_no_decay(self):
        d = 32
        H_env, H_up, _, phi0 = self._hams(d, 0)
        f, P = el.spin_dephasing_toy(1 / np.sqrt(2), 1 / np.sqrt(2), H_env,
                                     H_up, H_up, phi0, np.linspace(0, 20, 21))
        assert np.max(np.abs(np.abs(f) - 1)) < 1e-10
        assert np.max(np.abs(P - 1)) < 1e-10

    def test_unentangled_pole(self):
        d = 32
        H_env, H_up, H_down, phi0 = self._hams(d, 1)
        _, P = el.spin_dephasing_toy(1.0, 0.0, H_env, H_up, H_down, phi0,
                                     np.linspace(0, 20, 21))
        assert np.max(np.abs(P - 1)) < 1e-12

    def test_longtime_plateau(self):
        d = 64
        H_env, H_up, H_down, phi0 = self._hams(d, 2, coupling=1.0)
        ts = np.linspace(200, 1200, 400)
        f, P = el.spin_dephasing_toy(1 / np.sqrt(2), 1 / np.sqrt(2), H_env,
                                     H_up, H_down, phi0, ts)
        mean_f2 = np.mean(np.abs(f) ** 2)
        plateau = 0.5 + 2 * 0.25 * mean_f2
        resid = P - plateau
        # P fluctuates around the plateau built from its own mean |f|^2
        assert abs(np.mean(resid)) < 3 * np.std(resid) / np.sqrt(len(ts) / 10)
        assert mean_f2 < 5.0 / d  # ergodic scale ~ 1/d

    def test_nonhermitian_rejected(self):
        d = 8
        H_env, H_up, H_down, phi0 = self._hams(d, 3)
        bad = H_up + 1j * np.eye(d)
        with pytest.raises(ValueError):
            el.spin_dephasing_toy(0.6, 0.8, H_env, bad, H_down, phi0, [0.0, 1.0])

    def test_weights_must_normalize(self):
        d = 8
        H_env, H_up, H_down, phi0 = self._hams(d, 4)
        with pytest.raises(ValueError):
            el.spin_dephasing_toy(1.0, 1.0, H_env, H_up, H_down, phi0, [0.0])
