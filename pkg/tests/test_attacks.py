import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad
from scipy.special import erf

from y00lab.attacks import (AttackKind, AttackReport, DegenerateMasking, KeyReceiver, KeySpaceTooLarge,
                            binomial_ci95, build_key_table, circular_distance, decide_basis,
                            eve_data_error, eve_key_receiver_error, gamma_masking,
                            heterodyne_key_detection, heterodyne_sample, key_detection_math,
                            key_detection_y00, nearest_grid_index, simulate_exhaustive_kpa)
from y00lab.keystream import KeystreamKind
from y00lab.protocol import ProtocolParams, bob_ber_analytic, phase_index
from y00lab.quantum import srm_symmetric_error
from y00lab.seeding import rng_for

import fock_oracle as fock

LFSR = KeystreamKind.LFSR
ALPHA_GAMMA4 = 16 / (4 * np.pi)     # Gamma = 4 at M = 16


def lfsr_params(M, alpha, osk):
    return ProtocolParams(M=M, alpha_mag=alpha, osk_enabled=osk, basis_kind=LFSR, osk_kind=LFSR)


def heterodyne_phase_pdf(phi, alpha):
    """Phase density of a heterodyne outcome around a real coherent amplitude."""
    a = alpha * np.cos(phi)
    return np.exp(-alpha**2) / (2 * np.pi) * (1 + np.sqrt(np.pi) * a * np.exp(a**2) * (1 + erf(a)))


class TestHeterodyne:
    def test_vacuum_moments(self):
        z = heterodyne_sample(np.zeros(1_000_000), rng_for(1, 0, "het"))
        n = z.size
        assert abs(z.real.mean()) < 3 * np.sqrt(0.5 / n)
        assert abs(z.imag.mean()) < 3 * np.sqrt(0.5 / n)
        assert z.real.var() == pytest.approx(0.5, rel=0.01)
        assert z.imag.var() == pytest.approx(0.5, rel=0.01)

    def test_displaced_mean(self):
        z = heterodyne_sample(np.full(100_000, 3.0 + 0j), rng_for(2, 0, "het"))
        assert z.real.mean() == pytest.approx(3.0, abs=0.01)

    def test_reproducible(self):
        a = heterodyne_sample(np.ones(10), rng_for(3, 0, "het"))
        b = heterodyne_sample(np.ones(10), rng_for(3, 0, "het"))
        assert np.array_equal(a, b)

    def test_scalar_in_scalar_out(self):
        assert isinstance(heterodyne_sample(1.0, rng_for(4)), complex)

    def test_phase_density_normalised(self):
        assert quad(heterodyne_phase_pdf, -np.pi, np.pi, args=(1.3,))[0] == pytest.approx(1.0, abs=1e-9)


class TestGamma:
    def test_large_m_example(self):
        assert gamma_masking(ProtocolParams(M=1024, alpha_mag=100.0)) == 3

    def test_clamps(self):
        assert gamma_masking(ProtocolParams(M=16, alpha_mag=1e6)) == 1
        assert gamma_masking(ProtocolParams(M=16, alpha_mag=1e-6)) == 32

    def test_tuned_alpha(self):
        assert gamma_masking(ProtocolParams(M=16, alpha_mag=ALPHA_GAMMA4)) == 4

    @given(st.sampled_from([2, 4, 16, 256, 1024]), st.floats(1e-3, 1e4))
    def test_range(self, M, alpha):
        assert 1 <= gamma_masking(ProtocolParams(M=M, alpha_mag=alpha)) <= 2 * M


class TestGrid:
    def test_nearest_index_wraps(self):
        M = 8
        z = np.exp(1j * (2 * np.pi - 0.01))
        assert nearest_grid_index(z, M) == 0

    def test_circular_distance(self):
        assert circular_distance(0, 15, 16) == 1
        assert circular_distance(3, 11, 16) == 8


class TestDataAttack:
    @pytest.mark.parametrize("M,alpha", [(2, 0.1), (4, 0.5), (16, 2.0)])
    def test_osk_on_is_half(self, M, alpha):
        assert eve_data_error(ProtocolParams(M=M, alpha_mag=alpha, osk_enabled=True)) == pytest.approx(0.5, abs=1e-12)

    def test_binary_matches_fock(self):
        # M = 2, alpha = 0.1: phases {0, pi/2, pi, 3pi/2}; bit 0 at pi/2 and pi
        p = ProtocolParams(M=2, alpha_mag=0.1)
        a = 0.1 * np.exp(1j * np.pi * np.arange(4) / 2)
        j0 = phase_index(0, np.array([1, 2]), 2)
        j1 = phase_index(1, np.array([1, 2]), 2)
        r0 = fock.density(a[j0], [0.5, 0.5], 20)
        r1 = fock.density(a[j1], [0.5, 0.5], 20)
        assert eve_data_error(p) == pytest.approx(fock.helstrom(r0, r1), abs=1e-8)

    def test_m64_matches_fock(self):
        assert eve_data_error(ProtocolParams(M=64, alpha_mag=1.0)) == pytest.approx(0.4922506218, abs=1e-8)

    def test_large_m_gap_shrinks_like_inverse_m(self):
        gaps = [0.5 - eve_data_error(ProtocolParams(M=M, alpha_mag=1.0)) for M in (32, 64, 128)]
        assert gaps[0] > gaps[1] > gaps[2]
        assert gaps[1] / gaps[2] == pytest.approx(2.0, rel=0.1)

    @pytest.mark.parametrize("alpha", [0.1, 0.5, 1.0, 2.0, 3.0])
    def test_nondecreasing_in_m(self, alpha):
        e = [eve_data_error(ProtocolParams(M=M, alpha_mag=alpha)) for M in (2, 4, 8, 16, 32, 64)]
        assert all(b >= a - 1e-12 for a, b in zip(e, e[1:]))

    @pytest.mark.parametrize("M", [2, 4, 16, 64])
    def test_nonincreasing_in_alpha(self, M):
        e = [eve_data_error(ProtocolParams(M=M, alpha_mag=a)) for a in (0.1, 0.5, 1.0, 2.0, 3.0)]
        assert all(b <= a + 1e-9 for a, b in zip(e, e[1:]))

    @pytest.mark.parametrize("M", [4, 8, 16, 64])
    @pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0, 3.0])
    def test_bob_beats_eve(self, M, alpha):
        assert bob_ber_analytic(alpha, "helstrom") < eve_data_error(ProtocolParams(M=M, alpha_mag=alpha))


class TestKeyReceiver:
    def test_resolvable_binary(self):
        err = eve_key_receiver_error(ProtocolParams(M=2, alpha_mag=20.0), "heterodyne", trials=20_000)
        assert err == 0.0

    def test_srm_no_signal(self):
        M = 8
        assert srm_symmetric_error(2 * M, 0.0) == pytest.approx(1 - 1 / (2 * M), abs=1e-12)

    def test_srm_kpa_uses_m_states(self):
        p = ProtocolParams(M=8, alpha_mag=2.0)
        assert eve_key_receiver_error(p, KeyReceiver.SRM, "kpa") == pytest.approx(srm_symmetric_error(8, 2.0))
        assert eve_key_receiver_error(p, KeyReceiver.SRM, "coa") == pytest.approx(srm_symmetric_error(16, 2.0))

    def test_srm_beats_heterodyne(self):
        p = ProtocolParams(M=8, alpha_mag=1.5)
        het = eve_key_receiver_error(p, "heterodyne", "coa", trials=50_000, seed=3)
        assert eve_key_receiver_error(p, "srm", "coa") < het

    def test_zero_trials(self):
        with pytest.raises(ValueError):
            heterodyne_key_detection(ProtocolParams(M=4, alpha_mag=1.0), trials=0)

    def test_detection_order_of_inverse_gamma(self):
        p = ProtocolParams(M=1024, alpha_mag=100.0)
        pd, _ = heterodyne_key_detection(p, "kpa", 100_000, seed=7)
        g = gamma_masking(p)
        assert 1 / (2 * g) <= pd <= 2 / g

    def test_thread_count_does_not_change_result(self):
        p = ProtocolParams(M=64, alpha_mag=3.0)
        assert heterodyne_key_detection(p, "coa", 20_000, 5, 1) == heterodyne_key_detection(p, "coa", 20_000, 5, 4)

    def test_kpa_decision_respects_parity(self):
        p = ProtocolParams(M=8, alpha_mag=50.0)
        m = np.arange(1, 9)
        for x in (0, 1):
            z = 50.0 * np.exp(1j * phase_index(x, m, 8) * np.pi / 8)
            assert np.array_equal(decide_basis(z, x, p, "kpa"), m)
            assert np.array_equal(decide_basis(z, x, p, "coa"), m)


class TestFormulas:
    def test_math_cipher(self):
        assert key_detection_math(8, 3) == 2**-5
        assert key_detection_math(8, 8) == 1.0
        assert key_detection_math(8, 20) == 1.0
        assert key_detection_math(8, 0) == 2**-8

    def test_math_cipher_negative(self):
        with pytest.raises(ValueError):
            key_detection_math(8, -1)

    def test_y00_examples(self):
        assert key_detection_y00(16, 16, 4, osk=False) == pytest.approx(0.0625)
        assert key_detection_y00(16, 16, 4, osk=True) == pytest.approx(0.00390625)

    def test_y00_ceiling(self):
        M, k = 16, 12
        assert key_detection_y00(k, M, 2 * M, True) == pytest.approx((2 * M) ** (-k / 4))

    def test_degenerate_masking_warns(self):
        with pytest.warns(DegenerateMasking):
            assert key_detection_y00(12, 16, 2, osk=False) == 1.0

    @given(st.integers(4, 256), st.sampled_from([4, 16, 64]), st.integers(2, 64), st.booleans())
    def test_separation_from_math_cipher(self, k, M, gamma, osk):
        if not osk and gamma < 3:
            return
        assert key_detection_y00(k, M, gamma, osk) < key_detection_math(k, k)


class TestReport:
    def test_json_keys(self):
        r = AttackReport(AttackKind.COA_KEY, 0.3, 0.25, 100, binomial_ci95(25, 100), {"M": 4})
        d = json.loads(r.to_json())
        assert {"kind", "analytic", "empirical", "trials", "ci95", "params"} <= set(d)
        assert d["kind"] == "COA-key"
        lo, hi = d["ci95"]
        assert lo <= 0.25 <= hi

    def test_ci_bounds(self):
        assert binomial_ci95(0, 10) == (0.0, 0.0)
        assert binomial_ci95(10, 10) == (1.0, 1.0)


@pytest.fixture(scope="module")
def table():
    return build_key_table(12, 16, 96)


class TestExhaustive:
    def test_refuses_large_key(self):
        with pytest.raises(KeySpaceTooLarge):
            simulate_exhaustive_kpa(lfsr_params(16, 1.0, False), 20, 5, 10)

    def test_needs_lfsr(self):
        with pytest.raises(ValueError):
            simulate_exhaustive_kpa(ProtocolParams(M=16, alpha_mag=1.0), 12, 5, 10)

    def test_table_matches_protocol_keystream(self, table):
        from y00lab.keystream import SecretKey
        from y00lab.protocol import keystreams
        row = 0x5A3 - 1
        m, osk = keystreams(SecretKey.from_int(0x5A3, 12), lfsr_params(16, 1.0, True), 20)
        assert np.array_equal(table.m[row, :20], m)
        assert np.array_equal(table.osk[row, :20], osk)

    def test_no_masking_known_parity(self, table):
        # 3 slots carry 12 keystream bits, which pin a 12-bit register
        r = simulate_exhaustive_kpa(lfsr_params(16, 1000.0, False), 12, [3, 12], 100, seed=1, table=table)
        assert all(d["p_pick"] == 1.0 for d in r.extra["per_n"])
        assert r.analytic == 1.0

    def test_no_masking_osk_needs_more_slots(self, table):
        # the +-Gamma window still admits neighbouring bases, so 3 slots are not enough
        r = simulate_exhaustive_kpa(lfsr_params(16, 1000.0, True), 12, [3, 12], 100, seed=1, table=table)
        short, full = r.extra["per_n"]
        assert short["mean_survivors"] > 1
        assert full["p_pick"] == 1.0

    def test_masked_plateau_osk(self, table):
        r = simulate_exhaustive_kpa(lfsr_params(16, ALPHA_GAMMA4, True), 12, [12, 24, 48, 96], 400,
                                    seed=2, table=table)
        picks = [d["p_pick"] for d in r.extra["per_n"]]
        ses = [d["p_pick_se"] for d in r.extra["per_n"]]
        assert max(picks) < 0.05
        for (a, sa), (b, sb) in zip(zip(picks, ses), zip(picks[1:], ses[1:])):
            assert b <= a + 3 * math.hypot(sa, sb)
        assert r.extra["math_cipher"] == [1.0] * 4

    @pytest.mark.parametrize("osk", [False, True])
    def test_true_key_survival_matches_phase_noise(self, table, osk):
        # per-slot survival from the exact heterodyne phase density, slots independent
        p = lfsr_params(16, ALPHA_GAMMA4, osk)
        g = gamma_masking(p)
        step = np.pi / 16
        w = g if osk else g // 2
        edge = (w + 0.5) * step
        q = quad(heterodyne_phase_pdf, -edge, edge, args=(p.alpha_mag,))[0]
        if osk:
            # folding onto the basis circle also accepts the antipode
            q += 2 * quad(heterodyne_phase_pdf, np.pi - edge, np.pi, args=(p.alpha_mag,))[0]
        trials = 1500
        r = simulate_exhaustive_kpa(p, 12, [1, 2, 3], trials, seed=11, table=table)
        for d in r.extra["per_n"]:
            expect = q ** d["n"]
            sigma = math.sqrt(expect * (1 - expect) / trials)
            assert abs(d["p_true_survives"] - expect) <= 4 * sigma

    @pytest.mark.xfail(strict=True, reason="Gamma/2 window under-covers heterodyne phase noise; "
                                           "true key rarely survives, so P_d falls below the band")
    def test_osk_off_heuristic_band(self, table):
        p = lfsr_params(16, ALPHA_GAMMA4, False)
        target = key_detection_y00(12, 16, 4, osk=False)
        r = simulate_exhaustive_kpa(p, 12, [3], 1000, seed=4, table=table)
        assert target / 3 <= r.empirical <= 3 * target

    def test_threads_identical(self, table):
        p = lfsr_params(16, ALPHA_GAMMA4, True)
        a = simulate_exhaustive_kpa(p, 12, [12, 24], 300, seed=9, threads=1, table=table)
        b = simulate_exhaustive_kpa(p, 12, [12, 24], 300, seed=9, threads=8, table=table)
        assert a.to_json() == b.to_json()
