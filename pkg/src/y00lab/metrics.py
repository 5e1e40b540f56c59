"""Information-theoretic security metrics and comparison baselines."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from .attacks import data_conditional_operators, eve_data_error, gamma_masking, key_detection_y00
from .protocol import ChannelModel, ProtocolParams, bob_ber_analytic, phase_index
from .quantum import SignalEnsemble, holevo_information, operator_entropy, SpanOperator

INFINITE_TOL = 1e-9
METRIC_KEYS = ("chi_H_coa", "chi_H_kpa", "n_q0_lower", "n_q1_lower", "eve_data_error",
               "bob_ber", "gamma", "pd_key", "c_secrecy", "hmin_lower")


class Attack(str, enum.Enum):
    COA = "COA"
    KPA = "KPA"


class LimitStatus(str, enum.Enum):
    WITHIN = "WithinLimit"
    LIFTED = "Lifted"


def _distribution(d) -> np.ndarray:
    p = np.asarray(d, dtype=float).ravel()
    if p.size == 0 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
        raise ValueError("not a probability distribution")
    return p


def shannon_entropy(d) -> float:
    p = _distribution(d)
    p = p[p > 0]
    return float(max(0.0, -np.sum(p * np.log2(p))))


def binary_entropy(p: float) -> float:
    return shannon_entropy([p, 1.0 - p]) if 0.0 < p < 1.0 else 0.0


def minentropy(d) -> float:
    return float(-math.log2(_distribution(d).max()))


def minentropy_lower_bound(h_x: float, chi: float) -> float:
    """Asymptotic min-entropy floor H(X) - chi, clamped at zero."""
    if h_x < 0 or chi < 0:
        raise ValueError("entropies must be nonnegative")
    return max(0.0, h_x - chi)


def pinsker_bound(mutual_info_bits: float) -> float:
    """Statistical-distance ceiling sqrt(I/2), with I converted to nats."""
    if mutual_info_bits < 0:
        raise ValueError("mutual information must be nonnegative")
    return math.sqrt(0.5 * mutual_info_bits * math.log(2.0))


def wyner_secrecy_capacity(snr_b: float, snr_e: float) -> float:
    """Gaussian wiretap secrecy capacity in bits per channel use."""
    if snr_b < 0 or snr_e < 0:
        raise ValueError("SNRs must be nonnegative")
    return max(0.0, 0.5 * math.log2(1.0 + snr_b) - 0.5 * math.log2(1.0 + snr_e))


def shannon_limit_check(h_x_given_y: float, h_k: float) -> LimitStatus:
    if h_x_given_y < 0 or h_k < 0:
        raise ValueError("entropies must be nonnegative")
    return LimitStatus.LIFTED if h_x_given_y > h_k + 1e-12 else LimitStatus.WITHIN


# -- Eve's channel ---------------------------------------------------------

def key_ensemble(params: ProtocolParams, attack: Attack | str) -> SignalEnsemble:
    """States Eve sees as a function of the running key.

    KPA without OSK: the M phases that carry the known bit 0.  COA, or KPA
    once OSK hides the transmitted bit: all 2M phases.
    """
    attack = Attack(attack)
    M = params.M
    if attack == Attack.KPA and not params.osk_enabled:
        j = phase_index(0, np.arange(1, M + 1), M)
    else:
        j = np.arange(2 * M)
    return SignalEnsemble.uniform(params.alpha_mag * np.exp(1j * j * np.pi / M))


def eve_channel_holevo(params: ProtocolParams, attack: Attack | str) -> float:
    """Holevo information (bits per slot) of the running-key channel to Eve."""
    return holevo_information(key_ensemble(params, attack))


def eve_data_holevo(params: ProtocolParams) -> float:
    """Holevo information (bits per slot) about the plaintext bit."""
    rho0, rho1 = data_conditional_operators(params)
    total = SpanOperator(rho0.span, 0.5 * (rho0.coeff + rho1.coeff))
    chi = operator_entropy(total) - 0.5 * (operator_entropy(rho0) + operator_entropy(rho1))
    return max(0.0, chi)


def heterodyne_mutual_information(ens: SignalEnsemble, step: float = 0.05, margin: float = 6.0) -> float:
    """Mutual information (bits) between label and binned heterodyne outcome.

    Outcomes are binned on a square grid of side ``step``; binning can only
    lose information, so this never exceeds the continuous value.
    """
    a = ens.amplitudes
    r = np.max(np.abs(a)) + margin
    edges = np.arange(-r, r + step, step)

    def cell_mass(mu):
        # per-axis Gaussian (variance 1/2) mass in each bin
        return 0.5 * np.diff(erf(edges[None, :] - np.asarray(mu)[:, None]), axis=1)

    px = cell_mass(a.real)          # (L, bins)
    py = cell_mass(a.imag)
    joint = ens.priors[:, None, None] * px[:, :, None] * py[:, None, :]
    marg = joint.sum(axis=0)
    cond = px[:, :, None] * py[:, None, :]
    mask = joint > 1e-300
    ratio = np.where(mask, cond / np.where(marg[None] > 0, marg[None], 1.0), 1.0)
    return float(max(0.0, np.sum(joint[mask] * np.log2(ratio[mask]))))


@dataclass(frozen=True)
class UnicityBound:
    bound_slots: float
    keylen: int
    c1_bits_per_slot: float
    attack: Attack
    infinite: bool = False


def unicity_lower_bound(keylen: int, params: ProtocolParams, attack: Attack | str,
                        chi: float | None = None) -> UnicityBound:
    """Slots Eve must observe before the key can be pinned down, at least.

    Divides the key length by the Holevo information of Eve's per-slot
    channel, which upper-bounds her accessible information.
    """
    if keylen < 1:
        raise ValueError("keylen must be at least 1")
    attack = Attack(attack)
    c1 = eve_channel_holevo(params, attack) if chi is None else chi
    if c1 <= INFINITE_TOL:
        return UnicityBound(math.inf, keylen, c1, attack, True)
    return UnicityBound(keylen / c1, keylen, c1, attack)


# -- randomization sweep -------------------------------------------------------

@dataclass
class SweepRow:
    params: ProtocolParams
    chi: float
    chi_per_key_bit: float
    bob_ber: float
    bound_slots: float
    feasible: bool


@dataclass
class RandomizationResult:
    best: ProtocolParams | None
    rows: list[SweepRow]
    infeasible_reason: str | None = None

    @property
    def feasible(self) -> bool:
        return self.best is not None


def optimize_randomization(keylen: int, grid, attack: Attack | str = Attack.KPA,
                           ber_ceiling: float = 1e-3,
                           channel: ChannelModel | str = ChannelModel.HOMODYNE) -> RandomizationResult:
    """Grid point with the smallest Eve Holevo information at acceptable Bob BER."""
    grid = list(grid)
    if not grid:
        raise ValueError("empty parameter grid")
    rows = []
    for p in grid:
        chi = eve_channel_holevo(p, attack)
        ber = bob_ber_analytic(p.alpha_mag, channel)
        ub = unicity_lower_bound(keylen, p, attack, chi=chi)
        rows.append(SweepRow(p, chi, chi / p.bits_per_slot, ber, ub.bound_slots, ber <= ber_ceiling))
    feasible = [r for r in rows if r.feasible]
    if not feasible:
        worst = min(r.bob_ber for r in rows)
        return RandomizationResult(None, rows,
                                   f"bob_ber <= {ber_ceiling} violated at every grid point (best {worst:.3g})")
    best = min(feasible, key=lambda r: r.chi)
    return RandomizationResult(best.params, rows)


# -- report ---------------------------------------------------------------------

@dataclass
class MetricsReport:
    params: dict
    metrics: dict
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        metrics = {}
        for k in METRIC_KEYS:
            v = self.metrics[k]
            metrics[k] = None if isinstance(v, float) and math.isinf(v) else v
        return {"params": self.params, "metrics": metrics, "notes": list(self.notes)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def summary_lines(self) -> list[str]:
        out = []
        for k in METRIC_KEYS:
            v = self.metrics[k]
            out.append(f"{k:>15s} = {v:.6g}" if isinstance(v, float) else f"{k:>15s} = {v}")
        return out


def metrics_report(params: ProtocolParams, keylen: int,
                   channel: ChannelModel | str = ChannelModel.HOMODYNE,
                   plaintext_entropy: float = 1.0,
                   snr: tuple[float, float] | None = None) -> MetricsReport:
    """All headline metrics for one configuration."""
    channel = ChannelModel(channel)
    chi_coa = eve_channel_holevo(params, Attack.COA)
    chi_kpa = eve_channel_holevo(params, Attack.KPA)
    n0 = unicity_lower_bound(keylen, params, Attack.COA, chi=chi_coa)
    n1 = unicity_lower_bound(keylen, params, Attack.KPA, chi=chi_kpa)
    gamma = gamma_masking(params)
    bob_ber = bob_ber_analytic(params.alpha_mag, channel)
    chi_data = eve_data_holevo(params)
    notes = [
        "chi_H_* are Holevo informations of Eve's per-slot running-key channel (uniform priors)",
        "n_q*_lower divide keylen by chi_H (COA: 2M states, KPA: M states, 2M once OSK is on)",
        f"c_secrecy = (1 - h2(bob_ber)) - chi_H(data) with chi_H(data) = {chi_data:.6g} bits/slot",
        f"hmin_lower = H(X) - chi_H(data) with H(X) = {plaintext_entropy:g} bits/slot",
        f"bob_ber is the analytic {channel.value} error probability",
    ]
    if n0.infinite:
        notes.append("n_q0_lower is infinite (chi_H_coa below tolerance)")
    if n1.infinite:
        notes.append("n_q1_lower is infinite (chi_H_kpa below tolerance)")
    if gamma <= (1 if params.osk_enabled else 2):
        notes.append("pd_key: masking number gives no ambiguity, reported as 1")
        pd_key = 1.0
    else:
        pd_key = key_detection_y00(keylen, params.M, gamma, params.osk_enabled)
    if snr is not None:
        notes.append(f"Gaussian wiretap baseline: C_s({snr[0]:g}, {snr[1]:g}) = "
                     f"{wyner_secrecy_capacity(*snr):.6g} bits/use")
    metrics = {
        "chi_H_coa": chi_coa,
        "chi_H_kpa": chi_kpa,
        "n_q0_lower": n0.bound_slots,
        "n_q1_lower": n1.bound_slots,
        "eve_data_error": eve_data_error(params),
        "bob_ber": bob_ber,
        "gamma": gamma,
        "pd_key": pd_key,
        "c_secrecy": max(0.0, 1.0 - binary_entropy(bob_ber) - chi_data),
        "hmin_lower": minentropy_lower_bound(plaintext_entropy, chi_data),
    }
    return MetricsReport(params.snapshot() | {"keylen": keylen, "channel": channel.value}, metrics, notes)
