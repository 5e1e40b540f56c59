"""Eavesdropper receivers and attack evaluations."""

from __future__ import annotations

import enum
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import seeding
from .keystream import KeystreamKind, LFSR_OSK_OFFSET, LFSR_TAPS, bits_to_running_keys, lfsr_bits_batch
from .protocol import ProtocolParams, constellation, phase_index
from .quantum import Span, SpanOperator, helstrom_binary, srm_symmetric_error

MAX_EXHAUSTIVE_BITS = 16
MC_BLOCK = 4096


class AttackKind(str, enum.Enum):
    COA_DATA = "COA-data"
    KPA_KEY = "KPA-key"
    COA_KEY = "COA-key"
    EXHAUSTIVE = "exhaustive"


class KeyReceiver(str, enum.Enum):
    HETERODYNE = "heterodyne"
    SRM = "srm"


class KeySpaceTooLarge(ValueError):
    pass


class DegenerateMasking(UserWarning):
    pass


@dataclass
class AttackReport:
    kind: AttackKind
    analytic: float
    empirical: float
    trials: int
    ci95: tuple[float, float]
    params: dict
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {
            "kind": AttackKind(self.kind).value,
            "analytic": self.analytic,
            "empirical": self.empirical,
            "trials": self.trials,
            "ci95": list(self.ci95),
            "params": self.params,
        }
        if self.extra:
            d["extra"] = self.extra
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def csv_row(self) -> dict:
        return {"kind": AttackKind(self.kind).value, "analytic": self.analytic,
                "empirical": self.empirical, "trials": self.trials,
                "ci95_lo": self.ci95[0], "ci95_hi": self.ci95[1]}


def binomial_ci95(successes: float, trials: int) -> tuple[float, float]:
    p = successes / trials
    half = 1.96 * math.sqrt(max(p * (1 - p), 0.0) / trials)
    return max(0.0, p - half), min(1.0, p + half)


# -- receivers ---------------------------------------------------------------

def heterodyne_sample(state, rng: np.random.Generator):
    """Outcome(s) distributed as the Husimi Q function of the coherent state(s)."""
    state = np.asarray(state, dtype=complex)
    noise = rng.normal(0.0, math.sqrt(0.5), size=state.shape + (2,))
    z = state + noise[..., 0] + 1j * noise[..., 1]
    return complex(z) if z.ndim == 0 else z


def gamma_masking(params: ProtocolParams) -> int:
    """Number of constellation points inside a +-1 sigma phase arc."""
    sigma_theta = 1.0 / (2.0 * params.alpha_mag)
    g = math.floor(2.0 * sigma_theta / params.spacing + 0.5)
    return int(min(max(g, 1), 2 * params.M))


def nearest_grid_index(z, M: int) -> np.ndarray:
    """Index of the nearest of the 2M phases j pi / M."""
    ang = np.angle(z)
    return np.mod(np.rint(ang / (np.pi / M)).astype(np.int64), 2 * M)


def circular_distance(a, b, n: int):
    d = np.mod(np.asarray(a) - np.asarray(b), n)
    return np.minimum(d, n - d)


# -- data attack ---------------------------------------------------------------

def data_conditional_operators(params: ProtocolParams) -> tuple[SpanOperator, SpanOperator]:
    """Eve's states conditioned on plaintext 0 and 1, over the 2M-state span.

    Without OSK these are the doubly symmetric mixtures of the phases that
    carry 0 (resp. 1) across all bases.  With balanced OSK bits both become
    the uniform mixture of all 2M phases.
    """
    M = params.M
    span = Span(constellation(params))
    m = np.arange(1, M + 1)
    c = []
    for x in (0, 1):
        w = np.zeros(2 * M)
        if params.osk_enabled:
            for xy in (0, 1):
                np.add.at(w, phase_index(xy, m, M), 0.5 / M)
        else:
            np.add.at(w, phase_index(x, m, M), 1.0 / M)
        c.append(np.diag(w).astype(complex))
    return SpanOperator(span, c[0]), SpanOperator(span, c[1])


def eve_data_error(params: ProtocolParams, xi0: float = 0.5) -> float:
    """Minimum error of Eve's optimal binary measurement on the data bit."""
    rho0, rho1 = data_conditional_operators(params)
    return helstrom_binary(rho0, rho1, xi0)


# -- key attacks ---------------------------------------------------------------

def kpa_uses_parity(params: ProtocolParams) -> bool:
    """Known plaintext pins the transmitted bit only when OSK is off."""
    return not params.osk_enabled


def decide_basis(z, x_known, params: ProtocolParams, view: str):
    """Eve's estimate of the running key from heterodyne outcome(s).

    ``view='kpa'`` with OSK off: nearest of the M phases consistent with the
    known bit.  Otherwise nearest of the 2M phases, folded onto the basis.
    """
    M = params.M
    z = np.atleast_1d(z)
    if view == "kpa" and kpa_uses_parity(params):
        x_known = np.broadcast_to(np.asarray(x_known), z.shape)
        cand_m = np.arange(1, M + 1)
        out = np.empty(z.shape, dtype=np.int64)
        for x in (0, 1):
            sel = x_known == x
            if not np.any(sel):
                continue
            cand_phase = phase_index(x, cand_m, M) * np.pi / M
            d = np.abs(np.angle(z[sel][:, None] * np.exp(-1j * cand_phase[None, :])))
            out[sel] = cand_m[np.argmin(d, axis=1)]
        return out
    return np.mod(nearest_grid_index(z, M), M) + 1


def _heterodyne_key_block(params: ProtocolParams, view: str, seed: int, index: int, n: int) -> int:
    rng = seeding.rng_for(seed, index, f"key-receiver/{view}")
    M = params.M
    m = rng.integers(1, M + 1, size=n)
    x = rng.integers(0, 2, size=n)
    osk = rng.integers(0, 2, size=n) if params.osk_enabled else np.zeros(n, dtype=np.int64)
    j = phase_index(x ^ osk, m, M)
    z = heterodyne_sample(params.alpha_mag * np.exp(1j * j * np.pi / M), rng)
    return int(np.count_nonzero(decide_basis(z, x, params, view) == m))


def heterodyne_key_detection(params: ProtocolParams, view: str = "kpa", trials: int = 100_000,
                             seed: int = 0, threads: int = 1) -> tuple[float, int]:
    """Monte Carlo single-slot running-key detection; returns (P_d, hits)."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    jobs = list(seeding.blocks(trials, MC_BLOCK))
    run = lambda b: _heterodyne_key_block(params, view, seed, b[0], b[2] - b[1])  # noqa: E731
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            hits = sum(pool.map(run, jobs))
    else:
        hits = sum(map(run, jobs))
    return hits / trials, hits


def eve_key_receiver_error(params: ProtocolParams, receiver: KeyReceiver | str = KeyReceiver.HETERODYNE,
                           view: str = "kpa", trials: int = 100_000, seed: int = 0, threads: int = 1) -> float:
    receiver = KeyReceiver(receiver)
    if receiver == KeyReceiver.SRM:
        L = params.M if (view == "kpa" and kpa_uses_parity(params)) else 2 * params.M
        return srm_symmetric_error(L, params.alpha_mag)
    pd, _ = heterodyne_key_detection(params, view, trials, seed, threads)
    return 1.0 - pd


def key_detection_math(keylen: int, n: int) -> float:
    """Exhaustive-search success for a conventional cipher after n known bits."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    return 1.0 if n >= keylen else 2.0 ** -(keylen - n)


def key_detection_y00(keylen: int, M: int, gamma: int, osk: bool) -> float:
    """Heuristic key-detection probability under quantum-noise masking.

    Independent of the number of observed slots.
    """
    base = gamma if osk else gamma / 2.0
    if base <= 1.0:
        warnings.warn(f"masking number {gamma} gives no ambiguity (osk={osk}); returning 1",
                      DegenerateMasking, stacklevel=2)
        return 1.0
    return float(base ** -(keylen / math.log2(M)))


# -- exhaustive search ---------------------------------------------------------

@dataclass
class KeyTable:
    """Running keys and OSK bits of every nonzero LFSR key."""

    width: int
    keys: np.ndarray          # key values, row order
    m: np.ndarray             # (keys, slots) running keys
    osk: np.ndarray           # (keys, slots) OSK bits


def build_key_table(width: int, M: int, slots: int) -> KeyTable:
    if width > MAX_EXHAUSTIVE_BITS:
        raise KeySpaceTooLarge(f"{width}-bit key space exceeds the {MAX_EXHAUSTIVE_BITS}-bit limit")
    if width not in LFSR_TAPS:
        raise ValueError(f"no LFSR of width {width}")
    keys = np.arange(1, 1 << width, dtype=np.int64)
    k = int(math.log2(M))
    bits = lfsr_bits_batch(width, keys, slots * k)
    m = bits_to_running_keys(bits.reshape(-1), M).reshape(keys.size, slots)
    osk = lfsr_bits_batch(width, keys, slots, skip=LFSR_OSK_OFFSET).astype(np.int64)
    return KeyTable(width, keys, m, osk)


def _exhaustive_trial(table: KeyTable, params: ProtocolParams, lengths, window: int,
                      rng: np.random.Generator):
    M = params.M
    nmax = max(lengths)
    true_row = int(rng.integers(0, table.keys.size))
    x = rng.integers(0, 2, size=nmax)
    m = table.m[true_row, :nmax]
    osk = table.osk[true_row, :nmax] if params.osk_enabled else np.zeros(nmax, dtype=np.int64)
    j = phase_index(x ^ osk, m, M)
    z = heterodyne_sample(params.alpha_mag * np.exp(1j * j * np.pi / M), rng)
    j_hat = nearest_grid_index(z, M)
    if params.osk_enabled:
        # data parity is unusable: compare on the folded basis circle
        ok = circular_distance(j_hat[None, :] % M, table.m[:, :nmax] - 1, M) <= window
    else:
        implied = phase_index(x[None, :], table.m[:, :nmax], M)
        ok = circular_distance(j_hat[None, :], implied, 2 * M) <= window
    alive = np.logical_and.accumulate(ok, axis=1)
    out = []
    for n in lengths:
        col = alive[:, n - 1]
        size = int(np.count_nonzero(col))
        hit = bool(col[true_row])
        out.append((hit, size, hit and size == 1, (1.0 / size) if hit else 0.0))
    return out


def simulate_exhaustive_kpa(params: ProtocolParams, keylen: int, known_plaintext_len,
                            trials: int, seed: int = 0, threads: int = 1,
                            table: KeyTable | None = None, window: int | None = None) -> AttackReport:
    """Exhaustive key search against Eve's heterodyne record.

    Every key is kept whose implied phase sequence stays within a window of
    grid steps around each observation: floor(Gamma/2) steps on the 2M circle
    with known data parity when OSK is off, Gamma steps on the folded basis
    circle (parity ignored) when OSK is on.  ``window`` overrides the radius.  The reported
    P_d is the chance that a uniform pick from the surviving keys is correct.
    ``known_plaintext_len`` may be a list; the first entry is the headline.
    """
    if params.basis_kind != KeystreamKind.LFSR or (params.osk_enabled and params.osk_kind != KeystreamKind.LFSR):
        raise ValueError("exhaustive search needs LFSR keystreams")
    if keylen > MAX_EXHAUSTIVE_BITS:
        raise KeySpaceTooLarge(f"{keylen}-bit key space exceeds the {MAX_EXHAUSTIVE_BITS}-bit limit")
    if trials <= 0:
        raise ValueError("trials must be positive")
    lengths = [int(n) for n in np.atleast_1d(known_plaintext_len)]
    if min(lengths) < 1:
        raise ValueError("need at least one observed slot")
    if table is None or table.m.shape[1] < max(lengths):
        table = build_key_table(keylen, params.M, max(lengths))
    gamma = gamma_masking(params)
    if window is None:
        window = gamma if params.osk_enabled else gamma // 2

    def run_block(b):
        idx, start, stop = b
        rows = []
        for t in range(start, stop):
            rows.append(_exhaustive_trial(table, params, lengths, window,
                                          seeding.rng_for(seed, t, "exhaustive")))
        return rows

    jobs = list(seeding.blocks(trials, 256))
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = [r for blk in pool.map(run_block, jobs) for r in blk]
    else:
        results = [r for b in jobs for r in run_block(b)]

    arr = np.array(results, dtype=float)   # (trials, lengths, 4)
    per_n = []
    for i, n in enumerate(lengths):
        pick = arr[:, i, 3]
        mean = float(pick.mean())
        se = float(pick.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
        per_n.append({
            "n": n,
            "p_true_survives": float(arr[:, i, 0].mean()),
            "mean_survivors": float(arr[:, i, 1].mean()),
            "p_unique": float(arr[:, i, 2].mean()),
            "p_pick": mean,
            "p_pick_se": se,
        })
    analytic = key_detection_y00(keylen, params.M, gamma, params.osk_enabled) if (
        gamma > (1 if params.osk_enabled else 2)) else 1.0
    head = per_n[0]
    return AttackReport(
        AttackKind.EXHAUSTIVE, analytic, head["p_pick"], trials,
        (max(0.0, head["p_pick"] - 1.96 * head["p_pick_se"]), min(1.0, head["p_pick"] + 1.96 * head["p_pick_se"])),
        params.snapshot() | {"keylen": keylen, "gamma": gamma, "window": window},
        {"per_n": per_n, "math_cipher": [key_detection_math(keylen, n) for n in lengths]},
    )
