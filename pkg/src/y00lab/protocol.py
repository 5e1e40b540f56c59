"""Y-00 encryption by modulation and the keyed receiver.

Basis m in 1..M sits at phase (m - 1) pi / M; the 2M transmitted phases are
j pi / M for j = 0 .. 2M - 1.  An even basis sends bit 0 at its own phase and
bit 1 at the antipode; an odd basis does the reverse.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import ndtr

from .keystream import KeystreamGenerator, KeystreamKind, SecretKey, bits_to_running_keys, _log2_exact
from .quantum import helstrom_pure

TRANSCRIPT_COLUMNS = ("t", "x", "m", "osk", "xy00", "j", "theta", "bob_bit")


class ChannelModel(str, enum.Enum):
    NOISELESS = "noiseless"
    HOMODYNE = "homodyne"
    HELSTROM = "helstrom"


@dataclass(frozen=True)
class ProtocolParams:
    M: int
    alpha_mag: float
    osk_enabled: bool = False
    basis_kind: KeystreamKind = KeystreamKind.COUNTER
    osk_kind: KeystreamKind = KeystreamKind.COUNTER
    nonce: bytes = b"y00"

    def __post_init__(self):
        _log2_exact(self.M)
        if not (self.alpha_mag > 0 and np.isfinite(self.alpha_mag)):
            raise ValueError(f"alpha_mag must be positive and finite, got {self.alpha_mag}")
        object.__setattr__(self, "basis_kind", KeystreamKind(self.basis_kind))
        object.__setattr__(self, "osk_kind", KeystreamKind(self.osk_kind))

    @property
    def bits_per_slot(self) -> int:
        return _log2_exact(self.M)

    @property
    def spacing(self) -> float:
        return np.pi / self.M

    def snapshot(self) -> dict:
        d = asdict(self)
        d["basis_kind"] = self.basis_kind.value
        d["osk_kind"] = self.osk_kind.value
        d["nonce"] = self.nonce.decode("latin-1")
        return d


@dataclass(frozen=True)
class SlotRecord:
    t: int
    x: int
    m: int
    osk_bit: int
    x_y00: int
    j: int
    theta: float


def basis_phase(m, M: int):
    return (np.asarray(m) - 1) * np.pi / M


def phase_index(x_y00, m, M: int):
    """Index j of the transmitted phase j pi / M for Y-00 bit and basis."""
    m = np.asarray(m)
    branch = np.asarray(x_y00) ^ (m & 1)
    return (m - 1) + branch * M


def constellation(params: ProtocolParams) -> np.ndarray:
    """All 2M amplitudes, entry j at phase j pi / M."""
    j = np.arange(2 * params.M)
    return params.alpha_mag * np.exp(1j * j * np.pi / params.M)


def encrypt_slot(x: int, m: int, osk_bit: int, params: ProtocolParams, t: int = 0) -> SlotRecord:
    if not 1 <= m <= params.M:
        raise ValueError(f"running key {m} outside 1..{params.M}")
    if x not in (0, 1) or osk_bit not in (0, 1):
        raise ValueError("data and OSK bits must be 0 or 1")
    xy = x ^ osk_bit if params.osk_enabled else x
    j = int(phase_index(xy, m, params.M))
    return SlotRecord(t, x, m, osk_bit, xy, j, j * np.pi / params.M)


def modulate(rec: SlotRecord, params: ProtocolParams) -> complex:
    return complex(params.alpha_mag * np.cos(rec.theta), params.alpha_mag * np.sin(rec.theta))


def bob_demodulate(sample: complex, m: int, params: ProtocolParams) -> int:
    """Y-00 bit from a lab-frame sample, deciding in the frame of basis m."""
    rotated = np.asarray(sample) * np.exp(-1j * basis_phase(m, params.M))
    branch = (np.real(rotated) < 0).astype(np.int64)
    out = branch ^ (np.asarray(m) & 1)
    return int(out) if out.ndim == 0 else out


def decrypt_osk(x_y00: int, osk_bit: int) -> int:
    return x_y00 ^ osk_bit


def bob_ber_analytic(alpha_mag: float, channel: ChannelModel | str) -> float:
    channel = ChannelModel(channel)
    if channel == ChannelModel.NOISELESS:
        return 0.0
    if channel == ChannelModel.HOMODYNE:
        # in-phase quadrature ~ N(+-alpha, 1/4)
        return float(ndtr(-2.0 * alpha_mag))
    return helstrom_pure(np.exp(-2.0 * alpha_mag**2))


def receive(amplitudes: np.ndarray, m: np.ndarray, params: ProtocolParams,
            channel: ChannelModel, rng: np.random.Generator | None) -> np.ndarray:
    """Bob's lab-frame samples for transmitted amplitudes under a channel model.

    The homodyne local oscillator tracks basis m, so noise lies along that axis.
    The Helstrom model returns the noiseless amplitude, flipped to the antipode
    with the binary Helstrom error probability.
    """
    channel = ChannelModel(channel)
    amplitudes = np.asarray(amplitudes, dtype=complex)
    if channel == ChannelModel.NOISELESS:
        return amplitudes.copy()
    if rng is None:
        raise ValueError(f"{channel.value} channel needs an rng")
    if channel == ChannelModel.HOMODYNE:
        noise = rng.normal(0.0, 0.5, size=amplitudes.shape)
        return amplitudes + noise * np.exp(1j * basis_phase(m, params.M))
    flips = rng.random(amplitudes.shape) < bob_ber_analytic(params.alpha_mag, channel)
    return np.where(flips, -amplitudes, amplitudes)


@dataclass
class Transcript:
    """Column-oriented session record."""

    t: np.ndarray
    x: np.ndarray
    m: np.ndarray
    osk: np.ndarray
    xy00: np.ndarray
    j: np.ndarray
    theta: np.ndarray
    bob_bit: np.ndarray
    params: ProtocolParams = field(repr=False, default=None)

    def __len__(self) -> int:
        return self.t.size

    def records(self):
        for i in range(len(self)):
            yield SlotRecord(int(self.t[i]), int(self.x[i]), int(self.m[i]), int(self.osk[i]),
                             int(self.xy00[i]), int(self.j[i]), float(self.theta[i]))

    @property
    def bob_errors(self) -> int:
        return int(np.count_nonzero(self.bob_bit != self.x))

    def to_csv(self, header_comment: str | None = None) -> str:
        buf = io.StringIO()
        if header_comment:
            buf.write(f"# {header_comment}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRANSCRIPT_COLUMNS)
        theta = [f"{v:.12g}" for v in self.theta]
        w.writerows(zip(self.t.tolist(), self.x.tolist(), self.m.tolist(), self.osk.tolist(),
                        self.xy00.tolist(), self.j.tolist(), theta, self.bob_bit.tolist()))
        return buf.getvalue()


def keystreams(key: SecretKey, params: ProtocolParams, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Running keys and OSK bits for n slots.

    Both streams come from the same key; the OSK stream is domain-separated
    by label (counter mode) or by a fixed register offset (LFSR).
    """
    basis = KeystreamGenerator(params.basis_kind, key, params.nonce).stream("basis")
    m = bits_to_running_keys(basis.bits(n * params.bits_per_slot), params.M) if n else np.empty(0, np.int64)
    if params.osk_enabled:
        osk_src = KeystreamGenerator(params.osk_kind, key, params.nonce).stream("osk")
        osk = osk_src.bits(n).astype(np.int64)
    else:
        osk = np.zeros(n, dtype=np.int64)
    return m, osk


def run_session(key: SecretKey, plaintext, params: ProtocolParams,
                channel: ChannelModel | str = ChannelModel.NOISELESS,
                rng: np.random.Generator | None = None) -> Transcript:
    """Encrypt, transmit and decode a plaintext bit sequence slot by slot."""
    channel = ChannelModel(channel)
    x = np.asarray(plaintext, dtype=np.int64).ravel()
    if np.any((x != 0) & (x != 1)):
        raise ValueError("plaintext must be bits")
    n = x.size
    m, osk = keystreams(key, params, n)
    xy = x ^ osk
    j = phase_index(xy, m, params.M).astype(np.int64)
    theta = j * np.pi / params.M
    amps = params.alpha_mag * np.exp(1j * theta)
    samples = receive(amps, m, params, channel, rng)
    bob_xy = bob_demodulate(samples, m, params)
    bob = (bob_xy ^ osk).astype(np.int64)
    return Transcript(np.arange(n), x, m.astype(np.int64), osk, xy, j, theta, bob, params)
