"""Scenario and sweep files.

A scenario is an INI file::

    [protocol]
    M = 16
    alpha = 1.27
    osk = true
    basis_keystream = lfsr      ; lfsr | counter
    osk_keystream = lfsr
    nonce = y00

    [key]
    length = 12
    ; value = 0xabc             ; optional, otherwise drawn from the seed

    [plaintext]
    kind = random               ; random | file | pattern
    length = 4096
    ; path = data.bin
    ; pattern = 0110

    [channel]
    model = homodyne            ; noiseless | homodyne | helstrom

    [attack]
    kind = exhaustive           ; exhaustive | key | data
    view = kpa                  ; kpa | coa (key attack)
    known_plaintext = 12, 24, 48, 96
    ; window = 2                ; exhaustive-search radius override

    [run]
    trials = 10000
    seed = 1
    ber_ceiling = 1e-3

    [wiretap]                   ; optional Gaussian baseline
    snr_b = 15
    snr_e = 3

A sweep file is a scenario plus a ``[sweep]`` section whose keys are axis
names (M, alpha, osk, keylen) with comma-separated values, and optional
``cap``, ``table`` and ``svg`` entries.  Relative paths resolve against the
file's directory.
"""

from __future__ import annotations

import configparser
import hashlib
import itertools
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .keystream import KeystreamKind, SecretKey
from .protocol import ChannelModel, ProtocolParams
from . import seeding

SWEEP_AXES = ("M", "alpha", "osk", "keylen")
DEFAULT_SWEEP_CAP = 10_000


class GridTooLarge(RuntimeError):
    """Sweep grid exceeds its configured cap."""


class ScenarioError(ValueError):
    """Invalid scenario; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class PlaintextSpec:
    kind: str = "random"
    length: int = 1024
    path: Path | None = None
    pattern: str = ""


@dataclass(frozen=True)
class Scenario:
    params: ProtocolParams
    keylen: int
    seed: int
    trials: int = 1000
    key_value: int | None = None
    plaintext: PlaintextSpec = field(default_factory=PlaintextSpec)
    channel: ChannelModel = ChannelModel.HOMODYNE
    attack: str = "exhaustive"
    view: str = "kpa"
    known_plaintext: tuple[int, ...] = ()
    window: int | None = None
    ber_ceiling: float = 1e-3
    snr: tuple[float, float] | None = None
    source_hash: str = ""

    def key(self) -> SecretKey:
        if self.key_value is not None:
            return SecretKey.from_int(self.key_value, self.keylen)
        rng = seeding.rng_for(self.seed, 0, "key")
        while True:
            key = SecretKey.random(self.keylen, rng)
            # an LFSR register cannot start from all zeros
            if key.to_int() or self.params.basis_kind != KeystreamKind.LFSR:
                return key

    def plaintext_bits(self) -> np.ndarray:
        pt = self.plaintext
        if pt.kind == "random":
            return seeding.rng_for(self.seed, 0, "plaintext").integers(0, 2, size=pt.length)
        if pt.kind == "file":
            bits = np.unpackbits(np.frombuffer(pt.path.read_bytes(), dtype=np.uint8))
            return bits[: pt.length].astype(np.int64) if pt.length else bits.astype(np.int64)
        pat = np.array([int(c) for c in pt.pattern], dtype=np.int64)
        return np.resize(pat, pt.length)

    def channel_rng(self) -> np.random.Generator:
        return seeding.rng_for(self.seed, 0, "channel")

    def provenance(self, version: str) -> dict:
        return {"tool": "y00lab", "version": version, "scenario_sha256": self.source_hash}


@dataclass(frozen=True)
class SweepSpec:
    base: Scenario
    axes: dict
    table: Path
    svg: bool = False
    cap: int = DEFAULT_SWEEP_CAP

    def size(self) -> int:
        n = 1
        for v in self.axes.values():
            n *= len(v)
        return n

    def points(self):
        names = list(self.axes)
        for combo in itertools.product(*(self.axes[n] for n in names)):
            yield dict(zip(names, combo)), apply_axes(self.base, dict(zip(names, combo)))


def apply_axes(base: Scenario, values: dict) -> Scenario:
    p = base.params
    changes = {}
    if "M" in values:
        changes["M"] = int(values["M"])
    if "alpha" in values:
        changes["alpha_mag"] = float(values["alpha"])
    if "osk" in values:
        changes["osk_enabled"] = bool(values["osk"])
    try:
        params = replace(p, **changes)
    except ValueError as exc:
        raise ScenarioError("sweep", str(exc)) from exc
    keylen = int(values.get("keylen", base.keylen))
    return replace(base, params=params, keylen=keylen)


def _get(cp, section, key, conv, default=None, required=False):
    if not cp.has_option(section, key):
        if required:
            raise ScenarioError(f"{section}.{key}", "missing")
        return default
    raw = cp.get(section, key)
    try:
        return conv(raw)
    except (ValueError, TypeError) as exc:
        raise ScenarioError(f"{section}.{key}", f"bad value {raw!r}: {exc}") from exc


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def _int_list(s: str) -> tuple[int, ...]:
    return tuple(int(v) for v in s.replace(",", " ").split())


def _read(path: Path) -> tuple[configparser.ConfigParser, bytes]:
    path = Path(path)
    if not path.is_file():
        raise ScenarioError("scenario", f"file not found: {path}")
    raw = path.read_bytes()
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(raw.decode("utf-8"), source=str(path))
    except configparser.Error as exc:
        raise ScenarioError("scenario", str(exc)) from exc
    return cp, raw


def parse_scenario(cp: configparser.ConfigParser, raw: bytes, base_dir: Path,
                   overrides: dict | None = None) -> Scenario:
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    kind = lambda s: KeystreamKind(s.strip().lower())  # noqa: E731
    try:
        params = ProtocolParams(
            M=_get(cp, "protocol", "M", int, required=True),
            alpha_mag=_get(cp, "protocol", "alpha", float, required=True),
            osk_enabled=_get(cp, "protocol", "osk", _bool, False),
            basis_kind=_get(cp, "protocol", "basis_keystream", kind, KeystreamKind.COUNTER),
            osk_kind=_get(cp, "protocol", "osk_keystream", kind, KeystreamKind.COUNTER),
            nonce=_get(cp, "protocol", "nonce", str, "y00").encode(),
        )
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError("protocol", str(exc)) from exc

    keylen = _get(cp, "key", "length", int, required=True)
    if keylen < 1:
        raise ScenarioError("key.length", "must be at least 1")
    key_value = _get(cp, "key", "value", lambda s: int(s, 0))
    if key_value is not None and not 0 <= key_value < (1 << keylen):
        raise ScenarioError("key.value", f"does not fit in {keylen} bits")

    pkind = _get(cp, "plaintext", "kind", lambda s: s.strip().lower(), "random")
    if pkind not in ("random", "file", "pattern"):
        raise ScenarioError("plaintext.kind", f"unknown kind {pkind!r}")
    plen = _get(cp, "plaintext", "length", int, 1024)
    if plen < 0:
        raise ScenarioError("plaintext.length", "must be nonnegative")
    ppath = _get(cp, "plaintext", "path", str)
    pattern = _get(cp, "plaintext", "pattern", str, "")
    if pkind == "file":
        if not ppath:
            raise ScenarioError("plaintext.path", "required for kind = file")
        ppath = (base_dir / ppath).resolve()
        if not ppath.is_file():
            raise ScenarioError("plaintext.path", f"file not found: {ppath}")
    if pkind == "pattern" and (not pattern or set(pattern) - {"0", "1"}):
        raise ScenarioError("plaintext.pattern", "must be a nonempty string of 0/1")
    plaintext = PlaintextSpec(pkind, plen, Path(ppath) if ppath else None, pattern)

    channel = _get(cp, "channel", "model", lambda s: ChannelModel(s.strip().lower()), ChannelModel.HOMODYNE)
    attack = _get(cp, "attack", "kind", lambda s: s.strip().lower(), "exhaustive")
    if attack not in ("exhaustive", "key", "data"):
        raise ScenarioError("attack.kind", f"unknown attack {attack!r}")
    view = _get(cp, "attack", "view", lambda s: s.strip().lower(), "kpa")
    if view not in ("kpa", "coa"):
        raise ScenarioError("attack.view", f"unknown view {view!r}")
    default_n = max(1, keylen)
    known = _get(cp, "attack", "known_plaintext", _int_list, (default_n,))
    if not known or min(known) < 1:
        raise ScenarioError("attack.known_plaintext", "need positive slot counts")
    window = _get(cp, "attack", "window", int)

    trials = overrides.get("trials", _get(cp, "run", "trials", int, 1000))
    if trials < 1:
        raise ScenarioError("run.trials", "must be at least 1")
    seed = overrides.get("seed", _get(cp, "run", "seed", int))
    if seed is None:
        raise ScenarioError("run.seed", "an explicit seed is required")
    ber_ceiling = _get(cp, "run", "ber_ceiling", float, 1e-3)

    snr = None
    if cp.has_section("wiretap"):
        snr = (_get(cp, "wiretap", "snr_b", float, required=True),
               _get(cp, "wiretap", "snr_e", float, required=True))

    digest = hashlib.sha256(raw)
    for k in sorted(overrides):
        if k in ("seed", "trials"):
            digest.update(f"\n{k}={overrides[k]}".encode())
    return Scenario(params, keylen, int(seed), int(trials), key_value, plaintext, channel,
                    attack, view, tuple(known), window, ber_ceiling, snr, digest.hexdigest())


def load_scenario(path, overrides: dict | None = None) -> Scenario:
    path = Path(path)
    cp, raw = _read(path)
    return parse_scenario(cp, raw, path.parent, overrides)


def load_sweep(path, overrides: dict | None = None) -> SweepSpec:
    path = Path(path)
    cp, raw = _read(path)
    base = parse_scenario(cp, raw, path.parent, overrides)
    if not cp.has_section("sweep"):
        raise ScenarioError("sweep", "missing [sweep] section")
    axes = {}
    cap = DEFAULT_SWEEP_CAP
    table = Path("sweep.csv")
    svg = False
    for key, raw_val in cp.items("sweep"):
        if key == "cap":
            cap = _get(cp, "sweep", key, int)
        elif key == "table":
            table = Path(raw_val)
        elif key == "svg":
            svg = _get(cp, "sweep", key, _bool)
        else:
            name = {"m": "M"}.get(key, key)
            if name not in SWEEP_AXES:
                raise ScenarioError(f"sweep.{key}", f"unknown axis; choose from {', '.join(SWEEP_AXES)}")
            conv = {"M": int, "alpha": float, "osk": _bool, "keylen": int}[name]
            try:
                vals = [conv(v.strip()) for v in raw_val.split(",") if v.strip()]
            except ValueError as exc:
                raise ScenarioError(f"sweep.{key}", str(exc)) from exc
            if not vals:
                raise ScenarioError(f"sweep.{key}", "empty axis")
            axes[name] = vals
    if not axes:
        raise ScenarioError("sweep", "no axes given")
    spec = SweepSpec(base, axes, table, svg, cap)
    if spec.size() > cap:
        raise GridTooLarge(f"sweep has {spec.size()} points, cap is {cap}")
    # validate every point up front so errors surface as config errors
    for _ in spec.points():
        pass
    return spec
