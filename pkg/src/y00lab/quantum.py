"""Exact finite-dimensional quantum mathematics over coherent-state ensembles.

Operators are stored as coefficient matrices against the raw (non-orthogonal)
coherent-state set.  The Gram matrix supplies the metric; eigenproblems are
solved after symmetric orthogonalization of the span, so nothing here depends
on a Fock-space cutoff.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

GRAM_CLIP = 1e-12
PRIOR_TOL = 1e-12


class QuantumDomainError(ValueError):
    """Input outside the domain of a quantum-core operation."""


class QuantumNumericError(ArithmeticError):
    """Eigen-solver or conditioning failure."""


def _as_amplitude(z) -> complex:
    z = complex(z)
    if not (np.isfinite(z.real) and np.isfinite(z.imag)):
        raise QuantumDomainError(f"non-finite coherent amplitude {z!r}")
    return z


def coherent_overlap(a: complex, b: complex) -> complex:
    """Inner product <a|b> of two coherent states."""
    a = _as_amplitude(a)
    b = _as_amplitude(b)
    return complex(np.exp(-0.5 * abs(a) ** 2 - 0.5 * abs(b) ** 2 + a.conjugate() * b))


def gram_matrix(amplitudes) -> np.ndarray:
    """Matrix of pairwise overlaps, entry (i, j) = <a_i|a_j>."""
    if isinstance(amplitudes, SignalEnsemble):
        amplitudes = amplitudes.amplitudes
    a = np.asarray(amplitudes, dtype=complex).ravel()
    if not np.all(np.isfinite(a)):
        raise QuantumDomainError("non-finite coherent amplitude")
    n2 = np.abs(a) ** 2
    g = np.exp(-0.5 * n2[:, None] - 0.5 * n2[None, :] + np.conj(a)[:, None] * a[None, :])
    # exact Hermitian symmetry and unit diagonal
    g = 0.5 * (g + g.conj().T)
    np.fill_diagonal(g, 1.0)
    return g


@dataclass(frozen=True, eq=False)
class SignalEnsemble:
    """Pure coherent states with prior probabilities."""

    amplitudes: np.ndarray
    priors: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex).ravel()
        if a.size < 1:
            raise QuantumDomainError("ensemble needs at least one state")
        if not np.all(np.isfinite(a)):
            raise QuantumDomainError("non-finite coherent amplitude")
        p = np.asarray(self.priors, dtype=float).ravel()
        if p.shape != a.shape:
            raise QuantumDomainError(f"{a.size} amplitudes but {p.size} priors")
        if np.any(p < 0) or abs(p.sum() - 1.0) > PRIOR_TOL:
            raise QuantumDomainError("priors must be nonnegative and sum to 1")
        a.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)
        object.__setattr__(self, "priors", p)

    @classmethod
    def uniform(cls, amplitudes) -> "SignalEnsemble":
        a = np.asarray(amplitudes, dtype=complex).ravel()
        return cls(a, np.full(a.size, 1.0 / a.size))

    @classmethod
    def psk(cls, n: int, alpha_mag: float, offset: float = 0.0) -> "SignalEnsemble":
        """n equiprobable states equally spaced on the circle of radius alpha_mag."""
        phases = offset + 2 * np.pi * np.arange(n) / n
        return cls.uniform(alpha_mag * np.exp(1j * phases))

    def __len__(self) -> int:
        return self.amplitudes.size


class Span:
    """Orthonormalized span of a set of coherent states.

    Columns of ``to_orthonormal`` are the coordinates of each state in an
    orthonormal basis of the span; directions of the Gram matrix below
    GRAM_CLIP are deflated and their mass kept in ``clipped_mass``.
    """

    def __init__(self, amplitudes, clip: float = GRAM_CLIP):
        self.amplitudes = np.asarray(amplitudes, dtype=complex).ravel()
        self.gram = gram_matrix(self.amplitudes)
        try:
            w, v = np.linalg.eigh(self.gram)
        except np.linalg.LinAlgError as exc:
            raise QuantumNumericError(str(exc)) from exc
        keep = w > clip
        self.clipped_mass = float(np.abs(w[~keep]).sum())
        self._w = w[keep]
        self._v = v[:, keep]
        # coordinates of |psi_i> are column i: B = Lambda^{1/2} V^dagger
        self.to_orthonormal = np.sqrt(self._w)[:, None] * self._v.conj().T

    @property
    def dim(self) -> int:
        return self._w.size

    def matrix(self, coeff: np.ndarray) -> np.ndarray:
        """Matrix of sum_ij C_ij |psi_i><psi_j| in the orthonormal basis."""
        b = self.to_orthonormal
        m = b @ coeff @ b.conj().T
        return 0.5 * (m + m.conj().T)

    def coeff(self, matrix: np.ndarray) -> np.ndarray:
        """Inverse of ``matrix`` for operators supported on the span."""
        s = self._v / np.sqrt(self._w)[None, :]
        return s @ matrix @ s.conj().T

    def same_as(self, other: "Span") -> bool:
        return self is other or (
            self.amplitudes.shape == other.amplitudes.shape
            and np.array_equal(self.amplitudes, other.amplitudes)
        )


@dataclass(frozen=True, eq=False)
class SpanOperator:
    """Hermitian operator sum_ij coeff[i, j] |psi_i><psi_j| over ``span``."""

    span: Span
    coeff: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeff, dtype=complex)
        n = self.span.amplitudes.size
        if c.shape != (n, n):
            raise QuantumDomainError(f"coefficient shape {c.shape} does not match span of {n}")
        if np.max(np.abs(c - c.conj().T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(c))):
            raise QuantumDomainError("coefficient matrix is not Hermitian")
        object.__setattr__(self, "coeff", 0.5 * (c + c.conj().T))

    @cached_property
    def matrix(self) -> np.ndarray:
        return self.span.matrix(self.coeff)

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.coeff @ self.span.gram)))

    def eigenvalues(self) -> np.ndarray:
        try:
            return np.linalg.eigvalsh(self.matrix)[::-1]
        except np.linalg.LinAlgError as exc:
            raise QuantumNumericError(str(exc)) from exc

    def is_density(self, tol: float = 1e-10) -> bool:
        ev = self.eigenvalues()
        return abs(self.trace - 1.0) <= tol and (ev.size == 0 or ev[-1] >= -tol)

    @classmethod
    def from_matrix(cls, span: Span, matrix: np.ndarray) -> "SpanOperator":
        return cls(span, span.coeff(matrix))

    def __sub__(self, other: "SpanOperator") -> "SpanOperator":
        _check_common_span(self, other)
        return SpanOperator(self.span, self.coeff - other.coeff)


def _check_common_span(*ops: SpanOperator) -> None:
    first = ops[0].span
    for op in ops[1:]:
        if not first.same_as(op.span):
            raise QuantumDomainError("operators live on different spans")


def density_operator(ens: SignalEnsemble, span: Span | None = None) -> SpanOperator:
    """Average state sum_k p_k |a_k><a_k| of an ensemble.

    With ``span`` given, the ensemble's amplitudes must all appear in it and
    the operator is expressed against that larger basis.
    """
    if span is None:
        return SpanOperator(Span(ens.amplitudes), np.diag(ens.priors).astype(complex))
    coeff = np.zeros((span.amplitudes.size,) * 2, dtype=complex)
    for a, p in zip(ens.amplitudes, ens.priors):
        hits = np.flatnonzero(span.amplitudes == a)
        if hits.size == 0:
            raise QuantumDomainError(f"amplitude {a} is not in the span")
        coeff[hits[0], hits[0]] += p
    return SpanOperator(span, coeff)


def ensemble_spectrum(ens: SignalEnsemble) -> np.ndarray:
    """Nonzero spectrum of the average state, descending.

    Uses D^{1/2} G D^{1/2}, which shares its nonzero eigenvalues with
    sum_k p_k |a_k><a_k|.
    """
    d = np.sqrt(ens.priors)
    k = d[:, None] * gram_matrix(ens.amplitudes) * d[None, :]
    try:
        ev = np.linalg.eigvalsh(k)[::-1]
    except np.linalg.LinAlgError as exc:
        raise QuantumNumericError(str(exc)) from exc
    return _normalize_spectrum(ev)


def _normalize_spectrum(ev: np.ndarray) -> np.ndarray:
    ev = np.clip(np.real(ev), 0.0, 1.0)
    total = ev.sum()
    if total <= 0:
        raise QuantumNumericError("spectrum has no positive mass")
    return np.sort(ev / total)[::-1]


def von_neumann_entropy(spectrum) -> float:
    """Entropy in bits of a density-operator spectrum; 0 log 0 = 0."""
    lam = np.asarray(spectrum, dtype=float)
    lam = lam[lam > 0]
    return float(max(0.0, -np.sum(lam * np.log2(lam))))


def operator_entropy(rho: SpanOperator) -> float:
    return von_neumann_entropy(_normalize_spectrum(rho.eigenvalues()))


def holevo_information(ens: SignalEnsemble) -> float:
    """Holevo information of a pure-state ensemble, which is S(rho_T)."""
    return von_neumann_entropy(ensemble_spectrum(ens))


@dataclass(frozen=True)
class MixedGroups:
    """Mixed signal states given as pure sub-ensembles with group priors."""

    groups: Sequence[SignalEnsemble]
    priors: Sequence[float] = field(default=())

    def __post_init__(self):
        if not self.groups:
            raise QuantumDomainError("need at least one group")
        pri = np.asarray(self.priors if len(self.priors) else
                         np.full(len(self.groups), 1.0 / len(self.groups)), dtype=float)
        if pri.size != len(self.groups) or np.any(pri < 0) or abs(pri.sum() - 1) > PRIOR_TOL:
            raise QuantumDomainError("group priors must be nonnegative and sum to 1")
        object.__setattr__(self, "priors", tuple(float(p) for p in pri))

    def union_span(self) -> Span:
        amps = []
        for g in self.groups:
            for a in g.amplitudes:
                if not any(a == b for b in amps):
                    amps.append(a)
        return Span(np.array(amps, dtype=complex))

    def operators(self, span: Span | None = None) -> list[SpanOperator]:
        span = span or self.union_span()
        return [density_operator(g, span) for g in self.groups]


def holevo_information_mixed(groups: Sequence[SignalEnsemble], priors=None) -> float:
    """S(rho_T) - sum_k xi_k S(rho_k) for mixed members given as sub-ensembles."""
    mg = MixedGroups(list(groups), tuple(priors) if priors is not None else ())
    if len(mg.groups) == 1:
        return 0.0
    span = mg.union_span()
    ops = mg.operators(span)
    total = SpanOperator(span, sum(p * op.coeff for p, op in zip(mg.priors, ops)))
    chi = operator_entropy(total) - sum(p * operator_entropy(op) for p, op in zip(mg.priors, ops))
    return max(0.0, chi)


def trace_distance(rho0: SpanOperator, rho1: SpanOperator) -> float:
    _check_common_span(rho0, rho1)
    return 0.5 * float(np.abs((rho0 - rho1).eigenvalues()).sum())


def helstrom_binary(rho0: SpanOperator, rho1: SpanOperator, xi0: float = 0.5) -> float:
    """Minimum error probability for discriminating rho0 (prior xi0) from rho1.

    (1 - ||xi1 rho1 - xi0 rho0||_1) / 2, valid for mixed states.
    """
    _check_common_span(rho0, rho1)
    if not 0.0 <= xi0 <= 1.0:
        raise QuantumDomainError(f"prior {xi0} outside [0, 1]")
    xi1 = 1.0 - xi0
    diff = SpanOperator(rho0.span, xi1 * rho1.coeff - xi0 * rho0.coeff)
    norm = float(np.abs(diff.eigenvalues()).sum())
    pe = 0.5 * (1.0 - norm)
    return float(min(max(pe, 0.0), min(xi0, xi1)))


def helstrom_pure(overlap: complex, xi0: float = 0.5) -> float:
    """Closed form for two pure states with the given inner product."""
    f = abs(overlap) ** 2
    return 0.5 * (1.0 - np.sqrt(max(0.0, 1.0 - 4.0 * xi0 * (1.0 - xi0) * f)))


def helstrom_povm(rho0: SpanOperator, rho1: SpanOperator, xi0: float = 0.5) -> list[SpanOperator]:
    """Projectors [Pi_0, Pi_1] of the minimum-error binary measurement."""
    _check_common_span(rho0, rho1)
    diff = (1.0 - xi0) * rho1.matrix - xi0 * rho0.matrix
    w, v = np.linalg.eigh(diff)
    vp = v[:, w > 0]
    p1 = vp @ vp.conj().T
    p0 = np.eye(diff.shape[0]) - p1
    span = rho0.span
    return [SpanOperator.from_matrix(span, p0), SpanOperator.from_matrix(span, p1)]


def symmetric_gram_eigenvalues(n: int, alpha_mag: float) -> np.ndarray:
    """Eigenvalues of the circulant Gram matrix of n-PSK coherent states."""
    k = np.arange(n)
    row = np.exp(alpha_mag**2 * (np.exp(2j * np.pi * k / n) - 1.0))
    mu = np.real(np.fft.fft(row))
    return np.clip(mu, 0.0, None)


def srm_symmetric_error(n: int, alpha_mag: float) -> float:
    """Error probability of the square-root measurement on equiprobable n-PSK."""
    if n < 2:
        raise QuantumDomainError("need at least two symmetric states")
    mu = symmetric_gram_eigenvalues(n, alpha_mag)
    pc = np.sum(np.sqrt(mu)) ** 2 / n**2
    return float(min(max(1.0 - pc, 0.0), 1.0 - 1.0 / n))


def holevo_condition_residual(ens: SignalEnsemble, povm: Sequence[SpanOperator]) -> float:
    """Largest norm of Pi_j (F_j - F_i) Pi_i over outcome pairs.

    Vanishes at a measurement that is stationary for the mutual information.
    """
    if not povm:
        raise QuantumDomainError("empty POVM")
    span = povm[0].span
    _check_common_span(*povm)
    mats = [p.matrix for p in povm]
    dim = span.dim
    for m in mats:
        if np.linalg.eigvalsh(m)[0] < -1e-10:
            raise QuantumDomainError("POVM element is not positive semidefinite")
    if np.linalg.norm(sum(mats) - np.eye(dim), 2) > 1e-8:
        raise QuantumDomainError("POVM does not resolve the identity on the span")

    states = []
    for a in ens.amplitudes:
        hits = np.flatnonzero(span.amplitudes == a)
        if hits.size == 0:
            raise QuantumDomainError(f"state {a} is not in the POVM's span")
        states.append(span.to_orthonormal[:, hits[0]])
    rhos = [np.outer(s, s.conj()) for s in states]
    xi = ens.priors
    cond = np.array([[np.real(s.conj() @ m @ s) for s in states] for m in mats])  # P(j|k)
    marg = cond @ xi
    f_ops = []
    for j in range(len(mats)):
        fj = np.zeros((dim, dim), dtype=complex)
        for k, rho in enumerate(rhos):
            if xi[k] > 0 and cond[j, k] > 0:
                fj += xi[k] * rho * np.log(cond[j, k] / marg[j])
        f_ops.append(fj)
    worst = 0.0
    for i, j in itertools.product(range(len(mats)), repeat=2):
        r = mats[j] @ (f_ops[j] - f_ops[i]) @ mats[i]
        worst = max(worst, float(np.linalg.norm(r, 2)))
    return worst


def mutual_information(ens: SignalEnsemble, povm: Sequence[SpanOperator]) -> float:
    """Classical mutual information (bits) between label and POVM outcome."""
    span = povm[0].span
    states = [span.to_orthonormal[:, np.flatnonzero(span.amplitudes == a)[0]] for a in ens.amplitudes]
    cond = np.array([[max(0.0, np.real(s.conj() @ p.matrix @ s)) for s in states] for p in povm])
    joint = cond * ens.priors[None, :]
    py = joint.sum(axis=1, keepdims=True)
    px = ens.priors[None, :]
    mask = joint > 0
    return float(np.sum(joint[mask] * np.log2(joint[mask] / (py @ px)[mask])))


def holevo_capacity(amplitudes, grid_steps: int = 40) -> tuple[float, np.ndarray]:
    """Maximize Holevo information over priors by exhaustive simplex grid.

    Only for up to four states; returns (chi, maximizing priors).
    """
    a = np.asarray(amplitudes, dtype=complex).ravel()
    if a.size > 4:
        raise QuantumDomainError("prior grid search is limited to four states")
    best, best_p = -1.0, None
    for counts in itertools.product(range(grid_steps + 1), repeat=a.size - 1):
        if sum(counts) > grid_steps:
            continue
        p = np.array(counts + (grid_steps - sum(counts),), dtype=float) / grid_steps
        chi = holevo_information(SignalEnsemble(a, p))
        if chi > best:
            best, best_p = chi, p
    return best, best_p
