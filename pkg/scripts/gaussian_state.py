"""Exact algebra of multivariate Gaussian pure-state wavefunctions.

A state over n labelled coordinates is

    psi(x) = exp(-1/2 x^T A x + b^T x + c)

with A complex symmetric, Re(A) positive definite, and Re(c) fixed by normalisation.
Every coordinate is tagged with the photon it belongs to, that photon's role and the
representation (time or frequency) the coordinate is currently expressed in. All
operations return new immutable states.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np
from scipy import linalg

from scripts import config
from scripts.utils import make_rng

logger = logging.getLogger(__name__)


# =============================================================================
#  Errors
# =============================================================================


class GaussianStateError(ValueError):
    """Base class for invalid Gaussian-state inputs"""


class NonSymmetric(GaussianStateError):
    pass


class NonFinite(GaussianStateError):
    pass


class NotPositiveDefinite(GaussianStateError):
    pass


class DimensionMismatch(GaussianStateError):
    pass


class CoordNotFound(GaussianStateError):
    pass


class MixedRepresentation(GaussianStateError):
    pass


class NonUnimodular(GaussianStateError):
    pass


class LabelMismatch(GaussianStateError):
    pass


class BadPartition(GaussianStateError):
    pass


class NotFactorized(GaussianStateError):
    pass


# =============================================================================
#  Types
# =============================================================================


class Role(str, Enum):
    SIGNAL = "signal"
    IDLER = "idler"


class Rep(str, Enum):
    TIME = "time"
    FREQUENCY = "frequency"

    def other(self) -> "Rep":
        return Rep.FREQUENCY if self is Rep.TIME else Rep.TIME


@dataclass(frozen=True)
class CoordLabel:
    photon_id: int
    role: Role
    rep: Rep

    def with_rep(self, rep: Rep) -> "CoordLabel":
        return CoordLabel(self.photon_id, self.role, rep)


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=complex)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class GaussianAmplitude:
    labels: tuple[CoordLabel, ...]
    A: np.ndarray
    b: np.ndarray
    c: complex

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "A", _frozen(self.A))
        object.__setattr__(self, "b", _frozen(self.b))
        object.__setattr__(self, "c", complex(self.c))

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def photon_ids(self) -> tuple[int, ...]:
        return tuple(label.photon_id for label in self.labels)

    def index(self, coord) -> int:
        """position of a coordinate, looked up by photon id (any rep)"""
        photon_id = coord.photon_id if isinstance(coord, CoordLabel) else int(coord)
        for i, label in enumerate(self.labels):
            if label.photon_id == photon_id:
                return i
        raise CoordNotFound(f"photon {photon_id} not in state {self.photon_ids}")

    def label(self, coord) -> CoordLabel:
        return self.labels[self.index(coord)]

    def condition_number(self) -> float:
        """condition number of Re(A), reported and never capped"""
        return float(np.linalg.cond(self.A.real))

    def amplitude(self, points: np.ndarray) -> np.ndarray:
        """psi evaluated at an (m, n) array of coordinate points"""
        x = np.atleast_2d(np.asarray(points, dtype=float))
        quad = np.einsum("mi,ij,mj->m", x, self.A, x)
        return np.exp(-0.5 * quad + x @ self.b + self.c)


@dataclass(frozen=True)
class MeasurementDensity:
    mean: np.ndarray
    covariance: np.ndarray
    labels: tuple[CoordLabel, ...] = field(default=())

    @property
    def std(self) -> np.ndarray:
        return np.sqrt(np.diag(self.covariance))


# =============================================================================
#  Construction
# =============================================================================


def _symmetrize(A: np.ndarray) -> np.ndarray:
    return 0.5 * (A + A.T)


def _real_cholesky(A: np.ndarray):
    try:
        return linalg.cho_factor(A.real, lower=True)
    except linalg.LinAlgError:
        eigs = np.linalg.eigvalsh(A.real)
        raise NotPositiveDefinite(
            f"Re(A) is not positive definite, smallest eigenvalue {eigs.min():.3g}"
        )


def _log_norm(A: np.ndarray, b: np.ndarray) -> float:
    """Re(c) that normalises exp(-1/2 x^T A x + b^T x + c)"""
    n = A.shape[0]
    factor = _real_cholesky(A)
    log_det = 2.0 * np.sum(np.log(np.diag(factor[0])))
    r = b.real
    quad = r @ linalg.cho_solve(factor, r)
    return 0.25 * log_det - 0.25 * n * np.log(np.pi) - 0.5 * quad


def _assemble(labels, A, b, phase: float) -> GaussianAmplitude:
    """symmetrise A, recompute Re(c), keep the tracked global phase"""
    A = _symmetrize(np.asarray(A, dtype=complex))
    b = np.asarray(b, dtype=complex)
    return GaussianAmplitude(labels, A, b, complex(_log_norm(A, b), phase))


def make_state(
    A: np.ndarray, b: np.ndarray, labels: Sequence[CoordLabel]
) -> GaussianAmplitude:
    """Normalised state with Im(c) = 0."""
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    b = np.atleast_1d(np.asarray(b, dtype=complex))
    labels = tuple(labels)
    n = len(labels)
    if A.shape != (n, n) or b.shape != (n,):
        raise DimensionMismatch(
            f"A {A.shape} and b {b.shape} do not match {n} labels"
        )
    if len(set(label.photon_id for label in labels)) != n:
        raise LabelMismatch(f"photon ids must be unique: {labels}")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise NonFinite("A and b must be finite")
    scale = max(1.0, float(np.max(np.abs(A))))
    asym = float(np.max(np.abs(A - A.T))) if n else 0.0
    if asym > config.SYMMETRY_TOL * scale:
        raise NonSymmetric(f"A is not symmetric, max |A - A^T| = {asym:.3g}")
    return _assemble(labels, A, b, 0.0)


# =============================================================================
#  Fourier and displacements
# =============================================================================


def fourier(state: GaussianAmplitude, coord) -> GaussianAmplitude:
    """Flip one coordinate between time and frequency representation.

    Time to frequency uses Psi(w) = int dt exp(iwt) psi(t) / sqrt(2 pi); the reverse
    direction uses exp(-iwt). The Gaussian integral over the old coordinate is done
    in closed form and the new coordinate keeps the old position.
    """
    k = state.index(coord)
    label = state.labels[k]
    s = 1.0 if label.rep is Rep.TIME else -1.0
    A, b = state.A, state.b
    a = A[k, k]
    col = A[:, k].copy()
    col[k] = 0.0

    A_new = A - np.outer(col, col) / a
    A_new[k, :] = s * 1j * col / a
    A_new[:, k] = s * 1j * col / a
    A_new[k, k] = 1.0 / a

    b_new = b - b[k] * col / a
    b_new[k] = s * 1j * b[k] / a

    c_new = state.c + b[k] ** 2 / (2.0 * a) - 0.5 * np.log(a)
    labels = list(state.labels)
    labels[k] = label.with_rep(label.rep.other())
    return _assemble(labels, A_new, b_new, c_new.imag)


def to_rep(state: GaussianAmplitude, coord, rep: Rep) -> GaussianAmplitude:
    """fourier the coordinate only if it is not already in the requested rep"""
    if state.label(coord).rep is rep:
        return state
    return fourier(state, coord)


def _substitute_shift(state: GaussianAmplitude, k: int, shift: float):
    """psi(x - shift e_k) in the coordinate's native rep"""
    A, b = state.A, state.b
    b_new = b + shift * A[:, k]
    c_new = state.c - 0.5 * shift**2 * A[k, k] - shift * b[k]
    return _assemble(state.labels, A, b_new, c_new.imag)


def _linear_phase(state: GaussianAmplitude, k: int, rate: complex):
    b_new = state.b.copy()
    b_new[k] += rate
    return _assemble(state.labels, state.A, b_new, state.c.imag)


def time_shift(state: GaussianAmplitude, coord, tau: float) -> GaussianAmplitude:
    """Delay the coordinate by tau: psi(t - tau), or exp(i w tau) Psi(w)."""
    k = state.index(coord)
    if state.labels[k].rep is Rep.TIME:
        return _substitute_shift(state, k, tau)
    return _linear_phase(state, k, 1j * tau)


def freq_shift(state: GaussianAmplitude, coord, mu: float) -> GaussianAmplitude:
    """Shift the coordinate's frequency by mu: Psi(w - mu), or exp(-i mu t) psi(t)."""
    k = state.index(coord)
    if state.labels[k].rep is Rep.FREQUENCY:
        return _substitute_shift(state, k, mu)
    return _linear_phase(state, k, -1j * mu)


# =============================================================================
#  Coordinate substitution
# =============================================================================


def linear_map(
    state: GaussianAmplitude, L: np.ndarray, coords: Sequence | None = None
) -> GaussianAmplitude:
    """Unitary point transformation |x> -> |Lx> on the listed coordinates.

    psi'(x) = psi(L^-1 x), i.e. A' = L^-T A L^-1 and b' = L^-T b. Requires
    |det L| = 1 and a single shared rep on the mapped coordinates.
    """
    L = np.atleast_2d(np.asarray(L, dtype=float))
    idx = [state.index(c) for c in coords] if coords is not None else list(range(state.n))
    if L.shape != (len(idx), len(idx)):
        raise DimensionMismatch(f"L {L.shape} does not match {len(idx)} coordinates")
    if len({state.labels[i].rep for i in idx}) > 1:
        raise MixedRepresentation(
            f"coordinates {[state.labels[i] for i in idx]} are not in one rep"
        )
    det = np.linalg.det(L)
    if abs(abs(det) - 1.0) > config.UNIMODULAR_TOL:
        raise NonUnimodular(f"|det L| = {abs(det):.15g}, expected 1")

    full = np.eye(state.n)
    full[np.ix_(idx, idx)] = L
    left = np.linalg.solve(full.T, state.A)
    A_new = np.linalg.solve(full.T, left.T)
    b_new = np.linalg.solve(full.T, state.b)
    return _assemble(state.labels, A_new, b_new, state.c.imag)


# =============================================================================
#  Measurement
# =============================================================================


def measurement_density(state: GaussianAmplitude) -> MeasurementDensity:
    """Born-rule density |psi|^2: mean Re(A)^-1 Re(b), covariance (2 Re(A))^-1"""
    factor = _real_cholesky(state.A)
    mean = linalg.cho_solve(factor, state.b.real)
    cov = 0.5 * linalg.cho_solve(factor, np.eye(state.n))
    return MeasurementDensity(mean, _symmetrize(cov), state.labels)


def sample(
    state: GaussianAmplitude, seed: int, stream: int, size: int | None = None
) -> np.ndarray:
    """Draw coordinate outcomes from the state's measurement density.

    Deterministic in (seed, stream) whatever else runs concurrently.
    """
    return sample_density(measurement_density(state), seed, stream, size)


def sample_density(
    density: MeasurementDensity, seed: int, stream: int, size: int | None = None
) -> np.ndarray:
    """draws for one (seed, stream), shared by single trials and whole campaigns"""
    rng = make_rng(seed, stream, config.RNG_DOMAIN_MEASUREMENT)
    return rng.multivariate_normal(
        density.mean, density.covariance, size=size, method="cholesky"
    )


# =============================================================================
#  Overlaps and comparisons
# =============================================================================


def align(reference: GaussianAmplitude, other: GaussianAmplitude) -> GaussianAmplitude:
    """Reorder other's coordinates to reference's and harmonise reps."""
    if sorted(reference.photon_ids) != sorted(other.photon_ids):
        raise LabelMismatch(
            f"photon ids differ: {reference.photon_ids} vs {other.photon_ids}"
        )
    for label in reference.labels:
        if other.label(label).role is not label.role:
            raise LabelMismatch(f"role of photon {label.photon_id} differs")
        other = to_rep(other, label, label.rep)
    order = [other.index(label) for label in reference.labels]
    return GaussianAmplitude(
        reference.labels,
        other.A[np.ix_(order, order)],
        other.b[order],
        other.c,
    )


def log_overlap(s1: GaussianAmplitude, s2: GaussianAmplitude) -> complex:
    """log <s1|s2> as a closed-form complex Gaussian integral."""
    s2 = align(s1, s2)
    M = np.conj(s1.A) + s2.A
    v = np.conj(s1.b) + s2.b
    log_det_half = 0.5 * np.sum(np.log(np.linalg.eigvals(M)))
    log_value = (
        0.5 * s1.n * np.log(2.0 * np.pi)
        - log_det_half
        + 0.5 * v @ np.linalg.solve(M, v)
        + np.conj(s1.c)
        + s2.c
    )
    return complex(log_value)


def overlap(s1: GaussianAmplitude, s2: GaussianAmplitude) -> complex:
    return complex(np.exp(log_overlap(s1, s2)))


def fidelity(s1: GaussianAmplitude, s2: GaussianAmplitude) -> float:
    return abs(overlap(s1, s2)) ** 2


def compare(s1: GaussianAmplitude, s2: GaussianAmplitude) -> dict:
    """Differences in A, b and normalisation, plus the global phase offset.

    Phase is reported, never asserted.
    """
    s2 = align(s1, s2)
    scale_A = max(1.0, float(np.max(np.abs(s1.A))))
    scale_b = max(1.0, float(np.max(np.abs(s1.b)))) if s1.n else 1.0
    result = {
        "max_dA": float(np.max(np.abs(s1.A - s2.A))) / scale_A,
        "max_db": float(np.max(np.abs(s1.b - s2.b))) / scale_b,
        "norm_gap": abs(s1.c.real - s2.c.real),
        "phase": float(np.angle(np.exp(1j * (s2.c.imag - s1.c.imag)))),
    }
    logger.debug("state comparison: %s", result)
    return result


def equal_up_to_phase(
    s1: GaussianAmplitude, s2: GaussianAmplitude, tol: float = config.STRUCTURAL_TOL
) -> bool:
    diff = compare(s1, s2)
    return max(diff["max_dA"], diff["max_db"], diff["norm_gap"]) <= tol


# =============================================================================
#  Factorisation
# =============================================================================


def _partition_indices(state: GaussianAmplitude, partition) -> tuple[list, list]:
    first, second = ([state.index(c) for c in block] for block in partition)
    if set(first) & set(second) or sorted(first + second) != list(range(state.n)):
        raise BadPartition(f"{partition} does not split {state.photon_ids} disjointly")
    return first, second


def cross_coupling(state: GaussianAmplitude, partition) -> float:
    """max |A_ij| over i, j in different blocks; 0 iff the state is a product"""
    first, second = _partition_indices(state, partition)
    if not first or not second:
        return 0.0
    return float(np.max(np.abs(state.A[np.ix_(first, second)])))


def factor_out(
    state: GaussianAmplitude, coords: Iterable, tol: float = config.STRUCTURAL_TOL
) -> GaussianAmplitude:
    """Marginal pure state on a block that is decoupled from the rest."""
    keep = [state.index(c) for c in coords]
    rest = [i for i in range(state.n) if i not in keep]
    scale = max(1.0, float(np.max(np.abs(state.A))))
    coupling = float(np.max(np.abs(state.A[np.ix_(keep, rest)]))) if rest else 0.0
    if coupling > tol * scale:
        raise NotFactorized(f"block {keep} couples to the rest at {coupling:.3g}")
    labels = [state.labels[i] for i in keep]
    return _assemble(labels, state.A[np.ix_(keep, keep)], state.b[keep], 0.0)


def product_state(*states: GaussianAmplitude) -> GaussianAmplitude:
    """tensor product of states on disjoint photons"""
    labels = [label for state in states for label in state.labels]
    if len({label.photon_id for label in labels}) != len(labels):
        raise LabelMismatch("tensor factors share photon ids")
    A = linalg.block_diag(*[state.A for state in states])
    b = np.concatenate([state.b for state in states])
    phase = sum(state.c.imag for state in states)
    return _assemble(labels, A, b, phase)
