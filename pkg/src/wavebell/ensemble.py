"""Finite ensembles of stochastic two-component optical fields.

A partially polarized beam is modelled by N independent realizations of the
transverse field (Ex, Ey).  Function-space quantities use the ensemble inner
product <f|g> = (1/N) sum_n conj(f_n) g_n, so second-order statistics
(coherence matrix, Stokes parameters, degree of polarization, Schmidt
structure) are all computable from finite data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DegenerateFieldError, DomainError

__all__ = [
    "FieldEnsemble",
    "CoherenceMatrix",
    "StokesVector",
    "SchmidtDecomposition",
    "inner",
    "intensity",
    "synthesize_partially_polarized",
    "synthesize_schmidt_form",
    "coherence_matrix",
    "stokes",
    "dop",
    "kappa_from_dop",
    "schmidt",
    "tomography",
    "polarization_report",
    "save_ensemble_csv",
    "load_ensemble_csv",
]

#: Column header used by the ensemble CSV serialization.
ENSEMBLE_CSV_COLUMNS = ("index", "re_Ex", "im_Ex", "re_Ey", "im_Ey")


@dataclass(frozen=True, eq=False)
class FieldEnsemble:
    """N stochastic realizations of a two-component complex field.

    ``realizations`` has shape (n, 2) with columns (Ex, Ey), in arbitrary
    field units.  ``seed`` records provenance when the ensemble was drawn
    from a generator; it is None for derived or deserialized ensembles.
    """

    realizations: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        arr = np.asarray(self.realizations, dtype=np.complex128)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise DomainError("realizations must be an (n, 2) complex array")
        if arr.shape[0] < 2:
            raise DomainError("an ensemble needs at least 2 realizations")
        object.__setattr__(self, "realizations", arr)

    @property
    def n(self) -> int:
        return self.realizations.shape[0]

    @cached_property
    def second_moments(self) -> np.ndarray:
        """Sample matrix J_pq = (1/N) sum_n conj(Ep) Eq, cached per ensemble.

        Mean powers of linearly transformed copies of the ensemble are
        quadratic forms in this matrix, which lets repeated ideal-optics
        intensity evaluations skip the per-realization pass.
        """
        r = self.realizations
        j = r.conj().T @ r / self.n
        return (j + j.conj().T) / 2.0


@dataclass(frozen=True, eq=False)
class CoherenceMatrix:
    """2x2 Hermitian second-moment matrix J_pq = <Ep* Eq> (intensity units)."""

    j: np.ndarray

    def __post_init__(self):
        j = np.asarray(self.j, dtype=np.complex128)
        if j.shape != (2, 2):
            raise DomainError("coherence matrix must be 2x2")
        scale = max(float(np.abs(j).max()), 1.0)
        if np.abs(j - j.conj().T).max() > 1e-10 * scale:
            raise DomainError("coherence matrix must be Hermitian")
        if np.linalg.eigvalsh(j).min() < -1e-10 * scale:
            raise DomainError("coherence matrix must be positive semidefinite")
        object.__setattr__(self, "j", j)


@dataclass(frozen=True)
class StokesVector:
    """Stokes parameters (S0, S1, S2, S3) in intensity units."""

    s0: float
    s1: float
    s2: float
    s3: float

    def __post_init__(self):
        if not all(math.isfinite(s) for s in (self.s0, self.s1, self.s2, self.s3)):
            raise DomainError("Stokes parameters must be finite")
        if self.s0 < 0:
            raise DomainError("S0 must be nonnegative")
        norm2 = self.s1**2 + self.s2**2 + self.s3**2
        if norm2 > self.s0**2 + 1e-9 * max(self.s0**2, 1.0):
            raise DomainError("polarized part exceeds total intensity")


@dataclass(frozen=True, eq=False)
class SchmidtDecomposition:
    """Two-term biorthogonal decomposition of a field ensemble.

    The intensity-normalized field decomposes as
    kappa1 * u1 (x) f1 + kappa2 * u2 (x) f2 with kappa1 >= kappa2 >= 0,
    kappa1^2 + kappa2^2 = 1.  u1, u2 are orthonormal polarization (lab-space)
    vectors; f1, f2 are orthonormal N-component function-space vectors under
    the (1/N)-weighted inner product.
    """

    kappa1: float
    kappa2: float
    u1: np.ndarray
    u2: np.ndarray
    f1: np.ndarray
    f2: np.ndarray
    intensity: float

    def __post_init__(self):
        if not (self.kappa1 >= self.kappa2 >= 0):
            raise DomainError("require kappa1 >= kappa2 >= 0")
        if abs(self.kappa1**2 + self.kappa2**2 - 1.0) > 1e-12:
            raise DomainError("kappa1^2 + kappa2^2 must equal 1")
        for name in ("u1", "u2", "f1", "f2"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.complex128))
        if abs(np.vdot(self.u1, self.u2)) > 1e-12:
            raise DomainError("u1, u2 must be orthogonal")
        if abs(inner(self.f1, self.f2)) > 1e-10:
            raise DomainError("f1, f2 must be orthogonal within 1e-10")

    @property
    def dop(self) -> float:
        """Degree of polarization implied by the Schmidt weights."""
        return self.kappa1**2 - self.kappa2**2


def inner(f: np.ndarray, g: np.ndarray) -> complex:
    """Ensemble inner product <f|g> = (1/N) sum_n conj(f_n) g_n."""
    f = np.asarray(f)
    g = np.asarray(g)
    if f.shape != g.shape:
        raise DomainError("inner product requires equal-length vectors")
    return complex(np.vdot(f, g) / f.shape[0])


def intensity(ensemble: FieldEnsemble) -> float:
    """Ensemble-mean power (1/N) sum_n (|Ex|^2 + |Ey|^2)."""
    return float(np.trace(ensemble.second_moments).real)


def synthesize_partially_polarized(
    dop: float, intensity: float, n: int, seed: int
) -> FieldEnsemble:
    """Draw a partially polarized thermal-like ensemble.

    Each realization has independent circular complex Gaussian amplitudes
    along x and y with mean-square values intensity*(1 +/- dop)/2, so the
    expected degree of polarization equals ``dop`` with the polarized part
    along x.  Generation uses a counter-based generator keyed by ``seed``;
    identical (dop, intensity, n, seed) give bit-identical ensembles.

    Parameters
    ----------
    dop : float
        Requested degree of polarization, in [0, 1].
    intensity : float
        Expected ensemble-mean power, > 0.
    n : int
        Number of realizations, >= 2.
    seed : int
        Generator seed.
    """
    if not 0.0 <= dop <= 1.0:
        raise DomainError(f"dop must lie in [0, 1], got {dop}")
    if intensity <= 0:
        raise DomainError(f"intensity must be positive, got {intensity}")
    if n < 2:
        raise DomainError(f"need n >= 2 realizations, got {n}")
    rng = np.random.Generator(np.random.Philox(seed))
    z = rng.standard_normal((int(n), 4))
    # var(Re) = var(Im) = ms/2 so that E|E|^2 = ms
    sx = math.sqrt(intensity * (1.0 + dop) / 4.0)
    sy = math.sqrt(intensity * (1.0 - dop) / 4.0)
    e = np.empty((int(n), 2), dtype=np.complex128)
    e[:, 0] = sx * (z[:, 0] + 1j * z[:, 1])
    e[:, 1] = sy * (z[:, 2] + 1j * z[:, 3])
    return FieldEnsemble(e, seed=seed)


def synthesize_schmidt_form(
    kappa1: float,
    kappa2: float,
    intensity: float = 1.0,
    n: int = 1024,
    seed: int = 0,
    u1: np.ndarray | None = None,
    u2: np.ndarray | None = None,
) -> FieldEnsemble:
    """Build an ensemble that is exactly in two-term Schmidt form.

    The function-space vectors are random complex Gaussian sequences made
    exactly orthonormal by Gram-Schmidt under the (1/N) inner product, so
    the sample coherence matrix equals intensity * (kappa1^2 u1 u1+ +
    kappa2^2 u2 u2+) to machine precision.  Useful as an analytic reference
    field: every downstream identity holds at float accuracy instead of
    Monte-Carlo accuracy.
    """
    if not (kappa1 >= 0 and kappa2 >= 0):
        raise DomainError("Schmidt weights must be nonnegative")
    if abs(kappa1**2 + kappa2**2 - 1.0) > 1e-9:
        raise DomainError("kappa1^2 + kappa2^2 must equal 1")
    if intensity <= 0:
        raise DomainError("intensity must be positive")
    if n < 2:
        raise DomainError("need n >= 2 realizations")
    if u1 is None or u2 is None:
        u1 = np.array([1.0, 0.0], dtype=np.complex128)
        u2 = np.array([0.0, 1.0], dtype=np.complex128)
    else:
        u1 = np.asarray(u1, dtype=np.complex128)
        u2 = np.asarray(u2, dtype=np.complex128)
        if abs(np.vdot(u1, u1) - 1) > 1e-12 or abs(np.vdot(u2, u2) - 1) > 1e-12:
            raise DomainError("u1, u2 must be unit vectors")
        if abs(np.vdot(u1, u2)) > 1e-12:
            raise DomainError("u1, u2 must be orthogonal")

    rng = np.random.Generator(np.random.Philox(seed))
    g = rng.standard_normal((int(n), 4))
    f1 = g[:, 0] + 1j * g[:, 1]
    f2 = g[:, 2] + 1j * g[:, 3]
    f1 = f1 / math.sqrt(inner(f1, f1).real)
    f2 = f2 - inner(f1, f2) * f1
    f2 = f2 / math.sqrt(inner(f2, f2).real)

    amp = math.sqrt(intensity)
    e = amp * (kappa1 * np.outer(f1, u1) + kappa2 * np.outer(f2, u2))
    return FieldEnsemble(e, seed=seed)


def coherence_matrix(ensemble: FieldEnsemble) -> CoherenceMatrix:
    """Sample second-moment matrix J_pq = (1/N) sum_n conj(Ep) Eq."""
    return CoherenceMatrix(ensemble.second_moments)


def stokes(j: CoherenceMatrix) -> StokesVector:
    """Stokes parameters of a coherence matrix.

    Convention: S0 = Jxx + Jyy, S1 = Jxx - Jyy, S2 = 2 Re Jxy,
    S3 = 2 Im Jxy (right-circular positive).
    """
    m = j.j
    return StokesVector(
        s0=float(m[0, 0].real + m[1, 1].real),
        s1=float(m[0, 0].real - m[1, 1].real),
        s2=float(2.0 * m[0, 1].real),
        s3=float(2.0 * m[0, 1].imag),
    )


def dop(s: StokesVector) -> float:
    """Degree of polarization sqrt(S1^2 + S2^2 + S3^2) / S0."""
    if s.s0 <= 0:
        raise DomainError("degree of polarization requires S0 > 0")
    return math.sqrt(s.s1**2 + s.s2**2 + s.s3**2) / s.s0


def kappa_from_dop(dop: float) -> tuple[float, float]:
    """Schmidt weights (kappa1, kappa2) = sqrt((1 +/- DOP)/2)."""
    if not 0.0 <= dop <= 1.0:
        raise DomainError(f"dop must lie in [0, 1], got {dop}")
    return math.sqrt((1.0 + dop) / 2.0), math.sqrt((1.0 - dop) / 2.0)


def _fix_phase(v: np.ndarray) -> np.ndarray:
    """Rotate a vector's global phase so its largest component is real positive."""
    i = int(np.argmax(np.abs(v)))
    p = v[i]
    if abs(p) == 0.0:
        return v
    return v * (p.conjugate() / abs(p))


def schmidt(ensemble: FieldEnsemble) -> SchmidtDecomposition:
    """Schmidt decomposition of an ensemble across lab and function space.

    Diagonalizes the sample coherence matrix; u1, u2 are its eigenvectors in
    descending-eigenvalue order with kappa_i = sqrt(lambda_i / I), and f_i is
    the normalized sequence of per-realization amplitudes along u_i.  The
    empirical eigenbasis makes f1, f2 exactly uncorrelated in the sample, so
    |<f1|f2>| vanishes at float accuracy.

    For a nearly unpolarized field (DOP < 1e-12) the eigenbasis is arbitrary;
    (1, 0), (0, 1) is used as a deterministic tie-break.

    Raises
    ------
    DegenerateFieldError
        If the ensemble carries no power.
    """
    r = ensemble.realizations
    total = intensity(ensemble)
    if total <= 0.0:
        raise DegenerateFieldError("zero-intensity ensemble has no Schmidt form")

    jmat = coherence_matrix(ensemble).j
    # The amplitudes along u are c = E @ conj(u), whose cross-moments are
    # <c_i* c_j> = u_j+ (J^T) u_i with J_pq = <Ep* Eq>; diagonalizing J^T
    # (same spectrum as J) is what makes f1, f2 uncorrelated in-sample.
    w, vecs = np.linalg.eigh(jmat.T)
    lam = np.maximum(w[::-1], 0.0)
    u = vecs[:, ::-1]

    if (lam[0] - lam[1]) / total < 1e-12:
        u1 = np.array([1.0, 0.0], dtype=np.complex128)
        u2 = np.array([0.0, 1.0], dtype=np.complex128)
    else:
        u1 = _fix_phase(u[:, 0])
        u2 = _fix_phase(u[:, 1])

    kappa1 = math.sqrt(lam[0] / total)
    kappa2 = math.sqrt(lam[1] / total)

    c1 = r @ u1.conj()
    c2 = r @ u2.conj()
    f1 = c1 / (math.sqrt(total) * kappa1)
    if kappa2 > 0.0:
        f2 = c2 / (math.sqrt(total) * kappa2)
    else:
        # Fully polarized field: the second function-space direction never
        # appears in the data, so pick any unit vector orthogonal to f1.
        n = ensemble.n
        f2 = np.zeros(n, dtype=np.complex128)
        f2[0] = math.sqrt(n)
        f2 = f2 - inner(f1, f2) * f1
        if inner(f2, f2).real < 1e-12:
            f2 = np.zeros(n, dtype=np.complex128)
            f2[1] = math.sqrt(n)
            f2 = f2 - inner(f1, f2) * f1
        f2 = f2 / math.sqrt(inner(f2, f2).real)
    return SchmidtDecomposition(
        kappa1=kappa1, kappa2=kappa2, u1=u1, u2=u2, f1=f1, f2=f2, intensity=total
    )


def tomography(ensemble: FieldEnsemble) -> StokesVector:
    """Estimate Stokes parameters from six projective intensity measurements.

    Classic polarimetry sequence: horizontal/vertical, diagonal/antidiagonal
    polarizer projections, then a quarter-wave plate at pi/4 followed by
    horizontal/vertical projections for the circular pair.  On noiseless
    elements this reproduces the direct moment computation exactly.
    """
    from . import optics

    rt2 = math.sqrt(2.0)
    i_h = intensity(optics.apply_polarizer(ensemble, np.array([1.0, 0.0])))
    i_v = intensity(optics.apply_polarizer(ensemble, np.array([0.0, 1.0])))
    i_d = intensity(optics.apply_polarizer(ensemble, np.array([1.0, 1.0]) / rt2))
    i_a = intensity(optics.apply_polarizer(ensemble, np.array([1.0, -1.0]) / rt2))
    circ = optics.waveplate(ensemble, "quarter", math.pi / 4.0)
    i_r = intensity(optics.apply_polarizer(circ, np.array([1.0, 0.0])))
    i_l = intensity(optics.apply_polarizer(circ, np.array([0.0, 1.0])))
    return StokesVector(s0=i_h + i_v, s1=i_h - i_v, s2=i_d - i_a, s3=i_r - i_l)


def _complex_pairs(v: np.ndarray) -> list[list[float]]:
    return [[float(z.real), float(z.imag)] for z in np.asarray(v)]


def polarization_report(ensemble: FieldEnsemble) -> dict:
    """Source characterization as a JSON-ready dict.

    Keys: s0, s1, s2, s3, dop, kappa1, kappa2, u1, u2.  Complex vectors are
    encoded as [[re, im], [re, im]] pairs.
    """
    s = tomography(ensemble)
    d = dop(s)
    k1, k2 = kappa_from_dop(d)
    sd = schmidt(ensemble)
    return {
        "s0": s.s0,
        "s1": s.s1,
        "s2": s.s2,
        "s3": s.s3,
        "dop": d,
        "kappa1": k1,
        "kappa2": k2,
        "u1": _complex_pairs(sd.u1),
        "u2": _complex_pairs(sd.u2),
    }


def save_ensemble_csv(ensemble: FieldEnsemble, path) -> None:
    """Write realizations to CSV with columns index,re_Ex,im_Ex,re_Ey,im_Ey."""
    r = ensemble.realizations
    table = np.column_stack(
        [np.arange(ensemble.n), r[:, 0].real, r[:, 0].imag, r[:, 1].real, r[:, 1].imag]
    )
    np.savetxt(
        path,
        table,
        delimiter=",",
        header=",".join(ENSEMBLE_CSV_COLUMNS),
        comments="",
        fmt=["%d", "%.17g", "%.17g", "%.17g", "%.17g"],
    )


def load_ensemble_csv(path) -> FieldEnsemble:
    """Read an ensemble written by :func:`save_ensemble_csv`."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header.split(",") != list(ENSEMBLE_CSV_COLUMNS):
            raise DomainError(f"unexpected ensemble CSV header: {header!r}")
        table = np.loadtxt(fh, delimiter=",", ndmin=2)
    e = np.empty((table.shape[0], 2), dtype=np.complex128)
    e[:, 0] = table[:, 1] + 1j * table[:, 2]
    e[:, 1] = table[:, 3] + 1j * table[:, 4]
    return FieldEnsemble(e, seed=None)
