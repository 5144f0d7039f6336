"""Ground-truth joint probabilities, correlations, and CHSH evaluation.

Everything here is driven by the two Schmidt weights: for a field in
two-term Schmidt form the joint detection amplitudes under independent
basis rotations by a (polarization) and b (function space) are real
combinations of cos/sin factors, e.g.
amp_11 = kappa1 cos(a) cos(b) + kappa2 sin(a) sin(b), and the joint
probabilities are their squares.  A seeded Monte-Carlo sampler over local
hidden-variable response models demonstrates the classical |B| <= 2 bound
for comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .ensemble import SchmidtDecomposition, inner
from .errors import DomainError, ModelContractError
from .optics import FunctionBasis, LabBasis, rotate_function_basis, rotate_lab_basis

__all__ = [
    "AngleSettings",
    "LhvModel",
    "joint_probability_kappa",
    "joint_probability_direct",
    "joint_probability_projected",
    "correlation",
    "correlation_closed_form",
    "marginal_A",
    "chsh",
    "chsh_closed_form_max",
    "max_chsh",
    "lhv_correlation",
    "lhv_chsh",
    "cosine_response_model",
    "sign_response_model",
    "SHIPPED_LHV_MODELS",
]


@dataclass(frozen=True)
class AngleSettings:
    """The four rotation angles (a, a', b, b') of a CHSH evaluation."""

    a: float
    a_prime: float
    b: float
    b_prime: float

    def __post_init__(self):
        for v in (self.a, self.a_prime, self.b, self.b_prime):
            if not math.isfinite(v):
                raise DomainError("angles must be finite")

    def pairs(self) -> tuple[tuple[float, float], ...]:
        """The four (a, b) combinations entering the CHSH sum, in order
        (a,b), (a,b'), (a',b), (a',b')."""
        return (
            (self.a, self.b),
            (self.a, self.b_prime),
            (self.a_prime, self.b),
            (self.a_prime, self.b_prime),
        )


def _amplitude(kappa1: float, kappa2: float, a: float, b: float, k: int, l: int) -> float:
    ca, sa = math.cos(a), math.sin(a)
    cb, sb = math.cos(b), math.sin(b)
    if (k, l) == (1, 1):
        return kappa1 * ca * cb + kappa2 * sa * sb
    if (k, l) == (1, 2):
        return kappa1 * ca * sb - kappa2 * sa * cb
    if (k, l) == (2, 1):
        return kappa1 * sa * cb - kappa2 * ca * sb
    if (k, l) == (2, 2):
        return kappa1 * sa * sb + kappa2 * ca * cb
    raise DomainError(f"outcome indices k, l must each be 1 or 2, got ({k}, {l})")


def joint_probability_kappa(
    kappa1: float, kappa2: float, a: float, b: float, k: int, l: int
) -> float:
    """Closed-form joint probability P_kl(a, b) from Schmidt weights alone."""
    return _amplitude(kappa1, kappa2, a, b, k, l) ** 2


def joint_probability_direct(
    sd: SchmidtDecomposition, a: float, b: float, k: int, l: int
) -> float:
    """Closed-form joint probability P_kl(a, b) of a Schmidt-form field.

    Probability of finding the field in the k-th rotated polarization basis
    vector together with the l-th rotated function basis vector.  The four
    values at any (a, b) are nonnegative and sum to 1.
    """
    return joint_probability_kappa(sd.kappa1, sd.kappa2, a, b, k, l)


def joint_probability_projected(
    ensemble, sd: SchmidtDecomposition, a: float, b: float, k: int, l: int
) -> float:
    """Empirical joint probability by direct two-space projection.

    Projects every realization onto the k-th rotated polarization vector and
    overlaps the resulting amplitude sequence with the l-th rotated
    function-space vector.  Independent of the interferometric measurement
    path; used for cross-validation.
    """
    if k not in (1, 2) or l not in (1, 2):
        raise DomainError(f"outcome indices k, l must each be 1 or 2, got ({k}, {l})")
    lab = rotate_lab_basis(LabBasis(sd.u1, sd.u2), a)
    fun = rotate_function_basis(FunctionBasis(sd.f1, sd.f2), b)
    u = lab.v1 if k == 1 else lab.v2
    f = fun.g1 if l == 1 else fun.g2
    amp_seq = ensemble.realizations @ u.conj()
    amp = inner(f, amp_seq) / math.sqrt(sd.intensity)
    return abs(amp) ** 2


def correlation(sd: SchmidtDecomposition, a: float, b: float) -> float:
    """Joint correlation C(a, b) = P11 - P12 - P21 + P22, in [-1, 1]."""
    return (
        joint_probability_direct(sd, a, b, 1, 1)
        - joint_probability_direct(sd, a, b, 1, 2)
        - joint_probability_direct(sd, a, b, 2, 1)
        + joint_probability_direct(sd, a, b, 2, 2)
    )


def correlation_closed_form(kappa1: float, kappa2: float, a, b):
    """cos(2a) cos(2b) + 2 kappa1 kappa2 sin(2a) sin(2b); broadcasts."""
    return np.cos(2 * np.asarray(a)) * np.cos(2 * np.asarray(b)) + (
        2.0 * kappa1 * kappa2
    ) * np.sin(2 * np.asarray(a)) * np.sin(2 * np.asarray(b))


def marginal_A(sd: SchmidtDecomposition, a: float) -> float:
    """Polarization-side marginal A(a) = P(u1^a) - P(u2^a).

    Equals (kappa1^2 - kappa2^2) cos(2a), i.e. the Stokes S1 parameter in
    the basis rotated by a; varies continuously in [-1, 1].
    """
    p1 = joint_probability_direct(sd, a, 0.0, 1, 1) + joint_probability_direct(
        sd, a, 0.0, 1, 2
    )
    p2 = joint_probability_direct(sd, a, 0.0, 2, 1) + joint_probability_direct(
        sd, a, 0.0, 2, 2
    )
    return p1 - p2


def chsh(sd: SchmidtDecomposition, settings: AngleSettings) -> float:
    """CHSH combination C(a,b) - C(a,b') + C(a',b) + C(a',b')."""
    return (
        correlation(sd, settings.a, settings.b)
        - correlation(sd, settings.a, settings.b_prime)
        + correlation(sd, settings.a_prime, settings.b)
        + correlation(sd, settings.a_prime, settings.b_prime)
    )


def chsh_closed_form_max(kappa1: float, kappa2: float) -> float:
    """Maximum attainable CHSH value 2 sqrt(1 + 4 kappa1^2 kappa2^2)."""
    return 2.0 * math.sqrt(1.0 + 4.0 * kappa1**2 * kappa2**2)


def _golden_max(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-9):
    """Golden-section maximization of a unimodal function on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
        else:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
    x = 0.5 * (a + b)
    return x, f(x)


_GRID_STEP = math.pi / 96.0


def max_chsh(kappa1: float, kappa2: float) -> tuple[float, AngleSettings]:
    """Maximize the CHSH value over all four angles.

    Coarse grid search with step pi/96 per angle (using the closed-form
    correlation, decomposed so the 4-angle maximum costs only a 3-d table),
    followed by coordinate-wise golden-section refinement.  The returned
    value matches 2 sqrt(1 + 4 kappa1^2 kappa2^2) to well below 1e-6.
    """
    if kappa1 < 0 or kappa2 < 0 or abs(kappa1**2 + kappa2**2 - 1.0) > 1e-6:
        raise DomainError("require kappa1, kappa2 >= 0 with kappa1^2 + kappa2^2 = 1")
    m = 96
    grid = np.arange(m) * _GRID_STEP
    c = correlation_closed_form(kappa1, kappa2, grid[:, None], grid[None, :])

    # B = [C(a,b) - C(a,b')] + [C(a',b) + C(a',b')]: maximize each bracket
    # over its own angle for every (b, b') pair.
    diff = c[:, :, None] - c[:, None, :]  # (a, b, b')
    summ = c[:, :, None] + c[:, None, :]  # (a', b, b')
    best_a = diff.argmax(axis=0)
    best_ap = summ.argmax(axis=0)
    totals = diff.max(axis=0) + summ.max(axis=0)
    bi, bpi = np.unravel_index(int(totals.argmax()), totals.shape)
    x = [
        float(grid[best_a[bi, bpi]]),
        float(grid[best_ap[bi, bpi]]),
        float(grid[bi]),
        float(grid[bpi]),
    ]

    def value(angles) -> float:
        s = AngleSettings(*angles)
        k1k2 = 2.0 * kappa1 * kappa2

        def corr(a, b):
            return math.cos(2 * a) * math.cos(2 * b) + k1k2 * math.sin(2 * a) * math.sin(2 * b)

        return (
            corr(s.a, s.b) - corr(s.a, s.b_prime) + corr(s.a_prime, s.b) + corr(s.a_prime, s.b_prime)
        )

    best = value(x)
    for _ in range(100):
        previous = best
        for i in range(4):

            def along(t, i=i):
                trial = list(x)
                trial[i] = t
                return value(trial)

            xi, vi = _golden_max(along, x[i] - _GRID_STEP, x[i] + _GRID_STEP)
            if vi > best:
                x[i], best = xi, vi
        if best - previous < 1e-12:
            break
    return best, AngleSettings(*x)


@dataclass(frozen=True)
class LhvModel:
    """Local hidden-variable response model.

    ``outcome_a(angle, lam)`` and ``outcome_b(angle, lam)`` map a setting
    angle and an array of hidden-variable samples to response values in
    [-1, 1] (vectorized over ``lam``).  ``lambda_sampler(rng, size)`` draws
    hidden-variable samples.
    """

    outcome_a: Callable[[float, np.ndarray], np.ndarray]
    outcome_b: Callable[[float, np.ndarray], np.ndarray]
    lambda_sampler: Callable[[np.random.Generator, int], np.ndarray]


def _bounded(values: np.ndarray, label: str) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.size and np.max(np.abs(values)) > 1.0 + 1e-9:
        raise ModelContractError(f"{label} response left [-1, 1]")
    return values


def lhv_correlation(
    model: LhvModel, a: float, b: float, n_samples: int, seed
) -> float:
    """Monte-Carlo estimate of the correlation of a hidden-variable model.

    Samples lambda from the model distribution and averages
    outcome_a(a, lambda) * outcome_b(b, lambda).  Raises
    ModelContractError if either response leaves [-1, 1] on the sample.
    """
    if n_samples < 1:
        raise DomainError("need at least one sample")
    rng = np.random.default_rng(seed)
    lam = model.lambda_sampler(rng, int(n_samples))
    va = _bounded(model.outcome_a(a, lam), "outcome_a")
    vb = _bounded(model.outcome_b(b, lam), "outcome_b")
    return float(np.mean(va * vb))


def lhv_chsh(model: LhvModel, settings: AngleSettings, n_samples: int, seed: int) -> float:
    """CHSH value of a hidden-variable model, one independent Monte-Carlo
    run per correlation (as in a real four-run experiment)."""
    c = [
        lhv_correlation(model, a, b, n_samples, (seed, i))
        for i, (a, b) in enumerate(settings.pairs())
    ]
    return c[0] - c[1] + c[2] + c[3]


def cosine_response_model() -> LhvModel:
    """Continuous-response demo model: A = cos 2(a - lam), B = cos 2(b - lam)
    with lam uniform on [0, pi).  Analytic correlation: cos(2(a-b))/2."""
    return LhvModel(
        outcome_a=lambda a, lam: np.cos(2.0 * (a - lam)),
        outcome_b=lambda b, lam: np.cos(2.0 * (b - lam)),
        lambda_sampler=lambda rng, size: rng.uniform(0.0, math.pi, size),
    )


def sign_response_model() -> LhvModel:
    """Deterministic +/-1 demo model: A = sign(cos 2(a - lam)), same for B,
    lam uniform on [0, pi).  Produces the classic sawtooth correlation."""

    def _sign(angle, lam):
        v = np.sign(np.cos(2.0 * (angle - lam)))
        v[v == 0.0] = 1.0
        return v

    return LhvModel(
        outcome_a=_sign,
        outcome_b=_sign,
        lambda_sampler=lambda rng, size: rng.uniform(0.0, math.pi, size),
    )


SHIPPED_LHV_MODELS = {
    "cosine": cosine_response_model,
    "sign": sign_response_model,
}
