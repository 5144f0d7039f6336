"""End-to-end simulation of the interferometric Bell measurement.

The beam is split 50:50 into a test arm and an auxiliary arm.  The test arm
passes a polarizer at angle ``a``.  The auxiliary arm passes a stripping
polarizer at angle ``s`` (chosen so the transmitted beam carries a single
rotated function-space component) and then the same polarizer angle ``a``.
Recombining the arms and reading three intensities at one detector (both
arms open, each arm alone) determines the joint probability of one
polarization outcome and one function-space outcome:

    P = (2 I_total - I_aux - I_test)^2 / (4 I I_aux)

where I_test and I_aux are the arm intensities (twice the shuttered
detector readings, to undo the final 50:50 loss), I_total is the
both-arms-open reading, and I is the test-beam intensity entering the arm.
Squaring makes the extraction insensitive to the sign of the interference
term.

An optional noise model injects polarizer leakage, additive detector noise,
and auxiliary-arm phase jitter; all noise streams are derived from explicit
seeds so every simulated measurement is reproducible.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .bell import AngleSettings, joint_probability_kappa, max_chsh
from .ensemble import (
    FieldEnsemble,
    SchmidtDecomposition,
    dop,
    intensity,
    kappa_from_dop,
    schmidt,
    synthesize_partially_polarized,
    tomography,
)
from .errors import DomainError, ExtractionError, StrippedBeamError
from .optics import (
    LabBasis,
    polarizer_axis,
    polarizer_matrix,
    stripping_angle,
    stripping_angle_orthogonal,
)

__all__ = [
    "NoiseModel",
    "IntensityTriple",
    "SettingResult",
    "BellReport",
    "ProtocolConfig",
    "CorrelationCurve",
    "measure_intensities",
    "extract_probability",
    "measure_joint_probability",
    "measure_correlation",
    "scan_correlation",
    "run_bell_protocol",
    "bootstrap_error",
]

# Header of the correlation-curve CSV serialization.
CURVE_CSV_HEADER = "a_rad,b_rad,p11,p12,p21,p22,c,c_err"

# Below this second Schmidt weight the stripping polarizer would transmit
# essentially nothing; the protocol falls back to the closed-form path.
_KAPPA2_FLOOR = 1e-6

# Fixed tag separating bootstrap index streams from measurement streams.
_BOOT_TAG = 715


@dataclass(frozen=True)
class NoiseModel:
    """Apparatus imperfections, all zero for the ideal instrument.

    extinction_ratio : power fraction leaking through a polarizer's blocked
        axis.
    detector_noise : std of additive Gaussian noise per detector reading,
        relative to the source intensity.
    phase_jitter : std (radians) of the auxiliary-arm phase, drawn per
        realization and per measurement.
    """

    extinction_ratio: float = 0.0
    detector_noise: float = 0.0
    phase_jitter: float = 0.0

    def __post_init__(self):
        for name in ("extinction_ratio", "detector_noise", "phase_jitter"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise DomainError(f"{name} must be finite and >= 0, got {v}")

    @property
    def is_ideal(self) -> bool:
        return self.extinction_ratio == 0.0 and self.detector_noise == 0.0 and self.phase_jitter == 0.0

    def to_json_dict(self) -> dict:
        return {
            "extinction_ratio": self.extinction_ratio,
            "detector_noise": self.detector_noise,
            "phase_jitter": self.phase_jitter,
        }


@dataclass(frozen=True)
class IntensityTriple:
    """Shutter-sequenced detector results for one angle setting.

    i_total is the detector reading with both arms open; i_test and i_aux
    are the arm intensities inferred with the other arm shuttered (twice
    the raw reading, undoing the recombiner's 50:50 loss).
    """

    i_total: float
    i_test: float
    i_aux: float

    def __post_init__(self):
        for name in ("i_total", "i_test", "i_aux"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise DomainError(f"{name} must be finite and >= 0, got {v}")


def _mean_power(fields: np.ndarray) -> float:
    return float(np.sum(fields.real**2 + fields.imag**2) / fields.shape[0])


def _chain_power(chain: np.ndarray, moments: np.ndarray) -> float:
    # mean ||M E||^2 = sum_pq (M+ M)_pq J_pq for J_pq = <Ep* Eq>
    return float(np.sum((chain.conj().T @ chain) * moments).real)


def measure_intensities(
    ensemble: FieldEnsemble,
    a: float,
    s: float,
    noise: NoiseModel = NoiseModel(),
    seed=0,
    basis: LabBasis | None = None,
) -> IntensityTriple:
    """Simulate one shutter sequence of the two-arm measurement.

    Splits the input beam, applies polarizer ``a`` to the test arm and
    polarizers ``s`` then ``a`` to the auxiliary arm, recombines, and
    returns the three detector intensities.  Polarizer angles are measured
    relative to ``basis`` (the ensemble's Schmidt basis when omitted).
    Deterministic for a given ``seed``.

    Each arm is a chain of linear elements, so the chain is composed into a
    single Jones matrix before touching the realizations; an ensemble-mean
    power is then a quadratic form in the cached sample second moments.
    Both shortcuts reproduce the element-by-element field computation
    exactly.  Phase jitter varies per realization, so that case falls back
    to the per-realization fields.
    """
    if basis is None:
        sd = schmidt(ensemble)
        basis = LabBasis(sd.u1, sd.u2)
    source_intensity = intensity(ensemble)

    eps = noise.extinction_ratio
    pol_a = polarizer_matrix(polarizer_axis(basis, a), eps)
    pol_s = polarizer_matrix(polarizer_axis(basis, s), eps)
    rt2 = math.sqrt(2.0)
    test_chain = pol_a / rt2                 # split transmit, polarizer a
    aux_chain = 1j * (pol_a @ pol_s) / rt2   # split reflect, polarizers s then a

    rng = np.random.default_rng(seed)
    if noise.phase_jitter > 0.0:
        test_arm = ensemble.realizations @ test_chain.T
        aux_arm = ensemble.realizations @ aux_chain.T
        phases = rng.normal(0.0, noise.phase_jitter, ensemble.n)
        aux_arm = aux_arm * np.exp(1j * phases)[:, None]
        combined = (aux_arm + 1j * test_arm) / rt2
        readings = np.array(
            [_mean_power(combined), _mean_power(test_arm) / 2.0, _mean_power(aux_arm) / 2.0]
        )
    else:
        moments = ensemble.second_moments
        out_chain = (aux_chain + 1j * test_chain) / rt2
        readings = np.array(
            [
                _chain_power(out_chain, moments),
                _chain_power(test_chain, moments) / 2.0,
                _chain_power(aux_chain, moments) / 2.0,
            ]
        )
    if noise.detector_noise > 0.0:
        readings += rng.normal(0.0, noise.detector_noise * source_intensity, 3)
        readings = np.maximum(readings, 0.0)
    return IntensityTriple(
        i_total=float(readings[0]),
        i_test=float(2.0 * readings[1]),
        i_aux=float(2.0 * readings[2]),
    )


def extract_probability(t: IntensityTriple, source_intensity: float) -> float:
    """Convert a shutter triple into a joint probability.

    ``source_intensity`` is the test-beam intensity entering the
    interferometer arm (half the source power for a 50:50 input splitter).

    Raises
    ------
    StrippedBeamError
        If the auxiliary arm carries no light (the formula divides by it).
    ExtractionError
        If the result exceeds 1 by more than 1e-6, which indicates a
        convention bug rather than rounding; values in (1, 1 + 1e-6] are
        clamped to 1.
    """
    if source_intensity <= 0.0:
        raise DomainError("source intensity must be positive")
    if t.i_aux <= 1e-15 * source_intensity:
        raise StrippedBeamError(
            "auxiliary beam extinguished; intensity extraction undefined"
        )
    cross = 2.0 * t.i_total - t.i_aux - t.i_test
    p = cross**2 / (4.0 * source_intensity * t.i_aux)
    if p > 1.0 + 1e-6:
        raise ExtractionError(f"extracted probability {p} exceeds 1 beyond tolerance")
    return min(p, 1.0)


def measure_joint_probability(
    ensemble: FieldEnsemble,
    sd: SchmidtDecomposition,
    a: float,
    b: float,
    k: int,
    l: int,
    noise: NoiseModel = NoiseModel(),
    seed=0,
) -> float:
    """Interferometric estimate of the joint probability P_kl(a, b).

    The function-space outcome l selects the stripping angle (the direct
    angle for l=1, its orthogonal counterpart for l=2); the polarization
    outcome k selects polarizer a (k=1) or a + pi/2 (k=2).

    When polarizer a sits exactly crossed with the stripping polarizer the
    auxiliary beam is extinguished and the intensity formula degenerates to
    0/0.  The two stripping angles for a given b are never mutually crossed,
    so the value is recovered from measurable quantities as
    P_kl = P(u_k^a) - P_k,l' with the lab marginal P(u_k^a) read off the
    test arm alone.
    """
    if k not in (1, 2) or l not in (1, 2):
        raise DomainError(f"outcome indices k, l must each be 1 or 2, got ({k}, {l})")
    strip_of = {1: stripping_angle, 2: stripping_angle_orthogonal}
    s = strip_of[l](sd.kappa1, sd.kappa2, b)
    pol_angle = a if k == 1 else a + math.pi / 2.0
    basis = LabBasis(sd.u1, sd.u2)
    beam_intensity = intensity(ensemble) / 2.0
    try:
        t = measure_intensities(ensemble, pol_angle, s, noise, seed, basis=basis)
        return extract_probability(t, beam_intensity)
    except StrippedBeamError:
        other = 2 if l == 1 else 1
        s_other = strip_of[other](sd.kappa1, sd.kappa2, b)
        t = measure_intensities(ensemble, pol_angle, s_other, noise, seed, basis=basis)
        p_other = extract_probability(t, beam_intensity)
        lab_marginal = t.i_test / beam_intensity
        return min(max(lab_marginal - p_other, 0.0), 1.0)


def measure_correlation(
    ensemble: FieldEnsemble,
    sd: SchmidtDecomposition,
    a: float,
    b: float,
    noise: NoiseModel = NoiseModel(),
    seed=0,
) -> tuple[float, tuple[float, float, float, float]]:
    """Measure all four joint probabilities at (a, b) and combine them into
    the correlation C = P11 - P12 - P21 + P22."""
    base = seed if isinstance(seed, tuple) else (seed,)
    p = [
        measure_joint_probability(ensemble, sd, a, b, k, l, noise, base + (k, l))
        for k in (1, 2)
        for l in (1, 2)
    ]
    return p[0] - p[1] - p[2] + p[3], (p[0], p[1], p[2], p[3])


@dataclass(frozen=True)
class CorrelationCurve:
    """Correlation scan over a polarizer-angle grid at fixed b."""

    a: np.ndarray
    b: float
    p11: np.ndarray
    p12: np.ndarray
    p21: np.ndarray
    p22: np.ndarray
    c: np.ndarray
    c_err: np.ndarray

    def to_csv(self, path) -> None:
        """Write rows a_rad,b_rad,p11,p12,p21,p22,c,c_err at 12 significant
        digits."""
        table = np.column_stack(
            [
                self.a,
                np.full_like(self.a, self.b),
                self.p11,
                self.p12,
                self.p21,
                self.p22,
                self.c,
                self.c_err,
            ]
        )
        np.savetxt(path, table, delimiter=",", header=CURVE_CSV_HEADER, comments="", fmt="%.12g")


def scan_correlation(
    ensemble: FieldEnsemble,
    sd: SchmidtDecomposition,
    b: float,
    a_grid: Sequence[float],
    noise: NoiseModel = NoiseModel(),
    seed=0,
    resamples: int = 0,
) -> CorrelationCurve:
    """Measure C(a, b) over a grid of polarizer angles at fixed b.

    With ``resamples`` > 0, realizations are bootstrap-resampled (holding
    the apparatus settings fixed) to attach a standard error to each point;
    the same resample index sets are reused across the grid.
    """
    a_grid = np.asarray(a_grid, dtype=float)
    if a_grid.ndim != 1 or a_grid.size < 1:
        raise DomainError("a_grid must be a non-empty 1-d sequence of angles")
    base = seed if isinstance(seed, tuple) else (seed,)

    def one_pass(e: FieldEnsemble, run_idx: int):
        cs = np.empty(a_grid.size)
        ps = np.empty((a_grid.size, 4))
        for i, a in enumerate(a_grid):
            c, p = measure_correlation(e, sd, float(a), b, noise, base + (run_idx, i))
            cs[i] = c
            ps[i] = p
        return cs, ps

    c_main, p_main = one_pass(ensemble, 0)
    if resamples > 0:
        if resamples < 10:
            raise DomainError("use at least 10 bootstrap resamples (or 0 to skip)")
        boot_rng = np.random.default_rng(base + (_BOOT_TAG,))
        c_boot = np.empty((resamples, a_grid.size))
        for r in range(resamples):
            idx = boot_rng.integers(0, ensemble.n, ensemble.n)
            e_r = FieldEnsemble(ensemble.realizations[idx])
            c_boot[r], _ = one_pass(e_r, r + 1)
        c_err = c_boot.std(axis=0, ddof=1)
    else:
        c_err = np.zeros(a_grid.size)
    return CorrelationCurve(
        a=a_grid,
        b=float(b),
        p11=p_main[:, 0],
        p12=p_main[:, 1],
        p21=p_main[:, 2],
        p22=p_main[:, 3],
        c=c_main,
        c_err=c_err,
    )


@dataclass(frozen=True)
class SettingResult:
    """Joint probabilities and correlation at one (a, b) setting."""

    a: float
    b: float
    p11: float
    p12: float
    p21: float
    p22: float
    c: float
    c_err: float

    def to_json_dict(self) -> dict:
        return {
            "a": self.a,
            "b": self.b,
            "p11": self.p11,
            "p12": self.p12,
            "p21": self.p21,
            "p22": self.p22,
            "c": self.c,
            "c_err": self.c_err,
        }


@dataclass(frozen=True)
class BellReport:
    """Complete result of one Bell-protocol run."""

    dop: float
    kappa1: float
    kappa2: float
    n: int
    seed: int
    noise: NoiseModel
    settings: AngleSettings
    chsh: float
    chsh_err: float
    probabilities: tuple[SettingResult, ...]
    method: str = "interferometer"

    def to_json_dict(self) -> dict:
        return {
            "dop": self.dop,
            "kappa1": self.kappa1,
            "kappa2": self.kappa2,
            "n": self.n,
            "seed": self.seed,
            "noise": self.noise.to_json_dict(),
            "settings": {
                "a": self.settings.a,
                "a_prime": self.settings.a_prime,
                "b": self.settings.b,
                "b_prime": self.settings.b_prime,
            },
            "chsh": self.chsh,
            "chsh_err": self.chsh_err,
            "probabilities": [p.to_json_dict() for p in self.probabilities],
            "method": self.method,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)


@dataclass(frozen=True)
class ProtocolConfig:
    """Inputs of one Bell-protocol run.

    ``settings=None`` means: search for the CHSH-maximizing angles of the
    measured Schmidt weights before measuring.
    """

    dop: float
    n: int
    seed: int
    settings: AngleSettings | None = None
    noise: NoiseModel = NoiseModel()
    intensity: float = 1.0
    resamples: int = 16

    def __post_init__(self):
        if self.resamples != 0 and self.resamples < 10:
            raise DomainError("resamples must be 0 (skip) or >= 10")


def run_bell_protocol(config: ProtocolConfig) -> BellReport:
    """Synthesize a source, characterize it, and evaluate the CHSH value.

    Pipeline: draw the stochastic source, run polarization tomography,
    convert the measured degree of polarization to Schmidt weights, pick
    angle settings (optimized unless given), measure the four joint
    probabilities per setting interferometrically, and attach bootstrap
    standard errors.

    A fully polarized source admits no stripping polarizer; in that case
    the report falls back to closed-form probabilities (method
    "closed-form") with the separable maximum chsh = 2.
    """
    source = synthesize_partially_polarized(
        config.dop, config.intensity, config.n, config.seed
    )
    dop_est = dop(tomography(source))
    k1, k2 = kappa_from_dop(dop_est)

    if config.settings is None:
        _, settings = max_chsh(k1, k2)
    else:
        settings = config.settings

    if k2 < _KAPPA2_FLOOR:
        return _closed_form_report(config, dop_est, k1, k2, settings)

    sd = replace(schmidt(source), kappa1=k1, kappa2=k2)

    def measure_all(e: FieldEnsemble, run_idx: int):
        cs = np.empty(4)
        ps = np.empty((4, 4))
        for idx, (alpha, beta) in enumerate(settings.pairs()):
            c, p = measure_correlation(
                e, sd, alpha, beta, config.noise, (config.seed, run_idx, idx)
            )
            cs[idx] = c
            ps[idx] = p
        return cs, ps

    c_main, p_main = measure_all(source, 0)
    chsh_value = float(c_main[0] - c_main[1] + c_main[2] + c_main[3])

    if config.resamples > 0:
        boot_rng = np.random.default_rng((config.seed, _BOOT_TAG))
        boot = np.empty((config.resamples, 5))
        for r in range(config.resamples):
            idx = boot_rng.integers(0, source.n, source.n)
            e_r = FieldEnsemble(source.realizations[idx])
            cs, _ = measure_all(e_r, r + 1)
            boot[r] = [cs[0] - cs[1] + cs[2] + cs[3], *cs]
        errs = boot.std(axis=0, ddof=1)
        chsh_err, c_errs = float(errs[0]), errs[1:]
    else:
        chsh_err, c_errs = 0.0, np.zeros(4)

    results = tuple(
        SettingResult(
            a=alpha,
            b=beta,
            p11=float(p_main[idx, 0]),
            p12=float(p_main[idx, 1]),
            p21=float(p_main[idx, 2]),
            p22=float(p_main[idx, 3]),
            c=float(c_main[idx]),
            c_err=float(c_errs[idx]),
        )
        for idx, (alpha, beta) in enumerate(settings.pairs())
    )
    return BellReport(
        dop=dop_est,
        kappa1=k1,
        kappa2=k2,
        n=config.n,
        seed=config.seed,
        noise=config.noise,
        settings=settings,
        chsh=chsh_value,
        chsh_err=chsh_err,
        probabilities=results,
        method="interferometer",
    )


def _closed_form_report(
    config: ProtocolConfig, dop_est: float, k1: float, k2: float, settings: AngleSettings
) -> BellReport:
    results = []
    cs = []
    for alpha, beta in settings.pairs():
        p = [joint_probability_kappa(k1, k2, alpha, beta, k, l) for k in (1, 2) for l in (1, 2)]
        c = p[0] - p[1] - p[2] + p[3]
        cs.append(c)
        results.append(
            SettingResult(a=alpha, b=beta, p11=p[0], p12=p[1], p21=p[2], p22=p[3], c=c, c_err=0.0)
        )
    return BellReport(
        dop=dop_est,
        kappa1=k1,
        kappa2=k2,
        n=config.n,
        seed=config.seed,
        noise=config.noise,
        settings=settings,
        chsh=float(cs[0] - cs[1] + cs[2] + cs[3]),
        chsh_err=0.0,
        probabilities=tuple(results),
        method="closed-form",
    )


def bootstrap_error(
    ensemble: FieldEnsemble,
    pipeline: Callable[[FieldEnsemble], float | np.ndarray],
    resamples: int = 100,
    seed=0,
):
    """Bootstrap standard error of any per-ensemble statistic.

    Resamples realizations with replacement, re-runs ``pipeline`` on each
    resampled ensemble, and returns the standard deviation across resamples
    (elementwise for array-valued pipelines).  Deterministic given ``seed``.
    """
    if resamples < 10:
        raise DomainError("need at least 10 bootstrap resamples")
    base = seed if isinstance(seed, tuple) else (seed,)
    rng = np.random.default_rng(base + (_BOOT_TAG,))
    values = []
    for _ in range(resamples):
        idx = rng.integers(0, ensemble.n, ensemble.n)
        values.append(pipeline(FieldEnsemble(ensemble.realizations[idx])))
    out = np.std(np.asarray(values, dtype=float), axis=0, ddof=1)
    return float(out) if out.ndim == 0 else out
