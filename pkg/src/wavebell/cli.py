"""Command-line interface: reproducible simulation pipelines.

Subcommands
-----------
source    synthesize a beam and report its polarization characterization
scan      measure correlation curves C(a, b) over polarizer-angle grids
chsh      run the full Bell protocol and report the CHSH value
validate  cross-check the three computation paths and the hidden-variable
          bound, exiting nonzero when any tolerance is breached

Angles are radians; pass degrees with an explicit suffix, e.g. ``22.5deg``.
A JSON config file may supply any option (key = long option name with
dashes as underscores); explicit flags override file values, and the
effective configuration is echoed into every output.

Exit codes: 0 success, 1 usage or configuration error, 2 validation
failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import bell, interferometer as itf
from .bell import (
    AngleSettings,
    SHIPPED_LHV_MODELS,
    joint_probability_direct,
    joint_probability_kappa,
    lhv_chsh,
)
from .ensemble import (
    dop,
    kappa_from_dop,
    polarization_report,
    schmidt,
    synthesize_partially_polarized,
    synthesize_schmidt_form,
    tomography,
)
from .errors import WavebellError
from .interferometer import (
    NoiseModel,
    ProtocolConfig,
    measure_joint_probability,
    run_bell_protocol,
    scan_correlation,
)

_DEFAULT_N = 100_000
_DEFAULT_B_LIST = ",".join(f"{i * math.pi / 12.0!r}" for i in range(12))


def parse_angle(text: str) -> float:
    """Parse an angle: bare number = radians, '<number>deg' = degrees."""
    t = str(text).strip().lower()
    try:
        if t.endswith("deg"):
            return math.radians(float(t[:-3]))
        if t.endswith("rad"):
            return float(t[:-3])
        return float(t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid angle: {text!r}") from None


class _Parser(argparse.ArgumentParser):
    # usage errors exit 1 (argparse default is 2, reserved here for
    # validation failures)
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_common(sub: argparse.ArgumentParser, defaults: dict) -> None:
    sub.add_argument("--config", type=Path, help="JSON config file")
    sub.add_argument("--seed", type=int)
    sub.add_argument("--n", type=int, help=f"realization count (default {defaults['n']})")
    sub.add_argument("--dop", type=float, help="requested degree of polarization")
    sub.add_argument("--intensity", type=float)
    sub.add_argument("--noise-extinction", type=float, help="polarizer leakage power fraction")
    sub.add_argument("--noise-detector", type=float, help="detector noise std / source intensity")
    sub.add_argument("--noise-phase", type=float, help="auxiliary-arm phase jitter std (rad)")
    sub.add_argument("--out", type=Path, help="output path (stdout if omitted)")
    sub.add_argument("--format", choices=("csv", "json"), dest="fmt")


_DEFAULTS: dict[str, dict] = {
    "source": {
        "seed": 0,
        "n": _DEFAULT_N,
        "dop": 0.125,
        "intensity": 1.0,
        "noise_extinction": 0.0,
        "noise_detector": 0.0,
        "noise_phase": 0.0,
        "out": None,
        "fmt": "json",
    },
    "scan": {
        "seed": 0,
        "n": _DEFAULT_N,
        "dop": 0.0,
        "intensity": 1.0,
        "noise_extinction": 0.0,
        "noise_detector": 0.0,
        "noise_phase": 0.0,
        "out": None,
        "fmt": "csv",
        "b_list": _DEFAULT_B_LIST,
        "a_start": 0.0,
        "a_stop": math.pi,
        "a_step": math.pi / 90.0,
        "resamples": 16,
    },
    "chsh": {
        "seed": 0,
        "n": _DEFAULT_N,
        "dop": 0.125,
        "intensity": 1.0,
        "noise_extinction": 0.0,
        "noise_detector": 0.0,
        "noise_phase": 0.0,
        "out": None,
        "fmt": "json",
        "settings": None,
        "optimize": False,
        "resamples": 16,
    },
    "validate": {
        "seed": 0,
        "n": _DEFAULT_N,
        "dop": 0.125,
        "intensity": 1.0,
        "noise_extinction": 0.0,
        "noise_detector": 0.0,
        "noise_phase": 0.0,
        "out": None,
        "fmt": "json",
        "tuples": 20,
        "lhv_samples": 100_000,
    },
}


def build_parser() -> _Parser:
    parser = _Parser(prog="wavebell", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("source", help="synthesize and characterize a source beam")
    _add_common(p, _DEFAULTS["source"])

    p = subs.add_parser("scan", help="measure correlation curves over an angle grid")
    _add_common(p, _DEFAULTS["scan"])
    p.add_argument("--b-list", type=str, help="comma-separated function-space angles")
    p.add_argument("--a-start", type=parse_angle)
    p.add_argument("--a-stop", type=parse_angle, help="exclusive grid end")
    p.add_argument("--a-step", type=parse_angle)
    p.add_argument("--resamples", type=int, help="bootstrap resamples per point (0 = none)")

    p = subs.add_parser("chsh", help="run the Bell protocol and report the CHSH value")
    _add_common(p, _DEFAULTS["chsh"])
    group = p.add_mutually_exclusive_group()
    group.add_argument("--optimize", action="store_true", default=None,
                       help="search for the CHSH-maximizing angles (default)")
    group.add_argument("--settings", nargs=4, metavar=("A", "A_PRIME", "B", "B_PRIME"),
                       help="explicit angle settings")
    p.add_argument("--resamples", type=int, help="bootstrap resamples (0 = none)")

    p = subs.add_parser("validate", help="run the internal consistency and bound suite")
    _add_common(p, _DEFAULTS["validate"])
    p.add_argument("--tuples", type=int, help="random tuples per agreement check")
    p.add_argument("--lhv-samples", type=int, help="Monte-Carlo samples per LHV correlation")

    return parser


def _resolve_config(args: argparse.Namespace) -> dict:
    """Merge defaults, config-file values, and explicit flags (highest)."""
    command = args.command
    cfg = dict(_DEFAULTS[command])
    if args.config is not None:
        try:
            loaded = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise WavebellError(f"cannot read config file: {exc}") from exc
        if not isinstance(loaded, dict):
            raise WavebellError("config file must contain a JSON object")
        unknown = sorted(set(loaded) - set(cfg))
        if unknown:
            raise WavebellError(f"unknown config keys for '{command}': {', '.join(unknown)}")
        cfg.update(loaded)
    for key in cfg:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    return cfg


def _noise(cfg: dict) -> NoiseModel:
    return NoiseModel(
        extinction_ratio=float(cfg["noise_extinction"]),
        detector_noise=float(cfg["noise_detector"]),
        phase_jitter=float(cfg["noise_phase"]),
    )


def _echo(cfg: dict) -> dict:
    # the output destination is not part of the computational configuration,
    # and keeping it out makes equal configs yield byte-identical outputs
    out = {}
    for key, value in cfg.items():
        if key == "out":
            continue
        if isinstance(value, Path):
            value = str(value)
        out[key] = value
    return out


def _write_text(cfg: dict, text: str) -> None:
    if cfg["out"] is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        Path(cfg["out"]).write_text(text if text.endswith("\n") else text + "\n",
                                    encoding="utf-8")


def _flatten_complex_pairs(prefix: str, pairs) -> tuple[list[str], list[float]]:
    names, values = [], []
    for comp, pair in zip(("x", "y"), pairs):
        names += [f"{prefix}_{comp}_re", f"{prefix}_{comp}_im"]
        values += [pair[0], pair[1]]
    return names, values


def cmd_source(cfg: dict) -> int:
    ens = synthesize_partially_polarized(
        cfg["dop"], cfg["intensity"], cfg["n"], cfg["seed"]
    )
    report = polarization_report(ens)
    if cfg["fmt"] == "json":
        report["config"] = _echo(cfg)
        _write_text(cfg, json.dumps(report, indent=2))
    else:
        names = ["s0", "s1", "s2", "s3", "dop", "kappa1", "kappa2"]
        values = [report[k] for k in names]
        for key in ("u1", "u2"):
            extra_names, extra_values = _flatten_complex_pairs(key, report[key])
            names += extra_names
            values += extra_values
        lines = [",".join(names), ",".join(f"{v:.12g}" for v in values)]
        _write_text(cfg, "\n".join(lines))
    return 0


def _scan_curves(cfg: dict):
    ens = synthesize_partially_polarized(
        cfg["dop"], cfg["intensity"], cfg["n"], cfg["seed"]
    )
    k1, k2 = kappa_from_dop(dop(tomography(ens)))
    sd = replace(schmidt(ens), kappa1=k1, kappa2=k2)
    a_grid = np.arange(cfg["a_start"], cfg["a_stop"] - 1e-12, cfg["a_step"])
    b_values = [parse_angle(tok) for tok in str(cfg["b_list"]).split(",") if tok.strip()]
    noise = _noise(cfg)
    for i, b in enumerate(b_values):
        yield i, scan_correlation(
            ens, sd, b, a_grid, noise=noise, seed=(cfg["seed"], i), resamples=cfg["resamples"]
        )


def cmd_scan(cfg: dict) -> int:
    if cfg["fmt"] == "csv":
        if cfg["out"] is None:
            raise WavebellError("scan with csv output needs --out DIRECTORY")
        outdir = Path(cfg["out"])
        outdir.mkdir(parents=True, exist_ok=True)
        for i, curve in _scan_curves(cfg):
            curve.to_csv(outdir / f"curve_{i:02d}.csv")
        (outdir / "scan_config.json").write_text(
            json.dumps({"config": _echo(cfg)}, indent=2) + "\n", encoding="utf-8"
        )
    else:
        curves = []
        for i, curve in _scan_curves(cfg):
            curves.append(
                {
                    "b_rad": curve.b,
                    "a_rad": curve.a.tolist(),
                    "p11": curve.p11.tolist(),
                    "p12": curve.p12.tolist(),
                    "p21": curve.p21.tolist(),
                    "p22": curve.p22.tolist(),
                    "c": curve.c.tolist(),
                    "c_err": curve.c_err.tolist(),
                }
            )
        _write_text(cfg, json.dumps({"curves": curves, "config": _echo(cfg)}, indent=2))
    return 0


def cmd_chsh(cfg: dict) -> int:
    settings = None
    if cfg["settings"] is not None and not cfg["optimize"]:
        values = [parse_angle(v) for v in cfg["settings"]]
        settings = AngleSettings(*values)
    protocol = ProtocolConfig(
        dop=cfg["dop"],
        n=cfg["n"],
        seed=cfg["seed"],
        settings=settings,
        noise=_noise(cfg),
        intensity=cfg["intensity"],
        resamples=cfg["resamples"],
    )
    report = run_bell_protocol(protocol)
    if cfg["fmt"] == "json":
        payload = report.to_json_dict()
        payload["config"] = _echo(cfg)
        _write_text(cfg, json.dumps(payload, indent=2))
    else:
        lines = [itf.CURVE_CSV_HEADER + ",chsh,chsh_err"]
        for p in report.probabilities:
            row = [p.a, p.b, p.p11, p.p12, p.p21, p.p22, p.c, p.c_err,
                   report.chsh, report.chsh_err]
            lines.append(",".join(f"{v:.12g}" for v in row))
        _write_text(cfg, "\n".join(lines))
    return 0


def _validate_checks(cfg: dict):
    noise = _noise(cfg)
    rng = np.random.default_rng((cfg["seed"], 29))
    tuples = int(cfg["tuples"])
    n = int(cfg["n"])

    # 1: analytic-amplitude fields: all three paths agree at float accuracy.
    worst_measured = worst_projected = 0.0
    for t in range(tuples):
        d = rng.uniform(0.02, 0.95)
        k1, k2 = kappa_from_dop(d)
        a, b = rng.uniform(-math.pi, math.pi, 2)
        k, l = int(rng.integers(1, 3)), int(rng.integers(1, 3))
        field = synthesize_schmidt_form(k1, k2, n=512, seed=1000 + t)
        sd = schmidt(field)
        oracle = joint_probability_direct(sd, a, b, k, l)
        measured = measure_joint_probability(field, sd, a, b, k, l, noise, (cfg["seed"], 1, t))
        projected = bell.joint_probability_projected(field, sd, a, b, k, l)
        worst_measured = max(worst_measured, abs(measured - oracle))
        worst_projected = max(worst_projected, abs(projected - oracle))
    yield ("triple-path-analytic-interferometric", worst_measured <= 1e-12,
           f"max |measured - oracle| = {worst_measured:.3e} (tol 1e-12)")
    yield ("triple-path-analytic-projected", worst_projected <= 1e-12,
           f"max |projected - oracle| = {worst_projected:.3e} (tol 1e-12)")

    # 2: sampled ensembles vs the requested-dop oracle, statistical tolerance.
    tol = 5.0 / math.sqrt(n)
    worst_sampled = 0.0
    for t in range(tuples):
        d = rng.uniform(0.02, 0.95)
        k1, k2 = kappa_from_dop(d)
        a, b = rng.uniform(-math.pi, math.pi, 2)
        k, l = int(rng.integers(1, 3)), int(rng.integers(1, 3))
        field = synthesize_partially_polarized(d, 1.0, n, 2000 + t)
        sd = schmidt(field)
        oracle = joint_probability_kappa(k1, k2, a, b, k, l)
        measured = measure_joint_probability(field, sd, a, b, k, l, noise, (cfg["seed"], 2, t))
        worst_sampled = max(worst_sampled, abs(measured - oracle))
    yield ("triple-path-sampled", worst_sampled <= tol,
           f"max |measured - oracle| = {worst_sampled:.3e} (tol {tol:.3e})")

    # 3: the four measured probabilities at one setting sum to 1.
    field = synthesize_partially_polarized(0.125, 1.0, n, cfg["seed"] + 17)
    sd = schmidt(field)
    total = sum(
        measure_joint_probability(field, sd, 0.37, 0.81, k, l, noise, (cfg["seed"], 3, k, l))
        for k in (1, 2)
        for l in (1, 2)
    )
    yield ("probability-completeness-measured", abs(total - 1.0) <= tol,
           f"|sum - 1| = {abs(total - 1.0):.3e} (tol {tol:.3e})")

    # 4: oracle marginals carry no signal across the other space's angle.
    grid = np.linspace(0.0, math.pi, 20, endpoint=False)
    k1, k2 = kappa_from_dop(0.125)
    worst_ns = 0.0
    for a in grid:
        m = [
            joint_probability_kappa(k1, k2, a, b, 1, 1)
            + joint_probability_kappa(k1, k2, a, b, 1, 2)
            for b in grid
        ]
        worst_ns = max(worst_ns, max(m) - min(m))
    yield ("no-signaling-oracle", worst_ns <= 1e-12,
           f"max marginal variation = {worst_ns:.3e} (tol 1e-12)")

    # 5: shipped hidden-variable models respect |B| <= 2.
    samples = int(cfg["lhv_samples"])
    lhv_tol = 2.0 + 5.0 / math.sqrt(samples)
    worst_lhv = 0.0
    for name, factory in SHIPPED_LHV_MODELS.items():
        model = factory()
        for t in range(8):
            angles = rng.uniform(0.0, math.pi, 4)
            value = abs(lhv_chsh(model, AngleSettings(*angles), samples, (cfg["seed"], 5, t)))
            worst_lhv = max(worst_lhv, value)
    yield ("lhv-bound", worst_lhv <= lhv_tol,
           f"max |B| = {worst_lhv:.6f} (bound {lhv_tol:.6f})")


def cmd_validate(cfg: dict) -> int:
    results = []
    for name, ok, detail in _validate_checks(cfg):
        results.append({"check": name, "pass": bool(ok), "detail": detail})
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    failed = [r["check"] for r in results if not r["pass"]]
    if cfg["out"] is not None:
        payload = {"checks": results, "failed": failed, "config": _echo(cfg)}
        Path(cfg["out"]).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    if failed:
        print(f"validation failed: {', '.join(failed)}", file=sys.stderr)
        return 2
    return 0


_COMMANDS = {
    "source": cmd_source,
    "scan": cmd_scan,
    "chsh": cmd_chsh,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve_config(args)
        return _COMMANDS[args.command](cfg)
    except WavebellError as exc:
        print(f"wavebell: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
