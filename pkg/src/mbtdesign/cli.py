"""Command-line front end.

Every JSON output wraps its result with the full run config and a schema
version. Exit codes: 0 on success, 2 for configuration errors and 3 for
numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import design, experiment, identity, noise
from .cluster import SCHEMA_VERSION, counts_from_json
from .errors import ConfigError, NumericalError
from .tomography import channel_fidelity, chi_of_unitary, chi_to_dict

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3
SWEEP_FIELDS = ("model", "t", "radius", "p", "epsilon")
log = logging.getLogger("mbtdesign")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _flip(text: str) -> tuple[float, float]:
    vals = _floats(text)
    if len(vals) not in (1, 2):
        raise argparse.ArgumentTypeError("--readout-flip takes P01 or P01,P10")
    return (vals[0], vals[-1])


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="RNG seed for every sampling step")
    p.add_argument("--shots", type=int, default=None, help="shots per circuit; omit for exact evaluation")
    p.add_argument("--output", type=Path, default=None, help="output file (default: stdout)")
    p.add_argument("--mitigate", action="store_true", help="apply readout-error mitigation")
    p.add_argument("--readout-flip", type=_flip, default=None, metavar="P01[,P10]",
                   help="per-qubit readout flip probabilities")


def _ensemble_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--ensemble", choices=("exact3", "approx2", "angles"), default="exact3")
    p.add_argument("--angles", type=_floats, default=None, help="comma-separated angles for --ensemble angles")
    p.add_argument("--noise", choices=("none",) + noise.NOISE_MODELS, default="none")
    p.add_argument("--p", type=float, default=0.0, help="depolarising probability")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mbtdesign", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("design-test", help="epsilon-approximate t-design test")
    _common(p)
    _ensemble_args(p)
    p.add_argument("--t", type=int, default=2)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--eps-max", type=float, default=design.PASS_THRESHOLD)
    p.add_argument("--search-radius", action="store_true", help="also find the truncation radius")
    p.add_argument("--fraction", action="store_true", help="also compute the cube-grid passing fraction")
    p.add_argument("--tomography", action="store_true",
                   help="test the ensemble reconstructed from simulated tomography data")
    p.add_argument("--csv", type=Path, default=None, help="per-state epsilon CSV")

    p = sub.add_parser("sweep", help="epsilon versus p for several truncation radii (CSV)")
    _common(p)
    p.add_argument("--model", choices=noise.NOISE_MODELS, default="stepwise")
    p.add_argument("--t", type=int, default=2)
    p.add_argument("--radii", type=_floats, default=list(noise.DEFAULT_RADII))
    p.add_argument("--p-points", type=int, default=200)
    p.add_argument("--p-max", type=float, default=1.0)
    p.add_argument("--angles", type=_floats, default=None)

    p = sub.add_parser("tomography", help="simulated channel tomography of every outcome")
    _common(p)
    _ensemble_args(p)
    p.add_argument("--shot-allocation", choices=("per-outcome", "shared"), default="per-outcome",
                   help="whether --shots is per outcome or shared by all outcomes of a circuit")
    p.add_argument("--mode", choices=("invert", "lstsq"), default="invert")

    p = sub.add_parser("identity", help="identity channel bench and p inference")
    _common(p)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--p", type=float, default=0.0)
    p.add_argument("--weighting", choices=("probability", "uniform"), default="probability")

    p = sub.add_parser("mitigate", help="mitigate a counts file with a calibration matrix")
    _common(p)
    p.add_argument("--counts", type=Path, required=True)
    p.add_argument("--calibration", type=Path, required=True)
    p.add_argument("--mode", choices=("invert", "lstsq"), default="invert")

    p = sub.add_parser("frequencies", help="relative frequencies of the chain outcomes")
    _common(p)
    _ensemble_args(p)
    p.add_argument("--mode", choices=("invert", "lstsq"), default="invert")
    return parser


def _config(args) -> dict:
    out = {}
    for k, v in vars(args).items():
        if isinstance(v, Path):
            v = str(v)
        elif isinstance(v, tuple):
            v = list(v)
        out[k] = v
    return out


def _angles(args) -> tuple[float, ...]:
    if args.ensemble == "exact3":
        return design.EXACT_3_ANGLES
    if args.ensemble == "approx2":
        return design.APPROX_2_ANGLES
    if not args.angles:
        raise ConfigError("--ensemble angles needs --angles")
    return tuple(args.angles)


def _ensemble(args) -> design.UnitaryEnsemble:
    angles = _angles(args)
    if args.noise == "none":
        if args.p:
            raise ConfigError("--p needs a --noise model")
        return design.ensemble_from_angles(angles)
    return noise.noisy_ensemble(args.noise, args.p, angles)


def _confusion(args, n: int) -> noise.ConfusionModel | None:
    if args.readout_flip is None:
        if args.mitigate:
            raise ConfigError("--mitigate needs --readout-flip")
        return None
    return noise.ConfusionModel.uniform(n, *args.readout_flip)


def _branches(args, ensemble) -> list:
    if args.noise == "none":
        return [experiment.cluster_probe_branches(_angles(args), k) for k in range(4)]
    return [experiment.ensemble_probe_branches(ensemble, k) for k in range(4)]


def _circuit_shots(args, links: int) -> int | None:
    if args.shots is None:
        return None
    if args.shots <= 0:
        raise ConfigError("--shots must be positive")
    if getattr(args, "shot_allocation", "per-outcome") == "per-outcome":
        return args.shots * 2**links
    return args.shots


def _reconstructed_ensemble(args, ensemble) -> design.UnitaryEnsemble:
    links = len(_angles(args))
    confusion = _confusion(args, links + 1)
    result = experiment.run_protocol(
        _branches(args, ensemble), _circuit_shots(args, links), args.seed, confusion, args.mitigate
    )
    chis = experiment.protocol_chis(result)
    freqs = experiment.outcome_frequencies(
        _branches(args, ensemble)[0], args.shots, args.seed + 1,
        None if confusion is None else noise.ConfusionModel(confusion.per_qubit[:links]),
        args.mitigate,
    )
    outcomes = list(ensemble.outcomes)
    return design.UnitaryEnsemble(
        outcomes, np.array([freqs[o] for o in outcomes]), chis=np.array([chis[o] for o in outcomes])
    )


def cmd_design_test(args) -> dict:
    ensemble = _ensemble(args)
    if args.tomography:
        ensemble = _reconstructed_ensemble(args, ensemble)
    elif args.readout_flip is not None or args.mitigate or args.shots is not None:
        raise ConfigError("--shots, --readout-flip and --mitigate need --tomography")
    report = design.design_test(ensemble, args.t, args.radius, eps_max=args.eps_max)
    result = report.to_dict()
    if args.search_radius:
        r, eps = design.truncation_radius_search(ensemble, args.t, eps_max=args.eps_max)
        result["truncation_radius"] = r
        result["truncation_epsilon"] = eps if math.isfinite(eps) else "inf"
    if args.fraction:
        result["passing_fraction"] = design.passing_fraction(ensemble, args.t, args.eps_max)
    if args.tomography:
        result["probabilities"] = dict(zip(ensemble.outcomes, ensemble.probabilities.tolist()))
    if args.csv is not None:
        sample = design.bloch_sample_spherical(round(float(args.radius), 12))
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", "z", "epsilon"])
            for v, e in zip(sample.vectors, report.per_state_epsilon):
                w.writerow([f"{v[0]:.12g}", f"{v[1]:.12g}", f"{v[2]:.12g}", f"{e:.12g}"])
    return result


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SWEEP_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({**r, "radius": f"{r['radius']:.6g}", "p": f"{r['p']:.12g}",
                    "epsilon": f"{r['epsilon']:.12g}"})
    return buf.getvalue()


def cmd_sweep(args) -> str:
    if args.p_points < 1 or not 0 < args.p_max <= 1:
        raise ConfigError("--p-points must be positive and --p-max in (0, 1]")
    if args.shots is not None or args.mitigate or args.readout_flip is not None:
        raise ConfigError("sweep is exact; --shots, --mitigate and --readout-flip do not apply")
    angles = tuple(args.angles) if args.angles else design.EXACT_3_ANGLES
    grid = np.linspace(0.0, args.p_max, args.p_points)
    rows = noise.epsilon_vs_p_sweep(args.model, args.t, args.radii, grid, angles=angles)
    return sweep_csv(rows)


def cmd_tomography(args) -> dict:
    ensemble = _ensemble(args)
    links = len(_angles(args))
    confusion = _confusion(args, links + 1)
    result = experiment.run_protocol(
        _branches(args, ensemble), _circuit_shots(args, links), args.seed, confusion,
        args.mitigate, args.mode,
    )
    chis, clips = experiment.protocol_chis(result, return_clips=True)
    ideal = design.ensemble_from_angles(_angles(args))
    fids = {
        o: channel_fidelity(chi_of_unitary(u), chis[o]) for o, u in zip(ideal.outcomes, ideal.unitaries)
    }
    return {
        "chis": {o: chi_to_dict(c) for o, c in chis.items()},
        "fidelities": fids,
        "mean_fidelity": float(np.mean(list(fids.values()))),
        "clip_magnitudes": clips,
        "max_clip": max(clips.values()),
    }


def cmd_identity(args) -> dict:
    confusion = _confusion(args, args.n)
    report = identity.identity_bench(
        args.n, args.p, args.shots, args.seed, args.weighting, confusion, args.mitigate
    )
    return report.to_dict()


def cmd_mitigate(args) -> dict:
    try:
        doc = counts_from_json(args.counts.read_text(encoding="utf-8"))
        lam = noise.CalibrationMatrix.from_json(args.calibration.read_text(encoding="utf-8"))
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot read inputs: {exc}") from exc
    counts = doc["counts"]
    if not counts or sum(counts.values()) <= 0:
        raise ConfigError("counts file holds no counts")
    total = sum(counts.values())
    raw = {k: v / total for k, v in counts.items()}
    mitigated = noise.mitigate_distribution(lam, raw, args.mode)
    return {"n": lam.n, "raw": raw, "mitigated": mitigated}


def cmd_frequencies(args) -> dict:
    ensemble = _ensemble(args)
    links = len(_angles(args))
    branches = _branches(args, ensemble)[0]
    confusion = _confusion(args, links)
    freqs = experiment.outcome_frequencies(
        branches, args.shots, args.seed, confusion, args.mitigate, args.mode
    )
    counts = None
    if args.shots is not None and not args.mitigate:
        counts = {k: int(round(v * args.shots)) for k, v in freqs.items()}
    return {"n": links + 1, "frequencies": freqs, "counts": counts}


COMMANDS = {
    "design-test": cmd_design_test,
    "sweep": cmd_sweep,
    "tomography": cmd_tomography,
    "identity": cmd_identity,
    "mitigate": cmd_mitigate,
    "frequencies": cmd_frequencies,
}


def _emit(text: str, path: Path | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text, encoding="utf-8")


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
        result = COMMANDS[args.command](args)
        config = _config(args)
        if isinstance(result, str):
            _emit(result, args.output)
            if args.output is not None:
                meta = {"schema_version": SCHEMA_VERSION, "command": args.command, "config": config}
                Path(str(args.output) + ".meta.json").write_text(json.dumps(meta, indent=2), encoding="utf-8")
        else:
            doc = {"schema_version": SCHEMA_VERSION, "command": args.command, "config": config,
                   "result": result}
            _emit(json.dumps(doc, indent=2) + "\n", args.output)
    except ConfigError as exc:
        print(f"mbtdesign: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"mbtdesign: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"mbtdesign: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
