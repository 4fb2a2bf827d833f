"""Command line entry points: simulate, equilibria, certify, sweep.

Exit codes: 0 on success, 2 on any validation error, 3 when a
certification run completes but the certificate fails.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from .config import (
    PARAM_KEYS,
    ConfigError,
    build_initial_history,
    load_config,
    validate_for_certification,
)
from .core import ModelParams
from .equilibria import basic_reproduction_number, compute_equilibria, regime_classify
from .integrator import SimulationError, run
from .lyapunov import certify as certify_trajectory
from .output import (
    equilibria_report,
    fmt_float,
    write_json,
    write_snapshots,
    write_sweep,
    write_timeseries,
)

__all__ = ["SweepRow", "SweepSpec", "load_sweep", "main", "run_sweep"]


@dataclass(frozen=True)
class SweepSpec:
    """A one-parameter sweep: base document, parameter name, values, tag."""

    base: dict
    parameter: str
    values: tuple[float, ...]
    tag: str


@dataclass(frozen=True)
class SweepRow:
    """Outcome of one sweep run; error rows leave the result fields None."""

    value: float
    r0: float | None
    regime: str | None
    final_dist: float | None
    certified: bool | None
    error: str | None

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "r0": self.r0,
            "regime": self.regime,
            "final_dist": self.final_dist,
            "certified": self.certified,
            "error": self.error,
        }


def load_sweep(source: str | Path | dict) -> SweepSpec:
    """Parses a sweep document {base, parameter, values, tag}."""
    if isinstance(source, (str, Path)):
        try:
            doc = json.loads(Path(source).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read sweep: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"sweep is not valid JSON: {exc}") from exc
    else:
        doc = source
    if not isinstance(doc, dict):
        raise ConfigError("sweep must be a JSON object")
    unknown = sorted(set(doc) - {"base", "parameter", "values", "tag"})
    if unknown:
        raise ConfigError(f"unknown sweep keys: {', '.join(unknown)}")
    missing = sorted({"base", "parameter", "values", "tag"} - set(doc))
    if missing:
        raise ConfigError(f"missing sweep keys: {', '.join(missing)}")
    if not isinstance(doc["base"], dict):
        raise ConfigError("sweep base must be a configuration object")
    parameter = doc["parameter"]
    if parameter not in PARAM_KEYS:
        raise ConfigError(
            f"sweep parameter must be one of the model parameters, got {parameter!r}"
        )
    values = doc["values"]
    if (
        not isinstance(values, list)
        or not values
        or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in values)
        or any(v <= 0 for v in values)
    ):
        raise ConfigError("sweep values must be a nonempty list of positive numbers")
    if not isinstance(doc["tag"], str):
        raise ConfigError("sweep tag must be a string")
    return SweepSpec(
        base=dict(doc["base"]),
        parameter=parameter,
        values=tuple(float(v) for v in values),
        tag=doc["tag"],
    )


def _sweep_one(spec: SweepSpec, value: float, seed: int) -> SweepRow:
    doc = dict(spec.base)
    doc[spec.parameter] = value
    try:
        if doc.get("certify", False):
            # Certification only applies where an endemic state exists;
            # rows below threshold still simulate and report.
            probe = ModelParams(**{k: float(doc[k]) for k in PARAM_KEYS})
            if basic_reproduction_number(probe) <= 1.0:
                doc["certify"] = False
        config = load_config(doc)
        traj = run(config, build_initial_history(config, seed))
        eqs = traj.equilibria
        final = (
            traj.dist_endemic[-1] if eqs.endemic is not None else traj.dist_dfe[-1]
        )
        certified = certify_trajectory(traj).passed if config.certify else None
        return SweepRow(
            value=value,
            r0=eqs.r0,
            regime=eqs.regime,
            final_dist=float(final),
            certified=certified,
            error=None,
        )
    except (ConfigError, ValueError, SimulationError) as exc:
        r0 = regime = None
        try:
            params = ModelParams(**{k: float(doc[k]) for k in PARAM_KEYS})
            r0 = basic_reproduction_number(params)
            regime = regime_classify(params)
        except (KeyError, TypeError, ValueError):
            pass
        return SweepRow(
            value=value, r0=r0, regime=regime, final_dist=None, certified=None,
            error=str(exc),
        )


def run_sweep(spec: SweepSpec, seed: int = 0, max_workers: int | None = None) -> list[SweepRow]:
    """Runs every swept value; rows come back in input order.

    Runs are independent and execute concurrently; row i perturbs its
    initial history with seed + i.  A failing row records its error and
    leaves the others untouched.
    """
    if max_workers is None:
        max_workers = min(8, len(spec.values))
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        futures = [
            pool.submit(_sweep_one, spec, value, seed + i)
            for i, value in enumerate(spec.values)
        ]
        return [f.result() for f in futures]


def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_simulate(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    traj = run(config, build_initial_history(config, args.seed))
    out = _out_dir(args)
    write_timeseries(out / "timeseries.csv", traj)
    write_snapshots(out / "snapshots.csv", traj)
    final = traj.dist_endemic[-1] if traj.equilibria.endemic is not None else traj.dist_dfe[-1]
    print(
        f"simulated {len(traj.times) - 1} steps to t={fmt_float(traj.times[-1])}; "
        f"final attractor distance {fmt_float(final)}; bounds_ok={traj.bounds_ok}"
    )
    return 0


def _cmd_equilibria(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    report = equilibria_report(config)
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if args.out:
        write_json(_out_dir(args) / "equilibria.json", report)
    return 0


def _cmd_certify(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    if not config.certify:
        config = replace(config, certify=True)
        validate_for_certification(config)
    traj = run(config, build_initial_history(config, args.seed))
    kwargs = {}
    if args.tol is not None:
        kwargs["v_tol"] = args.tol
    if args.dissipation_tol is not None:
        kwargs["d_tol"] = args.dissipation_tol
    certificate = certify_trajectory(traj, **kwargs)
    out = _out_dir(args)
    write_timeseries(out / "timeseries.csv", traj)
    write_snapshots(out / "snapshots.csv", traj)
    write_json(out / "certificate.json", certificate.to_dict())
    verdict = "PASS" if certificate.passed else "FAIL"
    print(
        f"certificate {verdict}: V {fmt_float(certificate.v_initial)} -> "
        f"{fmt_float(certificate.v_final)}, {len(certificate.violations)} violations"
    )
    return 0 if certificate.passed else 3


def _cmd_sweep(args: argparse.Namespace) -> int:
    spec = load_sweep(args.config)
    rows = run_sweep(spec, seed=args.seed)
    out = _out_dir(args)
    write_sweep(out / "sweep.csv", [r.to_dict() for r in rows])
    print(f"sweep {spec.tag}: parameter {spec.parameter}")
    for row in rows:
        if row.error is None:
            cert = "-" if row.certified is None else str(row.certified).lower()
            print(
                f"  {fmt_float(row.value)}\tR0={fmt_float(row.r0)}\t{row.regime}"
                f"\tfinal_dist={fmt_float(row.final_dist)}\tcertified={cert}"
            )
        else:
            print(f"  {fmt_float(row.value)}\tERROR\t{row.error}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dengue-rd",
        description=(
            "Simulate a delayed nonlocal dengue reaction-diffusion model and "
            "certify global attractivity numerically."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, out_required: bool) -> None:
        p.add_argument("--config", required=True, help="path to the JSON document")
        p.add_argument(
            "--out",
            required=out_required,
            default=None if not out_required else argparse.SUPPRESS,
            help="output directory",
        )
        p.add_argument("--seed", type=int, default=0, help="perturbation seed")

    p_sim = sub.add_parser("simulate", help="integrate and write time series")
    common(p_sim, out_required=True)
    p_sim.set_defaults(handler=_cmd_simulate)

    p_eq = sub.add_parser("equilibria", help="report R0, regime and steady states")
    common(p_eq, out_required=False)
    p_eq.set_defaults(handler=_cmd_equilibria)

    p_cert = sub.add_parser("certify", help="run with Lyapunov checks and certify")
    common(p_cert, out_required=True)
    p_cert.add_argument(
        "--tol", type=float, default=None,
        help="per-step V monotonicity slack, relative to V(0)",
    )
    p_cert.add_argument(
        "--dissipation-tol", type=float, default=None,
        help="absolute sign slack for dissipation terms",
    )
    p_cert.set_defaults(handler=_cmd_certify)

    p_sweep = sub.add_parser("sweep", help="run a one-parameter sweep")
    common(p_sweep, out_required=True)
    p_sweep.set_defaults(handler=_cmd_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, SimulationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
