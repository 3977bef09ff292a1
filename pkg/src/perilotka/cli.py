"""Command-line entry point: ``perilotka simulate|check|orbit|lyapunov``.

Each command writes its files plus ``record.json`` into ``--out``.  Failed
conditions are results and exit with status 0.  Bad configurations exit
with 2, and integration or solver failures with 3.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import analysis, orbits, scenario
from .dynamics import MODES, full_field
from .exceptions import ConfigError, DomainError, IntegrationError, OrbitError
from .integrator import IntegratorConfig, integrate
from .io import RunRecord, write_csv, write_svg

EXIT_CONFIG = 2
EXIT_SOLVER = 3

LYAPUNOV_CONFIG = IntegratorConfig(rtol=1e-12, atol=1e-14)


class CommandFailed(Exception):
    def __init__(self, record: RunRecord, code: int, message: str):
        super().__init__(message)
        self.record = record
        self.code = code


def _grid(t0: float, t_end: float, period: float, per_period: int) -> np.ndarray:
    n = max(1, int(round((t_end - t0) / period * per_period)))
    return t0 + np.arange(n + 1) * ((t_end - t0) / n)


def _periodicity_defect(traj, period: float, t_from: float, t_to: float, per_period: int = 64):
    if t_to - period <= t_from:
        return float("nan")
    t = _grid(t_from, t_to - period, period, per_period)
    return float(np.max(np.abs(traj.sample(t + period) - traj.sample(t))))


def cmd_simulate(cfg: scenario.ScenarioConfig, t_end: float | None, out: Path) -> RunRecord:
    out.mkdir(parents=True, exist_ok=True)
    t_end = cfg.horizon if t_end is None else t_end
    rec = RunRecord("simulate", cfg.to_dict())
    start = time.perf_counter()
    field = lambda t, x: full_field(cfg.params, t, x)  # noqa: E731
    failure = None
    try:
        traj = integrate(field, 0.0, cfg.initial, t_end, cfg.integrator)
    except IntegrationError as exc:
        traj, failure = exc.trajectory, exc
    end = traj.t_end
    t = _grid(0.0, end, cfg.period, cfg.samples_per_period) if end > 0 else np.zeros(1)
    x = traj.sample(t)
    rec.outputs.append(str(write_csv(out / "trajectory.csv", ["t", "x1", "x2", "x3"],
                                     [t, x[:, 0], x[:, 1], x[:, 2]])))
    rec.outputs.append(str(write_svg(out / "trajectory.svg", t,
                                     {"x1": x[:, 0], "x2": x[:, 1], "x3": x[:, 2]},
                                     title=f"{cfg.name}: population densities")))
    w = cfg.period
    rec.scalars = {
        "t_end": end, "final_state": x[-1],
        "periodicity_defect_last_two_periods": _periodicity_defect(traj, w, max(0.0, end - 2 * w), end),
        "min_last_two_periods": traj.sample(_grid(max(0.0, end - 2 * w), end, w, 64)).min(axis=0),
        "accepted_steps": traj.n_accepted, "rejected_steps": traj.n_rejected,
    }
    rec.wall_time = time.perf_counter() - start
    if failure is not None:
        rec.status = f"integration failed: {failure}"
        rec.write(out / "record.json")
        raise CommandFailed(rec, EXIT_SOLVER, str(failure))
    rec.text = (f"simulated {cfg.name} to t={end:g}; final state "
                + ", ".join(f"{v:.9g}" for v in x[-1]))
    rec.write(out / "record.json")
    return rec


def cmd_check(cfg: scenario.ScenarioConfig, out: Path) -> RunRecord:
    out.mkdir(parents=True, exist_ok=True)
    rec = RunRecord("check", cfg.to_dict())
    start = time.perf_counter()
    p = cfg.params
    texts = []
    h2 = analysis.check_H2(p)
    rec.reports["existence"] = h2.to_record()
    texts.append(h2.to_text())
    orbit = None
    try:
        e26 = analysis.check_E26(p)
        rec.reports["coexistence"] = e26.to_record()
        texts.append(e26.to_text())
        if e26.verdict:
            orbit = analysis.boundary_orbit(p)
            e27 = analysis.check_E27(p, orbit)
            rec.reports["boundary_stability"] = e27.to_record()
            texts.append(e27.to_text())
        else:
            texts.append("boundary stability: skipped, boundary coexistence fails")
    except (DomainError, OrbitError) as exc:
        rec.reports["coexistence"] = {"error": str(exc)}
        texts.append(f"boundary conditions: not applicable ({exc})")
    thm2 = analysis.check_thm2(p, orbit, with_a12=orbit is not None)
    rec.reports["attraction"] = thm2.to_record()
    texts.append(thm2.to_text())
    rec.scalars = {"existence": h2.verdict, "attraction_i": thm2.hypothesis_i,
                   "attraction_ii": thm2.hypothesis_ii, "attraction_iii": thm2.hypothesis_iii,
                   "mu1": thm2.mu1}
    rec.text = "\n\n".join(texts)
    rec.wall_time = time.perf_counter() - start
    rec.write(out / "record.json")
    return rec


def cmd_orbit(cfg: scenario.ScenarioConfig, mode: str, guess, tol: float, out: Path) -> RunRecord:
    out.mkdir(parents=True, exist_ok=True)
    rec = RunRecord("orbit", cfg.to_dict())
    rec.scalars["mode"] = mode
    start = time.perf_counter()
    try:
        orbit = orbits.find_orbit(cfg.params, guess=guess, mode=mode, tol=tol, x_init=cfg.initial)
    except OrbitError as exc:
        rec.status = f"orbit search failed: {exc}"
        rec.scalars.update({"best_iterate": exc.best, "residual": exc.residual})
        rec.wall_time = time.perf_counter() - start
        rec.write(out / "record.json")
        raise CommandFailed(rec, EXIT_SOLVER, str(exc))
    t = _grid(0.0, orbit.period, orbit.period, cfg.samples_per_period)
    x = orbit.state_at(t)
    x[-1] = orbit.trajectory.final
    rec.outputs.append(str(write_csv(out / "orbit.csv", ["t", "x1", "x2", "x3"],
                                     [t, x[:, 0], x[:, 1], x[:, 2]])))
    rec.reports["orbit"] = orbit.to_record()
    text = orbit.to_text()
    if mode != "full":
        _, mults = orbits.monodromy(cfg.params, orbit, embedded=True)
        rec.reports["orbit"]["embedded_multipliers"] = [[float(z.real), float(z.imag)] for z in mults]
        text += "\n  in 3D       " + ", ".join(f"{z.real:.9g}{z.imag:+.3g}j" for z in mults)
    rec.scalars.update({"residual": orbit.residual, "anchor": orbit.anchor,
                        "spectral_radius": orbit.spectral_radius()})
    rec.text = text
    rec.wall_time = time.perf_counter() - start
    rec.write(out / "record.json")
    return rec


def cmd_lyapunov(cfg: scenario.ScenarioConfig, t_end: float | None, out: Path,
                 start_on_orbit: bool = False) -> RunRecord:
    out.mkdir(parents=True, exist_ok=True)
    t_end = cfg.horizon if t_end is None else t_end
    rec = RunRecord("lyapunov", cfg.to_dict())
    start = time.perf_counter()
    icfg = IntegratorConfig(rtol=min(cfg.integrator.rtol, LYAPUNOV_CONFIG.rtol),
                            atol=min(cfg.integrator.atol, LYAPUNOV_CONFIG.atol),
                            max_steps=cfg.integrator.max_steps)
    try:
        orbit = analysis.boundary_orbit(cfg.params, cfg=icfg)
        x0 = orbit.anchor if start_on_orbit else cfg.initial
        traj = integrate(lambda t, x: full_field(cfg.params, t, x), 0.0, x0, t_end, icfg)
    except (OrbitError, IntegrationError, DomainError) as exc:
        rec.status = f"failed: {exc}"
        rec.write(out / "record.json")
        raise CommandFailed(rec, EXIT_SOLVER, str(exc))
    report = analysis.verify_attraction(cfg.params, traj, orbit, cfg.samples_per_period)
    rec.outputs.append(str(write_csv(out / "lyapunov.csv", ["t", "V", "delta", "bound"],
                                     [report.t, report.V, report.delta, report.bound])))
    rec.outputs.append(str(write_svg(out / "lyapunov.svg", report.t,
                                     {"V": report.V, "delta": report.delta},
                                     title=f"{cfg.name}: Lyapunov function")))
    rec.reports["attraction"] = report.to_record()
    rec.reports["boundary_orbit"] = orbit.to_record()
    rec.scalars = {"monotone": report.monotone, "derivative_ok": report.derivative_ok,
                   "terminal_delta": report.terminal_delta,
                   "cumulative_drift": report.cumulative_drift}
    rec.text = report.to_text()
    rec.wall_time = time.perf_counter() - start
    rec.write(out / "record.json")
    return rec


def _parse_guess(text: str | None):
    if text is None:
        return None
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise ConfigError(f"cannot parse {text!r} as comma-separated numbers", "guess") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="perilotka", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, help="scenario JSON file (layered over --preset if both)")
        p.add_argument("--preset", choices=sorted(scenario.PRESETS))
        p.add_argument("--out", type=Path, default=Path("perilotka-out"), help="output directory")

    p = sub.add_parser("simulate", help="integrate the full system and write CSV/SVG")
    common(p)
    p.add_argument("--t-end", type=float)
    p = sub.add_parser("check", help="evaluate every existence and stability condition")
    common(p)
    p = sub.add_parser("orbit", help="solve for a periodic orbit")
    common(p)
    p.add_argument("--mode", choices=sorted(MODES), default="full")
    p.add_argument("--guess", help="x1,x2,x3 (zeros in inactive coordinates)")
    p.add_argument("--tol", type=float, default=1e-9)
    p = sub.add_parser("lyapunov", help="monitor the Lyapunov function against the boundary orbit")
    common(p)
    p.add_argument("--t-end", type=float)
    p.add_argument("--start-on-orbit", action="store_true",
                   help="start from the boundary orbit instead of the configured initial state")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = scenario.load(args.config, args.preset)
        if args.command == "simulate":
            rec = cmd_simulate(cfg, args.t_end, args.out)
        elif args.command == "check":
            rec = cmd_check(cfg, args.out)
        elif args.command == "orbit":
            rec = cmd_orbit(cfg, args.mode, _parse_guess(args.guess), args.tol, args.out)
        else:
            rec = cmd_lyapunov(cfg, args.t_end, args.out, args.start_on_orbit)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CommandFailed as exc:
        print(exc.record.text or f"failed: {exc}", file=sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    print(rec.text)
    print(f"\nwrote: {', '.join(rec.outputs)}")
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
