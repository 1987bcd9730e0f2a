"""``squid-tip`` command-line front end."""
from __future__ import annotations

import argparse
import math
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import analytic, evolve, spectral
from .config import RunConfig, load_config, serialize_config
from .errors import ConfigError, EstimationError, NumericalError, SquidTipError
from .model import beta_L, nondimensionalize, well_geometry

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


def format_summary(items: dict[str, object]) -> str:
    lines = []
    for k, v in items.items():
        if isinstance(v, (float, np.floating)):
            v = f"{float(v):.17g}"
        lines.append(f"{k} = {v}")
    return "\n".join(lines) + "\n"


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


class Context:
    """Eigen systems for one config, built once per command."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.params = cfg.squid_params()
        self.scaled = nondimensionalize(self.params)
        grid = cfg.grid()
        self.b0 = spectral.solve(self.scaled, 0.0, grid, cfg.n_states)
        self.b1 = spectral.solve(self.scaled, cfg.eps, grid, cfg.n_states)
        self.pm = analytic.perturbation_matrix(self.b0, cfg.eps)

    def h_over(self, de: float) -> float:
        """Seconds corresponding to ``h / de`` for a scaled energy gap."""
        return 2 * math.pi / de * self.scaled.time_unit


def cmd_spectrum(cfg: RunConfig, out: Path, wavefunctions: bool = False) -> dict[str, object]:
    ctx = Context(cfg)
    b0, b1, sc = ctx.b0, ctx.b1, ctx.scaled
    geo = well_geometry(sc, 0.0)
    spectral.write_spectrum_csv(b0, _mk(out) / "spectrum_eps0.csv")
    spectral.write_spectrum_csv(b1, out / "spectrum_eps.csv")
    if wavefunctions:
        spectral.write_wavefunctions_csv(b0, out / "wavefunctions_eps0.csv")
        spectral.write_wavefunctions_csv(b1, out / "wavefunctions_eps.csv")
    hz = b0.energies_hz
    td = cfg.td_ps * 1e-12
    s: dict[str, object] = {
        "beta_L": beta_L(ctx.params),
        "barrier_height_joule": geo.barrier_height * sc.energy_unit,
        "barrier_height_ghz": float(sc.energy_to_hz(geo.barrier_height)) / 1e9,
        "well_left_phi0": geo.x_left,
        "well_right_phi0": geo.x_right,
        "levels_below_barrier": spectral.levels_below_barrier(b0),
        "levels_below_barrier_eps": spectral.levels_below_barrier(b1),
        "parities": ",".join(b0.parities[:4]),
        "splitting_12_mhz": (hz[1] - hz[0]) / 1e6,
        "splitting_13_ghz": (hz[2] - hz[0]) / 1e9,
        "splitting_24_ghz": (hz[3] - hz[1]) / 1e9,
        "tunneling_period_ns": 1e9 / (hz[1] - hz[0]),
        "period_13_ps": analytic.resonance_spacing(b0, (1, 3), 1) * 1e12,
        "period_24_ps": analytic.resonance_spacing(b0, (2, 4), 1) * 1e12,
        "t_s_resonant_13_ps": analytic.resonance_spacing(b0, (1, 3), 1, td, ctx.pm) * 1e12,
        "t_s_resonant_24_ps": analytic.resonance_spacing(b0, (2, 4), 1, td, ctx.pm) * 1e12,
    }
    for k in range(4):
        s[f"shift_{k + 1}_mhz"] = float(sc.energy_to_hz(b1.energies[k] - b0.energies[k])) / 1e6
        s[f"first_order_shift_{k + 1}_mhz"] = float(sc.energy_to_hz(ctx.pm.matrix[k, k])) / 1e6
    return s


def _mk(out: Path) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    return out


def _period_or_nan(traj, **kw) -> float:
    try:
        return evolve.measure_period(traj, **kw)
    except EstimationError:
        return float("nan")


def cmd_evolve(cfg: RunConfig, out: Path, oracle: bool = False,
               oracle_dt_ps: float | None = None, ctx: Context | None = None) -> dict[str, object]:
    ctx = ctx or Context(cfg)
    b0, b1 = ctx.b0, ctx.b1
    train = cfg.train() if cfg.n_pulses > 0 else None
    psi0 = analytic.initial_state(b0, cfg.initial)
    traj = evolve.run_pulse_train(psi0, train, b0, b1, cfg.sample_dt, cfg.tail)
    traj.to_csv(_mk(out) / "trajectory.csv")
    t_free = ctx.h_over(b0.energies[1] - b0.energies[0])
    if train is not None:
        measured = _period_or_nan(traj, smooth=train.period, t_max=train.duration)
    else:
        measured = _period_or_nan(traj)
    fin = traj.final_state
    s: dict[str, object] = {
        "n_pulses": cfg.n_pulses,
        "t_s_ps": cfg.ts_ps,
        "t_d_ps": cfg.td_ps,
        "eps": cfg.eps,
        "duration_ns": traj.times[-1] * 1e9,
        "unperturbed_period_ns": t_free * 1e9,
        "measured_period_ns": measured * 1e9,
        "speedup": t_free / measured if measured == measured else float("nan"),
        "min_p_right": float(traj.p_right.min()),
        "final_p_right": float(traj.p_right[-1]),
        "final_p_left": float(traj.p_left[-1]),
        "norm_loss": fin.norm_loss,
    }
    for k in range(4):
        s[f"final_occ_{k + 1:02d}"] = float(fin.occupations[k])
        s[f"peak_occ_{k + 1:02d}"] = float(traj.occupations[:, k].max())
    if oracle:
        dt = oracle_dt_ps * 1e-12 if oracle_dt_ps else None
        direct = evolve.direct_integrate(psi0, train, b0, dt=dt, sample_dt=cfg.sample_dt,
                                         t_after=cfg.tail)
        direct.to_csv(out / "trajectory_oracle.csv")
        s["oracle_fidelity"] = evolve.fidelity(fin, direct.final_psi)
        s["oracle_max_occ_diff"] = float(np.abs(direct.occupations - traj.occupations).max())
    return s


def cmd_scan(cfg: RunConfig, out: Path, ts_min_ps: float | None, ts_max_ps: float | None,
             step_ps: float, pair=(1, 3), n_pulses: int | None = None) -> dict[str, object]:
    ctx = Context(cfg)
    td = cfg.td_ps * 1e-12
    res = analytic.resonance_spacing(ctx.b0, pair, 1, td, ctx.pm)
    lo = res * 1e12 - 1.0 if ts_min_ps is None else ts_min_ps
    hi = res * 1e12 + 1.0 if ts_max_ps is None else ts_max_ps
    rows = analytic.resonance_scan(None, cfg.eps, td, (lo * 1e-12, hi * 1e-12),
                                   n_pulses or cfg.n_pulses, step_ps * 1e-12,
                                   bases=(ctx.b0, ctx.b1), initial=cfg.initial,
                                   sample_dt=cfg.sample_dt)
    analytic.write_scan_csv(rows, _mk(out) / "scan.csv")
    col = "peak_occ3" if tuple(pair) == (1, 3) else "peak_occ4"
    peak = max(rows, key=lambda r: getattr(r, col))
    return {
        "pair": f"{pair[0]}-{pair[1]}",
        "n_points": len(rows),
        "step_ps": step_ps,
        "t_s_resonant_ps": res * 1e12,
        "t_s_peak_ps": peak.t_s * 1e12,
        "peak_transfer": getattr(peak, col),
        "peak_offset_steps": abs(peak.t_s - res) / (step_ps * 1e-12),
    }


def cmd_design(cfg: RunConfig, out: Path, theta: float, pair=(1, 3), m: int = 1,
               max_pulses: int = 600) -> dict[str, object]:
    ctx = Context(cfg)
    sched = analytic.design_schedule(None, cfg.eps, cfg.td_ps * 1e-12, theta, pair, m,
                                     bases=(ctx.b0, ctx.b1), initial=cfg.initial,
                                     max_pulses=max_pulses, pulse_first=cfg.pulse_first)
    psi0 = analytic.initial_state(ctx.b0, cfg.initial)
    traj = evolve.run_pulse_train(psi0, sched.train, ctx.b0, ctx.b1, cfg.sample_dt)
    traj.to_csv(_mk(out) / "trajectory_design.csv")
    s = dict(sched.summary())
    s["initial_p_right"] = float(traj.p_right[0])
    s["final_p_right"] = float(traj.p_right[-1])
    s["final_p_left"] = float(traj.p_left[-1])
    for k in range(4):
        s[f"final_occ_{k + 1:02d}"] = float(traj.final_state.occupations[k])
    return s


def _sweep_one(path: str, out: str) -> tuple[str, str]:
    cfg = load_config(path)
    summary = cmd_evolve(cfg, Path(out))
    text = format_summary(summary)
    _write(Path(out) / "summary.txt", text)
    return path, text


def cmd_sweep(config_dir: Path, out: Path, jobs: int = 1) -> list[tuple[str, str]]:
    """Run ``evolve`` for every ``*.cfg`` in ``config_dir``; outputs under ``out/<stem>``."""
    paths = sorted(config_dir.glob("*.cfg"))
    if not paths:
        raise ConfigError(f"no *.cfg files in {config_dir}")
    for p in paths:
        load_config(p)  # fail fast on a bad file before spending compute
    args = [(str(p), str(out / p.stem)) for p in paths]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_one, *zip(*args)))
    else:
        results = [_sweep_one(*a) for a in args]
    return results


_THETA = re.compile(r"^\s*([-+0-9.eE]*)\s*\*?\s*(pi)?\s*(?:/\s*([0-9.eE+]+))?\s*$")


def parse_theta(text: str) -> float:
    """Accept ``1.57``, ``pi``, ``pi/2``, ``3*pi/4``, ``2pi``."""
    m = _THETA.match(text)
    if not m or not (m.group(1) or m.group(2)):
        raise argparse.ArgumentTypeError(f"cannot parse angle {text!r}")
    coef = float(m.group(1)) if m.group(1) not in (None, "", "+", "-") else \
        (-1.0 if m.group(1) == "-" else 1.0)
    val = coef * (math.pi if m.group(2) else 1.0)
    if m.group(3):
        val /= float(m.group(3))
    return val


def _pair(text: str) -> tuple[int, int]:
    try:
        return analytic._pair(text)
    except SquidTipError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="squid-tip",
                                 description="rf-SQUID tipping-pulse simulator")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config_help="run configuration file"):
        p.add_argument("--config", required=True, help=config_help)
        p.add_argument("--out", default=None, help="output directory (overrides out_dir)")
        p.add_argument("--oracle", action="store_true",
                       help="also run the direct Crank-Nicolson integrator")
        return p

    p = common(sub.add_parser("spectrum", help="eigenlevels for eps = 0 and eps > 0"))
    p.add_argument("--wavefunctions", action="store_true", help="also dump wavefunction CSVs")
    p = common(sub.add_parser("evolve", help="propagate through the configured pulse train"))
    p.add_argument("--oracle-dt-ps", type=float, default=None)
    p = common(sub.add_parser("scan", help="peak transfer versus inter-pulse gap"))
    p.add_argument("--ts-min", type=float, default=None, help="ps (default resonance - 1)")
    p.add_argument("--ts-max", type=float, default=None, help="ps (default resonance + 1)")
    p.add_argument("--step", type=float, default=0.1, help="ps")
    p.add_argument("--pair", type=_pair, default=(1, 3))
    p.add_argument("--n-pulses", type=int, default=None)
    p = common(sub.add_parser("design", help="design a train for a target rotation"))
    p.add_argument("--theta", type=parse_theta, required=True, help="radians, e.g. pi/2")
    p.add_argument("--pair", type=_pair, default=(1, 3))
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--max-pulses", type=int, default=600)
    p = common(sub.add_parser("sweep", help="evolve every *.cfg in a directory"),
               config_help="directory of configuration files")
    p.add_argument("--jobs", type=int, default=1)
    return ap


def _error(code: int, exc: Exception) -> int:
    extra = ""
    if isinstance(exc, ConfigError):
        extra = f" line={exc.line if exc.line is not None else '-'} key={exc.key or '-'}"
    msg = str(exc).replace("\n", " ")
    print(f"error: code={code} kind={type(exc).__name__}{extra} message={msg}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "sweep":
            out = Path(args.out or "out")
            for path, text in cmd_sweep(Path(args.config), out, args.jobs):
                sys.stdout.write(f"# {Path(path).name}\n{text}")
            return EXIT_OK
        cfg = load_config(args.config)
        if args.out:
            cfg = replace(cfg, out_dir=args.out)
        out = Path(cfg.out_dir)
        if args.command == "spectrum":
            s = cmd_spectrum(cfg, out, args.wavefunctions)
        elif args.command == "evolve":
            s = cmd_evolve(cfg, out, args.oracle, args.oracle_dt_ps)
        elif args.command == "scan":
            s = cmd_scan(cfg, out, args.ts_min, args.ts_max, args.step, args.pair, args.n_pulses)
        else:
            s = cmd_design(cfg, out, args.theta, args.pair, args.m, args.max_pulses)
        text = format_summary(s)
        _write(out / f"summary_{args.command}.txt", text)
        _write(out / "config_used.cfg", serialize_config(cfg))
        sys.stdout.write(text)
        return EXIT_OK
    except ConfigError as exc:
        return _error(EXIT_CONFIG, exc)
    except NumericalError as exc:
        return _error(EXIT_NUMERICAL, exc)
    except SquidTipError as exc:
        return _error(EXIT_CONFIG, exc)


if __name__ == "__main__":
    raise SystemExit(main())
