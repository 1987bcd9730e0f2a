"""Pulse-train propagation by basis projection, plus a direct grid integrator.

Amplitudes are kept in the Schroedinger picture: ``a_i(t)`` already carries the
``exp(-i E_i t / hbar)`` phase, so switching bases at a pulse edge is a plain
overlap-matrix product.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.ndimage import uniform_filter1d

from . import _kernels
from .errors import BasisError, EstimationError, ParameterError, StepSizeError
from .spectral import EigenSystem, GridSpec

NORM_TOL = 1e-9


@dataclass(frozen=True)
class PulseTrain:
    """Block-wave suppression schedule, times in seconds.

    Default layout is free-first: ``[free t_s, pulse t_d] * n_pulses``.  With
    ``pulse_first`` it is ``[pulse t_d, free t_s] * n_pulses``.
    """

    t_d: float
    t_s: float
    n_pulses: int
    eps: float
    pulse_first: bool = False

    def __post_init__(self):
        if not self.t_d > 0:
            raise ParameterError(f"t_d must be positive, got {self.t_d!r}")
        if not self.t_s >= 0:
            raise ParameterError(f"t_s must be non-negative, got {self.t_s!r}")
        if self.n_pulses < 0 or int(self.n_pulses) != self.n_pulses:
            raise ParameterError(f"n_pulses must be a non-negative integer, got {self.n_pulses!r}")
        if not (0.0 < self.eps < 0.5):
            raise ParameterError(f"eps must lie in (0, 0.5), got {self.eps!r}")

    @property
    def period(self) -> float:
        return self.t_s + self.t_d

    @property
    def duration(self) -> float:
        return self.n_pulses * self.period

    def segments(self, t_after: float = 0.0) -> list[tuple[float, bool]]:
        """``(duration, in_pulse)`` pairs covering the train and a free tail."""
        one = [(self.t_d, True), (self.t_s, False)] if self.pulse_first else \
              [(self.t_s, False), (self.t_d, True)]
        segs = [s for _ in range(self.n_pulses) for s in one if s[0] > 0]
        if t_after > 0:
            segs.append((t_after, False))
        return segs


@dataclass(frozen=True)
class StateVector:
    """Complex amplitudes in the eigenbasis ``basis``."""

    basis: EigenSystem
    amps: np.ndarray
    norm_loss: float = 0.0

    @classmethod
    def new(cls, basis: EigenSystem, amps) -> "StateVector":
        amps = np.asarray(amps, dtype=np.complex128)
        if amps.shape != (basis.n_states,):
            raise BasisError(f"expected {basis.n_states} amplitudes, got shape {amps.shape}")
        n = float(np.vdot(amps, amps).real)
        if abs(n - 1.0) > NORM_TOL:
            raise ParameterError(f"state not normalised: sum |a|^2 = {n!r}")
        return cls(basis, amps)

    @classmethod
    def eigenstate(cls, basis: EigenSystem, k: int) -> "StateVector":
        """Pure level ``k`` (1-based)."""
        a = np.zeros(basis.n_states, dtype=np.complex128)
        a[k - 1] = 1.0
        return cls.new(basis, a)

    @classmethod
    def superposition(cls, basis: EigenSystem, sign: int = +1) -> "StateVector":
        """(|1> + sign |2>)/sqrt(2); ``+1`` sits in the right well."""
        a = np.zeros(basis.n_states, dtype=np.complex128)
        a[0] = a[1] = 1 / math.sqrt(2)
        a[1] *= sign
        return cls.new(basis, a)

    @property
    def norm(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    @property
    def occupations(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def on_grid(self) -> np.ndarray:
        return self.basis.states @ self.amps


@dataclass
class Trajectory:
    """Sampled observables of one run; occupations always in the eps = 0 basis."""

    times: np.ndarray
    occupations: np.ndarray
    p_left: np.ndarray
    p_right: np.ndarray
    norm: np.ndarray
    in_pulse: np.ndarray
    events: list[tuple[float, str]] = field(default_factory=list)
    final_state: StateVector | None = None
    final_psi: np.ndarray | None = None

    @property
    def n_levels(self) -> int:
        return self.occupations.shape[1]

    def to_csv(self, path) -> None:
        write_trajectory_csv(self, path)


def _check_same_grid(a: EigenSystem, b: EigenSystem) -> None:
    if a.grid != b.grid or a.states.shape[0] != b.states.shape[0]:
        raise BasisError("eigen systems live on different grids")


def project(state: StateVector, target: EigenSystem) -> StateVector:
    """Re-express ``state`` in ``target``; the part outside the span is dropped."""
    _check_same_grid(state.basis, target)
    if target is state.basis:
        return state
    amps = state.basis.overlap(target) @ state.amps
    loss = max(state.norm - float(np.vdot(amps, amps).real), 0.0)
    return StateVector(target, amps, state.norm_loss + loss)


def free_evolve(state: StateVector, dt: float) -> StateVector:
    """Evolve for ``dt`` seconds under the state's own basis Hamiltonian."""
    if dt < 0:
        raise ParameterError("dt must be non-negative")
    if dt == 0:
        return state
    tau = dt / state.basis.scaled.time_unit
    return replace(state, amps=state.amps * np.exp(-1j * state.basis.energies * tau))


def _right_weights(grid: GridSpec) -> np.ndarray:
    x = grid.x
    w = (x > 0.5).astype(float)
    w[np.isclose(x, 0.5, rtol=0, atol=1e-12 * grid.spacing)] = 0.5
    return w


def right_well_matrix(es: EigenSystem) -> np.ndarray:
    """``W[i, j] = int_{phi > phi0/2} psi_i psi_j``."""
    w = _right_weights(es.grid)
    return es.states.T @ (w[:, None] * es.states) * es.spacing


def well_probabilities(state: StateVector, grid: GridSpec | None = None) -> tuple[float, float]:
    """Probability left and right of phi0/2 (a node exactly at phi0/2 is split)."""
    grid = grid or state.basis.grid
    if grid != state.basis.grid:
        raise BasisError("state not defined on the requested grid")
    dens = np.abs(state.on_grid()) ** 2
    w = _right_weights(grid)
    p_right = float(np.sum(w * dens) * state.basis.spacing)
    p_left = float(np.sum((1.0 - w) * dens) * state.basis.spacing)
    return p_left, p_right


def _sample_times(total: float, sample_dt: float) -> np.ndarray:
    n = int(math.floor(total / sample_dt * (1 + 1e-12)))
    t = np.arange(n + 1) * sample_dt
    if total - t[-1] > 1e-9 * sample_dt:
        t = np.append(t, total)
    return t


def _schedule(segs, t_samples):
    """Split sample indices by segment; a sample on an edge belongs to the later one."""
    edges = np.concatenate([[0.0], np.cumsum([d for d, _ in segs])])
    idx = np.searchsorted(edges, t_samples, side="right") - 1
    idx = np.clip(idx, 0, len(segs) - 1)
    return edges, idx


def _events(segs, edges) -> list[tuple[float, str]]:
    ev = []
    for k, (_, pulse) in enumerate(segs):
        if pulse:
            ev.append((float(edges[k]), "pulse_start"))
            ev.append((float(edges[k + 1]), "pulse_end"))
    return ev


def run_pulse_train(initial: StateVector, train: PulseTrain | None, basis0: EigenSystem,
                    basis1: EigenSystem | None = None, sample_dt: float = 1e-12,
                    t_after: float = 0.0) -> Trajectory:
    """Projection-method propagation through ``train`` followed by ``t_after`` of free time."""
    if initial.basis is not basis0:
        initial = project(initial, basis0)
    segs = train.segments(t_after) if train is not None else [(t_after, False)]
    segs = [s for s in segs if s[0] > 0] or [(0.0, False)]
    if any(p for _, p in segs):
        if basis1 is None:
            raise BasisError("a pulse train needs the suppressed basis")
        _check_same_grid(basis0, basis1)
        if basis1.n_states != basis0.n_states:
            raise BasisError("both bases must keep the same number of states")
    total = sum(d for d, _ in segs)
    t = _sample_times(total, sample_dt) if total > 0 else np.array([0.0])
    edges, idx = _schedule(segs, t)

    tu = basis0.scaled.time_unit
    W0 = right_well_matrix(basis0)
    W1 = right_well_matrix(basis1) if basis1 is not None else None
    O10 = basis0.overlap(basis1) if basis1 is not None else None  # b = O10 @ a

    N = basis0.n_states
    occ = np.empty((len(t), N))
    pr = np.empty(len(t))
    nrm = np.empty(len(t))
    state = initial
    for k, (dur, pulse) in enumerate(segs):
        target = basis1 if pulse else basis0
        state = project(state, target)
        sel = np.nonzero(idx == k)[0]
        if len(sel):
            tau = (t[sel] - edges[k]) / tu
            amps = state.amps[None, :] * np.exp(-1j * np.outer(tau, target.energies))
            W = W1 if pulse else W0
            pr[sel] = np.einsum("si,ij,sj->s", amps.conj(), W, amps).real
            nrm[sel] = np.sum(np.abs(amps) ** 2, axis=1)
            occ[sel] = np.abs(amps @ O10) ** 2 if pulse else np.abs(amps) ** 2
        state = free_evolve(state, dur)
    state = project(state, basis0)
    # the final sample sits on the last edge: report the state after the last projection
    occ[-1] = state.occupations
    nrm[-1] = state.norm
    pr[-1] = float(np.vdot(state.amps, W0 @ state.amps).real)
    in_pulse = np.array([segs[i][1] for i in idx], dtype=bool)
    in_pulse[-1] = False
    return Trajectory(times=t, occupations=occ, p_left=nrm - pr, p_right=pr, norm=nrm,
                      in_pulse=in_pulse, events=_events(segs, edges), final_state=state)


def direct_integrate(initial: StateVector, train: PulseTrain | None, basis0: EigenSystem,
                     dt: float | None = None, sample_dt: float = 1e-12,
                     t_after: float = 0.0, t_end: float | None = None) -> Trajectory:
    """Crank-Nicolson integration of the full grid wavefunction.

    Independent of the eigenbasis machinery except for reading off observables:
    the potential switches between ``eps = 0`` and ``train.eps`` as a block wave.
    ``dt`` (s) defaults to ``t_d / 100``; it must not exceed ``t_d / 20``.
    """
    if initial.basis is not basis0:
        initial = project(initial, basis0)
    scaled, grid = basis0.scaled, basis0.grid
    segs = train.segments(t_after) if train is not None else [(t_after, False)]
    segs = [s for s in segs if s[0] > 0]
    if t_end is not None:
        segs = _clip_segments(segs, t_end)
    if dt is None:
        dt = train.t_d / 100 if train is not None else 0.05e-12
    if train is not None and dt > train.t_d / 20 * (1 + 1e-12):
        raise StepSizeError(f"dt = {dt:.3g} s exceeds t_d/20 = {train.t_d / 20:.3g} s")
    if not dt > 0:
        raise StepSizeError("dt must be positive")

    from .spectral import discretize

    e_ref = float(np.mean(basis0.energies[: min(4, basis0.n_states)]))
    ops = {}
    for eps in {0.0} | ({train.eps} if train is not None else set()):
        op = discretize(scaled, eps, grid)
        ops[eps] = (op.diag - e_ref, op.off)

    total = sum(d for d, _ in segs)
    t = _sample_times(total, sample_dt) if total > 0 else np.array([0.0])
    edges, idx = _schedule(segs, t) if segs else (np.array([0.0]), np.zeros(1, int))
    tu = scaled.time_unit
    dx = basis0.spacing
    wR = _right_weights(grid) * dx
    S = basis0.states * dx

    n = len(t)
    occ = np.empty((n, basis0.n_states))
    pr = np.empty(n)
    nrm = np.empty(n)
    psi = initial.on_grid().astype(np.complex128)
    t_cur = 0.0

    def record(i, psi, t_now):
        ph = np.exp(-1j * e_ref * t_now / tu)
        c = S.T @ psi * ph
        occ[i] = np.abs(c) ** 2
        dens = np.abs(psi) ** 2
        pr[i] = float(np.sum(wR * dens))
        nrm[i] = float(np.sum(dens) * dx)

    def advance(psi, t_from, t_to, d, e):
        span = t_to - t_from
        if span <= 0:
            return psi
        nsteps = max(1, int(math.ceil(span / dt - 1e-9)))
        return _kernels.cn_propagate(psi, d, e, span / nsteps / tu, nsteps)

    for k, (dur, pulse) in enumerate(segs):
        d, e = ops[train.eps] if pulse else ops[0.0]
        for i in np.nonzero(idx == k)[0]:
            psi = advance(psi, t_cur, t[i], d, e)
            t_cur = t[i]
            record(i, psi, t_cur)
        psi = advance(psi, t_cur, edges[k + 1], d, e)
        t_cur = edges[k + 1]
    record(n - 1, psi, t_cur)
    psi = psi * np.exp(-1j * e_ref * t_cur / tu)
    final = StateVector(basis0, S.T @ psi)
    in_pulse = np.array([segs[i][1] for i in idx], dtype=bool) if segs else np.zeros(1, bool)
    in_pulse[-1] = False
    return Trajectory(times=t, occupations=occ, p_left=nrm - pr, p_right=pr, norm=nrm,
                      in_pulse=in_pulse, events=_events(segs, edges) if segs else [],
                      final_state=final, final_psi=psi)


def _clip_segments(segs, t_end):
    out, acc = [], 0.0
    for d, p in segs:
        if acc >= t_end:
            break
        out.append((min(d, t_end - acc), p))
        acc += d
    if acc < t_end:
        out.append((t_end - acc, False))
    return out


def fidelity(state: StateVector, psi: np.ndarray) -> float:
    """``|<state|psi>|^2`` on the shared grid."""
    return float(abs(np.vdot(state.on_grid(), psi) * state.basis.spacing) ** 2)


def measure_period(traj: Trajectory, smooth: float | None = None, hysteresis: float = 0.25,
                   t_min: float = 0.0, t_max: float | None = None) -> float:
    """Oscillation period of ``p_right`` from its mean crossings.

    ``smooth`` (s) applies a moving average first, which removes the fast
    beating of excited levels during a pulse train.  A crossing is counted only
    once the signal has left a band of ``hysteresis`` times its peak deviation.
    """
    mask = traj.times >= t_min
    if t_max is not None:
        mask &= traj.times <= t_max
    t = traj.times[mask]
    y = traj.p_right[mask]
    if len(t) < 3:
        raise EstimationError("too few samples")
    if smooth:
        w = max(1, int(round(smooth / (t[1] - t[0]))))
        y = uniform_filter1d(y, w, mode="nearest")
    y = y - y.mean()
    band = hysteresis * np.max(np.abs(y))
    if band == 0:
        raise EstimationError("signal is constant")
    up, down = [], []
    state = 0
    last_zero = None
    for i in range(1, len(y)):
        if y[i - 1] == 0 or (y[i - 1] < 0) != (y[i] < 0):
            frac = y[i - 1] / (y[i - 1] - y[i]) if y[i] != y[i - 1] else 0.0
            last_zero = t[i - 1] + frac * (t[i] - t[i - 1])
        s = 1 if y[i] > band else (-1 if y[i] < -band else 0)
        if s and s != state:
            if state and last_zero is not None:
                (up if s > 0 else down).append(last_zero)
            state = s
    # same-direction crossings only: insensitive to an offset of the mean
    if len(up) < 2 or len(down) < 2:
        raise EstimationError(
            f"need two full oscillations, found {len(up)} up and {len(down)} down crossings")
    periods = [(c[-1] - c[0]) / (len(c) - 1) for c in (up, down)]
    weights = [len(up) - 1, len(down) - 1]
    return float(np.average(periods, weights=weights))


def write_trajectory_csv(traj: Trajectory, path) -> None:
    N = traj.n_levels
    head = ["time_ps"] + [f"occ_{k:02d}" for k in range(1, N + 1)] + \
           ["p_left", "p_right", "norm", "in_pulse"]
    lines = [",".join(head)]
    for i in range(len(traj.times)):
        vals = [traj.times[i] * 1e12, *traj.occupations[i], traj.p_left[i], traj.p_right[i],
                traj.norm[i]]
        lines.append(",".join(f"{v:.17g}" for v in vals) + f",{int(traj.in_pulse[i])}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
