"""Four-level perturbative model of a suppression pulse and schedule design.

During a pulse the Hamiltonian is ``H0 + H'`` with ``H' = eps * beta_L *
cos(2 pi x)`` (scaled units), i.e. exactly the difference of the suppressed
and unsuppressed potentials.  Because ``H'`` is even about phi0/2 it only
couples levels of equal parity, so the lowest four levels split into the
independent pairs (1, 3) and (2, 4).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DesignError, ParameterError, PreconditionError, NumericalError
from .evolve import PulseTrain, StateVector, run_pulse_train
from .model import SquidParams, nondimensionalize
from .spectral import EVEN, EigenSystem, GridSpec, solve

PAIRS = {(1, 3), (2, 4)}
SELECTION_RULE_TOL = 1e-8
RESONANCE_TOL = 0.005


def _pair(pair) -> tuple[int, int]:
    if isinstance(pair, str):
        pair = tuple(int(p) for p in pair.replace("-", " ").split())
    pair = tuple(pair)
    if pair not in PAIRS:
        raise ParameterError(f"pair must be one of 1-3, 2-4; got {pair!r}")
    return pair


@dataclass(frozen=True)
class PerturbationMatrix:
    """Matrix elements of the pulse perturbation between unperturbed levels (scaled energy)."""

    matrix: np.ndarray
    eps: float
    parities: tuple[str, ...]

    def __getitem__(self, ij):
        i, j = ij
        return self.matrix[i - 1, j - 1]

    def forbidden_ratio(self) -> float:
        """Largest parity-forbidden element relative to the largest allowed off-diagonal one."""
        n = len(self.parities)
        same = np.array([[self.parities[i] == self.parities[j] for j in range(n)] for i in range(n)])
        allowed = np.abs(self.matrix[same & ~np.eye(n, dtype=bool)])
        scale = allowed.max() if allowed.size else 0.0
        bad = np.abs(self.matrix[~same]).max() if (~same).any() else 0.0
        if scale == 0.0:
            return 0.0 if bad == 0.0 else math.inf
        return float(bad / scale)


def perturbation_matrix(es0: EigenSystem, eps: float, size: int = 4) -> PerturbationMatrix:
    if es0.parities is None:
        raise PreconditionError("eigen system has no parity labels")
    if es0.n_states < size:
        raise PreconditionError(f"need at least {size} states, have {es0.n_states}")
    x = es0.x
    psi = es0.states[:, :size]
    h_prime = eps * es0.scaled.beta_L * np.cos(2 * math.pi * x)
    m = np.trapezoid(psi[:, :, None] * (h_prime[:, None, None] * psi[:, None, :]), x, axis=0)
    m = 0.5 * (m + m.T)
    pm = PerturbationMatrix(m, eps, es0.parities[:size])
    if eps > 0 and pm.forbidden_ratio() > SELECTION_RULE_TOL:
        raise NumericalError(f"selection rule violated: ratio {pm.forbidden_ratio():.3g}")
    return pm


@dataclass(frozen=True)
class RabiSolution:
    """Closed-form two-level dynamics within one suppression interval.

    Amplitudes ``b`` are the interaction-picture coefficients with the
    first-order diagonal shifts removed; all quantities are scaled (hbar = 1)
    and the evaluators take time in seconds from the pulse start.
    """

    pair: tuple[int, int]
    lam: float
    nu: float
    A: complex
    coupling: float
    b_lower0: complex
    time_unit: float

    @property
    def lam_hz(self) -> float:
        return self.lam / (2 * math.pi * self.time_unit)

    @property
    def nu_per_s(self) -> float:
        return self.nu / self.time_unit

    def b_upper(self, t):
        tau = np.asarray(t) / self.time_unit
        return self.A * np.exp(0.5j * self.lam * tau) * np.sin(self.nu * tau)

    def b_lower(self, t):
        tau = np.asarray(t) / self.time_unit
        if self.nu == 0:
            return self.b_lower0 * np.ones_like(tau, dtype=complex)
        return self.b_lower0 * np.exp(-0.5j * self.lam * tau) * (
            np.cos(self.nu * tau) + 0.5j * self.lam / self.nu * np.sin(self.nu * tau))

    def upper_population(self, t):
        return np.abs(self.b_upper(t)) ** 2

    def kick_angle(self, t_d: float) -> float:
        """Rotation angle (in amplitude) delivered by one pulse of length ``t_d``."""
        return float(math.asin(min(1.0, abs(self.b_upper(t_d)) / max(abs(self.b_lower0), 1e-300))))


def rabi_solution(es0: EigenSystem, pm: PerturbationMatrix, pair=(1, 3),
                  b_lower0: complex = 1.0) -> RabiSolution:
    """Solution with the upper level initially empty."""
    lo, hi = _pair(pair)
    e = es0.energies
    lam = pm[hi, hi] - pm[lo, lo] + e[hi - 1] - e[lo - 1]
    c = pm[hi, lo]
    nu = math.sqrt(lam**2 + 4 * abs(c) ** 2) / 2
    A = 0.0 if nu == 0 else c / (1j * nu) * b_lower0
    return RabiSolution((lo, hi), float(lam), nu, complex(A), float(c), complex(b_lower0),
                        es0.scaled.time_unit)


def resonance_spacing(es0: EigenSystem, pair=(1, 3), m: int = 1, t_d: float = 0.0,
                      pm: PerturbationMatrix | None = None) -> float:
    """Inter-pulse gap (s) that keeps the pair's coherence in step with the pulses.

    With ``t_d = 0`` this is ``m h / (E_hi - E_lo)``.  For pulses of finite
    length the phase the pair accumulates inside a pulse (at the shifted rate
    ``lam``) is subtracted from the gap, so that one full cycle gap + pulse
    advances the relative phase by exactly ``2 pi m``.
    """
    if int(m) != m or m < 1:
        raise ParameterError(f"m must be a positive integer, got {m!r}")
    lo, hi = _pair(pair)
    de = es0.energies[hi - 1] - es0.energies[lo - 1]
    tu = es0.scaled.time_unit
    if t_d == 0.0:
        return m * 2 * math.pi / de * tu
    if pm is None:
        raise PreconditionError("finite t_d needs the perturbation matrix")
    lam = pm[hi, hi] - pm[lo, lo] + de
    gap = (2 * math.pi * m - lam * t_d / tu) / de * tu
    if gap < 0:
        raise ParameterError(f"pulse of {t_d:.3g} s is longer than resonance order m = {m} allows")
    return gap


def phase_advance(es0: EigenSystem, t_excited: float, t_ground: float) -> float:
    """Flux-qubit phase advance ``(w4 - w3) T_exc / 2 + (w2 - w1) T_gnd / 2`` (radians).

    This is the half-angle of the flux superposition: a value of pi brings the
    state back to the starting well.
    """
    if t_excited < 0 or t_ground < 0:
        raise ParameterError("durations must be non-negative")
    w = es0.energies / es0.scaled.time_unit
    return 0.5 * (w[3] - w[2]) * t_excited + 0.5 * (w[1] - w[0]) * t_ground


@dataclass(frozen=True)
class ScanRow:
    t_s: float
    peak_occ3: float
    peak_occ4: float
    final_p_right: float


def _bases(params, eps, grid, n_states, bases):
    if bases is not None:
        return bases
    sc = nondimensionalize(params)
    b0 = solve(sc, 0.0, grid, n_states)
    return b0, (solve(sc, eps, grid, n_states) if eps > 0 else b0)


def scan_values(ts_min: float, ts_max: float, step: float) -> np.ndarray:
    if not (step > 0 and ts_max >= ts_min):
        raise ParameterError("scan range must be non-empty with positive step")
    n = int(math.floor((ts_max - ts_min) / step + 1e-9))
    return ts_min + step * np.arange(n + 1)


def resonance_scan(params: SquidParams | None, eps: float, t_d: float, ts_range, n_pulses: int,
                   step: float | None = None, *, grid: GridSpec = GridSpec(), n_states: int = 10,
                   bases: tuple[EigenSystem, EigenSystem] | None = None, initial: str = "plus",
                   sample_dt: float = 1e-12) -> list[ScanRow]:
    """Peak level-3/4 occupation versus inter-pulse gap.

    ``ts_range`` is ``(ts_min, ts_max)`` together with ``step``, or an explicit
    sequence of gaps when ``step`` is None.  Rows come back in ``t_s`` order.
    """
    b0, b1 = _bases(params, eps, grid, n_states, bases)
    values = scan_values(*ts_range, step) if step is not None else np.asarray(ts_range, float)
    psi0 = initial_state(b0, initial)
    rows = []
    for ts in values:
        if eps > 0:
            traj = run_pulse_train(psi0, PulseTrain(t_d, float(ts), n_pulses, eps), b0, b1,
                                   sample_dt=sample_dt)
        else:
            traj = run_pulse_train(psi0, None, b0, sample_dt=sample_dt,
                                   t_after=n_pulses * (t_d + ts))
        occ = traj.occupations
        rows.append(ScanRow(float(ts), float(occ[:, 2].max() - psi0.occupations[2]),
                            float(occ[:, 3].max() - psi0.occupations[3]),
                            float(traj.p_right[-1])))
    return rows


def write_scan_csv(rows: list[ScanRow], path) -> None:
    lines = ["t_s_ps,peak_occ3,peak_occ4,final_p_right"]
    for r in rows:
        lines.append(f"{r.t_s * 1e12:.17g},{r.peak_occ3:.17g},{r.peak_occ4:.17g},"
                     f"{r.final_p_right:.17g}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def initial_state(basis: EigenSystem, spec: str = "plus") -> StateVector:
    """``plus``/``minus`` superposition of levels 1 and 2, or ``eigen:K``."""
    if spec == "plus":
        return StateVector.superposition(basis, +1)
    if spec == "minus":
        return StateVector.superposition(basis, -1)
    if spec.startswith("eigen:"):
        k = int(spec.split(":", 1)[1])
        if not 1 <= k <= basis.n_states:
            raise ParameterError(f"eigenstate index {k} outside 1..{basis.n_states}")
        return StateVector.eigenstate(basis, k)
    raise ParameterError(f"unknown initial state {spec!r}")


@dataclass(frozen=True)
class Schedule:
    """A designed pulse train and the numbers that went into it."""

    train: PulseTrain
    pair: tuple[int, int]
    m: int
    target_theta: float
    t_s_resonant: float
    pulses_per_rabi_cycle: float
    predicted_pulses: int
    predicted_tip_time: float
    predicted_phase_advance: float
    model_theta: float
    model_leakage: float

    @property
    def tip_time(self) -> float:
        return self.train.duration

    def resonance_offset(self) -> float:
        return abs(self.train.t_s - self.t_s_resonant) / self.train.t_s

    def summary(self) -> dict[str, object]:
        return {
            "target_theta_rad": self.target_theta,
            "pair": f"{self.pair[0]}-{self.pair[1]}",
            "m": self.m,
            "t_d_ps": self.train.t_d * 1e12,
            "t_s_ps": self.train.t_s * 1e12,
            "t_s_resonant_ps": self.t_s_resonant * 1e12,
            "n_pulses": self.train.n_pulses,
            "eps": self.train.eps,
            "pulses_per_rabi_cycle": self.pulses_per_rabi_cycle,
            "predicted_pulses": self.predicted_pulses,
            "predicted_tip_time_ns": self.predicted_tip_time * 1e9,
            "predicted_phase_advance_rad": self.predicted_phase_advance,
            "model_theta_rad": self.model_theta,
            "model_leakage": self.model_leakage,
            "tip_time_ns": self.tip_time * 1e9,
        }


def _cycle_map(b0: EigenSystem, b1: EigenSystem, t_s: float, t_d: float, pulse_first: bool):
    tu = b0.scaled.time_unit
    O = b0.overlap(b1)
    free = np.diag(np.exp(-1j * b0.energies * t_s / tu))
    pulse = O.T @ np.diag(np.exp(-1j * b1.energies * t_d / tu)) @ O
    return free @ pulse if pulse_first else pulse @ free


def rotation_history(b0: EigenSystem, b1: EigenSystem, initial: StateVector, t_s: float,
                     t_d: float, n_max: int, pulse_first: bool = False):
    """Accumulated qubit rotation and leakage after each of ``n_max`` pulse cycles.

    The rotation is the unwrapped change of ``arg(a1 conj(a2))``; leakage is
    the probability missing from levels 1 and 2.
    """
    U = _cycle_map(b0, b1, t_s, t_d, pulse_first)
    a = initial.amps.copy()
    rel0 = a[0] * np.conj(a[1])
    if abs(rel0) == 0:
        raise PreconditionError("initial state must populate both levels 1 and 2")
    phases = np.empty(n_max + 1)
    leak = np.empty(n_max + 1)
    phases[0], leak[0] = 0.0, 1.0 - abs(a[0]) ** 2 - abs(a[1]) ** 2
    for n in range(1, n_max + 1):
        a = U @ a
        phases[n] = np.angle(a[0] * np.conj(a[1]) / rel0)
        leak[n] = 1.0 - abs(a[0]) ** 2 - abs(a[1]) ** 2
    return np.unwrap(phases), leak


def design_schedule(params: SquidParams | None, eps: float, t_d: float, target_theta: float,
                    pair=(1, 3), m: int = 1, *, grid: GridSpec = GridSpec(), n_states: int = 10,
                    bases: tuple[EigenSystem, EigenSystem] | None = None,
                    initial: str = "plus", max_pulses: int = 600, pulse_first: bool = False,
                    n_detune: int = 81, theta_tol: float = 0.05,
                    leak_tol: float = 0.03) -> Schedule:
    """Resonant pulse train rotating the flux qubit by ``target_theta``.

    A full excitation/de-excitation cycle of the resonant pair flips the sign
    of the lower level's amplitude, i.e. rotates the qubit by pi.  Other
    angles come from running slightly off resonance, which changes the phase
    picked up per cycle.  The analytic model fixes the resonant gap and the
    expected pulse count; the final choice of gap (within the resonance
    tolerance) and pulse count is made on the truncated cycle map.  The result
    should still be confirmed with :func:`run_pulse_train`.
    """
    if not (0 < target_theta <= 2 * math.pi):
        raise ParameterError("target_theta must lie in (0, 2 pi]")
    lo, hi = _pair(pair)
    b0, b1 = _bases(params, eps, grid, n_states, bases)
    pm = perturbation_matrix(b0, eps)
    rabi = rabi_solution(b0, pm, (lo, hi))
    kick = rabi.kick_angle(t_d)
    if kick == 0:
        raise DesignError("pulse does not couple the pair", 0.0)
    per_cycle = math.pi / kick
    ts_res = resonance_spacing(b0, (lo, hi), m, t_d, pm)
    n_pred = max(1, int(round(target_theta / math.pi * per_cycle)))
    t_pred = n_pred * (ts_res + t_d)
    # the resonant pair spends on average half of each Rabi cycle excited
    adv = phase_advance(b0, 0.5 * t_pred, 0.5 * t_pred)

    psi0 = initial_state(b0, initial)
    best = None   # (n, cost, t_s, rotation, leakage)
    closest = None
    max_reached = 0.0
    for ts in ts_res * (1 + RESONANCE_TOL * np.linspace(-1, 1, n_detune)):
        rot, leak = rotation_history(b0, b1, psi0, float(ts), t_d, max_pulses, pulse_first)
        ok = leak <= leak_tol
        ok[0] = False
        if ok.any():
            max_reached = max(max_reached, float(np.abs(rot[ok]).max()))
        # any rotation congruent to the target counts, as long as it is reached going forward
        err = np.abs(rot - target_theta - 2 * math.pi * np.maximum(
            np.round((rot - target_theta) / (2 * math.pi)), 0))
        cost = err + 4.0 * np.maximum(leak, 0.0)
        cost[0] = np.inf
        n = int(np.argmin(cost))
        if closest is None or cost[n] < closest[1]:
            closest = (n, float(cost[n]), float(ts), float(rot[n]), float(leak[n]), float(err[n]))
        feasible = np.nonzero(ok & (err <= theta_tol))[0]
        if feasible.size:
            # cleanest train within half a Rabi cycle of the earliest feasible one
            window = feasible[feasible <= feasible[0] + per_cycle / 2]
            n = int(window[np.argmin(cost[window])])
            cand = (n, float(cost[n]), float(ts), float(rot[n]), float(leak[n]))
            if best is None or (n + per_cycle / 2 < best[0]) or \
                    (abs(n - best[0]) <= per_cycle / 2 and cand[1] < best[1]):
                best = cand
    if best is None:
        n, _, ts, rot, leak, err = closest
        raise DesignError(f"target {target_theta:.4g} rad not reachable within {max_pulses} pulses "
                          f"(closest {rot:.4g} rad, leakage {leak:.3g}); max reachable "
                          f"{max_reached:.4g} rad", max_reached)
    n, _, ts, rot, leak = best
    train = PulseTrain(t_d, ts, n, eps, pulse_first)
    return Schedule(train, (lo, hi), m, target_theta, ts_res, per_cycle, n_pred, t_pred, adv,
                    rot, leak)
