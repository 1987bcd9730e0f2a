"""Finite-difference eigenproblem of the rf-SQUID Hamiltonian."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import DiscretizationError, NumericalError, ParameterError, ParityError
from .model import ScaledParams, _check_eps, well_geometry

EVEN = "even"
ODD = "odd"
MAX_STATES = 16


@dataclass(frozen=True)
class GridSpec:
    """Uniform flux grid, bounds in units of phi0 (endpoints included)."""

    phi_min: float = -0.1
    phi_max: float = 1.1
    n_points: int = 16384

    def __post_init__(self):
        if not (self.phi_min < 0.5 < self.phi_max):
            raise DiscretizationError("grid must bracket the half-flux point")
        if self.n_points < 257:
            raise DiscretizationError(f"n_points must be >= 257, got {self.n_points}")

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.phi_min, self.phi_max, self.n_points)

    @property
    def spacing(self) -> float:
        return (self.phi_max - self.phi_min) / (self.n_points - 1)

    def is_mirror_symmetric(self) -> bool:
        return math.isclose(self.phi_min + self.phi_max, 1.0, abs_tol=1e-12)


@dataclass(frozen=True)
class TridiagonalOperator:
    """Real symmetric tridiagonal Hamiltonian on a grid (scaled units)."""

    diag: np.ndarray
    off: np.ndarray
    grid: GridSpec | None
    eps: float
    scaled: ScaledParams | None = None
    potential: np.ndarray | None = None
    custom: bool = False


@dataclass(frozen=True)
class EigenSystem:
    """Lowest eigenpairs of one potential.

    ``states`` has shape (n_points, n_states); columns are normalised so that
    ``sum(psi**2) * spacing == 1``.
    """

    energies: np.ndarray
    states: np.ndarray
    grid: GridSpec | None
    eps: float
    scaled: ScaledParams | None = None
    parities: tuple[str, ...] | None = None
    spacing: float = field(default=1.0)
    potential: np.ndarray | None = None
    custom: bool = False

    @property
    def n_states(self) -> int:
        return len(self.energies)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    @property
    def energies_joule(self) -> np.ndarray:
        return self.energies * self.scaled.energy_unit

    @property
    def energies_hz(self) -> np.ndarray:
        return self.scaled.energy_to_hz(self.energies)

    def overlap(self, other: "EigenSystem") -> np.ndarray:
        """Matrix ``M[j, i] = <other_j | self_i>``."""
        return other.states.T @ self.states * self.spacing

    def truncated(self, n: int) -> "EigenSystem":
        par = None if self.parities is None else self.parities[:n]
        return replace(self, energies=self.energies[:n], states=self.states[:, :n], parities=par)


def tridiagonal_hamiltonian(x: np.ndarray, u: np.ndarray, kinetic: float):
    """Second-order central-difference ``-kinetic d^2/dx^2 + u`` with hard walls."""
    x = np.asarray(x, dtype=float)
    dx = x[1] - x[0]
    diag = np.asarray(u, dtype=float) + 2.0 * kinetic / dx**2
    off = np.full(len(x) - 1, -kinetic / dx**2)
    return diag, off


def discretize(scaled: ScaledParams, eps: float, grid: GridSpec = GridSpec(),
               potential: Callable[[np.ndarray], np.ndarray] | None = None) -> TridiagonalOperator:
    """Tridiagonal Hamiltonian for suppression ``eps`` on ``grid``.

    ``potential`` replaces the SQUID potential (scaled energy as a function of
    flux in phi0 units); used for oracle tests with known spectra.
    """
    _check_eps(eps)
    x = grid.x
    if potential is None:
        try:
            geo = well_geometry(scaled, eps)
        except ParameterError as exc:
            raise DiscretizationError(str(exc)) from exc
        margin = 2 * grid.spacing
        if not (grid.phi_min + margin < geo.x_left and geo.x_right < grid.phi_max - margin):
            raise DiscretizationError(
                f"wells at {geo.x_left:.4f}, {geo.x_right:.4f} phi0 not inside grid "
                f"[{grid.phi_min}, {grid.phi_max}]")
        u = scaled.potential(x, eps)
    else:
        u = np.asarray(potential(x), dtype=float)
    diag, off = tridiagonal_hamiltonian(x, u, scaled.kinetic)
    return TridiagonalOperator(diag, off, grid, eps, scaled, u, potential is not None)


def _sign_fix(states: np.ndarray, x: np.ndarray) -> np.ndarray:
    ref = int(np.argmin(np.abs(x - 0.55)))
    out = states.copy()
    for k in range(out.shape[1]):
        col = out[:, k]
        amax = np.max(np.abs(col))
        v = col[ref]
        if abs(v) < 1e-12 * amax:
            v = col[np.argmax(np.abs(col) > 1e-6 * amax)]
        if v < 0:
            out[:, k] = -col
    return out


def _lowest(diag, off, n):
    n = min(n, len(diag))
    try:
        return eigh_tridiagonal(diag, off, select="i", select_range=(0, n - 1),
                                lapack_driver="stebz")
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericalError(f"tridiagonal eigensolver did not converge: {exc}") from exc


def _mirror_symmetric(op: TridiagonalOperator) -> bool:
    if op.grid is None or not op.grid.is_mirror_symmetric() or len(op.diag) < 4:
        return False
    scale = np.max(np.abs(op.diag))
    return (np.max(np.abs(op.diag - op.diag[::-1])) <= 1e-12 * scale
            and np.max(np.abs(op.off - op.off[::-1])) <= 1e-12 * scale)


def _solve_by_parity(diag, off, n_states):
    """Solve a mirror-symmetric operator in its even and odd sectors separately.

    Tunnel splittings of deep double wells can approach round-off in the full
    problem, where the two members of a doublet then mix; on the half grid the
    parity is imposed exactly.
    """
    n = len(diag)
    d = 0.5 * (diag + diag[::-1])
    e = 0.5 * (off + off[::-1])
    sectors = []
    if n % 2 == 0:
        m = n // 2
        for sign in (1.0, -1.0):
            dh = d[m:].copy()
            dh[0] += sign * e[m - 1]
            w, h = _lowest(dh, e[m:], n_states)
            sectors.append((w, np.vstack([sign * h[::-1], h]) / math.sqrt(2.0)))
    else:
        c = n // 2
        eh = e[c:].copy()
        eh[0] *= math.sqrt(2.0)
        w, h = _lowest(d[c:], eh, n_states)
        full = np.vstack([h[:0:-1], math.sqrt(2.0) * h[:1], h[1:]]) / math.sqrt(2.0)
        sectors.append((w, full))
        w, h = _lowest(d[c + 1:], e[c + 1:], n_states)
        zero = np.zeros((1, h.shape[1]))
        sectors.append((w, np.vstack([-h[::-1], zero, h]) / math.sqrt(2.0)))
    w = np.concatenate([s[0] for s in sectors])
    v = np.hstack([s[1] for s in sectors])
    order = np.argsort(w, kind="stable")[:n_states]
    return w[order], v[:, order]


def eigensolve(op: TridiagonalOperator, n_states: int = 10) -> EigenSystem:
    """Lowest ``n_states`` eigenpairs with the package's sign convention."""
    if not (1 <= n_states <= MAX_STATES):
        raise ValueError(f"n_states must be in [1, {MAX_STATES}], got {n_states}")
    if _mirror_symmetric(op):
        # a doublet tied to round-off is still well defined: the sectors keep it apart
        w, v = _solve_by_parity(op.diag, op.off, n_states)
    else:
        w, v = _lowest(op.diag, op.off, n_states)
        if np.any(np.diff(w) <= 0):
            raise NumericalError(f"degenerate or unsorted spectrum: gaps {np.diff(w)}")
    x = op.grid.x if op.grid is not None else np.arange(len(op.diag), dtype=float)
    dx = x[1] - x[0]
    v = _sign_fix(v, x) / math.sqrt(dx)
    return EigenSystem(energies=w, states=v, grid=op.grid, eps=op.eps, scaled=op.scaled,
                       spacing=dx, potential=op.potential, custom=op.custom)


def _mirror(psi: np.ndarray, grid: GridSpec) -> np.ndarray:
    if grid.is_mirror_symmetric():
        return psi[::-1]
    x = grid.x
    return np.interp(1.0 - x, x, psi, left=0.0, right=0.0)


def classify_parity(es: EigenSystem, tol: float = 1e-6) -> EigenSystem:
    """Label each state even or odd about phi0/2; raise if neither fits."""
    if es.scaled is not None and not math.isclose(es.scaled.f_x, 0.5, abs_tol=1e-12):
        raise ParityError(f"parity undefined for asymmetric bias f_x = {es.scaled.f_x}")
    labels = []
    for k in range(es.n_states):
        psi = es.states[:, k]
        mir = _mirror(psi, es.grid)
        nrm = np.linalg.norm(psi)
        r_even = np.linalg.norm(psi - mir) / nrm
        r_odd = np.linalg.norm(psi + mir) / nrm
        if r_even < tol:
            labels.append(EVEN)
        elif r_odd < tol:
            labels.append(ODD)
        else:
            raise ParityError(f"state {k + 1} has no definite parity "
                              f"(even mismatch {r_even:.3g}, odd mismatch {r_odd:.3g})")
    return replace(es, parities=tuple(labels))


def levels_below_barrier(es: EigenSystem, scaled: ScaledParams | None = None,
                         eps: float | None = None) -> int:
    """Number of eigenenergies strictly below the barrier top U(phi0/2)."""
    if es.custom:
        return int(np.sum(es.energies < _grid_barrier(es)))
    scaled = scaled if scaled is not None else es.scaled
    eps = es.eps if eps is None else eps
    if scaled is None:
        raise ParameterError("no potential attached to this eigensystem")
    geo = well_geometry(scaled, eps)
    return int(np.sum(es.energies < geo.u_barrier))


def _grid_barrier(es: EigenSystem) -> float:
    u, x = es.potential, es.x
    c = int(np.argmin(np.abs(x - 0.5)))
    left, right = u[:c].min(), u[c + 1:].min()
    if not (u[c] > left and u[c] > right and u[c] >= u[c - 1] and u[c] >= u[c + 1]):
        raise ParameterError("potential has no central barrier")
    return float(u[c])


def solve(scaled: ScaledParams, eps: float = 0.0, grid: GridSpec = GridSpec(),
          n_states: int = 10, parity: bool = True) -> EigenSystem:
    """discretize + eigensolve (+ classify_parity for symmetric bias)."""
    es = eigensolve(discretize(scaled, eps, grid), n_states)
    if parity and math.isclose(scaled.f_x, 0.5, abs_tol=1e-12):
        es = classify_parity(es)
    return es


def write_spectrum_csv(es: EigenSystem, path) -> None:
    h = es.scaled.consts.h
    lines = ["index,energy_joule,energy_over_h_hz,parity"]
    par: Sequence[str] = es.parities or ("",) * es.n_states
    for i, (ej, p) in enumerate(zip(es.energies_joule, par), start=1):
        lines.append(f"{i},{ej:.17g},{ej / h:.17g},{p}")
    _write_lines(path, lines)


def write_wavefunctions_csv(es: EigenSystem, path) -> None:
    cols = ",".join(f"psi_{k:02d}" for k in range(1, es.n_states + 1))
    lines = [f"phi_phi0,{cols}"]
    for xi, row in zip(es.x, es.states):
        lines.append(f"{xi:.17g}," + ",".join(f"{v:.17g}" for v in row))
    _write_lines(path, lines)


def _write_lines(path, lines) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
