"""Brute-force reference: Crank-Nicolson integration of the driven
Schroedinger equation on a truncated grid.

Every analytic result in the package can be checked against this solver,
which knows nothing about Laplace transforms or recurrences: the deltas
are realized as nearest-node potential spikes (split over two nodes when
a well sits off-lattice), the stepper is the unconditionally stable
trapezoidal rule with the drive evaluated at half steps, and the overlap
is taken against the discrete bound state of the unperturbed operator.

Hard walls keep the evolution exactly unitary (up to linear-solve
roundoff), which is itself an audit; the absorbing mode exists for long
exploratory runs and is excluded from acceptance tolerances.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded, eigh_tridiagonal

from .config import ModelConfig, PIPELINE_ORACLE, Potential, SurvivalTrace
from .errors import DomainError, StabilityError
from .freeparticle import WavePacket, packet_values

__all__ = ["GridSpec", "OracleResult", "evolve_pde", "richardson_check"]


@dataclass(frozen=True)
class GridSpec:
    """Spatial box, resolution and boundary treatment for the PDE run."""

    box_half_width: float
    dx: float
    dt: float
    boundary: str = "hard_wall"  # or 'absorbing'
    absorb_strength: float = 0.5
    absorb_width: float = 10.0

    def __post_init__(self):
        if self.dx > 0.05 + 1e-12:
            raise DomainError("dx must resolve the bound state: dx <= 0.05")
        if self.boundary not in ("hard_wall", "absorbing"):
            raise DomainError("boundary must be 'hard_wall' or 'absorbing'")

    @staticmethod
    def for_run(config: ModelConfig, t_max: float, dx: float = 0.025,
                dt: float = 5e-3, k_max: float | None = None) -> "GridSpec":
        """Conservative hard-wall box: X >= 4 k_max T with k_max estimated
        from the fastest open drive channel."""
        if k_max is None:
            n_open = int(np.ceil(1.0 / config.omega)) + 1
            e_max = max(n_open * config.omega - (1.0 if config.binding else 0.0), 0.5)
            k_max = float(np.sqrt(e_max))
        X = max(4.0 * k_max * t_max, 40.0)
        return GridSpec(box_half_width=X, dx=dx, dt=dt)


@dataclass
class OracleResult:
    trace: SurvivalTrace
    snapshots: dict = field(default_factory=dict)
    norm_drift: float = 0.0
    localization: np.ndarray | None = None
    bound_state_energy: float | None = None


def _grid(spec: GridSpec):
    n_half = int(round(spec.box_half_width / spec.dx))
    x = spec.dx * np.arange(-n_half, n_half + 1)
    return x


def _delta_weights_on_grid(x, dx, position, strength):
    """Split a delta of given strength over the two nodes bracketing it."""
    v = np.zeros(len(x))
    j = int(np.floor((position - x[0]) / dx))
    j = min(max(j, 0), len(x) - 2)
    frac = (position - x[j]) / dx
    v[j] += strength * (1.0 - frac) / dx
    v[j + 1] += strength * frac / dx
    return v


def _static_potential(config: ModelConfig, x, dx):
    v = np.zeros(len(x))
    if config.binding:
        v += _delta_weights_on_grid(x, dx, 0.0, -2.0)
    return v


def _drive_potential(config: ModelConfig, x, dx):
    cp, cm = config.delta_weights
    v = np.zeros(len(x))
    if cp != 0.0:
        v += _delta_weights_on_grid(x, dx, +config.a, 2.0 * cp)
    if cm != 0.0:
        v += _delta_weights_on_grid(x, dx, -config.a, 2.0 * cm)
    return v


def discrete_bound_state(config_or_spec, dx: float | None = None,
                         box_half_width: float | None = None):
    """Ground state of the discrete unperturbed operator (energy, u)."""
    if isinstance(config_or_spec, GridSpec):
        spec = config_or_spec
        dx, X = spec.dx, spec.box_half_width
    else:
        dx, X = dx, box_half_width
    n_half = int(round(X / dx))
    x = dx * np.arange(-n_half, n_half + 1)
    v = _delta_weights_on_grid(x, dx, 0.0, -2.0)
    diag = 2.0 / dx ** 2 + v
    off = -np.ones(len(x) - 1) / dx ** 2
    # lowest eigenpair only
    w, u = eigh_tridiagonal(diag, off, select="i", select_range=(0, 0))
    u0 = u[:, 0]
    u0 = u0 / np.sqrt(np.sum(np.abs(u0) ** 2) * dx)
    if u0[len(x) // 2] < 0:
        u0 = -u0
    return float(w[0]), x, u0


def evolve_pde(
    config: ModelConfig,
    initial,
    grid: GridSpec,
    t_max: float,
    snapshot_times=(),
    localization_half_width: float | None = None,
    sample_stride: int = 1,
) -> OracleResult:
    """Crank-Nicolson evolution; `initial` is 'bound_state' or a WavePacket.

    Returns the survival trace (overlap with the discrete bound state when
    binding is on, with the initial state otherwise), optional |psi|^2
    snapshots, the worst norm drift per unit time (hard wall), and the
    localization probability in |x| <= L when requested.
    """
    x = _grid(grid)
    dx, dt = grid.dx, grid.dt
    n_steps = int(round(t_max / dt))
    v_static = _static_potential(config, x, dx).astype(complex)
    v_drive = _drive_potential(config, x, dx)

    if grid.boundary == "absorbing":
        edge = np.maximum(np.abs(x) - (grid.box_half_width - grid.absorb_width), 0.0)
        v_static = v_static - 1j * grid.absorb_strength * (edge / grid.absorb_width) ** 2

    if initial == "bound_state":
        if not config.binding:
            raise DomainError("bound-state initial condition needs the binding well")
        e_b, _, u_b = discrete_bound_state(grid)
        psi = u_b.astype(complex)
        ref = u_b
        bound_energy = e_b
    elif isinstance(initial, WavePacket):
        psi = packet_values(initial, x).astype(complex)
        psi = psi / np.sqrt(np.sum(np.abs(psi) ** 2) * dx)
        ref = psi.copy()
        bound_energy = None
        if config.binding:
            _, _, u_b = discrete_bound_state(grid)
            ref = u_b
    else:
        raise DomainError("initial must be 'bound_state' or a WavePacket")

    kin = 1.0 / dx ** 2
    r_drive = config.r
    om = config.omega

    n_keep = n_steps // sample_stride + 1
    t_out = np.empty(n_keep)
    theta_out = np.empty(n_keep, dtype=complex)
    loc_out = np.empty(n_keep) if localization_half_width is not None else None
    if localization_half_width is not None:
        loc_mask = np.abs(x) <= localization_half_width

    snapshots = {}
    snap_left = sorted(set(float(ts) for ts in snapshot_times))

    def record(k, psi):
        i = k // sample_stride
        t_out[i] = k * dt
        theta_out[i] = np.sum(np.conj(ref) * psi) * dx
        if loc_out is not None:
            loc_out[i] = float(np.sum(np.abs(psi[loc_mask]) ** 2) * dx)

    record(0, psi)
    norm0 = np.sum(np.abs(psi) ** 2) * dx
    worst_drift = 0.0

    nx = len(x)
    ab = np.zeros((3, nx), dtype=complex)

    for k in range(1, n_steps + 1):
        t_mid = (k - 0.5) * dt
        v_full = v_static + r_drive * np.sin(om * t_mid) * v_drive
        diag_h = 2.0 * kin + v_full
        # (1 + i dt/2 H) psi_new = (1 - i dt/2 H) psi_old, H tridiagonal
        c = 0.5j * dt
        ab[0, 1:] = c * (-kin)
        ab[1, :] = 1.0 + c * diag_h
        ab[2, :-1] = c * (-kin)
        rhs = (1.0 - c * diag_h) * psi
        rhs[:-1] += -c * (-kin) * psi[1:]
        rhs[1:] += -c * (-kin) * psi[:-1]
        psi = solve_banded((1, 1), ab, rhs)
        if k % sample_stride == 0:
            record(k, psi)
        if snap_left and abs(k * dt - snap_left[0]) < 0.51 * dt:
            snapshots[snap_left.pop(0)] = (x.copy(), psi.copy())
        if grid.boundary == "hard_wall" and k % max(n_steps // 50, 1) == 0:
            norm = np.sum(np.abs(psi) ** 2) * dx
            drift = abs(norm - norm0) / (k * dt)
            worst_drift = max(worst_drift, drift)
            if drift > 1e-6:
                raise StabilityError(
                    f"norm drift {drift:.2e} per unit time exceeds 1e-6"
                )

    trace = SurvivalTrace(t_out, theta_out, PIPELINE_ORACLE, config)
    return OracleResult(
        trace=trace,
        snapshots=snapshots,
        norm_drift=worst_drift,
        localization=loc_out,
        bound_state_energy=bound_energy,
    )


def richardson_check(config: ModelConfig, grid: GridSpec, t_max: float):
    """Run at (dx, dt), (dx/2, dt/2), (dx/4, dt/4); report observed order.

    The order is measured on |theta|^2 at the common output times; the
    report flags non-monotone convergence instead of hiding it.
    """
    results = []
    for scale in (1, 2, 4):
        g = GridSpec(
            box_half_width=grid.box_half_width,
            dx=grid.dx / scale,
            dt=grid.dt / scale,
            boundary=grid.boundary,
            absorb_strength=grid.absorb_strength,
            absorb_width=grid.absorb_width,
        )
        res = evolve_pde(config, "bound_state", g, t_max, sample_stride=scale)
        results.append(res.trace)
    a0, a1, a2 = (tr.abs2 for tr in results)
    n = min(len(a0), len(a1), len(a2))
    d1 = float(np.max(np.abs(a1[:n] - a0[:n])))
    d2 = float(np.max(np.abs(a2[:n] - a1[:n])))
    monotone = d2 < d1
    order = float(np.log2(d1 / d2)) if d2 > 0 else np.inf
    return {
        "coarse_diff": d1,
        "fine_diff": d2,
        "observed_order": order,
        "monotone": monotone,
    }
