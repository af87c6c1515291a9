"""Trapping of an initially free, localized particle by the oscillating
delta pair.

With no binding well the state would spread ballistically and the
probability of staying in any fixed window decays like 1/t.  On the
free-trap manifold (quasi-energy g0 = -(pi N/a)^2, amplitude tuned by
the same continued-fraction matching as the bound case) the Laplace
solution keeps poles on the imaginary axis at i(g0 + n omega): their
residues form a two-frequency, never-decaying localized wave between the
wells.  The n = 0 channel, which would radiate (g0 + 0 omega lies in the
continuum), is silenced by destructive interference of the two wells --
that cancellation is literally the quantization condition, and the code
relies on it: residue profiles are evanescent for n >= 1 and the n = 0
profile vanishes identically outside the pair.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .branchcut import sqrt_ip
from .config import ModelConfig, Potential, StabilizationPoint
from .errors import ConvergenceError, DomainError
from .floquet import solve_block_tridiagonal

_PH = np.exp(1j * np.pi / 4)


@dataclass(frozen=True)
class WavePacket:
    """Initial localized state; gaussian by default, or sampled F(k)."""

    kind: str = "gaussian"
    center: float = 0.0
    width: float = 1.0
    momentum: float = 0.0
    k_grid: np.ndarray | None = None
    f_values: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == "gaussian":
            if self.width <= 0:
                raise DomainError("gaussian width must be positive")
        elif self.kind == "custom":
            if self.k_grid is None or self.f_values is None:
                raise DomainError("custom packets need k_grid and f_values")
            norm = np.trapezoid(np.abs(self.f_values) ** 2, self.k_grid)
            if abs(norm - 1.0) > 1e-8:
                raise DomainError(f"custom packet norm {norm} != 1 within 1e-8")
        else:
            raise DomainError("kind must be 'gaussian' or 'custom'")

    def momentum_amplitude(self, k):
        """F(k) with int |F|^2 dk = 1."""
        if self.kind == "gaussian":
            w, k0, c = self.width, self.momentum, self.center
            return (
                (w * w / np.pi) ** 0.25
                * np.exp(-w * w * (k - k0) ** 2 / 2.0)
                * np.exp(-1j * (k - k0) * c)
            )
        return np.interp(k, self.k_grid, self.f_values, left=0.0, right=0.0)


def packet_values(packet: WavePacket, x):
    """psi(x, 0) on a grid."""
    x = np.asarray(x, dtype=float)
    if packet.kind == "gaussian":
        w, k0, c = packet.width, packet.momentum, packet.center
        return (
            (1.0 / (np.pi * w * w)) ** 0.25
            * np.exp(-((x - c) ** 2) / (2.0 * w * w))
            * np.exp(1j * k0 * (x - c))
        )
    k = packet.k_grid
    F = packet.f_values
    phase = np.exp(1j * np.outer(x, k))
    return np.trapezoid(F[None, :] * phase / np.sqrt(2 * np.pi), k, axis=1)


def packet_norm_check(packet: WavePacket, tol: float = 1e-8) -> float:
    """int |F(k)|^2 dk, which must equal 1 within tol."""
    if packet.kind == "gaussian":
        return 1.0
    return float(np.trapezoid(np.abs(packet.f_values) ** 2, packet.k_grid))


def free_evolve(packet: WavePacket, x, t: float, quadrature: bool = False):
    """Free propagation psi0(x, t).

    Gaussian packets use the closed spreading form; quadrature=True (or a
    custom packet) integrates F(k) e^{i k x - i k^2 t} directly, which is
    the cross-check path.
    """
    if t < 0:
        raise DomainError("t must be >= 0")
    x = np.asarray(x, dtype=float)
    if packet.kind == "gaussian" and not quadrature:
        w, k0, c = packet.width, packet.momentum, packet.center
        s = 1.0 + 2j * t / (w * w)
        xc = x - c - 2.0 * k0 * t
        return (
            (1.0 / (np.pi * w * w)) ** 0.25
            / np.sqrt(s)
            * np.exp(-(xc ** 2) / (2.0 * w * w * s) + 1j * k0 * (x - c) - 1j * k0 * k0 * t)
        )
    if packet.kind == "gaussian":
        w, k0 = packet.width, packet.momentum
        k = k0 + np.linspace(-9.0, 9.0, 4001) / w
    else:
        k = packet.k_grid
    F = packet.momentum_amplitude(k)
    phase = np.exp(1j * (np.outer(x, k) - k * k * t))
    return np.trapezoid(F[None, :] * phase / np.sqrt(2 * np.pi), k, axis=1)


def localization_probability(packet: WavePacket, half_width: float, t,
                             dx: float = 0.05):
    """P(|x| <= L) under free evolution, on a time grid."""
    x = np.arange(-half_width, half_width + dx / 2, dx)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty(len(t))
    for i, ti in enumerate(t):
        psi = free_evolve(packet, x, ti)
        out[i] = float(np.sum(np.abs(psi) ** 2) * dx)
    return out if out.size > 1 else out[0]


def packet_laplace_at(packet: WavePacket, x: float, p) -> np.ndarray:
    """Laplace transform of the freely evolving edge value psi0(x, t).

    Resolvent form: psi0~(x, p) = Int G0~(x - y; p) psi(y, 0) dy with
    G0~(xi; p) = (i/2) e^{i |xi| q}/q, q = sqrt(ip).  For the gaussian
    packet the two half-line integrals are complex-erfc expressions.
    """
    p = np.atleast_1d(np.asarray(p, dtype=complex))
    q = np.asarray(sqrt_ip(p), dtype=complex)
    if packet.kind != "gaussian":
        raise DomainError("closed-form transform implemented for gaussian packets")
    w, k0, c = packet.width, packet.momentum, packet.center
    amp = (1.0 / (np.pi * w * w)) ** 0.25
    out = np.zeros(len(p), dtype=complex)
    # int_-inf^x e^{iq(x-y)} phi(y) dy + int_x^inf e^{iq(y-x)} phi(y) dy,
    # phi(y) = amp exp(-(y-c)^2/(2w^2) + i k0 (y-c));  shift u = y - c.
    X = x - c
    for sgn in (+1.0, -1.0):
        # sgn=+1: y < x branch with e^{iq(x-y)}; sgn=-1: y > x with e^{iq(y-x)}
        kappa = 1j * (k0 - sgn * q)  # exponent linear coefficient of u
        # int exp(-u^2/(2w^2) + kappa u) du over u < X (sgn=+1) or u > X (-1)
        zc = (sgn * X - sgn * kappa * w * w) / (np.sqrt(2.0) * w)
        gauss = (
            w
            * np.sqrt(np.pi / 2.0)
            * np.exp(kappa * kappa * w * w / 2.0)
            * erfc(-zc)
        )
        out += np.exp(sgn * 1j * q * X) * gauss
    # L[G0](xi; p) = e^{i|xi| q}/(2 q): the free kernels of the recurrence
    # carry an extra factor 2i relative to this resolvent kernel
    out *= amp / (2.0 * q)
    return out if out.size > 1 else out[0]


def trap_candidates(a: float, omega: float):
    """All (N, g0) with g0 = -(pi N/a)^2 inside (-omega, 0)."""
    if a <= 0 or omega <= 0:
        raise DomainError("a and omega must be positive")
    out = []
    N = 1
    while True:
        g0 = -((np.pi * N / a) ** 2)
        if g0 <= -omega:
            break
        out.append((N, g0))
        N += 1
    return out


def _free_blocks(config: ModelConfig, pn: np.ndarray):
    """Blocks -(i r/2) [[kd, -kx], [kx, -kd]] of the free-trap recurrence.

    The -i (relative to a bare r/2) is forced by the sine drive's Laplace
    shift; it is what makes the on-axis reduction real so the decaying
    continued-fraction structure can exist at all.
    """
    q = np.asarray(sqrt_ip(pn), dtype=complex)
    kd = 1j / q
    kx = 1j * np.exp(2j * config.a * q) / q
    blocks = np.empty(pn.shape + (2, 2), dtype=complex)
    lam = -0.5j * config.r
    blocks[..., 0, 0] = lam * kd
    blocks[..., 0, 1] = -lam * kx
    blocks[..., 1, 0] = lam * kx
    blocks[..., 1, 1] = -lam * kd
    return blocks


def _free_sources(config: ModelConfig, packet: WavePacket, pn: np.ndarray):
    src = np.empty(pn.shape + (2,), dtype=complex)
    src[..., 0] = packet_laplace_at(packet, +config.a, pn.ravel()).reshape(pn.shape)
    src[..., 1] = packet_laplace_at(packet, -config.a, pn.ravel()).reshape(pn.shape)
    return src


@dataclass
class LocalizationTrace:
    """Windowed probability trace of the trapped component."""

    t_grid: np.ndarray
    p_loc: np.ndarray
    floor: float
    quasiperiodicity: float
    x_grid: np.ndarray | None = None
    profiles: np.ndarray | None = None  # residue x-profiles f_n(x)
    n_offsets: np.ndarray | None = None
    g0: float = 0.0


def trapped_evolution(
    config: ModelConfig,
    packet: WavePacket,
    point: StabilizationPoint,
    t_grid,
    window_half_width: float | None = None,
    n_half: int = 40,
    x_step: float = 0.05,
) -> LocalizationTrace:
    """Localization probability of the trapped component over t_grid.

    The imaginary-axis pole family at i(g0 + n omega) is extracted by a
    one-sided limit (delta * solve at p = i g0 + delta, Richardson in
    delta) and turned into spatial profiles through the free kernels;
    the windowed probability of their quasi-periodic superposition is
    returned together with its floor and a quasi-periodicity statistic.
    Away from the manifold the residues vanish and so does the floor.
    """
    if config.potential is not Potential.FREE_TRAP:
        raise DomainError("trapped_evolution expects a FREE_TRAP configuration")
    t_grid = np.asarray(t_grid, dtype=float)
    L = window_half_width if window_half_width is not None else 2.0 * config.a + 5.0
    x = np.arange(-L, L + x_step / 2, x_step)
    om = config.omega
    g0 = point.g0

    if config.r == 0.0:
        p_loc = localization_probability(packet, L, t_grid)
        return LocalizationTrace(t_grid, p_loc, float(np.min(p_loc)), 0.0, g0=g0)

    n_arr = np.arange(-n_half, n_half + 1)

    # residues of y at p = i g0 by one-sided Richardson extrapolation
    deltas = np.array([4e-3, 2e-3, 1e-3])
    vals = []
    for d in deltas:
        pn = np.array([d + 1j * g0])[:, None] + 1j * om * n_arr[None, :]
        blocks = _free_blocks(config, pn)
        src = _free_sources(config, packet, pn)
        y = solve_block_tridiagonal(blocks, src)
        vals.append(d * y[0])
    v = np.array(vals)  # (3, N, 2) samples of delta*y ~ R + c1 delta + c2 delta^2
    denom = (v[1] - v[0]) - (v[2] - v[1])
    denom = np.where(np.abs(denom) > 0, denom, 1.0)
    R = v[2] + (v[2] - v[1]) ** 2 / denom

    # spatial profiles f_n(x) = (r/2)[k+_n(x) dR+ - k-_n(x) dR-]
    dRp = np.zeros(len(n_arr), dtype=complex)
    dRm = np.zeros(len(n_arr), dtype=complex)
    dRp[1:-1] = R[:-2, 0] - R[2:, 0]
    dRm[1:-1] = R[:-2, 1] - R[2:, 1]
    profiles = np.zeros((len(n_arr), len(x)), dtype=complex)
    for i, n in enumerate(n_arr):
        if dRp[i] == 0.0 and dRm[i] == 0.0:
            continue
        pn = 1j * (g0 + om * n) + 0.0
        # one-sided physical value on the cut: Re p -> 0+
        q = complex(sqrt_ip(pn + 1e-300))
        if q == 0.0:
            continue
        kp = 1j * np.exp(1j * np.abs(x - config.a) * q) / q
        km = 1j * np.exp(1j * np.abs(x + config.a) * q) / q
        profiles[i] = 0.5 * config.r * (kp * dRp[i] - km * dRm[i])

    # windowed Gram matrix -> quasi-periodic probability trace
    keep = np.where(np.any(profiles != 0.0, axis=1))[0]
    prof = profiles[keep]
    offs = n_arr[keep]
    gram = prof @ prof.conj().T * x_step
    phases = np.exp(1j * om * np.outer(offs, t_grid))
    p_loc = np.einsum("it,ij,jt->t", phases, gram, phases.conj()).real

    floor = float(np.min(p_loc))
    qp = quasiperiodicity_statistic(t_grid, p_loc, om)
    return LocalizationTrace(
        t_grid, p_loc, floor, qp, x_grid=x, profiles=prof, n_offsets=offs, g0=g0
    )


def quasiperiodicity_statistic(t_grid, p_loc, omega: float) -> float:
    """Symmetric cross-correlation of two consecutive long windows after
    transients, maximized over drive-period lags:

        max_lag 2 <y1, y2_lag> / (|y1|^2 + |y2_lag|^2).

    A trace that repeats (including the trivially repeating near-constant
    trapped trace) scores ~1; a trace whose amplitude decays between the
    windows is penalized by the norm mismatch and falls below threshold.
    """
    t_grid = np.asarray(t_grid)
    p_loc = np.asarray(p_loc)
    sel = t_grid > 200.0
    if np.count_nonzero(sel) < 32:
        sel = t_grid >= t_grid[len(t_grid) // 4]
    t, y = t_grid[sel], p_loc[sel]
    half = len(t) // 2
    dt = t[1] - t[0] if len(t) > 1 else 1.0
    lag_step = max(int(round((2 * np.pi / omega) / dt)), 1)
    best = -1.0
    for k in (-2, -1, 0, 1, 2):
        lag = k * lag_step
        if lag >= 0:
            y1, y2 = y[: half - lag] if lag else y[:half], y[half + lag : 2 * half]
        else:
            y1, y2 = y[-lag : half], y[half : 2 * half + lag]
        m = min(len(y1), len(y2))
        if m < 8:
            continue
        a, b = y1[:m], y2[:m]
        den = float(np.dot(a, a) + np.dot(b, b))
        if den > 0:
            best = max(best, 2.0 * float(np.dot(a, b)) / den)
    return best


def spatial_decay_slope(trace: LocalizationTrace, a: float, fit_range=(2.0, 6.0)):
    """Log-amplitude slope of the trapped profile outside the wells,
    to compare with the leading evanescent exponent sqrt(g0 + omega)."""
    if trace.profiles is None:
        raise ConvergenceError("trace carries no profiles")
    x = trace.x_grid
    dens = np.sqrt(np.sum(np.abs(trace.profiles) ** 2, axis=0))
    mask = (x >= a + fit_range[0]) & (x <= a + fit_range[1])
    if np.count_nonzero(mask) < 4:
        raise DomainError("profile window too small for the decay fit")
    coef = np.polyfit(x[mask], np.log(dens[mask]), 1)
    return float(coef[0])
