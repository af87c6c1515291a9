"""Direct time-domain pipeline.

The convolution kernels of the edge-value integral equations have the
closed forms (derived by inverting their Laplace transforms through the
substitution w = e^{-i pi/4} sqrt(p + i), which maps both kernels onto
standard sqrt(q)-shifted transforms)

    K+(t) = e^{i pi/4} e^{-i t} / sqrt(pi t) + i e^{-2a} erfc(z(t)),
    K-(t) = e^{i pi/4} e^{-i t + i a^2/t} / sqrt(pi t) + i e^{-2a} erfc(z(t)),
    z(t)  = a e^{-i pi/4} / sqrt(t) - e^{i pi/4} sqrt(t),

which tend to the constant 2 i e^{-2a} as t -> infinity (the p = 0 pole
of the transforms).  `build_kernel_table` reconstructs the same kernels
independently by wrapping the Bromwich contour around the branch cut --
the two routes agreeing is a standing test, and the table's forward
transform must reproduce k+-(p) at random points.

The marching scheme is product integration: on each cell the smooth
factor of the history integrand is taken piecewise linear and the
weakly singular kernel factor is integrated exactly (closed-form
complex-erf moments for K+, short Gauss rules in the sqrt substitution
for the oscillatory-singular K- cells).  The history convolution is
O(n^2); a block-FFT fast convolution can be slotted into `_march` if
desk-scale runs ever stop being enough.
"""

from __future__ import annotations

import numpy as np
from scipy.special import erf, erfc, roots_legendre

from .branchcut import kernel_k_minus, kernel_k_plus, kernel_k_of_w
from .config import (
    KernelTable,
    ModelConfig,
    PIPELINE_VOLTERRA,
    Potential,
    SurvivalTrace,
)
from .errors import ConvergenceError, DomainError, RefinementError

_PH = np.exp(1j * np.pi / 4)


# ---------------------------------------------------------------------------
# closed-form kernels and their cell moments
# ---------------------------------------------------------------------------


def kernel_time(t, a: float, kind: str):
    """K+ or K- at time(s) t > 0, closed form."""
    t = np.asarray(t, dtype=float)
    st = np.sqrt(t)
    sing = _PH * np.exp(-1j * t) / np.sqrt(np.pi * t)
    if kind == "minus":
        sing = sing * np.exp(1j * a * a / t)
    elif kind != "plus":
        raise DomainError("kind must be 'plus' or 'minus'")
    z = a * np.conj(_PH) / st - _PH * st
    return sing + 1j * np.exp(-2.0 * a) * erfc(z)


def kernel_smooth_part(t, a: float):
    """The erfc component shared by both kernels (bounded, -> 2i e^{-2a})."""
    t = np.asarray(t, dtype=float)
    st = np.sqrt(t)
    return 1j * np.exp(-2.0 * a) * erfc(a * np.conj(_PH) / st - _PH * st)


def _sing_plus_antiderivatives(tau):
    """Antiderivatives (I0..I3) of s^(k-1/2) e^{-is}, k = 0..3."""
    tau = np.asarray(tau, dtype=float)
    root = _PH * np.sqrt(tau)  # sqrt(i tau)
    e = np.exp(-1j * tau)
    I0 = np.sqrt(np.pi) * np.conj(_PH) * erf(root)
    I1 = 1j * np.sqrt(tau) * e - 0.5j * I0
    I2 = 1j * tau ** 1.5 * e - 1.5j * I1
    I3 = 1j * tau ** 2.5 * e - 2.5j * I2
    return I0, I1, I2, I3


def singular_moments_plus(a: float, h: float, n: int):
    """Exact cell moments of the K+ singular factor C e^{-is} s^{-1/2}.

    Mk[l] integrates the factor against (s - s_{l-1})^k over the cell
    [l h, (l+1) h), C = e^{i pi/4}/sqrt(pi), k = 0, 1, 2.
    """
    edges = h * np.arange(n + 1)
    I0, I1, I2, _ = _sing_plus_antiderivatives(edges)
    C = _PH / np.sqrt(np.pi)
    d0, d1, d2 = np.diff(I0), np.diff(I1), np.diff(I2)
    s0 = edges[:-1]
    M0 = C * d0
    M1 = C * (d1 - s0 * d0)
    M2 = C * (d2 - 2.0 * s0 * d1 + s0 * s0 * d0)
    return M0, M1, M2


def _minus_antiderivatives(s, a: float):
    """(J0, J1)(s): antiderivatives of s^{-1/2} f(s) and s^{1/2} f(s) for
    f = e^{-is + i a^2/s}, via the complex-erf pair

        A(u) = (sqrt(pi)/2) e^{-2a} erf(alpha u - beta/u),
        B(u) = (sqrt(pi)/2) e^{+2a} erf(alpha u + beta/u),

    u = sqrt(s), alpha = e^{i pi/4}, beta = a e^{-i pi/4}.  These encode
    the essential oscillation exactly, including the s -> 0 winding that
    no sampled rule can resolve.
    """
    s = np.asarray(s, dtype=float)
    alpha = _PH
    beta = a * np.conj(_PH)
    u = np.sqrt(s)
    pos = u > 0
    A = np.full(s.shape, -(np.sqrt(np.pi) / 2) * np.exp(-2.0 * a), dtype=complex)
    B = np.full(s.shape, +(np.sqrt(np.pi) / 2) * np.exp(+2.0 * a), dtype=complex)
    uf = np.zeros(s.shape, dtype=complex)
    u3f = np.zeros(s.shape, dtype=complex)
    u5f = np.zeros(s.shape, dtype=complex)
    up = u[pos]
    fval = np.exp(-1j * s[pos] + 1j * a * a / s[pos])
    A[pos] = (np.sqrt(np.pi) / 2) * np.exp(-2.0 * a) * erf(alpha * up - beta / up)
    B[pos] = (np.sqrt(np.pi) / 2) * np.exp(+2.0 * a) * erf(alpha * up + beta / up)
    uf[pos] = up * fval
    u3f[pos] = up ** 3 * fval
    u5f[pos] = up ** 5 * fval
    P = (A + B) / (2.0 * alpha)  # int f du
    Q = (A - B) / (2.0 * beta)  # int f/u^2 du
    U2 = (P - 2j * a * a * Q - uf) / 2j  # int u^2 f du
    U4 = (3.0 * U2 - 2j * a * a * P - u3f) / 2j  # int u^4 f du
    U6 = (5.0 * U4 - 2j * a * a * U2 - u5f) / 2j  # int u^6 f du
    J0 = 2.0 * P
    J1 = 2.0 * U2
    J2 = 2.0 * U4
    J3 = 2.0 * U6
    return J0, J1, J2, J3


def singular_moments_minus(a: float, h: float, n: int):
    """Exact cell moments of the K- singular factor C e^{-is+ia^2/s} s^{-1/2}."""
    if a == 0.0:
        return singular_moments_plus(a, h, n)
    C = _PH / np.sqrt(np.pi)
    edges = h * np.arange(n + 1)
    J0, J1, J2, _ = _minus_antiderivatives(edges, a)
    d0, d1, d2 = np.diff(J0), np.diff(J1), np.diff(J2)
    s0 = edges[:-1]
    M0 = C * d0
    M1 = C * (d1 - s0 * d0)
    M2 = C * (d2 - 2.0 * s0 * d1 + s0 * s0 * d0)
    return M0, M1, M2


def _erfc_moments(a: float, h: float, n: int):
    """Exact cell moments of the bounded erfc component of both kernels.

    The component is i e^{-2a} erfc(z(s)), which near s = 0 vanishes
    like sqrt(s) but with the winding phase e^{i a^2/s}; sampled rules
    cannot see that, so the moments are obtained by parts:

    int s^k erfc(z) ds = s^{k+1} erfc(z)/(k+1)
        - (e^{2a} / ((k+1) sqrt(pi))) [a e^{-i pi/4} H_{k-1/2} + e^{i pi/4} H_{k+1/2}],

    with H_nu the antiderivative of s^nu e^{-is + i a^2/s} from the same
    complex-erf family as the singular moments.
    """
    edges = h * np.arange(n + 1)
    if a == 0.0:
        H = _sing_plus_antiderivatives(edges)
    else:
        H = _minus_antiderivatives(edges, a)
    Hm, H0, H1, H2 = H  # nu = -1/2, 1/2, 3/2, 5/2
    z = np.empty(len(edges), dtype=complex)
    z[0] = 0.0  # s^{k+1} erfc(z) -> 0 as s -> 0
    if len(edges) > 1:
        se = edges[1:]
        z[1:] = erfc(a * np.conj(_PH) / np.sqrt(se) - _PH * np.sqrt(se))
    fac = np.exp(2.0 * a) / np.sqrt(np.pi)

    def G(k, Hlo, Hhi):
        return (edges ** (k + 1)) * z / (k + 1) - fac / (k + 1) * (
            a * np.conj(_PH) * Hlo + _PH * Hhi
        )

    G0 = G(0, Hm, H0)
    G1 = G(1, H0, H1)
    G2 = G(2, H1, H2)
    d0, d1, d2 = np.diff(G0), np.diff(G1), np.diff(G2)
    s0 = edges[:-1]
    amp = 1j * np.exp(-2.0 * a)
    E0 = amp * d0
    E1 = amp * (d1 - s0 * d0)
    E2 = amp * (d2 - 2.0 * s0 * d1 + s0 * s0 * d0)
    return E0, E1, E2


def kernel_cell_moments(a: float, kind: str, h: float, n: int):
    """(M0, M1, M2) per cell for the full kernel, everything closed form."""
    if kind == "plus":
        M0s, M1s, M2s = singular_moments_plus(a, h, n)
    else:
        M0s, M1s, M2s = singular_moments_minus(a, h, n)
    M0b, M1b, M2b = _erfc_moments(a, h, n)
    return M0s + M0b, M1s + M1b, M2s + M2b


def _quadratic_weights(M0, M1, M2, h: float):
    """Stationary weights of the quadratic product rule.

    On the lag cell [(l-1)h, lh] the smooth factor is interpolated by
    the quadratic through its values at lags (l+1)h, lh, (l-1)h, i.e.
    samples F_{j-l-1}, F_{j-l}, F_{j-l+1}.  Returns (A, B, C): the
    weights of those three samples per cell.
    """
    h2 = h * h
    A = (M2 - h * M1) / (2.0 * h2)
    B = -(M2 - 2.0 * h * M1) / h2
    C = (M2 - 3.0 * h * M1 + 2.0 * h2 * M0) / (2.0 * h2)
    return A, B, C


def _first_cell_forward_weights(M0, M1, M2, h: float):
    """Weights of F_0, F_1, F_2 for the earliest time cell (lag cell l = j),
    where the backward stencil would need F_{-1}."""
    h2 = h * h
    w0 = (M2 + h * M1) / (2.0 * h2)
    w1 = (h2 * M0 - M2) / h2
    w2 = (M2 - h * M1) / (2.0 * h2)
    return w0, w1, w2


# ---------------------------------------------------------------------------
# kernel table: independent Bromwich construction
# ---------------------------------------------------------------------------


def kernel_time_bromwich(t, a: float, kind: str, n_nodes: int = 120):
    """K(t) by wrapping the Bromwich contour: p = 0 residue plus the
    integral of the kernel jump along the cut from the branch point."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    x, w = roots_legendre(n_nodes)
    out = np.empty(len(t), dtype=complex)
    for i, ti in enumerate(t):
        V = np.sqrt(45.0 / ti)
        v = 0.5 * V * (x + 1.0)
        wv = 0.5 * V * w
        w_above = _PH * v  # one-sided roots on the cut, above / below
        jump = kernel_k_of_w(w_above, a, kind) - kernel_k_of_w(-w_above, a, kind)
        integral = np.sum(wv * np.exp(-v * v * ti) * jump * 2.0 * v)
        out[i] = 2j * np.exp(-2.0 * a) - np.exp(-1j * ti) * integral / (2j * np.pi)
    return out if out.size > 1 else out[0]


def build_kernel_table(
    a: float,
    kind: str,
    t_max: float,
    n_samples: int = 400,
    roundtrip_tol: float = 1e-6,
    rng_seed: int = 7,
) -> KernelTable:
    """Tabulate K on a geometric-then-uniform grid by Bromwich quadrature.

    The t^(-1/2) short-time coefficient is recorded separately (for K-
    it multiplies the bounded oscillation e^{i a^2/t}, flagged on the
    table).  The forward transform of the closed-form kernel the table
    is checked against must reproduce k+-(p) at random points or the
    construction is rejected.
    """
    if t_max <= 0:
        raise DomainError("t_max must be positive")
    n_geo = max(n_samples // 4, 8)
    t_geo = np.geomspace(min(1e-4, t_max / 100), min(0.5, t_max / 2), n_geo)
    t_uni = np.linspace(min(0.5, t_max / 2), t_max, n_samples - n_geo + 1)[1:]
    t_grid = np.concatenate([t_geo, t_uni])
    values = kernel_time_bromwich(t_grid, a, kind)

    # round trip at random Laplace points, quadrature against closed form
    rng = np.random.default_rng(rng_seed)
    worst = 0.0
    x, w = roots_legendre(24)
    for _ in range(10):
        p = rng.uniform(0.4, 2.0) + 1j * rng.uniform(-3.0, 3.0)
        T = min(max(40.0 / p.real, 60.0), 400.0)
        n_pan = int(max(np.ceil(T / 0.8), 40))
        edges = np.linspace(0.0, T, n_pan + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
        hw = 0.5 * np.diff(edges)[:, None]
        s = mid + hw * x[None, :]
        val = np.sum(hw * w[None, :] * kernel_time(s, a, kind) * np.exp(-p * s))
        # tail: kernel ~ 2i e^{-2a} beyond T
        val += 2j * np.exp(-2.0 * a) * np.exp(-p * T) / p
        ref = kernel_k_plus(p, a) if kind == "plus" else kernel_k_minus(p, a)
        err = abs(val - ref) / max(abs(ref), 1e-12)
        worst = max(worst, err)
    if worst > roundtrip_tol:
        raise ConvergenceError(
            "kernel table failed its forward-transform audit",
            diagnostic={"worst_relative_error": worst},
        )
    return KernelTable(
        a=a,
        kind=kind,
        t_grid=t_grid,
        values=np.asarray(values),
        singular_exponent=-0.5,
        singular_coefficient=_PH / np.sqrt(np.pi),
        oscillatory_singularity=(kind == "minus"),
        roundtrip_error=worst,
    )


# ---------------------------------------------------------------------------
# Volterra march
# ---------------------------------------------------------------------------


class _KernelRule:
    """Precomputed quadratic product-integration weights for one kernel."""

    def __init__(self, a: float, kind: str, h: float, n: int):
        M0, M1, M2 = kernel_cell_moments(a, kind, h, n)
        self.A, self.B, self.C = _quadratic_weights(M0, M1, M2, h)
        self.w0, self.w1, self.w2 = _first_cell_forward_weights(M0, M1, M2, h)
        # first-step linear weights on the single cell [0, h]
        self.lin_alpha = M1[0] / h
        self.lin_beta = M0[0] - M1[0] / h
        self.h = h

    def history(self, F: np.ndarray, j: int):
        """(known part of the convolution at step j, implicit weight of F_j)."""
        if j == 1:
            return self.lin_alpha * F[0], self.lin_beta
        A, B, C = self.A, self.B, self.C
        acc = np.dot(A[: j - 1], F[j - 2 :: -1])
        acc += np.dot(B[: j - 1], F[j - 1 : 0 : -1])
        if j >= 3:
            acc += np.dot(C[1 : j - 1], F[j - 1 : 1 : -1])
        implicit = C[0]
        # earliest cell uses the forward stencil through F_0, F_1, F_2
        if j == 2:
            acc += self.w0[1] * F[0] + self.w1[1] * F[1]
            implicit = implicit + self.w2[1]
        else:
            acc += self.w0[j - 1] * F[0] + self.w1[j - 1] * F[1] + self.w2[j - 1] * F[2]
        return acc, implicit


def _march(config: ModelConfig, t_max: float, h: float):
    """Quadratic product-integration march of the edge values Y(t)."""
    n = int(round(t_max / h))
    t = h * np.arange(n + 1)
    a, r, om = config.a, config.r, config.omega
    cp, cm = config.delta_weights
    eta = r * np.sin(om * t)
    scalar = config.potential is Potential.U1

    rule_p = _KernelRule(a, "plus", h, n)
    if not scalar:
        rule_m = _KernelRule(a, "minus", h, n)

    e_a = np.exp(-a)
    if scalar:
        # Y(t) = e^-a - int eta K+ Y;  F = eta * Y
        Y = np.empty(n + 1, dtype=complex)
        F = np.empty(n + 1, dtype=complex)
        Y[0] = e_a
        F[0] = 0.0
        for j in range(1, n + 1):
            hist, wimp = rule_p.history(F, j)
            Y[j] = (e_a - cp * hist) / (1.0 + cp * eta[j] * wimp)
            F[j] = eta[j] * Y[j]
        return t, Y[:, None], eta

    # dipole pair: Y+- coupled through both kernels
    Yp = np.empty(n + 1, dtype=complex)
    Ym = np.empty(n + 1, dtype=complex)
    Fp = np.empty(n + 1, dtype=complex)
    Fm = np.empty(n + 1, dtype=complex)
    Yp[0] = Ym[0] = e_a
    Fp[0] = Fm[0] = 0.0
    for j in range(1, n + 1):
        hist_pp, wimp_p = rule_p.history(Fp, j)
        hist_pm, _ = rule_p.history(Fm, j)
        hist_mp, wimp_m = rule_m.history(Fp, j)
        hist_mm, _ = rule_m.history(Fm, j)
        # Y+_j = e^-a - [cp (K+ * eta Y+) + cm (K- * eta Y-)]
        # Y-_j = e^-a - [cp (K- * eta Y+) + cm (K+ * eta Y-)]
        A11 = 1.0 + cp * eta[j] * wimp_p
        A12 = cm * eta[j] * wimp_m
        A21 = cp * eta[j] * wimp_m
        A22 = 1.0 + cm * eta[j] * wimp_p
        rhs1 = e_a - (cp * hist_pp + cm * hist_mm)
        rhs2 = e_a - (cp * hist_mp + cm * hist_pm)
        det = A11 * A22 - A12 * A21
        Yp[j] = (A22 * rhs1 - A12 * rhs2) / det
        Ym[j] = (A11 * rhs2 - A21 * rhs1) / det
        Fp[j] = eta[j] * Yp[j]
        Fm[j] = eta[j] * Ym[j]
    return t, np.stack([Yp, Ym], axis=1), eta


class VolterraState:
    """Marched edge values with the grid and drive samples."""

    def __init__(self, config, t, Y, eta, h):
        self.config = config
        self.t = t
        self.Y = Y  # (n+1, 1) or (n+1, 2)
        self.eta = eta
        self.h = h


def solve_volterra(
    config: ModelConfig,
    t_max: float,
    h: float | None = None,
    verify_tol: float | None = None,
) -> VolterraState:
    """March the coupled (or scalar) edge-value equations to t_max.

    h defaults to resolving the drive and the unit-frequency kernel
    oscillation.  verify_tol reruns at h/2 and raises RefinementError
    with the observed order when the traces disagree beyond it.
    """
    if config.potential is Potential.FREE_TRAP:
        raise DomainError("the time-domain march covers the bound configurations")
    if h is None:
        h = min(2 * np.pi / (40 * config.omega), 0.02)
    if h > 2 * np.pi / (40 * config.omega) + 1e-12:
        raise DomainError("step must resolve the drive: h <= 2 pi / (40 omega)")
    t, Y, eta = _march(config, t_max, h)
    state = VolterraState(config, t, Y, eta, h)
    if verify_tol is not None:
        t2, Y2, _ = _march(config, t_max, h / 2)
        diff = float(np.max(np.abs(Y2[::2] - Y)))
        if diff > verify_tol:
            t4, Y4, _ = _march(config, t_max, h / 4)
            diff2 = float(np.max(np.abs(Y4[::2] - Y2)))
            order = float(np.log2(diff / diff2)) if diff2 > 0 else np.inf
            raise RefinementError(
                f"step-halving discrepancy {diff:.3e} above tolerance {verify_tol:.1e}",
                observed_order=order,
            )
    return state


def survival_from_Y(state: VolterraState) -> SurvivalTrace:
    """Cumulative quadrature of theta(t) = 1 - 2 i e^-a Int eta (c+ Y+ + c- Y-).

    Composite-Simpson pairs (consistent with the second-order march),
    trapezoid closure on odd steps.
    """
    config = state.config
    cp, cm = config.delta_weights
    combo = cp * state.Y[:, 0] + (cm * state.Y[:, 1] if state.Y.shape[1] > 1 else 0.0)
    g = state.eta * combo
    h = state.h
    n = len(g) - 1
    acc = np.empty(n + 1, dtype=complex)
    acc[0] = 0.0
    for j in range(1, n + 1):
        if j >= 2:
            acc[j] = acc[j - 2] + h / 3.0 * (g[j - 2] + 4.0 * g[j - 1] + g[j])
        else:
            acc[j] = acc[j - 1] + 0.5 * h * (g[j - 1] + g[j])
    theta = 1.0 - 2j * np.exp(-config.a) * acc
    return SurvivalTrace(state.t, theta, PIPELINE_VOLTERRA, config)


def survival_volterra(config: ModelConfig, t_max: float, h: float | None = None) -> SurvivalTrace:
    """Convenience wrapper: march then accumulate."""
    return survival_from_Y(solve_volterra(config, t_max, h))
