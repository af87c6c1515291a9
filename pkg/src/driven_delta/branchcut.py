"""Branch-cut-aware square roots and the Laplace-space kernels.

Everything downstream (recurrences, contour integrals, time-domain kernel
construction) evaluates w(p) = sqrt(1 - i p) or q(p) = sqrt(i p) on a
definite branch, so the cut geometry lives here and nowhere else.

Branch conventions
------------------
``w(p) = sqrt(1 - i p)``, normalized so w -> 1 as p -> 0.  Branch point
at p = -i.  Two cut layouts are supported:

* ``horizontal-left``: cut runs leftward from the branch point,
  {Im p = -1, Re p <= 0}.  Closed form: w = exp(-i pi/4) * sqrt(p + i)
  with the principal square root.  This is the branch used when a
  Bromwich contour is pushed into the left half plane between the cuts.
* ``vertical-principal``: principal sqrt of (1 - i p); the cut hangs
  downward from -i along {Re p = 0, Im p <= -1}.

Side selection applies only to points exactly on the chosen cut:
``above`` is the limit from the side reached by continuing around the
branch point counterclockwise from p = 0 (for the horizontal cut this is
literally Im p -> -1 from above; for the vertical cut it is the left
side Re p -> 0-).  ``below`` is the opposite one-sided limit.  The two
on-cut limits differ by an overall sign of the root.  The sign
convention was pinned numerically by continuing w along a small circle
around p = -i (see tests).

``q(p) = sqrt(i p)``, normalized so q -> i as p -> i.  Branch point at
p = 0, cut along the positive imaginary axis {Re p = 0, Im p >= 0}.
This equals the principal sqrt of (i p); `above`/`below` select the
Re p -> 0- / Re p -> 0+ limits on the cut (matching the vertical-cut
labeling above).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BranchPointError, BranchSideError, KernelPoleError

_EIPI4 = np.exp(1j * np.pi / 4)

CUT_HORIZONTAL_LEFT = "horizontal-left"
CUT_VERTICAL_PRINCIPAL = "vertical-principal"

SIDE_PRINCIPAL = "principal"
SIDE_ABOVE = "above"
SIDE_BELOW = "below"


@dataclass(frozen=True)
class BranchSpec:
    """Cut layout plus (for on-cut points) the one-sided limit to take."""

    cut_direction: str = CUT_HORIZONTAL_LEFT
    side: str = SIDE_PRINCIPAL

    def __post_init__(self):
        if self.cut_direction not in (CUT_HORIZONTAL_LEFT, CUT_VERTICAL_PRINCIPAL):
            raise ValueError(f"unknown cut_direction {self.cut_direction!r}")
        if self.side not in (SIDE_PRINCIPAL, SIDE_ABOVE, SIDE_BELOW):
            raise ValueError(f"unknown side {self.side!r}")


HORIZONTAL = BranchSpec(CUT_HORIZONTAL_LEFT, SIDE_PRINCIPAL)
HORIZONTAL_ABOVE = BranchSpec(CUT_HORIZONTAL_LEFT, SIDE_ABOVE)
HORIZONTAL_BELOW = BranchSpec(CUT_HORIZONTAL_LEFT, SIDE_BELOW)
VERTICAL = BranchSpec(CUT_VERTICAL_PRINCIPAL, SIDE_PRINCIPAL)


def _as_complex(p):
    arr = np.asarray(p, dtype=complex)
    return arr, arr.ndim == 0


def sqrt_one_minus_ip(p, spec: BranchSpec = HORIZONTAL):
    """sqrt(1 - i p) on the branch selected by `spec`.

    Continuous from the normalization w(0) = 1.  Exactly at the branch
    point p = -i the root vanishes and 0 is returned.  Evaluation
    exactly on the cut requires spec.side != 'principal'; the value is
    then the requested one-sided limit.
    """
    arr, scalar = _as_complex(p)

    if spec.cut_direction == CUT_HORIZONTAL_LEFT:
        q = arr + 1j
        # cut: q real-negative  <=>  Im p == -1, Re p < 0
        on_cut = (q.imag == 0.0) & (q.real < 0.0)
        # numpy's principal sqrt takes the limit from Im q > 0 on the cut,
        # which is the 'above' side (Im p -> -1+).
        w = _EIPI4.conjugate() * np.sqrt(q)
    else:
        zeta = 1.0 - 1j * arr
        # cut: zeta real-negative  <=>  Re p == 0, Im p < -1
        on_cut = (zeta.imag == 0.0) & (zeta.real < 0.0)
        # numpy on-cut limit is from Im zeta > 0, i.e. Re p -> 0-: 'above'.
        w = np.sqrt(zeta)

    if np.any(on_cut):
        if spec.side == SIDE_PRINCIPAL:
            raise BranchSideError(
                "evaluation exactly on the branch cut is two-valued; "
                "pass a BranchSpec with side='above' or side='below'"
            )
        if spec.side == SIDE_BELOW:
            w = np.where(on_cut, -w, w)

    return complex(w) if scalar else w


def kernel_k_minus(p, a: float, spec: BranchSpec = HORIZONTAL):
    """Cross-well Laplace kernel exp(-2 a w)/(w - 1), w = sqrt(1 - i p).

    Simple pole at p = 0 with residue 2i exp(-2a); evaluating exactly
    there raises KernelPoleError carrying that residue.
    """
    arr, scalar = _as_complex(p)
    if np.any(arr == 0.0):
        raise KernelPoleError(
            "k-(p) has a simple pole at p = 0", residue=2j * np.exp(-2.0 * a)
        )
    w = sqrt_one_minus_ip(arr, spec)
    w = np.asarray(w, dtype=complex)
    out = np.exp(-2.0 * a * w) / (w - 1.0)
    return complex(out) if scalar else out


def kernel_k_plus(p, a: float, spec: BranchSpec = HORIZONTAL):
    """Same-well Laplace kernel (1 + k-(p)) / sqrt(1 - i p).

    Inherits the p = 0 pole from k-.  At the branch point p = -i the
    0/0 limit is finite and equals 2a - 1; that value is returned.
    """
    arr, scalar = _as_complex(p)
    if np.any(arr == 0.0):
        raise KernelPoleError(
            "k+(p) has a simple pole at p = 0", residue=2j * np.exp(-2.0 * a)
        )
    w = np.asarray(sqrt_one_minus_ip(arr, spec), dtype=complex)
    at_bp = w == 0.0
    w_safe = np.where(at_bp, 1.0, w)
    km = np.exp(-2.0 * a * w_safe) / (w_safe - 1.0)
    out = (1.0 + km) / w_safe
    if np.any(at_bp):
        out = np.where(at_bp, 2.0 * a - 1.0, out)
    return complex(out) if scalar else out


def kernel_k_of_w(w, a: float, kind: str):
    """k+/k- expressed directly in terms of the root w = sqrt(1 - i p).

    Used by cut-wrapping quadratures that parametrize points by the
    one-sided root value rather than by p.
    """
    w = np.asarray(w, dtype=complex)
    km = np.exp(-2.0 * a * w) / (w - 1.0)
    if kind == "minus":
        return km
    return (1.0 + km) / w


def sqrt_ip(p, spec: BranchSpec = HORIZONTAL):
    """q(p) = sqrt(i p) with q(i) = i (free-particle branch).

    The cut runs along the positive imaginary p-axis; the branch point
    sits at p = 0.  spec.cut_direction is ignored (this family has a
    single layout); spec.side resolves on-cut points.
    """
    arr, scalar = _as_complex(p)
    z = 1j * arr
    on_cut = (z.imag == 0.0) & (z.real < 0.0)  # Re p == 0, Im p > 0
    q = np.sqrt(z)  # numpy on-cut limit = Im z > 0 side = Re p -> 0- ('above')
    if np.any(on_cut):
        if spec.side == SIDE_PRINCIPAL:
            raise BranchSideError(
                "sqrt(ip) evaluated on its cut; pass side='above' or 'below'"
            )
        if spec.side == SIDE_BELOW:
            q = np.where(on_cut, -q, q)
    return complex(q) if scalar else q


def free_kernel(x: float, p, a: float, sign: str, spec: BranchSpec = HORIZONTAL):
    """Free-particle Laplace kernel i exp(i |x -+ a| sqrt(ip)) / sqrt(ip).

    `sign` selects the well: 'minus' uses |x - a| (well at +a), 'plus'
    uses |x + a| (well at -a).  Branch point p = 0 raises.
    """
    if sign not in ("plus", "minus"):
        raise ValueError("sign must be 'plus' or 'minus'")
    arr, scalar = _as_complex(p)
    if np.any(arr == 0.0):
        raise BranchPointError("free kernel has a branch point at p = 0")
    q = np.asarray(sqrt_ip(arr, spec), dtype=complex)
    dist = abs(x - a) if sign == "minus" else abs(x + a)
    out = 1j * np.exp(1j * dist * q) / q
    return complex(out) if scalar else out
