"""Canonical curvature blocks of 3-Sasakian comparison geometry.

Along an extremal with vertical momentum v = (v_I, v_J, v_K), the
canonical frame splits into the three-dimensional groups a and b and the
horizontal complement c (size 4d - 3, motion direction included). The
curvature operator in that frame is determined by a handful of
structure contractions, collected in ``CurvatureInputs``:

* ABA and its time derivative ABdotA (3 x 3),
* the mixed contraction ABU (3 x (4d - 3)),
* the horizontal form UBU ((4d - 3) x (4d - 3)),
* the coordinates w of the motion direction in the c frame,
* the scalar rho_a, the total squared norm of the commutator fields.

``curvature_blocks`` assembles the time-dependent blocks, conjugated by
the one-parameter rotation exp(1.5 t V) where V = vee(v), and re-expresses
the c block in a basis with the motion direction last (the convention the
rest of the package relies on). For the quaternionic Hopf fibration the
contractions take the constant values produced by
``qhf_curvature_inputs``, and the three Ricci traces have the closed
forms in ``ricci_scalars``.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .structure import FatDims

__all__ = [
    "vee",
    "rodrigues",
    "ricci_scalars",
    "CurvatureInputs",
    "qhf_curvature_inputs",
    "CurvatureBlocks",
    "curvature_blocks",
    "z_vectors",
]


def vee(v) -> np.ndarray:
    """Skew 3x3 matrix of a vertical momentum triple.

    Rows and columns follow the (I, J, K) order; vee(v) @ v = 0 and
    vee(v) ** 3 = -|v|^2 vee(v).
    """
    vI, vJ, vK = (float(x) for x in np.asarray(v).ravel())
    return np.array(
        [
            [0.0, vK, -vJ],
            [-vK, 0.0, vI],
            [vJ, -vI, 0.0],
        ]
    )


def rodrigues(W: np.ndarray, s: float) -> np.ndarray:
    """expm(s W) for skew 3x3 W, via the closed two-term form.

    Uses W^3 = -omega^2 W with omega^2 = |w|^2 half the squared Frobenius
    norm; the omega -> 0 limit is the quadratic Taylor polynomial, exact
    there since W^3 = 0.
    """
    W = np.asarray(W, dtype=float)
    omega2 = 0.5 * float(np.sum(W * W))
    omega = math.sqrt(omega2)
    if omega * abs(s) < 1e-8:
        return np.eye(3) + s * W + 0.5 * s * s * (W @ W)
    a = math.sin(omega * s) / omega
    b = (1.0 - math.cos(omega * s)) / omega2
    return np.eye(3) + a * W + b * (W @ W)


def ricci_scalars(v, rho_a: float, d: int) -> tuple[float, float, float]:
    """Traces of the three diagonal curvature blocks.

    With s = |v|^2: the a trace is 3*(0.75*rho_a - 3.5*s - 1.875*s^2),
    the b trace 3*(4 + 5*s), and the c trace (4d - 4)*(1 + s) (the motion
    direction carries no curvature). All are constant along the extremal.
    """
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    s = float(np.dot(np.asarray(v).ravel(), np.asarray(v).ravel()))
    ric_a = 3.0 * (0.75 * rho_a - 3.5 * s - 1.875 * s * s)
    ric_b = 3.0 * (4.0 + 5.0 * s)
    ric_c = (4.0 * d - 4.0) * (1.0 + s)
    return ric_a, ric_b, ric_c


@dataclass(frozen=True)
class CurvatureInputs:
    """Structure contractions determining the curvature blocks.

    w holds the coordinates of the motion direction in the supplied
    c basis; the first basis vector for the standard construction.
    """

    d: int
    ABA: np.ndarray
    ABdotA: np.ndarray
    ABU: np.ndarray
    UBU: np.ndarray
    w: np.ndarray
    rho_a: float

    def __post_init__(self) -> None:
        nc = 4 * self.d - 3
        if np.asarray(self.ABA).shape != (3, 3):
            raise ValueError("ABA must be 3x3")
        if np.asarray(self.ABdotA).shape != (3, 3):
            raise ValueError("ABdotA must be 3x3")
        if np.asarray(self.ABU).shape != (3, nc):
            raise ValueError(f"ABU must be 3x{nc}")
        if np.asarray(self.UBU).shape != (nc, nc):
            raise ValueError(f"UBU must be {nc}x{nc}")
        w = np.asarray(self.w)
        if w.shape != (nc,):
            raise ValueError(f"w must have length {nc}")
        if abs(np.linalg.norm(w) - 1.0) > 1e-10:
            raise ValueError("w must be a unit vector")


def qhf_curvature_inputs(d: int, v) -> CurvatureInputs:
    """Contractions of the quaternionic Hopf fibration of quaternionic
    dimension d, independent of the footpoint and of time.

    ABA = 4 I, ABdotA = 0, ABU = 0, UBU = I - w w^T with w the first
    basis vector, and rho_a = 2 |v|^2.
    """
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    nc = 4 * d - 3
    w = np.zeros(nc)
    w[0] = 1.0
    s = float(np.dot(np.asarray(v).ravel(), np.asarray(v).ravel()))
    return CurvatureInputs(
        d=d,
        ABA=4.0 * np.eye(3),
        ABdotA=np.zeros((3, 3)),
        ABU=np.zeros((3, nc)),
        UBU=np.eye(nc) - np.outer(w, w),
        w=w,
        rho_a=2.0 * s,
    )


def _motion_last_rotation(w: np.ndarray) -> np.ndarray:
    """Orthogonal map sending the motion coordinates w to the last axis."""
    nc = w.shape[0]
    e_last = np.zeros(nc)
    e_last[-1] = 1.0
    diff = w - e_last
    nrm = np.linalg.norm(diff)
    if nrm < 1e-14:
        return np.eye(nc)
    u = diff / nrm
    return np.eye(nc) - 2.0 * np.outer(u, u)


@dataclass
class CurvatureBlocks:
    """Time-dependent curvature blocks in the canonical frame.

    The c block is expressed motion-last; R_cc is constant in time with
    vanishing last row and column. ``assemble(t)`` returns the full
    symmetric (4d + 3) x (4d + 3) matrix in (a, b, c) order.
    """

    dims: FatDims
    v: np.ndarray
    R_cc: np.ndarray
    _E: Callable[[float], np.ndarray] = field(repr=False)
    _base_aa: np.ndarray = field(repr=False)
    _base_ab: np.ndarray = field(repr=False)
    _base_bb: np.ndarray = field(repr=False)
    _ABU_rot: np.ndarray = field(repr=False)
    _boldV: np.ndarray = field(repr=False)

    def R_aa(self, t: float) -> np.ndarray:
        E = self._E(t)
        return E @ self._base_aa @ E.T

    def R_ab(self, t: float) -> np.ndarray:
        E = self._E(t)
        return E @ self._base_ab @ E.T

    def R_bb(self, t: float) -> np.ndarray:
        E = self._E(t)
        return E @ self._base_bb @ E.T

    def R_ac(self, t: float) -> np.ndarray:
        return self._E(t) @ self._boldV @ self._ABU_rot

    def R_bc(self, t: float) -> np.ndarray:
        return self._E(t) @ self._ABU_rot

    def assemble(self, t: float) -> np.ndarray:
        dims = self.dims
        R = np.zeros((dims.n, dims.n))
        a, b, c = dims.sl_a, dims.sl_b, dims.sl_c
        R[a, a] = self.R_aa(t)
        R[b, b] = self.R_bb(t)
        R[c, c] = self.R_cc
        Rab = self.R_ab(t)
        R[a, b], R[b, a] = Rab, Rab.T
        Rac = self.R_ac(t)
        R[a, c], R[c, a] = Rac, Rac.T
        Rbc = self.R_bc(t)
        R[b, c], R[c, b] = Rbc, Rbc.T
        return R


def curvature_blocks(v, inputs: CurvatureInputs) -> CurvatureBlocks:
    """Assemble the canonical curvature blocks from the contractions.

    The in-plane blocks are constant matrices conjugated by the rotation
    E(t) = expm(1.5 t vee(v)); the mixed a-c and b-c blocks carry E(t) on
    the left only. The supplied c basis is rotated so the motion
    direction sits last, and the resulting R_cc must then have last row
    and column below 1e-8, otherwise the inputs are inconsistent with a
    curvature-free motion direction and a ValueError is raised.

    Setting the environment variable FATCOMP_FAULT=curvature-sign flips
    the sign of the b block; this is a fault-injection hook for
    exercising the verification pipeline and must stay off otherwise.
    """
    v = np.asarray(v, dtype=float).ravel()
    if v.shape != (3,):
        raise ValueError(f"v must have three components, got shape {v.shape}")
    s = float(v @ v)
    V = vee(v)
    V2 = V @ V
    ABA = np.asarray(inputs.ABA, dtype=float)
    ABdotA = np.asarray(inputs.ABdotA, dtype=float)

    base_aa = (
        0.75 * (ABdotA @ V + V.T @ ABdotA)
        + 0.375 * (ABA @ V2 + V2 @ ABA)
        + 3.0 * (V @ ABA @ V.T)
        + (12.0 + (45.0 / 16.0) * s) * V2
    )
    base_ab = 0.75 * (V @ ABA + ABA @ V) + (1.5 * s - 4.0) * V
    base_bb = ABA + 4.0 * s * np.eye(3) - 1.5 * V2
    if os.environ.get("FATCOMP_FAULT") == "curvature-sign":
        base_bb = -base_bb

    P = _motion_last_rotation(np.asarray(inputs.w, dtype=float))
    R_cc = P @ (
        np.asarray(inputs.UBU, dtype=float)
        + s * (np.eye(P.shape[0]) - np.outer(inputs.w, inputs.w))
    ) @ P.T
    edge = max(
        float(np.abs(R_cc[-1, :]).max()), float(np.abs(R_cc[:, -1]).max())
    )
    if edge > 1e-8:
        raise ValueError(
            f"motion direction carries curvature (residual {edge:.3e}); "
            "inputs are inconsistent"
        )
    ABU_rot = np.asarray(inputs.ABU, dtype=float) @ P.T
    dims = FatDims(k=4 * inputs.d, n=4 * inputs.d + 3)
    return CurvatureBlocks(
        dims=dims,
        v=v,
        R_cc=R_cc,
        _E=lambda t: rodrigues(V, 1.5 * t),
        _base_aa=base_aa,
        _base_ab=base_ab,
        _base_bb=base_bb,
        _ABU_rot=ABU_rot,
        _boldV=1.5 * V,
    )


def z_vectors(v, phi_action: np.ndarray) -> np.ndarray:
    """Commutator fields Z_alpha from the phi images of the velocity.

    phi_action has rows (phi_I gdot, phi_J gdot, phi_K gdot); the result
    rows are Z_I = v_J phi_K gdot - v_K phi_J gdot and cyclic. When the
    phi images are orthonormal, the total squared norm is 2 |v|^2.
    """
    v = np.asarray(v, dtype=float).ravel()
    phi_action = np.asarray(phi_action, dtype=float)
    if phi_action.ndim != 2 or phi_action.shape[0] != 3:
        raise ValueError(f"phi_action must have three rows, got {phi_action.shape}")
    vI, vJ, vK = v
    pI, pJ, pK = phi_action
    return np.vstack(
        [
            vJ * pK - vK * pJ,
            vK * pI - vI * pK,
            vI * pJ - vJ * pI,
        ]
    )
