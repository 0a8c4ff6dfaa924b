"""Quadrotor model and the predictive controller that flies print paths.

State is ``[p(3), v(3), roll, pitch]`` with attitude tracked by first-order
lags toward commanded references; the input is ``[thrust, roll_ref,
pitch_ref]`` (thrust in acceleration units, mass-normalised).  The solver is
projected gradient descent on the discretised horizon with an adjoint
gradient; the hot loops are numba-compiled.

Print paths are followed carrot-style: the path is densified to one sample
per control step at the commanded speed, and the reference only advances
once the vehicle is inside the acceptance radius of the current sample.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numba import njit

from .toolpath import PrintPath

GRAVITY = 9.81


class NonFiniteError(ArithmeticError):
    """The rollout or its cost stopped being a number."""


class PathCompleteError(Exception):
    """Raised once the vehicle has reached the final path sample."""


@dataclass(frozen=True)
class ModelParams:
    tau_phi: float = 0.4
    tau_theta: float = 0.47
    k_phi: float = 1.0
    k_theta: float = 1.0
    drag: tuple[float, float, float] = (0.1, 0.1, 0.2)
    gravity: float = GRAVITY

    def packed(self) -> np.ndarray:
        return np.array(
            [*self.drag, self.tau_phi, self.tau_theta, self.k_phi, self.k_theta, self.gravity]
        )


@dataclass(frozen=True)
class NmpcConfig:
    dt: float = 0.05
    horizon: int = 40
    q_state: tuple = (15.0, 15.0, 25.0, 4.0, 4.0, 4.0, 8.0, 8.0)
    q_input: tuple = (3.0, 15.0, 15.0)
    q_delta: tuple = (3.0, 15.0, 15.0)
    u_min: tuple = (3.0, -0.2, -0.2)
    u_max: tuple = (15.5, 0.2, 0.2)
    rate_limit: tuple = (np.inf, 0.04, 0.04)  # per control step
    solver_iters: int = 60
    step_size: float = 1e-2  # initial line-search step
    accept_radius: float = 0.04
    ref_speed: float = 0.25
    ref_hold: bool = True


class ControlInput(NamedTuple):
    thrust: float
    phi_ref: float
    theta_ref: float


def hover_input(params: ModelParams = ModelParams()) -> np.ndarray:
    return np.array([params.gravity, 0.0, 0.0])


def state_vector(p, v=(0.0, 0.0, 0.0), phi=0.0, theta=0.0) -> np.ndarray:
    return np.array([*p, *v, phi, theta], dtype=np.float64)


def reference_state(point) -> np.ndarray:
    """Hover reference at a point: zero velocity, level attitude."""
    return state_vector(point)


# ---------------------------------------------------------------------------
# dynamics (numba kernels operate on packed parameter arrays)


@njit(cache=True)
def _deriv(x, u, pk, out):
    ax, ay, az = pk[0], pk[1], pk[2]
    tau_phi, tau_theta, k_phi, k_theta, g = pk[3], pk[4], pk[5], pk[6], pk[7]
    thrust, phi_ref, theta_ref = u[0], u[1], u[2]
    phi, theta = x[6], x[7]
    sph, cph = math.sin(phi), math.cos(phi)
    sth, cth = math.sin(theta), math.cos(theta)
    out[0] = x[3]
    out[1] = x[4]
    out[2] = x[5]
    out[3] = thrust * sth * cph - ax * x[3]
    out[4] = -thrust * sph - ay * x[4]
    out[5] = thrust * cth * cph - g - az * x[5]
    out[6] = (k_phi * phi_ref - phi) / tau_phi
    out[7] = (k_theta * theta_ref - theta) / tau_theta


def dynamics_derivative(x, u, params: ModelParams = ModelParams()) -> np.ndarray:
    out = np.empty(8)
    _deriv(np.asarray(x, dtype=np.float64), np.asarray(u, dtype=np.float64),
           params.packed(), out)
    return out


def step_euler(x, u, dt: float, params: ModelParams = ModelParams()) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return x + dt * dynamics_derivative(x, u, params)


# ---------------------------------------------------------------------------
# horizon cost / gradient


@njit(cache=True)
def _rollout_cost(x0, U, xref, u_prev, dt, qx, qu, qdu, uref, pk):
    n = U.shape[0]
    x = x0.copy()
    dx = np.empty(8)
    J = 0.0
    for j in range(n):
        _deriv(x, U[j], pk, dx)
        for i in range(8):
            x[i] += dt * dx[i]
        for i in range(8):
            e = x[i] - xref[i]
            J += qx[i] * e * e
        for i in range(3):
            e = U[j, i] - uref[i]
            J += qu[i] * e * e
            prev = U[j - 1, i] if j > 0 else u_prev[i]
            e = U[j, i] - prev
            J += qdu[i] * e * e
    return J


@njit(cache=True)
def _rollout_grad(x0, U, xref, u_prev, dt, qx, qu, qdu, uref, pk, G):
    n = U.shape[0]
    xs = np.empty((n + 1, 8))
    xs[0] = x0
    dx = np.empty(8)
    for j in range(n):
        _deriv(xs[j], U[j], pk, dx)
        for i in range(8):
            xs[j + 1, i] = xs[j, i] + dt * dx[i]
    ax, ay, az = pk[0], pk[1], pk[2]
    tau_phi, tau_theta, k_phi, k_theta = pk[3], pk[4], pk[5], pk[6]
    lam = np.zeros(8)
    for j in range(n - 1, -1, -1):
        for i in range(8):
            lam[i] += 2.0 * qx[i] * (xs[j + 1, i] - xref[i])
        thrust = U[j, 0]
        phi, theta = xs[j, 6], xs[j, 7]
        sph, cph = math.sin(phi), math.cos(phi)
        sth, cth = math.sin(theta), math.cos(theta)
        for i in range(3):
            prev = U[j - 1, i] if j > 0 else u_prev[i]
            g_i = 2.0 * qu[i] * (U[j, i] - uref[i]) + 2.0 * qdu[i] * (U[j, i] - prev)
            if j < n - 1:
                g_i -= 2.0 * qdu[i] * (U[j + 1, i] - U[j, i])
            G[j, i] = g_i
        # d(accel)/dT at (xs[j], U[j])
        G[j, 0] += dt * ((sth * cph) * lam[3] + (-sph) * lam[4] + (cth * cph) * lam[5])
        G[j, 1] += dt * (k_phi / tau_phi) * lam[6]
        G[j, 2] += dt * (k_theta / tau_theta) * lam[7]
        # lam <- (I + dt * df/dx)^T lam, evaluated at (xs[j], U[j])
        lp0, lp1, lp2 = lam[0], lam[1], lam[2]
        lv0, lv1, lv2 = lam[3], lam[4], lam[5]
        lphi, lth = lam[6], lam[7]
        da_dphi0, da_dphi1, da_dphi2 = -thrust * sth * sph, -thrust * cph, -thrust * cth * sph
        da_dth0, da_dth2 = thrust * cth * cph, -thrust * sth * cph
        lam[3] = lv0 + dt * (lp0 - ax * lv0)
        lam[4] = lv1 + dt * (lp1 - ay * lv1)
        lam[5] = lv2 + dt * (lp2 - az * lv2)
        lam[6] = lphi + dt * (
            da_dphi0 * lv0 + da_dphi1 * lv1 + da_dphi2 * lv2 - lphi / tau_phi
        )
        lam[7] = lth + dt * (da_dth0 * lv0 + da_dth2 * lv2 - lth / tau_theta)


@njit(cache=True)
def _project(U, u_prev, umin, umax, rate):
    n = U.shape[0]
    for j in range(n):
        for i in range(3):
            prev = U[j - 1, i] if j > 0 else u_prev[i]
            lo = max(umin[i], prev - rate[i])
            hi = min(umax[i], prev + rate[i])
            v = U[j, i]
            if v < lo:
                v = lo
            elif v > hi:
                v = hi
            U[j, i] = v


@njit(cache=True)
def _solve(x0, U, xref, u_prev, dt, qx, qu, qdu, uref, umin, umax, rate, pk, iters, step0):
    # Projected gradient descent with a backtracking step: halve on failure,
    # grow 1.5x on success, so descent is monotone whatever the scaling.
    n = U.shape[0]
    G = np.empty((n, 3))
    cand = np.empty((n, 3))
    _project(U, u_prev, umin, umax, rate)
    J = _rollout_cost(x0, U, xref, u_prev, dt, qx, qu, qdu, uref, pk)
    if not math.isfinite(J):
        return math.nan
    alpha = step0
    for _ in range(iters):
        _rollout_grad(x0, U, xref, u_prev, dt, qx, qu, qdu, uref, pk, G)
        if not np.isfinite(G).all():
            return math.nan
        improved = False
        for _ in range(16):
            for j in range(n):
                for i in range(3):
                    cand[j, i] = U[j, i] - alpha * G[j, i]
            _project(cand, u_prev, umin, umax, rate)
            Jc = _rollout_cost(x0, cand, xref, u_prev, dt, qx, qu, qdu, uref, pk)
            if math.isfinite(Jc) and Jc < J:
                U[:] = cand
                J = Jc
                alpha = min(alpha * 1.5, 1.0)
                improved = True
                break
            alpha *= 0.5
        if not improved:
            break  # stationary under projection (or step underflow)
    return J


def _weights(config: NmpcConfig, params: ModelParams):
    return (
        np.asarray(config.q_state, dtype=np.float64),
        np.asarray(config.q_input, dtype=np.float64),
        np.asarray(config.q_delta, dtype=np.float64),
        hover_input(params),
    )


def nmpc_cost(x0, U, xref, u_prev, config: NmpcConfig, params: ModelParams) -> float:
    qx, qu, qdu, uref = _weights(config, params)
    J = _rollout_cost(
        np.asarray(x0, dtype=np.float64), np.asarray(U, dtype=np.float64),
        np.asarray(xref, dtype=np.float64), np.asarray(u_prev, dtype=np.float64),
        config.dt, qx, qu, qdu, uref, params.packed(),
    )
    if not math.isfinite(J):
        raise NonFiniteError("cost is not finite")
    return float(J)


def nmpc_gradient(x0, U, xref, u_prev, config: NmpcConfig, params: ModelParams) -> np.ndarray:
    qx, qu, qdu, uref = _weights(config, params)
    U = np.asarray(U, dtype=np.float64)
    G = np.empty_like(U)
    _rollout_grad(
        np.asarray(x0, dtype=np.float64), U, np.asarray(xref, dtype=np.float64),
        np.asarray(u_prev, dtype=np.float64), config.dt, qx, qu, qdu, uref,
        params.packed(), G,
    )
    if not np.isfinite(G).all():
        raise NonFiniteError("gradient is not finite")
    return G


def project_inputs(U, u_prev, config: NmpcConfig) -> np.ndarray:
    U = np.array(U, dtype=np.float64)
    _project(
        U, np.asarray(u_prev, dtype=np.float64),
        np.asarray(config.u_min), np.asarray(config.u_max),
        np.asarray(config.rate_limit),
    )
    return U


def nmpc_solve(x0, U0, xref, u_prev, config: NmpcConfig, params: ModelParams):
    """Minimise the horizon cost from warm start ``U0``.

    Returns ``(U, J)`` for the best input sequence seen; the sequence always
    satisfies the box and per-step rate constraints.
    """
    U = np.array(U0, dtype=np.float64)
    qx, qu, qdu, uref = _weights(config, params)
    J = _solve(
        np.asarray(x0, dtype=np.float64), U, np.asarray(xref, dtype=np.float64),
        np.asarray(u_prev, dtype=np.float64), config.dt, qx, qu, qdu, uref,
        np.asarray(config.u_min), np.asarray(config.u_max), np.asarray(config.rate_limit),
        params.packed(), config.solver_iters, config.step_size,
    )
    if not math.isfinite(J):
        raise NonFiniteError("solver diverged")
    return U, float(J)


class NmpcController:
    """Receding-horizon wrapper with warm starting."""

    def __init__(self, config: NmpcConfig = NmpcConfig(), params: ModelParams = ModelParams()):
        self.config = config
        self.params = params
        self.last_cost = math.nan
        self.reset()

    def reset(self):
        uref = hover_input(self.params)
        self._U = np.tile(uref, (self.config.horizon, 1))
        self.u_prev = uref.copy()

    def solve(self, x, xref) -> ControlInput:
        # shift last plan one step forward, repeating the tail
        self._U[:-1] = self._U[1:]
        U, J = nmpc_solve(x, self._U, xref, self.u_prev, self.config, self.params)
        self._U = U
        self.last_cost = J
        self.u_prev = U[0].copy()
        return ControlInput(*U[0])


# ---------------------------------------------------------------------------
# path following


def densify_path(path: PrintPath, spacing: float):
    """Resample a path at ``spacing`` so the carrot advances one knot per step.

    Returns ``(points, seg_ids, extrude)`` where ``seg_ids[k]`` is the index
    of the original waypoint whose incoming segment sample ``k`` lies on.
    """
    if len(path) == 0:
        raise ValueError("empty path")
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    pts = [path[0].pos()]
    seg_ids = [0]
    extrude = [bool(path[0].extrude)]
    for i in range(1, len(path)):
        a, b = path[i - 1].pos(), path[i].pos()
        length = float(np.linalg.norm(b - a))
        steps = max(1, int(math.ceil(length / spacing)))
        for s in range(1, steps + 1):
            pts.append(a + (b - a) * (s / steps))
            seg_ids.append(i)
            extrude.append(bool(path[i].extrude))
    return np.array(pts), np.array(seg_ids), np.array(extrude, dtype=bool)


class ReferencePath:
    """Carrot-on-a-stick reference over a densified path."""

    def __init__(self, points, seg_ids, extrude, accept_radius: float, hold: bool = True):
        self.points = np.asarray(points, dtype=np.float64)
        self.seg_ids = np.asarray(seg_ids)
        self.extrude = np.asarray(extrude, dtype=bool)
        self.accept_radius = float(accept_radius)
        self.hold = bool(hold)
        self.cursor = 0

    @classmethod
    def for_path(cls, path: PrintPath, config: NmpcConfig) -> "ReferencePath":
        pts, seg, ext = densify_path(path, config.ref_speed * config.dt)
        return cls(pts, seg, ext, config.accept_radius, config.ref_hold)

    def reference(self, position):
        """Current reference state; advances at most one knot per call.

        Raises PathCompleteError when the final knot has been reached.
        """
        pos = np.asarray(position, dtype=np.float64)
        near = float(np.linalg.norm(self.points[self.cursor] - pos)) < self.accept_radius
        if (near or not self.hold) and self.cursor + 1 < len(self.points):
            self.cursor += 1
        elif near and self.cursor + 1 == len(self.points):
            raise PathCompleteError
        return (
            reference_state(self.points[self.cursor]),
            int(self.seg_ids[self.cursor]),
            bool(self.extrude[self.cursor]),
        )
