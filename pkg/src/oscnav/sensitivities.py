"""Exact first and second derivatives of beta and of the infidelity.

The final mode pair is a product of per-step matrices, so its derivative
with respect to any one pulse amplitude follows a forward recursion: the row
for pulse j is seeded by A'(omega_j) applied to the incoming state and then
carried forward by the ordinary step matrices (dependence on omega_j flows
only through the initial conditions of later steps). Second derivatives use
the same structure one level up, with A'' seeding the diagonal. Everything
is evaluated in one sweep: O(M^2) for the gradient, O(M^3) for the Hessian.

Symbolic expansion of the product is deliberately avoided; only the
iterative tableau is implemented.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyProtocol
from .propagator import (ModeState, _step_entries, bogoliubov, infidelity,
                         initial_state, propagate)
from .protocol import Protocol, validate

# Derivative entries subtract nearly-equal trig terms; below this |omega*dt|
# a truncated series is both safer and exact enough (< 1e-15 relative).
_D_SERIES_THRESHOLD = 1e-2


@dataclass(frozen=True)
class SensitivityBundle:
    """Exact derivatives of beta and of I = |beta|^2 w.r.t. the pulses.

    ``hess_beta``/``hess_infidelity`` are None unless produced by
    :func:`hessian`.
    """

    beta: complex
    grad_beta: np.ndarray
    grad_infidelity: np.ndarray
    hess_beta: np.ndarray | None = None
    hess_infidelity: np.ndarray | None = None


def _d1_entries(omega: float, dt: float):
    """Entries (d00, d01, d10) of A'(omega); d11 = d00. Odd in omega."""
    x = omega * dt
    c = math.cos(x)
    if abs(x) < _D_SERIES_THRESHOLD:
        x2 = x * x
        snc = 1.0 - x2 / 6.0 + x2 * x2 / 120.0 - x2 * x2 * x2 / 5040.0
        # (x*cos(x) - sin(x))/omega^2 without the cancellation
        d01 = dt ** 3 * omega * (-1.0 / 3.0 + x2 / 30.0 - x2 * x2 / 840.0
                                 + x2 * x2 * x2 / 45360.0)
    else:
        snc = math.sin(x) / x
        d01 = x * (c - snc) / (omega * omega)
    s = x * snc
    return -dt * s, d01, -s - x * c


def _d2_entries(omega: float, dt: float):
    """Entries (h00, h01, h10) of A''(omega); h11 = h00. Even in omega."""
    x = omega * dt
    c = math.cos(x)
    if abs(x) < _D_SERIES_THRESHOLD:
        x2 = x * x
        # (2*sin(x) - 2*x*cos(x) - x^2*sin(x))/x^3
        sinc_dd = -1.0 / 3.0 + x2 / 10.0 - x2 * x2 / 168.0 + x2 * x2 * x2 / 6480.0
        s = x * (1.0 - x2 / 6.0 + x2 * x2 / 120.0 - x2 * x2 * x2 / 5040.0)
    else:
        s = math.sin(x)
        sinc_dd = (2.0 * s - 2.0 * x * c - x * x * s) / (x * x * x)
    return -dt * dt * c, dt ** 3 * sinc_dd, dt * (x * s - 2.0 * c)


def step_matrix_d1(omega: float, dt: float) -> np.ndarray:
    """dA/domega as a 2x2 array; finite everywhere including omega = 0."""
    d00, d01, d10 = _d1_entries(omega, dt)
    return np.array([[d00, d01], [d10, d00]])


def step_matrix_d2(omega: float, dt: float) -> np.ndarray:
    """d^2A/domega^2 as a 2x2 array; finite everywhere including omega = 0."""
    h00, h01, h10 = _d2_entries(omega, dt)
    return np.array([[h00, h01], [h10, h00]])


def _beta_map(df: np.ndarray, dfdot: np.ndarray, omegaT: float) -> np.ndarray:
    """Apply the (linear) beta formula to a derivative of the mode pair."""
    return -1j / math.sqrt(2.0 * omegaT) * (dfdot + 1j * omegaT * df)


def gradient(p: Protocol) -> SensitivityBundle:
    """Exact grad(beta) and grad(I) in one forward sweep."""
    validate(p)
    m = p.m
    if m == 0:
        raise EmptyProtocol("gradient requires at least one pulse")
    dt = p.dt
    s0 = initial_state(p.omega0)
    f, fd = s0.f, s0.fdot
    vf = np.zeros(m, dtype=complex)   # d f_final / d omega_j, built up stepwise
    vd = np.zeros(m, dtype=complex)
    for i, w in enumerate(p.omegas):
        a00, a01, a10 = _step_entries(w, dt)
        d00, d01, d10 = _d1_entries(w, dt)
        if i:
            vf[:i], vd[:i] = a00 * vf[:i] + a01 * vd[:i], a10 * vf[:i] + a00 * vd[:i]
        vf[i] = d00 * f + d01 * fd
        vd[i] = d10 * f + d00 * fd
        f, fd = a00 * f + a01 * fd, a10 * f + a00 * fd
    beta = bogoliubov(ModeState(f, fd), p.omegaT).beta
    grad_beta = _beta_map(vf, vd, p.omegaT)
    grad_infid = 2.0 * np.real(grad_beta * np.conj(beta))
    return SensitivityBundle(beta=beta, grad_beta=grad_beta,
                             grad_infidelity=grad_infid)


def hessian(p: Protocol) -> SensitivityBundle:
    """Exact gradient plus Hessians of beta and of I.

    Second derivatives propagate by the three-case recursion
    (both indices past: carried by A; one index current: seeded by A' on the
    first-derivative row; both current: seeded by A'' on the state), then the
    beta map is applied entrywise and the result symmetrized to cancel
    rounding.
    """
    validate(p)
    m = p.m
    if m == 0:
        raise EmptyProtocol("hessian requires at least one pulse")
    dt = p.dt
    s0 = initial_state(p.omega0)
    f, fd = s0.f, s0.fdot
    vf = np.zeros(m, dtype=complex)
    vd = np.zeros(m, dtype=complex)
    wf = np.zeros((m, m), dtype=complex)  # d^2 f_final / d omega_j d omega_k
    wd = np.zeros((m, m), dtype=complex)
    for i, w in enumerate(p.omegas):
        a00, a01, a10 = _step_entries(w, dt)
        d00, d01, d10 = _d1_entries(w, dt)
        h00, h01, h10 = _d2_entries(w, dt)
        if i:
            blkf, blkd = wf[:i, :i], wd[:i, :i]
            wf[:i, :i], wd[:i, :i] = a00 * blkf + a01 * blkd, a10 * blkf + a00 * blkd
            mixf = d00 * vf[:i] + d01 * vd[:i]
            mixd = d10 * vf[:i] + d00 * vd[:i]
            wf[:i, i] = wf[i, :i] = mixf
            wd[:i, i] = wd[i, :i] = mixd
        wf[i, i] = h00 * f + h01 * fd
        wd[i, i] = h10 * f + h00 * fd
        if i:
            vf[:i], vd[:i] = a00 * vf[:i] + a01 * vd[:i], a10 * vf[:i] + a00 * vd[:i]
        vf[i] = d00 * f + d01 * fd
        vd[i] = d10 * f + d00 * fd
        f, fd = a00 * f + a01 * fd, a10 * f + a00 * fd
    beta = bogoliubov(ModeState(f, fd), p.omegaT).beta
    grad_beta = _beta_map(vf, vd, p.omegaT)
    hess_beta = _beta_map(wf, wd, p.omegaT)
    hess_beta = 0.5 * (hess_beta + hess_beta.T)
    grad_infid = 2.0 * np.real(grad_beta * np.conj(beta))
    hess_infid = 2.0 * np.real(np.outer(grad_beta, np.conj(grad_beta))
                               + hess_beta * np.conj(beta))
    hess_infid = 0.5 * (hess_infid + hess_infid.T)
    return SensitivityBundle(beta=beta, grad_beta=grad_beta,
                             grad_infidelity=grad_infid,
                             hess_beta=hess_beta, hess_infidelity=hess_infid)


def optimal_hessian(grad_beta: np.ndarray) -> np.ndarray:
    """Rank-<=2 Hessian of I valid at frictionless points.

    With beta = 0 the curvature collapses to
    2*(Re grad_beta (x) Re grad_beta + Im grad_beta (x) Im grad_beta);
    exactly symmetric by construction.
    """
    re, im = np.real(grad_beta), np.imag(grad_beta)
    return 2.0 * (np.outer(re, re) + np.outer(im, im))


def fd_gradient(p: Protocol, h: float = 1e-6):
    """Central-difference oracle: (grad I, grad beta), each an M-vector."""
    if h <= 0:
        raise ValueError("finite-difference step must be > 0")
    m = p.m
    gi = np.zeros(m)
    gb = np.zeros(m, dtype=complex)
    base = list(p.omegas)
    for i in range(m):
        for sgn in (+1.0, -1.0):
            pert = base.copy()
            pert[i] += sgn * h
            q = p.with_omegas(pert)
            b = bogoliubov(propagate(q), q.omegaT).beta
            gi[i] += sgn * abs(b) ** 2
            gb[i] += sgn * b
    return gi / (2.0 * h), gb / (2.0 * h)


def fd_hessian(p: Protocol, h: float = 1e-4) -> np.ndarray:
    """Central second differences of I; symmetric by construction."""
    if h <= 0:
        raise ValueError("finite-difference step must be > 0")
    m = p.m
    out = np.zeros((m, m))
    base = np.asarray(p.omegas, dtype=float)

    def f_at(delta):
        return infidelity(p.with_omegas(base + delta))

    i0 = f_at(np.zeros(m))
    for i in range(m):
        ei = np.zeros(m)
        ei[i] = h
        out[i, i] = (f_at(ei) - 2.0 * i0 + f_at(-ei)) / (h * h)
        for j in range(i + 1, m):
            ej = np.zeros(m)
            ej[j] = h
            val = (f_at(ei + ej) - f_at(ei - ej) - f_at(-ei + ej)
                   + f_at(-ei - ej)) / (4.0 * h * h)
            out[i, j] = out[j, i] = val
    return out
