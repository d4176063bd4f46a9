"""Two-level vibrational dynamics driven by the instantaneous light field.

The multi-order field reduces to an effective two-level problem through the
ac-Stark shifts and the two-photon Rabi frequency built from the same
coefficient tables as the propagation equations:

    Omega_00 = kappa * sum_q a_q |E_q|^2
    Omega_11 = kappa * sum_q b_q |E_q|^2
    Omega_01 = kappa * sum_p d_p E_p E_{p+1}^*      (p over adjacent pairs)

Conjugation convention: pairing the lower-order envelope with the conjugate
of the upper one makes the molecular excitation rate carry the same sign as
the net photon down-conversion rate of the propagation equations, so energy
bookkeeping between field and medium balances.  ``kappa`` (in
:class:`~ramanflow.spectrum.MediumSpec`) absorbs the remaining freedom of
normalization; it defaults to 1/2.

The density-matrix equations integrated here are

    d rho00 / dtau = i (O01 conj(rho01) - conj(O01) rho01) + gamma_a rho11
    d rho11 / dtau = -i (O01 conj(rho01) - conj(O01) rho01) - gamma_b rho11
    d rho01 / dtau = i (O00 - O11 + delta + i gamma_c) rho01
                     + i O01 (rho11 - rho00)

advanced with a fixed-step classic Runge-Kutta scheme; drive terms between
grid samples are linearly interpolated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .spectrum import CoherenceState, FieldState, MediumSpec

__all__ = ["RabiTerms", "rabi_from_fields", "step_bloch", "drive_adiabatic"]

_RHO01_BOUND = 0.5 + 1e-6


@dataclass(frozen=True)
class RabiTerms:
    """ac-Stark shifts and the complex two-photon Rabi frequency, per tau sample."""

    omega00: np.ndarray  # (m,) rad/s, real
    omega11: np.ndarray  # (m,) rad/s, real
    omega01: np.ndarray  # (m,) rad/s, complex

    def __post_init__(self):
        o00 = np.atleast_1d(np.asarray(self.omega00, dtype=float))
        o11 = np.atleast_1d(np.asarray(self.omega11, dtype=float))
        o01 = np.atleast_1d(np.asarray(self.omega01, dtype=complex))
        if not (o00.size == o11.size == o01.size):
            raise ValueError("Rabi term arrays must have equal length")
        if not (np.all(np.isfinite(o00)) and np.all(np.isfinite(o11))
                and np.all(np.isfinite(o01))):
            raise ValueError("Rabi terms must be finite")
        object.__setattr__(self, "omega00", o00)
        object.__setattr__(self, "omega11", o11)
        object.__setattr__(self, "omega01", o01)

    def __add__(self, other: "RabiTerms") -> "RabiTerms":
        return RabiTerms(
            self.omega00 + other.omega00,
            self.omega11 + other.omega11,
            self.omega01 + other.omega01,
        )


def rabi_from_fields(fs: FieldState, medium: MediumSpec) -> RabiTerms:
    """Effective two-level drive terms from the instantaneous field state."""
    if medium.ladder.n_modes != fs.ladder.n_modes or \
            medium.ladder.q_min != fs.ladder.q_min:
        raise ValueError("coefficient tables do not cover the field's ladder")
    e = fs.amplitudes
    i2 = np.abs(e) ** 2
    k = medium.kappa
    om00 = k * np.sum(medium.a[:, None] * i2, axis=0)
    om11 = k * np.sum(medium.b[:, None] * i2, axis=0)
    if fs.ladder.n_modes > 1:
        om01 = k * np.sum(medium.d[:, None] * e[:-1] * np.conj(e[1:]), axis=0)
    else:
        om01 = np.zeros(fs.n_tau, dtype=complex)
    return RabiTerms(om00, om11, om01)


def step_bloch(cs: CoherenceState, rabi: RabiTerms, medium: MediumSpec,
               dtau: float) -> CoherenceState:
    """Advance every tau sample by one RK4 step with its own (frozen) drive."""
    if dtau <= 0:
        raise ValueError("dtau must be positive")
    r00 = cs.rho00.astype(float)
    r11 = cs.rho11.astype(float)
    r01 = cs.rho01.astype(complex)
    ga, gb, gc = medium.gamma_a, medium.gamma_b, medium.gamma_c
    delta = medium.two_photon_detuning
    o00, o11, o01 = rabi.omega00, rabi.omega11, rabi.omega01

    def rhs(a00, a11, a01):
        exchange = 1j * (o01 * np.conj(a01) - np.conj(o01) * a01)
        d00 = exchange.real + ga * a11
        d11 = -exchange.real - gb * a11
        d01 = 1j * (o00 - o11 + delta + 1j * gc) * a01 + 1j * o01 * (a11 - a00)
        return d00, d11, d01

    k1 = rhs(r00, r11, r01)
    k2 = rhs(r00 + 0.5 * dtau * k1[0], r11 + 0.5 * dtau * k1[1], r01 + 0.5 * dtau * k1[2])
    k3 = rhs(r00 + 0.5 * dtau * k2[0], r11 + 0.5 * dtau * k2[1], r01 + 0.5 * dtau * k2[2])
    k4 = rhs(r00 + dtau * k3[0], r11 + dtau * k3[1], r01 + dtau * k3[2])
    w = dtau / 6.0
    n00 = r00 + w * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    n11 = r11 + w * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    n01 = r01 + w * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
    if np.any(np.abs(n01) > _RHO01_BOUND) or not np.all(np.isfinite(n01)):
        raise NumericalError(
            f"|rho01| exceeded 1/2 after a step of {dtau:.3g} s; reduce dtau"
        )
    return CoherenceState(cs.tau_grid, n00, n11, n01)


def _sweep(o00, o11, o01, dtau, r0, ga, gb, gc, delta):
    """Sequential RK4 sweep along tau with linearly interpolated drive.

    Plain-Python complex scalars: this is the hot inner loop of the coupled
    simulation and beats numpy scalar arithmetic by an order of magnitude.
    """
    m = len(o00)
    r00, r11, r01 = r0
    out00 = [r00]
    out11 = [r11]
    out01 = [r01]
    idg = 1j * (delta + 1j * gc)
    for j in range(m - 1):
        a00 = o00[j]; a11 = o11[j]; a01 = o01[j]
        b00 = o00[j + 1]; b11 = o11[j + 1]; b01 = o01[j + 1]
        m00 = 0.5 * (a00 + b00); m11 = 0.5 * (a11 + b11); m01 = 0.5 * (a01 + b01)

        ex = (1j * (a01 * r01.conjugate() - a01.conjugate() * r01)).real
        k1_00 = ex + ga * r11
        k1_11 = -ex - gb * r11
        k1_01 = (1j * (a00 - a11) + idg) * r01 + 1j * a01 * (r11 - r00)

        t00 = r00 + 0.5 * dtau * k1_00
        t11 = r11 + 0.5 * dtau * k1_11
        t01 = r01 + 0.5 * dtau * k1_01
        ex = (1j * (m01 * t01.conjugate() - m01.conjugate() * t01)).real
        k2_00 = ex + ga * t11
        k2_11 = -ex - gb * t11
        k2_01 = (1j * (m00 - m11) + idg) * t01 + 1j * m01 * (t11 - t00)

        t00 = r00 + 0.5 * dtau * k2_00
        t11 = r11 + 0.5 * dtau * k2_11
        t01 = r01 + 0.5 * dtau * k2_01
        ex = (1j * (m01 * t01.conjugate() - m01.conjugate() * t01)).real
        k3_00 = ex + ga * t11
        k3_11 = -ex - gb * t11
        k3_01 = (1j * (m00 - m11) + idg) * t01 + 1j * m01 * (t11 - t00)

        t00 = r00 + dtau * k3_00
        t11 = r11 + dtau * k3_11
        t01 = r01 + dtau * k3_01
        ex = (1j * (b01 * t01.conjugate() - b01.conjugate() * t01)).real
        k4_00 = ex + ga * t11
        k4_11 = -ex - gb * t11
        k4_01 = (1j * (b00 - b11) + idg) * t01 + 1j * b01 * (t11 - t00)

        w = dtau / 6.0
        r00 += w * (k1_00 + 2 * k2_00 + 2 * k3_00 + k4_00)
        r11 += w * (k1_11 + 2 * k2_11 + 2 * k3_11 + k4_11)
        r01 += w * (k1_01 + 2 * k2_01 + 2 * k3_01 + k4_01)
        out00.append(r00)
        out11.append(r11)
        out01.append(r01)
    return out00, out11, out01


def drive_adiabatic(fs: FieldState, medium: MediumSpec,
                    initial: CoherenceState | None = None) -> CoherenceState:
    """Integrate the coherence across the whole local-time grid.

    Starts from ``initial`` (default: ground state) at the first tau sample
    and sweeps to the last.  Adiabaticity is the caller's responsibility;
    this only integrates.
    """
    rabi = rabi_from_fields(fs, medium)
    return integrate_rabi(rabi, fs.tau_grid, medium, initial)


def integrate_rabi(rabi: RabiTerms, tau_grid, medium: MediumSpec,
                   initial: CoherenceState | None = None) -> CoherenceState:
    """Sweep the density matrix along tau under precomputed drive terms."""
    tau = np.asarray(tau_grid, dtype=float)
    if tau.size != rabi.omega00.size:
        raise ValueError("Rabi terms do not match the tau grid")
    if tau.size == 1:
        base = initial if initial is not None else CoherenceState.ground(tau)
        return base
    dtau = float(tau[1] - tau[0])
    if initial is None:
        r0 = (1.0, 0.0, 0j)
    else:
        r0 = (float(initial.rho00[0]), float(initial.rho11[0]),
              complex(initial.rho01[0]))
    out00, out11, out01 = _sweep(
        rabi.omega00.tolist(), rabi.omega11.tolist(), rabi.omega01.tolist(),
        dtau, r0, medium.gamma_a, medium.gamma_b, medium.gamma_c,
        medium.two_photon_detuning,
    )
    r01 = np.asarray(out01, dtype=complex)
    if np.any(np.abs(r01) > _RHO01_BOUND) or not np.all(np.isfinite(r01)):
        raise NumericalError(
            "coherence integration left the physical ball |rho01| <= 1/2; "
            "reduce the tau step or the drive strength"
        )
    return CoherenceState(tau, np.asarray(out00), np.asarray(out11), r01)
