"""Frequency ladder, field/photon-number state types, and unit conversions.

All quantities are SI internally: frequencies in Hz (angular frequencies in
rad/s where named ``omega``), lengths in m, times in s, field envelopes in
V/m, photon number densities in photons/m^3.  Lab units (nm, THz, GW/cm^2,
ns) appear only in constructor helpers and file I/O.

Photon number density per mode is defined as

    n_q = epsilon_0 |E_q|^2 / (2 hbar omega_q)

i.e. the cycle-averaged electromagnetic energy density divided by the photon
energy.  Any fixed proportionality constant would preserve the conservation
laws; this one makes ``n`` a physical density.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.constants import c, epsilon_0, hbar

__all__ = [
    "ModeLadder",
    "FieldState",
    "FlowState",
    "CoherenceState",
    "MediumSpec",
    "build_ladder",
    "to_flow",
    "to_field",
    "total_photons",
    "intensity_to_amplitude",
    "amplitude_to_intensity",
    "gaussian_envelope",
    "wrap_phase",
]


def _frozen_array(values, dtype=float, ndim=None) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def wrap_phase(phi):
    """Wrap phase(s) to the interval (-pi, pi]."""
    wrapped = np.angle(np.exp(1j * np.asarray(phi, dtype=float)))
    if np.ndim(phi) == 0:
        return float(wrapped)
    return wrapped


@dataclass(frozen=True)
class ModeLadder:
    """Discrete comb of sideband orders: frequency(q) = base + q * shift.

    ``q_min <= 0 <= q_max``; order 0 is the incident carrier.  Single-mode
    ladders (q_min == q_max == 0) are allowed for degenerate bookkeeping.
    """

    base_frequency: float  # Hz, order q = 0
    raman_shift: float     # Hz, spacing of adjacent orders
    q_min: int
    q_max: int

    def __post_init__(self):
        if self.base_frequency <= 0:
            raise ValueError("base_frequency must be positive")
        if self.raman_shift <= 0:
            raise ValueError("raman_shift must be positive")
        if not (self.q_min <= 0 <= self.q_max):
            raise ValueError("order bounds must satisfy q_min <= 0 <= q_max")
        if self.frequency(self.q_min) <= 0:
            raise ValueError(
                f"order {self.q_min} has non-positive frequency "
                f"{self.frequency(self.q_min):.6g} Hz (long-wavelength truncation limit)"
            )

    @property
    def n_modes(self) -> int:
        return self.q_max - self.q_min + 1

    @property
    def orders(self) -> np.ndarray:
        return np.arange(self.q_min, self.q_max + 1)

    def index_of(self, q: int) -> int:
        if not (self.q_min <= q <= self.q_max):
            raise ValueError(f"order {q} outside ladder [{self.q_min}, {self.q_max}]")
        return q - self.q_min

    def frequency(self, q) -> float:
        return self.base_frequency + np.asarray(q) * self.raman_shift

    @property
    def frequencies(self) -> np.ndarray:
        return self.frequency(self.orders)

    @property
    def omegas(self) -> np.ndarray:
        return 2.0 * np.pi * self.frequencies

    def wavelength(self, q) -> float:
        return c / self.frequency(q)

    @property
    def wavelengths(self) -> np.ndarray:
        return c / self.frequencies

    def wavelength_nm(self, q) -> float:
        return self.wavelength(q) * 1e9

    def extended(self, extra_below: int, extra_above: int) -> "ModeLadder":
        """Widen the order range (used for truncation-convergence checks)."""
        return ModeLadder(
            self.base_frequency,
            self.raman_shift,
            self.q_min - extra_below,
            self.q_max + extra_above,
        )


def build_ladder(base_wavelength_nm: float, raman_shift_thz: float,
                 q_min: int, q_max: int) -> ModeLadder:
    """Construct a ladder from the carrier wavelength and modulation shift."""
    if base_wavelength_nm <= 0:
        raise ValueError("base_wavelength_nm must be positive")
    return ModeLadder(
        base_frequency=c / (base_wavelength_nm * 1e-9),
        raman_shift=raman_shift_thz * 1e12,
        q_min=q_min,
        q_max=q_max,
    )


@dataclass(frozen=True)
class FieldState:
    """Complex slowly-varying envelopes per order on a local-time grid.

    ``amplitudes[i, j]`` is the envelope of order ``ladder.orders[i]`` at
    local time ``tau_grid[j]``.  Instances are immutable value objects; the
    arrays are marked read-only.
    """

    ladder: ModeLadder
    tau_grid: np.ndarray    # (m,) s
    amplitudes: np.ndarray  # (n_modes, m) complex V/m

    def __post_init__(self):
        tau = _frozen_array(self.tau_grid, ndim=1)
        amp = _frozen_array(self.amplitudes, dtype=complex, ndim=2)
        if amp.shape != (self.ladder.n_modes, tau.size):
            raise ValueError(
                f"amplitude shape {amp.shape} does not match "
                f"({self.ladder.n_modes} orders, {tau.size} tau samples)"
            )
        if not np.all(np.isfinite(amp)):
            raise ValueError("field amplitudes must be finite")
        object.__setattr__(self, "tau_grid", tau)
        object.__setattr__(self, "amplitudes", amp)

    @property
    def n_tau(self) -> int:
        return self.tau_grid.size

    def order(self, q: int) -> np.ndarray:
        return self.amplitudes[self.ladder.index_of(q)]

    def with_amplitudes(self, amplitudes) -> "FieldState":
        return FieldState(self.ladder, self.tau_grid, amplitudes)


@dataclass(frozen=True)
class FlowState:
    """Photon-number/phase picture of a :class:`FieldState`.

    Phases are unwrapped along tau per order; entries with zero photon
    density carry phase 0 by convention so the transform is total.
    """

    ladder: ModeLadder
    tau_grid: np.ndarray        # (m,)
    photon_density: np.ndarray  # (n_modes, m) photons/m^3, >= 0
    phase: np.ndarray           # (n_modes, m) rad

    def __post_init__(self):
        tau = _frozen_array(self.tau_grid, ndim=1)
        n = _frozen_array(self.photon_density, ndim=2)
        phi = _frozen_array(self.phase, ndim=2)
        shape = (self.ladder.n_modes, tau.size)
        if n.shape != shape or phi.shape != shape:
            raise ValueError(f"arrays must have shape {shape}")
        if np.any(n < 0):
            raise ValueError("photon densities must be non-negative")
        if not (np.all(np.isfinite(n)) and np.all(np.isfinite(phi))):
            raise ValueError("flow state must be finite")
        object.__setattr__(self, "tau_grid", tau)
        object.__setattr__(self, "photon_density", n)
        object.__setattr__(self, "phase", phi)


@dataclass(frozen=True)
class CoherenceState:
    """Two-level density-matrix elements sampled on a local-time grid."""

    tau_grid: np.ndarray  # (m,)
    rho00: np.ndarray     # (m,)
    rho11: np.ndarray     # (m,)
    rho01: np.ndarray     # (m,) complex

    _POP_TOL = 1e-6

    def __post_init__(self):
        tau = _frozen_array(self.tau_grid, ndim=1)
        r00 = _frozen_array(self.rho00, ndim=1)
        r11 = _frozen_array(self.rho11, ndim=1)
        r01 = _frozen_array(self.rho01, dtype=complex, ndim=1)
        m = tau.size
        if not (r00.size == r11.size == r01.size == m):
            raise ValueError("coherence arrays must match the tau grid length")
        tol = self._POP_TOL
        if np.any(r00 < -tol) or np.any(r00 > 1 + tol):
            raise ValueError("rho00 outside [0, 1]")
        if np.any(r11 < -tol) or np.any(r11 > 1 + tol):
            raise ValueError("rho11 outside [0, 1]")
        if np.any(np.abs(r01) > 0.5 + tol):
            raise ValueError("|rho01| exceeds 1/2")
        object.__setattr__(self, "tau_grid", tau)
        object.__setattr__(self, "rho00", r00)
        object.__setattr__(self, "rho11", r11)
        object.__setattr__(self, "rho01", r01)

    @classmethod
    def ground(cls, tau_grid) -> "CoherenceState":
        tau = np.asarray(tau_grid, dtype=float)
        m = tau.size
        return cls(tau, np.ones(m), np.zeros(m), np.zeros(m, dtype=complex))

    @classmethod
    def pure(cls, rho01: complex, tau_grid) -> "CoherenceState":
        """Pure-state populations consistent with a given coherence.

        For a pure superposition the populations follow from
        |rho01|^2 = rho00 * rho11 with rho00 + rho11 = 1 and rho00 >= rho11.
        """
        tau = np.asarray(tau_grid, dtype=float)
        mag = abs(rho01)
        if mag > 0.5:
            raise ValueError("|rho01| cannot exceed 1/2")
        r00 = 0.5 * (1.0 + np.sqrt(1.0 - 4.0 * mag * mag))
        m = tau.size
        return cls(tau, np.full(m, r00), np.full(m, 1.0 - r00),
                   np.full(m, rho01, dtype=complex))

    @property
    def trace(self) -> np.ndarray:
        return self.rho00 + self.rho11

    @property
    def phase(self) -> np.ndarray:
        """phi_rho = arg(rho01)."""
        return np.angle(self.rho01)


@dataclass(frozen=True)
class MediumSpec:
    """Gas density, dispersion/coupling tables, and relaxation parameters.

    ``a`` and ``b`` are the per-order dispersion coefficients weighting the
    ground/excited populations; ``d[p]`` couples the adjacent pair
    (orders[p], orders[p+1]).  Units are m^2 V^-2 s^-1: multiplied by a
    field product they give rad/s, and together with the propagation
    prefactor N*hbar*omega/(epsilon_0*c) they give the local wavenumber
    shift of Eq.-of-motion terms.

    ``kappa`` rescales the two-photon Rabi terms built from the same tables
    (see :mod:`ramanflow.bloch`); it is part of the dataset so users with
    authoritative tables can reproduce physical magnitudes.
    """

    ladder: ModeLadder
    density: float        # molecules / m^3
    a: np.ndarray         # (n_modes,)
    b: np.ndarray         # (n_modes,)
    d: np.ndarray         # (n_modes - 1,) complex
    gamma_a: float = 0.0  # 1/s, population feed 1 -> 0
    gamma_b: float = 0.0  # 1/s, population decay of state 1
    gamma_c: float = 0.0  # 1/s, coherence decay
    two_photon_detuning: float = 0.0  # rad/s, delta in the coherence equation
    kappa: float = 0.5

    def __post_init__(self):
        if self.density <= 0:
            raise ValueError("density must be positive")
        n = self.ladder.n_modes
        a = _frozen_array(self.a, ndim=1)
        b = _frozen_array(self.b, ndim=1)
        d = _frozen_array(self.d, dtype=complex, ndim=1)
        if a.size != n or b.size != n:
            raise ValueError(f"dispersion tables must cover all {n} orders")
        if d.size != max(n - 1, 0):
            raise ValueError(f"coupling table must cover all {n - 1} adjacent pairs")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "d", d)

    @property
    def xi_rate(self) -> float:
        """Propagation prefactor N*hbar/(epsilon_0*c) shared by all terms."""
        return self.density * hbar / (epsilon_0 * c)


def to_flow(fs: FieldState) -> FlowState:
    """Field envelopes -> photon number densities and unwrapped phases."""
    w = fs.ladder.omegas[:, None]
    n = epsilon_0 * np.abs(fs.amplitudes) ** 2 / (2.0 * hbar * w)
    phi = np.unwrap(np.angle(fs.amplitudes), axis=1)
    phi = np.where(n > 0, phi, 0.0)
    return FlowState(fs.ladder, fs.tau_grid, n, phi)


def to_field(fl: FlowState, ladder: ModeLadder | None = None) -> FieldState:
    """Photon number densities and phases -> field envelopes."""
    ladder = fl.ladder if ladder is None else ladder
    if np.any(fl.photon_density < 0):
        raise ValueError("photon densities must be non-negative")
    w = ladder.omegas[:, None]
    mag = np.sqrt(2.0 * hbar * w * fl.photon_density / epsilon_0)
    return FieldState(ladder, fl.tau_grid, mag * np.exp(1j * fl.phase))


def total_photons(fl: FlowState, tau_index: int) -> float:
    """Sum of photon densities over all orders at one local-time sample."""
    return float(np.sum(fl.photon_density[:, tau_index]))


def intensity_to_amplitude(intensity_gw_cm2: float) -> float:
    """Peak intensity in GW/cm^2 -> envelope amplitude in V/m (I = eps0*c*|E|^2/2)."""
    intensity_si = intensity_gw_cm2 * 1e13  # GW/cm^2 -> W/m^2
    return float(np.sqrt(2.0 * intensity_si / (epsilon_0 * c)))


def amplitude_to_intensity(amplitude_v_m) -> float:
    """Envelope amplitude in V/m -> intensity in GW/cm^2."""
    return 0.5 * epsilon_0 * c * np.abs(amplitude_v_m) ** 2 / 1e13


def gaussian_envelope(t, fwhm: float, center: float = 0.0) -> np.ndarray:
    """Amplitude envelope whose *intensity* has the given FWHM."""
    t = np.asarray(t, dtype=float)
    return np.exp(-2.0 * np.log(2.0) * ((t - center) / fwhm) ** 2)
