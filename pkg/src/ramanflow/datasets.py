"""Built-in coefficient tables for the nonlinear gas medium.

The shipped dataset is a single-electronic-resonance polarizability model:

    a(w) = A * 2*w_e / (w_e^2 - w^2)            ground-state dispersion
    b(w) = A * 2*w_e' / (w_e'^2 - w^2)          excited-state dispersion,
                                                w_e' = w_e - w_R
    d(p) = D * 2*w_e / (w_e^2 - wbar^2)
             * (wbar / w_ref)^P                 pair coupling,
                                                wbar = sqrt(w_p * w_{p+1})

with the resonance placed in the VUV where the strong electronic bands of
light molecular gases sit.  The power-law factor stands in for the
frequency weighting of the vibrational transition moments that a
multi-state sum would produce; it makes the coupling-to-dispersion ratio
fall toward long wavelengths, which is the regime where concentration
walks need extra phase resets.

The scales A and D are calibrated so that, at a density of 2.6e18 cm^-3,
(i) two-color driving at 10 GW/cm^2 and -500 MHz two-photon detuning
reaches a coherence magnitude near 0.3 and (ii) an eight-hop concentration
walk on a 210 nm ladder spans roughly a 37 cm cell.  The numbers are NOT
derived from molecular data; swap in measured tables
(``medium_from_tables``) for quantitative work.
"""

from __future__ import annotations

import numpy as np
from scipy.constants import c

from .spectrum import MediumSpec, ModeLadder

__all__ = [
    "DATASET_VERSION",
    "synthetic_medium",
    "medium_from_tables",
]

DATASET_VERSION = "synthetic-h2-v1"

#: Effective electronic resonance wavelength of the model (m).
RESONANCE_WAVELENGTH = 105e-9

#: Dispersion scale; sets a_q ~ 1e-8 m^2 V^-2 s^-1 for visible/UV orders.
A_SCALE = 5e7

#: Pair-coupling scale at the reference frequency.
D_SCALE = 6.0e8

#: Reference (angular) frequency of the coupling power law: a 210 nm carrier.
COUPLING_REF_OMEGA = 2.0 * np.pi * c / 210e-9

#: Exponent of the coupling power law.
COUPLING_POWER = 0.49


def _resonance_factor(omega, omega_res):
    denom = omega_res**2 - np.asarray(omega) ** 2
    if np.any(denom <= 0):
        raise ValueError(
            "ladder extends past the model's electronic resonance "
            f"({RESONANCE_WAVELENGTH * 1e9:.0f} nm)"
        )
    return 2.0 * omega_res / denom


def synthetic_medium(
    ladder: ModeLadder,
    density: float,
    *,
    gamma_a: float = 0.0,
    gamma_b: float = 0.0,
    gamma_c: float = 0.0,
    two_photon_detuning: float = 0.0,
    kappa: float = 0.5,
    a_scale: float = A_SCALE,
    d_scale: float = D_SCALE,
    coupling_power: float = COUPLING_POWER,
    resonance_wavelength: float = RESONANCE_WAVELENGTH,
) -> MediumSpec:
    """Build a :class:`MediumSpec` for ``ladder`` from the synthetic model."""
    w = ladder.omegas
    w_e = 2.0 * np.pi * c / resonance_wavelength
    w_e_excited = w_e - 2.0 * np.pi * ladder.raman_shift
    a = a_scale * _resonance_factor(w, w_e)
    b = a_scale * _resonance_factor(w, w_e_excited)
    wbar = np.sqrt(w[:-1] * w[1:])
    d = d_scale * _resonance_factor(wbar, w_e) * (wbar / COUPLING_REF_OMEGA) ** coupling_power
    return MediumSpec(
        ladder=ladder,
        density=density,
        a=a,
        b=b,
        d=d.astype(complex),
        gamma_a=gamma_a,
        gamma_b=gamma_b,
        gamma_c=gamma_c,
        two_photon_detuning=two_photon_detuning,
        kappa=kappa,
    )


def medium_from_tables(
    ladder: ModeLadder,
    density: float,
    a,
    b,
    d,
    **kwargs,
) -> MediumSpec:
    """Build a :class:`MediumSpec` from explicit per-order tables."""
    return MediumSpec(
        ladder=ladder,
        density=density,
        a=np.asarray(a, dtype=float),
        b=np.asarray(b, dtype=float),
        d=np.asarray(d, dtype=complex),
        **kwargs,
    )
