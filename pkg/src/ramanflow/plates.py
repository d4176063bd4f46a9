"""Dispersive transparent plates: per-order phase retardation and absorption.

A plate is a thin phase/amplitude screen at a point along the cell: each
sideband order picks up a phase 2*pi*n(lambda_q)*d/lambda_q from the
refractive index of the material at its wavelength, and an amplitude factor
from absorption.  Because the orders are tens of THz apart, a micrometer
thickness change sweeps their relative phases over full turns at different
rates, which is what makes a plate stack a general-purpose relative-phase
controller.

Material data lives in YAML files (Sellmeier coefficients, validity range,
optional absorption table); the package ships magnesium fluoride ordinary
and extraordinary axes with handbook Sellmeier fits.  No propagation inside
the plate and no interface reflections are modeled.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from typing import Mapping

import numpy as np
import yaml

from .errors import ConfigError
from .spectrum import FieldState, ModeLadder, wrap_phase

__all__ = [
    "MaterialDispersion",
    "Plate",
    "PlateStack",
    "refractive_index",
    "apply_plate",
    "relative_phase_map",
    "load_material",
    "builtin_materials",
    "load_stack",
    "save_stack",
]

#: Series tags used to pick the index curve a beam sees.
PROBE = "probe"
DRIVING = "driving"


@dataclass(frozen=True)
class MaterialDispersion:
    """Sellmeier refractive index plus absorption data for one crystal axis."""

    name: str
    sellmeier_b: np.ndarray        # (k,) dimensionless strengths
    sellmeier_c_um2: np.ndarray    # (k,) resonance wavelengths squared, um^2
    range_m: tuple[float, float]   # wavelength validity
    absorption: np.ndarray | None = None  # (m, 2): wavelength_nm, alpha_per_cm
    uniform_intensity_transmission: float = 1.0

    def __post_init__(self):
        b = np.asarray(self.sellmeier_b, dtype=float)
        c2 = np.asarray(self.sellmeier_c_um2, dtype=float)
        if b.shape != c2.shape:
            raise ValueError("sellmeier_B and sellmeier_C_um2 must pair up")
        if not (0.0 < self.uniform_intensity_transmission <= 1.0):
            raise ValueError("uniform transmission must be in (0, 1]")
        b.setflags(write=False)
        c2.setflags(write=False)
        object.__setattr__(self, "sellmeier_b", b)
        object.__setattr__(self, "sellmeier_c_um2", c2)
        if self.absorption is not None:
            tab = np.asarray(self.absorption, dtype=float)
            if tab.ndim != 2 or tab.shape[1] != 2 or np.any(tab[:, 1] < 0):
                raise ValueError("absorption table must be (wavelength_nm, alpha_per_cm>=0) rows")
            tab = tab[np.argsort(tab[:, 0])]
            tab.setflags(write=False)
            object.__setattr__(self, "absorption", tab)


def refractive_index(mat: MaterialDispersion, wavelength):
    """Sellmeier index n(lambda); wavelength in meters, scalar or array."""
    lam = np.asarray(wavelength, dtype=float)
    lo, hi = mat.range_m
    if np.any(lam < lo) or np.any(lam > hi):
        raise ValueError(
            f"wavelength outside {mat.name} validity "
            f"[{lo * 1e9:.1f}, {hi * 1e9:.1f}] nm: {np.min(lam) * 1e9:.1f} nm "
            "(the ladder extends beyond the material data)"
        )
    lam2 = (lam * 1e6) ** 2
    n2 = 1.0 + np.sum(
        mat.sellmeier_b * lam2[..., None] / (lam2[..., None] - mat.sellmeier_c_um2),
        axis=-1,
    )
    n = np.sqrt(n2)
    return float(n) if np.ndim(wavelength) == 0 else n


def amplitude_transmission(mat: MaterialDispersion, wavelength, thickness: float):
    """Per-order amplitude factor of one plate.

    With a tabulated absorption curve: exp(-alpha(lambda) * d / 2).  Without
    one, the per-plate uniform intensity transmission applies regardless of
    thickness (an aggregate stand-in when spectral data are unavailable).
    """
    lam = np.asarray(wavelength, dtype=float)
    if mat.absorption is not None:
        alpha_per_m = np.interp(lam * 1e9, mat.absorption[:, 0], mat.absorption[:, 1]) * 100.0
        return np.exp(-0.5 * alpha_per_m * thickness)
    return np.full(lam.shape, np.sqrt(mat.uniform_intensity_transmission))


@dataclass(frozen=True)
class Plate:
    """One plate: position, thickness, and the index curve per beam series."""

    position: float   # m
    thickness: float  # m
    curves: Mapping[str, MaterialDispersion]
    material_name: str = ""
    probe_axis: str = "ordinary"

    def __post_init__(self):
        if self.thickness <= 0:
            raise ValueError("plate thickness must be positive")
        if self.position < 0:
            raise ValueError("plate position must be non-negative")
        object.__setattr__(self, "curves", dict(self.curves))
        if not self.material_name and self.curves:
            object.__setattr__(
                self, "material_name",
                next(iter(self.curves.values())).name)

    def curve(self, series: str) -> MaterialDispersion:
        try:
            return self.curves[series]
        except KeyError:
            raise ConfigError(f"plate has no index curve for series {series!r}") from None

    def with_geometry(self, position=None, thickness=None) -> "Plate":
        return Plate(
            self.position if position is None else position,
            self.thickness if thickness is None else thickness,
            self.curves,
            self.material_name,
            self.probe_axis,
        )


@dataclass(frozen=True)
class PlateStack:
    """Plates ordered by strictly increasing position."""

    plates: tuple[Plate, ...]

    def __post_init__(self):
        plates = tuple(self.plates)
        pos = [p.position for p in plates]
        if any(b <= a for a, b in zip(pos, pos[1:])):
            raise ValueError("plate positions must be strictly increasing")
        object.__setattr__(self, "plates", plates)

    def __len__(self):
        return len(self.plates)

    def __iter__(self):
        return iter(self.plates)

    def upto(self, xi: float) -> "PlateStack":
        return PlateStack(tuple(p for p in self.plates if p.position <= xi))

    def with_thicknesses(self, thicknesses) -> "PlateStack":
        if len(thicknesses) != len(self.plates):
            raise ValueError("one thickness per plate required")
        return PlateStack(tuple(
            p.with_geometry(thickness=float(t))
            for p, t in zip(self.plates, thicknesses)
        ))

    def with_positions(self, positions) -> "PlateStack":
        if len(positions) != len(self.plates):
            raise ValueError("one position per plate required")
        plates = [p.with_geometry(position=float(x))
                  for p, x in zip(self.plates, positions)]
        return PlateStack(tuple(sorted(plates, key=lambda p: p.position)))


def apply_plate(fs: FieldState, plate: Plate, series: str = PROBE):
    """Retard and attenuate every order; returns the new state and the loss.

    Phase per order: 2*pi*n(lambda_q)*d/lambda_q.  The loss record holds the
    photon density removed per order (summed over the tau grid), so
    photons_before = photons_after + loss exactly.
    """
    from .propagation import LossRecord, _photon_weights

    mat = plate.curve(series)
    lam = fs.ladder.wavelengths
    n = refractive_index(mat, lam)
    phase = 2.0 * np.pi * n * plate.thickness / lam
    trans = amplitude_transmission(mat, lam, plate.thickness)
    weights = _photon_weights(fs.ladder)[:, None]
    before = np.sum(weights * np.abs(fs.amplitudes) ** 2, axis=1)
    out = fs.amplitudes * (trans * np.exp(1j * phase))[:, None]
    after = np.sum(weights * np.abs(out) ** 2, axis=1)
    record = LossRecord(
        position=plate.position,
        label=f"{plate.material_name or mat.name}@{plate.position:.4g}m",
        per_order=before - after,
    )
    return fs.with_amplitudes(out), record


def plate_phases(plate: Plate, ladder: ModeLadder, series: str = PROBE) -> np.ndarray:
    """Raw per-order phase retardation of one plate (not wrapped)."""
    lam = ladder.wavelengths
    n = refractive_index(plate.curve(series), lam)
    return 2.0 * np.pi * n * plate.thickness / lam


def relative_phase_map(stack: PlateStack, ladder: ModeLadder,
                       series: str = PROBE, upto: float | None = None) -> np.ndarray:
    """Accumulated adjacent-pair phase shifts of the stack, in (-pi, pi].

    Entry p is the total plate contribution to phi_{p+1} - phi_p for the
    pair (orders[p], orders[p+1]), summed over plates at position <= upto.
    """
    plates = stack.plates if upto is None else stack.upto(upto).plates
    total = np.zeros(max(ladder.n_modes - 1, 0))
    for plate in plates:
        phases = plate_phases(plate, ladder, series)
        total += phases[1:] - phases[:-1]
    return wrap_phase(total)


# --- material and stack files ---------------------------------------------


def _material_from_dict(doc: dict, name_hint: str = "") -> MaterialDispersion:
    try:
        rng = doc["range_nm"]
        return MaterialDispersion(
            name=doc.get("name", name_hint),
            sellmeier_b=doc["sellmeier_B"],
            sellmeier_c_um2=doc["sellmeier_C_um2"],
            range_m=(float(rng[0]) * 1e-9, float(rng[1]) * 1e-9),
            absorption=doc.get("absorption_table"),
            uniform_intensity_transmission=float(
                doc.get("uniform_intensity_transmission", 1.0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad material definition ({name_hint or '?'}): {exc}") from exc


def load_material(path) -> MaterialDispersion:
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    return _material_from_dict(doc, name_hint=str(path))


def builtin_materials() -> dict[str, dict[str, MaterialDispersion]]:
    """Registry {family: {axis: curve}} of the shipped material data."""
    registry: dict[str, dict[str, MaterialDispersion]] = {}
    pkg = resources.files("ramanflow") / "data"
    for entry in sorted(pkg.iterdir(), key=lambda e: e.name):
        if not entry.name.endswith(".yaml"):
            continue
        doc = yaml.safe_load(entry.read_text())
        mat = _material_from_dict(doc, name_hint=entry.name)
        family = doc.get("family", mat.name)
        axis = doc.get("axis", "isotropic")
        registry.setdefault(family, {})[axis] = mat
    return registry


def _other_axis(axis: str) -> str:
    return {"ordinary": "extraordinary", "extraordinary": "ordinary"}.get(axis, axis)


def _resolve_curves(family: str, probe_axis: str,
                    materials: Mapping[str, Mapping[str, MaterialDispersion]]):
    try:
        axes = materials[family]
    except KeyError:
        raise ConfigError(f"unknown material {family!r}") from None
    if probe_axis not in axes:
        raise ConfigError(f"material {family!r} has no axis {probe_axis!r}")
    driving_axis = _other_axis(probe_axis)
    return {
        PROBE: axes[probe_axis],
        DRIVING: axes.get(driving_axis, axes[probe_axis]),
    }


def make_plate(position_m: float, thickness_m: float, family: str = "mgf2",
               probe_axis: str = "ordinary",
               materials=None) -> Plate:
    """Build a plate whose probe sees ``probe_axis``; the orthogonally
    polarized driving beams see the other axis of the same material."""
    materials = builtin_materials() if materials is None else materials
    curves = _resolve_curves(family, probe_axis, materials)
    return Plate(position_m, thickness_m, curves,
                 material_name=family, probe_axis=probe_axis)


def load_stack(path, materials=None) -> PlateStack:
    """Read a plate-stack CSV: position_cm, thickness_um, material, axis."""
    materials = builtin_materials() if materials is None else materials
    plates = []
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        expected = ["position_cm", "thickness_um", "material", "axis"]
        if [h.strip() for h in header] != expected:
            raise ConfigError(f"{path}: expected header {','.join(expected)}")
        for line in fh:
            if not line.strip():
                continue
            pos_cm, th_um, family, axis = [tok.strip() for tok in line.split(",")]
            plates.append(make_plate(
                float(pos_cm) * 1e-2, float(th_um) * 1e-6, family, axis, materials))
    return PlateStack(tuple(plates))


def save_stack(stack: PlateStack, path) -> None:
    with open(path, "w") as fh:
        fh.write("position_cm,thickness_um,material,axis\n")
        for p in stack:
            fh.write(f"{p.position * 1e2:.12g},{p.thickness * 1e6:.12g},"
                     f"{p.material_name},{p.probe_axis}\n")
