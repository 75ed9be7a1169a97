"""Dispersion and orientation geometry of uniaxial birefringent crystals.

Wavelengths are in nm and angles in degrees at every public function;
Sellmeier coefficients refer to wavelengths in µm. Stage rotations are
right-handed about the labelled lab axes, with the pump along +z.
"""

from __future__ import annotations

import enum
import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

THETA0_DEG = 42.7
PHI0_DEG = 0.0


class WavelengthRangeError(ValueError):
    """Wavelength outside the dispersion model's validity range."""


class AngleRangeError(ValueError):
    pass


@dataclass(frozen=True)
class SellmeierSet:
    """Coefficients of ``n^2 = A + B / (l^2 - C) - D l^2`` with ``l`` in µm."""

    A: float
    B: float
    C: float
    D: float

    def n_squared(self, lambda_um):
        l2 = np.square(lambda_um)
        return self.A + self.B / (l2 - self.C) - self.D * l2

    def index(self, lambda_um):
        return np.sqrt(self.n_squared(lambda_um))


@dataclass(frozen=True)
class UniaxialCrystal:
    name: str
    ordinary: SellmeierSet
    extraordinary: SellmeierSet
    validity_range: tuple[float, float]
    length_mm: float | None = None
    source_sha256: str | None = field(default=None, compare=False)

    def check_wavelength(self, lambda_nm) -> None:
        """Raise :class:`WavelengthRangeError` naming the violated bound."""
        lam = np.asarray(lambda_nm, dtype=float)
        lo, hi = self.validity_range
        if np.any(np.isnan(lam)):
            raise WavelengthRangeError("wavelength is NaN")
        if np.any(lam < lo):
            raise WavelengthRangeError(
                f"{float(np.min(lam)):g} nm is below the {self.name} validity minimum {lo:g} nm"
            )
        if np.any(lam > hi):
            raise WavelengthRangeError(
                f"{float(np.max(lam)):g} nm is above the {self.name} validity maximum {hi:g} nm"
            )
        l2 = np.square(lam / 1000.0)
        for label, s in (("ordinary", self.ordinary), ("extraordinary", self.extraordinary)):
            if np.any(l2 <= s.C):
                raise WavelengthRangeError(
                    f"{label} Sellmeier pole: lambda^2 must exceed C = {s.C:g} um^2"
                )

    def is_negative_uniaxial(self, samples: int = 200) -> bool:
        lam = np.linspace(*self.validity_range, samples)
        return bool(np.all(principal_extraordinary_index(self, lam) < ordinary_index(self, lam)))


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _sellmeier_from_json(d: dict) -> SellmeierSet:
    return SellmeierSet(A=float(d["A"]), B=float(d["B"]), C=float(d["C_um2"]), D=float(d["D_per_um2"]))


def crystal_from_dict(d: dict, sha256: str | None = None) -> UniaxialCrystal:
    lo, hi = d["validity_range_nm"]
    if not lo < hi:
        raise ValueError("validity_range_nm must be increasing")
    return UniaxialCrystal(
        name=str(d["name"]),
        ordinary=_sellmeier_from_json(d["ordinary"]),
        extraordinary=_sellmeier_from_json(d["extraordinary"]),
        validity_range=(float(lo), float(hi)),
        length_mm=d.get("length_mm"),
        source_sha256=sha256,
    )


def crystal_to_dict(crystal: UniaxialCrystal) -> dict:
    def s(c: SellmeierSet):
        return {"A": c.A, "B": c.B, "C_um2": c.C, "D_per_um2": c.D}

    d = {
        "name": crystal.name,
        "validity_range_nm": list(crystal.validity_range),
        "ordinary": s(crystal.ordinary),
        "extraordinary": s(crystal.extraordinary),
    }
    if crystal.length_mm is not None:
        d["length_mm"] = crystal.length_mm
    return d


def shipped_crystals() -> list[str]:
    root = resources.files("spdckit") / "data" / "crystals"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_crystal(name_or_path: str | Path = "bbo") -> UniaxialCrystal:
    """Load a crystal definition by shipped name (e.g. ``"bbo"``) or JSON path."""
    p = Path(name_or_path)
    if p.suffix == ".json" or p.exists():
        raw = p.read_bytes()
    else:
        res = resources.files("spdckit") / "data" / "crystals" / f"{str(name_or_path).lower()}.json"
        if not res.is_file():
            raise FileNotFoundError(
                f"unknown crystal {name_or_path!r}; shipped: {', '.join(shipped_crystals())}"
            )
        raw = res.read_bytes()
    return crystal_from_dict(json.loads(raw), sha256=_sha256(raw))


def ordinary_index(crystal: UniaxialCrystal, lambda_nm):
    """Ordinary refractive index n_o at ``lambda_nm``."""
    crystal.check_wavelength(lambda_nm)
    return crystal.ordinary.index(np.asarray(lambda_nm, dtype=float) / 1000.0)


def principal_extraordinary_index(crystal: UniaxialCrystal, lambda_nm):
    """Principal extraordinary index (propagation perpendicular to the optic axis)."""
    crystal.check_wavelength(lambda_nm)
    return crystal.extraordinary.index(np.asarray(lambda_nm, dtype=float) / 1000.0)


def extraordinary_index_at_angle(crystal: UniaxialCrystal, theta_eff_deg, lambda_nm):
    """Index of the extraordinary wave propagating at ``theta_eff_deg`` to the optic axis.

    Index-ellipsoid interpolation ``1/n^2 = sin^2/ne^2 + cos^2/no^2``.
    """
    th = np.asarray(theta_eff_deg, dtype=float)
    if np.any(th < 0.0) or np.any(th > 90.0) or np.any(np.isnan(th)):
        raise AngleRangeError(f"effective angle must lie in [0, 90] deg, got {theta_eff_deg}")
    no = ordinary_index(crystal, lambda_nm)
    ne = principal_extraordinary_index(crystal, lambda_nm)
    t = np.radians(th)
    return 1.0 / np.sqrt(np.sin(t) ** 2 / ne**2 + np.cos(t) ** 2 / no**2)


class RotationOrder(str, enum.Enum):
    XYZ = "XYZ"
    YXZ = "YXZ"


@dataclass(frozen=True)
class OrientationAngles:
    """Crystal stage orientation.

    ``theta`` and ``phi`` are total tilts (reference offsets included);
    :meth:`from_offsets` builds the angles from stage offsets relative to
    ``(theta0, phi0)``.
    """

    theta: float = THETA0_DEG
    phi: float = PHI0_DEG
    gamma: float = 0.0
    order: RotationOrder = RotationOrder.XYZ
    theta0: float = THETA0_DEG
    phi0: float = PHI0_DEG

    @classmethod
    def from_offsets(cls, d_theta: float = 0.0, d_phi: float = 0.0, gamma: float = 0.0,
                     order: RotationOrder | str = RotationOrder.XYZ,
                     theta0: float = THETA0_DEG, phi0: float = PHI0_DEG) -> "OrientationAngles":
        return cls(theta=theta0 + d_theta, phi=phi0 + d_phi, gamma=gamma,
                   order=RotationOrder(order), theta0=theta0, phi0=phi0)

    @property
    def theta_offset(self) -> float:
        return self.theta - self.theta0

    @property
    def phi_offset(self) -> float:
        return self.phi - self.phi0


def effective_angle_deg(theta_deg, phi_deg):
    """Angle between pump and optic axis: ``arccos(cos(theta) cos(phi))``, degrees."""
    c = np.cos(np.radians(theta_deg)) * np.cos(np.radians(phi_deg))
    return np.degrees(np.arccos(np.clip(c, -1.0, 1.0)))


def effective_angle(orientation: OrientationAngles) -> float:
    th, ph = orientation.theta, orientation.phi
    if not (-90.0 < th < 90.0 and -90.0 < ph < 90.0):
        raise AngleRangeError(f"theta and phi must lie in (-90, 90) deg, got ({th}, {ph})")
    return float(effective_angle_deg(th, ph))


def rotation_matrix(orientation: OrientationAngles) -> np.ndarray:
    """Composite stage rotation for the orientation's rotation order.

    XYZ composes ``Rz(gamma) @ Ry(phi) @ Rx(theta)``; YXZ composes
    ``Rz(gamma) @ Rx(theta) @ Ry(phi)``. Entries are written out explicitly.
    """
    t = math.radians(orientation.theta)
    p = math.radians(orientation.phi)
    g = math.radians(orientation.gamma)
    ct, st = math.cos(t), math.sin(t)
    cp, sp = math.cos(p), math.sin(p)
    cg, sg = math.cos(g), math.sin(g)
    order = RotationOrder(orientation.order)
    if order is RotationOrder.XYZ:
        m = [
            [cg * cp, -sg * ct + cg * sp * st, sg * st + cg * sp * ct],
            [sg * cp, cg * ct + sg * sp * st, -cg * st + sg * sp * ct],
            [-sp, cp * st, cp * ct],
        ]
    else:
        m = [
            [cg * cp - sg * st * sp, -sg * ct, cg * sp + sg * st * cp],
            [sg * cp + cg * st * sp, cg * ct, sg * sp - cg * st * cp],
            [-ct * sp, st, ct * cp],
        ]
    return np.array(m, dtype=float)


def optic_axis_direction(orientation: OrientationAngles) -> np.ndarray:
    """Unit optic-axis vector in the lab frame (initial axis along +z)."""
    v = rotation_matrix(orientation) @ np.array([0.0, 0.0, 1.0])
    return v / np.linalg.norm(v)
