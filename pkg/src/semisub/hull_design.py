"""Parametric three-column semi-submersible hull design.

Two free variables (column spacing ``d`` and heave plate height ``h_hp``)
fix the hull shape up to the draft.  The draft is found by root-finding so
that the hydrostatic pitch restoring matches a target; masses, ballast,
hydrostatics and a material cost follow from the resolved shape.

Units: lengths in m, masses in t (metric tonnes) unless a name says ``_kg``.
Elevations are referenced to the still water level (SWL), positive up.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .constants import G, RHO_WATER
from .turbine import TurbineConfig

log = logging.getLogger(__name__)

RADIUS_FRACTION = 0.52
MAX_DRAFT = 80.0
C55_TARGET = 2.255e9
FAIRLEAD_Z = 8.7
FAIRLEAD_RADIUS = 26.0

# Steel tripod endpoints: column spacing [m] -> strut width/height [m],
# wall thickness [mm], mass [t]
TRIPOD_TABLE = {
    "d": (10.0, 35.0),
    "width": (5.0, 7.0),
    "thickness_mm": (50.0, 60.0),
    "mass": (447.0, 1716.0),
}


class DesignInfeasible(ValueError):
    """A hull shape cannot satisfy the structural or hydrostatic constraints."""


@dataclass(frozen=True)
class ShapeParams:
    d: float
    h_hp: float
    r_hp_in_ratio: float = 2.0

    def __post_init__(self):
        if not self.d > 0:
            raise ValueError(f"column spacing must be positive, got {self.d}")
        if not self.h_hp > 0:
            raise ValueError(f"heave plate height must be positive, got {self.h_hp}")
        if not self.r_hp_in_ratio > 1:
            raise ValueError("heave plate radius ratio must exceed 1")


@dataclass(frozen=True)
class MaterialProps:
    rho_concrete: float = 2750.0
    rho_steel: float = 7750.0
    rho_ballast: float = 2500.0
    cost_steel: float = 4500.0      # EUR/t processed
    cost_concrete: float = 399.0    # EUR/t processed
    wall_thickness: float = 0.6
    lid_thickness: float = 0.4

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not value > 0:
                raise ValueError(f"{name} must be strictly positive")


@dataclass(frozen=True)
class HullShape:
    params: ShapeParams
    r: float
    r_hp: float
    t: float
    freeboard: float = 10.0

    @property
    def d(self) -> float:
        return self.params.d

    @property
    def h_hp(self) -> float:
        return self.params.h_hp

    @property
    def column_xy(self) -> np.ndarray:
        """Plan-view column centres; column 0 sits on the downwind x-axis."""
        ang = np.deg2rad([0.0, 120.0, 240.0])
        return self.d * np.column_stack([np.cos(ang), np.sin(ang)])

    @property
    def z_keel(self) -> float:
        return -self.t

    @property
    def z_plate_top(self) -> float:
        return -self.t + self.h_hp


def heave_plate_ratio(r_hp_in_ratio: float, r_max_ratio: float = 1 / RADIUS_FRACTION) -> float:
    """Saturated heave-plate-to-column radius ratio.

    Approaches ``r_hp_in_ratio`` when neighbouring plates are far apart and
    saturates at ``r_max_ratio`` (plates touching) otherwise.
    """
    span = r_max_ratio - 1.0
    return 1.0 + span * (1.0 - math.exp(-(r_hp_in_ratio - 1.0) / span))


def derive_geometry(params: ShapeParams, t: float, freeboard: float = 10.0,
                    max_draft: float = MAX_DRAFT) -> HullShape:
    if not (params.h_hp <= t <= max_draft):
        raise DesignInfeasible(
            f"draft {t:.3f} m outside [{params.h_hp}, {max_draft}] m")
    r_max = params.d * math.sqrt(3.0) / 2.0
    r = RADIUS_FRACTION * r_max
    r_hp = heave_plate_ratio(params.r_hp_in_ratio) * r
    return HullShape(params=params, r=r, r_hp=r_hp, t=t, freeboard=freeboard)


def tripod_properties(d: float) -> dict:
    """Strut width/height [m], wall thickness [mm] and mass [t] of the steel tripod."""
    d0, d1 = TRIPOD_TABLE["d"]
    if not (d0 <= d <= d1):
        raise ValueError(f"column spacing {d} m outside tripod table range [{d0}, {d1}]")
    s = (d - d0) / (d1 - d0)
    out = {k: v[0] + s * (v[1] - v[0]) for k, v in TRIPOD_TABLE.items() if k != "d"}
    out["height"] = out["width"]
    return out


@dataclass(frozen=True)
class MassItem:
    """Mass [t], CM elevation [m] and pitch inertia about its own CM [t m^2].

    The inertia includes the plan-view spread of the three-column pattern.
    """

    mass: float
    z: float
    inertia: float = 0.0


@dataclass(frozen=True)
class MassBreakdown:
    columns: MassItem
    heave_plates: MassItem
    tripod: MassItem
    tower: MassItem
    rna: MassItem
    ballast: MassItem = MassItem(0.0, 0.0, 0.0)
    ballast_fill_height: float = 0.0

    def items(self) -> dict[str, MassItem]:
        return {"columns": self.columns, "heave_plates": self.heave_plates,
                "tripod": self.tripod, "tower": self.tower, "rna": self.rna,
                "ballast": self.ballast}

    def platform_items(self) -> dict[str, MassItem]:
        items = self.items()
        del items["tower"], items["rna"]
        return items

    @staticmethod
    def _combine(items) -> MassItem:
        m = sum(i.mass for i in items)
        if m == 0:
            return MassItem(0.0, 0.0, 0.0)
        z = sum(i.mass * i.z for i in items) / m
        inertia = sum(i.inertia + i.mass * (i.z - z) ** 2 for i in items)
        return MassItem(m, z, inertia)

    @property
    def platform(self) -> MassItem:
        """Floater including ballast, excluding tower and RNA."""
        return self._combine(self.platform_items().values())

    @property
    def total(self) -> MassItem:
        return self._combine(self.items().values())

    @property
    def m(self) -> float:
        return self.platform.mass

    @property
    def z_cm(self) -> float:
        return self.total.z


def _cylinder_shell(r_out, thickness, length):
    r_in = r_out - thickness
    vol = math.pi * (r_out ** 2 - r_in ** 2) * length
    # transverse inertia per unit mass about own centroid
    k2 = (r_out ** 2 + r_in ** 2) / 4 + length ** 2 / 12
    return vol, k2


def structural_mass(shape: HullShape, mat: MaterialProps = MaterialProps(),
                    turbine: TurbineConfig | None = None) -> MassBreakdown:
    """Mass breakdown of the hull (without ballast) plus tower and RNA."""
    turbine = turbine or TurbineConfig()
    w, lid = mat.wall_thickness, mat.lid_thickness
    if w >= shape.r:
        raise DesignInfeasible(f"wall thickness {w} m >= column radius {shape.r:.2f} m")
    spread = 0.5 * shape.d ** 2  # sum(x_i^2)/3 per unit mass over the three columns

    # hollow columns from plate top to freeboard
    col_len = shape.freeboard - shape.z_plate_top
    vol, k2 = _cylinder_shell(shape.r, w, col_len)
    m_col = 3 * vol * mat.rho_concrete / 1e3
    columns = MassItem(m_col, shape.z_plate_top + col_len / 2, m_col * (k2 + spread))

    # heave plate: annular concrete ring around the column foot.  Full-disc
    # bottom lid (also the column floor), annular top lid, outer wall, and
    # the column wall continued down to the keel.
    h, R, r = shape.h_hp, shape.r_hp, shape.r
    lid_bot = min(lid, h)
    lid_top = min(lid, h - lid_bot)
    v_bot = math.pi * R ** 2 * lid_bot
    v_top = math.pi * (R ** 2 - r ** 2) * lid_top
    v_outer = math.pi * (R ** 2 - max(R - w, r) ** 2) * (h - lid_bot - lid_top)
    v_inner = math.pi * (r ** 2 - (r - w) ** 2) * (h - lid_bot)
    m_hp = 3 * (v_bot + v_top + v_outer + v_inner) * mat.rho_concrete / 1e3
    k2_hp = R ** 2 / 4 + h ** 2 / 12
    heave_plates = MassItem(m_hp, shape.z_keel + h / 2, m_hp * (k2_hp + spread))

    trip = tripod_properties(shape.d)
    m_tri = trip["mass"]
    tripod = MassItem(m_tri, shape.freeboard + trip["height"] / 2,
                      m_tri * (shape.d ** 2 / 6 + trip["height"] ** 2 / 12))

    tower = MassItem(turbine.tower_mass, turbine.tower_cm_z, turbine.tower_inertia)
    rna = MassItem(turbine.rna_mass, turbine.hub_height, turbine.rna_inertia)
    return MassBreakdown(columns, heave_plates, tripod, tower, rna)


def displaced_volume(shape: HullShape) -> tuple[float, float]:
    """Submerged volume [m^3] and centre of buoyancy [m]."""
    v_col = math.pi * shape.r ** 2 * (shape.t - shape.h_hp)
    v_hp = math.pi * shape.r_hp ** 2 * shape.h_hp
    z_col = shape.z_plate_top / 2
    z_hp = shape.z_keel + shape.h_hp / 2
    vol = 3 * (v_col + v_hp)
    z_b = 3 * (v_col * z_col + v_hp * z_hp) / vol
    return vol, z_b


def solve_ballast(shape: HullShape, mass: MassBreakdown, mooring_vertical_load: float = 0.0,
                  mat: MaterialProps = MaterialProps(), allow_negative: bool = False) -> MassBreakdown:
    """Fill the columns with ballast so that buoyancy carries all weight.

    ``mooring_vertical_load`` [N] is the static downward pull of the mooring
    system at the fairleads.  Ballast is split equally between the three
    columns and filled upwards from the column floor just above the keel.
    """
    vol, _ = displaced_volume(shape)
    other = sum(i.mass for k, i in mass.items().items() if k != "ballast")
    m_b = RHO_WATER * vol / 1e3 - other - mooring_vertical_load / G / 1e3
    if m_b < 0 and not allow_negative:
        raise DesignInfeasible(f"negative ballast {m_b:.1f} t at draft {shape.t:.2f} m")
    r_in = shape.r - mat.wall_thickness
    floor = shape.z_keel + min(mat.lid_thickness, shape.h_hp)
    area = math.pi * r_in ** 2
    fill = m_b * 1e3 / (3 * mat.rho_ballast * area)
    capacity = shape.freeboard - floor
    if fill > capacity and not allow_negative:
        raise DesignInfeasible(f"ballast fill {fill:.2f} m exceeds column height {capacity:.2f} m")
    k2 = r_in ** 2 / 4 + fill ** 2 / 12
    ballast = MassItem(m_b, floor + fill / 2, m_b * (k2 + 0.5 * shape.d ** 2))
    return MassBreakdown(mass.columns, mass.heave_plates, mass.tripod, mass.tower, mass.rna,
                         ballast, fill)


@dataclass(frozen=True)
class Hydrostatics:
    volume: float
    z_b: float
    a_wp: float
    i_wp: float
    gm: float
    c33: float
    c55: float


def hydrostatics(shape: HullShape, mass: MassBreakdown, rho: float = RHO_WATER,
                 g: float = G, check: bool = True) -> Hydrostatics:
    vol, z_b = displaced_volume(shape)
    a_wp = 3 * math.pi * shape.r ** 2
    i_wp = 3 * math.pi * shape.r ** 4 / 4 + 1.5 * math.pi * shape.r ** 2 * shape.d ** 2
    gm = z_b + i_wp / vol - mass.z_cm
    if check and gm <= 0:
        raise DesignInfeasible(f"unstable design, GM = {gm:.3f} m")
    return Hydrostatics(vol, z_b, a_wp, i_wp, gm, rho * g * a_wp, rho * g * vol * gm)


def estimate_cost(mass: MassBreakdown, mat: MaterialProps = MaterialProps()) -> float:
    """Processed-material cost [EUR]: steel tripod plus concrete columns and plates."""
    return (mat.cost_steel * mass.tripod.mass
            + mat.cost_concrete * (mass.columns.mass + mass.heave_plates.mass))


@dataclass(frozen=True)
class Design:
    shape: HullShape
    mass: MassBreakdown
    hydrostatics: Hydrostatics
    cost: float
    fairlead_z: float = FAIRLEAD_Z
    fairlead_radius: float = FAIRLEAD_RADIUS
    label: str = field(default="")

    @property
    def key(self) -> str:
        return f"d{self.shape.d:g}_h{self.shape.h_hp:g}"

    def to_record(self) -> dict:
        s, m, h = self.shape, self.mass, self.hydrostatics
        return {
            "d": s.d, "h_hp": s.h_hp, "r_hp_in_ratio": s.params.r_hp_in_ratio,
            "r": s.r, "r_hp": s.r_hp, "t": s.t, "freeboard": s.freeboard,
            "masses_t": {k: asdict(v) for k, v in m.items().items()},
            "ballast_fill_height": m.ballast_fill_height,
            "platform_mass_t": m.m, "platform_z_cm": m.platform.z,
            "platform_inertia_t_m2": m.platform.inertia,
            "system_z_cm": m.z_cm,
            "hydrostatics": asdict(h),
            "fairlead_z": self.fairlead_z, "fairlead_radius": self.fairlead_radius,
            "cost_eur": self.cost,
        }


@dataclass(frozen=True)
class DesignSettings:
    """Everything besides the two free variables that a design depends on."""

    material: MaterialProps = MaterialProps()
    turbine: TurbineConfig = field(default_factory=TurbineConfig)
    freeboard: float = 10.0
    max_draft: float = MAX_DRAFT
    mooring_vertical_load: float | None = None   # None -> from the default mooring
    include_mooring_load: bool = True
    draft_tol: float = 1e-3


def _mooring_load(settings: DesignSettings) -> float:
    if not settings.include_mooring_load:
        return 0.0
    if settings.mooring_vertical_load is not None:
        return settings.mooring_vertical_load
    from .mooring import MooringSystem
    return MooringSystem.default().static_vertical_load()


def evaluate_draft(params: ShapeParams, t: float, settings: DesignSettings = DesignSettings(),
                   strict: bool = False) -> Design:
    """Resolve masses, ballast and hydrostatics at a given draft."""
    shape = derive_geometry(params, t, settings.freeboard, settings.max_draft)
    mass = structural_mass(shape, settings.material, settings.turbine)
    mass = solve_ballast(shape, mass, _mooring_load(settings), settings.material,
                         allow_negative=not strict)
    hst = hydrostatics(shape, mass, check=strict)
    return Design(shape, mass, hst, estimate_cost(mass, settings.material))


def c55_at_draft(params: ShapeParams, t: float, settings: DesignSettings = DesignSettings()) -> float:
    return evaluate_draft(params, t, settings).hydrostatics.c55


def solve_draft_for_C55(params: ShapeParams, c55_target: float = C55_TARGET,
                        settings: DesignSettings = DesignSettings()) -> Design:
    """Bisection on the draft so that C55 meets the target."""
    if not c55_target > 0:
        raise ValueError("C55 target must be positive")
    lo, hi = params.h_hp + 1.0, settings.max_draft
    if lo >= hi:
        raise DesignInfeasible("heave plate too high for the draft range")
    f_lo = c55_at_draft(params, lo, settings) - c55_target
    f_hi = c55_at_draft(params, hi, settings) - c55_target
    if np.sign(f_lo) == np.sign(f_hi):
        raise DesignInfeasible(
            f"C55 target not bracketed for d={params.d}, h_hp={params.h_hp} "
            f"(C55 in [{f_lo + c55_target:.3e}, {f_hi + c55_target:.3e}])")
    while hi - lo > settings.draft_tol:
        mid = 0.5 * (lo + hi)
        f_mid = c55_at_draft(params, mid, settings) - c55_target
        if np.sign(f_mid) == np.sign(f_lo):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    t = 0.5 * (lo + hi)
    design = evaluate_draft(params, t, settings, strict=True)
    err = abs(design.hydrostatics.c55 - c55_target) / c55_target
    if err > 1e-3:
        raise DesignInfeasible(f"C55 residual {err:.2e} above tolerance")
    return design


def build_design_space(d_values=np.arange(15.0, 24.5, 1.0), h_values=(1.0, 4.5, 8.0),
                       c55_target: float = C55_TARGET,
                       settings: DesignSettings = DesignSettings()) -> list[Design]:
    """All feasible designs of the Cartesian (d, h_hp) grid."""
    designs = []
    for h in h_values:
        for d in d_values:
            try:
                designs.append(solve_draft_for_C55(ShapeParams(float(d), float(h)),
                                                   c55_target, settings))
            except DesignInfeasible as exc:
                log.warning("design d=%g h_hp=%g excluded: %s", d, h, exc)
    return designs
