"""Wind turbine configuration (DTU 10 MW reference turbine defaults).

Tower and RNA properties are inputs; the tower is not redesigned per hull.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .constants import RHO_AIR
from .rotor import RotorTables, default_rotor_tables

RPM = 2 * np.pi / 60


@dataclass(frozen=True)
class TurbineConfig:
    rated_power: float = 10.0e6             # electrical [W]
    gen_efficiency: float = 0.94
    rated_rotor_speed: float = 9.6 * RPM    # [rad/s]
    min_rotor_speed: float = 6.0 * RPM
    rotor_radius: float = 89.17
    hub_height: float = 119.0
    tower_base_z: float = 16.0
    tower_top_z: float = 115.63
    tower_mass: float = 628.4               # [t]
    rna_mass: float = 674.0                 # [t]
    rna_inertia: float = 0.0                # pitch inertia about own CM [t m^2]
    drivetrain_inertia: float = 1.60e8      # low-speed-shaft equivalent [kg m^2]
    actuator_time_constant: float = 0.3     # [s]
    min_pitch: float = 0.0                  # [rad]
    max_pitch: float = np.deg2rad(40.0)
    tower_fixed_base_freq: float = 0.40     # [Hz], first fore-aft, clamped base with RNA
    tower_damping_ratio: float = 0.01
    cut_in: float = 4.0
    cut_out: float = 25.0
    rho_air: float = RHO_AIR
    ct_scale: float = 1.0

    def __post_init__(self):
        if not self.actuator_time_constant > 0:
            raise ValueError("actuator time constant must be positive")
        if not self.tower_top_z > self.tower_base_z:
            raise ValueError("tower top must lie above tower base")

    @property
    def rotor_area(self) -> float:
        return np.pi * self.rotor_radius ** 2

    @property
    def rotor_diameter(self) -> float:
        return 2 * self.rotor_radius

    @property
    def tower_length(self) -> float:
        return self.tower_top_z - self.tower_base_z

    @property
    def tower_cm_z(self) -> float:
        z, m = self.tower_stations()
        return float(np.sum(z * m) / np.sum(m))

    @property
    def tower_inertia(self) -> float:
        """Pitch inertia of the tower about its own CM [t m^2]."""
        z, m = self.tower_stations()
        return float(np.sum(m * (z - self.tower_cm_z) ** 2)) / 1e3

    @property
    def rated_mech_power(self) -> float:
        return self.rated_power / self.gen_efficiency

    @property
    def rated_torque(self) -> float:
        """Low-speed-shaft generator torque at rated [Nm]."""
        return self.rated_mech_power / self.rated_rotor_speed

    @cached_property
    def rotor(self) -> RotorTables:
        return default_rotor_tables(self.rotor_radius, self.ct_scale)

    # tower fore-aft mode ---------------------------------------------------
    def mode_shape(self, z):
        """Normalised first fore-aft mode shape; zero below the tower base."""
        s = np.clip((np.asarray(z, float) - self.tower_base_z) / self.tower_length, 0.0, None)
        return np.where(s > 0, s ** 2 * (3 - s) / 2, 0.0)

    def mode_slope(self, z):
        s = np.clip((np.asarray(z, float) - self.tower_base_z) / self.tower_length, 0.0, None)
        return np.where(s > 0, 3 * s * (2 - s) / 2, 0.0) / self.tower_length

    def tower_stations(self, n: int = 40):
        """Lumped tower masses [kg] at station elevations [m] (linear taper, base 1.6x top)."""
        edges = np.linspace(self.tower_base_z, self.tower_top_z, n + 1)
        z = 0.5 * (edges[1:] + edges[:-1])
        s = (z - self.tower_base_z) / self.tower_length
        mu = 1.6 - 0.6 * s
        m = mu / mu.sum() * self.tower_mass * 1e3
        return z, m

    @property
    def tower_modal_mass(self) -> float:
        z, m = self.tower_stations()
        return float(np.sum(m * self.mode_shape(z) ** 2) + self.rna_mass * 1e3)

    @property
    def tower_modal_stiffness(self) -> float:
        """Generalised stiffness of the fore-aft mode [N/m], incl. gravity softening."""
        return self.tower_modal_mass * (2 * np.pi * self.tower_fixed_base_freq) ** 2

    @property
    def tower_base_moment_per_deflection(self) -> float:
        """Elastic tower-base bending moment per unit tower-top deflection [Nm/m]."""
        # static tip-load shape: base moment = tip force * length
        return self.tower_modal_stiffness * self.tower_length
