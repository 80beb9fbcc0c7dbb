"""Physical constants shared across modules (SI units)."""

RHO_WATER = 1025.0   # kg/m^3
RHO_AIR = 1.225      # kg/m^3
G = 9.81             # m/s^2
WATER_DEPTH = 130.0  # m
