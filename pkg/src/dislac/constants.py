"""Physical constants shared across modules (SI unless the name says otherwise)."""

SPEED_OF_LIGHT = 299_792_458.0  # m/s, exact
SPEED_OF_LIGHT_KM_S = SPEED_OF_LIGHT / 1e3
EARTH_RADIUS_KM = 6371.0
BOLTZMANN = 1.380649e-23  # J/K
