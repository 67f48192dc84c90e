"""Physical constants (GPS interface-specification values)."""

SPEED_OF_LIGHT = 299792458.0  # m/s
GM_EARTH = 3.986005e14  # m^3/s^2
OMEGA_EARTH = 7.2921151467e-5  # rad/s
GPS_L1_FREQUENCY = 1575.42e6  # Hz
GPS_L1_WAVELENGTH = SPEED_OF_LIGHT / GPS_L1_FREQUENCY  # ~0.1903 m

SECONDS_PER_WEEK = 604800.0
HALF_WEEK = 302400.0

# WGS-84, only used to turn lat/lon/height into ECEF for configs
WGS84_A = 6378137.0
WGS84_F = 1.0 / 298.257223563

# 5G NR basic time unit 1 / (480 kHz * 4096), used as the default user clock cycle
NR_BASIC_TIME_UNIT = 1.0 / (480e3 * 4096)
