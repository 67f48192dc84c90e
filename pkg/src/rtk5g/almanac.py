"""
GPS Yuma almanac parsing and Keplerian orbit propagation.

Yuma files are plain text: one block per satellite, each line ``key: value``,
blocks separated by blank lines (a ``******** Week ...`` banner usually opens
each block and is ignored).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path

import numpy as np

from .constants import GM_EARTH, HALF_WEEK, OMEGA_EARTH, SECONDS_PER_WEEK, WGS84_A, WGS84_F
from .errors import AlmanacParseError, DomainError, NumericalError


@dataclass(frozen=True)
class AlmanacEntry:
    prn: int
    health: int
    eccentricity: float
    time_of_applicability: float
    inclination: float
    rate_of_right_ascension: float
    sqrt_semi_major_axis: float
    raan_at_week_epoch: float
    argument_of_perigee: float
    mean_anomaly: float
    af0: float
    af1: float
    gps_week: int

    @property
    def semi_major_axis(self) -> float:
        return self.sqrt_semi_major_axis**2

    @property
    def mean_motion(self) -> float:
        return math.sqrt(GM_EARTH / self.semi_major_axis**3)

    @property
    def healthy(self) -> bool:
        return self.health == 0


# (normalized key prefix, field name, converter, Yuma label used by the emitter)
_KEYS = [
    ("id", "prn", int, "ID"),
    ("health", "health", int, "Health"),
    ("eccentricity", "eccentricity", float, "Eccentricity"),
    ("time of applicability", "time_of_applicability", float, "Time of Applicability(s)"),
    ("orbital inclination", "inclination", float, "Orbital Inclination(rad)"),
    ("rate of right ascen", "rate_of_right_ascension", float, "Rate of Right Ascen(r/s)"),
    ("sqrt(a)", "sqrt_semi_major_axis", float, "SQRT(A)  (m 1/2)"),
    ("right ascen at week", "raan_at_week_epoch", float, "Right Ascen at Week(rad)"),
    ("argument of perigee", "argument_of_perigee", float, "Argument of Perigee(rad)"),
    ("mean anom", "mean_anomaly", float, "Mean Anom(rad)"),
    ("af0", "af0", float, "Af0(s)"),
    ("af1", "af1", float, "Af1(s/s)"),
    ("week", "gps_week", int, "week"),
]
_FIELD_ORDER = [f.name for f in fields(AlmanacEntry)]


def _match_key(raw_key: str):
    key = " ".join(raw_key.lower().split())
    for prefix, name, conv, _ in _KEYS:
        if key.startswith(prefix):
            return name, conv
    return None, None


def _to_number(text: str, conv):
    # Yuma writers disagree on exponent spelling: E+000, e+00, E-001 ...
    value = float(text.strip())
    if conv is int:
        if not value.is_integer():
            raise ValueError(f"expected an integer, got {text.strip()!r}")
        return int(value)
    return value


def _split_blocks(text: str):
    block: list[tuple[int, str]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.strip():
            block.append((lineno, line))
        elif block:
            yield block
            block = []
    if block:
        yield block


def parse_yuma(text: str) -> list[AlmanacEntry]:
    """Parse Yuma almanac text into a list of entries (one per block).

    Unknown keys are ignored.  A block missing one of the 13 required keys, or
    holding an unparsable number, raises :class:`AlmanacParseError` naming the
    PRN (or block index when the PRN itself is unknown) and the line.
    """
    entries = []
    for index, block in enumerate(_split_blocks(text)):
        values: dict = {}
        pending_errors = []
        for lineno, line in block:
            if ":" not in line:
                continue  # banner line
            raw_key, _, raw_value = line.partition(":")
            name, conv = _match_key(raw_key)
            if name is None:
                continue
            try:
                values[name] = _to_number(raw_value, conv)
            except ValueError:
                pending_errors.append((lineno, line.strip()))
        if not values and not pending_errors:
            continue  # block made only of banners/comments
        who = f"PRN {values['prn']:02d}" if "prn" in values else f"block {index}"
        if pending_errors:
            lineno, line = pending_errors[0]
            raise AlmanacParseError(f"{who}: unparsable number on line {lineno}: {line!r}")
        missing = [name for name in _FIELD_ORDER if name not in values]
        if missing:
            first_line = block[0][0]
            raise AlmanacParseError(
                f"{who}: missing required key(s) {', '.join(missing)} "
                f"in block starting on line {first_line}"
            )
        if not 0.0 <= values["eccentricity"] < 1.0:
            raise AlmanacParseError(f"{who}: eccentricity {values['eccentricity']} outside [0, 1)")
        if not values["sqrt_semi_major_axis"] > 0.0:
            raise AlmanacParseError(f"{who}: SQRT(A) must be positive")
        entries.append(AlmanacEntry(**values))
    return entries


def load_yuma(path) -> list[AlmanacEntry]:
    return parse_yuma(Path(path).read_text())


def default_almanac_text() -> str:
    """Text of the nominal GPS almanac shipped with the package."""
    return resources.files("rtk5g.data").joinpath("gps_nominal_week2243.alm").read_text()


def format_yuma(entries) -> str:
    """Emit entries in Yuma layout; ``parse_yuma(format_yuma(e)) == e``."""
    out = []
    for e in entries:
        out.append(f"******** Week {e.gps_week % 1024} almanac for PRN-{e.prn:02d} ********")
        for _, name, conv, label in _KEYS:
            value = getattr(e, name)
            if conv is int:
                text = f"{value:03d}" if name == "health" else f"{value:02d}" if name == "prn" else str(value)
            else:
                text = repr(float(value))
            out.append(f"{label + ':':<28}{text}")
        out.append("")
    return "\n".join(out)


def solve_kepler(mean_anomaly: float, e: float, tol: float = 1e-12, max_iter: int = 30) -> float:
    """Eccentric anomaly E with ``E - e sin E = M`` by Newton's method from E0 = M."""
    if not 0.0 <= e < 1.0:
        raise DomainError(f"eccentricity must be in [0, 1), got {e}")
    M = float(mean_anomaly)
    E = M
    for _ in range(max_iter):
        f = E - e * math.sin(E) - M
        if abs(f) < tol:
            return E
        E -= f / (1.0 - e * math.cos(E))
    if abs(E - e * math.sin(E) - M) < tol:
        return E
    raise NumericalError(f"Kepler iteration did not converge for M={M}, e={e}")


def _week_delta(t: float, toa: float) -> float:
    dt = t - toa
    if dt > HALF_WEEK:
        dt -= SECONDS_PER_WEEK
    elif dt < -HALF_WEEK:
        dt += SECONDS_PER_WEEK
    return dt


def orbital_plane_position(entry: AlmanacEntry, t: float) -> np.ndarray:
    """Position (x', y') in the orbital plane, perigee along x' rotated by omega."""
    e = entry.eccentricity
    tk = _week_delta(t, entry.time_of_applicability)
    M = math.remainder(entry.mean_anomaly + entry.mean_motion * tk, 2.0 * math.pi)
    E = solve_kepler(M, e)
    nu = math.atan2(math.sqrt(1.0 - e * e) * math.sin(E), math.cos(E) - e)
    u = nu + entry.argument_of_perigee
    r = entry.semi_major_axis * (1.0 - e * math.cos(E))
    return np.array([r * math.cos(u), r * math.sin(u)])


def propagate(entry: AlmanacEntry, t: float) -> np.ndarray:
    """ECEF position [m] of the satellite at GPS seconds-of-week ``t``."""
    if not entry.healthy:
        raise DomainError(f"PRN {entry.prn:02d} is unhealthy (health={entry.health})")
    tk = _week_delta(t, entry.time_of_applicability)
    xp, yp = orbital_plane_position(entry, t)
    omega = (
        entry.raan_at_week_epoch
        + (entry.rate_of_right_ascension - OMEGA_EARTH) * tk
        - OMEGA_EARTH * entry.time_of_applicability
    )
    ci, si = math.cos(entry.inclination), math.sin(entry.inclination)
    co, so = math.cos(omega), math.sin(omega)
    return np.array([xp * co - yp * ci * so, xp * so + yp * ci * co, yp * si])


def propagate_all(entries, t: float):
    """Propagate every healthy entry; returns (prns, (n, 3) positions)."""
    healthy = [e for e in entries if e.healthy]
    if not healthy:
        return [], np.zeros((0, 3))
    return [e.prn for e in healthy], np.array([propagate(e, t) for e in healthy])


def elevations(sat_positions, receiver) -> np.ndarray:
    """Elevation [rad] above a spherical-Earth horizon at ``receiver``."""
    sats = np.atleast_2d(np.asarray(sat_positions, dtype=float))
    rx = np.asarray(receiver, dtype=float)
    if sats.size == 0:
        return np.zeros(0)
    up = rx / np.linalg.norm(rx)
    los = sats - rx
    return np.arcsin(np.clip(los @ up / np.linalg.norm(los, axis=1), -1.0, 1.0))


def visible_satellites(sat_positions, receiver, mask: float) -> list[int]:
    """Indices of satellites above ``mask`` [rad], highest elevation first."""
    el = elevations(sat_positions, receiver)
    idx = np.flatnonzero(el > mask)
    # stable sort keeps index order among equal elevations
    return [int(i) for i in idx[np.argsort(-el[idx], kind="stable")]]


def llh_to_ecef(lat_deg: float, lon_deg: float, height: float) -> np.ndarray:
    lat, lon = math.radians(lat_deg), math.radians(lon_deg)
    e2 = WGS84_F * (2.0 - WGS84_F)
    n = WGS84_A / math.sqrt(1.0 - e2 * math.sin(lat) ** 2)
    return np.array(
        [
            (n + height) * math.cos(lat) * math.cos(lon),
            (n + height) * math.cos(lat) * math.sin(lon),
            (n * (1.0 - e2) + height) * math.sin(lat),
        ]
    )
