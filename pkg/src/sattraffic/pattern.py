"""Beam-pattern ingestion and -3 dB footprint extraction.

A pattern is a shared grid of sample locations plus per-beam gain and phase
at every sample. Beams radiate over the same grid, which is what makes the
per-sample coefficient matrix well formed, so the loader enforces one exact
grid across beams instead of tolerating per-beam grids that almost agree.

Footprints follow the triangulate-then-border route: qualify the samples
within 3 dB of the beam peak, triangulate them, and take the convex border
of the triangulated set.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import (
    CollinearInputError,
    DegenerateFootprintError,
    ParseError,
    SchemaError,
)
from .geo import GeoPoint
from .geometry import Polygon, convex_hull, delaunay
from .ioutil import fmt_float

PATTERN_HEADER = "beam_id,lat_deg,lon_deg,gain_db,phase_rad"

_TWO_PI = 2.0 * math.pi


def _normalize_phase(theta):
    p = math.fmod(float(theta), _TWO_PI)
    if p < 0.0:
        p += _TWO_PI
    if p >= _TWO_PI:  # adding 2*pi to a tiny negative rounds up to 2*pi
        p = 0.0
    return p


@dataclass(frozen=True)
class SamplePoint:
    """One measured pattern sample: location, gain in dB, phase in radians."""

    location: GeoPoint
    gain_db: float
    phase_rad: float

    def __post_init__(self):
        gain = float(self.gain_db)
        if not math.isfinite(gain):
            raise ValueError("sample gain must be finite")
        theta = float(self.phase_rad)
        if not math.isfinite(theta):
            raise ValueError("sample phase must be finite")
        object.__setattr__(self, "gain_db", gain)
        object.__setattr__(self, "phase_rad", _normalize_phase(theta))


class BeamPattern:
    """Immutable beam pattern over a shared sample grid.

    Stores the grid once and the per-beam quantities as (samples, beams)
    arrays. The complex coefficient of sample j under beam i is
    10^(gain/20) * exp(i*phase), so its squared magnitude returns the gain
    via 10*log10(|.|^2).
    """

    def __init__(self, lat_deg, lon_deg, gain_db, phase_rad):
        lat = np.ascontiguousarray(lat_deg, dtype=float)
        lon = np.ascontiguousarray(lon_deg, dtype=float)
        gain = np.ascontiguousarray(gain_db, dtype=float)
        phase = np.ascontiguousarray(phase_rad, dtype=float)
        if lat.ndim != 1 or lon.ndim != 1 or lat.shape != lon.shape:
            raise ValueError("lat and lon must be 1-D arrays of equal length")
        if lat.size < 1:
            raise ValueError("pattern needs at least one sample location")
        if gain.ndim != 2 or gain.shape[0] != lat.size:
            raise ValueError("gain must have shape (samples, beams)")
        if phase.shape != gain.shape:
            raise ValueError("phase must match the gain array shape")
        if gain.shape[1] < 1:
            raise ValueError("pattern needs at least one beam")
        if not np.isfinite(lat).all() or not np.isfinite(lon).all():
            raise ValueError("sample locations must be finite")
        if not np.isfinite(gain).all() or not np.isfinite(phase).all():
            raise ValueError("gains and phases must be finite")
        if (np.abs(lat) > 90.0).any():
            raise ValueError("sample latitude outside [-90, 90]")
        phase = np.mod(phase, _TWO_PI)
        phase[phase >= _TWO_PI] = 0.0  # mod of tiny negatives rounds up to 2*pi

        for arr in (lat, lon, gain, phase):
            arr.flags.writeable = False
        self._lat = lat
        self._lon = lon
        self._gain = gain
        self._phase = phase
        self._coefficients = None

    @property
    def beams(self):
        return self._gain.shape[1]

    @property
    def samples_per_beam(self):
        return self._gain.shape[0]

    @property
    def lat_deg(self):
        return self._lat

    @property
    def lon_deg(self):
        return self._lon

    @property
    def gain_db(self):
        return self._gain

    @property
    def phase_rad(self):
        return self._phase

    @property
    def coefficients(self):
        """Complex (samples, beams) coefficient matrix, built on first use."""
        if self._coefficients is None:
            mag = np.power(10.0, self._gain / 20.0)
            coef = mag * np.exp(1j * self._phase)
            coef.flags.writeable = False
            self._coefficients = coef
        return self._coefficients

    def check_beam(self, beam_id):
        """Validate a 1-based beam id and return its column index."""
        if not isinstance(beam_id, (int, np.integer)) or isinstance(beam_id, bool):
            raise ValueError(f"beam id must be an integer, got {beam_id!r}")
        if not 1 <= beam_id <= self.beams:
            raise ValueError(f"beam id {beam_id} outside [1, {self.beams}]")
        return int(beam_id) - 1

    def beam_samples(self, beam_id):
        """The samples of one beam as SamplePoint objects, grid order."""
        col = self.check_beam(beam_id)
        return tuple(
            SamplePoint(
                location=GeoPoint(self._lat[j], self._lon[j]),
                gain_db=self._gain[j, col],
                phase_rad=self._phase[j, col],
            )
            for j in range(self.samples_per_beam)
        )


@dataclass(frozen=True)
class BeamFootprint:
    """Convex border of the region within 3 dB of one beam's peak gain."""

    beam_id: int
    border: Polygon
    peak_gain_db: float

    def __post_init__(self):
        if self.beam_id < 1:
            raise ValueError("beam ids are 1-based")


def _parse_row(fields, lineno, path):
    try:
        beam = int(fields[0])
    except ValueError:
        raise ParseError(f"beam_id {fields[0]!r} is not an integer", lineno, path) from None
    values = []
    for name, text in zip(("lat_deg", "lon_deg", "gain_db", "phase_rad"), fields[1:]):
        try:
            v = float(text)
        except ValueError:
            raise ParseError(f"{name} {text!r} is not a number", lineno, path) from None
        if not math.isfinite(v):
            raise ParseError(f"{name} must be finite, got {text}", lineno, path)
        values.append(v)
    if not -90.0 <= values[0] <= 90.0:
        raise ParseError(f"lat_deg {values[0]} outside [-90, 90]", lineno, path)
    return beam, values


def parse_pattern(source):
    """Read a pattern CSV into a BeamPattern.

    Rows must be grouped by beam with ids 1..n in order, and every beam must
    repeat the exact sample grid of beam 1. Malformed cells raise ParseError
    with the offending line; structural violations raise SchemaError.
    """
    if hasattr(source, "read"):
        return _parse_pattern_lines(source, getattr(source, "name", None))
    with open(source, "r", encoding="utf-8", newline="") as fh:
        return _parse_pattern_lines(fh, str(source))


def _parse_pattern_lines(fh, path):
    header = fh.readline()
    if header.rstrip("\r\n") != PATTERN_HEADER:
        raise ParseError(f"expected header {PATTERN_HEADER!r}", 1, path)

    beams = []  # per beam: [lat list, lon list, gain list, phase list]
    for lineno, raw in enumerate(fh, start=2):
        line = raw.rstrip("\r\n")
        if not line:
            continue
        fields = line.split(",")
        if len(fields) != 5:
            raise ParseError(f"expected 5 fields, got {len(fields)}", lineno, path)
        beam, (lat, lon, gain, phase) = _parse_row(fields, lineno, path)
        if beam == len(beams) + 1:
            beams.append([[], [], [], []])
        elif beam != len(beams):
            raise SchemaError(
                f"beam ids must be grouped and contiguous from 1: "
                f"saw beam {beam} on line {lineno} after beam {len(beams)}"
            )
        rec = beams[beam - 1]
        rec[0].append(lat)
        rec[1].append(lon)
        rec[2].append(gain)
        rec[3].append(phase)

    if not beams:
        raise SchemaError("pattern file has no sample rows")
    mu = len(beams[0][0])
    for i, rec in enumerate(beams[1:], start=2):
        if len(rec[0]) != mu:
            raise SchemaError(f"beam {i} has {len(rec[0])} samples, expected {mu}")
        if rec[0] != beams[0][0] or rec[1] != beams[0][1]:
            raise SchemaError(f"beam {i} sample grid differs from beam 1")

    gain = np.column_stack([rec[2] for rec in beams])
    phase = np.column_stack([rec[3] for rec in beams])
    return BeamPattern(beams[0][0], beams[0][1], gain, phase)


def write_pattern(pattern, path):
    """Serialize a BeamPattern in canonical form (round-trips byte-identically)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(PATTERN_HEADER + "\n")
        for i in range(pattern.beams):
            for j in range(pattern.samples_per_beam):
                fh.write(
                    f"{i + 1},{fmt_float(pattern.lat_deg[j])},{fmt_float(pattern.lon_deg[j])},"
                    f"{fmt_float(pattern.gain_db[j, i])},{fmt_float(pattern.phase_rad[j, i])}\n"
                )


def beam_footprint(pattern, beam_id):
    """Border of the samples within 3 dB of the beam peak (inclusive).

    An all-equal-gain beam qualifies every sample, so its border is the hull
    of the whole grid.
    """
    col = pattern.check_beam(beam_id)
    gains = pattern.gain_db[:, col]
    peak = float(gains.max())
    mask = gains >= peak - 3.0
    pts = list(zip(pattern.lat_deg[mask].tolist(), pattern.lon_deg[mask].tolist()))
    if len(pts) < 3:
        raise DegenerateFootprintError(
            beam_id, f"only {len(pts)} samples within 3 dB of the peak"
        )
    try:
        tri = delaunay(pts)
        border = convex_hull(tri.points)
    except CollinearInputError as exc:
        raise DegenerateFootprintError(beam_id, str(exc)) from exc
    return BeamFootprint(beam_id=int(beam_id), border=border, peak_gain_db=peak)


def all_footprints(pattern, max_workers=None):
    """Footprints for every beam, ordered by beam id.

    max_workers > 1 computes beams on a thread pool; the result order and
    content do not depend on scheduling.
    """
    ids = range(1, pattern.beams + 1)
    if max_workers is not None and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            return list(pool.map(lambda b: beam_footprint(pattern, b), ids))
    return [beam_footprint(pattern, b) for b in ids]
