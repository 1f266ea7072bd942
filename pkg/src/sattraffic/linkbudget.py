"""Per-user channel coefficients from beam gains, slant range, and phase.

Each user of the traffic matrix gets one complex entry per beam: the gain of
the beam's nearest pattern sample, minus free-space loss over the slant
range, plus the receive antenna gain, rotated by the sub-wavelength remainder
of the slant range. All beams share one sample grid, so the nearest sample
is found once per user and reused across beams.
"""

import math
from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np

from .errors import EmptyPatternError, MismatchedBeamsError, UnknownUserError
from .geo import ScenarioConfig, path_loss_db, slant_range
from .ioutil import fmt_float, write_csv

_TWO_PI = 2.0 * math.pi

# users per block when scanning the sample grid, keeps the angle matrix small
_CHUNK = 2048


def _cos_angles(lat_deg, lon_deg, grid_lat_deg, grid_lon_deg):
    """Clamped cosines of the central angles, one row per user.

    The spherical law of cosines gives distance as acos of this quantity;
    acos is strictly decreasing, so nearest-sample searches compare the
    cosines directly and ties land on the same samples either way.
    """
    u_lat = np.radians(np.asarray(lat_deg, dtype=float))[:, None]
    u_lon = np.radians(np.asarray(lon_deg, dtype=float))[:, None]
    g_lat = np.radians(np.asarray(grid_lat_deg, dtype=float))[None, :]
    g_lon = np.radians(np.asarray(grid_lon_deg, dtype=float))[None, :]
    t = np.sin(u_lat) * np.sin(g_lat) + np.cos(u_lat) * np.cos(g_lat) * np.cos(
        g_lon - u_lon
    )
    np.clip(t, -1.0, 1.0, out=t)
    return t


def _idw_gain(lat_deg, lon_deg, grid_lat_deg, grid_lon_deg, gains_db):
    """Inverse-distance-squared gain over the three nearest samples.

    A user sitting exactly on a sample takes that sample's gain. Distance
    ties are broken toward the lower sample index by the stable sort.
    """
    lat_deg = np.asarray(lat_deg, dtype=float)
    lon_deg = np.asarray(lon_deg, dtype=float)
    grid_lat_deg = np.asarray(grid_lat_deg, dtype=float)
    grid_lon_deg = np.asarray(grid_lon_deg, dtype=float)
    gains_db = np.asarray(gains_db, dtype=float)
    mu = len(gains_db)
    k = min(3, mu)
    out = np.empty(len(lat_deg))
    for lo in range(0, len(lat_deg), _CHUNK):
        hi = min(lo + _CHUNK, len(lat_deg))
        d = np.arccos(
            _cos_angles(lat_deg[lo:hi], lon_deg[lo:hi], grid_lat_deg, grid_lon_deg)
        )
        # an exact coordinate hit short-circuits; the rounded central angle
        # of a coincident pair is not reliably zero
        eq = (lat_deg[lo:hi, None] == grid_lat_deg) & (
            lon_deg[lo:hi, None] == grid_lon_deg
        )
        has_eq = eq.any(axis=1)
        eq_idx = np.argmax(eq, axis=1)
        d[eq] = 0.0
        idx = np.argsort(d, axis=1, kind="stable")[:, :k]
        dk = np.take_along_axis(d, idx, axis=1)
        gk = gains_db[idx]
        # weights normalized by the nearest distance so equal distances get
        # exactly equal weight and near-hits cannot overflow
        with np.errstate(divide="ignore", invalid="ignore"):
            w = (dk[:, :1] / dk) ** 2
        vals = np.sum(w * gk, axis=1) / np.sum(w, axis=1)
        # the angle can also round to exactly zero for a non-identical pair,
        # which would make the normalized weights 0/0; both zero flavors take
        # the nearest sample's value, coordinate equality winning
        zero = dk[:, 0] == 0.0
        vals[zero] = gk[zero, 0]
        vals[has_eq] = gains_db[eq_idx[has_eq]]
        out[lo:hi] = vals
    return out


def interpolate_gain(user, samples):
    """Gain in dB at a point, interpolated from a beam's sample points."""
    samples = list(samples)
    if not samples:
        raise ValueError("interpolation needs at least one sample")
    lat = np.array([s.location.lat_deg for s in samples])
    lon = np.array([s.location.lon_deg for s in samples])
    gain = np.array([s.gain_db for s in samples])
    return float(
        _idw_gain(
            np.array([float(user.lat_deg)]),
            np.array([float(user.lon_deg)]),
            lat,
            lon,
            gain,
        )[0]
    )


@dataclass(frozen=True)
class ChannelMatrix:
    """Complex per-user, per-beam channel entries with link diagnostics.

    Row n-1 belongs to user n of the traffic matrix the entries were built
    from; column j-1 belongs to beam j. The diagnostics arrays run parallel
    to the rows. nearest_sample holds the shared-grid sample index (0-based)
    that supplied every beam gain of the row.
    """

    entries: np.ndarray
    serving: np.ndarray
    distance_m: np.ndarray
    path_loss_db: np.ndarray
    interp_gain_db: np.ndarray
    nearest_sample: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=complex)
        object.__setattr__(self, "entries", entries)
        if entries.ndim != 2:
            raise ValueError("entries must be a 2-D array")
        n = entries.shape[0]
        for name in ("serving", "distance_m", "path_loss_db", "interp_gain_db",
                     "nearest_sample"):
            arr = np.asarray(getattr(self, name))
            if arr.shape != (n,):
                raise ValueError(f"{name} must have one value per user")
            object.__setattr__(self, name, arr)
            arr.setflags(write=False)
        entries.setflags(write=False)

    @property
    def n_users(self):
        return self.entries.shape[0]

    @property
    def beams(self):
        return self.entries.shape[1]


def build_channel_matrix(T, pattern, cfg=None, *, include_pattern_phase=False):
    """Assemble the complex channel matrix for every user of a traffic matrix.

    Per user: slant range to the satellite, free-space loss, then one entry
    per beam from the gain of the nearest sample. The phase is set by the
    sub-wavelength remainder of the slant range, identical across the row;
    include_pattern_phase additionally rotates each entry by the pattern's
    measured phase at the chosen sample (off by default, diagnostic only).
    The per-user interpolated gain of the serving beam is carried along as a
    diagnostic and does not enter the entries.
    """
    if pattern.beams == 0 or pattern.samples_per_beam == 0:
        raise EmptyPatternError("beam pattern has no samples")
    if T.beams != pattern.beams:
        raise MismatchedBeamsError(
            f"traffic matrix has {T.beams} beams, pattern has {pattern.beams}"
        )
    if cfg is None:
        cfg = ScenarioConfig()
    rows = T.rows
    n = len(rows)
    lam = cfg.wavelength_m

    serving = np.array([r.beam for r in rows], dtype=np.int64)
    dist = np.empty(n)
    loss = np.empty(n)
    phase = np.empty(n)
    for i, r in enumerate(rows):
        d = slant_range(
            r.location, cfg.sat_lat_deg, cfg.sat_lon_deg,
            cfg.altitude_m, cfg.earth_radius_m,
        )
        dist[i] = d
        loss[i] = path_loss_db(d, lam)
        phase[i] = _TWO_PI * math.fmod(d, lam) / lam

    lats = np.array([r.location.lat_deg for r in rows])
    lons = np.array([r.location.lon_deg for r in rows])
    nearest = np.empty(n, dtype=np.int64)
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        t = _cos_angles(lats[lo:hi], lons[lo:hi], pattern.lat_deg, pattern.lon_deg)
        # max cosine = min distance; first occurrence keeps the lowest index
        nearest[lo:hi] = np.argmax(t, axis=1)

    amp_db = 10.0 * np.log10(np.abs(pattern.coefficients[nearest, :]) ** 2)
    amp_db -= loss[:, None]
    amp_db += cfg.rx_gain_db
    entries = 10.0 ** (amp_db / 20.0) * np.exp(1j * phase)[:, None]
    if include_pattern_phase:
        entries = entries * np.exp(1j * pattern.phase_rad[nearest, :])

    gamma = np.empty(n)
    for j in np.unique(serving):
        sel = serving == j
        gamma[sel] = _idw_gain(
            lats[sel], lons[sel], pattern.lat_deg, pattern.lon_deg,
            pattern.gain_db[:, j - 1],
        )

    return ChannelMatrix(
        entries=entries,
        serving=serving,
        distance_m=dist,
        path_loss_db=loss,
        interp_gain_db=gamma,
        nearest_sample=nearest,
    )


def interference(H, n, active, power):
    """Total co-channel power a user receives from other active beams.

    power is either one wattage applied to every beam or a mapping from
    beam id to watts. The serving beam never contributes. Beams are summed
    in id order so the result does not depend on set iteration order.
    """
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
        raise UnknownUserError(f"user index must be an integer, got {n!r}")
    if not 1 <= n <= H.n_users:
        raise UnknownUserError(f"user {n} is not a row of the channel matrix")
    beams = sorted(active)
    for j in beams:
        if not isinstance(j, (int, np.integer)) or not 1 <= j <= H.beams:
            raise ValueError(f"active set contains unknown beam {j!r}")
    serving = int(H.serving[n - 1])
    total = 0.0
    for j in beams:
        if j == serving:
            continue
        if isinstance(power, Mapping):
            try:
                watts = float(power[j])
            except KeyError:
                raise ValueError(f"no power given for beam {j}") from None
        else:
            watts = float(power)
        if watts < 0.0:
            raise ValueError("beam power must be non-negative")
        total += watts * abs(H.entries[n - 1, j - 1]) ** 2
    return total


CHANNEL_HEADER = "user,beam,magnitude,phase_rad"


def _entry_phase(z):
    theta = math.atan2(z.imag, z.real)
    if theta < 0.0:
        theta += _TWO_PI
    if theta >= _TWO_PI:
        theta = 0.0
    return theta


def write_channel_csv(H, path):
    """Long-format channel entries, one row per (user, beam), canonical floats."""
    def rows():
        for i in range(H.n_users):
            for j in range(H.beams):
                z = complex(H.entries[i, j])
                yield (
                    str(i + 1),
                    str(j + 1),
                    fmt_float(abs(z)),
                    fmt_float(_entry_phase(z)),
                )

    write_csv(path, CHANNEL_HEADER.split(","), rows())


def channel_summary(H):
    """Plain-data summary with the per-user link diagnostics."""
    return {
        "users": int(H.n_users),
        "beams": int(H.beams),
        "per_user": [
            {
                "user": i + 1,
                "distance_m": float(H.distance_m[i]),
                "path_loss_db": float(H.path_loss_db[i]),
                "interp_gain_db": float(H.interp_gain_db[i]),
            }
            for i in range(H.n_users)
        ],
    }
