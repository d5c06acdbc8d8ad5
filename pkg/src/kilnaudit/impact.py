"""Pollutant emission estimates per state and population exposure around
kilns on a lat/lon person-count raster."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from . import geo
from .errors import ConfigError, DomainError
from .ingest import PopulationGrid
from .obb import KilnClass

POLLUTANTS = ("PM2.5", "SO2", "CO", "CO2")
OPERATING_DAYS_PER_YEAR = 180
EXPOSURE_RADII_KM = (0.8, 2.0, 5.0)


@dataclass(frozen=True)
class EmissionRates:
    """Grams of pollutant per kg of fired brick, for the older technologies
    (CFCBK and FCBK share a rate) and for Zigzag kilns."""

    old_tech: dict
    zigzag: dict

    def __post_init__(self):
        for pol in POLLUTANTS:
            if pol not in self.old_tech or pol not in self.zigzag:
                raise ConfigError(f"missing emission rate for {pol}")
        for pol, rate in {**self.old_tech, **self.zigzag}.items():
            if rate <= 0:
                raise ConfigError(f"rate for {pol} must be positive, got {rate}")
        for pol in self.zigzag:
            if self.zigzag[pol] >= self.old_tech.get(pol, math.inf):
                raise ConfigError(
                    f"zigzag rate for {pol} must be below the CFCBK/FCBK rate"
                )


DEFAULT_EMISSION_RATES = EmissionRates(
    old_tech={"PM2.5": 0.18, "SO2": 0.52, "CO": 3.63, "CO2": 179.0},
    zigzag={"PM2.5": 0.09, "SO2": 0.15, "CO": 1.19, "CO2": 107.5},
)


@dataclass(frozen=True)
class StateProduction:
    state: str
    daily_tonnes: float

    def __post_init__(self):
        if self.daily_tonnes <= 0:
            raise DomainError(f"daily production must be positive, got {self.daily_tonnes}")


def daily_production(annual_tonnes: float) -> float:
    """Kilns fire roughly half the year; daily output = annual / 180 days."""
    if annual_tonnes <= 0:
        raise DomainError(f"annual production must be positive, got {annual_tonnes}")
    return annual_tonnes / OPERATING_DAYS_PER_YEAR


def state_emissions(
    counts, rates: EmissionRates, production: StateProduction
) -> dict[str, float]:
    """Tonnes/day per pollutant for one state.

    The state's production is allocated across technologies by kiln count:
    effective rate (g/kg) = (r_old * n_old + r_zigzag * n_zigzag) / n_total,
    then scaled by the daily brick mass.
    """
    n_old = counts.get(KilnClass.CFCBK, 0) + counts.get(KilnClass.FCBK, 0)
    n_zz = counts.get(KilnClass.ZIGZAG, 0)
    total = n_old + n_zz
    if total <= 0:
        raise DomainError(f"{production.state}: no kilns to allocate production to")
    out = {}
    for pol in POLLUTANTS:
        eff_g_per_kg = (rates.old_tech[pol] * n_old + rates.zigzag[pol] * n_zz) / total
        # g/kg * (tonnes * 1000 kg/tonne) = grams; / 1e6 g per tonne
        out[pol] = eff_g_per_kg * production.daily_tonnes * 1000.0 / 1e6
    return out


def emissions_table(per_state_counts, productions, rates=DEFAULT_EMISSION_RATES):
    """Rows of {state, mass, <pollutants>} plus a Total row summing states."""
    prods = {p.state: p for p in productions}
    for state in per_state_counts:
        if state not in prods:
            raise ConfigError(f"no production figure for state {state!r}")
    rows = []
    for prod in productions:
        if prod.state not in per_state_counts:
            raise ConfigError(f"no kiln counts for state {prod.state!r}")
        em = state_emissions(per_state_counts[prod.state], rates, prod)
        rows.append({"state": prod.state, "mass_tonnes_per_day": prod.daily_tonnes, **em})
    total = {"state": "Total"}
    total["mass_tonnes_per_day"] = sum(r["mass_tonnes_per_day"] for r in rows)
    for pol in POLLUTANTS:
        total[pol] = sum(r[pol] for r in rows)
    return rows + [total]


def emissions_to_csv(rows) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["state", "mass_tonnes_per_day"] + list(POLLUTANTS))
    for r in rows:
        w.writerow(
            [r["state"], f"{r['mass_tonnes_per_day']:.2f}"]
            + [f"{r[p]:.2f}" for p in POLLUTANTS]
        )
    return out.getvalue()


def _candidate_window(grid: PopulationGrid, lat, lon, radius_m):
    """Row/col slice certain to contain every cell center within radius_m."""
    dlat = math.degrees(radius_m / geo.EARTH_RADIUS) * 1.0000001
    lat_far = min(abs(lat) + dlat, 89.9)
    denom = math.cos(math.radians(lat)) * math.cos(math.radians(lat_far))
    s = math.sin(radius_m / (2 * geo.EARTH_RADIUS)) / math.sqrt(max(denom, 1e-12))
    dlon = math.degrees(2 * math.asin(min(1.0, s))) * 1.0000001

    # row 0 is the north edge
    top = grid.yllcorner + grid.nrows * grid.cellsize
    r0 = int(math.floor((top - (lat + dlat)) / grid.cellsize - 0.5))
    r1 = int(math.ceil((top - (lat - dlat)) / grid.cellsize - 0.5))
    c0 = int(math.floor(((lon - dlon) - grid.xllcorner) / grid.cellsize - 0.5))
    c1 = int(math.ceil(((lon + dlon) - grid.xllcorner) / grid.cellsize - 0.5))
    return (
        max(r0, 0),
        min(r1 + 1, grid.nrows),
        max(c0, 0),
        min(c1 + 1, grid.ncols),
    )


def population_within(kiln_centroids, grid: PopulationGrid, radius_km: float) -> float:
    """People living within radius_km of any kiln: cell centers within the
    radius (haversine) of at least one centroid, each cell counted once."""
    if radius_km <= 0:
        raise DomainError(f"radius must be positive, got {radius_km}")
    radius_m = radius_km * 1000.0
    mask = np.zeros((grid.nrows, grid.ncols), dtype=bool)
    rows_lat = grid.yllcorner + (grid.nrows - np.arange(grid.nrows) - 0.5) * grid.cellsize
    cols_lon = grid.xllcorner + (np.arange(grid.ncols) + 0.5) * grid.cellsize
    for p in kiln_centroids:
        r0, r1, c0, c1 = _candidate_window(grid, p.lat, p.lon, radius_m)
        if r0 >= r1 or c0 >= c1:
            continue
        lat2 = np.radians(rows_lat[r0:r1])[:, None]
        lon2 = np.radians(cols_lon[c0:c1])[None, :]
        lat1 = math.radians(p.lat)
        lon1 = math.radians(p.lon)
        h = (
            np.sin((lat2 - lat1) / 2) ** 2
            + math.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2) ** 2
        )
        d = 2 * geo.EARTH_RADIUS * np.arcsin(np.minimum(1.0, np.sqrt(h)))
        mask[r0:r1, c0:c1] |= d <= radius_m
    mask &= grid.valid_mask()
    return float(grid.values[mask].sum())


def _as_count(v: float):
    # person counts serialize as integers when they are whole
    return int(v) if float(v).is_integer() else v


def exposure_by_state(kilns_by_state, grid: PopulationGrid, radii_km=EXPOSURE_RADII_KM):
    """Rows of {state, <radius>: persons} plus a Total row (sum over states,
    matching per-state unique counting)."""
    rows = []
    for state in sorted(kilns_by_state):
        row = {"state": state}
        for r in radii_km:
            row[f"within_{r:g}_km"] = _as_count(
                population_within(kilns_by_state[state], grid, r)
            )
        rows.append(row)
    total = {"state": "Total"}
    for r in radii_km:
        key = f"within_{r:g}_km"
        total[key] = _as_count(sum(row[key] for row in rows))
    return rows + [total]


def exposure_to_csv(rows, radii_km=EXPOSURE_RADII_KM) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    keys = [f"within_{r:g}_km" for r in radii_km]
    w.writerow(["state"] + keys)
    for row in rows:
        w.writerow([row["state"]] + [f"{row[k]:.0f}" for k in keys])
    return out.getvalue()
