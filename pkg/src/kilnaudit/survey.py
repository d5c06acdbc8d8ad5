"""External validation: district-level comparison against field surveys and
establishment/conversion-year dating against a historical-imagery oracle."""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field

from . import geo
from .errors import DomainError, OracleError


def pearson_r(xs, ys) -> float | None:
    """Product-moment correlation; None when either side has zero variance."""
    xs = list(xs)
    ys = list(ys)
    if len(xs) != len(ys):
        raise DomainError(f"length mismatch {len(xs)} vs {len(ys)}")
    if len(xs) < 2:
        raise DomainError("correlation needs at least two points")
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    cov = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    vx = sum((x - mx) ** 2 for x in xs)
    vy = sum((y - my) ** 2 for y in ys)
    if vx == 0 or vy == 0:
        return None
    return cov / math.sqrt(vx * vy)


@dataclass(frozen=True)
class ErrorStats:
    mean: float
    median: float
    std: float


def error_stats(xs, ys) -> ErrorStats:
    """Mean/median/std of absolute differences; std uses the population
    divisor n."""
    xs = list(xs)
    ys = list(ys)
    if len(xs) != len(ys):
        raise DomainError(f"length mismatch {len(xs)} vs {len(ys)}")
    if not xs:
        raise DomainError("error stats need at least one pair")
    errs = [abs(x - y) for x, y in zip(xs, ys)]
    mean = sum(errs) / len(errs)
    std = math.sqrt(sum((e - mean) ** 2 for e in errs) / len(errs))
    return ErrorStats(mean=mean, median=statistics.median(errs), std=std)


# ---------------------------------------------------------------------------
# district join
# ---------------------------------------------------------------------------

_BOUNDARY_EPS_M = 1e-6


@dataclass
class DistrictComparison:
    # district -> (survey count or None, our count); includes every district
    counts: dict
    unassigned: list = field(default_factory=list)  # kiln ids outside all districts
    boundary_flagged: list = field(default_factory=list)  # ids on shared boundaries
    missing_from_survey: list = field(default_factory=list)

    def paired(self):
        names = [d for d in sorted(self.counts) if self.counts[d][0] is not None]
        survey = [self.counts[d][0] for d in names]
        ours = [self.counts[d][1] for d in names]
        return names, survey, ours

    def correlation(self) -> float | None:
        _, survey, ours = self.paired()
        if len(survey) < 2:
            return None
        return pearson_r(survey, ours)

    def stats(self) -> ErrorStats | None:
        _, survey, ours = self.paired()
        if not survey:
            return None
        return error_stats(survey, ours)

    def to_dict(self) -> dict:
        names, survey, ours = self.paired()
        st = self.stats()
        return {
            "districts": {
                d: {"survey": self.counts[d][0], "ours": self.counts[d][1]}
                for d in sorted(self.counts)
            },
            "compared": names,
            "pearson_r": self.correlation(),
            "error_mean": st.mean if st else None,
            "error_median": st.median if st else None,
            "error_std": st.std if st else None,
            "unassigned": sorted(self.unassigned),
            "boundary_flagged": sorted(self.boundary_flagged),
            "missing_from_survey": sorted(self.missing_from_survey),
        }


def district_join(kilns, districts, survey_counts) -> DistrictComparison:
    """Count non-discarded kilns per district by centroid containment.

    districts: iterable of (name, Polygon); a district may appear several
    times (multipart boundaries). A kiln sitting on a shared boundary goes
    to the lexicographically first district and is flagged; kilns outside
    every district are flagged unassigned. Districts absent from the survey
    are excluded from the correlation.
    """
    districts = list(districts)
    names = sorted({name for name, _ in districts})
    ours = {name: 0 for name in names}
    comparison = DistrictComparison(counts={})
    for kiln in kilns:
        if kiln.discarded:
            continue
        c = kiln.centroid
        containing = set()
        for name, poly in districts:
            if geo.point_in_polygon(c, poly):
                containing.add(name)
            elif geo.point_to_geometry_distance(c, poly) <= _BOUNDARY_EPS_M:
                containing.add(name)
        if not containing:
            comparison.unassigned.append(kiln.id)
            continue
        if len(containing) > 1:
            comparison.boundary_flagged.append(kiln.id)
        ours[sorted(containing)[0]] += 1
    for name in names:
        survey = survey_counts.get(name)
        if survey is None:
            comparison.missing_from_survey.append(name)
        comparison.counts[name] = (survey, ours[name])
    return comparison


# ---------------------------------------------------------------------------
# establishment-year dating
# ---------------------------------------------------------------------------

DEFAULT_YEAR_RANGE = (2010, 2022)


class CachedOracle:
    """Wraps a presence oracle (year -> kiln class or None). Caches answers,
    counts fresh queries and rejects histories that are not monotone (a kiln
    absent after it was seen present)."""

    def __init__(self, query):
        self._query = query
        self.answers: dict[int, str | None] = {}
        self.queries = 0

    def __call__(self, year: int):
        if year in self.answers:
            return self.answers[year]
        self.queries += 1
        answer = self._query(year)
        self.answers[year] = answer
        present_years = [y for y, a in self.answers.items() if a is not None]
        absent_years = [y for y, a in self.answers.items() if a is None]
        if present_years and absent_years and max(absent_years) > min(present_years):
            raise OracleError(
                f"oracle inconsistent: absent in {max(absent_years)} after being "
                f"present in {min(present_years)}"
            )
        return answer


BEFORE_RANGE = "before_range_start"
ABSENT = "absent_throughout"


@dataclass
class DatingResult:
    establishment: int | str  # a year, BEFORE_RANGE, or ABSENT
    established_class: str | None
    conversion_year: int | None
    final_class: str | None
    establishment_queries: int
    conversion_queries: int


def establishment_year(oracle, year_range=DEFAULT_YEAR_RANGE):
    """Earliest year in the range at which the kiln is present, found by
    binary search starting at the range midpoint. Presence at the very first
    year is reported as BEFORE_RANGE (the kiln may be older than the range).

    Returns (result, established_class, queries_used).
    """
    lo, hi = year_range
    if lo > hi:
        raise DomainError(f"bad year range {year_range}")
    cached = oracle if isinstance(oracle, CachedOracle) else CachedOracle(oracle)
    start_queries = cached.queries
    a, b = lo, hi
    first = None
    first_class = None
    while a <= b:
        mid = (a + b) // 2
        answer = cached(mid)
        if answer is not None:
            first, first_class = mid, answer
            b = mid - 1
        else:
            a = mid + 1
    used = cached.queries - start_queries
    if first is None:
        return ABSENT, None, used
    if first == lo:
        return BEFORE_RANGE, first_class, used
    return first, first_class, used


def conversion_year(oracle, start: int, end: int):
    """Earliest year in (start, end] at which the kiln already shows its
    final technology; None when the class never changed. Assumes a single
    transition over the range (a second search after establishment_year).

    Returns (year or None, final_class, queries_used).
    """
    cached = oracle if isinstance(oracle, CachedOracle) else CachedOracle(oracle)
    start_queries = cached.queries
    start_class = cached(start)
    if start_class is None:
        raise OracleError(f"kiln absent at {start}, cannot search for a conversion")
    final_class = cached(end)
    if final_class is None:
        raise OracleError(f"kiln absent at {end} after being present at {start}")
    if final_class == start_class:
        return None, final_class, cached.queries - start_queries
    a, b = start + 1, end
    year = end
    while a <= b:
        mid = (a + b) // 2
        answer = cached(mid)
        if answer is None:
            raise OracleError(f"kiln absent at {mid} inside its presence range")
        if answer == final_class:
            year = mid
            b = mid - 1
        else:
            a = mid + 1
    return year, final_class, cached.queries - start_queries


def date_kiln(query, year_range=DEFAULT_YEAR_RANGE) -> DatingResult:
    """Full dating of one kiln: establishment search, then a conversion
    search over the presence window. Answers are cached across the two
    searches so shared probes are free."""
    cached = CachedOracle(query)
    lo, hi = year_range
    result, est_class, est_queries = establishment_year(cached, year_range)
    if result == ABSENT:
        return DatingResult(ABSENT, None, None, None, est_queries, 0)
    start = lo if result == BEFORE_RANGE else result
    conv, final_class, conv_queries = conversion_year(cached, start, hi)
    return DatingResult(
        establishment=result,
        established_class=est_class,
        conversion_year=conv,
        final_class=final_class,
        establishment_queries=est_queries,
        conversion_queries=conv_queries,
    )


def survey_comparison_csv(comparison: DistrictComparison) -> str:
    import csv
    import io

    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["district", "survey", "ours", "in_correlation"])
    for name in sorted(comparison.counts):
        survey, ours = comparison.counts[name]
        w.writerow(
            [name, "" if survey is None else survey, ours, survey is not None]
        )
    return out.getvalue()
