"""Benchmark instance families and taxi-trip graph construction.

The four synthetic families are adversarial constructions from the online
matching literature; each is a deterministic function of its size parameter,
with uniform type probabilities and balanced supply/demand.  The trip-data
path turns a window of pick-up / drop-off events into a stochastic instance:
drop-offs define the sampled car supply, pick-up zones define the demand type
distribution, and edges connect same-zone or adjacent-zone pairs.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from datetime import datetime, timedelta
from functools import cached_property

from .instance import DemandType, StochasticInstance
from .rng import RngStream

log = logging.getLogger(__name__)

TRIP_COLUMNS = ("tpep_pickup_datetime", "tpep_dropoff_datetime", "PULocationID", "DOLocationID")
ZONE_COLUMNS = ("zone_a", "zone_b")
HALF_WINDOW = timedelta(minutes=5)


class BadSize(ValueError):
    """Family size parameter incompatible with the construction's block sizes."""


class EmptyWindow(ValueError):
    """A half-window around the requested time contains no trip events."""


class FormatError(ValueError):
    """Input CSV header does not match the expected schema."""


def _uniform_types(compat_lists: list[tuple[int, ...]]) -> tuple[DemandType, ...]:
    p = 1.0 / len(compat_lists)
    return tuple(
        DemandType(type_id=j, probability=p, compatible=compat)
        for j, compat in enumerate(compat_lists)
    )


def gen_partitioned_block(n: int) -> StochasticInstance:
    """Block-diagonal adversarial graph: diagonal plus two dense cross blocks.

    Rows (resources) and columns (types) split into blocks of sizes
    0.3n / 0.4n / 0.3n; edges are the diagonal, rows 1 x columns 2 complete,
    and rows 2 x columns 3 complete.
    """
    if n <= 0 or n % 10 != 0:
        raise BadSize(f"partitioned block needs n divisible by 10, got {n}")
    b1 = 3 * n // 10
    b2 = 4 * n // 10
    rows_1 = tuple(range(b1))
    rows_2 = tuple(range(b1, b1 + b2))
    compat = []
    for j in range(n):
        if j < b1:
            edges = (j,)
        elif j < b1 + b2:
            edges = tuple(sorted(set(rows_1) | {j}))
        else:
            edges = tuple(sorted(set(rows_2) | {j}))
        compat.append(edges)
    return StochasticInstance(
        resources=tuple(f"v{i}" for i in range(n)),
        types=_uniform_types(compat),
        arrivals=n,
    )


def gen_kvv_triangular(n: int) -> StochasticInstance:
    """Upper-triangular graph: type i is compatible with resources i..n-1."""
    if n < 1:
        raise BadSize(f"triangular needs n >= 1, got {n}")
    compat = [tuple(range(j, n)) for j in range(n)]
    return StochasticInstance(
        resources=tuple(f"v{i}" for i in range(n)),
        types=_uniform_types(compat),
        arrivals=n,
    )


def gen_bahmani(n: int) -> StochasticInstance:
    """Online upper-bound construction: a hidden perfect matching under two dense blocks.

    ``n`` is the number of vertices per side.  The offline side splits into A2
    (m nodes) and A1 (n - m nodes) with m chosen so that |A1| is about m/e.
    Types I1 (m of them) see their private A2 partner plus all of A1; types I2
    (n - m) see all of A2.  All types are uniform and the arrival count is n,
    so supply and demand balance.
    """
    if n < 3:
        raise BadSize(f"bahmani needs n >= 3, got {n}")
    m = int(math.floor(n / (1.0 + 1.0 / math.e) + 0.5))
    a1 = n - m
    a1_nodes = tuple(range(m, m + a1))
    a2_nodes = tuple(range(m))
    compat = [tuple(sorted((j,) + a1_nodes)) for j in range(m)]
    compat.extend([a2_nodes] * a1)
    resources = tuple(f"a2_{i}" for i in range(m)) + tuple(f"a1_{i}" for i in range(a1))
    return StochasticInstance(
        resources=resources,
        types=_uniform_types(compat),
        arrivals=n,
    )


def gen_tsm_tight(n: int) -> StochasticInstance:
    """Disjoint 6-cycles plus two dense blocks, tight for two-suggestion guidance.

    ``n`` is the number of vertices per side.  Each of the n/4 cycles
    u-x-v-y-w-z alternates offline/online starting with u offline, so u, v, w
    are resources and x, y, z are demand types.  A block of n/4 extra offline
    nodes (K) is seen by every x type, and n/4 extra online types (L) see
    every w node.  All types are uniform and the arrival count is n; the
    expected offline optimum sits near n * (1 - 1/(2e)) because extra copies
    of the degree-two y and z types have nowhere to overflow.
    """
    if n <= 0 or n % 4 != 0:
        raise BadSize(f"tsm tight needs n divisible by 4, got {n}")
    cycles = n // 4
    u_of = lambda c: 3 * c
    v_of = lambda c: 3 * c + 1
    w_of = lambda c: 3 * c + 2
    block = tuple(range(3 * cycles, 4 * cycles))  # K nodes
    compat = []
    for c in range(cycles):
        compat.append(tuple(sorted((u_of(c), v_of(c)) + block)))  # x_c
        compat.append(tuple(sorted((v_of(c), w_of(c)))))  # y_c
        compat.append(tuple(sorted((u_of(c), w_of(c)))))  # z_c
    all_w = tuple(w_of(c) for c in range(cycles))
    compat.extend([all_w] * cycles)  # L group
    resources = []
    for c in range(cycles):
        resources.extend((f"u{c}", f"v{c}", f"w{c}"))
    resources.extend(f"k{c}" for c in range(cycles))
    return StochasticInstance(
        resources=tuple(resources),
        types=_uniform_types(compat),
        arrivals=n,
    )


FAMILIES = {
    "block": gen_partitioned_block,
    "triangular": gen_kvv_triangular,
    "bahmani": gen_bahmani,
    "tsm": gen_tsm_tight,
}


@dataclass(frozen=True)
class ZoneModel:
    """Spatial zones with a symmetric adjacency relation."""

    zones: tuple[str, ...]
    adjacent_pairs: frozenset[frozenset[str]]

    @cached_property
    def _neighbors(self) -> dict[str, frozenset[str]]:
        out: dict[str, set[str]] = {z: set() for z in self.zones}
        for pair in self.adjacent_pairs:
            members = tuple(pair)
            if len(members) == 1:
                continue
            a, b = members
            out[a].add(b)
            out[b].add(a)
        return {z: frozenset(s) for z, s in out.items()}

    def compatible(self, zone_a: str, zone_b: str) -> bool:
        """Same zone or sharing a boundary."""
        return zone_a == zone_b or zone_b in self._neighbors.get(zone_a, frozenset())


@dataclass(frozen=True)
class TripRecord:
    pickup_time: datetime
    dropoff_time: datetime
    pickup_zone: str
    dropoff_zone: str


def ingest_trips(path: str, zone_path: str) -> tuple[list[TripRecord], ZoneModel]:
    """Load trip records and the zone adjacency model from CSV files.

    Rows with unknown zones or unparseable timestamps are dropped and counted
    in a warning.

    Raises:
        FormatError: if a header lacks the required columns.
        OSError: if a file cannot be read.
    """
    with open(zone_path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not set(ZONE_COLUMNS) <= set(reader.fieldnames):
            raise FormatError(f"{zone_path}: expected columns {ZONE_COLUMNS}")
        zones: set[str] = set()
        pairs: set[frozenset[str]] = set()
        for row in reader:
            a = row["zone_a"].strip()
            b = row["zone_b"].strip()
            zones.update((a, b))
            if a != b:
                pairs.add(frozenset((a, b)))
    model = ZoneModel(zones=tuple(sorted(zones)), adjacent_pairs=frozenset(pairs))

    trips = []
    dropped = 0
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not set(TRIP_COLUMNS) <= set(reader.fieldnames):
            raise FormatError(f"{path}: expected columns {TRIP_COLUMNS}")
        for row in reader:
            try:
                pickup = datetime.fromisoformat(row["tpep_pickup_datetime"].strip())
                dropoff = datetime.fromisoformat(row["tpep_dropoff_datetime"].strip())
            except ValueError:
                dropped += 1
                continue
            pu = row["PULocationID"].strip()
            do = row["DOLocationID"].strip()
            if pu not in zones or do not in zones:
                dropped += 1
                continue
            trips.append(TripRecord(pickup, dropoff, pu, do))
    if dropped:
        log.warning("dropped %d malformed or unknown-zone trip rows", dropped)
    return trips, model


def build_nyc_instance(
    trips: list[TripRecord], zones: ZoneModel, t: datetime, rng: RngStream
) -> tuple[StochasticInstance, tuple[str, ...]]:
    """Interval graph construction: sampled car supply and zone-typed demand.

    Drop-offs in [t-5m, t) set the supply size n and the car zone distribution;
    pick-ups in [t, t+5m) set the demand zone distribution.  n cars are sampled
    with replacement from the supply distribution and become the resources;
    each pick-up zone with positive probability becomes a demand type whose
    compatibility set is the cars in the same or an adjacent zone (possibly
    empty: such demand is structurally unmatchable and still counts).

    Returns the instance and the sampled car zones, aligned with resources.

    Raises:
        EmptyWindow: if either half-window contains no events.
    """
    drop_zones = [trip.dropoff_zone for trip in trips if t - HALF_WINDOW <= trip.dropoff_time < t]
    pick_zones = [trip.pickup_zone for trip in trips if t <= trip.pickup_time < t + HALF_WINDOW]
    if not drop_zones:
        raise EmptyWindow(f"no drop-off events in [{t - HALF_WINDOW}, {t})")
    if not pick_zones:
        raise EmptyWindow(f"no pick-up events in [{t}, {t + HALF_WINDOW})")

    n = len(drop_zones)
    car_zone_ids = sorted(set(drop_zones))
    car_probs = [drop_zones.count(z) / n for z in car_zone_ids]
    sampled = rng.generator.choice(len(car_zone_ids), size=n, replace=True, p=car_probs)
    car_zones = tuple(car_zone_ids[s] for s in sampled)

    rider_zone_ids = sorted(set(pick_zones))
    rider_probs = [pick_zones.count(z) / len(pick_zones) for z in rider_zone_ids]
    types = []
    for j, zone in enumerate(rider_zone_ids):
        compat = tuple(i for i, cz in enumerate(car_zones) if zones.compatible(zone, cz))
        types.append(DemandType(type_id=j, probability=rider_probs[j], compatible=compat))
    instance = StochasticInstance(
        resources=tuple(f"car{i}@{z}" for i, z in enumerate(car_zones)),
        types=tuple(types),
        arrivals=n,
        allow_empty_types=True,
    )
    return instance, car_zones
