"""Problem instances: domain types, parsers and distance/time matrix providers.

An instance is immutable after construction. The depot is matrix index 0 and
customer ``i`` (0-based position in ``customers``) is matrix index ``i + 1``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, ParseError, ValidationError

# Absolute tolerance for all time/distance feasibility comparisons.
TOLERANCE = 1e-9


@dataclass(frozen=True)
class Customer:
    """A customer site with a service time window and a per-customer service period."""

    id: str
    x: float
    y: float
    window_open: float
    window_close: float
    service_period: float

    def validate(self) -> None:
        if self.window_open > self.window_close + TOLERANCE:
            raise ValidationError(
                f"customer {self.id}: window_open {self.window_open} exceeds window_close {self.window_close}"
            )
        if self.service_period < 0:
            raise ValidationError(f"customer {self.id}: negative service period")
        if self.service_period > self.window_close - self.window_open + TOLERANCE:
            raise ValidationError(
                f"customer {self.id} is unserviceable: service period {self.service_period} "
                f"does not fit window [{self.window_open}, {self.window_close}]"
            )


@dataclass(frozen=True)
class Depot:
    """Vehicle home location and its hard operating horizon."""

    x: float
    y: float
    horizon_open: float
    horizon_close: float


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """A complete VRPTW instance with materialised distance and travel-time matrices."""

    name: str
    depot: Depot
    customers: tuple[Customer, ...]
    vehicle_count: int
    distance: np.ndarray
    travel_time: np.ndarray
    matrix_source: str = "planar"  # "planar" for generated, "external" for supplied
    _index: dict[str, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        n = len(self.customers) + 1
        for label, m in (("distance", self.distance), ("time", self.travel_time)):
            if m.shape != (n, n):
                raise ValidationError(f"{label} matrix must be {n}x{n}, got {m.shape}")
            if (m < 0).any():
                raise ValidationError("negative travel quantity in matrix")
            if not np.allclose(np.diagonal(m), 0.0, atol=TOLERANCE):
                raise ValidationError(f"{label} matrix has a non-zero diagonal")
        if self.vehicle_count < 1:
            raise ValidationError("vehicle_count must be positive")
        ids = [c.id for c in self.customers]
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate customer ids")
        for c in self.customers:
            c.validate()
        self.distance.setflags(write=False)
        self.travel_time.setflags(write=False)
        object.__setattr__(self, "_index", {c.id: i + 1 for i, c in enumerate(self.customers)})

    @property
    def customer_count(self) -> int:
        return len(self.customers)

    def index_of(self, customer_id: str) -> int:
        """Matrix index of a customer id (depot is index 0)."""
        try:
            return self._index[customer_id]
        except KeyError:
            raise ValidationError(f"unknown customer id {customer_id!r}") from None

    def customer(self, customer_id: str) -> Customer:
        return self.customers[self.index_of(customer_id) - 1]

    def has_customer(self, customer_id: str) -> bool:
        return customer_id in self._index


# ---------------------------------------------------------------------------
# Distance providers
# ---------------------------------------------------------------------------

def _planar_provider(locations: list[tuple[float, float]]) -> tuple[np.ndarray, np.ndarray]:
    """Euclidean distances at unit speed: travel_time equals distance."""
    pts = np.asarray(locations, dtype=float)
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt((diff ** 2).sum(axis=2))
    np.fill_diagonal(dist, 0.0)
    return dist, dist.copy()


PROVIDERS = {"planar": _planar_provider}


def build_matrices(
    locations: list[tuple[float, float]], provider: str = "planar"
) -> tuple[np.ndarray, np.ndarray]:
    """Materialise (distance, travel_time) matrices for a depot-first location list."""
    if not locations:
        raise ValidationError("at least one location (the depot) is required")
    try:
        fn = PROVIDERS[provider]
    except KeyError:
        raise ConfigurationError(
            f"unknown distance provider {provider!r}; available: {sorted(PROVIDERS)}"
        ) from None
    return fn(locations)


def _locations(depot: Depot, customers: list[Customer]) -> list[tuple[float, float]]:
    return [(depot.x, depot.y)] + [(c.x, c.y) for c in customers]


# ---------------------------------------------------------------------------
# Solomon benchmark format
# ---------------------------------------------------------------------------

def parse_solomon(text: str, name: str | None = None) -> ProblemInstance:
    """Parse the classic Solomon VRPTW layout.

    The demand column is read and discarded (capacity is out of scope). The
    depot is customer row 0 and its [ready, due] becomes the operating horizon.
    """
    lines = text.splitlines()
    header_name = None
    vehicle_count = None
    rows: list[tuple[int, list[float], str]] = []
    in_customers = False
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        upper = line.upper()
        if header_name is None and not in_customers and vehicle_count is None and not line[0].isdigit():
            if upper.startswith("VEHICLE") or upper.startswith("CUSTOMER"):
                header_name = header_name or ""
            else:
                header_name = line
                continue
        if upper.startswith("CUSTOMER"):
            in_customers = True
            continue
        if upper.startswith("VEHICLE") or upper.startswith("NUMBER") or upper.startswith("CUST"):
            continue
        parts = line.split()
        if not in_customers:
            # vehicle line: NUMBER CAPACITY
            if len(parts) >= 2 and vehicle_count is None:
                try:
                    vehicle_count = int(parts[0])
                except ValueError:
                    raise ParseError("expected vehicle count", location=f"line {lineno}") from None
            continue
        if len(parts) < 7:
            raise ParseError(
                f"customer row needs 7 columns, got {len(parts)}", location=f"line {lineno}"
            )
        try:
            values = [float(v) for v in parts[:7]]
        except ValueError:
            raise ParseError("non-numeric value in customer row", location=f"line {lineno}") from None
        rows.append((lineno, values, parts[0]))

    if vehicle_count is None:
        raise ParseError("missing VEHICLE section")
    if not rows:
        raise ParseError("missing depot row in customer table")
    if vehicle_count < 1:
        raise ValidationError("vehicle count must be positive")

    _, depot_row, _ = rows[0]
    depot = Depot(x=depot_row[1], y=depot_row[2], horizon_open=depot_row[4], horizon_close=depot_row[5])
    customers = []
    for lineno, values, raw_id in rows[1:]:
        cust = Customer(
            id=raw_id,
            x=values[1],
            y=values[2],
            window_open=values[4],
            window_close=values[5],
            service_period=values[6],
        )
        cust.validate()
        customers.append(cust)

    dist, time = build_matrices(_locations(depot, customers), "planar")
    return ProblemInstance(
        name=name or header_name or "solomon",
        depot=depot,
        customers=tuple(customers),
        vehicle_count=vehicle_count,
        distance=dist,
        travel_time=time,
        matrix_source="planar",
    )


# ---------------------------------------------------------------------------
# Native instance document (JSON, UTF-8)
# ---------------------------------------------------------------------------

def instance_from_document(doc: dict) -> ProblemInstance:
    """Build an instance from a parsed native document, generating matrices if absent."""
    for key in ("name", "vehicle_count", "depot", "customers"):
        if key not in doc:
            raise ParseError(f"missing field {key!r}", location="document root")
    dep = doc["depot"]
    for key in ("x", "y", "open", "close"):
        if key not in dep:
            raise ParseError(f"missing field {key!r}", location="depot")
    depot = Depot(
        x=float(dep["x"]), y=float(dep["y"]),
        horizon_open=float(dep["open"]), horizon_close=float(dep["close"]),
    )
    customers = []
    for pos, c in enumerate(doc["customers"]):
        for key in ("id", "x", "y", "open", "close", "service"):
            if key not in c:
                raise ParseError(f"missing field {key!r}", location=f"customers[{pos}]")
        customers.append(
            Customer(
                id=str(c["id"]), x=float(c["x"]), y=float(c["y"]),
                window_open=float(c["open"]), window_close=float(c["close"]),
                service_period=float(c["service"]),
            )
        )

    n = len(customers) + 1
    has_dist = doc.get("distance_matrix") is not None
    has_time = doc.get("time_matrix") is not None
    if has_dist or has_time:
        dist = _read_matrix(doc.get("distance_matrix"), n, "distance_matrix")
        time = _read_matrix(doc.get("time_matrix"), n, "time_matrix") if has_time else dist.copy()
        if not has_dist:
            dist = time.copy()
        source = "external"
    else:
        dist, time = build_matrices(_locations(depot, customers), "planar")
        source = "planar"

    return ProblemInstance(
        name=str(doc["name"]),
        depot=depot,
        customers=tuple(customers),
        vehicle_count=int(doc["vehicle_count"]),
        distance=dist,
        travel_time=time,
        matrix_source=source,
    )


def _read_matrix(rows, n: int, field_name: str) -> np.ndarray:
    if not isinstance(rows, list) or len(rows) != n or any(
        not isinstance(r, list) or len(r) != n for r in rows
    ):
        raise ValidationError(f"{field_name} must be a square {n}x{n} matrix")
    m = np.asarray(rows, dtype=float)
    if (m < 0).any():
        raise ValidationError(f"negative travel quantity in {field_name}")
    return m


def parse_native(text: str) -> ProblemInstance:
    """Parse the artifact's self-describing instance document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid document: {exc.msg}", location=f"line {exc.lineno}") from None
    if not isinstance(doc, dict):
        raise ParseError("document root must be an object")
    return instance_from_document(doc)


def instance_to_document(instance: ProblemInstance) -> dict:
    """Serialise to the native document shape. Matrices are embedded only when external."""
    doc = {
        "name": instance.name,
        "vehicle_count": instance.vehicle_count,
        "depot": {
            "x": instance.depot.x,
            "y": instance.depot.y,
            "open": instance.depot.horizon_open,
            "close": instance.depot.horizon_close,
        },
        "customers": [
            {
                "id": c.id,
                "x": c.x,
                "y": c.y,
                "open": c.window_open,
                "close": c.window_close,
                "service": c.service_period,
            }
            for c in instance.customers
        ],
    }
    if instance.matrix_source == "external":
        doc["distance_matrix"] = instance.distance.tolist()
        doc["time_matrix"] = instance.travel_time.tolist()
    return doc


def serialize_native(instance: ProblemInstance) -> str:
    return json.dumps(instance_to_document(instance), indent=2)


def instances_equal(a: ProblemInstance, b: ProblemInstance) -> bool:
    """Field-for-field equality, used by round-trip tests."""
    return (
        a.name == b.name
        and a.depot == b.depot
        and a.customers == b.customers
        and a.vehicle_count == b.vehicle_count
        and a.matrix_source == b.matrix_source
        and np.array_equal(a.distance, b.distance)
        and np.array_equal(a.travel_time, b.travel_time)
    )


def euclidean(a: tuple[float, float], b: tuple[float, float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])
