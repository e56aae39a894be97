"""Named instances shipped with the workbench.

``toy3``/``square3`` are tiny hand-checkable instances; ``study12`` is the
desk-scale instance (3 vehicles, 12 customers) and the ``scenario*`` fixtures
are its task variants: deliberately degraded starting galleries, a request
list of lock/order constraints, and a vehicle-breakdown emergency. Request
lists and the breakdown event are fixture metadata, replayed by API scripts.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import UsageError
from .instance import ProblemInstance, instance_from_document

FIXTURE_DIR_ENV = "ROUTELAB_FIXTURES"

# Planar point chosen so the optimal toy3 tour D->A->B->C->D costs exactly
# 30 + sqrt(200) = 44.142135623730951 while d(D,A)=d(A,B)=d(B,C)=10 and
# d(D,B)=sqrt(200) still hold.
_TOY3_C = ((30 + math.sqrt(700)) / 4, (30 - math.sqrt(700)) / 4)


def _doc(name, vehicles, depot, horizon, customers):
    return {
        "name": name,
        "vehicle_count": vehicles,
        "depot": {"x": depot[0], "y": depot[1], "open": horizon[0], "close": horizon[1]},
        "customers": [
            {"id": cid, "x": x, "y": y, "open": o, "close": c, "service": s}
            for cid, x, y, o, c, s in customers
        ],
    }


TOY3_DOC = _doc(
    "toy3", 2, (0.0, 0.0), (0.0, 1000.0),
    [
        ("A", 0.0, 10.0, 0.0, 1000.0, 0.0),
        ("B", 10.0, 10.0, 0.0, 1000.0, 0.0),
        ("C", _TOY3_C[0], _TOY3_C[1], 0.0, 1000.0, 0.0),
    ],
)

SQUARE3_DOC = _doc(
    "square3", 2, (0.0, 0.0), (0.0, 1000.0),
    [
        ("A", 0.0, 10.0, 0.0, 1000.0, 0.0),
        ("B", 10.0, 10.0, 0.0, 1000.0, 0.0),
        ("C", 10.0, 0.0, 0.0, 1000.0, 0.0),
    ],
)

# Three geographic clusters of four customers around a central depot; windows
# are staggered but generous so many distinct routings are feasible.
_STUDY12_CUSTOMERS = [
    ("A", 20.0, 80.0, 0.0, 200.0, 10.0),
    ("B", 10.0, 70.0, 40.0, 240.0, 10.0),
    ("C", 20.0, 60.0, 60.0, 260.0, 15.0),
    ("D", 30.0, 75.0, 0.0, 300.0, 5.0),
    ("E", 85.0, 60.0, 30.0, 250.0, 10.0),
    ("F", 90.0, 45.0, 60.0, 300.0, 10.0),
    ("G", 80.0, 35.0, 0.0, 280.0, 15.0),
    ("H", 95.0, 55.0, 100.0, 350.0, 5.0),
    ("I", 40.0, 15.0, 0.0, 220.0, 10.0),
    ("J", 55.0, 10.0, 50.0, 280.0, 10.0),
    ("K", 30.0, 20.0, 20.0, 260.0, 5.0),
    ("L", 60.0, 20.0, 120.0, 380.0, 10.0),
]

STUDY12_DOC = _doc("study12", 3, (50.0, 50.0), (0.0, 480.0), _STUDY12_CUSTOMERS)

SCENARIO2_DOC = _doc(
    "scenario2", 3, (50.0, 50.0), (0.0, 480.0),
    [
        (cid, x, y, max(0.0, o - 10.0), c + 20.0, s)
        for cid, x, y, o, c, s in _STUDY12_CUSTOMERS
    ],
)

SCENARIO3_DOC = _doc(
    "scenario3", 3, (50.0, 50.0), (0.0, 480.0),
    [(cid, x, y, 0.0, 460.0, s) for cid, x, y, o, c, s in _STUDY12_CUSTOMERS],
)

# K and L carry narrow clashing windows 60 apart: either alone is serviceable
# but no single vehicle can serve both, so locking them onto one vehicle after
# the breakdown makes re-optimisation provably impossible.
SCENARIO4_DOC = _doc(
    "scenario4", 3, (50.0, 50.0), (0.0, 480.0),
    [
        ("A", 20.0, 80.0, 0.0, 440.0, 10.0),
        ("B", 10.0, 70.0, 0.0, 440.0, 10.0),
        ("C", 20.0, 60.0, 0.0, 440.0, 10.0),
        ("D", 30.0, 75.0, 0.0, 440.0, 5.0),
        ("E", 85.0, 60.0, 0.0, 440.0, 10.0),
        ("F", 90.0, 45.0, 0.0, 440.0, 10.0),
        ("G", 80.0, 35.0, 0.0, 440.0, 15.0),
        ("H", 95.0, 55.0, 0.0, 440.0, 5.0),
        ("I", 40.0, 15.0, 0.0, 440.0, 10.0),
        ("J", 55.0, 10.0, 0.0, 440.0, 10.0),
        ("K", 20.0, 20.0, 100.0, 140.0, 30.0),
        ("L", 80.0, 20.0, 100.0, 140.0, 30.0),
    ],
)


@dataclass(frozen=True)
class Fixture:
    name: str
    document: dict
    seed_policy: str = "best_first"  # "best_first" | "degraded"
    seed_count: int = 3
    margin: float = 0.30
    requests: tuple[dict, ...] = ()
    breakdown_vehicle: int | None = None
    lock_all_after_breakdown: bool = False
    description: str = ""

    def instance(self) -> ProblemInstance:
        return instance_from_document(self.document)

    def metadata(self) -> dict:
        return {
            "name": self.name,
            "seed_policy": self.seed_policy,
            "seed_count": self.seed_count,
            "margin": self.margin,
            "requests": list(self.requests),
            "breakdown_vehicle": self.breakdown_vehicle,
            "lock_all_after_breakdown": self.lock_all_after_breakdown,
            "description": self.description,
        }


# "Customer X requires electrician N" becomes a lock; the harder "must not be
# serviced by" request has no direct constraint and is encoded as a lock to a
# different vehicle, the strategy study participants settled on.
_SCENARIO3_REQUESTS = (
    {"kind": "lock", "customer": "C", "vehicle": 1,
     "note": "customer C requires electrician 2"},
    {"kind": "lock", "customer": "H", "vehicle": 2,
     "note": "customer H requires electrician 3"},
    {"kind": "order", "before": "A", "after": "B",
     "note": "goods for B are picked up at A first"},
    {"kind": "order", "before": "I", "after": "J",
     "note": "J must be serviced after I"},
    {"kind": "exclude", "customer": "E", "vehicle": 0, "encode_as_lock_to": 1,
     "note": "customer E must not be serviced by electrician 1"},
)

_BUILTIN = {
    "toy3": Fixture(
        "toy3", TOY3_DOC, seed_count=3, margin=0.30,
        description="3 customers, 2 vehicles; optimum 44.142136 via D-A-B-C-D",
    ),
    "square3": Fixture(
        "square3", SQUARE3_DOC, seed_count=3, margin=0.30,
        description="clean 10x10 square; split D-A-B-D / D-C-D costs 54.142136",
    ),
    "study12": Fixture(
        "study12", STUDY12_DOC, seed_count=3, margin=0.30,
        description="desk-scale instance: 3 vehicles, 12 clustered customers",
    ),
    "scenario1": Fixture(
        "scenario1", STUDY12_DOC, seed_policy="degraded", seed_count=3, margin=0.30,
        description="minimise distance from deliberately degraded seeds",
    ),
    "scenario2": Fixture(
        "scenario2", SCENARIO2_DOC, seed_policy="degraded", seed_count=3, margin=0.30,
        description="distance plus manual workload balancing",
    ),
    "scenario3": Fixture(
        "scenario3", SCENARIO3_DOC, seed_count=3, margin=0.05,
        requests=_SCENARIO3_REQUESTS,
        description="customer request list satisfied with locks and orders",
    ),
    "scenario4": Fixture(
        "scenario4", SCENARIO4_DOC, seed_count=1, margin=0.05,
        breakdown_vehicle=2, lock_all_after_breakdown=True,
        description="truck breakdown; over-locking all customers conflicts",
    ),
}


def _directory_fixtures() -> dict[str, Fixture]:
    directory = os.environ.get(FIXTURE_DIR_ENV)
    if not directory:
        return {}
    out = {}
    for path in sorted(Path(directory).glob("*.json")):
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
            name = str(doc.get("name") or path.stem)
            out[name] = Fixture(name, doc, description=f"loaded from {path}")
        except (OSError, ValueError):
            continue
    return out


def fixture_names() -> list[str]:
    return sorted(set(_BUILTIN) | set(_directory_fixtures()))


def get_fixture(name: str) -> Fixture:
    fixtures = {**_directory_fixtures(), **_BUILTIN}
    try:
        return fixtures[name]
    except KeyError:
        raise UsageError(f"unknown fixture {name!r}; available: {fixture_names()}") from None


def fixture_instance(name: str) -> ProblemInstance:
    return get_fixture(name).instance()
