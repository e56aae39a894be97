"""Provenance: append-only solution history, gallery annotations, session persistence.

Records are immutable snapshots linked by derivation arcs (parents). Only the
bookmark flag and the name may change after a record is stored. History is
never pruned; a session cap guards memory with an explicit error rather than
silent eviction.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable

from .constraints import SideConstraints
from .errors import ParseError, UsageError, ValidationError
from .instance import ProblemInstance, instance_from_document, instance_to_document
from .solution import Solution, solution_from_document, solution_to_document

SESSION_DOCUMENT_VERSION = 1
HISTORY_CAP = 10_000

ORIGINS = ("seeded", "manual_edit", "constraint_change", "reoptimised", "loaded_copy")


@dataclass
class SolutionRecord:
    record_id: int
    solution: Solution
    constraints: SideConstraints
    parents: tuple[int, ...]
    origin: str
    name: str
    bookmarked: bool = False
    created_at: float = 0.0

    def to_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "name": self.name,
            "bookmarked": self.bookmarked,
            "origin": self.origin,
            "parents": list(self.parents),
            "created_at": self.created_at,
            "solution": solution_to_document(self.solution),
            "constraints": self.constraints.to_dict(),
        }


class HistoryGraph:
    """Append-only record store with gallery ordering.

    Gallery membership is bookmarked-or-seeded; the gallery order is explicit
    and survives save/load.
    """

    def __init__(self, id_allocator: Callable[[], int] | None = None):
        self.records: list[SolutionRecord] = []
        self._by_id: dict[int, SolutionRecord] = {}
        self.gallery_order: list[int] = []
        self._next_id = 1
        self._allocate = id_allocator

    def _new_id(self) -> int:
        if self._allocate is not None:
            return self._allocate()
        rid = self._next_id
        self._next_id += 1
        return rid

    def __len__(self) -> int:
        return len(self.records)

    def get(self, record_id: int) -> SolutionRecord:
        record = self._by_id.get(record_id)
        if record is None:
            raise UsageError(f"unknown record {record_id}")
        return record

    def append(
        self,
        solution: Solution,
        constraints: SideConstraints,
        parents: Iterable[int] = (),
        origin: str = "manual_edit",
        name: str | None = None,
    ) -> int:
        if len(self.records) >= HISTORY_CAP:
            raise ValidationError(f"session history cap of {HISTORY_CAP} records reached")
        if origin not in ORIGINS:
            raise UsageError(f"unknown origin {origin!r}")
        parent_ids = tuple(sorted(set(int(p) for p in parents)))
        for p in parent_ids:
            if p not in self._by_id:
                raise UsageError(f"unknown parent record {p}")
        record = SolutionRecord(
            record_id=self._new_id(),
            solution=solution,  # Solution and SideConstraints are immutable snapshots
            constraints=constraints,
            parents=parent_ids,
            origin=origin,
            name=name or f"Solution {len(self.records) + 1}",
            created_at=time.time(),
        )
        self.records.append(record)
        self._by_id[record.record_id] = record
        if origin == "seeded":
            self.gallery_order.append(record.record_id)
        return record.record_id

    # -- annotations ----------------------------------------------------------

    def bookmark(self, record_id: int, flag: bool) -> SolutionRecord:
        record = self.get(record_id)
        record.bookmarked = bool(flag)
        in_gallery = record_id in self.gallery_order
        if (record.bookmarked or record.origin == "seeded") and not in_gallery:
            self.gallery_order.append(record_id)
        elif not record.bookmarked and record.origin != "seeded" and in_gallery:
            self.gallery_order.remove(record_id)
        return record

    def rename(self, record_id: int, name: str) -> SolutionRecord:
        if not name or not name.strip():
            raise UsageError("a record name cannot be empty")
        record = self.get(record_id)
        record.name = name
        return record

    # -- gallery ----------------------------------------------------------------

    def gallery(self) -> list[SolutionRecord]:
        return [self._by_id[rid] for rid in self.gallery_order]

    def reorder_gallery_by_objective(self) -> list[SolutionRecord]:
        self.gallery_order.sort(key=lambda rid: (self._by_id[rid].solution.objective, rid))
        return self.gallery()

    def reorder_gallery_by_workload(self) -> list[SolutionRecord]:
        def imbalance(rid: int):
            counts = [len(r.visits) for r in self._by_id[rid].solution.routes]
            return (max(counts) - min(counts) if counts else 0, self._by_id[rid].solution.objective, rid)

        self.gallery_order.sort(key=imbalance)
        return self.gallery()

    def move_gallery_position(self, record_id: int, position: int) -> list[SolutionRecord]:
        if record_id not in self.gallery_order:
            raise UsageError(f"record {record_id} is not in the gallery")
        if not (0 <= position < len(self.gallery_order)):
            raise UsageError(f"gallery position {position} out of range")
        self.gallery_order.remove(record_id)
        self.gallery_order.insert(position, record_id)
        return self.gallery()

    def set_gallery_order(self, order: list[int]) -> list[SolutionRecord]:
        if sorted(order) != sorted(self.gallery_order):
            raise UsageError("gallery order must be a permutation of the current gallery")
        self.gallery_order = list(order)
        return self.gallery()

    # -- histogram ------------------------------------------------------------

    def histogram_data(self) -> list[dict]:
        return [
            {
                "record_id": r.record_id,
                "objective": r.solution.objective,
                "parent_arcs": [[p, r.record_id] for p in r.parents],
                "name": r.name,
                "bookmarked": r.bookmarked,
                "origin": r.origin,
                "feasible": r.solution.feasible,
            }
            for r in self.records
        ]


# ---------------------------------------------------------------------------
# Session persistence
# ---------------------------------------------------------------------------

def save_session(instance: ProblemInstance, history: HistoryGraph) -> dict:
    return {
        "version": SESSION_DOCUMENT_VERSION,
        "instance": instance_to_document(instance),
        "records": [r.to_dict() for r in history.records],
        "gallery_order": list(history.gallery_order),
    }


def serialize_session(instance: ProblemInstance, history: HistoryGraph) -> str:
    return json.dumps(save_session(instance, history), indent=2)


def load_session(doc: dict | str) -> tuple[ProblemInstance, HistoryGraph]:
    if isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid session document: {exc.msg}", location=f"line {exc.lineno}") from None
    if not isinstance(doc, dict):
        raise ParseError("session document root must be an object")
    version = doc.get("version")
    if version != SESSION_DOCUMENT_VERSION:
        raise ParseError(
            f"unsupported session document version {version!r} "
            f"(expected {SESSION_DOCUMENT_VERSION})",
            location="version",
        )
    for key in ("instance", "records", "gallery_order"):
        if key not in doc:
            raise ParseError(f"missing field {key!r}", location="session document")
    instance = instance_from_document(doc["instance"])
    history = HistoryGraph()
    for pos, rdoc in enumerate(doc["records"]):
        for key in ("record_id", "name", "origin", "parents", "solution", "constraints"):
            if key not in rdoc:
                raise ParseError(f"missing field {key!r}", location=f"records[{pos}]")
        constraints = SideConstraints.from_dict(rdoc["constraints"], instance)
        record = SolutionRecord(
            record_id=int(rdoc["record_id"]),
            solution=solution_from_document(rdoc["solution"], instance),
            constraints=constraints,
            parents=tuple(int(p) for p in rdoc["parents"]),
            origin=rdoc["origin"],
            name=rdoc["name"],
            bookmarked=bool(rdoc.get("bookmarked", False)),
            created_at=float(rdoc.get("created_at", 0.0)),
        )
        if history.records and record.record_id <= history.records[-1].record_id:
            raise ParseError("record ids must be strictly increasing", location=f"records[{pos}]")
        history.records.append(record)
        history._by_id[record.record_id] = record
    if history.records:
        history._next_id = history.records[-1].record_id + 1
    history.gallery_order = [int(r) for r in doc["gallery_order"]]
    for rid in history.gallery_order:
        if rid not in history._by_id:
            raise ParseError(f"gallery order references unknown record {rid}", location="gallery_order")
    return instance, history
