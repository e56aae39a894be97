"""HTTP service: session lifecycle, derivation edits, re-optimisation jobs, history.

One session wraps one instance, its history graph and two viewports. Edits are
synchronous and return the freshly appended record; only re-optimisation runs
asynchronously, with progress streamed as server-sent events (long-poll
fallback via ?mode=poll). Record ids are allocated from a server-wide counter
so /records/{id} routes are unambiguous across sessions.
"""

from __future__ import annotations

import itertools
import json
import os
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel

from .constraints import SideConstraints
from .errors import (
    ConstraintConflict,
    InfeasibleConstraints,
    ParseError,
    RouteLabError,
    UsageError,
    ValidationError,
)
from .fixtures import Fixture, fixture_names, get_fixture
from .instance import ProblemInstance, instance_from_document, instance_to_document
from .provenance import HistoryGraph, SolutionRecord, save_session
from .solution import Solution, build_solution, solution_to_document, workload_stats
from .solver import (
    IMPROVED,
    JobManager,
    SearchConfig,
    SolveBudget,
    UNCHANGED,
    generate_diverse,
    reoptimise,
)

VIEWPORTS = ("left", "right")


@dataclass
class ServiceConfig:
    reoptimise_seconds: float = 3.0
    seed_seconds: float = 3.0
    search: SearchConfig = field(default_factory=SearchConfig)

    @staticmethod
    def from_env() -> "ServiceConfig":
        return ServiceConfig(
            reoptimise_seconds=float(os.environ.get("ROUTELAB_TIME_BUDGET", "3.0")),
            seed_seconds=float(os.environ.get("ROUTELAB_SEED_TIME", "3.0")),
        )


class Session:
    def __init__(self, session_id: str, instance: ProblemInstance,
                 fixture: Fixture | None, allocator):
        self.session_id = session_id
        self.instance = instance
        self.fixture = fixture
        self.history = HistoryGraph(id_allocator=allocator)
        self.viewports: dict[str, int | None] = {"left": None, "right": None}
        self.active_jobs: dict[str, str | None] = {"left": None, "right": None}
        self.lock = threading.RLock()
        self.seed_note: str | None = None


# -- request bodies ----------------------------------------------------------

class CreateSessionBody(BaseModel):
    fixture: str | None = None
    instance: dict | None = None
    seed_count: int | None = None
    margin: float | None = None
    seed: int = 0
    seed_policy: str | None = None


class LoadBody(BaseModel):
    record_id: int


class EditBody(BaseModel):
    customer: str
    target_vehicle: int
    target_position: int


class ConstraintBody(BaseModel):
    action: str  # add_lock | remove_lock | add_order | remove_order
    customer: str | None = None
    vehicle: int | None = None
    before: str | None = None
    after: str | None = None


class ReoptimiseBody(BaseModel):
    time_limit: float | None = None
    iteration_limit: int | None = None
    seed: int = 0


class GalleryBody(BaseModel):
    order: list[int] | None = None
    sort: str | None = None  # "objective" | "workload"
    move: dict | None = None  # {"record_id": .., "position": ..}


class BookmarkBody(BaseModel):
    bookmarked: bool = True


class RenameBody(BaseModel):
    name: str


# -- payload shaping -----------------------------------------------------------

def record_payload(instance: ProblemInstance, record: SolutionRecord) -> dict:
    solution = record.solution
    stats = workload_stats(instance, solution)
    schedule = []
    for route in solution.routes:
        visits = []
        for cid, vt in zip(route.visits, route.timing.visits):
            cust = instance.customer(cid)
            visits.append({
                "customer": cid,
                "arrival": vt.arrival,
                "service_start": vt.service_start,
                "service_finish": vt.service_finish,
                "window_open": cust.window_open,
                "window_close": cust.window_close,
            })
        schedule.append({
            "vehicle": route.vehicle,
            "departure": route.timing.departure,
            "return_time": route.timing.return_time,
            "visits": visits,
        })
    violations = [v.to_dict() for v in solution.violations]
    for v in violations:
        who = ", ".join(v["customers"])
        v["display"] = (
            f"{v['kind']} ({who})" if v["magnitude"] is None
            else f"{v['kind']} ({who}): {v['magnitude']:.2f}"
        )
    return {
        "record_id": record.record_id,
        "name": record.name,
        "origin": record.origin,
        "parents": list(record.parents),
        "bookmarked": record.bookmarked,
        "created_at": record.created_at,
        "objective": solution.objective,
        "objective_display": f"{solution.objective:.2f}",
        "feasible": solution.feasible,
        "routes": solution.visit_lists(),
        "violations": violations,
        "constraints": record.constraints.to_dict(),
        "workload": stats.to_dict(),
        "schedule": schedule,
        "solution": solution_to_document(solution, record.constraints),
    }


def _apply_move(solution: Solution, instance: ProblemInstance,
                customer: str, target_vehicle: int, target_position: int) -> list[list[str]]:
    if not instance.has_customer(customer):
        raise UsageError(f"unknown customer {customer!r}")
    if not (0 <= target_vehicle < instance.vehicle_count):
        raise UsageError(f"vehicle {target_vehicle} out of range")
    visit_lists = solution.visit_lists()
    for route in visit_lists:
        if customer in route:
            route.remove(customer)
            break
    target = visit_lists[target_vehicle]
    if not (0 <= target_position <= len(target)):
        raise UsageError(
            f"position {target_position} out of range for vehicle {target_vehicle} "
            f"(route has {len(target)} visits)"
        )
    target.insert(target_position, customer)
    return visit_lists


# -- application ---------------------------------------------------------------

def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig.from_env()
    app = FastAPI(title="routelab", version="0.1.0")
    sessions: dict[str, Session] = {}
    record_index: dict[int, str] = {}  # record_id -> session_id
    jobs = JobManager()
    counter = itertools.count(1)
    counter_lock = threading.Lock()

    def allocate_record_id() -> int:
        with counter_lock:
            return next(counter)

    def get_session(session_id: str) -> Session:
        session = sessions.get(session_id)
        if session is None:
            raise UsageError(f"unknown session {session_id!r}")
        return session

    def get_viewport(side: str) -> str:
        if side not in VIEWPORTS:
            raise UsageError(f"unknown viewport {side!r} (use left or right)")
        return side

    def session_of_record(record_id: int) -> Session:
        session_id = record_index.get(record_id)
        if session_id is None:
            raise UsageError(f"unknown record {record_id}")
        return sessions[session_id]

    # -- error mapping -----------------------------------------------------------

    @app.exception_handler(RouteLabError)
    async def _handle_routelab_error(request: Request, exc: RouteLabError):
        if isinstance(exc, ConstraintConflict):
            return JSONResponse(status_code=409, content={"error": exc.report, "conflict": True})
        if isinstance(exc, InfeasibleConstraints):
            return JSONResponse(status_code=409, content={"error": str(exc), "witness": exc.witness})
        if isinstance(exc, UsageError) and str(exc).startswith("unknown"):
            return JSONResponse(status_code=404, content={"error": str(exc)})
        if isinstance(exc, (ParseError, ValidationError, UsageError)):
            return JSONResponse(status_code=400, content={"error": str(exc)})
        return JSONResponse(status_code=500, content={"error": str(exc)})

    # -- sessions ---------------------------------------------------------------

    @app.get("/fixtures")
    def list_fixtures():
        out = []
        for name in fixture_names():
            fixture = get_fixture(name)
            out.append(fixture.metadata())
        return {"fixtures": out}

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        fixture = None
        if body.fixture is not None:
            fixture = get_fixture(body.fixture)
            instance = fixture.instance()
        elif body.instance is not None:
            instance = instance_from_document(body.instance)
        else:
            raise UsageError("provide either a fixture name or an instance document")

        seed_count = body.seed_count if body.seed_count is not None else (
            fixture.seed_count if fixture else 3
        )
        margin = body.margin if body.margin is not None else (
            fixture.margin if fixture else 0.30
        )
        policy = body.seed_policy or (fixture.seed_policy if fixture else "best_first")

        session = Session(uuid.uuid4().hex[:12], instance, fixture, allocate_record_id)
        budget = SolveBudget(wall_time_limit=config.seed_seconds, random_seed=body.seed)
        result = generate_diverse(
            instance, SideConstraints.empty(), seed_count, margin, budget,
            config=config.search, selection=policy if policy == "degraded" else "best_first",
        )
        with session.lock:
            for solution in result.solutions:
                rid = session.history.append(
                    solution, SideConstraints.empty(), parents=(), origin="seeded"
                )
                record_index[rid] = session.session_id
            session.seed_note = result.note
            if session.history.records:
                session.viewports["left"] = session.history.records[0].record_id
        sessions[session.session_id] = session
        return {
            "session_id": session.session_id,
            "fixture": fixture.metadata() if fixture else None,
            "instance": instance_to_document(instance),
            "records": [record_payload(instance, r) for r in session.history.records],
            "viewports": session.viewports,
            "note": result.note,
        }

    @app.get("/sessions/{session_id}")
    def get_session_summary(session_id: str):
        session = get_session(session_id)
        with session.lock:
            return {
                "session_id": session.session_id,
                "fixture": session.fixture.metadata() if session.fixture else None,
                "instance": instance_to_document(session.instance),
                "viewports": session.viewports,
                "active_jobs": session.active_jobs,
                "record_count": len(session.history),
                "note": session.seed_note,
            }

    @app.get("/sessions/{session_id}/document")
    def export_session(session_id: str):
        session = get_session(session_id)
        with session.lock:
            return save_session(session.instance, session.history)

    # -- viewports -----------------------------------------------------------------

    @app.post("/sessions/{session_id}/viewports/{side}/load")
    def load_viewport(session_id: str, side: str, body: LoadBody):
        session = get_session(session_id)
        side = get_viewport(side)
        with session.lock:
            record = session.history.get(body.record_id)
            session.viewports[side] = record.record_id
            return {
                "viewport": side,
                "record": record_payload(session.instance, record),
                "viewports": session.viewports,
            }

    @app.post("/sessions/{session_id}/viewports/{side}/edit")
    def edit_solution(session_id: str, side: str, body: EditBody):
        session = get_session(session_id)
        side = get_viewport(side)
        with session.lock:
            rid = session.viewports[side]
            if rid is None:
                raise UsageError(f"no record loaded in viewport {side}")
            parent = session.history.get(rid)
            visit_lists = _apply_move(
                parent.solution, session.instance,
                body.customer, body.target_vehicle, body.target_position,
            )
            solution = build_solution(session.instance, visit_lists, parent.constraints)
            child = session.history.append(
                solution, parent.constraints, parents=(rid,), origin="manual_edit"
            )
            record_index[child] = session.session_id
            session.viewports[side] = child
            return {
                "viewport": side,
                "record": record_payload(session.instance, session.history.get(child)),
            }

    @app.post("/sessions/{session_id}/viewports/{side}/constraints")
    def edit_constraints(session_id: str, side: str, body: ConstraintBody):
        session = get_session(session_id)
        side = get_viewport(side)
        with session.lock:
            rid = session.viewports[side]
            if rid is None:
                raise UsageError(f"no record loaded in viewport {side}")
            parent = session.history.get(rid)
            store = parent.constraints
            if body.action == "add_lock":
                if body.customer is None or body.vehicle is None:
                    raise UsageError("add_lock needs customer and vehicle")
                store = store.add_lock(session.instance, body.customer, body.vehicle)
            elif body.action == "remove_lock":
                if body.customer is None:
                    raise UsageError("remove_lock needs customer")
                store = store.remove_lock(body.customer)
            elif body.action == "add_order":
                if body.before is None or body.after is None:
                    raise UsageError("add_order needs before and after")
                store = store.add_order(session.instance, body.before, body.after)
            elif body.action == "remove_order":
                if body.before is None or body.after is None:
                    raise UsageError("remove_order needs before and after")
                store = store.remove_order(body.before, body.after)
            else:
                raise UsageError(f"unknown constraint action {body.action!r}")
            solution = build_solution(
                session.instance, parent.solution.visit_lists(), store
            )
            child = session.history.append(
                solution, store, parents=(rid,), origin="constraint_change"
            )
            record_index[child] = session.session_id
            session.viewports[side] = child
            return {
                "viewport": side,
                "record": record_payload(session.instance, session.history.get(child)),
            }

    # -- re-optimisation jobs -----------------------------------------------------

    @app.post("/sessions/{session_id}/viewports/{side}/reoptimise", status_code=202)
    def start_reoptimise(session_id: str, side: str, body: ReoptimiseBody):
        session = get_session(session_id)
        side = get_viewport(side)
        with session.lock:
            if session.active_jobs.get(side):
                return JSONResponse(
                    status_code=409,
                    content={"error": f"job in progress on viewport {side}"},
                )
            rid = session.viewports[side]
            if rid is None:
                raise UsageError(f"no record loaded in viewport {side}")
            parent = session.history.get(rid)
            wall = body.time_limit if body.time_limit is not None else config.reoptimise_seconds
            budget = SolveBudget(
                wall_time_limit=wall,
                iteration_limit=body.iteration_limit,
                random_seed=body.seed,
            )

            def run(emit, cancel):
                return reoptimise(
                    session.instance, parent.constraints, parent.solution, budget,
                    config=config.search, progress=emit, cancel=cancel,
                )

            def on_terminal(job):
                with session.lock:
                    session.active_jobs[side] = None
                    outcome = job.outcome
                    if outcome.solution is not None and outcome.status in (
                        IMPROVED, UNCHANGED, "budget_exhausted"
                    ):
                        if outcome.status == "budget_exhausted" and (
                            outcome.solution.visit_lists() == parent.solution.visit_lists()
                        ):
                            return
                        child = session.history.append(
                            outcome.solution, parent.constraints,
                            parents=(rid,), origin="reoptimised",
                        )
                        record_index[child] = session.session_id
                        session.viewports[side] = child
                        job.context["record_id"] = child

            job = jobs.start(
                run, on_terminal,
                context={"session_id": session.session_id, "viewport": side, "parent": rid},
            )
            session.active_jobs[side] = job.job_id
            return {"job_id": job.job_id, "viewport": side, "parent": rid}

    @app.get("/jobs/{job_id}")
    def job_status(job_id: str):
        job = jobs.get(job_id)
        outcome = job.outcome
        payload = {
            "job_id": job.job_id,
            "status": job.status,
            "context": job.context,
            "events_seen": len(job.events),
        }
        if outcome is not None:
            payload["iterations"] = outcome.iterations
            payload["elapsed"] = outcome.elapsed
            payload["witness"] = outcome.infeasible_witness
            if outcome.solution is not None:
                payload["objective"] = outcome.solution.objective
        return payload

    @app.get("/jobs/{job_id}/events")
    def job_events(job_id: str, mode: str = "stream", after: int = 0, wait: float = 10.0):
        job = jobs.get(job_id)
        if mode == "poll":
            events = job.events_after(after, wait=min(wait, 30.0))
            return {
                "events": [e.to_dict() for e in events],
                "next": after + len(events),
                "terminal": job.terminal and after + len(events) >= len(job.events),
                "status": job.status,
            }

        def sse() -> Iterator[str]:
            for event in job.stream():
                yield f"data: {json.dumps(event.to_dict())}\n\n"

        return StreamingResponse(sse(), media_type="text/event-stream")

    @app.post("/jobs/{job_id}/cancel")
    def cancel_job(job_id: str):
        job = jobs.cancel(job_id)
        return {"job_id": job.job_id, "status": job.status, "cancelled": True}

    # -- history and gallery ---------------------------------------------------------

    @app.get("/sessions/{session_id}/history")
    def get_history(session_id: str):
        session = get_session(session_id)
        with session.lock:
            return {
                "histogram": session.history.histogram_data(),
                "record_count": len(session.history),
            }

    @app.get("/sessions/{session_id}/gallery")
    def get_gallery(session_id: str):
        session = get_session(session_id)
        with session.lock:
            return {
                "gallery": [
                    record_payload(session.instance, r) for r in session.history.gallery()
                ],
                "order": list(session.history.gallery_order),
            }

    @app.post("/sessions/{session_id}/gallery")
    def set_gallery(session_id: str, body: GalleryBody):
        session = get_session(session_id)
        with session.lock:
            history = session.history
            if body.sort == "objective":
                history.reorder_gallery_by_objective()
            elif body.sort == "workload":
                history.reorder_gallery_by_workload()
            elif body.sort is not None:
                raise UsageError(f"unknown gallery sort key {body.sort!r}")
            elif body.move is not None:
                history.move_gallery_position(
                    int(body.move["record_id"]), int(body.move["position"])
                )
            elif body.order is not None:
                history.set_gallery_order([int(r) for r in body.order])
            else:
                raise UsageError("provide order, sort or move")
            return {"order": list(history.gallery_order)}

    # -- record annotations ------------------------------------------------------------

    @app.get("/records/{record_id}")
    def get_record(record_id: int):
        session = session_of_record(record_id)
        with session.lock:
            record = session.history.get(record_id)
            return {"record": record_payload(session.instance, record)}

    @app.post("/records/{record_id}/bookmark")
    def bookmark_record(record_id: int, body: BookmarkBody):
        session = session_of_record(record_id)
        with session.lock:
            record = session.history.bookmark(record_id, body.bookmarked)
            return {
                "record_id": record.record_id,
                "bookmarked": record.bookmarked,
                "gallery_order": list(session.history.gallery_order),
            }

    @app.post("/records/{record_id}/rename")
    def rename_record(record_id: int, body: RenameBody):
        session = session_of_record(record_id)
        with session.lock:
            record = session.history.rename(record_id, body.name)
            return {"record_id": record.record_id, "name": record.name}

    # Static frontend, when built.
    frontend = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    if frontend.is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(frontend), html=True), name="frontend")

    return app


app = create_app()
