"""Asynchronous solve jobs with ordered progress events and cooperative cancellation."""

from __future__ import annotations

import threading
import time
import uuid
from typing import Callable, Iterator

from ..errors import UsageError
from .search import CANCELLED, PHASE_FINISHED, ProgressEvent, SolveOutcome

RUNNING = "running"


class SolveJob:
    """One solve run on its own worker thread.

    Events are appended in order and the stream ends with exactly one terminal
    event carrying the outcome status.
    """

    def __init__(self, job_id: str, context: dict | None = None):
        self.job_id = job_id
        self.context = context or {}
        self.cancel_event = threading.Event()
        self.outcome: SolveOutcome | None = None
        self.events: list[ProgressEvent] = []
        self._cond = threading.Condition()
        self._started = time.perf_counter()

    @property
    def status(self) -> str:
        return self.outcome.status if self.outcome is not None else RUNNING

    @property
    def terminal(self) -> bool:
        return self.outcome is not None

    def emit(self, event: ProgressEvent) -> None:
        with self._cond:
            self.events.append(event)
            self._cond.notify_all()

    def finish(self, outcome: SolveOutcome) -> None:
        with self._cond:
            self.outcome = outcome
            last = self.events[-1] if self.events else None
            if last is None or last.status is None:
                best = outcome.solution.objective if (
                    outcome.solution is not None and outcome.solution.feasible
                ) else None
                self.events.append(
                    ProgressEvent(
                        elapsed=time.perf_counter() - self._started,
                        iterations=outcome.iterations,
                        best_objective=best,
                        phase=PHASE_FINISHED,
                        status=outcome.status,
                    )
                )
            self._cond.notify_all()

    def cancel(self) -> None:
        self.cancel_event.set()

    def events_after(self, index: int, wait: float = 0.0) -> list[ProgressEvent]:
        """Long-poll helper: events past ``index``, waiting up to ``wait`` seconds."""
        deadline = time.perf_counter() + wait
        with self._cond:
            while len(self.events) <= index and not self.terminal:
                remaining = deadline - time.perf_counter()
                if remaining <= 0:
                    break
                self._cond.wait(remaining)
            return self.events[index:]

    def stream(self, poll: float = 0.1) -> Iterator[ProgressEvent]:
        """Yield events in order until (and including) the terminal event."""
        index = 0
        while True:
            with self._cond:
                while len(self.events) <= index and not self.terminal:
                    self._cond.wait(poll)
                batch = self.events[index:]
            for event in batch:
                index += 1
                yield event
                if event.status is not None:
                    return
            if self.terminal and index >= len(self.events):
                return


class JobManager:
    def __init__(self):
        self._jobs: dict[str, SolveJob] = {}
        self._lock = threading.Lock()

    def get(self, job_id: str) -> SolveJob:
        with self._lock:
            job = self._jobs.get(job_id)
        if job is None:
            raise UsageError(f"unknown job {job_id!r}")
        return job

    def start(
        self,
        run: Callable[[Callable[[ProgressEvent], None], threading.Event], SolveOutcome],
        on_terminal: Callable[[SolveJob], None] | None = None,
        context: dict | None = None,
    ) -> SolveJob:
        """Launch ``run`` on a worker; ``run`` receives (progress_callback, cancel_event)."""
        job = SolveJob(uuid.uuid4().hex[:12], context)
        with self._lock:
            self._jobs[job.job_id] = job

        def worker():
            try:
                outcome = run(job.emit, job.cancel_event)
            except Exception as exc:  # defensive: surface engine bugs as a terminal event
                outcome = SolveOutcome(
                    status=CANCELLED if job.cancel_event.is_set() else "failed",
                    solution=None,
                    iterations=0,
                    elapsed=time.perf_counter() - job._started,
                    infeasible_witness=f"internal error: {exc}",
                )
            job.finish(outcome)
            if on_terminal is not None:
                on_terminal(job)

        thread = threading.Thread(target=worker, name=f"solve-{job.job_id}", daemon=True)
        job.thread = thread
        thread.start()
        return job

    def cancel(self, job_id: str) -> SolveJob:
        job = self.get(job_id)
        job.cancel()
        return job


def progress_stream(job: SolveJob) -> Iterator[ProgressEvent]:
    """Ordered progress events for a job, ending with its terminal event."""
    return job.stream()
