"""Filesystem-backed job lifecycle with a fixed retention window.

Each job owns a directory holding its input, config, metadata, and (once
done) output and warnings. Retention is stamped at completion; purging
removes the stored input/output but keeps the metadata so a second purge is a
no-op and status queries still resolve.
"""
from __future__ import annotations

import json
import logging
import shutil
import threading
import time
import uuid
from dataclasses import asdict, dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Optional

logger = logging.getLogger(__name__)

from ..errors import JobStateError, LxError
from ..taxonomy import Taxonomy
from .engine import AnalysisConfig, analyze_rows, ingest_csv
from .notify import Notifier, NoopNotifier

DEFAULT_RETENTION_DAYS = 7.0
_DAY_SECONDS = 86400.0


class JobState(str, Enum):
    PENDING = "pending"
    RUNNING = "running"
    DONE = "done"
    FAILED = "failed"


_ALLOWED_TRANSITIONS = {
    JobState.PENDING: {JobState.RUNNING},
    JobState.RUNNING: {JobState.DONE, JobState.FAILED},
    JobState.DONE: set(),
    JobState.FAILED: set(),
}


@dataclass
class Job:
    job_id: str
    state: JobState
    created_at: float
    completed_at: Optional[float] = None
    retention_deadline: Optional[float] = None
    row_count: int = 0
    warning_count: int = 0
    error_detail: Optional[str] = None
    purged: bool = False

    def transition(self, new_state: JobState) -> None:
        if new_state not in _ALLOWED_TRANSITIONS[self.state]:
            raise JobStateError(f"cannot move job from {self.state.value} to {new_state.value}")
        self.state = new_state

    def to_dict(self) -> dict:
        d = asdict(self)
        d["state"] = self.state.value
        return d

    @classmethod
    def from_dict(cls, raw: dict) -> "Job":
        raw = dict(raw)
        raw["state"] = JobState(raw["state"])
        return cls(**raw)


class JobStore:
    """One directory per job under `root`; `clock` is injectable for tests."""

    def __init__(
        self,
        root: Path | str,
        retention_days: float = DEFAULT_RETENTION_DAYS,
        clock: Callable[[], float] = time.time,
        notifier: Optional[Notifier] = None,
        max_upload_bytes: int = 1024 * 1024,
    ):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.retention_days = retention_days
        self.clock = clock
        self.notifier = notifier or NoopNotifier()
        self.max_upload_bytes = max_upload_bytes

    # -- paths --

    def _dir(self, job_id: str) -> Path:
        return self.root / job_id

    def _meta_path(self, job_id: str) -> Path:
        return self._dir(job_id) / "meta.json"

    def input_path(self, job_id: str) -> Path:
        return self._dir(job_id) / "input.csv"

    def result_path(self, job_id: str) -> Path:
        return self._dir(job_id) / "output.csv"

    def warnings_path(self, job_id: str) -> Path:
        return self._dir(job_id) / "warnings.json"

    # -- persistence --

    def save(self, job: Job) -> None:
        # atomic replace: status reads from other threads never see a torn file
        path = self._meta_path(job.job_id)
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(job.to_dict(), indent=2))
        tmp.replace(path)

    def get(self, job_id: str) -> Job:
        path = self._meta_path(job_id)
        if not path.exists():
            raise KeyError(job_id)
        return Job.from_dict(json.loads(path.read_text()))

    def list_ids(self) -> list[str]:
        return sorted(p.name for p in self.root.iterdir() if (p / "meta.json").exists())

    # -- lifecycle --

    def create(self, input_bytes: bytes, config: AnalysisConfig) -> Job:
        job = Job(job_id=uuid.uuid4().hex, state=JobState.PENDING, created_at=self.clock())
        self._dir(job.job_id).mkdir(parents=True)
        self.input_path(job.job_id).write_bytes(input_bytes)
        config_dict = {
            "id_column": config.id_column,
            "text_column": config.text_column,
            "selected_perceptions": list(config.selected_perceptions),
            "backend": asdict(config.backend),
            "include_word_count": config.include_word_count,
            "include_text": config.include_text,
            "include_aspect_columns": config.include_aspect_columns,
            "lenient": config.lenient,
        }
        (self._dir(job.job_id) / "config.json").write_text(json.dumps(config_dict, indent=2))
        self.save(job)
        return job

    def run(self, job_id: str, taxonomy: Optional[Taxonomy] = None) -> Job:
        """Execute a pending job to completion (done or failed)."""
        job = self.get(job_id)
        job.transition(JobState.RUNNING)
        self.save(job)
        try:
            config = AnalysisConfig.from_json((self._dir(job_id) / "config.json").read_text())
            ingest = ingest_csv(
                self.input_path(job_id).read_bytes(), config, self.max_upload_bytes
            )
            output = analyze_rows(ingest.rows, config, taxonomy)
            self.result_path(job_id).write_text(output.to_csv())
            all_warnings = list(ingest.issues) + list(output.warnings)
            self.warnings_path(job_id).write_text(json.dumps(all_warnings, indent=2))
            job.row_count = len(output.rows)
            job.warning_count = len(all_warnings)
            job.transition(JobState.DONE)
        except LxError as exc:
            job.error_detail = f"{type(exc).__name__}: {exc}"
            job.transition(JobState.FAILED)
        job.completed_at = self.clock()
        job.retention_deadline = job.completed_at + self.retention_days * _DAY_SECONDS
        self.save(job)
        self.notifier.notify(job.job_id, job.state.value)
        return job

    def delete(self, job_id: str) -> None:
        path = self._dir(job_id)
        if not path.exists():
            raise KeyError(job_id)
        shutil.rmtree(path)

    def purge_expired(self, now: Optional[float] = None) -> list[str]:
        """Remove stored input/output of every terminal job past its
        retention deadline. Never touches pending/running jobs; calling twice
        is a no-op the second time."""
        now = self.clock() if now is None else now
        purged = []
        for job_id in self.list_ids():
            job = self.get(job_id)
            if job.purged or job.state not in (JobState.DONE, JobState.FAILED):
                continue
            if job.retention_deadline is None or now <= job.retention_deadline:
                continue
            for path in (self.input_path(job_id), self.result_path(job_id),
                         self.warnings_path(job_id)):
                path.unlink(missing_ok=True)
            job.purged = True
            self.save(job)
            purged.append(job_id)
        return purged


class PurgeScheduler:
    """Runs purge_expired on a fixed interval in a daemon thread."""

    def __init__(self, store: JobStore, interval_seconds: float = 3600.0):
        self.store = store
        self.interval_seconds = interval_seconds
        self._stop = threading.Event()
        self._thread: Optional[threading.Thread] = None

    def start(self) -> None:
        if self._thread is not None:
            return
        self._thread = threading.Thread(target=self._loop, daemon=True)
        self._thread.start()

    def _loop(self) -> None:
        while not self._stop.wait(self.interval_seconds):
            try:
                purged = self.store.purge_expired()
                if purged:
                    logger.info("purged %d expired job(s)", len(purged))
            except Exception:
                logger.exception("scheduled purge failed")

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5.0)
            self._thread = None
