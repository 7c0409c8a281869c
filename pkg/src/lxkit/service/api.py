"""HTTP surface over the job store.

POST /jobs            multipart (file + config JSON)  -> {"job_id"}
GET  /jobs/{id}       -> {state, row_count, warnings, retention_deadline, ...}
GET  /jobs/{id}/result CSV attachment; 404 until done
DELETE /jobs/{id}

A bearer token (LX_AUTH_TOKEN) guards every route when configured.
"""
from __future__ import annotations

import os
from contextlib import asynccontextmanager
from pathlib import Path
from typing import Optional

from fastapi import BackgroundTasks, Depends, FastAPI, Form, HTTPException, Request, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import FileResponse, JSONResponse

from ..errors import ConfigError
from ..taxonomy import Taxonomy
from .engine import AnalysisConfig
from .jobs import JobStore, PurgeScheduler

DATA_DIR_ENV = "LX_DATA_DIR"
RETENTION_ENV = "LX_RETENTION_DAYS"
AUTH_ENV = "LX_AUTH_TOKEN"


def create_app(
    store: JobStore,
    auth_token: Optional[str] = None,
    taxonomy: Optional[Taxonomy] = None,
    purge_interval_seconds: float = 3600.0,
) -> FastAPI:
    scheduler = PurgeScheduler(store, purge_interval_seconds)

    @asynccontextmanager
    async def lifespan(_: FastAPI):
        scheduler.start()
        try:
            yield
        finally:
            scheduler.stop()

    app = FastAPI(title="lx batch analysis service", lifespan=lifespan)
    app.state.store = store
    app.state.purge_scheduler = scheduler
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def check_auth(request: Request) -> None:
        if auth_token is None:
            return
        header = request.headers.get("authorization", "")
        if header != f"Bearer {auth_token}":
            raise HTTPException(status_code=401, detail="missing or invalid bearer token")

    def job_or_404(job_id: str):
        try:
            return store.get(job_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"no job {job_id}") from None

    @app.post("/jobs", dependencies=[Depends(check_auth)])
    async def submit_job(
        background: BackgroundTasks,
        file: UploadFile,
        config: str = Form(...),
    ) -> JSONResponse:
        try:
            parsed = AnalysisConfig.from_json(config)
        except ConfigError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        data = await file.read()
        if len(data) > store.max_upload_bytes:
            raise HTTPException(
                status_code=413,
                detail=f"upload exceeds {store.max_upload_bytes} bytes",
            )
        job = store.create(data, parsed)
        background.add_task(store.run, job.job_id, taxonomy)
        return JSONResponse({"job_id": job.job_id}, status_code=202)

    @app.get("/jobs/{job_id}", dependencies=[Depends(check_auth)])
    def job_status(job_id: str) -> dict:
        job = job_or_404(job_id)
        return {
            "job_id": job.job_id,
            "state": job.state.value,
            "row_count": job.row_count,
            "warnings": job.warning_count,
            "retention_deadline": job.retention_deadline,
            "error_detail": job.error_detail,
        }

    @app.get("/jobs/{job_id}/result", dependencies=[Depends(check_auth)])
    def job_result(job_id: str) -> FileResponse:
        job = job_or_404(job_id)
        path = store.result_path(job_id)
        if job.state.value != "done" or job.purged or not path.exists():
            raise HTTPException(status_code=404, detail="result not available")
        return FileResponse(
            path, media_type="text/csv", filename=f"{job_id}.csv"
        )

    @app.delete("/jobs/{job_id}", dependencies=[Depends(check_auth)])
    def delete_job(job_id: str) -> dict:
        job_or_404(job_id)
        store.delete(job_id)
        return {"deleted": job_id}

    return app


def create_app_from_env() -> FastAPI:
    store = JobStore(
        root=Path(os.environ.get(DATA_DIR_ENV, "./lx-data")),
        retention_days=float(os.environ.get(RETENTION_ENV, "7")),
    )
    return create_app(store, auth_token=os.environ.get(AUTH_ENV))
