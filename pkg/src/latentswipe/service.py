"""HTTP session service for the swipe loop.

Exposes session creation, swipe feedback, session snapshots, and
rendered images over REST/JSON. Every session persists three artifacts
under its own directory: record.json (config and metadata), events.log
(the append-only event stream shared with the replay tooling), and
subspace.npz (the exact search subspace the session ran in). A process
restart replays each persisted log against its saved config and
subspace, so active sessions survive crashes with bit-identical state.

Feedback is applied copy-then-commit: the engine step and the render of
the next candidate run on a throwaway copy of the session, and only
after both succeed does the copy replace the live state and the event
hit the log. A generator outage therefore returns 503 with the feedback
not consumed, and the client can retry the same iteration number.

Images are immutable once rendered; their ids hash the latent vector
bytes, and the PNG files live on disk next to the sessions so image
URLs stay valid across restarts.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import secrets
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import engine, eventlog, simlab, subspace
from .engine import STRATEGIES, SessionConfig
from .errors import ExternalTimeout, ExternalUnavailable, LatentSwipeError
from .genkit import Generator

MAX_D_PRIME_DEFAULT = 16
IMMUTABLE_CACHE = "public, max-age=31536000, immutable"


@dataclass
class ServiceSettings:
    data_dir: Path
    generator_kind: str = "procedural"
    generator_dim: int = 32
    external_url: str | None = None
    max_d_prime: int = MAX_D_PRIME_DEFAULT
    render_concurrency: int = 4
    pca_samples: int = simlab.DEFAULT_PCA_SAMPLES
    pca_seed: int = simlab.DEFAULT_PCA_SEED


@dataclass
class SessionEntry:
    session_id: str
    config: SessionConfig
    state: engine.SessionState
    smap: subspace.SubspaceMap
    created_at: float
    updated_at: float
    lock: threading.Lock = field(default_factory=threading.Lock)
    image_ids: dict[int, str] = field(default_factory=dict)  # shown idx -> image id

    @property
    def status(self) -> str:
        return "finished" if self.state.finished else "active"


class CreateSessionBody(BaseModel):
    strategy: str = "banditbo"
    d_prime: int
    seed: int | None = None
    budget: int | None = None


class FeedbackBody(BaseModel):
    current_won: bool
    iteration: int | None = None  # enforced for idempotency when supplied
    decision_time_ms: float | None = None


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": message})


class SessionService:
    """All mutable service state; the FastAPI app delegates here."""

    def __init__(self, settings: ServiceSettings, generator: Generator | None = None):
        self.settings = settings
        self.generator = generator or simlab.build_generator(
            settings.generator_kind, settings.generator_dim, settings.external_url
        )
        self.sessions: dict[str, SessionEntry] = {}
        self.images: dict[str, bytes] = {}
        self._maps: dict[int, subspace.SubspaceMap] = {}
        self._maps_lock = threading.Lock()
        self._sessions_lock = threading.Lock()
        self._render_slots = threading.BoundedSemaphore(
            max(1, settings.render_concurrency)
        )
        self.sessions_dir = settings.data_dir / "sessions"
        self.images_dir = settings.data_dir / "images"
        self.sessions_dir.mkdir(parents=True, exist_ok=True)
        self.images_dir.mkdir(parents=True, exist_ok=True)
        self.restore_errors: dict[str, str] = {}
        self._restore_sessions()

    # -- subspace and rendering ------------------------------------------

    def subspace_for(self, d_prime: int) -> subspace.SubspaceMap:
        with self._maps_lock:
            smap = self._maps.get(d_prime)
            if smap is None:
                latents = self.generator.sample_latents(
                    self.settings.pca_samples, seed=self.settings.pca_seed
                )
                smap = subspace.fit_subspace(latents, d_prime)
                self._maps[d_prime] = smap
        return smap

    def _render_latent(self, latent: np.ndarray) -> str:
        """Render, cache, and return the image id for a latent."""
        image_id = hashlib.sha256(
            np.ascontiguousarray(latent, dtype=np.float64).tobytes()
        ).hexdigest()[:32]
        if image_id in self.images:
            return image_id
        path = self.images_dir / f"{image_id}.png"
        if path.exists():
            self.images[image_id] = path.read_bytes()
            return image_id
        with self._render_slots:
            png = self.generator.render(latent).to_png_bytes()
        path.write_bytes(png)
        self.images[image_id] = png
        return image_id

    def _render_shown(self, entry: SessionEntry, idx: int) -> str:
        image_id = entry.image_ids.get(idx)
        if image_id is None:
            latent = subspace.inverse(entry.smap, entry.state.shown[idx].coords)
            image_id = self._render_latent(latent)
            entry.image_ids[idx] = image_id
        return image_id

    def image_bytes(self, image_id: str) -> bytes | None:
        data = self.images.get(image_id)
        if data is None:
            path = self.images_dir / f"{image_id}.png"
            if path.exists():
                data = path.read_bytes()
                self.images[image_id] = data
        return data

    # -- persistence ------------------------------------------------------

    def _session_dir(self, session_id: str) -> Path:
        return self.sessions_dir / session_id

    def _log_path(self, session_id: str) -> Path:
        return self._session_dir(session_id) / "events.log"

    def _write_record(self, entry: SessionEntry) -> None:
        record = {
            "session_id": entry.session_id,
            "status": entry.status,
            "created_at": entry.created_at,
            "updated_at": entry.updated_at,
            "d_prime": entry.smap.d_prime,
            "config": {
                "strategy": entry.config.strategy,
                "seed": entry.config.seed,
                "budget": entry.config.budget,
                "beta": entry.config.beta,
                "bandit_alpha": entry.config.bandit_alpha,
            },
        }
        path = self._session_dir(entry.session_id) / "record.json"
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(record, indent=2), encoding="utf-8")
        tmp.replace(path)

    def _restore_sessions(self) -> None:
        for record_path in sorted(self.sessions_dir.glob("*/record.json")):
            session_id = record_path.parent.name
            try:
                record = json.loads(record_path.read_text(encoding="utf-8"))
                config = SessionConfig(**record["config"])
                smap = subspace.load_map(record_path.parent / "subspace.npz")
                events = eventlog.read_events(self._log_path(session_id))
                state = eventlog.replay(config, smap, events)
                entry = SessionEntry(
                    session_id=session_id,
                    config=config,
                    state=state,
                    smap=smap,
                    created_at=record["created_at"],
                    updated_at=record["updated_at"],
                )
                self.sessions[session_id] = entry
            except (LatentSwipeError, OSError, KeyError, ValueError) as exc:
                self.restore_errors[session_id] = f"{type(exc).__name__}: {exc}"

    # -- operations -------------------------------------------------------

    def create_session(self, body: CreateSessionBody):
        if body.strategy not in STRATEGIES:
            return _error(400, f"strategy must be one of {STRATEGIES}")
        if body.d_prime < 1 or body.d_prime > self.settings.max_d_prime:
            return _error(
                400, f"d_prime must be in [1, {self.settings.max_d_prime}]"
            )
        if body.budget is not None and body.budget < 1:
            return _error(400, "budget must be positive")
        seed = body.seed if body.seed is not None else secrets.randbits(32)
        try:
            config = SessionConfig(
                strategy=body.strategy,
                seed=seed,
                **({"budget": body.budget} if body.budget is not None else {}),
            )
        except ValueError as exc:
            return _error(400, str(exc))
        try:
            smap = self.subspace_for(body.d_prime)
            state = engine.start_session(config, smap)
            session_id = secrets.token_hex(8)
            now = time.time()
            entry = SessionEntry(
                session_id=session_id,
                config=config,
                state=state,
                smap=smap,
                created_at=now,
                updated_at=now,
            )
            prev_id = self._render_shown(entry, 0)
            cur_id = self._render_shown(entry, 1)
        except (ExternalUnavailable, ExternalTimeout) as exc:
            return _error(503, str(exc))
        self._session_dir(session_id).mkdir(parents=True, exist_ok=True)
        subspace.save_map(smap, self._session_dir(session_id) / "subspace.npz")
        eventlog.append_events(
            self._log_path(session_id),
            [
                eventlog.shown_record(session_id, state, 0),
                eventlog.shown_record(session_id, state, 1),
            ],
        )
        self._write_record(entry)
        with self._sessions_lock:
            self.sessions[session_id] = entry
        return JSONResponse(
            status_code=201,
            content={
                "session_id": session_id,
                "strategy": config.strategy,
                "d_prime": smap.d_prime,
                "seed": seed,
                "budget": config.budget,
                "iteration": 0,
                "image_url_previous": f"/v1/images/{prev_id}",
                "image_url_current": f"/v1/images/{cur_id}",
            },
        )

    def submit_feedback(self, session_id: str, body: FeedbackBody):
        entry = self.sessions.get(session_id)
        if entry is None:
            return _error(404, "unknown session")
        with entry.lock:
            if entry.state.finished:
                return _error(409, "session finished")
            expected = entry.state.iteration + 1
            if body.iteration is not None and body.iteration != expected:
                return _error(
                    409, f"stale iteration {body.iteration}, expected {expected}"
                )
            # work on a copy so a failed render leaves the feedback unconsumed
            trial = copy.deepcopy(entry.state)
            try:
                result = engine.submit_feedback(
                    trial, body.current_won, body.decision_time_ms
                )
                if result.finished:
                    final_idx = result.final_idx
                else:
                    final_idx = None
                probe = SessionEntry(
                    session_id=session_id,
                    config=entry.config,
                    state=trial,
                    smap=entry.smap,
                    created_at=entry.created_at,
                    updated_at=entry.updated_at,
                    image_ids=dict(entry.image_ids),
                )
                if result.finished:
                    image_id = self._render_shown(probe, final_idx)
                else:
                    image_id = self._render_shown(probe, result.next_idx)
                    pivot_id = self._render_shown(probe, trial.pending[0])
            except (ExternalUnavailable, ExternalTimeout) as exc:
                return _error(503, str(exc))
            entry.state = trial
            entry.image_ids = probe.image_ids
            entry.updated_at = time.time()
            records = [eventlog.feedback_record(session_id, trial)]
            if not result.finished:
                records.append(
                    eventlog.shown_record(session_id, trial, result.next_idx)
                )
            eventlog.append_events(self._log_path(session_id), records)
            self._write_record(entry)
            if result.finished:
                return {
                    "finished": True,
                    "iteration": trial.iteration,
                    "final_image_url": f"/v1/images/{image_id}",
                }
            return {
                "finished": False,
                "iteration": trial.iteration,
                "next_image_url": f"/v1/images/{image_id}",
                "image_url_previous": f"/v1/images/{pivot_id}",
            }

    def session_snapshot(self, session_id: str):
        entry = self.sessions.get(session_id)
        if entry is None:
            return _error(404, "unknown session")
        state = entry.state
        snapshot = {
            "session_id": session_id,
            "status": entry.status,
            "strategy": entry.config.strategy,
            "d_prime": entry.smap.d_prime,
            "seed": entry.config.seed,
            "budget": entry.config.budget,
            "iteration": state.iteration,
            "history": [
                {
                    "iteration": rec.iteration,
                    "current_won": rec.current_won,
                    "decision_time_ms": rec.decision_time_ms,
                }
                for rec in state.history
            ],
        }
        try:
            if state.finished:
                final_idx = (
                    state.last_winner_idx
                    if state.last_winner_idx is not None
                    else state.pending[0]
                )
                snapshot["final_image_url"] = (
                    f"/v1/images/{self._render_shown(entry, final_idx)}"
                )
            else:
                prev_idx, cur_idx = state.pending
                snapshot["image_url_previous"] = (
                    f"/v1/images/{self._render_shown(entry, prev_idx)}"
                )
                snapshot["image_url_current"] = (
                    f"/v1/images/{self._render_shown(entry, cur_idx)}"
                )
        except (ExternalUnavailable, ExternalTimeout) as exc:
            return _error(503, str(exc))
        return snapshot


def create_app(
    settings: ServiceSettings,
    generator: Generator | None = None,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="latentswipe service")
    service = SessionService(settings, generator)
    app.state.service = service
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["GET", "POST", "OPTIONS"],
        allow_headers=["Content-Type"],
    )

    @app.post("/v1/sessions")
    def create_session(body: CreateSessionBody):
        return service.create_session(body)

    @app.post("/v1/sessions/{session_id}/feedback")
    def submit_feedback(session_id: str, body: FeedbackBody):
        return service.submit_feedback(session_id, body)

    @app.get("/v1/sessions/{session_id}")
    def session_snapshot(session_id: str):
        return service.session_snapshot(session_id)

    @app.get("/v1/images/{image_id}")
    def get_image(image_id: str):
        data = service.image_bytes(image_id)
        if data is None:
            return _error(404, "unknown image")
        return Response(
            content=data,
            media_type="image/png",
            headers={"Cache-Control": IMMUTABLE_CACHE},
        )

    @app.get("/v1/health")
    def health():
        return {
            "status": "ok",
            "sessions": len(service.sessions),
            "restore_errors": service.restore_errors,
        }

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    return app


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="latentswipe-service", description="swipe session HTTP service"
    )
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8008)
    parser.add_argument("--data-dir", default="./latentswipe-data")
    parser.add_argument("--generator", default="procedural",
                        choices=("procedural", "external"))
    parser.add_argument("--generator-dim", type=int, default=32)
    parser.add_argument("--external-url", default=None)
    parser.add_argument("--render-concurrency", type=int, default=4)
    parser.add_argument("--pca-samples", type=int,
                        default=simlab.DEFAULT_PCA_SAMPLES)
    parser.add_argument("--pca-seed", type=int, default=simlab.DEFAULT_PCA_SEED)
    parser.add_argument("--max-d-prime", type=int, default=MAX_D_PRIME_DEFAULT)
    parser.add_argument("--ui-dir", default=None,
                        help="serve a static UI build from this directory")
    args = parser.parse_args(argv)

    settings = ServiceSettings(
        data_dir=Path(args.data_dir),
        generator_kind=args.generator,
        generator_dim=args.generator_dim,
        external_url=args.external_url,
        max_d_prime=args.max_d_prime,
        render_concurrency=args.render_concurrency,
        pca_samples=args.pca_samples,
        pca_seed=args.pca_seed,
    )
    app = create_app(settings, ui_dir=args.ui_dir)

    import uvicorn

    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
