"""Real-time evaluation session service.

A session walks the phase order Idle -> Happy -> Sad -> Neutral ->
Meditation -> Predicting -> Rating -> Done. Rows stream from a simulator
profile, a replayed `.tgr` capture, or an external TCP byte source speaking
the wire framing. Entering Predicting extracts the per-emotion features and
predicts the 14 traits; ratings close the session with an evaluation report.

Sessions are isolated; per-session commands are serialized by the single
event loop. Each session persists as one JSON file under the data directory.
"""

from __future__ import annotations

import asyncio
import json
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse

from .classical import TraitSelector, load_selector, predict_traits
from .codec import DecoderState, EegPower, decode_bytes, decode_stream
from .core import EMOTIONS, N_TRAITS, Emotion, Segment, BandPowerRow
from .errors import (
    BadRatingCount,
    EmptyInput,
    EmptyPhaseBuffer,
    InvalidTransition,
    SatisfactionOutOfRange,
    SelectorLoadError,
    TraitwaveError,
    UnknownSession,
    WrongPhase,
)
from .features import extract_features
from .simulator import (
    DEFAULT_ROWS_PER_SECOND,
    EffectConfig,
    generate_segment,
    sample_cohort,
    segment_to_wire,
)

PHASE_IDLE = "idle"
PHASE_PREDICTING = "predicting"
PHASE_RATING = "rating"
PHASE_DONE = "done"

RUNNING_PHASES = tuple(e.value for e in EMOTIONS)
PHASE_ORDER = (PHASE_IDLE, *RUNNING_PHASES, PHASE_PREDICTING, PHASE_RATING, PHASE_DONE)


@dataclass
class SourceConfig:
    type: str = "simulator"  # simulator | replay | external
    seed: int = 0
    effect_scale: float = 1.0
    capture_path: str | None = None
    port: int = 0  # external source listen port (0 = ephemeral)

    @classmethod
    def from_dict(cls, d: dict) -> "SourceConfig":
        cfg = cls(**{k: v for k, v in d.items() if k in cls.__dataclass_fields__})
        if cfg.type not in ("simulator", "replay", "external"):
            raise ValueError(f"unknown source type {cfg.type!r}")
        if cfg.type == "replay" and not cfg.capture_path:
            raise ValueError("replay source needs capture_path")
        return cfg


class SimulatorSource:
    """Generates one synthetic subject's segment per phase."""

    def __init__(self, config: SourceConfig, rows_per_second: int):
        (self.profile,) = sample_cohort(1, EffectConfig(scale=config.effect_scale), config.seed)
        self.seed = config.seed
        self.rows_per_second = rows_per_second

    def phase_rows(self, emotion: Emotion, duration_s: int) -> list[BandPowerRow]:
        seg = generate_segment(
            self.profile,
            emotion,
            duration_s,
            self.rows_per_second,
            seed=self.seed + list(EMOTIONS).index(emotion) + 1,
        )
        return seg.rows


class ReplaySource:
    """Replays EegPower rows decoded from a `.tgr` capture, in order."""

    def __init__(self, config: SourceConfig, rows_per_second: int):
        events, _errors = decode_bytes(Path(config.capture_path).read_bytes())
        self.bands = [e.bands for e in events if isinstance(e, EegPower)]
        self.rows_per_second = rows_per_second
        self.cursor = 0

    def phase_rows(self, emotion: Emotion, duration_s: int) -> list[BandPowerRow]:
        n = duration_s * self.rows_per_second
        chunk = self.bands[self.cursor : self.cursor + n]
        self.cursor += len(chunk)
        return [
            BandPowerRow(timestamp_ms=int(round(1000 * i / self.rows_per_second)), bands=b)
            for i, b in enumerate(chunk)
        ]


@dataclass
class Session:
    session_id: str
    selector: TraitSelector
    source: object
    source_type: str
    phase_duration_s: int
    rows_per_second: int
    phase: str = PHASE_IDLE
    buffers: dict[str, list[BandPowerRow]] = field(default_factory=dict)
    row_log: list[dict] = field(default_factory=list)  # {t_ms, bands, phase}
    predictions: list[dict] | None = None
    ratings: list[int] | None = None
    satisfaction: float | None = None
    report: dict | None = None
    external_port: int | None = None
    new_rows: asyncio.Event = field(default_factory=asyncio.Event)

    def snapshot(self) -> dict:
        return {
            "session_id": self.session_id,
            "phase": self.phase,
            "phase_order": list(PHASE_ORDER),
            "source": self.source_type,
            "phase_duration_s": self.phase_duration_s,
            "rows_per_second": self.rows_per_second,
            "rows_buffered": {p: len(rows) for p, rows in self.buffers.items()},
            "total_rows": len(self.row_log),
            "predictions_ready": self.predictions is not None,
            "report": self.report,
            "external_port": self.external_port,
        }


def session_accuracy(ratings: list[int]) -> float:
    return sum(1 for r in ratings if r == 1) / N_TRAITS


def mean_satisfaction(scores: list[float]) -> float:
    if not scores:
        raise EmptyInput("mean_satisfaction needs at least one report")
    return sum(scores) / len(scores)


class SessionManager:
    def __init__(self, selector: TraitSelector, data_dir: Path):
        if len(selector.models) != N_TRAITS:
            raise SelectorLoadError(f"selector has {len(selector.models)} models, need {N_TRAITS}")
        self.selector = selector
        self.data_dir = Path(data_dir)
        self.sessions: dict[str, Session] = {}

    # --- session lifecycle -------------------------------------------------

    def create_session(
        self,
        source_config: SourceConfig,
        phase_duration_s: int = 120,
        rows_per_second: int = DEFAULT_ROWS_PER_SECOND,
    ) -> Session:
        session_id = uuid.uuid4().hex[:12]
        if source_config.type == "simulator":
            source = SimulatorSource(source_config, rows_per_second)
        elif source_config.type == "replay":
            source = ReplaySource(source_config, rows_per_second)
        else:
            source = ExternalSource(source_config)
        session = Session(
            session_id=session_id,
            selector=self.selector,
            source=source,
            source_type=source_config.type,
            phase_duration_s=phase_duration_s,
            rows_per_second=rows_per_second,
        )
        self.sessions[session_id] = session
        self._persist(session)
        return session

    def get(self, session_id: str) -> Session:
        try:
            return self.sessions[session_id]
        except KeyError:
            raise UnknownSession(session_id) from None

    async def advance_phase(self, session: Session) -> str:
        phase = session.phase
        if phase in (PHASE_RATING, PHASE_DONE):
            raise InvalidTransition(f"cannot advance from {phase}")
        if phase in RUNNING_PHASES and not session.buffers.get(phase):
            raise EmptyPhaseBuffer(f"phase {phase} captured no rows")
        nxt = PHASE_ORDER[PHASE_ORDER.index(phase) + 1]
        session.phase = nxt
        if nxt in RUNNING_PHASES:
            await self._start_phase(session, Emotion(nxt))
        elif nxt == PHASE_PREDICTING:
            self._predict(session)
            session.phase = PHASE_PREDICTING
        self._persist(session)
        return session.phase

    async def _start_phase(self, session: Session, emotion: Emotion) -> None:
        session.buffers.setdefault(emotion.value, [])
        if session.source_type == "external":
            await session.source.ensure_listening(session, emotion)
            return
        rows = session.source.phase_rows(emotion, session.phase_duration_s)
        for row in rows:
            self._append_row(session, emotion.value, row)
        if session.source_type == "simulator":
            self._append_capture(session, emotion, rows)

    def _append_row(self, session: Session, phase: str, row: BandPowerRow) -> None:
        session.buffers[phase].append(row)
        session.row_log.append(
            {"t_ms": row.timestamp_ms, "bands": list(row.bands), "phase": phase}
        )
        session.new_rows.set()

    def _append_capture(self, session: Session, emotion: Emotion, rows) -> None:
        captures = self.data_dir / "captures"
        captures.mkdir(parents=True, exist_ok=True)
        seg = Segment(subject_id=session.session_id, emotion=emotion, rows=list(rows))
        with open(captures / f"{session.session_id}.tgr", "ab") as f:
            f.write(segment_to_wire(seg))

    def _predict(self, session: Session) -> None:
        features = {}
        for emotion in EMOTIONS:
            rows = session.buffers.get(emotion.value, [])
            if not rows:
                raise EmptyPhaseBuffer(f"phase {emotion.value} captured no rows")
            seg = Segment(subject_id=session.session_id, emotion=emotion, rows=rows)
            features[emotion] = extract_features(seg)
        preds = predict_traits(session.selector, features)
        session.predictions = [
            {"trait": p.trait, "value": bool(p.value), "probability": p.probability}
            for p in preds
        ]

    def submit_ratings(self, session: Session, ratings: list, satisfaction: float) -> dict:
        if session.phase != PHASE_RATING:
            raise WrongPhase(f"ratings accepted only in rating phase (now {session.phase})")
        if len(ratings) != N_TRAITS or any(r not in (0, 1) for r in ratings):
            raise BadRatingCount(f"need exactly {N_TRAITS} ratings of 0 or 1")
        if not isinstance(satisfaction, (int, float)) or not 0 <= satisfaction <= 5:
            raise SatisfactionOutOfRange("satisfaction must lie in [0, 5]")
        session.ratings = [int(r) for r in ratings]
        session.satisfaction = float(satisfaction)
        session.report = {
            "session_id": session.session_id,
            "per_trait": [
                {"trait": p["trait"], "prediction": p["value"], "rating": r}
                for p, r in zip(session.predictions, session.ratings)
            ],
            "accuracy": session_accuracy(session.ratings),
            "satisfaction": session.satisfaction,
        }
        session.phase = PHASE_DONE
        self._persist(session)
        return session.report

    def summary(self) -> dict:
        reports = []
        sessions_dir = self.data_dir / "sessions"
        if sessions_dir.exists():
            for path in sorted(sessions_dir.glob("*.json")):
                doc = json.loads(path.read_text())
                if doc.get("report"):
                    reports.append(doc["report"])
        per_trait: dict[str, list[int]] = {}
        for report in reports:
            for entry in report["per_trait"]:
                per_trait.setdefault(entry["trait"], []).append(entry["rating"])
        return {
            "n_sessions": len(reports),
            "mean_satisfaction": (
                mean_satisfaction([r["satisfaction"] for r in reports]) if reports else None
            ),
            "mean_accuracy": (
                sum(r["accuracy"] for r in reports) / len(reports) if reports else None
            ),
            "per_trait_accuracy": {
                t: sum(v) / len(v) for t, v in sorted(per_trait.items())
            },
        }

    def _persist(self, session: Session) -> None:
        sessions_dir = self.data_dir / "sessions"
        sessions_dir.mkdir(parents=True, exist_ok=True)
        doc = {
            **session.snapshot(),
            "predictions": session.predictions,
            "ratings": session.ratings,
            "row_log": session.row_log,
        }
        (sessions_dir / f"{session.session_id}.json").write_text(
            json.dumps(doc, sort_keys=True)
        )


class ExternalSource:
    """Accepts raw wire bytes over a local TCP socket.

    EegPower events decoded from the byte stream land in whichever emotion
    phase is currently running; everything else is ignored.
    """

    def __init__(self, config: SourceConfig):
        self.requested_port = config.port
        self.server = None
        self.decoder = DecoderState()
        self.session = None
        self.manager: SessionManager | None = None
        self.counter = 0

    def bind(self, manager: SessionManager):
        self.manager = manager

    async def ensure_listening(self, session: Session, emotion: Emotion) -> None:
        self.session = session
        if self.server is None:
            self.server = await asyncio.start_server(
                self._handle, "127.0.0.1", self.requested_port
            )
            session.external_port = self.server.sockets[0].getsockname()[1]

    async def _handle(self, reader, writer):
        try:
            while True:
                data = await reader.read(4096)
                if not data:
                    break
                events, _errors, self.decoder = decode_stream(data, self.decoder)
                session = self.session
                if session is None or session.phase not in RUNNING_PHASES:
                    continue
                for event in events:
                    if isinstance(event, EegPower):
                        row = BandPowerRow(
                            timestamp_ms=int(
                                round(1000 * self.counter / session.rows_per_second)
                            ),
                            bands=event.bands,
                        )
                        self.counter += 1
                        self.manager._append_row(session, session.phase, row)
        finally:
            writer.close()


# --- HTTP/WS app ----------------------------------------------------------

STATUS = {
    UnknownSession: 404,
    InvalidTransition: 409,
    EmptyPhaseBuffer: 409,
    WrongPhase: 409,
    BadRatingCount: 400,
    SatisfactionOutOfRange: 400,
    SelectorLoadError: 400,
}


def _error_response(exc: TraitwaveError) -> JSONResponse:
    status = STATUS.get(type(exc), 400)
    code = type(exc).__name__
    return JSONResponse(status_code=status, content={"code": code, "message": str(exc)})


def create_app(selector: TraitSelector | str | Path, data_dir) -> FastAPI:
    if not isinstance(selector, TraitSelector):
        try:
            selector = load_selector(selector)
        except Exception as exc:
            raise SelectorLoadError(str(exc)) from exc
    manager = SessionManager(selector, Path(data_dir))
    app = FastAPI(title="traitwave session service")
    app.state.manager = manager

    @app.exception_handler(TraitwaveError)
    async def handle_traitwave_error(_request, exc):
        return _error_response(exc)

    @app.post("/sessions", status_code=201)
    async def create_session(body: dict | None = None):
        body = body or {}
        try:
            source = SourceConfig.from_dict(body.get("source", {}))
        except (TypeError, ValueError) as exc:
            return JSONResponse(status_code=400, content={"code": "BadSource", "message": str(exc)})
        session = manager.create_session(
            source,
            phase_duration_s=int(body.get("phase_duration_s", 120)),
            rows_per_second=int(body.get("rows_per_second", DEFAULT_ROWS_PER_SECOND)),
        )
        if isinstance(session.source, ExternalSource):
            session.source.bind(manager)
        return session.snapshot()

    @app.get("/sessions/{session_id}")
    async def get_session(session_id: str):
        return manager.get(session_id).snapshot()

    @app.post("/sessions/{session_id}/advance")
    async def advance(session_id: str):
        session = manager.get(session_id)
        phase = await manager.advance_phase(session)
        return {"phase": phase}

    @app.get("/sessions/{session_id}/predictions")
    async def predictions(session_id: str):
        session = manager.get(session_id)
        if session.predictions is None:
            raise WrongPhase("predictions not available before the predicting phase")
        return {"predictions": session.predictions}

    @app.post("/sessions/{session_id}/ratings")
    async def ratings(session_id: str, body: dict):
        session = manager.get(session_id)
        report = manager.submit_ratings(
            session, body.get("ratings", []), body.get("satisfaction", -1)
        )
        return report

    @app.get("/reports/summary")
    async def summary():
        return manager.summary()

    @app.websocket("/sessions/{session_id}/stream")
    async def stream(websocket: WebSocket, session_id: str):
        await websocket.accept()
        try:
            session = manager.get(session_id)
        except UnknownSession:
            await websocket.close(code=4004)
            return
        cursor = len(session.row_log)  # subscribers see only subsequent rows
        try:
            while True:
                while cursor < len(session.row_log):
                    await websocket.send_json(session.row_log[cursor])
                    cursor += 1
                if session.phase in (PHASE_PREDICTING, PHASE_RATING, PHASE_DONE):
                    await websocket.close()
                    return
                session.new_rows.clear()
                try:
                    await asyncio.wait_for(session.new_rows.wait(), timeout=0.2)
                except asyncio.TimeoutError:
                    pass
        except WebSocketDisconnect:
            return

    return app


def run_server(selector_path, data_dir, host="127.0.0.1", port=8000):
    import uvicorn

    app = create_app(selector_path, data_dir)
    uvicorn.run(app, host=host, port=port)
