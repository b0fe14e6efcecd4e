"""HTTP session service for the fitting loop.

Session lifecycle, stimulus delivery, feedback intake, state inspection and
results over HTTP + JSON, with WAV audio payloads. Every session is
event-sourced into an append-only JSONL file (one "created" event carrying
the config, then one event per answer), so replaying the log reconstructs
the exact session state after a crash or restart. A simulated-user mode
answers comparisons from a configured ground truth, which lets the whole
loop run end-to-end without a human listener.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Response
from fastapi.responses import JSONResponse, PlainTextResponse

from .config import BandConfig
from .corpus import load_sentences, synth_babble, synth_sentence
from .dsp import AudioClip, apply_gain_set, mix_noise, wav_bytes, wav_read
from .errors import (
    ConfigurationError,
    DomainError,
    HearfitError,
    OrderingError,
    StateError,
)
from .independence import oracle_prefer
from .orchestrator import (
    EVENT_SCHEMA,
    FittingSession,
    Presentation,
    build_schedule,
    parse_events_jsonl,
)

DEFAULT_SNR_DB = 5.0
DEFAULT_CLIP_S = 2.5


@dataclass(frozen=True)
class SessionConfig:
    """Everything needed to (re)create a session deterministically."""

    prescription_db: tuple[float, ...]
    episodes: int = 7
    per_episode: int = 4
    seed: int = 0
    snr_db: float = DEFAULT_SNR_DB
    clip_duration_s: float = DEFAULT_CLIP_S
    corpus_dir: str | None = None  # None -> built-in synthetic sentences
    noise_path: str | None = None  # None -> built-in synthetic babble
    mode: str = "human"  # "human" | "simulated"
    true_gain_set: tuple[int, ...] | None = None
    true_preference: tuple[tuple[float, ...], ...] | None = None
    sim_noise_sigma: float = 0.0
    band_edges_hz: tuple[float, ...] = BandConfig().band_edges_hz
    n_levels: int = 8

    def band_config(self) -> BandConfig:
        return BandConfig(band_edges_hz=self.band_edges_hz, n_levels=self.n_levels)

    def validate(self) -> None:
        cfg = self.band_config()
        if len(self.prescription_db) != cfg.n_bands:
            raise ConfigurationError(
                f"prescription has {len(self.prescription_db)} entries, "
                f"expected {cfg.n_bands}"
            )
        if self.mode not in ("human", "simulated"):
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        if self.mode == "simulated":
            if (self.true_gain_set is None) == (self.true_preference is None):
                raise ConfigurationError(
                    "simulated mode needs exactly one of true_gain_set or "
                    "true_preference"
                )
            if self.true_gain_set is not None:
                cfg.validate_gain_set(self.true_gain_set)
            if self.true_preference is not None:
                if len(self.true_preference) != cfg.n_bands or any(
                    len(v) != cfg.n_levels for v in self.true_preference
                ):
                    raise ConfigurationError(
                        "true_preference must be one length-"
                        f"{cfg.n_levels} vector per band"
                    )
        if self.sim_noise_sigma < 0:
            raise ConfigurationError("sim_noise_sigma must be >= 0")
        if self.snr_db != self.snr_db:  # NaN
            raise ConfigurationError("snr_db must be a number")
        if self.clip_duration_s <= 0:
            raise ConfigurationError("clip_duration_s must be positive")
        if self.corpus_dir is not None and not Path(self.corpus_dir).is_dir():
            raise ConfigurationError(f"corpus_dir {self.corpus_dir} does not exist")
        if self.noise_path is not None and not Path(self.noise_path).is_file():
            raise ConfigurationError(f"noise_path {self.noise_path} does not exist")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SessionConfig":
        data = dict(data)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown config fields: {sorted(unknown)}")
        if "prescription_db" not in data:
            raise ConfigurationError("prescription_db is required")
        data["prescription_db"] = tuple(float(v) for v in data["prescription_db"])
        if data.get("band_edges_hz") is not None:
            data["band_edges_hz"] = tuple(float(v) for v in data["band_edges_hz"])
        if data.get("true_gain_set") is not None:
            data["true_gain_set"] = tuple(int(v) for v in data["true_gain_set"])
        if data.get("true_preference") is not None:
            data["true_preference"] = tuple(
                tuple(float(x) for x in v) for v in data["true_preference"]
            )
        return cls(**data)


class Session:
    """One live session: fitting state + stimuli + its event-log file."""

    def __init__(self, session_id: str, config: SessionConfig, log_path: Path):
        config.validate()
        self.id = session_id
        self.config = config
        self.log_path = log_path
        self.lock = threading.Lock()
        band_cfg = config.band_config()
        schedule = build_schedule(
            band_cfg.n_levels, config.episodes, config.per_episode,
            band_cfg.n_bands, config.seed,
        )
        self.fitting = FittingSession(band_cfg, schedule)
        self._sim_rng = np.random.default_rng([config.seed, 0x51D])
        self._render_cache: tuple[int, bytes, bytes] | None = None
        self._sentences: list[AudioClip] | None = None
        self._noise: AudioClip | None = None

    # --- stimuli ---------------------------------------------------------

    def _load_stimuli(self) -> None:
        if self._sentences is not None:
            return
        cfg = self.config
        if cfg.corpus_dir is not None:
            self._sentences = load_sentences(cfg.corpus_dir, duration_s=cfg.clip_duration_s)
        else:
            self._sentences = [
                synth_sentence(cfg.seed * 100 + i, cfg.clip_duration_s)
                for i in range(8)
            ]
        if cfg.noise_path is not None:
            self._noise = wav_read(cfg.noise_path)
        else:
            self._noise = synth_babble(cfg.seed, max(2 * cfg.clip_duration_s, 4.0))

    def rendered_pair(self) -> tuple[Presentation, bytes, bytes]:
        """Render (or re-serve) the current presentation's two WAV payloads."""
        presentation = self.fitting.next_comparison()
        if self._render_cache is not None and self._render_cache[0] == presentation.id:
            return presentation, self._render_cache[1], self._render_cache[2]
        self._load_stimuli()
        sentence = self._sentences[presentation.id % len(self._sentences)]
        rendered = []
        for gain_set in (presentation.gain_set_a, presentation.gain_set_b):
            clip = apply_gain_set(
                sentence, gain_set, self.config.prescription_db,
                self.fitting.config,
            )
            clip = mix_noise(
                clip, self._noise, self.config.snr_db,
                loop_offset_seed=self.config.seed * 1000 + presentation.id,
            )
            rendered.append(wav_bytes(clip))
        self._render_cache = (presentation.id, rendered[0], rendered[1])
        return presentation, rendered[0], rendered[1]

    # --- feedback / persistence ------------------------------------------

    def record_feedback(self, presentation_id: int, choice: str) -> dict:
        episode_completed = self.fitting.record_feedback(presentation_id, choice)
        self._append_log(self.fitting.events[-1])
        if episode_completed:
            self.fitting.finish_episode()
        self._render_cache = None
        return {
            "episode_completed": episode_completed,
            "complete": self.fitting.complete,
        }

    def _append_log(self, event: dict) -> None:
        with open(self.log_path, "a") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")
            fh.flush()

    def write_created_event(self) -> None:
        self._append_log(
            {
                "schema": EVENT_SCHEMA,
                "type": "created",
                "session_id": self.id,
                "config": self.config.to_dict(),
            }
        )

    # --- simulated user ----------------------------------------------------

    def simulated_choice(self, presentation: Presentation) -> str:
        cfg = self.config
        if cfg.mode != "simulated":
            raise StateError("session is not in simulated mode")
        if cfg.true_gain_set is not None:
            margin = self._gain_set_margin(presentation, cfg.true_gain_set)
        else:
            truth = cfg.true_preference
            u_a = sum(truth[b][lv - 1] for b, lv in enumerate(presentation.gain_set_a))
            u_b = sum(truth[b][lv - 1] for b, lv in enumerate(presentation.gain_set_b))
            margin = u_a - u_b
        if cfg.sim_noise_sigma > 0:
            margin += float(self._sim_rng.normal(0.0, cfg.sim_noise_sigma))
        if margin > 0:
            return "A"
        if margin < 0:
            return "B"
        return "Same"

    @staticmethod
    def _gain_set_margin(presentation: Presentation, truth) -> float:
        outcome = oracle_prefer(presentation.gain_set_a, presentation.gain_set_b, truth)
        return {1: 1.0, 2: -1.0, 0: 0.0}[outcome]

    # --- views -------------------------------------------------------------

    def state_view(self) -> dict:
        return {
            "session_id": self.id,
            "status": "complete" if self.fitting.complete else "active",
            "cursor": self.fitting.cursor,
            "total_pairs": self.fitting.schedule.total_pairs,
            "episode": self.fitting.current_episode,
            "episodes": self.fitting.schedule.episodes,
            "episodes_done": self.fitting.episodes_done,
            "bands": [
                {
                    "f": bs.f.tolist(),
                    "lam": bs.hp.lam,
                    "sigma": bs.hp.sigma,
                    "comparisons": len(bs.comparisons),
                }
                for bs in self.fitting.bands
            ],
        }

    def result_view(self) -> dict:
        result = self.fitting.personalized_gains(self.config.prescription_db)
        return {
            "session_id": self.id,
            "personalized_levels": list(result.personalized_levels),
            "personalized_gains_db": list(result.personalized_gains_db),
            "prescription_db": list(self.config.prescription_db),
            "level_offsets_db": [
                self.fitting.config.level_to_db(lv)
                for lv in result.personalized_levels
            ],
        }


def restore_session(log_path: Path) -> Session:
    """Rebuild a session by replaying its JSONL event log."""
    events = parse_events_jsonl(Path(log_path).read_text())
    if not events or events[0].get("type") != "created":
        raise ConfigurationError(f"{log_path} does not start with a created event")
    head = events[0]
    config = SessionConfig.from_dict(head["config"])
    session = Session(head["session_id"], config, Path(log_path))
    for event in events[1:]:
        session.fitting.apply_event(event)
    return session


# --- HTTP layer -------------------------------------------------------------


def _error_response(exc: HearfitError) -> JSONResponse:
    if isinstance(exc, (OrderingError, StateError)):
        status = 409
    elif isinstance(exc, (ConfigurationError, DomainError)):
        status = 422
    else:
        status = 500
    return JSONResponse(
        status_code=status,
        content={"error": type(exc).__name__, "detail": str(exc)},
    )


def create_app(sessions_dir=None) -> FastAPI:
    """App factory. ``sessions_dir`` holds one JSONL event log per session;
    logs already present are restored on startup."""
    app = FastAPI(title="hearfit session service")
    sessions_dir = Path(sessions_dir) if sessions_dir else Path("hearfit-sessions")
    sessions_dir.mkdir(parents=True, exist_ok=True)
    registry: dict[str, Session] = {}
    registry_lock = threading.Lock()

    for log_path in sorted(sessions_dir.glob("*.jsonl")):
        session = restore_session(log_path)
        registry[session.id] = session

    app.state.sessions = registry
    app.state.sessions_dir = sessions_dir

    @app.exception_handler(HearfitError)
    async def _hearfit_error(request, exc):  # noqa: ANN001
        return _error_response(exc)

    def get_session(session_id: str) -> Session:
        with registry_lock:
            session = registry.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"no session {session_id}")
        return session

    @app.get("/health")
    def health():
        return {"status": "ok", "sessions": len(registry)}

    @app.post("/sessions", status_code=201)
    def create_session(payload: dict):
        config = SessionConfig.from_dict(payload)
        session_id = uuid.uuid4().hex[:12]
        session = Session(session_id, config, sessions_dir / f"{session_id}.jsonl")
        session.write_created_event()
        with registry_lock:
            registry[session_id] = session
        return {"session_id": session_id, "total_pairs": session.fitting.schedule.total_pairs}

    @app.get("/sessions/{session_id}/next-pair")
    def next_pair(session_id: str):
        session = get_session(session_id)
        with session.lock:
            presentation, _, _ = session.rendered_pair()
            base = f"/sessions/{session_id}/audio/{presentation.id}"
            return {
                "presentation_id": presentation.id,
                "episode": session.fitting.current_episode,
                "episodes": session.fitting.schedule.episodes,
                "progress": session.fitting.cursor / session.fitting.schedule.total_pairs,
                "audio_a": f"{base}/a",
                "audio_b": f"{base}/b",
            }

    @app.get("/sessions/{session_id}/audio/{presentation_id}/{side}")
    def audio(session_id: str, presentation_id: int, side: str):
        if side not in ("a", "b"):
            raise DomainError("side must be 'a' or 'b'")
        session = get_session(session_id)
        with session.lock:
            presentation, wav_a, wav_b = session.rendered_pair()
            if presentation.id != presentation_id:
                raise OrderingError(
                    f"audio for presentation {presentation_id} is no longer current"
                )
            payload = wav_a if side == "a" else wav_b
        return Response(content=payload, media_type="audio/wav")

    @app.post("/sessions/{session_id}/feedback")
    def feedback(session_id: str, payload: dict):
        session = get_session(session_id)
        if "presentation_id" not in payload or "choice" not in payload:
            raise DomainError("feedback needs presentation_id and choice")
        with session.lock:
            return session.record_feedback(
                int(payload["presentation_id"]), str(payload["choice"])
            )

    @app.post("/sessions/{session_id}/simulated-step")
    def simulated_step(session_id: str):
        session = get_session(session_id)
        with session.lock:
            presentation = session.fitting.next_comparison()
            choice = session.simulated_choice(presentation)
            ack = session.record_feedback(presentation.id, choice)
            ack["presentation_id"] = presentation.id
            ack["choice"] = choice
            return ack

    @app.get("/sessions/{session_id}/state")
    def state(session_id: str):
        session = get_session(session_id)
        with session.lock:
            return session.state_view()

    @app.get("/sessions/{session_id}/result")
    def result(session_id: str):
        session = get_session(session_id)
        with session.lock:
            return session.result_view()

    @app.get("/sessions/{session_id}/events")
    def events(session_id: str):
        session = get_session(session_id)
        with session.lock:
            text = Path(session.log_path).read_text()
        return PlainTextResponse(text, media_type="application/jsonl")

    return app
