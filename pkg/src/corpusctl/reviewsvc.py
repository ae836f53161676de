"""Human review service: accept/reject snippets, fix transcripts, promote
reference faces.

State lives in an append-only NDJSON ledger of review decisions; the
in-memory view is materialized from item seeds (usually built from diarize
output) plus a full ledger replay, so rebuilding from disk always
reproduces the live state. Writers are serialized and guarded by optimistic
concurrency: a decision must name the revision it was based on.

The HTTP layer (FastAPI) is a thin wrapper over :class:`ReviewStore`; see
``corpusctl review serve``.
"""

from __future__ import annotations

import base64
import json
import threading
import warnings
from dataclasses import dataclass, field, asdict
from pathlib import Path

from .errors import CorpusctlError, ValidationError

__all__ = [
    "ReviewItem",
    "ReviewDecision",
    "ReviewStore",
    "ConflictError",
    "NotFoundError",
    "build_items",
    "create_app",
    "serve",
]

STATUSES = ("pending", "accepted", "rejected")
VERDICTS = ("accept", "reject")


class NotFoundError(CorpusctlError):
    pass


class ConflictError(CorpusctlError):
    """base_revision was stale; carries the current item."""

    def __init__(self, item: "ReviewItem"):
        self.item = item
        super().__init__(
            f"stale base_revision for {item.snippet_id}; current revision is {item.revision}"
        )


@dataclass
class ReviewItem:
    snippet_id: str
    status: str = "pending"
    text: str = ""
    revision: int = 0
    score: float | None = None
    podcast_date: str = ""
    start_ms: int = 0
    media: dict = field(default_factory=dict)
    scenes: list = field(default_factory=list)

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "ReviewItem":
        return cls(
            snippet_id=data["snippet_id"],
            status=data.get("status", "pending"),
            text=data.get("text", ""),
            revision=int(data.get("revision", 0)),
            score=data.get("score"),
            podcast_date=data.get("podcast_date", ""),
            start_ms=int(data.get("start_ms", 0)),
            media=data.get("media", {}),
            scenes=data.get("scenes", []),
        )

    def sort_key(self) -> tuple:
        return (self.podcast_date, self.start_ms, self.snippet_id)


@dataclass(frozen=True)
class ReviewDecision:
    snippet_id: str
    base_revision: int
    verdict: str
    corrected_text: str | None = None
    promote_reference: dict | None = None
    reviewer: str = ""
    timestamp: str = ""

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValidationError(f"verdict must be one of {VERDICTS}, got {self.verdict!r}")

    def payload_key(self) -> tuple:
        """Identity of the decision content (timestamp excluded)."""
        promo = json.dumps(self.promote_reference, sort_keys=True) if self.promote_reference else None
        return (self.snippet_id, self.base_revision, self.verdict,
                self.corrected_text, promo, self.reviewer)

    def to_json(self) -> dict:
        return {
            "snippet_id": self.snippet_id,
            "base_revision": self.base_revision,
            "verdict": self.verdict,
            "corrected_text": self.corrected_text,
            "promote_reference": self.promote_reference,
            "reviewer": self.reviewer,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_json(cls, data: dict) -> "ReviewDecision":
        return cls(
            snippet_id=data["snippet_id"],
            base_revision=int(data["base_revision"]),
            verdict=data["verdict"],
            corrected_text=data.get("corrected_text"),
            promote_reference=data.get("promote_reference"),
            reviewer=data.get("reviewer", ""),
            timestamp=data.get("timestamp", ""),
        )


def _encode_cursor(key: tuple) -> str:
    return base64.urlsafe_b64encode(json.dumps(list(key)).encode("utf-8")).decode("ascii")


def _decode_cursor(cursor: str) -> tuple:
    try:
        parts = json.loads(base64.urlsafe_b64decode(cursor.encode("ascii")))
        return (str(parts[0]), int(parts[1]), str(parts[2]))
    except Exception:
        raise ValidationError(f"malformed cursor {cursor!r}") from None


class ReviewStore:
    """Materialized review state over an append-only decision ledger."""

    def __init__(self, ledger_path: str | Path, items: list[ReviewItem] | None = None):
        self.ledger_path = Path(ledger_path)
        self._lock = threading.Lock()
        self._items: dict[str, ReviewItem] = {}
        self._last_applied: dict[str, tuple] = {}
        self._ledger: list[ReviewDecision] = []
        for item in items or []:
            if item.snippet_id in self._items:
                raise ValidationError(f"duplicate item {item.snippet_id!r}")
            self._items[item.snippet_id] = item
        if self.ledger_path.exists():
            self._replay()

    def _replay(self) -> None:
        for lineno, line in enumerate(
            self.ledger_path.read_text(encoding="utf-8").splitlines(), start=1
        ):
            if not line.strip():
                continue
            try:
                decision = ReviewDecision.from_json(json.loads(line))
            except (json.JSONDecodeError, KeyError) as exc:
                raise ValidationError(f"ledger line {lineno}: {exc}") from None
            self._apply(decision)
            self._ledger.append(decision)

    def _apply(self, decision: ReviewDecision) -> ReviewItem:
        item = self._items.get(decision.snippet_id)
        if item is None:
            raise NotFoundError(f"unknown snippet {decision.snippet_id!r}")
        item.status = "accepted" if decision.verdict == "accept" else "rejected"
        if decision.corrected_text is not None:
            item.text = decision.corrected_text
        item.revision += 1
        self._last_applied[item.snippet_id] = decision.payload_key()
        return item

    # -- public API -----------------------------------------------------

    def get(self, snippet_id: str) -> ReviewItem:
        with self._lock:
            item = self._items.get(snippet_id)
            if item is None:
                raise NotFoundError(f"unknown snippet {snippet_id!r}")
            return ReviewItem.from_json(item.to_json())

    def submit_decision(self, decision: ReviewDecision) -> ReviewItem:
        """Apply a decision under optimistic concurrency.

        Exact duplicates of the most recently applied decision are
        idempotent (same result, no new ledger entry); any other stale
        base_revision raises ConflictError carrying the current item.
        """
        with self._lock:
            item = self._items.get(decision.snippet_id)
            if item is None:
                raise NotFoundError(f"unknown snippet {decision.snippet_id!r}")
            if decision.base_revision != item.revision:
                if (
                    decision.base_revision == item.revision - 1
                    and self._last_applied.get(item.snippet_id) == decision.payload_key()
                ):
                    return ReviewItem.from_json(item.to_json())
                raise ConflictError(ReviewItem.from_json(item.to_json()))
            with self.ledger_path.open("a", encoding="utf-8") as handle:
                handle.write(json.dumps(decision.to_json(), ensure_ascii=False) + "\n")
                handle.flush()
            self._ledger.append(decision)
            updated = self._apply(decision)
            return ReviewItem.from_json(updated.to_json())

    def list_items(
        self,
        status: str | None = None,
        year_from: int | None = None,
        year_to: int | None = None,
        min_score: float | None = None,
        cursor: str | None = None,
        page_size: int = 50,
    ) -> tuple[list[ReviewItem], str | None]:
        """Filtered page in stable (podcast date, snippet start, id) order."""
        if status is not None and status not in STATUSES:
            raise ValidationError(f"unknown status filter {status!r}")
        after = _decode_cursor(cursor) if cursor else None
        with self._lock:
            ordered = sorted(self._items.values(), key=ReviewItem.sort_key)
            selected: list[ReviewItem] = []
            for item in ordered:
                if after is not None and item.sort_key() <= after:
                    continue
                if status is not None and item.status != status:
                    continue
                year = int(item.podcast_date[:4]) if item.podcast_date[:4].isdigit() else None
                if year_from is not None and (year is None or year < year_from):
                    continue
                if year_to is not None and (year is None or year > year_to):
                    continue
                if min_score is not None and (item.score is None or item.score < min_score):
                    continue
                selected.append(ReviewItem.from_json(item.to_json()))
                if len(selected) > page_size:
                    break
        if len(selected) > page_size:
            page = selected[:page_size]
            return page, _encode_cursor(page[-1].sort_key())
        return selected, None

    @staticmethod
    def _promoted_embedding(item: ReviewItem, promo: dict):
        """Find the stored embedding for a promoted scene/track, if any."""
        want_scene = promo.get("scene")
        track_key = str(promo.get("track_id"))
        for scene in item.scenes:
            if want_scene is not None and scene.get("scene") != want_scene:
                continue
            vector = scene.get("embeddings", {}).get(track_key)
            if vector is not None:
                return vector
        return None

    def export_reference_set(self) -> dict:
        """All promotions from currently-accepted items, deduped, ledger order.

        Each promotion keeps its scene/track designation and media refs and,
        when the seeding decisions carried one, the promoted track's face
        embedding, so the descriptor can feed the next diarize run directly.
        """
        with self._lock:
            promotions: list[dict] = []
            excluded: list[dict] = []
            seen: set[str] = set()
            for decision in self._ledger:
                promo = decision.promote_reference
                if not promo:
                    continue
                key = json.dumps(
                    {"snippet_id": decision.snippet_id, **promo}, sort_keys=True
                )
                item = self._items.get(decision.snippet_id)
                if item is None or item.status != "accepted":
                    warnings.warn(
                        f"promotion on non-accepted snippet {decision.snippet_id}; excluded",
                        stacklevel=2,
                    )
                    excluded.append({"snippet_id": decision.snippet_id, **promo})
                    continue
                if key in seen:
                    continue
                seen.add(key)
                entry = {
                    "snippet_id": decision.snippet_id,
                    "media": item.media,
                    **promo,
                }
                embedding = self._promoted_embedding(item, promo)
                if embedding is not None:
                    entry["embedding"] = embedding
                promotions.append(entry)
        return {"promotions": promotions, "excluded": excluded}

    def state_snapshot(self) -> dict:
        with self._lock:
            return {sid: item.to_json() for sid, item in sorted(self._items.items())}


def load_items(path: str | Path) -> list[ReviewItem]:
    items = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            items.append(ReviewItem.from_json(json.loads(line)))
    return items


def build_items(decision_rows: list[dict], snippets: dict, manifest=None) -> list[ReviewItem]:
    """Seed review items from diarize decision rows plus the snippet table.

    Only accepted snippets are queued for review (rejected ones never make
    it into the corpus anyway). ``snippets`` maps snippet_id -> Snippet;
    scene summaries (scores, chosen tracks, embeddings) are kept verbatim
    so promotions can be resolved without re-running the backend.
    """
    items: list[ReviewItem] = []
    for row in decision_rows:
        if not row.get("accepted"):
            continue
        snippet = snippets.get(row["snippet_id"])
        if snippet is None:
            continue
        record = manifest.get(snippet.podcast_id) if manifest is not None else None
        scene_summaries = row.get("scenes", [])
        best = [
            max((c["asd_mean"] for c in scene.get("candidates", [])), default=0.0)
            for scene in scene_summaries
        ]
        items.append(
            ReviewItem(
                snippet_id=row["snippet_id"],
                text=snippet.text,
                score=min(best) if best else None,
                podcast_date=record.date.isoformat() if record else "",
                start_ms=snippet.start_ms,
                media={"face_preview": f"plans/{row['snippet_id']}.face.json"},
                scenes=scene_summaries,
            )
        )
    return items


# --------------------------------------------------------------------------
# HTTP layer

from pydantic import BaseModel


class DecisionBody(BaseModel):
    base_revision: int
    verdict: str
    corrected_text: str | None = None
    promote_reference: dict | None = None
    reviewer: str = ""


def create_app(store: ReviewStore, media_dir: str | Path | None = None):
    from fastapi import FastAPI, Header, HTTPException, Query
    from fastapi.middleware.cors import CORSMiddleware

    app = FastAPI(title="corpusctl review service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.get("/api/items")
    def list_items(
        status: str | None = None,
        year_from: int | None = None,
        year_to: int | None = None,
        min_score: float | None = Query(default=None),
        cursor: str | None = None,
        page_size: int = 50,
    ):
        try:
            items, next_cursor = store.list_items(
                status=status, year_from=year_from, year_to=year_to,
                min_score=min_score, cursor=cursor, page_size=page_size,
            )
        except ValidationError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"items": [i.to_json() for i in items], "next_cursor": next_cursor}

    @app.get("/api/items/{snippet_id}")
    def get_item(snippet_id: str):
        try:
            return store.get(snippet_id).to_json()
        except NotFoundError as exc:
            raise HTTPException(status_code=404, detail=str(exc))

    @app.post("/api/items/{snippet_id}/decision")
    def post_decision(
        snippet_id: str,
        body: DecisionBody,
        x_reviewer: str | None = Header(default=None),
    ):
        try:
            decision = ReviewDecision(
                snippet_id=snippet_id,
                base_revision=body.base_revision,
                verdict=body.verdict,
                corrected_text=body.corrected_text,
                promote_reference=body.promote_reference,
                reviewer=body.reviewer or x_reviewer or "anonymous",
                timestamp=_now_iso(),
            )
        except ValidationError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        try:
            return store.submit_decision(decision).to_json()
        except NotFoundError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except ConflictError as exc:
            raise HTTPException(status_code=409, detail={"current": exc.item.to_json()})

    @app.get("/api/reference-set")
    def reference_set():
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return store.export_reference_set()

    if media_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/media", StaticFiles(directory=str(media_dir)), name="media")
    return app


def _now_iso() -> str:
    from datetime import datetime, timezone

    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def serve(
    ledger: str | Path,
    media_dir: str | Path | None,
    port: int,
    items_path: str | Path | None = None,
    host: str = "127.0.0.1",
):
    import uvicorn

    items = load_items(items_path) if items_path else []
    store = ReviewStore(ledger, items)
    app = create_app(store, media_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")
