"""Video catalog ingest and the NDJSON corpus manifest.

The manifest is the single source of truth driving every later pipeline
stage: one record per source video with its date, format, language and the
relative paths of the media/subtitle/transcript assets. Records can be
scraped from the source site's listing pages (or from saved HTML fixtures,
which is how tests run) and verified against the files on disk.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import date as Date
from datetime import datetime, timezone
from enum import Enum
from html.parser import HTMLParser
from pathlib import Path
from urllib.parse import urljoin

from .errors import ParseError, RetriableError, ValidationError

__all__ = [
    "PodcastRecord",
    "CorpusManifest",
    "FetchResult",
    "SkippedItem",
    "AssetStatus",
    "VerificationReport",
    "fetch_catalog",
    "load_manifest",
    "save_manifest",
    "verify_assets",
]

SUBTITLE_ERA_START = Date(2013, 1, 1)

FORMATS = ("speech", "interview", "other")

# Documented wire order of manifest record keys; optionals are omitted when
# absent so the NDJSON stays diff-friendly.
_RECORD_KEYS = (
    "id",
    "date",
    "title",
    "format",
    "language",
    "media_path",
    "subtitle_path",
    "transcript_path",
    "duration_s",
    "checksum",
    "subtitle_override",
)


@dataclass(frozen=True)
class PodcastRecord:
    """Catalog entry for one source video."""

    id: str
    date: Date
    title: str
    format: str = "other"
    language: str = "de"
    media_path: str = ""
    subtitle_path: str | None = None
    transcript_path: str | None = None
    duration_s: float | None = None
    checksum: str | None = None
    subtitle_override: bool = False

    def __post_init__(self):
        if not self.id:
            raise ValidationError("record id must be non-empty")
        if self.format not in FORMATS:
            raise ValidationError(f"record {self.id}: unknown format {self.format!r}")
        if self.duration_s is not None and self.duration_s <= 0:
            raise ValidationError(f"record {self.id}: duration_s must be > 0")
        if (
            self.subtitle_path is not None
            and self.date < SUBTITLE_ERA_START
            and not self.subtitle_override
        ):
            raise ValidationError(
                f"record {self.id}: subtitles before {SUBTITLE_ERA_START.isoformat()} "
                "require subtitle_override"
            )

    def to_json(self) -> dict:
        data = {
            "id": self.id,
            "date": self.date.isoformat(),
            "title": self.title,
            "format": self.format,
            "language": self.language,
            "media_path": self.media_path,
            "subtitle_path": self.subtitle_path,
            "transcript_path": self.transcript_path,
            "duration_s": self.duration_s,
            "checksum": self.checksum,
            "subtitle_override": self.subtitle_override or None,
        }
        return {k: data[k] for k in _RECORD_KEYS if data[k] is not None}

    @classmethod
    def from_json(cls, data: dict) -> "PodcastRecord":
        try:
            parsed_date = Date.fromisoformat(data["date"])
        except (KeyError, ValueError) as exc:
            raise ValidationError(f"record {data.get('id', '?')}: bad or missing date") from exc
        return cls(
            id=data.get("id", ""),
            date=parsed_date,
            title=data.get("title", ""),
            format=data.get("format", "other"),
            language=data.get("language", "de"),
            media_path=data.get("media_path", ""),
            subtitle_path=data.get("subtitle_path"),
            transcript_path=data.get("transcript_path"),
            duration_s=data.get("duration_s"),
            checksum=data.get("checksum"),
            subtitle_override=bool(data.get("subtitle_override", False)),
        )


def _sort_key(record: PodcastRecord) -> tuple:
    return (record.date, record.id)


@dataclass(frozen=True)
class CorpusManifest:
    """Ordered, duplicate-free collection of records plus provenance."""

    records: tuple[PodcastRecord, ...]
    created_at: str
    source_url: str = ""

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(sorted(self.records, key=_sort_key)))
        seen: set[str] = set()
        for record in self.records:
            if record.id in seen:
                raise ValidationError(f"duplicate record id {record.id!r}")
            seen.add(record.id)

    @classmethod
    def build(cls, records, source_url: str = "") -> "CorpusManifest":
        created = datetime.now(timezone.utc).isoformat(timespec="seconds")
        return cls(records=tuple(records), created_at=created, source_url=source_url)

    def get(self, record_id: str) -> PodcastRecord | None:
        return next((r for r in self.records if r.id == record_id), None)


def manifest_to_bytes(manifest: CorpusManifest) -> bytes:
    meta = {
        "manifest_version": 1,
        "created_at": manifest.created_at,
        "source_url": manifest.source_url,
    }
    lines = [json.dumps(meta, ensure_ascii=False)]
    lines += [json.dumps(r.to_json(), ensure_ascii=False) for r in manifest.records]
    return ("\n".join(lines) + "\n").encode("utf-8")


def save_manifest(manifest: CorpusManifest, path: str | Path) -> None:
    Path(path).write_bytes(manifest_to_bytes(manifest))


def load_manifest(path: str | Path) -> CorpusManifest:
    """Load and validate a ``manifest.ndjson`` file.

    Duplicate ids are rejected with both offending line numbers; malformed
    lines are rejected with theirs. Records come back sorted by (date, id).
    """
    text = Path(path).read_text(encoding="utf-8")
    created_at = ""
    source_url = ""
    records: list[PodcastRecord] = []
    first_line: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", line=lineno) from None
        if "manifest_version" in data:
            created_at = data.get("created_at", "")
            source_url = data.get("source_url", "")
            continue
        record = PodcastRecord.from_json(data)
        if record.id in first_line:
            raise ValidationError(
                f"duplicate record id {record.id!r} on lines {first_line[record.id]} and {lineno}"
            )
        first_line[record.id] = lineno
        records.append(record)
    return CorpusManifest(records=tuple(records), created_at=created_at, source_url=source_url)


# --------------------------------------------------------------------------
# asset verification

class AssetStatus(str, Enum):
    OK = "ok"
    MISSING_MEDIA = "missing_media"
    MISSING_SUBTITLES = "missing_subtitles"
    CHECKSUM_MISMATCH = "checksum_mismatch"


@dataclass
class VerificationReport:
    statuses: dict[str, AssetStatus]
    counts: dict[AssetStatus, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.counts:
            self.counts = {status: 0 for status in AssetStatus}
            for status in self.statuses.values():
                self.counts[status] += 1

    @property
    def ok(self) -> bool:
        return self.counts[AssetStatus.MISSING_MEDIA] == 0


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def verify_assets(manifest: CorpusManifest, root: str | Path) -> VerificationReport:
    """Check that each record's assets exist (and media digests match).

    Per-record status precedence: missing media beats a checksum mismatch
    beats missing subtitles. The CLI exits non-zero iff media is missing.
    """
    root = Path(root)
    if not root.is_dir():
        raise OSError(f"asset root {root} is not a readable directory")
    statuses: dict[str, AssetStatus] = {}
    for record in manifest.records:
        media = root / record.media_path
        if not record.media_path or not media.is_file():
            statuses[record.id] = AssetStatus.MISSING_MEDIA
            continue
        if record.checksum is not None and _sha256(media) != record.checksum.lower():
            statuses[record.id] = AssetStatus.CHECKSUM_MISMATCH
            continue
        if record.subtitle_path is not None and not (root / record.subtitle_path).is_file():
            statuses[record.id] = AssetStatus.MISSING_SUBTITLES
            continue
        statuses[record.id] = AssetStatus.OK
    return VerificationReport(statuses=statuses)


# --------------------------------------------------------------------------
# catalog scraping

@dataclass(frozen=True)
class SkippedItem:
    page: int
    item_id: str | None
    reason: str


@dataclass
class FetchResult:
    records: list[PodcastRecord]
    skipped: list[SkippedItem]
    pages: int


class _ListingParser(HTMLParser):
    """Parses one observed listing-page layout (see fixture docs).

    Items are elements carrying class ``podcast`` with ``data-id``,
    ``data-date`` and optional ``data-format``/``data-lang``/
    ``data-duration`` attributes; asset links are anchors classed ``media``,
    ``subtitles`` or ``transcript``; the title is the text of the element
    classed ``title``. The source site is outside our control, so this
    parser is deliberately small and replaceable.
    """

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.items: list[dict] = []
        self._item: dict | None = None
        self._depth = 0
        self._in_title = False

    @staticmethod
    def _classes(attrs) -> set[str]:
        return set((dict(attrs).get("class") or "").split())

    def handle_starttag(self, tag, attrs):
        classes = self._classes(attrs)
        attr_map = dict(attrs)
        if self._item is not None:
            self._depth += 1
            if tag == "a":
                for kind in ("media", "subtitles", "transcript"):
                    if kind in classes:
                        self._item[kind] = attr_map.get("href", "")
            if "title" in classes:
                self._in_title = True
        elif "podcast" in classes:
            self._item = {
                "id": attr_map.get("data-id"),
                "date": attr_map.get("data-date"),
                "format": attr_map.get("data-format", "other"),
                "lang": attr_map.get("data-lang", "de"),
                "duration": attr_map.get("data-duration"),
                "title": "",
            }
            self._depth = 0

    def handle_data(self, data):
        if self._in_title and self._item is not None:
            self._item["title"] += data

    def handle_endtag(self, tag):
        if self._item is None:
            return
        if self._in_title:
            self._in_title = False
        if self._depth == 0:
            self.items.append(self._item)
            self._item = None
        else:
            self._depth -= 1


def _parse_listing(html: str, page: int) -> list[dict]:
    parser = _ListingParser()
    try:
        parser.feed(html)
        parser.close()
    except Exception as exc:  # html.parser raises plain exceptions on bad markup
        raise ParseError(f"listing page {page}: {exc}") from exc
    return parser.items


def _fetch_page_http(base_url: str, page: int, cache_dir: str | None, retries: int = 3) -> str | None:
    import requests

    url = f"{base_url}{'&' if '?' in base_url else '?'}page={page}"
    cache_file = None
    if cache_dir:
        cache_file = Path(cache_dir) / (hashlib.sha256(url.encode()).hexdigest() + ".html")
        if cache_file.is_file():
            return cache_file.read_text(encoding="utf-8")
    delay = 0.5
    for attempt in range(retries + 1):
        try:
            response = requests.get(url, timeout=30)
            if response.status_code == 404:
                return None
            response.raise_for_status()
            if cache_file is not None:
                cache_file.parent.mkdir(parents=True, exist_ok=True)
                cache_file.write_text(response.text, encoding="utf-8")
            return response.text
        except Exception:
            if attempt == retries:
                raise RetriableError(f"failed to fetch catalog page {page} after {retries} retries")
            time.sleep(delay)
            delay *= 2
    return None


def _fetch_page(base_url: str, page: int, cache_dir: str | None) -> str | None:
    """Returns page HTML, or None when the page does not exist (end of listing)."""
    fixture_dir = Path(base_url)
    if fixture_dir.is_dir():
        candidate = fixture_dir / f"page-{page}.html"
        if not candidate.is_file():
            return None
        return candidate.read_text(encoding="utf-8")
    return _fetch_page_http(base_url, page, cache_dir)


def _item_to_record(item: dict, base_url: str, page: int, skipped: list[SkippedItem]) -> PodcastRecord | None:
    item_id = item.get("id")
    if not item_id:
        skipped.append(SkippedItem(page, None, "missing_id"))
        return None
    if not item.get("media"):
        skipped.append(SkippedItem(page, item_id, "no_media"))
        return None
    try:
        item_date = Date.fromisoformat(item.get("date") or "")
    except ValueError:
        skipped.append(SkippedItem(page, item_id, "bad_date"))
        return None

    def resolve(href: str | None) -> str | None:
        if href is None:
            return None
        if Path(base_url).is_dir():
            return href
        return urljoin(base_url, href)

    duration = None
    if item.get("duration"):
        try:
            duration = float(item["duration"])
        except ValueError:
            skipped.append(SkippedItem(page, item_id, "bad_duration"))
            return None
    fmt = item.get("format") or "other"
    record = PodcastRecord(
        id=item_id,
        date=item_date,
        title=item.get("title", "").strip(),
        format=fmt if fmt in FORMATS else "other",
        language=item.get("lang") or "de",
        media_path=resolve(item["media"]),
        subtitle_path=resolve(item.get("subtitles")),
        transcript_path=resolve(item.get("transcript")),
        duration_s=duration,
        subtitle_override=bool(item.get("subtitles")) and item_date < SUBTITLE_ERA_START,
    )
    return record


def fetch_catalog(
    base_url: str,
    page_limit: int,
    concurrency: int = 4,
    cache_dir: str | None = None,
) -> FetchResult:
    """Fetch listing pages and return deduplicated catalog records.

    ``base_url`` is either an HTTP(S) URL (paged via ``?page=N``, with 3
    retries and exponential backoff per page) or a directory of saved
    ``page-N.html`` fixtures. Items without a media link, with unparseable
    dates, or repeating an already-seen id are skipped and reported rather
    than guessed at. Results are sorted by (date, id), so identical listings
    give identical output regardless of fetch order.
    """
    if page_limit < 1:
        raise ValueError("page_limit must be >= 1")
    if cache_dir is None:
        cache_dir = os.environ.get("CORPUSCTL_CACHE")

    page_numbers = range(1, page_limit + 1)
    with ThreadPoolExecutor(max_workers=max(1, concurrency)) as pool:
        pages = list(pool.map(lambda n: _fetch_page(base_url, n, cache_dir), page_numbers))

    records: dict[str, PodcastRecord] = {}
    skipped: list[SkippedItem] = []
    fetched = 0
    for page, html in zip(page_numbers, pages):
        if html is None:
            break
        fetched += 1
        items = _parse_listing(html, page)
        if not items:
            break
        for item in items:
            record = _item_to_record(item, base_url, page, skipped)
            if record is None:
                continue
            if record.id in records:
                skipped.append(SkippedItem(page, record.id, "duplicate"))
                continue
            records[record.id] = record
    ordered = sorted(records.values(), key=_sort_key)
    return FetchResult(records=ordered, skipped=skipped, pages=fetched)
