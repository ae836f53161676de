import hashlib
from datetime import date

import pytest

from corpusctl.catalog import (
    AssetStatus,
    CorpusManifest,
    PodcastRecord,
    fetch_catalog,
    load_manifest,
    manifest_to_bytes,
    save_manifest,
    verify_assets,
)
from corpusctl.errors import ValidationError

from conftest import make_manifest, make_record

ITEM = """
<li class="podcast" data-id="{id}" data-date="{date}" data-format="interview">
  <h2 class="title">Podcast {id}</h2>
  {media}
  <a class="transcript" href="text/{id}.txt">Mitschrift</a>
</li>
"""


def listing_page(items) -> str:
    return "<html><body><ul class='podcast-list'>%s</ul></body></html>" % "".join(items)


def make_item(item_id, item_date="2014-03-07", with_media=True):
    media = f'<a class="media" href="media/{item_id}.mp4">Video</a>' if with_media else ""
    return ITEM.format(id=item_id, date=item_date, media=media)


def write_pages(tmp_path, pages):
    for number, items in enumerate(pages, start=1):
        (tmp_path / f"page-{number}.html").write_text(listing_page(items), encoding="utf-8")
    return tmp_path


class TestFetchCatalog:
    def test_three_pages_five_items_each(self, tmp_path):
        pages = [
            [make_item(f"p{page}{k}") for k in range(5)] for page in range(3)
        ]
        result = fetch_catalog(str(write_pages(tmp_path, pages)), page_limit=10)
        assert len(result.records) == 15
        assert result.skipped == []
        assert result.pages == 3

    def test_empty_listing_page(self, tmp_path):
        result = fetch_catalog(str(write_pages(tmp_path, [[]])), page_limit=5)
        assert result.records == []
        assert result.skipped == []

    def test_item_without_media_is_skipped_and_reported(self, tmp_path):
        pages = [[make_item("a"), make_item("b", with_media=False)]]
        result = fetch_catalog(str(write_pages(tmp_path, pages)), page_limit=1)
        assert [r.id for r in result.records] == ["a"]
        assert len(result.skipped) == 1
        assert result.skipped[0].reason == "no_media"
        assert result.skipped[0].item_id == "b"

    def test_bad_date_is_skipped_not_guessed(self, tmp_path):
        pages = [[make_item("a", item_date="07.03.2014")]]
        result = fetch_catalog(str(write_pages(tmp_path, pages)), page_limit=1)
        assert result.records == []
        assert result.skipped[0].reason == "bad_date"

    def test_duplicate_ids_deduplicated(self, tmp_path):
        pages = [[make_item("a")], [make_item("a")]]
        result = fetch_catalog(str(write_pages(tmp_path, pages)), page_limit=2)
        assert len(result.records) == 1
        assert result.skipped[0].reason == "duplicate"

    def test_idempotent_over_identical_fixture(self, tmp_path):
        pages = [[make_item("b"), make_item("a")]]
        root = str(write_pages(tmp_path, pages))
        first = fetch_catalog(root, page_limit=3)
        second = fetch_catalog(root, page_limit=3)
        assert first.records == second.records

    def test_pre_2013_subtitles_get_override(self, tmp_path):
        item = ITEM.format(
            id="old",
            date="2010-05-01",
            media='<a class="media" href="media/old.mp4">v</a>'
            '<a class="subtitles" href="subs/old.vtt">ut</a>',
        )
        result = fetch_catalog(str(write_pages(tmp_path, [[item]])), page_limit=1)
        assert result.records[0].subtitle_override is True


class TestRecordInvariants:
    def test_subtitles_before_2013_need_override(self):
        with pytest.raises(ValidationError):
            make_record("a", "2010-01-01", subtitle_path="subs/a.vtt")
        make_record("a", "2010-01-01", subtitle_path="subs/a.vtt", subtitle_override=True)

    def test_duration_must_be_positive(self):
        with pytest.raises(ValidationError):
            make_record("a", duration_s=0.0)

    def test_duplicate_ids_rejected(self):
        with pytest.raises(ValidationError):
            make_manifest([make_record("a"), make_record("a")])

    def test_records_sorted_by_date_then_id(self):
        manifest = make_manifest(
            [make_record("b", "2015-01-01"), make_record("a", "2014-01-01"), make_record("aa", "2014-01-01")]
        )
        assert [r.id for r in manifest.records] == ["a", "aa", "b"]


class TestManifestIO:
    def test_two_line_roundtrip_sorted(self, tmp_path):
        manifest = make_manifest([make_record("b"), make_record("a")])
        path = tmp_path / "manifest.ndjson"
        save_manifest(manifest, path)
        loaded = load_manifest(path)
        assert [r.id for r in loaded.records] == ["a", "b"]

    def test_save_load_save_is_byte_identity(self, tmp_path):
        manifest = make_manifest(
            [
                make_record("a", duration_s=123.5, checksum="ab" * 32),
                make_record("b", "2009-05-01", transcript_path="text/b.txt"),
            ]
        )
        path = tmp_path / "manifest.ndjson"
        save_manifest(manifest, path)
        first = path.read_bytes()
        save_manifest(load_manifest(path), path)
        assert path.read_bytes() == first

    def test_duplicate_id_cites_both_lines(self, tmp_path):
        manifest = make_manifest([make_record("a"), make_record("b")])
        lines = manifest_to_bytes(manifest).decode().splitlines()
        lines.append(lines[1])  # duplicate record "a" again on line 4
        path = tmp_path / "manifest.ndjson"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        with pytest.raises(ValidationError) as err:
            load_manifest(path)
        assert "lines 2 and 4" in str(err.value)

    def test_malformed_line_reports_number(self, tmp_path):
        path = tmp_path / "manifest.ndjson"
        path.write_text('{"id": "a", "date": "2014-01-01", "title": "t"}\nnot json\n')
        with pytest.raises(Exception) as err:
            load_manifest(path)
        assert "line 2" in str(err.value)

    def test_630_record_fixture(self, tmp_path):
        records = [
            make_record(f"r{k:03d}", f"{2006 + k % 16}-03-0{1 + k % 9}") for k in range(630)
        ]
        path = tmp_path / "manifest.ndjson"
        save_manifest(make_manifest(records), path)
        assert len(load_manifest(path).records) == 630


class TestVerifyAssets:
    def fixture(self, tmp_path, content=b"video-bytes"):
        (tmp_path / "media").mkdir()
        (tmp_path / "subs").mkdir()
        media = tmp_path / "media" / "a.mp4"
        media.write_bytes(content)
        (tmp_path / "subs" / "a.vtt").write_text("WEBVTT\n")
        record = make_record(
            "a",
            subtitle_path="subs/a.vtt",
            checksum=hashlib.sha256(content).hexdigest(),
        )
        return make_manifest([record])

    def test_all_present_all_ok(self, tmp_path):
        report = verify_assets(self.fixture(tmp_path), tmp_path)
        assert report.statuses["a"] is AssetStatus.OK
        assert report.ok

    def test_absent_media_flagged(self, tmp_path):
        manifest = self.fixture(tmp_path)
        (tmp_path / "media" / "a.mp4").unlink()
        report = verify_assets(manifest, tmp_path)
        assert report.statuses["a"] is AssetStatus.MISSING_MEDIA
        assert not report.ok

    def test_flipped_byte_means_checksum_mismatch(self, tmp_path):
        manifest = self.fixture(tmp_path)
        original = (tmp_path / "media" / "a.mp4").read_bytes()
        mutated = bytes([original[0] ^ 0xFF]) + original[1:]
        (tmp_path / "media" / "a.mp4").write_bytes(mutated)
        # independent digest check: the mutated file really hashes differently
        assert hashlib.sha256(mutated).hexdigest() != hashlib.sha256(original).hexdigest()
        report = verify_assets(manifest, tmp_path)
        assert report.statuses["a"] is AssetStatus.CHECKSUM_MISMATCH

    def test_missing_subtitles_flagged(self, tmp_path):
        manifest = self.fixture(tmp_path)
        (tmp_path / "subs" / "a.vtt").unlink()
        report = verify_assets(manifest, tmp_path)
        assert report.statuses["a"] is AssetStatus.MISSING_SUBTITLES
        assert report.ok  # only missing media fails the run

    def test_unreadable_root_raises(self, tmp_path):
        with pytest.raises(OSError):
            verify_assets(make_manifest([]), tmp_path / "missing")
