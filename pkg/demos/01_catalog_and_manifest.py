"""Build a catalog from saved listing pages and verify its assets.

Walks the first pipeline stage end to end on a tiny fixture corpus:
scrape listing HTML -> manifest.ndjson -> integrity check against disk.
"""

import hashlib
import tempfile
from pathlib import Path

from corpusctl.catalog import CorpusManifest, fetch_catalog, load_manifest, save_manifest, verify_assets

PAGE = """
<ul class="podcast-list">
  <li class="podcast" data-id="{id}" data-date="{date}" data-format="interview" data-duration="312">
    <h2 class="title">Podcast vom {date}</h2>
    <a class="media" href="media/{id}.mp4">Video</a>
    <a class="subtitles" href="subs/{id}.vtt">Untertitel</a>
  </li>
  <li class="podcast" data-id="{id}-broken" data-date="{date}">
    <h2 class="title">Eintrag ohne Video</h2>
  </li>
</ul>
"""

workdir = Path(tempfile.mkdtemp(prefix="corpusctl-demo-"))
listing = workdir / "listing"
listing.mkdir()
for page, date in enumerate(["2014-03-07", "2015-06-12", "2016-01-22"], start=1):
    (listing / f"page-{page}.html").write_text(PAGE.format(id=f"ep{page}", date=date))

result = fetch_catalog(str(listing), page_limit=10)
print(f"fetched {len(result.records)} records over {result.pages} pages")
for skip in result.skipped:
    print(f"  skipped {skip.item_id!r} on page {skip.page}: {skip.reason}")

manifest = CorpusManifest.build(result.records, source_url=str(listing))
manifest_path = workdir / "manifest.ndjson"
save_manifest(manifest, manifest_path)
print(f"\nmanifest written to {manifest_path}:")
print(manifest_path.read_text(), end="")

# lay down the assets the manifest promises, then verify
root = workdir / "assets"
for record in manifest.records:
    media = root / record.media_path
    media.parent.mkdir(parents=True, exist_ok=True)
    media.write_bytes(b"pretend this is AC3+H.264 " + record.id.encode())
    subs = root / record.subtitle_path
    subs.parent.mkdir(parents=True, exist_ok=True)
    subs.write_text("WEBVTT\n")

report = verify_assets(load_manifest(manifest_path), root)
print("\nverification:", {status.value: n for status, n in report.counts.items() if n})

# flip one byte and watch the checksum catch it
checked = manifest.records[0]
media = root / checked.media_path
digest = hashlib.sha256(media.read_bytes()).hexdigest()
manifest = CorpusManifest.build(
    [r if r.id != checked.id else type(r)(**{**r.__dict__, "checksum": digest}) for r in manifest.records],
    source_url=manifest.source_url,
)
corrupted = bytearray(media.read_bytes())
corrupted[0] ^= 0xFF
media.write_bytes(bytes(corrupted))
report = verify_assets(manifest, root)
print("after corrupting one media file:", report.statuses[checked.id].value)
