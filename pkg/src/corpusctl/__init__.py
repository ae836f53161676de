"""corpusctl: build single-target-speaker audio/video/text corpora.

Turns collections of multi-speaker interview/podcast videos into a curated
corpus of short snippets in which one target speaker is visibly speaking.
The heavy neural models (face detection, active-speaker scoring, embeddings,
speech segmentation) live in external backend processes spoken to over a
small NDJSON protocol; everything here is deterministic and testable.

Subpackages / modules:

- ``catalog``    video catalog scraping, NDJSON manifest, asset verification
- ``textio``     WebVTT/SRT subtitles, transcripts, word-alignment TSV, metrics
- ``snippeter``  pause-based unit segmentation and duration-budget packing
- ``video``      YUV4MPEG2 frame streams, scene cuts, crop rendering
- ``diarize``    face tracking, score fusion, per-scene selection, recombination
- ``backends``   backend wire protocol, subprocess sessions, synthetic backend
- ``stats``      corpus statistics and figure-style CSV/JSON reports
- ``agenet``     softmax regression from speaker embeddings to recording year
- ``reviewsvc``  human review HTTP service with an append-only decision ledger
"""

__version__ = "0.1.0"
