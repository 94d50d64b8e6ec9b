"""Dataset manifest (JSON) and seeded train/val/test splitting."""

from dataclasses import dataclass, field, replace
from fractions import Fraction
import json
import os

import numpy as np

from ..errors import FormatError, UsageError

SPLITS = ("train", "val", "test")
DEFAULT_RATIOS = (0.85, 0.05, 0.10)


@dataclass
class Entry:
    subject: str
    utterance: str
    eeg: str
    video: str
    split: str = ""


@dataclass
class DatasetManifest:
    entries: list = field(default_factory=list)
    seed: int | None = None
    ratios: tuple = DEFAULT_RATIOS
    root: str = "."

    def subjects(self):
        return sorted({e.subject for e in self.entries})

    def select(self, split=None, subject=None):
        return [e for e in self.entries
                if (split is None or e.split == split) and (subject is None or e.subject == subject)]

    def path(self, rel):
        return rel if os.path.isabs(rel) else os.path.join(self.root, rel)

    def counts(self):
        return {s: sum(e.split == s for e in self.entries) for s in SPLITS}


def split_counts(n, ratios=DEFAULT_RATIOS):
    """Split sizes for ``n`` items by largest-remainder rounding.

    Each split first gets ``floor(n * ratio)``; leftover items go to the
    largest fractional parts (ties to the earlier split). Afterwards any
    split with a positive ratio that came out empty takes one item from the
    currently largest split, so with ``n >= 3`` no split is empty.
    """
    fracs = [Fraction(r).limit_denominator(10 ** 9) for r in ratios]
    if abs(sum(float(f) for f in fracs) - 1.0) > 1e-9 or any(f < 0 for f in fracs):
        raise UsageError(f"split ratios must be non-negative and sum to 1, got {tuple(ratios)}")
    total = sum(fracs)
    fracs = [f / total for f in fracs]
    exact = [n * f for f in fracs]
    counts = [int(e) for e in exact]
    order = sorted(range(len(fracs)), key=lambda i: (-(exact[i] - counts[i]), i))
    for i in order[: n - sum(counts)]:
        counts[i] += 1
    for i, f in enumerate(fracs):
        if f > 0 and counts[i] == 0:
            donor = max(range(len(counts)), key=lambda j: (counts[j], -j))
            if counts[donor] <= 1:
                break
            counts[donor] -= 1
            counts[i] += 1
    return counts


def split_dataset(manifest, ratios=DEFAULT_RATIOS, seed=0, by_subject=False):
    """Assign every entry to train/val/test.

    Entries are shuffled with a generator seeded by ``seed`` and cut into
    contiguous runs sized by :func:`split_counts`. Splitting is per entry
    (utterance), so no sequence straddles two splits. With ``by_subject``
    each subject is shuffled and cut separately, which guarantees every
    subject some held-out data at the cost of exact global ratios.
    """
    if len(manifest.entries) < 3:
        raise UsageError(f"need at least 3 entries to split, got {len(manifest.entries)}")
    split_counts(len(manifest.entries), ratios)  # validates ratios
    groups = ([[i for i, e in enumerate(manifest.entries) if e.subject == s]
               for s in manifest.subjects()] if by_subject else [list(range(len(manifest.entries)))])
    labels = [""] * len(manifest.entries)
    for group in groups:
        rng = np.random.default_rng(seed)
        perm = rng.permutation(len(group))
        counts = split_counts(len(group), ratios)
        start = 0
        for name, count in zip(SPLITS, counts):
            for j in perm[start:start + count]:
                labels[group[j]] = name
            start += count
    entries = [replace(e, split=s) for e, s in zip(manifest.entries, labels)]
    return replace(manifest, entries=entries, seed=seed, ratios=tuple(ratios))


def to_json(manifest):
    doc = {
        "seed": manifest.seed,
        "ratios": list(manifest.ratios),
        "entries": [{"subject": e.subject, "utterance": e.utterance, "eeg": e.eeg,
                     "video": e.video, "split": e.split} for e in manifest.entries],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def from_json(text, root="."):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError("manifest", f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("entries"), list):
        raise FormatError("manifest.entries", "missing entries array")
    entries = []
    for i, raw in enumerate(doc["entries"]):
        try:
            entries.append(Entry(str(raw["subject"]), str(raw["utterance"]), str(raw["eeg"]),
                                 str(raw["video"]), str(raw.get("split", ""))))
        except (KeyError, TypeError) as exc:
            raise FormatError(f"manifest.entries[{i}]", f"missing field {exc}") from exc
        if entries[-1].split not in SPLITS + ("",):
            raise FormatError(f"manifest.entries[{i}].split", f"unknown split {entries[-1].split!r}")
    ratios = tuple(doc.get("ratios", DEFAULT_RATIOS))
    return DatasetManifest(entries, doc.get("seed"), ratios, root)


def save_manifest(manifest, path):
    with open(path, "w") as fh:
        fh.write(to_json(manifest))


def load_manifest(path):
    with open(path) as fh:
        return from_json(fh.read(), root=os.path.dirname(os.path.abspath(path)))
