"""Lexicon-based post themes and community keyword summaries."""

from __future__ import annotations

import json
import re
import warnings
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence
from urllib.parse import urlsplit

from .ingest import PostRecord

ADVERTISING = "advertising"
UNLABELED = "unlabeled"

# \w misses combining marks, which would split vocalised Arabic words.
_MARKS = "\u0300-\u036f\u0610-\u061a\u064b-\u065f\u0670\u06d6-\u06ed"
_WORD = rf"[\w{_MARKS}]+"
_TOKEN_RE = re.compile(rf"{_WORD}(?:['’]{_WORD})*")
_URL_RE = re.compile(r"(?:https?://|www\.)[^\s<>\"']+", re.IGNORECASE)
_LANG_NAMES = {"english": "en", "french": "fr", "francais": "fr", "français": "fr", "arabic": "ar"}


class ContentWarning(UserWarning):
    pass


def fold(text: str) -> str:
    """Case folding used everywhere text is compared."""
    return text.casefold().replace("’", "'")


def _token_spans(folded: str) -> list[tuple[str, int, int]]:
    """Tokens of already-folded text with their spans; URLs are skipped."""
    urls = [m.span() for m in _URL_RE.finditer(folded)]
    spans = []
    for m in _TOKEN_RE.finditer(folded):
        if any(a <= m.start() < b for a, b in urls):
            continue
        spans.append((m.group(0), m.start(), m.end()))
    return spans


def tokenize(text: str) -> list[str]:
    """Case-folded Unicode word tokens, URLs removed, apostrophes kept inside words."""
    return [t for t, _, _ in _token_spans(fold(text))]


def url_hosts(text: str | None) -> list[str]:
    if not text:
        return []
    hosts = []
    for m in _URL_RE.finditer(text):
        url = m.group(0).rstrip(".,;:!?)]}")
        if not url.lower().startswith("http"):
            url = "http://" + url
        host = urlsplit(url).hostname
        if host:
            hosts.append(host.rstrip("."))
    return hosts


@dataclass(frozen=True)
class Lexicon:
    themes: tuple[tuple[str, tuple[str, ...]], ...]
    shop_domains: tuple[str, ...] = ()
    stopwords: Mapping[str, frozenset[str]] = field(default_factory=dict)

    def __post_init__(self):
        names = [name for name, _ in self.themes]
        if not names:
            raise ValueError("lexicon defines no theme")
        if len(set(names)) != len(names):
            raise ValueError("duplicate theme name")
        for name, patterns in self.themes:
            if not patterns or any(not tokenize(p) for p in patterns):
                raise ValueError(f"theme {name!r} has an empty pattern")
        object.__setattr__(
            self,
            "_compiled",
            tuple((name, tuple((p, tuple(tokenize(p))) for p in patterns)) for name, patterns in self.themes),
        )

    @classmethod
    def from_dict(cls, data: Mapping) -> Lexicon:
        themes = tuple((name, tuple(patterns)) for name, patterns in data["themes"].items())
        domains = tuple(d.lower().lstrip(".") for d in data.get("shop_domains", ()))
        stop = {lang: frozenset(fold(w) for w in words) for lang, words in data.get("stopwords", {}).items()}
        return cls(themes, domains, stop)

    def stopwords_for(self, lang: str) -> frozenset[str]:
        """Union of stopword sets for a language string such as ``"ar/en"`` or ``"French"``."""
        words: set[str] = set()
        for code in re.split(r"[\s,/;+]+", lang.strip().lower()):
            if not code:
                continue
            code = _LANG_NAMES.get(code, code)
            if code in self.stopwords:
                words |= self.stopwords[code]
            else:
                warnings.warn(f"no stopwords for language {code!r}", ContentWarning, stacklevel=3)
        return frozenset(words)


def load_lexicon(path: str | Path) -> Lexicon:
    return Lexicon.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def default_lexicon() -> Lexicon:
    text = resources.files("brandgraph").joinpath("data/lexicon.json").read_text(encoding="utf-8")
    return Lexicon.from_dict(json.loads(text))


@dataclass(frozen=True)
class PostTheme:
    post_id: str
    labels: frozenset[str]
    matched_evidence: tuple[tuple[str, str], ...]


def _find_sequence(tokens: Sequence[str], pattern: Sequence[str]) -> int:
    k = len(pattern)
    first = pattern[0]
    for i in range(len(tokens) - k + 1):
        if tokens[i] == first and tuple(tokens[i : i + k]) == tuple(pattern):
            return i
    return -1


def classify_post(post: PostRecord, lex: Lexicon) -> PostTheme:
    """Multi-label theme assignment.

    ``advertising`` fires when the text or permalink links to a host under one
    of the lexicon's shop domains; every other theme fires when one of its
    patterns appears as a run of whole tokens.
    """
    evidence: list[tuple[str, str]] = []
    link_sources = [post.text]
    if post.permalink:
        link = post.permalink if _URL_RE.match(post.permalink) else "http://" + post.permalink
        link_sources.append(link)
    for host in (h for src in link_sources for h in url_hosts(src)):
        host = host.lower()
        if any(host == d or host.endswith("." + d) for d in lex.shop_domains):
            evidence.append((ADVERTISING, host))
            break

    folded = fold(post.text)
    spans = _token_spans(folded)
    tokens = [t for t, _, _ in spans]
    for name, patterns in lex._compiled:  # type: ignore[attr-defined]
        for _, ptoks in patterns:
            at = _find_sequence(tokens, ptoks)
            if at >= 0:
                evidence.append((name, folded[spans[at][1] : spans[at + len(ptoks) - 1][2]]))
                break
    return PostTheme(post.post_id, frozenset(t for t, _ in evidence), tuple(evidence))


@dataclass(frozen=True)
class CommunityTheme:
    community_id: int
    dominant_theme: str
    label_histogram: dict[str, int]
    top_keywords: list[tuple[str, int]]


def community_theme(
    community_posts: Sequence[PostRecord],
    labels: Sequence[PostTheme],
    lex: Lexicon,
    lang: str,
    community_id: int = 0,
) -> CommunityTheme:
    if len(community_posts) != len(labels):
        raise ValueError("labels must match posts one to one")
    histogram: Counter[str] = Counter()
    for theme in labels:
        histogram.update(theme.labels)
    if histogram:
        dominant = min(histogram, key=lambda t: (-histogram[t], t))
    else:
        dominant = UNLABELED
    stop = lex.stopwords_for(lang)
    counts = Counter(tok for post in community_posts for tok in tokenize(post.text) if tok not in stop)
    keywords = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return CommunityTheme(community_id, dominant, dict(sorted(histogram.items())), keywords)


def theme_distribution(themes: Iterable[CommunityTheme], weights: Mapping[int, float]) -> dict[str, float]:
    """Sum ``weights[community_id]`` per dominant theme."""
    out: dict[str, float] = {}
    for t in themes:
        out[t.dominant_theme] = out.get(t.dominant_theme, 0.0) + weights.get(t.community_id, 0.0)
    return dict(sorted(out.items()))
