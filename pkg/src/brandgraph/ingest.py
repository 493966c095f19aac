"""Brand-page dataset model and its on-disk directory format.

A dataset directory holds four UTF-8 files::

    meta.json    page_id, country, language, culture_label, window_start, window_end
    posts.tsv    post_id  post_type  created_at  text  permalink
    users.tsv    user_id  is_page_owner
    events.tsv   user_id  post_id  kind  count

TSV cells escape backslash, tab, newline and carriage return as ``\\\\``,
``\\t``, ``\\n`` and ``\\r``.  Extra columns are ignored, a leading byte-order
mark is stripped, and repeated ``(user_id, post_id, kind)`` event rows are
merged by summing their counts (first occurrence keeps its position).
"""

from __future__ import annotations

import json
import re
import warnings
from dataclasses import dataclass
from datetime import datetime, timezone
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator

from .errors import (
    DuplicateId,
    MalformedRow,
    MissingFile,
    PostLimitExceeded,
    ReferentialIntegrity,
)

POST_TYPES = ("photo", "video", "link", "status")
EVENT_KINDS = ("like", "comment", "comment_reply", "share")
MAX_POSTS = 999

META_FILE = "meta.json"
POSTS_FILE = "posts.tsv"
USERS_FILE = "users.tsv"
EVENTS_FILE = "events.tsv"

POSTS_HEADER = ("post_id", "post_type", "created_at", "text", "permalink")
USERS_HEADER = ("user_id", "is_page_owner")
EVENTS_HEADER = ("user_id", "post_id", "kind", "count")
META_KEYS = ("page_id", "country", "language", "culture_label", "window_start", "window_end")


class DatasetWarning(UserWarning):
    """Non-fatal oddity in a dataset, e.g. a post dated outside the export window."""


@dataclass(frozen=True)
class PostRecord:
    post_id: str
    post_type: str
    created_at: datetime
    text: str = ""
    permalink: str | None = None


@dataclass(frozen=True)
class UserRecord:
    user_id: str
    is_page_owner: bool = False


@dataclass(frozen=True)
class EngagementEvent:
    user_id: str
    post_id: str
    kind: str
    count: int = 1


@dataclass(frozen=True)
class PageDataset:
    page_id: str
    country: str
    language: str
    culture_label: str
    posts: tuple[PostRecord, ...]
    users: tuple[UserRecord, ...]
    events: tuple[EngagementEvent, ...]
    window_start: datetime
    window_end: datetime

    @cached_property
    def post_by_id(self) -> dict[str, PostRecord]:
        return {p.post_id: p for p in self.posts}

    @cached_property
    def user_by_id(self) -> dict[str, UserRecord]:
        return {u.user_id: u for u in self.users}

    @cached_property
    def owner_id(self) -> str | None:
        for u in self.users:
            if u.is_page_owner:
                return u.user_id
        return None


@dataclass(frozen=True)
class DatasetStats:
    n_posts: int = 0
    n_users: int = 0
    n_events: int = 0
    total_engagements: int = 0


def dataset_stats(ds: PageDataset) -> DatasetStats:
    return DatasetStats(
        n_posts=len(ds.posts),
        n_users=len(ds.users),
        n_events=len(ds.events),
        total_engagements=sum(e.count for e in ds.events),
    )


def merge_events(events: Iterable[EngagementEvent]) -> tuple[EngagementEvent, ...]:
    """Sum counts of events sharing ``(user_id, post_id, kind)``."""
    merged: dict[tuple[str, str, str], int] = {}
    for e in events:
        key = (e.user_id, e.post_id, e.kind)
        merged[key] = merged.get(key, 0) + e.count
    return tuple(EngagementEvent(u, p, k, c) for (u, p, k), c in merged.items())


# ---------------------------------------------------------------- timestamps


def parse_timestamp(text: str) -> datetime:
    """Parse an RFC 3339 timestamp and convert it to UTC."""
    s = text.strip()
    if s[-1:] in ("Z", "z"):
        s = s[:-1] + "+00:00"
    dt = datetime.fromisoformat(s)
    if dt.tzinfo is None:
        raise ValueError(f"timestamp {text!r} has no UTC offset")
    return dt.astimezone(timezone.utc)


def format_timestamp(dt: datetime) -> str:
    if dt.tzinfo is None:
        raise ValueError("naive datetime")
    dt = dt.astimezone(timezone.utc)
    out = dt.strftime("%Y-%m-%dT%H:%M:%S")
    if dt.microsecond:
        out += f".{dt.microsecond:06d}"
    return out + "Z"


# ---------------------------------------------------------------- escaping

_ESCAPES = {"\\": "\\\\", "\t": "\\t", "\n": "\\n", "\r": "\\r"}
_UNESCAPES = {"\\": "\\", "t": "\t", "n": "\n", "r": "\r"}
_ESCAPE_RE = re.compile(r"[\\\t\n\r]")
_UNESCAPE_RE = re.compile(r"\\(.?)", re.DOTALL)


def escape_cell(value: str) -> str:
    return _ESCAPE_RE.sub(lambda m: _ESCAPES[m.group(0)], value)


def unescape_cell(value: str) -> str:
    def repl(m: re.Match) -> str:
        ch = m.group(1)
        if ch not in _UNESCAPES or ch == "":
            raise ValueError(f"invalid escape sequence {m.group(0)!r}")
        return _UNESCAPES[ch]

    return _UNESCAPE_RE.sub(repl, value)


# ---------------------------------------------------------------- reading


def _read_text(path: Path) -> str:
    if not path.is_file():
        raise MissingFile(path.name)
    data = path.read_bytes()
    try:
        return data.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        line = data.count(b"\n", 0, exc.start) + 1
        raise MalformedRow(path.name, line, "invalid UTF-8") from None


def _tsv_rows(path: Path, required: tuple[str, ...]) -> Iterator[tuple[int, dict[str, str]]]:
    """Yield ``(line_number, {column: raw cell})`` for each data row."""
    lines = _read_text(path).split("\n")
    name = path.name
    if not lines or not lines[0].strip():
        raise MalformedRow(name, 1, "missing header row")
    header = lines[0].rstrip("\r").split("\t")
    missing = [c for c in required if c not in header]
    if missing:
        raise MalformedRow(name, 1, f"header lacks column(s): {', '.join(missing)}")
    if len(set(header)) != len(header):
        raise MalformedRow(name, 1, "duplicate column name in header")
    idx = {c: header.index(c) for c in required}
    for lineno, raw in enumerate(lines[1:], start=2):
        raw = raw.rstrip("\r")
        if not raw:
            continue
        cells = raw.split("\t")
        if len(cells) != len(header):
            raise MalformedRow(name, lineno, f"expected {len(header)} fields, found {len(cells)}")
        yield lineno, {c: cells[i] for c, i in idx.items()}


def _read_meta(path: Path) -> dict:
    text = _read_text(path)
    try:
        meta = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedRow(META_FILE, exc.lineno, f"invalid JSON: {exc.msg}") from None
    if not isinstance(meta, dict):
        raise MalformedRow(META_FILE, 1, "expected a JSON object")
    for key in META_KEYS:
        if key not in meta:
            raise MalformedRow(META_FILE, None, f"missing key {key!r}")
        if not isinstance(meta[key], str):
            raise MalformedRow(META_FILE, None, f"key {key!r} must be a string")
    for key in ("window_start", "window_end"):
        try:
            meta[key] = parse_timestamp(meta[key])
        except ValueError as exc:
            raise MalformedRow(META_FILE, None, f"{key}: {exc}") from None
    return meta


def _parse_posts(path: Path) -> list[PostRecord]:
    posts: list[PostRecord] = []
    seen: set[str] = set()
    for lineno, row in _tsv_rows(path, POSTS_HEADER):
        try:
            post_id = unescape_cell(row["post_id"])
            text = unescape_cell(row["text"])
            permalink = unescape_cell(row["permalink"]) or None
        except ValueError as exc:
            raise MalformedRow(POSTS_FILE, lineno, str(exc)) from None
        if not post_id:
            raise MalformedRow(POSTS_FILE, lineno, "empty post_id")
        if post_id in seen:
            raise DuplicateId(POSTS_FILE, lineno, f"duplicate post_id {post_id!r}")
        if row["post_type"] not in POST_TYPES:
            raise MalformedRow(POSTS_FILE, lineno, f"unknown post_type {row['post_type']!r}")
        try:
            created = parse_timestamp(row["created_at"])
        except ValueError as exc:
            raise MalformedRow(POSTS_FILE, lineno, f"created_at: {exc}") from None
        seen.add(post_id)
        posts.append(PostRecord(post_id, row["post_type"], created, text, permalink))
        if len(posts) > MAX_POSTS:
            raise PostLimitExceeded(POSTS_FILE, lineno, f"more than {MAX_POSTS} posts")
    return posts


def _parse_bool(cell: str) -> bool:
    if cell == "true":
        return True
    if cell == "false":
        return False
    raise ValueError(f"expected true/false, found {cell!r}")


def _parse_users(path: Path) -> list[UserRecord]:
    users: list[UserRecord] = []
    seen: set[str] = set()
    owner_line = None
    for lineno, row in _tsv_rows(path, USERS_HEADER):
        try:
            user_id = unescape_cell(row["user_id"])
            owner = _parse_bool(row["is_page_owner"])
        except ValueError as exc:
            raise MalformedRow(USERS_FILE, lineno, str(exc)) from None
        if not user_id:
            raise MalformedRow(USERS_FILE, lineno, "empty user_id")
        if user_id in seen:
            raise DuplicateId(USERS_FILE, lineno, f"duplicate user_id {user_id!r}")
        if owner:
            if owner_line is not None:
                raise MalformedRow(USERS_FILE, lineno, f"second page owner (first on line {owner_line})")
            owner_line = lineno
        seen.add(user_id)
        users.append(UserRecord(user_id, owner))
    return users


def _parse_events(path: Path, user_ids: set[str], post_ids: set[str]) -> list[EngagementEvent]:
    events: list[EngagementEvent] = []
    for lineno, row in _tsv_rows(path, EVENTS_HEADER):
        try:
            user_id = unescape_cell(row["user_id"])
            post_id = unescape_cell(row["post_id"])
        except ValueError as exc:
            raise MalformedRow(EVENTS_FILE, lineno, str(exc)) from None
        if user_id not in user_ids:
            raise ReferentialIntegrity(EVENTS_FILE, lineno, f"unknown user_id {user_id!r}")
        if post_id not in post_ids:
            raise ReferentialIntegrity(EVENTS_FILE, lineno, f"unknown post_id {post_id!r}")
        kind = row["kind"]
        if kind not in EVENT_KINDS:
            raise MalformedRow(EVENTS_FILE, lineno, f"unknown kind {kind!r}")
        count = row["count"]
        if not count.isascii() or not count.isdigit() or int(count) < 1:
            raise MalformedRow(EVENTS_FILE, lineno, f"count must be a positive integer, found {count!r}")
        events.append(EngagementEvent(user_id, post_id, kind, int(count)))
    return events


def _warn_outside_window(posts: Iterable[PostRecord], start: datetime, end: datetime) -> None:
    outside = [p.post_id for p in posts if not start <= p.created_at <= end]
    if outside:
        warnings.warn(
            f"{len(outside)} post(s) dated outside the export window, first: {outside[0]!r}",
            DatasetWarning,
            stacklevel=3,
        )


def parse_page_dataset(path: str | Path) -> PageDataset:
    """Read a dataset directory.  Raises a :class:`~brandgraph.errors.DatasetError` subclass on bad input."""
    root = Path(path)
    if not root.is_dir():
        raise MissingFile(str(root))
    meta = _read_meta(root / META_FILE)
    posts = _parse_posts(root / POSTS_FILE)
    users = _parse_users(root / USERS_FILE)
    events = _parse_events(
        root / EVENTS_FILE,
        {u.user_id for u in users},
        {p.post_id for p in posts},
    )
    _warn_outside_window(posts, meta["window_start"], meta["window_end"])
    return PageDataset(
        page_id=meta["page_id"],
        country=meta["country"],
        language=meta["language"],
        culture_label=meta["culture_label"],
        posts=tuple(posts),
        users=tuple(users),
        events=merge_events(events),
        window_start=meta["window_start"],
        window_end=meta["window_end"],
    )


# ---------------------------------------------------------------- writing


def validate_dataset(ds: PageDataset) -> None:
    """Check the invariants an in-memory dataset must satisfy to be written."""
    if len(ds.posts) > MAX_POSTS:
        raise PostLimitExceeded(POSTS_FILE, None, f"{len(ds.posts)} posts exceed {MAX_POSTS}")
    post_ids: set[str] = set()
    for p in ds.posts:
        if not p.post_id:
            raise MalformedRow(POSTS_FILE, None, "empty post_id")
        if p.post_id in post_ids:
            raise DuplicateId(POSTS_FILE, None, f"duplicate post_id {p.post_id!r}")
        if p.post_type not in POST_TYPES:
            raise MalformedRow(POSTS_FILE, None, f"unknown post_type {p.post_type!r}")
        if p.permalink == "":
            raise MalformedRow(POSTS_FILE, None, "empty permalink must be None")
        post_ids.add(p.post_id)
    user_ids: set[str] = set()
    owners = 0
    for u in ds.users:
        if not u.user_id:
            raise MalformedRow(USERS_FILE, None, "empty user_id")
        if u.user_id in user_ids:
            raise DuplicateId(USERS_FILE, None, f"duplicate user_id {u.user_id!r}")
        user_ids.add(u.user_id)
        owners += u.is_page_owner
    if owners > 1:
        raise MalformedRow(USERS_FILE, None, "more than one page owner")
    keys: set[tuple[str, str, str]] = set()
    for e in ds.events:
        if e.user_id not in user_ids:
            raise ReferentialIntegrity(EVENTS_FILE, None, f"unknown user_id {e.user_id!r}")
        if e.post_id not in post_ids:
            raise ReferentialIntegrity(EVENTS_FILE, None, f"unknown post_id {e.post_id!r}")
        if e.kind not in EVENT_KINDS:
            raise MalformedRow(EVENTS_FILE, None, f"unknown kind {e.kind!r}")
        if not isinstance(e.count, int) or e.count < 1:
            raise MalformedRow(EVENTS_FILE, None, f"count must be a positive integer, found {e.count!r}")
        key = (e.user_id, e.post_id, e.kind)
        if key in keys:
            raise DuplicateId(EVENTS_FILE, None, f"unmerged duplicate event {key!r}")
        keys.add(key)


def _write_tsv(path: Path, header: tuple[str, ...], rows: Iterable[Iterable[str]]) -> None:
    lines = ["\t".join(header)]
    lines.extend("\t".join(row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="")


def write_page_dataset(ds: PageDataset, path: str | Path) -> None:
    validate_dataset(ds)
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    meta = {
        "page_id": ds.page_id,
        "country": ds.country,
        "language": ds.language,
        "culture_label": ds.culture_label,
        "window_start": format_timestamp(ds.window_start),
        "window_end": format_timestamp(ds.window_end),
    }
    (root / META_FILE).write_text(
        json.dumps(meta, indent=2, ensure_ascii=False) + "\n", encoding="utf-8", newline=""
    )
    _write_tsv(
        root / POSTS_FILE,
        POSTS_HEADER,
        (
            (
                escape_cell(p.post_id),
                p.post_type,
                format_timestamp(p.created_at),
                escape_cell(p.text),
                escape_cell(p.permalink or ""),
            )
            for p in ds.posts
        ),
    )
    _write_tsv(
        root / USERS_FILE,
        USERS_HEADER,
        ((escape_cell(u.user_id), "true" if u.is_page_owner else "false") for u in ds.users),
    )
    _write_tsv(
        root / EVENTS_FILE,
        EVENTS_HEADER,
        ((escape_cell(e.user_id), escape_cell(e.post_id), e.kind, str(e.count)) for e in ds.events),
    )
