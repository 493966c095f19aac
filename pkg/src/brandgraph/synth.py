"""Synthetic brand-page datasets with recorded ground truth.

Two generators share the portable :class:`~brandgraph.rng.Stream`:

* :func:`synth_planted` - planted-partition bipartite data (users engage
  same-block posts with ``p_in``, other posts with ``p_out``), the oracle
  for community recovery tests.
* :func:`synth_scaled` - a page hitting exact post/user/edge/engagement
  counts, used to reproduce Table-1-sized workloads.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from .errors import InvalidSpec
from .graph import POST, USER, NodeId
from .ingest import (
    MAX_POSTS,
    POST_TYPES,
    EngagementEvent,
    PageDataset,
    PostRecord,
    UserRecord,
    validate_dataset,
    write_page_dataset,
)
from .rng import Stream

TRUTH_FILE = "truth.json"
SHOP_HOST = "www.yx-beauty.example"

_THEMES = ("socialization", "make-up", "fragrances", "skin-care", "contest")

_TEXTS = {
    "fr": {
        "socialization": [
            "Bonne fête du travail ! Un brin de muguet pour vous",
            "Bonne fête des mères à toutes les mamans",
            "Bonne année à toute notre communauté",
        ],
        "make-up": [
            "Le nouveau mascara volume intense pour un regard de rêve",
            "Notre rouge à lèvres mat en dix teintes",
            "Découvrez le maquillage de la saison",
        ],
        "fragrances": [
            "Un nouveau parfum floral pour cet été",
            "L'eau de parfum iconique revisitée",
            "Notes d'ambre et de fleur d'oranger",
        ],
        "skin-care": [
            "Notre crème hydratante aux extraits botaniques",
            "Les soins botanique pour le corps et le visage",
            "Un gel douche doux pour toute la famille",
        ],
        "contest": [
            "Grand concours : tentez de gagner un coffret",
            "Jeu concours de la semaine, participez !",
            "Tirage au sort vendredi, bonne chance",
        ],
    },
    "ar": {
        "socialization": [
            "عيد مبارك Eid Mubarak to all our fans",
            "رمضان كريم من عائلتنا إلى عائلتكم",
            "كل عام وأنتم بخير Greetings from our family",
        ],
        "make-up": [
            "Smoky eyes مكياج العيون الجديد",
            "ماسكارا جديدة لعيون ساحرة",
            "New lipstick shades أحمر الشفاه",
        ],
        "fragrances": [
            "عطر العنبر الجديد New amber fragrance",
            "عطور باريس الفاخرة",
            "An oriental perfume inspired by Paris",
        ],
        "skin-care": [
            "كريم ترطيب البشرة Skin care routine",
            "العناية بالبشرة في الصيف",
            "Botanical cream for radiant skin",
        ],
        "contest": [
            "مسابقة اليوم اربح هدية Contest time",
            "Giveaway! شارك واربح",
            "الفائز في المسابقة win a gift box",
        ],
    },
}


# ---------------------------------------------------------------- planted


@dataclass(frozen=True)
class PlantedSpec:
    n_blocks: int = 4
    posts_per_block: int = 10
    users_per_block: int = 25
    p_in: float = 0.9
    p_out: float = 0.01
    seed: int = 0
    page_id: str = "planted"
    language: str = "en"

    def validate(self) -> None:
        if self.n_blocks < 1 or self.posts_per_block < 1 or self.users_per_block < 0:
            raise InvalidSpec("block sizes must be positive")
        if self.n_blocks * self.posts_per_block > MAX_POSTS:
            raise InvalidSpec(f"more than {MAX_POSTS} posts")
        if not 0 <= self.p_out < self.p_in <= 1:
            raise InvalidSpec("need 0 <= p_out < p_in <= 1")


@dataclass(frozen=True)
class SynthTruth:
    """What a generator promises about its own output."""

    ground_truth: dict[NodeId, int]
    n_posts: int
    n_users: int
    n_events: int
    total_engagements: int
    params: dict = field(default_factory=dict)

    def to_json(self) -> str:
        body = {
            "params": self.params,
            "n_posts": self.n_posts,
            "n_users": self.n_users,
            "n_events": self.n_events,
            "total_engagements": self.total_engagements,
            "ground_truth": {str(n): b for n, b in self.ground_truth.items()},
        }
        return json.dumps(body, indent=2, ensure_ascii=False, sort_keys=True) + "\n"


def load_truth(path: str | Path) -> dict[NodeId, int]:
    path = Path(path)
    if path.is_dir():
        path = path / TRUTH_FILE
    raw = json.loads(path.read_text(encoding="utf-8"))["ground_truth"]
    out = {}
    for key, block in raw.items():
        kind, _, ident = key.partition(":")
        out[NodeId(kind, ident)] = int(block)
    return out


_EPOCH = datetime(2015, 12, 9, tzinfo=timezone.utc)


def _post_text(lang: str, theme: str, k: int, link: bool) -> str:
    text = _TEXTS[lang][theme][k % len(_TEXTS[lang][theme])]
    if link:
        text += f" https://{SHOP_HOST}/{lang}/{theme}/{k}"
    return text


def synth_planted(spec: PlantedSpec) -> tuple[PageDataset, SynthTruth]:
    spec.validate()
    stream = Stream(spec.seed)
    lang = "ar" if spec.language.startswith("ar") else "fr"
    n_posts = spec.n_blocks * spec.posts_per_block
    n_users = spec.n_blocks * spec.users_per_block
    start = _EPOCH - timedelta(days=183)
    step = timedelta(days=183) / max(n_posts, 1)

    posts, users = [], []
    truth: dict[NodeId, int] = {}
    post_block = []
    for b in range(spec.n_blocks):
        theme = _THEMES[b % len(_THEMES)]
        for k in range(spec.posts_per_block):
            i = len(posts)
            pid = f"p{b}_{k}"
            text = _post_text(lang, theme, k, link=theme in ("make-up", "fragrances", "skin-care"))
            posts.append(PostRecord(pid, POST_TYPES[i % len(POST_TYPES)], start + step * (i + 0.5), text))
            post_block.append(b)
            truth[NodeId(POST, pid)] = b
    user_block = []
    for b in range(spec.n_blocks):
        for k in range(spec.users_per_block):
            uid = f"u{b}_{k}"
            users.append(UserRecord(uid, False))
            user_block.append(b)
            truth[NodeId(USER, uid)] = b

    draws = stream.random(2 * n_users * n_posts).reshape(n_users, n_posts, 2) if n_users else np.zeros((0, n_posts, 2))
    same = np.asarray(user_block)[:, None] == np.asarray(post_block)[None, :]
    prob = np.where(same, spec.p_in, spec.p_out)
    hit = draws[:, :, 0] < prob
    events = []
    for ui, pi in zip(*np.nonzero(hit)):
        kind = "like" if draws[ui, pi, 1] < 0.75 else "comment"
        events.append(EngagementEvent(users[ui].user_id, posts[pi].post_id, kind, 1))

    ds = PageDataset(
        page_id=spec.page_id,
        country="Synthetic",
        language=spec.language,
        culture_label="planted",
        posts=tuple(posts),
        users=tuple(users),
        events=tuple(events),
        window_start=start,
        window_end=_EPOCH,
    )
    validate_dataset(ds)
    info = SynthTruth(truth, n_posts, n_users, len(events), len(events), {"generator": "planted", **asdict(spec)})
    return ds, info


# ---------------------------------------------------------------- scaled


@dataclass(frozen=True)
class ScaledSpec:
    """Exact-count page shaped after a real export.

    ``n_edges`` distinct user-post pairs spread over ``n_users`` users (each
    engages at least once) and ``n_posts`` posts, with ``total_engagements``
    summed event counts.  The page owner engages ``owner_degree`` posts and
    adds ``owner_replies`` extra reply events.
    """

    n_posts: int
    n_users: int
    n_edges: int
    total_engagements: int
    seed: int = 0
    n_blocks: int = 8
    page_id: str = "scaled"
    country: str = "Synthetic"
    language: str = "fr"
    culture_label: str = ""
    owner_degree: int = 0
    owner_replies: int = 0
    in_block: float = 0.8
    special_posts: int = 2
    ramp_days: float = 14.0
    links: bool = True

    def validate(self) -> None:
        if not 1 <= self.n_posts <= MAX_POSTS:
            raise InvalidSpec(f"n_posts must lie in [1, {MAX_POSTS}]")
        if self.n_users < 1:
            raise InvalidSpec("need at least one user")
        if not self.n_users <= self.n_edges <= self.n_users * self.n_posts:
            raise InvalidSpec("n_edges must cover every user once and fit in users x posts")
        if self.total_engagements < self.n_edges + self.owner_replies:
            raise InvalidSpec("total_engagements below edge count plus owner replies")
        if not 0 <= self.owner_degree <= self.n_posts:
            raise InvalidSpec("owner_degree out of range")
        if not 0 <= self.in_block <= 1:
            raise InvalidSpec("in_block must be a probability")


FRANCE = ScaledSpec(
    n_posts=836, n_users=30732, n_edges=90963, total_engagements=97182, seed=2015,
    page_id="yx-france", country="France", language="fr", culture_label="individualistic",
    owner_degree=600, owner_replies=1351, ramp_days=45.0,
)
SAUDI = ScaledSpec(
    n_posts=175, n_users=3357, n_edges=7425, total_engagements=8396, seed=2015,
    page_id="yx-saudi-arabia", country="Saudi Arabia", language="ar/en", culture_label="collectivistic",
    owner_degree=60, owner_replies=36, links=False,
)
PRESETS = {"france": FRANCE, "saudi": SAUDI}


def _pareto(stream: Stream, n: int, alpha: float) -> np.ndarray:
    return (1.0 - stream.random(n)) ** (-1.0 / alpha)


def _allocate(total: int, weights: np.ndarray, caps: np.ndarray) -> np.ndarray:
    """Integer split of ``total`` proportional to ``weights`` without exceeding ``caps``."""
    alloc = np.zeros(len(weights), dtype=np.int64)
    remaining = total
    active = caps > 0
    while remaining > 0:
        if not active.any():
            raise InvalidSpec("capacity exhausted while allocating counts")
        w = np.where(active, weights, 0.0)
        share = remaining * w / w.sum()
        base = np.minimum(np.floor(share).astype(np.int64), caps - alloc)
        alloc += base
        remaining -= int(base.sum())
        if remaining > 0:
            frac = np.where(active & (alloc < caps), share - np.floor(share), -1.0)
            order = np.lexsort((np.arange(len(frac)), -frac))
            for i in order[: remaining]:
                if frac[i] < 0:
                    break
                alloc[i] += 1
                remaining -= 1
        active = alloc < caps
    return alloc


def synth_scaled(spec: ScaledSpec) -> tuple[PageDataset, SynthTruth]:
    spec.validate()
    stream = Stream(spec.seed)
    lang = "ar" if spec.language.startswith("ar") else "fr"
    n_posts, n_users = spec.n_posts, spec.n_users
    window_end = _EPOCH
    window_start = _EPOCH - timedelta(days=252)
    span_days = (window_end - window_start).total_seconds() / 86400.0

    # posts: evenly spread in time, blocks assigned round-robin after a shuffle
    blocks = [i % spec.n_blocks for i in range(n_posts)]
    stream.shuffle(blocks)
    post_block = np.asarray(blocks)
    ages = np.array([span_days * (1.0 - (i + 0.5) / n_posts) for i in range(n_posts)])
    popularity = _pareto(stream, n_posts, 1.6)
    popularity *= np.minimum(1.0, ages / spec.ramp_days) if spec.ramp_days > 0 else 1.0
    n_special = min(spec.special_posts, n_posts)
    special = [int(i) for i in np.argsort(-ages, kind="stable")[: n_special * 3 : 3]]
    top = popularity.max()
    for k, i in enumerate(special):
        post_block[i] = spec.n_blocks + k  # one block per socialization post
        popularity[i] = top * 12.0
    n_groups = spec.n_blocks + n_special

    posts = []
    for i in range(n_posts):
        b = int(post_block[i])
        theme = "socialization" if b >= spec.n_blocks else _THEMES[1 + b % (len(_THEMES) - 1)]
        link = spec.links and theme in ("make-up", "fragrances", "skin-care")
        k = b - spec.n_blocks if b >= spec.n_blocks else i
        created = window_end - timedelta(days=float(ages[i]))
        created = created.replace(microsecond=0)
        ptype = "photo" if stream.random() < 0.8 else POST_TYPES[1 + stream.below(3)]
        posts.append(
            PostRecord(f"{spec.page_id}_{i:06d}", ptype, created, _post_text(lang, theme, k, link),
                       f"https://www.facebook.example/{spec.page_id}/posts/{i}")
        )

    # users: block drawn by block popularity, activity heavy-tailed
    group_pop = np.bincount(post_block, weights=popularity, minlength=n_groups)
    user_group = np.searchsorted(np.cumsum(group_pop), stream.random(n_users) * group_pop.sum(), side="right")
    user_group = np.minimum(user_group, n_groups - 1)
    activity = _pareto(stream, n_users, 1.4)
    caps = np.full(n_users, min(n_posts, 250), dtype=np.int64) - 1
    owner = 0
    degree = np.ones(n_users, dtype=np.int64)
    if spec.owner_degree:
        degree[owner] = spec.owner_degree
        caps[owner] = 0
    extra = spec.n_edges - int(degree.sum())
    if extra < 0:
        raise InvalidSpec("owner degree exceeds the edge budget")
    degree += _allocate(extra, activity, caps)

    cum_all = np.cumsum(popularity)
    group_posts = [np.flatnonzero(post_block == g) for g in range(n_groups)]
    group_cum = [np.cumsum(popularity[idx]) for idx in group_posts]

    user_ids = [f"fan{u:05d}" for u in range(n_users)]
    if spec.owner_degree:
        user_ids[owner] = f"{spec.page_id}-owner"
    events: list[EngagementEvent] = []
    edges_of: list[list[int]] = []
    for u in range(n_users):
        want = int(degree[u])
        chosen: list[int] = []
        taken: set[int] = set()
        g = int(user_group[u])
        local, local_cum = group_posts[g], group_cum[g]
        attempts = 0
        while len(chosen) < want:
            attempts += 1
            if attempts > 50 * want + 100:
                # dense tail: fill deterministically with the most popular free posts
                for p in np.argsort(-popularity, kind="stable"):
                    if len(chosen) == want:
                        break
                    if int(p) not in taken:
                        taken.add(int(p))
                        chosen.append(int(p))
                break
            if stream.random() < spec.in_block and len(local):
                p = int(local[min(np.searchsorted(local_cum, stream.random() * local_cum[-1], side="right"), len(local) - 1)])
            else:
                p = min(int(np.searchsorted(cum_all, stream.random() * cum_all[-1], side="right")), n_posts - 1)
            if p not in taken:
                taken.add(p)
                chosen.append(p)
        edges_of.append(chosen)

    # engagement counts: one event per edge, extra comments on busy users' edges
    counts: dict[tuple[int, int, str], int] = {}
    order: list[tuple[int, int, str]] = []

    def bump(u: int, p: int, kind: str, c: int = 1) -> None:
        key = (u, p, kind)
        if key not in counts:
            counts[key] = 0
            order.append(key)
        counts[key] += c

    for u in range(n_users):
        for p in edges_of[u]:
            if spec.owner_degree and u == owner:
                bump(u, p, "comment")
            else:
                bump(u, p, "like" if stream.random() < 0.85 else "comment")
    if spec.owner_degree and spec.owner_replies:
        own = edges_of[owner]
        for _ in range(spec.owner_replies):
            bump(owner, own[stream.below(len(own))], "comment_reply")
    remaining = spec.total_engagements - spec.n_edges - (spec.owner_replies if spec.owner_degree else 0)
    act_w = activity * degree
    if spec.owner_degree:
        act_w[owner] = 0.0
    cum_act = np.cumsum(act_w)
    for _ in range(max(remaining, 0)):
        u = min(int(np.searchsorted(cum_act, stream.random() * cum_act[-1], side="right")), n_users - 1)
        mine = edges_of[u]
        bump(u, mine[stream.below(len(mine))], "comment")
    if not spec.owner_degree and spec.owner_replies:
        raise InvalidSpec("owner replies need an owner")

    for key in order:
        u, p, kind = key
        events.append(EngagementEvent(user_ids[u], posts[p].post_id, kind, counts[key]))
    users = [UserRecord(uid, bool(spec.owner_degree) and i == owner) for i, uid in enumerate(user_ids)]
    ds = PageDataset(
        page_id=spec.page_id,
        country=spec.country,
        language=spec.language,
        culture_label=spec.culture_label,
        posts=tuple(posts),
        users=tuple(users),
        events=tuple(events),
        window_start=window_start,
        window_end=window_end,
    )
    validate_dataset(ds)
    truth = {NodeId(POST, posts[i].post_id): int(post_block[i]) for i in range(n_posts)}
    truth.update({NodeId(USER, user_ids[u]): int(user_group[u]) for u in range(n_users)})
    total = sum(e.count for e in events)
    info = SynthTruth(truth, n_posts, n_users, len(events), total, {"generator": "scaled", **asdict(spec)})
    return ds, info


def write_synthetic(ds: PageDataset, truth: SynthTruth, path: str | Path) -> None:
    write_page_dataset(ds, path)
    (Path(path) / TRUTH_FILE).write_text(truth.to_json(), encoding="utf-8", newline="")
