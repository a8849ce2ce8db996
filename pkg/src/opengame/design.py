"""Design-phase tools: game-type classification, GDD generation, roadmap
extraction, and gameConfig merging.

Classification is rule-first: a phrase table keyed on physical constraints
and spatial mechanics (how things move, not what the genre is called) scores
the prompt, and only when no rule clears the confidence threshold does the
model get asked. Rule results are a pure function of the prompt text.

The GDD is structured markdown with six fixed sections; section 1 (asset
registry) and section 4 (config parameters) are machine-parsed YAML-ish
lists, section 5 is the per-file implementation roadmap.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .gateway import ChatRequest, Gateway, ResponseSchema, SchemaKey
from .skills import Archetype
from .workspace import TodoItem

logger = logging.getLogger(__name__)

RULE_CONFIDENCE_THRESHOLD = 0.75

SECTION_NAMES = (
    "AssetRegistry",
    "CoreMechanics",
    "LevelAndContent",
    "ConfigParameters",
    "ImplementationRoadmap",
    "AcceptanceNotes",
)

ASSET_TYPES = ("background", "image", "animation", "tileset", "audio_bgm", "audio_sfx")


class ClassificationFailed(RuntimeError):
    """Rules were inconclusive and the model path failed."""


class MissingSection(ValueError):
    def __init__(self, name: str):
        super().__init__(f"GDD is missing section {name}")
        self.name = name


class EmptyAssetRegistry(ValueError):
    """Section 1 parsed to zero asset entries."""


@dataclass
class ClassificationResult:
    archetype: Archetype
    confidence: float
    rationale: str
    source: str  # "rule" | "model"


# --- physics-first rule table ---------------------------------------------------
#
# (phrase, weight) rows; phrases match whole words, tolerant of a plural "s".

RULE_TABLE: dict[Archetype, tuple[tuple[str, int], ...]] = {
    Archetype.PLATFORMER: (
        ("platformer", 3),
        ("platform", 3),
        ("side-scroll", 3),
        ("side scrolling", 3),
        ("ground support", 3),
        ("double jump", 3),
        ("double-jump", 3),
        ("jump", 2),
        ("gravity", 2),
        ("ledge", 2),
        ("leap", 2),
        ("fall", 1),
        ("falling", 1),
    ),
    Archetype.TOP_DOWN: (
        ("top-down", 3),
        ("top down", 3),
        ("twin-stick", 3),
        ("overhead", 2),
        ("arena", 2),
        ("shooter", 2),
        ("steer", 2),
        ("steering", 2),
        ("asteroid", 2),
        ("dodge", 1),
        ("drive", 1),
    ),
    Archetype.GRID_LOGIC: (
        ("grid", 3),
        ("match three", 3),
        ("match-3", 3),
        ("match 3", 3),
        ("snake", 3),
        ("tetris", 3),
        ("sokoban", 3),
        ("snap", 2),
        ("snapping", 2),
        ("puzzle", 2),
        ("board", 2),
        ("rows and columns", 2),
        ("cell", 1),
        ("tile", 1),
    ),
    Archetype.TOWER_DEFENSE: (
        ("tower defense", 3),
        ("tower", 3),
        ("defend the", 2),
        ("wave", 2),
        ("path", 2),
        ("creep", 2),
        ("march", 2),
    ),
    Archetype.UI_HEAVY: (
        ("clicker", 3),
        ("quiz", 3),
        ("idle game", 3),
        ("menu", 2),
        ("button", 2),
        ("card", 2),
        ("inventory", 2),
        ("dialog", 2),
        ("shop", 2),
        ("interface", 2),
        ("ui", 2),
        ("text-based", 2),
        ("idle", 2),
    ),
}

CLASSIFY_SYSTEM_PROMPT = """\
You route 2D web-game requests to one of five archetypes using physics-first
logic: decide from gravity, perspective, and movement type, never from genre
names.

- platformer: gravity pulls along Y, side view, entities fall without ground
  support. Key question: can things fall?
- top_down: no gravity, overhead view, continuous velocity on both axes.
  Key question: does movement glide freely in 2D?
- grid_logic: no continuous physics at all; state snaps cell-to-cell on a
  board. Key question: is every position a discrete cell?
- tower_defense: autonomous units follow a fixed route in timed waves while
  the player places structures. Key question: do enemies walk a path?
- ui_heavy: gameplay is buttons, panels, and state transitions; no spatial
  simulation. Key question: is the screen mostly interface?

Common mistakes: "puzzle" does not imply grid_logic unless positions snap;
a shooter seen from the side with gravity is a platformer; card/idle/shop
games are ui_heavy even when animated.
"""

CLASSIFY_SCHEMA = ResponseSchema(
    required_keys=(
        SchemaKey("game_type", "enum", tuple(a.value for a in Archetype)),
        SchemaKey("confidence", "number"),
        SchemaKey("reason", "text"),
    ),
    description="game-type classification",
)


def _prompt_text(spec: Any) -> str:
    text = getattr(spec, "prompt", spec)
    if not isinstance(text, str) or not text.strip():
        raise ValueError("prompt must be non-empty")
    return text


def score_rules(prompt: str) -> dict[Archetype, int]:
    lowered = prompt.lower()
    scores: dict[Archetype, int] = {}
    for archetype, rows in RULE_TABLE.items():
        total = 0
        for phrase, weight in rows:
            if re.search(rf"\b{re.escape(phrase)}s?\b", lowered):
                total += weight
        scores[archetype] = total
    return scores


def classify_game_type(
    spec: Any,
    gateway: Gateway | None = None,
    backend_id: str = "chat",
    tags: tuple[str, ...] = (),
) -> ClassificationResult:
    """Rule table first; model fallback below the confidence threshold."""
    prompt = _prompt_text(spec)
    scores = score_rules(prompt)
    total = sum(scores.values())
    best = max(scores, key=lambda a: scores[a])
    if total > 0:
        confidence = scores[best] / total
        if confidence >= RULE_CONFIDENCE_THRESHOLD:
            matched = [
                phrase
                for phrase, _ in RULE_TABLE[best]
                if re.search(rf"\b{re.escape(phrase)}s?\b", prompt.lower())
            ]
            return ClassificationResult(
                archetype=best,
                confidence=round(confidence, 4),
                rationale=f"matched physics cues: {', '.join(matched)}",
                source="rule",
            )

    if gateway is None:
        raise ClassificationFailed("rules inconclusive and no model gateway available")
    try:
        request = ChatRequest(
            backend_id=backend_id,
            system_prompt=CLASSIFY_SYSTEM_PROMPT,
            user_prompt=(
                "Classify this game description. "
                + CLASSIFY_SCHEMA.instruction()
                + "\n\nDescription:\n"
                + prompt
            ),
            temperature=0.0,
            tags=tags or ("classify", "default"),
        )
        result = gateway.complete_structured(request, CLASSIFY_SCHEMA)
    except Exception as exc:
        raise ClassificationFailed(f"model classification failed: {exc}") from exc
    return ClassificationResult(
        archetype=Archetype(result["game_type"]),
        confidence=max(0.0, min(1.0, float(result["confidence"]))),
        rationale=str(result["reason"]),
        source="model",
    )


# --- GDD ----------------------------------------------------------------------

@dataclass
class GddAsset:
    key: str
    type: str
    description: str
    params: dict = field(default_factory=dict)


@dataclass
class RoadmapItem:
    file: str
    description: str


@dataclass
class Gdd:
    title: str
    archetype: Archetype
    assets: list[GddAsset]
    core_mechanics: str
    level_content: str
    config_params: dict[str, Any]
    roadmap: list[RoadmapItem]
    acceptance_notes: str


GDD_HEADING_RE = re.compile(r"^## (\d)\. (\w+)\s*$", re.M)


def parse_gdd(text: str, archetype: Archetype | None = None) -> Gdd:
    """Parse the six-section GDD markdown produced by the design model."""
    title_match = re.search(r"^# GDD: (.+)$", text, re.M)
    title = title_match.group(1).strip() if title_match else "Untitled"
    archetype_match = re.search(r"^archetype:\s*(\S+)\s*$", text, re.M)
    if archetype is None:
        if not archetype_match:
            raise MissingSection("archetype")
        archetype = Archetype(archetype_match.group(1))

    headings = list(GDD_HEADING_RE.finditer(text))
    sections: dict[str, str] = {}
    for i, match in enumerate(headings):
        end = headings[i + 1].start() if i + 1 < len(headings) else len(text)
        sections[match.group(2)] = text[match.end() : end].strip("\n")
    for name in SECTION_NAMES:
        if name not in sections:
            raise MissingSection(name)

    assets_raw = yaml.safe_load(sections["AssetRegistry"]) or []
    if not isinstance(assets_raw, list) or not assets_raw:
        raise EmptyAssetRegistry("section 1 lists no assets")
    assets = []
    seen_keys = set()
    for item in assets_raw:
        key = str(item.get("key", "")).strip()
        if not key or key in seen_keys:
            raise ValueError(f"asset keys must be unique and non-empty, got {key!r}")
        seen_keys.add(key)
        assets.append(
            GddAsset(
                key=key,
                type=str(item.get("type", "image")),
                description=str(item.get("description", "")),
                params=dict(item.get("params") or {}),
            )
        )

    params_raw = yaml.safe_load(sections["ConfigParameters"]) or []
    config_params: dict[str, Any] = {}
    if isinstance(params_raw, list):
        for mapping in params_raw:
            if isinstance(mapping, dict):
                config_params.update(mapping)
    elif isinstance(params_raw, dict):
        config_params.update(params_raw)

    roadmap = []
    for line in sections["ImplementationRoadmap"].splitlines():
        match = re.match(r"^\s*-\s*\[(.+?)\]\s*(.+)$", line)
        if match:
            roadmap.append(RoadmapItem(file=match.group(1).strip(), description=match.group(2).strip()))

    return Gdd(
        title=title,
        archetype=archetype,
        assets=assets,
        core_mechanics=sections["CoreMechanics"].strip(),
        level_content=sections["LevelAndContent"].strip(),
        config_params=config_params,
        roadmap=roadmap,
        acceptance_notes=sections["AcceptanceNotes"].strip(),
    )


def render_gdd(gdd: Gdd) -> str:
    """Render a GDD back to its canonical markdown (parse . render = id)."""
    lines = [f"# GDD: {gdd.title}", f"archetype: {gdd.archetype.value}", ""]
    lines.append("## 1. AssetRegistry")
    for asset in gdd.assets:
        lines.append(f"- key: {json.dumps(asset.key)}")
        lines.append(f"  type: {json.dumps(asset.type)}")
        lines.append(f"  description: {json.dumps(asset.description)}")
        if asset.params:
            lines.append(f"  params: {json.dumps(asset.params, sort_keys=True)}")
    lines += ["", "## 2. CoreMechanics", gdd.core_mechanics, ""]
    lines += ["## 3. LevelAndContent", gdd.level_content, ""]
    lines.append("## 4. ConfigParameters")
    for name, value in gdd.config_params.items():
        lines.append(f"- {name}: {json.dumps(value)}")
    lines += ["", "## 5. ImplementationRoadmap"]
    for item in gdd.roadmap:
        lines.append(f"- [{item.file}] {item.description}")
    lines += ["", "## 6. AcceptanceNotes", gdd.acceptance_notes, ""]
    return "\n".join(lines)


# --- GDD context assembly --------------------------------------------------------

GDD_FIXED_HEADER = """\
You are a game design engineer producing a technical Game Design Document.
Four core rules bind every section:
1. user-faithful: every mechanic the user asked for appears in the design;
2. config-first: every tunable number is a ConfigParameters entry;
3. zero custom code: design against the template API only, never invent
   engine features;
4. hook integrity: ImplementationRoadmap items target designated extension
   hooks in existing files, never lifecycle methods.
"""

BUILTIN_CORE_FORMAT = """\
# Technical GDD format (built-in)

Produce exactly six sections with these markdown headings, in order:
## 1. AssetRegistry  (YAML list: key/type/description/params; unique keys)
## 2. CoreMechanics  (testable player-facing behaviors)
## 3. LevelAndContent  (levels, boards, waves; tilemap specs in ```tilemap blocks)
## 4. ConfigParameters  (one `- name: value` per tunable)
## 5. ImplementationRoadmap  (ordered `- [src/file.js] work item` lines)
## 6. AcceptanceNotes  (observable checks)
"""

BUILTIN_DESIGN_RULES: dict[Archetype, str] = {
    Archetype.PLATFORMER: """\
# Built-in rules: platformer
Physics: Y-axis gravity, side view; the template already integrates gravity,
movement, and jumping. Behaviors available: platform movement, melee attack,
ranged attack, patrol AI, chase AI. Assets: side-view hero animation frames
(frame_count >= 2), 3x3 seamless ground tileset, parallax background,
isolated pickup images, jump/coin SFX, one BGM loop. Levels: rectangles or
auto-tiled ASCII maps; first jump must be reachable with default physics.
gameConfig.json uses the { "value": X } wrapper for every entry.
""",
    Archetype.TOP_DOWN: """\
# Built-in rules: top_down
Physics: none vertically; continuous velocity steering, arena clamping.
Assets: top-view actor images or directional triplets, arena background,
projectile/pickup images, hit SFX, BGM loop. Mechanics: chase AI, timed
spawns, pointer-aimed shots. gameConfig.json uses { "value": X } wrappers.
""",
    Archetype.GRID_LOGIC: """\
# Built-in rules: grid_logic
No continuous physics; a cols x rows board advances per logic tick. Assets:
strictly type:"image" pieces plus an optional background overlay; no
animation strips or tilesets. Mechanics: match/clear rules, discrete moves.
gameConfig.json uses { "value": X } wrappers.
""",
    Archetype.TOWER_DEFENSE: """\
# Built-in rules: tower_defense
Walkers follow fixed waypoints in timed waves; pointer placement builds
structures off the route. Assets: tower/enemy/projectile images or 2-frame
animations, route tileset, build/hit SFX, BGM. Economy and pacing are config
values. gameConfig.json uses { "value": X } wrappers.
""",
    Archetype.UI_HEAVY: """\
# Built-in rules: ui_heavy
Gameplay is buttons, panels, and state transitions plus idle timers. Assets:
front-view bust shots or card art as isolated images named per expression,
click SFX, ambient BGM; no tilesets. gameConfig.json uses { "value": X }
wrappers.
""",
}

BUILTIN_TEMPLATE_API = """\
# Built-in template API (summary)
Scenes expose designated extension hooks only; lifecycle methods
(create/update/draw) are off limits. Read tunables with
engine.value("key", fallback); resolve art with engine.asset("key") and
audio with engine.sound("key"); register scenes before transitioning.
"""


def assemble_gdd_context(archetype: Archetype | None, doc_root: str | Path | None) -> str:
    """Fixed header + core format + archetype design rules + template API.

    Any document missing on disk is replaced by its built-in fallback, so
    assembly always succeeds.
    """
    root = Path(doc_root) if doc_root is not None else None

    def read_or(relative: str, fallback: str) -> str:
        if root is not None:
            path = root / relative
            if path.is_file():
                return path.read_text()
        return fallback

    parts = [GDD_FIXED_HEADER, read_or("gdd/core.md", BUILTIN_CORE_FORMAT)]
    if archetype is not None:
        parts.append(
            read_or(
                f"modules/{archetype.value}/design_rules.md",
                BUILTIN_DESIGN_RULES[archetype],
            )
        )
        parts.append(
            read_or(f"modules/{archetype.value}/template_api.md", BUILTIN_TEMPLATE_API)
        )
    else:
        parts.append(BUILTIN_TEMPLATE_API)
    return "\n\n".join(part.strip() for part in parts) + "\n"


def generate_gdd(
    spec: Any,
    cls: ClassificationResult | None,
    gateway: Gateway,
    doc_root: str | Path | None = None,
    backend_id: str = "chat",
    tags: tuple[str, ...] = (),
) -> Gdd:
    """Ask the design model for the 6-section GDD and parse it.

    With no classification (meta-template fallback) the context is generic
    and the archetype is read from the generated document itself.
    """
    prompt = _prompt_text(spec)
    archetype = cls.archetype if cls is not None else None
    request = ChatRequest(
        backend_id=backend_id,
        system_prompt=assemble_gdd_context(archetype, doc_root),
        user_prompt=(
            f"Archetype: {archetype.value if archetype else 'unclassified'}\n"
            f"User requirement:\n{prompt}\n\n"
            "Produce the 6-section Technical GDD now."
        ),
        tags=tags or ("gdd", "default"),
    )
    response = gateway.complete_chat(request)
    return parse_gdd(response.text, archetype=archetype)


# --- roadmap and config -----------------------------------------------------------

def todo_id(content: str) -> str:
    return hashlib.sha1(content.encode("utf-8")).hexdigest()[:12]


def extract_roadmap(gdd: Gdd) -> list[TodoItem]:
    """One pending todo per roadmap item; ids are content hashes, duplicates
    collapse to one."""
    todos: list[TodoItem] = []
    seen: set[str] = set()
    for item in gdd.roadmap:
        content = f"[{item.file}] {item.description}"
        identifier = todo_id(content)
        if identifier in seen:
            continue
        seen.add(identifier)
        todos.append(TodoItem(id=identifier, content=content))
    if not todos:
        logger.warning("GDD roadmap is empty; no todos extracted")
    return todos


@dataclass
class GameConfig:
    entries: dict[str, Any] = field(default_factory=dict)
    provenance: dict[str, str] = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {key: {"value": value} for key, value in self.entries.items()}

    @classmethod
    def from_file(cls, path: str | Path) -> "GameConfig":
        raw = json.loads(Path(path).read_text())
        entries = {}
        for key, wrapped in raw.items():
            if isinstance(wrapped, dict) and "value" in wrapped:
                entries[key] = wrapped["value"]
            else:
                entries[key] = wrapped
        return cls(entries=entries, provenance={key: "default" for key in entries})

    def write(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n")


def merge_game_config(gdd: Gdd, existing: GameConfig) -> GameConfig:
    """GDD parameters win on conflict; untouched defaults survive; every value
    keeps the {"value": X} envelope on serialization."""
    merged = GameConfig(entries=dict(existing.entries), provenance=dict(existing.provenance))
    for key, value in gdd.config_params.items():
        if key in merged.entries and merged.entries[key] != value:
            logger.info("gameConfig override: %s: %r -> %r (gdd wins)", key, merged.entries[key], value)
        merged.entries[key] = value
        merged.provenance[key] = "gdd"
    return merged
