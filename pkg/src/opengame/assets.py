"""Asset-phase tooling: prompt builders, generation backends, and the pack.

Prompts are dispatched per asset type with the composition constraints each
downstream model needs (backgrounds: full scene without characters or UI;
sprites: one isolated object on pure white; tilesets: a 3x3 seamless sheet).
Audio goes through the two-step ABC pipeline: the chat model writes notation,
the synthesizer renders it to WAV.

The mock image backend emits deterministic solid-color PNGs labeled with the
asset key so end-to-end runs and entropy checks work with no external
services.
"""

from __future__ import annotations

import hashlib
import io
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

from PIL import Image, ImageDraw

from . import abcmusic
from .gateway import BackendError, ChatRequest, Gateway, ResponseSchema, SchemaKey

logger = logging.getLogger(__name__)

ASSET_TYPES = ("background", "image", "animation", "tileset", "audio_bgm", "audio_sfx")


class UnknownAssetType(ValueError):
    pass


class DuplicateKey(ValueError):
    pass


@dataclass
class AssetEntry:
    key: str
    type: str
    description: str
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.type not in ASSET_TYPES:
            raise UnknownAssetType(f"asset type {self.type!r} not in {ASSET_TYPES}")
        if self.type == "animation" and int(self.params.get("frame_count", 2)) < 2:
            raise ValueError("animation frame_count must be >= 2")
        if self.type == "tileset" and int(self.params.get("tile_size", 64)) <= 0:
            raise ValueError("tileset tile_size must be > 0")


# --- prompt builders -----------------------------------------------------------

_BACKGROUND_PROMPT = """\
Full-scene, edge-to-edge illustration for a 2D game background: {description}.
Fill the entire canvas with environment art. Strictly forbidden: characters,
creatures, UI elements, text, logos, frames, borders, and transparency.
"""

_IMAGE_PROMPT = """\
Single isolated game object: {description}. Exactly one object, centered
composition, on a pure white background (#ffffff). No shadows outside the
object, no text, no UI, no additional props.
"""

_ANIMATION_BASE_PROMPT = """\
Side-view chibi character in a neutral idle pose: {description}. Full body
visible, facing right, centered on a pure white background. This image seeds
an animation, so keep the silhouette clean and the pose relaxed.
"""

_ANIMATION_I2V_PROMPT = """\
Animate the provided character image: {motion}. Keep the side-view framing,
identical character size and position across frames, pure white background,
and a seamless loop.
"""

_ANIMATION_I2I_PROMPT = """\
Frame {frame_index} of {frame_count} for a looping animation of: {description}.
Same character, same side-view framing, same scale as the base image; only
the pose advances. Pure white background.
"""

_TILESET_PROMPT = """\
3x3 seamless tileset for: {description}. A strict 3-row by 3-column layout,
zero gaps between cells, each cell exactly one tile, edges tiling seamlessly
with neighbors, covering the full 1024x1024 canvas. Forbidden: labels,
gridlines, characters, UI, empty margins.
"""

ABC_SYSTEM_PROMPT = """\
You write game music as ABC notation. Every response is a JSON object with
"notation" and "comments" keys. The notation must include the mandatory
headers X:, T:, M:, L:, Q:, K: followed by the tune body with real note
sequences (never placeholders). Note lengths: a digit multiplies the L: unit
("A2"), a slash halves it ("A/" or "A/2"); rests use "z" with the same
length syntax ("z2"). Write loop-friendly music that can repeat seamlessly.

Example of a valid two-part tune:
X:1
T:Loop
M:4/4
L:1/8
Q:1/4=112
K:C
CDEF GABc | c2 G2 E2 C2 |
EGcG EGcG | C4 z4 |
"""

ABC_SCHEMA = ResponseSchema(
    required_keys=(SchemaKey("notation", "text"), SchemaKey("comments", "text")),
    description="ABC notation for one audio asset",
)


def build_asset_prompt(entry: AssetEntry) -> str:
    """Type-dispatched generation prompt for one asset entry."""
    if entry.type == "background":
        return _BACKGROUND_PROMPT.format(description=entry.description)
    if entry.type == "image":
        return _IMAGE_PROMPT.format(description=entry.description)
    if entry.type == "animation":
        return _ANIMATION_BASE_PROMPT.format(description=entry.description)
    if entry.type == "tileset":
        return _TILESET_PROMPT.format(description=entry.description)
    if entry.type in ("audio_bgm", "audio_sfx"):
        kind = "looping background music" if entry.type == "audio_bgm" else "a short sound effect"
        return (
            f"Compose {kind} for: {entry.description}. "
            f"Duration about {entry.params.get('duration', 8 if entry.type == 'audio_bgm' else 1)} s, "
            f"tempo {entry.params.get('tempo', 112)} bpm, genre {entry.params.get('genre', 'chiptune')}. "
            "Respond as JSON with notation and comments."
        )
    raise UnknownAssetType(entry.type)


def animation_frame_prompt(entry: AssetEntry, frame_index: int) -> str:
    frame_count = int(entry.params.get("frame_count", 2))
    mode = entry.params.get("mode", "i2v")
    if mode == "i2v":
        motion = entry.params.get("motion", f"{entry.description}, subtle idle motion")
        return _ANIMATION_I2V_PROMPT.format(motion=motion)
    return _ANIMATION_I2I_PROMPT.format(
        frame_index=frame_index + 1, frame_count=frame_count, description=entry.description
    )


# --- image backends --------------------------------------------------------------

class MockImageBackend:
    """Deterministic stand-in for the image models: a solid color derived
    from the asset key, labeled with the key text."""

    def generate(self, prompt: str, key: str, size: tuple[int, int]) -> bytes:
        digest = hashlib.sha256(key.encode("utf-8")).digest()
        color = (digest[0], digest[1], digest[2])
        img = Image.new("RGB", size, color)
        draw = ImageDraw.Draw(img)
        text_color = (255, 255, 255) if sum(color) < 384 else (0, 0, 0)
        draw.text((4, 4), key, fill=text_color)
        buf = io.BytesIO()
        img.save(buf, format="PNG")
        return buf.getvalue()

    def generate_frames(
        self, prompts: list[str], key: str, size: tuple[int, int]
    ) -> list[bytes]:
        frames = []
        for index in range(len(prompts)):
            digest = hashlib.sha256(f"{key}:{index}".encode("utf-8")).digest()
            color = (digest[0], digest[1], digest[2])
            img = Image.new("RGB", size, color)
            draw = ImageDraw.Draw(img)
            text_color = (255, 255, 255) if sum(color) < 384 else (0, 0, 0)
            draw.text((4, 4), f"{key} #{index}", fill=text_color)
            buf = io.BytesIO()
            img.save(buf, format="PNG")
            frames.append(buf.getvalue())
        return frames


DEFAULT_SIZES = {
    "background": (512, 288),
    "image": (128, 128),
    "animation": (128, 128),
    "tileset": (192, 192),
}


@dataclass
class AssetBackends:
    """Pluggable generation services used by generate_assets."""

    image: MockImageBackend
    gateway: Gateway | None = None
    chat_backend_id: str = "chat"
    abc_tags: tuple[str, ...] = ("abc", "default")


@dataclass
class AssetPack:
    entries: dict[str, dict] = field(default_factory=dict)
    generated_at: float = field(default_factory=time.time)

    def to_dict(self) -> dict:
        return {"entries": self.entries, "generated_at": self.generated_at}

    def write(self, path: str | Path) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "AssetPack":
        data = json.loads(Path(path).read_text())
        return cls(entries=data.get("entries", {}), generated_at=data.get("generated_at", 0.0))


def generate_assets(
    registry: list[AssetEntry],
    backends: AssetBackends,
    workspace_root: str | Path,
) -> AssetPack:
    """Produce one file per registry entry under <root>/assets/ and write the
    asset-pack.json manifest binding keys to files.

    A failed entry is recorded in the pack with status "failed" instead of
    aborting the batch.
    """
    root = Path(workspace_root)
    assets_dir = root / "assets"
    assets_dir.mkdir(parents=True, exist_ok=True)

    keys = [entry.key for entry in registry]
    duplicates = {k for k in keys if keys.count(k) > 1}
    if duplicates:
        raise DuplicateKey(f"duplicate asset keys: {sorted(duplicates)}")

    pack = AssetPack()
    for entry in registry:
        try:
            pack.entries[entry.key] = _generate_one(entry, backends, root, assets_dir)
        except Exception as exc:
            logger.warning("asset %s failed: %s", entry.key, exc)
            pack.entries[entry.key] = {
                "path": None,
                "type": entry.type,
                "meta": {"status": "failed", "error": str(exc)},
            }
    pack.write(root / "assets" / "asset-pack.json")
    return pack


def _generate_one(
    entry: AssetEntry,
    backends: AssetBackends,
    root: Path,
    assets_dir: Path,
) -> dict:
    if entry.type in ("background", "image", "tileset"):
        size = DEFAULT_SIZES[entry.type]
        if entry.type == "tileset":
            tile = int(entry.params.get("tile_size", 64))
            size = (tile * 3, tile * 3)
        blob = backends.image.generate(build_asset_prompt(entry), entry.key, size)
        filename = f"{entry.key}.png"
        (assets_dir / filename).write_bytes(blob)
        return {"path": f"assets/{filename}", "type": entry.type, "meta": dict(entry.params)}

    if entry.type == "animation":
        frame_count = int(entry.params.get("frame_count", 2))
        prompts = [animation_frame_prompt(entry, i) for i in range(frame_count)]
        frames = backends.image.generate_frames(prompts, entry.key, DEFAULT_SIZES["animation"])
        paths = []
        for index, blob in enumerate(frames):
            filename = f"{entry.key}_{index}.png"
            (assets_dir / filename).write_bytes(blob)
            paths.append(f"assets/{filename}")
        meta = dict(entry.params)
        meta["frames"] = paths
        meta["frame_count"] = frame_count
        return {"path": paths[0], "type": entry.type, "meta": meta}

    if entry.type in ("audio_bgm", "audio_sfx"):
        if backends.gateway is None:
            raise BackendError("no gateway configured for audio generation")
        request = ChatRequest(
            backend_id=backends.chat_backend_id,
            system_prompt=ABC_SYSTEM_PROMPT,
            user_prompt=build_asset_prompt(entry),
            tags=backends.abc_tags,
        )
        result = backends.gateway.complete_structured(request, ABC_SCHEMA)
        score = abcmusic.parse_abc(result["notation"])
        audio = abcmusic.synthesize_audio(score)
        filename = f"{entry.key}.wav"
        abcmusic.write_wav(audio, assets_dir / filename)
        meta = dict(entry.params)
        meta["notation_title"] = score.title
        meta["duration_seconds"] = round(audio.duration_seconds, 3)
        return {"path": f"assets/{filename}", "type": entry.type, "meta": meta}

    raise UnknownAssetType(entry.type)
