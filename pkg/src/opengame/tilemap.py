"""ASCII layout to tilemap conversion with 47-class blob auto-tiling.

Auto-tiling works on the 8-neighbor bitmask of each marked cell. Edge
neighbors occupy the low nibble (N=1, E=2, S=4, W=8) and corner neighbors the
high nibble (NE=16, SE=32, SW=64, NW=128). A corner only matters when both of
its adjacent edges are present: canonicalization clears every corner bit whose
adjacent edge bits are not both set, which collapses the 256 raw masks into
exactly 47 equivalence classes. Canonical masks, sorted ascending, are
assigned tile ids 1..47 laid out row-major in the tileset grid; id 0 is the
empty tile.

Layout semantics: every non-space character must appear in the map legend.
Characters listed in ``auto_tile_chars`` are blob auto-tiled. Characters
listed in ``object_markers`` become center-anchored objects and their cells
render as the underlying terrain. All remaining cells get the base tile id
(the fully-surrounded class) in ``floor`` mode and stay 0 in ``walls`` mode.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

N, E, S, W = 1, 2, 4, 8
NE, SE, SW, NW = 16, 32, 64, 128

# (corner bit, edge bits that must both be present for the corner to count)
_CORNER_RULES = ((NE, N | E), (SE, S | E), (SW, S | W), (NW, N | W))

# (bit, row offset, col offset)
_NEIGHBOR_OFFSETS = (
    (N, -1, 0),
    (E, 0, 1),
    (S, 1, 0),
    (W, 0, -1),
    (NE, -1, 1),
    (SE, 1, 1),
    (SW, 1, -1),
    (NW, -1, -1),
)


def canonical_mask(raw: int) -> int:
    """Clear corner bits that are not backed by both adjacent edges."""
    mask = raw
    for corner, edges in _CORNER_RULES:
        if mask & corner and (mask & edges) != edges:
            mask &= ~corner
    return mask


CANONICAL_MASKS: tuple[int, ...] = tuple(sorted({canonical_mask(m) for m in range(256)}))
TILE_ID_FOR_MASK: dict[int, int] = {m: i + 1 for i, m in enumerate(CANONICAL_MASKS)}

# The class of a cell surrounded on all 8 sides; used as the plain fill tile.
BASE_TILE_ID = TILE_ID_FOR_MASK[255]


class RaggedLayout(ValueError):
    """Layout rows have unequal lengths."""


class UnknownLegendChar(ValueError):
    """A non-space layout character is missing from the legend."""


def neighbor_mask(grid: Sequence[Sequence[bool]], row: int, col: int) -> int:
    """Raw 8-bit neighbor mask; out-of-bounds cells count as unmarked."""
    rows = len(grid)
    cols = len(grid[0]) if rows else 0
    mask = 0
    for bit, dr, dc in _NEIGHBOR_OFFSETS:
        r, c = row + dr, col + dc
        if 0 <= r < rows and 0 <= c < cols and grid[r][c]:
            mask |= bit
    return mask


def compute_blob_tile(grid: Sequence[Sequence[bool]], row: int, col: int) -> int:
    """Tile id for a marked cell, from its canonicalized neighbor mask."""
    if not grid[row][col]:
        raise ValueError(f"cell ({row}, {col}) is not marked")
    return TILE_ID_FOR_MASK[canonical_mask(neighbor_mask(grid, row, col))]


@dataclass
class MapDefinition:
    map_key: str
    layout_ascii: str
    legend: dict[str, str] = field(default_factory=dict)
    object_markers: set[str] = field(default_factory=set)


@dataclass
class TilemapSpec:
    tileset_key: str
    maps: list[MapDefinition]
    tile_size: int = 64
    tileset_grid_size: int = 7
    auto_tiling: bool = True
    auto_tile_chars: list[str] = field(default_factory=lambda: ["#"])
    mode: str = "floor"

    def __post_init__(self) -> None:
        if self.tile_size <= 0:
            raise ValueError("tile_size must be positive")
        if self.tileset_grid_size <= 0:
            raise ValueError("tileset_grid_size must be positive")
        if self.mode not in ("floor", "walls"):
            raise ValueError(f"mode must be 'floor' or 'walls', got {self.mode!r}")
        if self.auto_tiling and self.tileset_grid_size**2 < 47:
            raise ValueError(
                "tileset_grid_size^2 must be >= 47 when auto_tiling is enabled"
            )

    @classmethod
    def from_dict(cls, data: Mapping) -> "TilemapSpec":
        maps = [
            MapDefinition(
                map_key=m["map_key"],
                layout_ascii=m["layout_ascii"],
                legend=dict(m.get("legend", {})),
                object_markers=set(m.get("object_markers", [])),
            )
            for m in data.get("maps", [])
        ]
        return cls(
            tileset_key=data["tileset_key"],
            maps=maps,
            tile_size=int(data.get("tile_size", 64)),
            tileset_grid_size=int(data.get("tileset_grid_size", 7)),
            auto_tiling=bool(data.get("auto_tiling", True)),
            auto_tile_chars=list(data.get("auto_tile_chars", ["#"])),
            mode=data.get("mode", "floor"),
        )


@dataclass
class TilemapObject:
    name: str
    x: float
    y: float


@dataclass
class TilemapDocument:
    map_key: str
    width: int
    height: int
    tilewidth: int
    tileheight: int
    tile_layers: dict[str, list[int]]
    object_layer: list[TilemapObject]
    tileset_key: str
    tileset_grid_size: int

    def to_tiled_json(self) -> dict:
        """Render as a Tiled-compatible map dict (row-major data, firstgid=1)."""
        objects = [
            {
                "id": i + 1,
                "name": obj.name,
                "x": obj.x,
                "y": obj.y,
                "width": 0,
                "height": 0,
                "rotation": 0,
                "point": True,
                "visible": True,
            }
            for i, obj in enumerate(self.object_layer)
        ]
        layers: list[dict] = []
        for i, (name, data) in enumerate(self.tile_layers.items()):
            layers.append(
                {
                    "type": "tilelayer",
                    "id": i + 1,
                    "name": name,
                    "width": self.width,
                    "height": self.height,
                    "opacity": 1,
                    "visible": True,
                    "x": 0,
                    "y": 0,
                    "data": list(data),
                }
            )
        layers.append(
            {
                "type": "objectgroup",
                "id": len(layers) + 1,
                "name": "objects",
                "opacity": 1,
                "visible": True,
                "x": 0,
                "y": 0,
                "objects": objects,
            }
        )
        grid = self.tileset_grid_size
        return {
            "type": "map",
            "version": "1.10",
            "orientation": "orthogonal",
            "renderorder": "right-down",
            "infinite": False,
            "width": self.width,
            "height": self.height,
            "tilewidth": self.tilewidth,
            "tileheight": self.tileheight,
            "layers": layers,
            "nextlayerid": len(layers) + 1,
            "nextobjectid": len(objects) + 1,
            "tilesets": [
                {
                    "firstgid": 1,
                    "name": self.tileset_key,
                    "image": f"{self.tileset_key}.png",
                    "imagewidth": grid * self.tilewidth,
                    "imageheight": grid * self.tileheight,
                    "tilewidth": self.tilewidth,
                    "tileheight": self.tileheight,
                    "columns": grid,
                    "tilecount": grid * grid,
                    "margin": 0,
                    "spacing": 0,
                }
            ],
        }


def _layout_rows(layout_ascii: str) -> list[str]:
    lines = layout_ascii.splitlines()
    while lines and not lines[0].strip():
        lines.pop(0)
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise ValueError("layout is empty")
    widths = {len(line) for line in lines}
    if len(widths) > 1:
        raise RaggedLayout(f"layout rows have unequal lengths: {sorted(widths)}")
    return lines


def generate_tilemap(spec: TilemapSpec) -> list[TilemapDocument]:
    """Convert every map in the spec into a tilemap document."""
    auto_chars = set(spec.auto_tile_chars)
    docs = []
    for mapdef in spec.maps:
        rows = _layout_rows(mapdef.layout_ascii)
        height, width = len(rows), len(rows[0])

        for r, line in enumerate(rows):
            for c, ch in enumerate(line):
                if ch != " " and ch not in mapdef.legend:
                    raise UnknownLegendChar(
                        f"map {mapdef.map_key!r}: char {ch!r} at ({r}, {c}) "
                        "is not in the legend"
                    )

        # Object-marker cells do not count as marked terrain.
        marked = [
            [
                ch in auto_chars and ch not in mapdef.object_markers
                for ch in line
            ]
            for line in rows
        ]

        fill = BASE_TILE_ID if spec.mode == "floor" else 0
        data: list[int] = []
        objects: list[TilemapObject] = []
        for r, line in enumerate(rows):
            for c, ch in enumerate(line):
                if ch in mapdef.object_markers:
                    objects.append(
                        TilemapObject(
                            name=mapdef.legend.get(ch, ch),
                            x=(c + 0.5) * spec.tile_size,
                            y=(r + 0.5) * spec.tile_size,
                        )
                    )
                    data.append(fill)
                elif marked[r][c]:
                    tile = (
                        compute_blob_tile(marked, r, c)
                        if spec.auto_tiling
                        else BASE_TILE_ID
                    )
                    data.append(tile)
                else:
                    data.append(fill)

        docs.append(
            TilemapDocument(
                map_key=mapdef.map_key,
                width=width,
                height=height,
                tilewidth=spec.tile_size,
                tileheight=spec.tile_size,
                tile_layers={"terrain": data},
                object_layer=objects,
                tileset_key=spec.tileset_key,
                tileset_grid_size=spec.tileset_grid_size,
            )
        )
    return docs


def write_tilemaps(spec: TilemapSpec, out_dir) -> list[str]:
    """Generate and write one ``<map_key>.json`` per map; returns the paths."""
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for doc in generate_tilemap(spec):
        path = out / f"{doc.map_key}.json"
        path.write_text(json.dumps(doc.to_tiled_json(), indent=2) + "\n")
        written.append(str(path))
    return written
