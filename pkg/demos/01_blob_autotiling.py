"""Blob auto-tiling walkthrough: ASCII layout -> 47-class tile ids.

Run from the repo root: python3 demos/01_blob_autotiling.py
"""

from opengame.tilemap import (
    CANONICAL_MASKS,
    MapDefinition,
    TilemapSpec,
    canonical_mask,
    generate_tilemap,
)

# All 256 raw 8-neighbor masks collapse into exactly 47 canonical classes:
# a corner neighbor only matters when both of its adjacent edges are present.
print("canonical classes:", len(CANONICAL_MASKS))
print("example: raw mask N+E+NW =", 1 + 2 + 128, "->", canonical_mask(1 + 2 + 128), "(NW dropped)")

layout = """\
##########
#........#
#..###...#
#P......E#
##########"""

spec = TilemapSpec(
    tileset_key="rock",
    tile_size=64,
    mode="walls",
    maps=[
        MapDefinition(
            map_key="demo",
            layout_ascii=layout,
            legend={"#": "wall", ".": "air", "P": "player_spawn", "E": "exit"},
            object_markers={"P", "E"},
        )
    ],
)
doc = generate_tilemap(spec)[0]

print(f"\n{doc.width}x{doc.height} map, tile ids (0 = empty):")
for row in range(doc.height):
    cells = doc.tile_layers["terrain"][row * doc.width : (row + 1) * doc.width]
    print("  " + " ".join(f"{t:2d}" for t in cells))

print("\nobjects (center-anchored pixels):")
for obj in doc.object_layer:
    print(f"  {obj.name} at ({obj.x:.0f}, {obj.y:.0f})")
