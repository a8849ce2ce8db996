#!/usr/bin/env python3
"""Regenerate sample_tasks/ and the mock fixtures under fixtures/.

Run from the repo root after changing templates or fixture content:

    PYTHONPATH=src python3 tools/gen_sample_fixtures.py
"""

from __future__ import annotations

import json
from pathlib import Path

from opengame.design import Gdd, GddAsset, RoadmapItem, render_gdd
from opengame.scoring import requirement_id
from opengame.skills import Archetype

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
SAMPLE_TASKS = ROOT / "sample_tasks"

ABC_LOOP = (
    "X:1\nT:{title}\nM:4/4\nL:1/8\nQ:1/4={tempo}\nK:{key}\n"
    "{body}\n"
)


def write_fixture(tag: str, slug: str, text: str) -> None:
    path = FIXTURES / tag / f"{slug}.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({"text": text}, indent=2) + "\n")


TASKS = [
    {
        "id": "crystal-caverns",
        "title": "Crystal Caverns",
        "archetype": Archetype.PLATFORMER,
        "prompt": (
            "A 2D platformer where a hero leaps between glowing ledges, falls "
            "without ground support, collects crystals, and can double jump. "
            "Forest-cavern theme with calm chiptune music."
        ),
        "vu_score": 66,
        "abc": {"tempo": 112, "key": "C", "body": "CDEF GABc | c2G2 E2C2 | EGcG EGcG | C4 z4 |"},
        "requirements": [
            ("Hero can jump between platforms with gravity", "core_mechanic", "pass"),
            ("Double jump is available", "core_mechanic", "partial"),
            ("Crystals can be collected", "secondary_mechanic", "pass"),
            ("Forest-cavern visual theme", "cosmetic", "pass"),
        ],
    },
    {
        "id": "star-swarm",
        "title": "Star Swarm",
        "archetype": Archetype.TOP_DOWN,
        "prompt": (
            "A top-down arena shooter: steer a nimble ship around an asteroid "
            "field, dodge drifting rocks, and survive as long as possible."
        ),
        "vu_score": 61,
        "abc": {"tempo": 140, "key": "Am", "body": "A,2 E2 A2 c2 | B2 A2 E4 | A,2 E2 A2 e2 | d2 c2 A4 |"},
        "requirements": [
            ("Ship steers freely in two dimensions", "core_mechanic", "pass"),
            ("Asteroids drift across the arena", "core_mechanic", "pass"),
            ("Collision with an asteroid has consequences", "secondary_mechanic", "partial"),
            ("Space-themed visuals", "cosmetic", "pass"),
        ],
    },
    {
        "id": "gem-grid",
        "title": "Gem Grid",
        "archetype": Archetype.GRID_LOGIC,
        "prompt": (
            "A relaxing puzzle where gems snap to a grid; click to select and "
            "swap gems, match three of a kind to clear them from the board."
        ),
        "vu_score": 58,
        "abc": {"tempo": 84, "key": "G", "body": "G2 B2 d2 B2 | c2 A2 G4 | G2 B2 d2 g2 | f2 d2 G4 |"},
        "requirements": [
            ("Gems occupy discrete grid cells", "core_mechanic", "pass"),
            ("Matching three clears gems", "core_mechanic", "partial"),
            ("Click selects and swaps gems", "secondary_mechanic", "pass"),
            ("Relaxing look and feel", "cosmetic", "pass"),
        ],
    },
    {
        "id": "forest-siege",
        "title": "Forest Siege",
        "archetype": Archetype.TOWER_DEFENSE,
        "prompt": (
            "Enemies march along a winding path in timed waves; place arrow "
            "towers beside the route to defend the forest grove."
        ),
        "vu_score": 63,
        "abc": {"tempo": 120, "key": "D", "body": "D2 F2 A2 F2 | G2 E2 D4 | D2 F2 A2 d2 | c2 A2 D4 |"},
        "requirements": [
            ("Enemies follow the path in waves", "core_mechanic", "pass"),
            ("Towers can be placed by the player", "core_mechanic", "pass"),
            ("Towers attack enemies in range", "secondary_mechanic", "partial"),
            ("Forest setting", "cosmetic", "pass"),
        ],
    },
    {
        "id": "potion-shop",
        "title": "Potion Shop",
        "archetype": Archetype.UI_HEAVY,
        "prompt": (
            "An idle clicker shop with menus: press buttons to brew potions, "
            "watch the inventory panel fill, and sell stock for gold."
        ),
        "vu_score": 57,
        "abc": {"tempo": 96, "key": "F", "body": "F2 A2 c2 A2 | B2 G2 F4 | F2 A2 c2 f2 | e2 c2 F4 |"},
        "requirements": [
            ("Buttons brew potions", "core_mechanic", "pass"),
            ("Inventory panel shows stock", "core_mechanic", "partial"),
            ("Potions can be sold for gold", "secondary_mechanic", "pass"),
            ("Shop-interior presentation", "cosmetic", "pass"),
        ],
    },
]


def gdd_for(task: dict) -> Gdd:
    archetype = task["archetype"]
    slug = task["id"]
    if archetype is Archetype.PLATFORMER:
        return Gdd(
            title=task["title"],
            archetype=archetype,
            assets=[
                GddAsset("hero_idle", "animation", "side-view hero idle cycle", {"frame_count": 2}),
                GddAsset("cavern_bg", "background", "glowing forest cavern backdrop"),
                GddAsset("crystal", "image", "cyan crystal pickup"),
                GddAsset("rock_tiles", "tileset", "mossy cave rock tiles", {"tile_size": 32}),
                GddAsset("bgm_caverns", "audio_bgm", "calm chiptune loop", {"tempo": 112, "genre": "chiptune", "duration": 8}),
                GddAsset("sfx_jump", "audio_sfx", "short jump blip", {"duration": 1}),
            ],
            core_mechanics=(
                "Run and jump across ledges under gravity. A second jump is "
                "allowed while airborne once. Touching a crystal collects it."
            ),
            level_content=(
                "One cavern screen built from the default ground plus two "
                "floating ledges; crystals above each ledge.\n\n"
                "```tilemap\n"
                + json.dumps(
                    {
                        "tileset_key": "rock_tiles",
                        "tile_size": 32,
                        "mode": "walls",
                        "maps": [
                            {
                                "map_key": "cavern",
                                "layout_ascii": "##########\n#........#\n#..###...#\n#P......C#\n##########",
                                "legend": {"#": "rock", ".": "air", "P": "player_spawn", "C": "crystal_spawn"},
                                "object_markers": ["P", "C"],
                            }
                        ],
                    }
                )
                + "\n```"
            ),
            config_params={"gravity": 950, "jumpVelocity": 430, "crystalValue": 5},
            roadmap=[
                RoadmapItem("src/scenes/GameScene.js", "set the hero sprite and spawn in setupPlayer"),
                RoadmapItem("src/scenes/GameScene.js", "spawn crystals and pickup logic in setupCustomCollisions"),
                RoadmapItem("src/scenes/GameScene.js", "show the crystal counter in drawHud"),
            ],
            acceptance_notes="Hero can reach both ledges; crystal counter increments on pickup.",
        )
    if archetype is Archetype.TOP_DOWN:
        return Gdd(
            title=task["title"],
            archetype=archetype,
            assets=[
                GddAsset("ship", "image", "top-view silver ship"),
                GddAsset("asteroid", "image", "cratered gray asteroid"),
                GddAsset("space_bg", "background", "star field with nebula"),
                GddAsset("sfx_hit", "audio_sfx", "dull impact thud", {"duration": 1}),
            ],
            core_mechanics=(
                "Ship steers continuously with arrows/WASD. Asteroids drift; "
                "touching one costs a life."
            ),
            level_content="Open arena the size of the canvas; six asteroids drifting with fixed random headings.",
            config_params={"moveSpeed": 260, "asteroidCount": 6, "startLives": 3},
            roadmap=[
                RoadmapItem("src/scenes/GameScene.js", "spawn the asteroid field in setupActors"),
                RoadmapItem("src/scenes/GameScene.js", "handle ship-asteroid hits in onActorTouched"),
            ],
            acceptance_notes="Ship moves on both axes; lives decrease on impact.",
        )
    if archetype is Archetype.GRID_LOGIC:
        return Gdd(
            title=task["title"],
            archetype=archetype,
            assets=[
                GddAsset("gem_red", "image", "round ruby gem"),
                GddAsset("gem_blue", "image", "square sapphire gem"),
                GddAsset("gem_green", "image", "teardrop emerald gem"),
                GddAsset("felt_bg", "background", "soft green felt table"),
                GddAsset("bgm_zen", "audio_bgm", "slow ambient loop", {"tempo": 84, "genre": "ambient", "duration": 8}),
            ],
            core_mechanics=(
                "Gems fill the board. Click selects a gem, a second click on a "
                "neighbor swaps; three in a row clears."
            ),
            level_content="8x8 board seeded deterministically from the three gem kinds.",
            config_params={"boardCols": 8, "boardRows": 8, "matchLength": 3},
            roadmap=[
                RoadmapItem("src/scenes/GameScene.js", "fill the board with gems in setupBoard"),
                RoadmapItem("src/scenes/GameScene.js", "selection and swap in onCellActivated"),
            ],
            acceptance_notes="Board renders 64 cells; swapping adjacent gems works.",
        )
    if archetype is Archetype.TOWER_DEFENSE:
        return Gdd(
            title=task["title"],
            archetype=archetype,
            assets=[
                GddAsset("tower_arrow", "image", "wooden arrow tower"),
                GddAsset("walker_imp", "image", "small marching imp"),
                GddAsset("forest_bg", "background", "sunlit forest clearing"),
                GddAsset("path_tiles", "tileset", "packed dirt path tiles", {"tile_size": 32}),
                GddAsset("sfx_build", "audio_sfx", "wooden thunk", {"duration": 1}),
            ],
            core_mechanics=(
                "Imps march the waypoint path in waves. Pointer press builds an "
                "arrow tower off the route; towers shoot the nearest imp in range."
            ),
            level_content=(
                "One winding route.\n\n"
                "```tilemap\n"
                + json.dumps(
                    {
                        "tileset_key": "path_tiles",
                        "tile_size": 32,
                        "mode": "floor",
                        "maps": [
                            {
                                "map_key": "grove",
                                "layout_ascii": "..........\n.########.\n.#......#.\n.#.####.#.\nS#.#..#.#E",
                                "legend": {"#": "route", ".": "grass", "S": "spawn_point", "E": "exit_point"},
                                "object_markers": ["S", "E"],
                            }
                        ],
                    }
                )
                + "\n```"
            ),
            config_params={"walkerSpeed": 70, "walkersPerWave": 6, "towerRange": 120, "startWood": 5},
            roadmap=[
                RoadmapItem("src/scenes/GameScene.js", "validated tower placement in onPlacement"),
                RoadmapItem("src/scenes/GameScene.js", "tower targeting in updateGameplay"),
            ],
            acceptance_notes="Waves spawn on a timer; towers damage imps in range.",
        )
    if archetype is Archetype.UI_HEAVY:
        return Gdd(
            title=task["title"],
            archetype=archetype,
            assets=[
                GddAsset("shop_bg", "background", "cozy potion shop interior"),
                GddAsset("potion_icon", "image", "bubbling purple potion bottle"),
                GddAsset("sfx_click", "audio_sfx", "soft glass clink", {"duration": 1}),
            ],
            core_mechanics=(
                "The brew button starts a potion after a fixed brew time; the "
                "sell button converts stock to gold shown in the status line."
            ),
            level_content="Single screen: inventory panel, brew button, sell button, gold readout.",
            config_params={"brewTime": 2, "potionPrice": 12},
            roadmap=[
                RoadmapItem("src/scenes/GameScene.js", "panels and buttons in setupUi"),
                RoadmapItem("src/scenes/GameScene.js", "brew/sell transitions in onButtonPressed"),
                RoadmapItem("src/scenes/GameScene.js", "gold and stock readout in drawStatus"),
            ],
            acceptance_notes="Brew increases stock after brewTime; sell adds gold.",
        )
    raise AssertionError(archetype)


IMPLEMENT_EDITS = {
    "crystal-caverns": [
        {
            "file": "src/scenes/GameScene.js",
            "find": "  setupPlayer() {}",
            "replace": (
                "  setupPlayer() {\n"
                "    this.player.key = \"hero_idle\";\n"
                "    this.player.x = 96;\n"
                "    this.heroSprite = this.engine.asset(\"hero_idle\");\n"
                "  }"
            ),
        },
        {
            "file": "src/scenes/GameScene.js",
            "find": "  setupCustomCollisions() {}",
            "replace": (
                "  setupCustomCollisions() {\n"
                "    this.crystals = 0;\n"
                "    this.crystalValue = this.engine.value(\"crystalValue\", 5);\n"
                "    this.jumpSfx = this.engine.sound(\"sfx_jump\");\n"
                "    this.entities.push({ key: \"crystal\", x: 300, y: 260, w: 20, h: 20, color: \"#4fd\" });\n"
                "    this.entities.push({ key: \"crystal\", x: 520, y: 180, w: 20, h: 20, color: \"#4fd\" });\n"
                "  }"
            ),
        },
        {
            "file": "src/scenes/GameScene.js",
            "find": "  updateGameplay(dt) {}",
            "replace": (
                "  updateGameplay(dt) {\n"
                "    const p = this.player;\n"
                "    this.entities = this.entities.filter((e) => {\n"
                "      const hit = e.key === \"crystal\" && Math.abs(e.x - p.x) < 28 && Math.abs(e.y - p.y) < 36;\n"
                "      if (hit) this.crystals += this.crystalValue;\n"
                "      return !hit;\n"
                "    });\n"
                "  }"
            ),
        },
        {
            "file": "src/scenes/GameScene.js",
            "find": "  drawHud(ctx) {}",
            "replace": (
                "  drawHud(ctx) {\n"
                "    ctx.fillStyle = \"#fff\";\n"
                "    ctx.font = \"16px monospace\";\n"
                "    ctx.fillText(`crystals: ${this.crystals || 0}`, 12, 24);\n"
                "  }"
            ),
        },
    ],
    "star-swarm": [
        {
            "file": "src/scenes/GameScene.js",
            "find": (
                "  setupActors() {\n"
                "    this.actors.push({ key: \"drifter\", x: 150, y: 120, r: 12, vx: 40, vy: 25, color: \"#a6f\" });\n"
                "  }"
            ),
            "replace": (
                "  setupActors() {\n"
                "    this.player.key = \"ship\";\n"
                "    this.lives = this.engine.value(\"startLives\", 3);\n"
                "    this.hitSfx = this.engine.sound(\"sfx_hit\");\n"
                "    const count = this.engine.value(\"asteroidCount\", 6);\n"
                "    for (let i = 0; i < count; i++) {\n"
                "      const angle = (i / count) * Math.PI * 2;\n"
                "      this.actors.push({\n"
                "        key: \"asteroid\",\n"
                "        x: 400 + Math.cos(angle) * 180,\n"
                "        y: 225 + Math.sin(angle) * 140,\n"
                "        r: 14,\n"
                "        vx: Math.cos(angle + 1.3) * 55,\n"
                "        vy: Math.sin(angle + 1.3) * 55,\n"
                "        color: \"#987\",\n"
                "      });\n"
                "    }\n"
                "  }"
            ),
        },
        {
            "file": "src/scenes/GameScene.js",
            "find": "  onActorTouched(actor) {}",
            "replace": (
                "  onActorTouched(actor) {\n"
                "    if (actor.cooldown > 0) return;\n"
                "    actor.cooldown = 1;\n"
                "    this.lives -= 1;\n"
                "    this.hitSfx.play();\n"
                "  }"
            ),
        },
        {
            "file": "src/scenes/GameScene.js",
            "find": "  updateGameplay(dt) {}",
            "replace": (
                "  updateGameplay(dt) {\n"
                "    const { width, height } = this.engine.canvas;\n"
                "    for (const a of this.actors) {\n"
                "      if (a.cooldown > 0) a.cooldown -= dt;\n"
                "      if (a.x < 0 || a.x > width) a.vx *= -1;\n"
                "      if (a.y < 0 || a.y > height) a.vy *= -1;\n"
                "    }\n"
                "  }"
            ),
        },
        {
            "file": "src/scenes/GameScene.js",
            "find": "  drawHud(ctx) {}",
            "replace": (
                "  drawHud(ctx) {\n"
                "    ctx.fillStyle = \"#fff\";\n"
                "    ctx.font = \"16px monospace\";\n"
                "    ctx.fillText(`lives: ${this.lives ?? 3}`, 12, 24);\n"
                "  }"
            ),
        },
    ],
    "gem-grid": [
        {
            "file": "src/scenes/GameScene.js",
            "find": (
                "  setupBoard() {\n"
                "    this.board[0][0] = { key: \"piece\", color: \"#8cf\" };\n"
                "  }"
            ),
            "replace": (
                "  setupBoard() {\n"
                "    const kinds = [\n"
                "      { key: \"gem_red\", color: \"#e44\" },\n"
                "      { key: \"gem_blue\", color: \"#48e\" },\n"
                "      { key: \"gem_green\", color: \"#4c6\" },\n"
                "    ];\n"
                "    for (let r = 0; r < this.rows; r++) {\n"
                "      for (let c = 0; c < this.cols; c++) {\n"
                "        this.board[r][c] = { ...kinds[(r * 7 + c * 3) % kinds.length] };\n"
                "      }\n"
                "    }\n"
                "    this.selected = null;\n"
                "  }"
            ),
        },
        {
            "file": "src/scenes/GameScene.js",
            "find": "  onCellActivated(row, col) {}",
            "replace": (
                "  onCellActivated(row, col) {\n"
                "    if (!this.selected) {\n"
                "      this.selected = [row, col];\n"
                "      return;\n"
                "    }\n"
                "    const [r0, c0] = this.selected;\n"
                "    this.selected = null;\n"
                "    if (Math.abs(r0 - row) + Math.abs(c0 - col) !== 1) return;\n"
                "    const tmp = this.board[r0][c0];\n"
                "    this.board[r0][c0] = this.board[row][col];\n"
                "    this.board[row][col] = tmp;\n"
                "  }"
            ),
        },
    ],
    "forest-siege": [
        {
            "file": "src/scenes/GameScene.js",
            "find": (
                "  onPlacement(x, y) {\n"
                "    this.placements.push({ key: \"placement\", x, y });\n"
                "  }"
            ),
            "replace": (
                "  onPlacement(x, y) {\n"
                "    this.wood = this.wood ?? this.engine.value(\"startWood\", 5);\n"
                "    if (this.wood <= 0) return;\n"
                "    this.wood -= 1;\n"
                "    this.engine.sound(\"sfx_build\").play();\n"
                "    this.placements.push({ key: \"tower_arrow\", x, y, range: this.engine.value(\"towerRange\", 120) });\n"
                "  }"
            ),
        },
        {
            "file": "src/scenes/GameScene.js",
            "find": "  updateGameplay(dt) {}",
            "replace": (
                "  updateGameplay(dt) {\n"
                "    for (const tower of this.placements) {\n"
                "      const target = this.walkers.find(\n"
                "        (w) => Math.hypot(w.x - tower.x, w.y - tower.y) <= (tower.range || 120)\n"
                "      );\n"
                "      if (target) target.hp = (target.hp ?? 2) - dt;\n"
                "    }\n"
                "    this.walkers = this.walkers.filter((w) => (w.hp ?? 2) > 0);\n"
                "  }"
            ),
        },
        {
            "file": "src/scenes/GameScene.js",
            "find": "  setupWaves() {}",
            "replace": (
                "  setupWaves() {\n"
                "    this.walkerKey = \"walker_imp\";\n"
                "    this.impImg = this.engine.asset(\"walker_imp\");\n"
                "  }"
            ),
        },
    ],
    "potion-shop": [
        {
            "file": "src/scenes/GameScene.js",
            "find": (
                "  setupUi() {\n"
                "    this.panels.push({ x: 40, y: 40, w: 300, h: 80, text: \"panel\" });\n"
                "    this.buttons.push({ id: \"primary\", label: \"Press\", x: 40, y: 150, w: 120, h: 44 });\n"
                "  }"
            ),
            "replace": (
                "  setupUi() {\n"
                "    this.state = { gold: 0, stock: 0, brewing: 0 };\n"
                "    this.potionImg = this.engine.asset(\"potion_icon\");\n"
                "    this.clickSfx = this.engine.sound(\"sfx_click\");\n"
                "    this.panels.push({ x: 40, y: 40, w: 340, h: 90, text: \"Inventory\", key: \"potion_icon\" });\n"
                "    this.buttons.push({ id: \"brew\", label: \"Brew\", x: 40, y: 160, w: 120, h: 44 });\n"
                "    this.buttons.push({ id: \"sell\", label: \"Sell\", x: 180, y: 160, w: 120, h: 44 });\n"
                "  }"
            ),
        },
        {
            "file": "src/scenes/GameScene.js",
            "find": "  onButtonPressed(id) {}",
            "replace": (
                "  onButtonPressed(id) {\n"
                "    this.clickSfx.play();\n"
                "    if (id === \"brew\" && this.state.brewing <= 0) {\n"
                "      this.state.brewing = this.engine.value(\"brewTime\", 2);\n"
                "    }\n"
                "    if (id === \"sell\" && this.state.stock > 0) {\n"
                "      this.state.stock -= 1;\n"
                "      this.state.gold += this.engine.value(\"potionPrice\", 12);\n"
                "    }\n"
                "  }"
            ),
        },
        {
            "file": "src/scenes/GameScene.js",
            "find": "  updateGame(dt) {}",
            "replace": (
                "  updateGame(dt) {\n"
                "    if (this.state.brewing > 0) {\n"
                "      this.state.brewing -= dt;\n"
                "      if (this.state.brewing <= 0) this.state.stock += 1;\n"
                "    }\n"
                "  }"
            ),
        },
        {
            "file": "src/scenes/GameScene.js",
            "find": "  drawStatus(ctx) {}",
            "replace": (
                "  drawStatus(ctx) {\n"
                "    ctx.fillStyle = \"#fe9\";\n"
                "    ctx.font = \"16px monospace\";\n"
                "    ctx.fillText(`gold: ${this.state.gold}  stock: ${this.state.stock}`, 40, 260);\n"
                "  }"
            ),
        },
    ],
}


def main() -> None:
    SAMPLE_TASKS.mkdir(exist_ok=True)
    tasks_payload = []
    for task in TASKS:
        slug = task["id"]
        tasks_payload.append(
            {"id": slug, "title": task["title"], "prompt": task["prompt"]}
        )

        gdd = gdd_for(task)
        write_fixture("gdd", slug, render_gdd(gdd))
        write_fixture(
            "implement", slug, json.dumps({"edits": IMPLEMENT_EDITS[slug]}, indent=2)
        )
        abc = task["abc"]
        write_fixture(
            "abc",
            slug,
            json.dumps(
                {
                    "notation": ABC_LOOP.format(
                        title=task["title"], tempo=abc["tempo"], key=abc["key"], body=abc["body"]
                    ),
                    "comments": f"loop for {slug}",
                }
            ),
        )
        write_fixture(
            "requirements",
            slug,
            json.dumps(
                {
                    "requirements": [
                        {"text": text, "category": category}
                        for text, category, _ in task["requirements"]
                    ]
                },
                indent=2,
            ),
        )
        write_fixture("judge_vu", slug, json.dumps({"score": task["vu_score"]}))
        write_fixture(
            "judge_ia",
            slug,
            json.dumps(
                {
                    "verdicts": [
                        {
                            "requirement_id": requirement_id(text),
                            "value": verdict,
                            "evidence": f"screenshots show: {text.lower()}",
                        }
                        for text, _, verdict in task["requirements"]
                    ]
                },
                indent=2,
            ),
        )

    (SAMPLE_TASKS / "tasks.json").write_text(json.dumps(tasks_payload, indent=2) + "\n")
    print(f"wrote {len(TASKS)} tasks and fixtures under {FIXTURES}")


if __name__ == "__main__":
    main()
