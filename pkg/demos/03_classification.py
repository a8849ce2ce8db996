"""Physics-first classification: prompts -> archetypes, rule path only.

Run from the repo root: python3 demos/03_classification.py
"""

from opengame.design import classify_game_type

PROMPTS = [
    "hero leaps between ledges and falls without ground support",
    "gems snapping to a grid, match three to clear",
    "enemies march along a path in waves; place towers",
    "top-down arena shooter, steer and dodge asteroids",
    "an idle clicker shop full of buttons and menus",
]

for prompt in PROMPTS:
    result = classify_game_type(prompt)
    print(f"{result.archetype.value:14s} ({result.confidence:.2f})  <- {prompt!r}")
    print(f"  {result.rationale}")
