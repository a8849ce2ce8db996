"""The three metrics on synthetic inputs: entropy, motion, BH, IA.

Run from the repo root: python3 demos/05_scoring_metrics.py
"""

import numpy as np

from opengame import imaging
from opengame.bench import BuildResult, CaptureSet, ConsoleEvent
from opengame.scoring import (
    Requirement,
    Verdict,
    VerdictValue,
    frame_entropy,
    motion_score,
    score_build_health,
    score_intent_alignment,
)

uniform = imaging.encode_png(np.full((64, 64), 128, dtype=np.uint8))
half = np.zeros((64, 64), dtype=np.uint8)
half[:, 32:] = 255
noise = imaging.encode_png(np.random.default_rng(1).integers(0, 256, (64, 64), dtype=np.uint8))

print("frame entropy:")
print("  uniform:", frame_entropy(uniform))          # 0.0
print("  50/50 two-color:", frame_entropy(imaging.encode_png(half)))  # 0.125 exactly
print("  iid noise:", round(frame_entropy(noise), 3))  # ~1.0

captures = CaptureSet(screenshots=[(0.0, noise), (2.0, uniform), (4.0, noise)])
print("motion score (noise/uniform/noise):", motion_score(captures))

captures.console_events = [ConsoleEvent("error", "x is undefined", 1.0)] * 2
scores = score_build_health(BuildResult(required=True, status="success"), captures)
print("build health:", scores.bh, scores.subscores)  # 40+30+20+6 = 96

requirements = [
    Requirement("r1", "double jump works", "core_mechanic"),
    Requirement("r2", "coin counter", "secondary_mechanic"),
    Requirement("r3", "forest theme", "cosmetic"),
]
verdicts = [
    Verdict("r1", VerdictValue.PASS),
    Verdict("r2", VerdictValue.PARTIAL),
    Verdict("r3", VerdictValue.FAIL),
]
print("intent alignment (3/2/1 weights, pass/partial/fail):",
      round(score_intent_alignment(requirements, verdicts), 1))  # 66.7
