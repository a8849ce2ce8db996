"""Full mock pipeline: prompt -> six phases -> workspace -> scored report.

Run from the repo root: python3 demos/04_generate_and_evaluate.py
Uses the fixture-backed mock backends and the fake browser: no network.
"""

import json
import shutil
from pathlib import Path

from opengame.evaluate import EvalSettings, evaluate_project
from opengame.gateway import build_gateway
from opengame.skills import SkillStore
from opengame.workflow import GameSpec, RunConfig, run_generation

task = json.loads(Path("sample_tasks/tasks.json").read_text())[0]
out = Path("demo_workspace")
shutil.rmtree(out, ignore_errors=True)

gateway = build_gateway(mock_fixtures="fixtures")
store = SkillStore("skills")

spec = GameSpec(
    prompt=task["prompt"],
    title_hint=task["title"],
    run_config=RunConfig(workspace_root=out, skills_root=Path("skills")),
)
workspace = run_generation(
    spec,
    store.load_library(),
    store.load_protocol(),
    gateway,
    on_phase=lambda phase: print(f"phase: {phase.value}"),
)
print("workspace:", workspace.root, "failed:", workspace.failed)

report = evaluate_project(workspace.root, gateway, EvalSettings(seeds=(1, 2, 3)))
print("\n".join(report.summary_lines()))
report.write(out / "report.json")
print("report:", out / "report.json")
