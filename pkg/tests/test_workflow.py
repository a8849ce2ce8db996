"""Phase machine, todo invariants, three-layer reading, repair loop, full runs."""

from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opengame.design import Gdd, GddAsset, RoadmapItem, render_gdd
from opengame.gateway import Gateway, RetryPolicy, ScriptedBackend
from opengame.skills import (
    Archetype,
    DebugEntry,
    DebugProtocol,
    FixRecipe,
    append_entry,
    instantiate_template,
    load_template_library,
    normalize_error_signature,
    select_template,
)
from opengame.workflow import (
    DuplicateId,
    DuplicateInProgress,
    GameSpec,
    IllegalTransition,
    MissingDoc,
    RepairBudgetExhausted,
    RunConfig,
    WorkspaceNotEmpty,
    advance_phase,
    apply_edits,
    run_generation,
    three_layer_read,
    todo_write,
    verification_loop,
)
from opengame.workspace import (
    PHASE_ORDER,
    Phase,
    PhaseState,
    TodoItem,
    TodoList,
    TodoStatus,
)


def gw(*outcomes) -> Gateway:
    policy = RetryPolicy(attempts=3, backoffs=(0, 0, 0), timeout=1.0, sleep=lambda _: None)
    return Gateway(retry=policy).register("chat", ScriptedBackend(outcomes))


# --- spec & config validation ---------------------------------------------------

def test_empty_prompt_rejected():
    with pytest.raises(ValueError):
        GameSpec(prompt="   ")


def test_negative_debug_iters_rejected():
    with pytest.raises(ValueError):
        RunConfig(max_debug_iters=-1)


def test_duplicate_seeds_rejected():
    with pytest.raises(ValueError):
        RunConfig(seeds=(1, 1, 2))


def test_scenario_tag_from_title_hint():
    spec = GameSpec(prompt="a platformer", title_hint="Crystal Caverns!")
    assert spec.scenario_tag == "crystal-caverns"


# --- phase machine -----------------------------------------------------------------

def test_phases_advance_in_fixed_order():
    state = PhaseState(phase=Phase.CLASSIFICATION_SCAFFOLDING)
    seen = [state.phase]
    while state.phase is not Phase.DONE:
        state = advance_phase(state)
        seen.append(state.phase)
    assert seen == list(PHASE_ORDER)


def test_skipping_phases_is_illegal():
    state = PhaseState(phase=Phase.GAME_DESIGN)
    with pytest.raises(IllegalTransition):
        advance_phase(state, to=Phase.VERIFICATION)


def test_verification_advances_to_done():
    state = PhaseState(phase=Phase.VERIFICATION)
    assert advance_phase(state).phase is Phase.DONE


def test_done_is_terminal():
    with pytest.raises(IllegalTransition):
        advance_phase(PhaseState(phase=Phase.DONE))


def test_advance_records_artifacts_and_finish():
    state = PhaseState(phase=Phase.GAME_DESIGN)
    advance_phase(state, artifacts=["gdd.md"])
    assert state.artifacts == ["gdd.md"]
    assert state.finished_at is not None


# --- todo management ------------------------------------------------------------------

def item(i: str, status=TodoStatus.PENDING) -> TodoItem:
    return TodoItem(id=i, content=f"do {i}", status=status)


def test_second_in_progress_rejected():
    todos = todo_write(TodoList(), [item("a"), item("b")])
    todos = todo_write(todos, [item("a", TodoStatus.IN_PROGRESS)])
    with pytest.raises(DuplicateInProgress):
        todo_write(todos, [item("b", TodoStatus.IN_PROGRESS)])


def test_in_progress_to_completed():
    todos = todo_write(TodoList(), [item("a", TodoStatus.IN_PROGRESS)])
    todos = todo_write(todos, [item("a", TodoStatus.COMPLETED)])
    assert todos.items[0].status is TodoStatus.COMPLETED


def test_append_duplicate_ids_rejected():
    with pytest.raises(DuplicateId):
        todo_write(TodoList(), [item("same"), item("same")])


def test_swap_in_progress_in_one_batch():
    todos = todo_write(TodoList(), [item("a", TodoStatus.IN_PROGRESS), item("b")])
    todos = todo_write(
        todos,
        [item("a", TodoStatus.COMPLETED), item("b", TodoStatus.IN_PROGRESS)],
    )
    statuses = {t.id: t.status for t in todos.items}
    assert statuses == {"a": TodoStatus.COMPLETED, "b": TodoStatus.IN_PROGRESS}


@settings(max_examples=200, deadline=None)
@given(
    st.lists(
        st.tuples(
            st.sampled_from(["a", "b", "c", "d"]),
            st.sampled_from(list(TodoStatus)),
        ),
        max_size=25,
    )
)
def test_todo_invariants_hold_after_every_write(updates):
    todos = TodoList()
    for identifier, status in updates:
        try:
            todos = todo_write(todos, [TodoItem(id=identifier, content="x", status=status)])
        except (DuplicateInProgress, DuplicateId):
            continue
        ids = [t.id for t in todos.items]
        assert len(ids) == len(set(ids))
        assert sum(1 for t in todos.items if t.status is TodoStatus.IN_PROGRESS) <= 1


# --- three-layer reading -----------------------------------------------------------------

@pytest.fixture
def platformer_workspace(skills_root, tmp_path):
    library = load_template_library(skills_root)
    family = select_template(Archetype.PLATFORMER, library)
    return instantiate_template(family, tmp_path / "proj", archetype=Archetype.PLATFORMER)


def test_three_layer_bundle_guide_last(platformer_workspace):
    bundle = three_layer_read(platformer_workspace, "src/scenes/GameScene.js")
    text = bundle.assemble()
    api_pos = text.index("Template API summary")
    source_pos = text.index("Target source")
    guide_pos = text.index("Implementation guide")
    assert api_pos < source_pos < guide_pos
    assert text.rstrip().endswith(bundle.implementation_guide.rstrip())


def test_three_layer_target_outside_workspace(platformer_workspace, tmp_path):
    outside = tmp_path / "elsewhere.js"
    outside.write_text("nope")
    with pytest.raises(ValueError):
        three_layer_read(platformer_workspace, "../elsewhere.js")


def test_three_layer_missing_guide(platformer_workspace):
    platformer_workspace.path("docs/implementation_guide.md").unlink()
    with pytest.raises(MissingDoc):
        three_layer_read(platformer_workspace, "src/scenes/GameScene.js")


# --- edits ---------------------------------------------------------------------------------

def test_apply_edits_find_replace_and_content(platformer_workspace):
    edits = [
        {"file": "src/scenes/GameScene.js", "find": "setupPlayer() {}", "replace": "setupPlayer() { this.ready = true; }"},
        {"file": "src/extra.js", "content": "export const極 = 1;\n"},
    ]
    touched = apply_edits(platformer_workspace, edits)
    assert touched == ["src/scenes/GameScene.js", "src/extra.js"]
    assert "this.ready = true" in platformer_workspace.path("src/scenes/GameScene.js").read_text()


def test_apply_edits_rejects_escape(platformer_workspace):
    with pytest.raises(ValueError):
        apply_edits(platformer_workspace, [{"file": "../outside.js", "content": "x"}])


def test_apply_edits_missing_find(platformer_workspace):
    with pytest.raises(ValueError):
        apply_edits(
            platformer_workspace,
            [{"file": "src/main.js", "find": "not-in-file", "replace": "y"}],
        )


# --- verification loop with seeded defects ----------------------------------------------------

BUILD_CHECK = """\
import pathlib, sys
root = pathlib.Path(__file__).parent
a = root / "src" / "broken_a.js"
b = root / "src" / "broken_b.js"
if a.is_file() and "MARKER_A" in a.read_text():
    print("Error: defect A marker present in src/broken_a.js")
    sys.exit(1)
if b.is_file() and "MARKER_B" in b.read_text():
    print("Error: defect B marker present in src/broken_b.js")
    sys.exit(1)
print("build ok")
"""


@pytest.fixture
def defect_workspace(skills_root, tmp_path):
    """A scaffolded project with a scripted build that fails while defect
    markers remain."""
    library = load_template_library(skills_root)
    family = select_template(Archetype.PLATFORMER, library)
    workspace = instantiate_template(family, tmp_path / "proj", archetype=Archetype.PLATFORMER)
    workspace.path("package.json").write_text(
        json.dumps({"scripts": {"build": "python3 build_check.py"}})
    )
    workspace.path("build_check.py").write_text(BUILD_CHECK)
    workspace.path("src/broken_a.js").write_text("// MARKER_A\n")
    workspace.path("src/broken_b.js").write_text("// MARKER_B\n")
    return workspace


def run_config() -> RunConfig:
    return RunConfig(build_command="python3 build_check.py", max_debug_iters=5)


FIX_A = json.dumps(
    {
        "edits": [{"file": "src/broken_a.js", "find": "MARKER_A", "replace": "fixed"}],
        "cause": "stale defect marker A",
    }
)
FIX_B = json.dumps(
    {
        "edits": [{"file": "src/broken_b.js", "find": "MARKER_B", "replace": "fixed"}],
        "cause": "stale defect marker B",
    }
)


def test_two_novel_defects_grow_protocol_by_two(defect_workspace):
    protocol = DebugProtocol()
    outcome = verification_loop(
        defect_workspace, protocol, 2, gw(FIX_A, FIX_B), run_config()
    )
    assert outcome.status == "success"
    assert outcome.iterations_used == 2
    assert outcome.protocol_appended == 2
    assert len(protocol.entries) == 2


def test_t0_with_failing_build_exhausts_budget(defect_workspace):
    protocol = DebugProtocol()
    with pytest.raises(RepairBudgetExhausted) as exc:
        verification_loop(defect_workspace, protocol, 0, gw(), run_config())
    assert exc.value.outcome.iterations_used == 0
    assert len(protocol.entries) == 0


def test_known_entry_fixes_without_growth(defect_workspace):
    # only defect A present
    defect_workspace.path("src/broken_b.js").write_text("// clean\n")
    signature = normalize_error_signature("Error: defect A marker present in src/broken_a.js")
    protocol = DebugProtocol()
    append_entry(
        protocol,
        DebugEntry(
            signature=signature,
            cause="stale defect marker A",
            fix=FixRecipe("src/broken_a.js", "remove the marker"),
        ),
    )
    outcome = verification_loop(defect_workspace, protocol, 5, gw(FIX_A), run_config())
    assert outcome.status == "success"
    assert outcome.iterations_used == 1
    assert outcome.protocol_appended == 0
    assert len(protocol.entries) == 1
    assert protocol.entries[0].verified_count == 2  # reuse bumped the count


def test_validation_finding_is_fixed_before_build(skills_root, tmp_path):
    library = load_template_library(skills_root)
    family = select_template(Archetype.PLATFORMER, library)
    workspace = instantiate_template(family, tmp_path / "proj", archetype=Archetype.PLATFORMER)
    scene = workspace.path("src/scenes/GameScene.js")
    scene.write_text(
        scene.read_text().replace(
            "  setupPlayer() {}",
            '  setupPlayer() {\n    this.img = this.engine.asset("missing_key");\n  }',
        )
    )
    fix = json.dumps(
        {
            "edits": [
                {
                    "file": "src/scenes/GameScene.js",
                    "find": 'this.engine.asset("missing_key")',
                    "replace": "null",
                }
            ],
            "cause": "referenced asset key absent from pack",
        }
    )
    protocol = DebugProtocol()
    outcome = verification_loop(workspace, protocol, 3, gw(fix), RunConfig())
    assert outcome.status == "success"
    assert outcome.protocol_appended == 1


# --- full generation runs -----------------------------------------------------------------------

PLATFORMER_PROMPT = (
    "A platformer where the hero leaps between ledges, falls without ground "
    "support, and collects coins; include a double jump."
)


def run_gdd() -> str:
    return render_gdd(
        Gdd(
            title="Leap Trial",
            archetype=Archetype.PLATFORMER,
            assets=[GddAsset("coin", "image", "spinning gold coin")],
            core_mechanics="Run, jump, double-jump, collect coins.",
            level_content="One cavern screen with three ledges.",
            config_params={"jumpVelocity": 420, "coinValue": 10},
            roadmap=[
                RoadmapItem("src/scenes/GameScene.js", "place ledges in setupLevel"),
                RoadmapItem("src/scenes/GameScene.js", "spawn coins in setupCustomCollisions"),
            ],
            acceptance_notes="Hero reaches the top ledge; coins increment a counter.",
        )
    )


IMPLEMENT_EDITS = json.dumps(
    {
        "edits": [
            {
                "file": "src/scenes/GameScene.js",
                "find": "  setupCustomCollisions() {}",
                "replace": (
                    "  setupCustomCollisions() {\n"
                    '    this.coinImg = this.engine.asset("coin");\n'
                    '    this.coinValue = this.engine.value("coinValue", 10);\n'
                    "    this.entities.push({ key: \"coin\", x: 300, y: 200, w: 24, h: 24, color: \"#fd0\" });\n"
                    "  }"
                ),
            }
        ]
    }
)


def make_spec(tmp_path, skills_root, **config_kwargs) -> GameSpec:
    config = RunConfig(
        workspace_root=tmp_path / "out",
        skills_root=skills_root,
        **config_kwargs,
    )
    return GameSpec(prompt=PLATFORMER_PROMPT, title_hint="Leap Trial", run_config=config)


def test_run_generation_full_mock_path(skills_root, tmp_path):
    library = load_template_library(skills_root)
    spec = make_spec(tmp_path, skills_root)
    workspace = run_generation(spec, library, DebugProtocol(), gw(run_gdd(), IMPLEMENT_EDITS))

    assert workspace.failed is False
    assert workspace.final_phase == "Done"
    phases = [state.phase for state in workspace.phase_log]
    assert phases == list(PHASE_ORDER[:-1])  # six operational phases
    assert workspace.path("gdd.md").is_file()
    assert workspace.path("assets/coin.png").is_file()
    config = json.loads(workspace.path("gameConfig.json").read_text())
    assert config["jumpVelocity"] == {"value": 420}  # gdd overrode the default 350
    assert config["coinValue"] == {"value": 10}
    todos = json.loads((workspace.meta_dir / "todos.json").read_text())
    assert all(t["status"] == "completed" for t in todos["items"])
    assert 'this.engine.asset("coin")' in workspace.path("src/scenes/GameScene.js").read_text()


def test_run_generation_rejects_non_empty_workspace(skills_root, tmp_path):
    out = tmp_path / "out"
    out.mkdir()
    (out / "occupied.txt").write_text("x")
    library = load_template_library(skills_root)
    spec = make_spec(tmp_path, skills_root)
    with pytest.raises(WorkspaceNotEmpty):
        run_generation(spec, library, DebugProtocol(), gw())


def test_run_generation_scripted_build_failure_t0(skills_root, tmp_path):
    # the implementation phase plants an always-failing build; T=0 means no
    # repair attempts and a failed-but-persisted workspace
    implement = json.dumps(
        {
            "edits": [
                {"file": "package.json", "content": json.dumps({"scripts": {"build": "x"}})},
                {
                    "file": "always_fail.py",
                    "content": "print('Error: scripted permanent failure'); raise SystemExit(1)\n",
                },
            ]
        }
    )
    library = load_template_library(skills_root)
    spec = make_spec(
        tmp_path, skills_root, max_debug_iters=0, build_command="python3 always_fail.py"
    )
    workspace = run_generation(spec, library, DebugProtocol(), gw(run_gdd(), implement))
    assert workspace.failed is True
    assert "Verification" in workspace.failure_reason
    assert "0 repair" in workspace.failure_reason
    assert workspace.path(".opengame/phase_log.json").is_file()  # post-mortem persisted


def test_run_generation_bad_gdd_fails_in_design_phase(skills_root, tmp_path):
    library = load_template_library(skills_root)
    spec = make_spec(tmp_path, skills_root)
    workspace = run_generation(spec, library, DebugProtocol(), gw("not a gdd at all"))
    assert workspace.failed is True
    assert "GameDesign" in workspace.failure_reason
