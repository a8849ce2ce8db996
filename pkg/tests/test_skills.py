"""Template library, debug protocol, and pre-execution validators."""

from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opengame.skills import (
    ARCHETYPE_TO_FAMILY,
    Archetype,
    ConflictingPath,
    CorruptTemplate,
    DebugEntry,
    DebugProtocol,
    DestNotEmpty,
    FindingKind,
    FixRecipe,
    FragmentCandidate,
    SkillStore,
    UnstableCandidate,
    append_entry,
    extract_fragments,
    instantiate_template,
    load_template_library,
    lookup_fix,
    normalize_error_signature,
    promote_fragment,
    run_pre_execution_validations,
    select_template,
    signature_jaccard,
)
from opengame.workspace import RunOutcome


# --- signature normalization -------------------------------------------------

def test_normalization_of_stack_trace_message():
    raw = (
        "Error: Cannot read properties of undefined (reading 'setVelocity') "
        "at /home/u/p/src/Player.ts:42:7"
    )
    expected = (
        "error: cannot read properties of undefined (reading 'setvelocity') "
        "at player.ts"
    )
    assert normalize_error_signature(raw) == expected


def test_normalization_is_path_invariant():
    a = "TypeError: boom at /home/alice/dev/game/src/Main.ts:3:1"
    b = "TypeError: boom at /var/ci/checkout/src/Main.ts:88:12"
    assert normalize_error_signature(a) == normalize_error_signature(b)


def test_normalization_strips_hex_addresses():
    sig = normalize_error_signature("segfault near 0x7ffdd2a0 in module")
    assert "0x" not in sig
    assert sig == "segfault near in module"


def test_normalization_strips_memory_sizes():
    sig = normalize_error_signature("allocation of 512 MB failed")
    assert sig == "allocation of failed"


@settings(max_examples=300, deadline=None)
@given(st.text(min_size=1).filter(lambda s: s.strip()))
def test_normalization_idempotent(raw):
    once = normalize_error_signature(raw)
    assert normalize_error_signature(once) == once if once.strip() else True


def test_normalization_idempotent_on_messy_corpus():
    corpus = [
        "Error at C:\\Users\\dev\\proj\\src\\a.ts:1:2 using 64 kb",
        "  lots   of\n whitespace  0xdeadbeef  ",
        "a:1b /x/y/z.js:9 ::: 12:30:45",
        "http://example.com/static/app.js:10:4 failed",
    ]
    for raw in corpus:
        once = normalize_error_signature(raw)
        assert normalize_error_signature(once) == once


# --- lookup ------------------------------------------------------------------

COMMON = [f"tok{i}" for i in range(13)]


def protocol_with(*signatures: str) -> DebugProtocol:
    protocol = DebugProtocol()
    for sig in signatures:
        append_entry(
            protocol,
            DebugEntry(signature=sig, cause="c", fix=FixRecipe("src/**", "fix it")),
        )
    return protocol


def test_lookup_exact_match():
    protocol = protocol_with("error: missing asset key at player.js")
    entry = lookup_fix("error: missing asset key at player.js", protocol)
    assert entry is not None
    assert entry.signature == "error: missing asset key at player.js"


def test_lookup_fuzzy_above_threshold():
    # 13 shared tokens, 2 + 3 unique -> Jaccard 13/18 = 0.722
    stored = " ".join(COMMON + ["storedA", "storedB"])
    query = " ".join(COMMON + ["queryA", "queryB", "queryC"])
    assert signature_jaccard(stored, query) == pytest.approx(13 / 18)
    protocol = protocol_with(stored)
    assert lookup_fix(query, protocol) is not None


def test_lookup_unrelated_returns_none():
    # 1 shared token of 10 union -> Jaccard 0.1
    stored = "alpha beta gamma delta epsilon"
    query = "alpha one two three four five"
    assert signature_jaccard(stored, query) == pytest.approx(0.1)
    protocol = protocol_with(stored)
    assert lookup_fix(query, protocol) is None


def test_lookup_prefers_exact_over_fuzzy():
    near = " ".join(COMMON + ["x"])
    exact = " ".join(COMMON)
    protocol = protocol_with(near, exact)
    found = lookup_fix(exact, protocol)
    assert found is not None and found.signature == exact


# --- protocol append ------------------------------------------------------------

def entry(sig: str) -> DebugEntry:
    return DebugEntry(signature=sig, cause="cause", fix=FixRecipe("src/**", "desc"))


def test_append_novel_entry_grows_protocol():
    protocol = DebugProtocol()
    version = protocol.version
    append_entry(protocol, entry("sig-a"))
    assert len(protocol.entries) == 1
    assert protocol.version == version + 1


def test_append_existing_signature_bumps_verified_count():
    protocol = protocol_with("sig-a")
    version = protocol.version
    append_entry(protocol, entry("sig-a"))
    assert len(protocol.entries) == 1
    assert protocol.entries[0].verified_count == 2
    assert protocol.version == version + 1


def test_append_is_idempotent_on_size():
    protocol = DebugProtocol()
    append_entry(protocol, entry("novel"))
    append_entry(protocol, entry("novel"))
    assert len(protocol.entries) == 1


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sampled_from(["a", "b", "c", "d", "e"]), min_size=1, max_size=30))
def test_protocol_version_monotone_and_signatures_unique(signatures):
    protocol = DebugProtocol()
    last_version = protocol.version
    for sig in signatures:
        append_entry(protocol, entry(sig))
        assert protocol.version > last_version
        last_version = protocol.version
        names = [e.signature for e in protocol.entries]
        assert len(names) == len(set(names))
    assert len(protocol.entries) == len(set(signatures))


def test_entry_requires_verified_count():
    with pytest.raises(ValueError):
        DebugEntry(signature="s", cause="c", fix=FixRecipe("g", "d"), verified_count=0)


# --- template selection and instantiation ----------------------------------------

def test_select_template_mapping(skills_root):
    library = load_template_library(skills_root)
    assert select_template(Archetype.PLATFORMER, library).family_id == "gravity_side_view"
    assert select_template(Archetype.GRID_LOGIC, library).family_id == "discrete_grid_logic"
    assert select_template(Archetype.TOWER_DEFENSE, library).family_id == "path_and_wave"
    for archetype, family_id in ARCHETYPE_TO_FAMILY.items():
        assert select_template(archetype, library).family_id == family_id


def test_select_template_total_and_meta_fallback(skills_root, tmp_path):
    import shutil

    fresh = tmp_path / "skills" / "templates"
    fresh.parent.mkdir()
    fresh.mkdir()
    shutil.copytree(skills_root / "templates" / "meta", fresh / "meta")
    library = load_template_library(tmp_path / "skills")
    for archetype in Archetype:
        assert select_template(archetype, library).family_id == "meta"
    assert select_template(None, library).family_id == "meta"


def test_instantiate_copies_tree_with_hooks(skills_root, tmp_path):
    library = load_template_library(skills_root)
    family = select_template(Archetype.PLATFORMER, library)
    dest = tmp_path / "proj"
    workspace = instantiate_template(family, dest, archetype=Archetype.PLATFORMER)
    assert (dest / "index.html").is_file()
    assert (dest / "docs" / "implementation_guide.md").is_file()
    scene = (dest / "src" / "scenes" / "GameScene.js").read_text()
    assert "setupCustomCollisions(" in scene
    assert workspace.family_id == "gravity_side_view"
    assert workspace.archetype == "platformer"


def test_instantiate_rejects_non_empty_dest(skills_root, tmp_path):
    library = load_template_library(skills_root)
    dest = tmp_path / "proj"
    dest.mkdir()
    (dest / "already.txt").write_text("here")
    with pytest.raises(DestNotEmpty):
        instantiate_template(library.meta, dest)


def test_instantiate_detects_corrupt_manifest(skills_copy, tmp_path):
    (skills_copy / "templates" / "meta" / "src" / "engine.js").unlink()
    library = load_template_library(skills_copy)
    with pytest.raises(CorruptTemplate):
        instantiate_template(library.meta, tmp_path / "proj")


def test_every_shipped_family_instantiates_clean(skills_root, tmp_path):
    library = load_template_library(skills_root)
    for family in library.all_families():
        dest = tmp_path / family.family_id
        workspace = instantiate_template(family, dest)
        findings = run_pre_execution_validations(workspace)
        assert findings == [], f"{family.family_id}: {findings}"


# --- fragments ----------------------------------------------------------------

def fresh_project(skills_root, tmp_path, archetype=Archetype.PLATFORMER):
    library = load_template_library(skills_root)
    family = select_template(archetype, library)
    return library, instantiate_template(family, tmp_path / "proj", archetype=archetype)


def test_hook_only_changes_produce_no_fragments(skills_root, tmp_path):
    library, workspace = fresh_project(skills_root, tmp_path)
    scene_path = workspace.path("src/scenes/GameScene.js")
    source = scene_path.read_text()
    source = source.replace(
        "  setupPlayer() {}",
        "  setupPlayer() {\n    this.player.key = \"hero\";\n  }",
    )
    scene_path.write_text(source)
    candidates = extract_fragments(workspace, RunOutcome("r1", True), library)
    assert candidates == []


def test_new_helper_outside_hooks_is_a_candidate(skills_root, tmp_path):
    library, workspace = fresh_project(skills_root, tmp_path)
    helper = workspace.path("src/shake.js")
    helper.write_text("export function screenShake(engine) { /* wobble */ }\n")
    candidates = extract_fragments(workspace, RunOutcome("r1", True), library)
    assert len(candidates) == 1
    assert candidates[0].path == "src/shake.js"


def test_failed_run_yields_no_extraction(skills_root, tmp_path):
    library, workspace = fresh_project(skills_root, tmp_path)
    with pytest.raises(ValueError):
        extract_fragments(workspace, RunOutcome("r1", False), library)


def test_promotion_requires_two_runs(skills_copy):
    library = load_template_library(skills_copy)
    candidate = FragmentCandidate(
        candidate_id="gravity_side_view:src/shake.js:abc",
        family_id="gravity_side_view",
        path="src/shake.js",
        content_digest="abc",
        content="export function screenShake() {}\n",
        runs=["r1"],
    )
    with pytest.raises(UnstableCandidate):
        promote_fragment(candidate, library)


def test_promotion_merges_and_bumps_version(skills_copy):
    library = load_template_library(skills_copy)
    before = library.version
    candidate = FragmentCandidate(
        candidate_id="gravity_side_view:src/shake.js:abc",
        family_id="gravity_side_view",
        path="src/shake.js",
        content_digest="abc",
        content="export function screenShake() {}\n",
        runs=["r1", "r2"],
    )
    updated = promote_fragment(candidate, library)
    assert updated.version == before + 1
    family = updated.family("gravity_side_view")
    assert "src/shake.js" in family.file_tree
    assert (family.root / "src/shake.js").is_file()


def test_promotion_conflicting_path_rejected(skills_copy):
    library = load_template_library(skills_copy)
    candidate = FragmentCandidate(
        candidate_id="gravity_side_view:src/engine.js:zzz",
        family_id="gravity_side_view",
        path="src/engine.js",
        content_digest="zzz",
        content="totally different content",
        runs=["r1", "r2"],
    )
    with pytest.raises(ConflictingPath):
        promote_fragment(candidate, library)


# --- validators ------------------------------------------------------------------

def test_validators_clean_on_fresh_template(skills_root, tmp_path):
    _, workspace = fresh_project(skills_root, tmp_path)
    assert run_pre_execution_validations(workspace) == []


def seed_defect(workspace, kind: str) -> None:
    scene = workspace.path("src/scenes/GameScene.js")
    main = workspace.path("src/main.js")
    if kind == "asset":
        scene.write_text(
            scene.read_text().replace(
                "  setupPlayer() {}",
                '  setupPlayer() {\n    this.player.img = this.engine.asset("hero_idle");\n  }',
            )
        )
    elif kind == "config":
        scene.write_text(
            scene.read_text().replace(
                "  setupPlayer() {}",
                '  setupPlayer() {\n    this.spawnRate = this.engine.value("spawnRate");\n  }',
            )
        )
    elif kind == "scene":
        scene.write_text(
            scene.read_text().replace(
                "  setupPlayer() {}",
                '  setupPlayer() {\n    this.engine.goto("BossLevel");\n  }',
            )
        )
    elif kind == "init":
        text = main.read_text()
        text = text.replace("  const config = await loadConfig(\"gameConfig.json\");\n", "")
        text = text.replace(
            "  engine.start(\"Game\");",
            "  engine.start(\"Game\");\n  const config = await loadConfig(\"gameConfig.json\");",
        )
        main.write_text(text)
    else:
        raise AssertionError(kind)


@pytest.mark.parametrize(
    "defect,expected_kind",
    [
        ("asset", FindingKind.MISMATCHED_ASSET_KEY),
        ("config", FindingKind.MISSING_CONFIG_FIELD),
        ("scene", FindingKind.INVALID_SCENE_TRANSITION),
        ("init", FindingKind.INITIALIZATION_ORDER),
    ],
)
def test_validators_detect_each_seeded_defect(skills_root, tmp_path, defect, expected_kind):
    _, workspace = fresh_project(skills_root, tmp_path)
    seed_defect(workspace, defect)
    findings = run_pre_execution_validations(workspace)
    assert [f.kind for f in findings] == [expected_kind]


def test_validator_missing_pack_is_a_finding(skills_root, tmp_path):
    _, workspace = fresh_project(skills_root, tmp_path)
    workspace.path("assets/asset-pack.json").unlink()
    findings = run_pre_execution_validations(workspace)
    assert [f.kind for f in findings] == [FindingKind.MISMATCHED_ASSET_KEY]


# --- store persistence -------------------------------------------------------------

def test_store_roundtrip_and_atomic_append(skills_copy):
    store = SkillStore(skills_copy)
    protocol = store.load_protocol()
    assert protocol.entries == []
    store.append_entry(entry("persisted-sig"))
    reloaded = store.load_protocol()
    assert [e.signature for e in reloaded.entries] == ["persisted-sig"]
    assert reloaded.version == 2
    raw = json.loads((skills_copy / "debug_protocol.json").read_text())
    assert raw["entries"][0]["signature"] == "persisted-sig"


def test_store_records_and_promotes_fragments(skills_copy):
    store = SkillStore(skills_copy)
    candidate = FragmentCandidate(
        candidate_id="gravity_side_view:src/shake.js:abc",
        family_id="gravity_side_view",
        path="src/shake.js",
        content_digest="abc",
        content="export function screenShake() {}\n",
        runs=["r1"],
    )
    store.record_fragments([candidate])
    with pytest.raises(UnstableCandidate):
        store.promote(candidate.candidate_id)
    candidate.runs = ["r2"]
    store.record_fragments([candidate])
    library = store.promote(candidate.candidate_id)
    assert "src/shake.js" in library.family("gravity_side_view").file_tree
