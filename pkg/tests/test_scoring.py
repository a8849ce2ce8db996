"""Metric formulas against hand arithmetic and signal-level oracles."""

from __future__ import annotations

import json
import random

import numpy as np
import pytest

from opengame import imaging
from opengame.bench import BuildResult, CaptureSet, PageError, ConsoleEvent, RunValidity, TooFewFrames
from opengame.gateway import Gateway, JudgeRequest, RetryPolicy, ScriptedBackend
from opengame.scoring import (
    MetricScores,
    MissingVerdict,
    NoRequirements,
    Requirement,
    SeedResult,
    UnknownRequirement,
    Verdict,
    VerdictValue,
    aggregate_report,
    collect_verdicts,
    compile_requirements,
    frame_entropy,
    motion_score,
    score_build_health,
    score_intent_alignment,
    score_visual_usability,
    visual_heuristic,
)


def gw(*outcomes) -> Gateway:
    policy = RetryPolicy(attempts=3, backoffs=(0, 0, 0), timeout=1.0, sleep=lambda _: None)
    backend = ScriptedBackend(outcomes)
    return Gateway(retry=policy).register("chat", backend).register("vlm", backend)


def gray_png(array: np.ndarray) -> bytes:
    return imaging.encode_png(array)


def uniform_frame(value=128, size=32) -> bytes:
    return gray_png(np.full((size, size), value, dtype=np.uint8))


def half_half_frame(size=32) -> bytes:
    arr = np.zeros((size, size), dtype=np.uint8)
    arr[:, size // 2 :] = 255
    return gray_png(arr)


def noise_frame(seed=0, size=256) -> bytes:
    rng = np.random.default_rng(seed)
    return gray_png(rng.integers(0, 256, size=(size, size), dtype=np.uint8))


def captures_of(*frames: bytes) -> CaptureSet:
    capture_set = CaptureSet()
    for i, blob in enumerate(frames):
        capture_set.screenshots.append((float(i), blob))
    return capture_set


# --- frame entropy ----------------------------------------------------------------

def test_entropy_uniform_frame_is_zero():
    assert frame_entropy(uniform_frame()) == 0.0


def test_entropy_two_color_half_half_is_exactly_point125():
    assert frame_entropy(half_half_frame()) == pytest.approx(0.125, abs=0)


def test_entropy_of_uniform_noise_near_one():
    # oracle: iid uniform pixels fill all 256 bins nearly evenly
    assert frame_entropy(noise_frame()) == pytest.approx(1.0, abs=0.02)


def test_entropy_invariant_under_pixel_permutation():
    rng = np.random.default_rng(7)
    arr = rng.integers(0, 256, size=(32, 32), dtype=np.uint8)
    flat = arr.reshape(-1).copy()
    rng.shuffle(flat)
    assert frame_entropy(gray_png(arr)) == pytest.approx(
        frame_entropy(gray_png(flat.reshape(32, 32))), abs=1e-12
    )


# --- motion ----------------------------------------------------------------------------

def test_motion_identical_frames_zero():
    frame = noise_frame(1)
    assert motion_score(captures_of(frame, frame, frame)) == 0.0


def test_motion_black_to_white_saturates():
    black = gray_png(np.zeros((16, 16), dtype=np.uint8))
    white = gray_png(np.full((16, 16), 255, dtype=np.uint8))
    assert motion_score(captures_of(black, white)) == 1.0


def test_motion_one_percent_pixels_changed_is_half():
    # oracle: 100 of 10000 pixels flip 0 -> 255: mean diff = 0.01, /0.02 = 0.5
    base = np.zeros((100, 100), dtype=np.uint8)
    changed = base.copy()
    changed.reshape(-1)[:100] = 255
    score = motion_score(captures_of(gray_png(base), gray_png(changed)))
    assert score == pytest.approx(0.5, abs=0.05)


def test_motion_symmetric_under_reversal():
    frames = [noise_frame(i) for i in range(4)]
    forward = motion_score(captures_of(*frames))
    backward = motion_score(captures_of(*reversed(frames)))
    assert forward == pytest.approx(backward, abs=1e-12)


def test_motion_needs_two_frames():
    with pytest.raises(TooFewFrames):
        motion_score(captures_of(noise_frame()))


# --- build health -----------------------------------------------------------------------

def clean_captures() -> CaptureSet:
    return captures_of(noise_frame(0), noise_frame(1))


def test_bh_perfect_run_is_100():
    scores = score_build_health(BuildResult(required=True, status="success"), clean_captures())
    assert scores.bh == 100.0
    assert scores.subscores == {"build": 40.0, "load": 30.0, "render": 20.0, "console": 10.0}


def test_bh_two_console_errors_is_96():
    captures = clean_captures()
    captures.console_events = [
        ConsoleEvent("error", "x undefined", 1.0),
        ConsoleEvent("error", "y undefined", 2.0),
        ConsoleEvent("log", "fine", 3.0),
    ]
    scores = score_build_health(BuildResult(required=True, status="success"), captures)
    assert scores.bh == pytest.approx(96.0)
    assert scores.subscores["console"] == pytest.approx(6.0)


def test_bh_skipped_build_with_early_fatal_error():
    captures = clean_captures()
    captures.page_errors = [PageError(timestamp=3.0, text="boom")]
    scores = score_build_health(BuildResult(required=False, status="skipped"), captures)
    assert scores.subscores["build"] == 40.0
    assert scores.subscores["load"] == 0.0
    assert scores.subscores["render"] == 20.0
    # one page error also counts against the console budget
    assert scores.subscores["console"] == pytest.approx(8.0)
    assert scores.bh == pytest.approx(68.0)


def test_bh_subscores_sum_exactly():
    rng = random.Random(5)
    for _ in range(50):
        captures = clean_captures() if rng.random() < 0.7 else captures_of(uniform_frame())
        captures.console_events = [
            ConsoleEvent("error", "e", 1.0) for _ in range(rng.randrange(0, 8))
        ]
        if rng.random() < 0.3:
            captures.page_errors = [PageError(timestamp=rng.uniform(0, 10), text="p")]
        status = rng.choice(["success", "failure", "skipped"])
        build = BuildResult(required=status != "skipped", status=status)
        scores = score_build_health(build, captures)
        assert scores.bh == pytest.approx(sum(scores.subscores.values()))
        assert 0.0 <= scores.bh <= 100.0


# --- visual usability -------------------------------------------------------------------

def test_vu_blank_static_frames_with_zero_judge_is_zero():
    captures = captures_of(uniform_frame(), uniform_frame())
    result = score_visual_usability(captures, gw(json.dumps({"score": 0})))
    assert result.vu == 0.0


def test_vu_combination_formula():
    captures = clean_captures()
    heuristic = visual_heuristic(captures)
    result = score_visual_usability(captures, gw(json.dumps({"score": 70})))
    assert result.judge == 70.0
    assert result.vu == pytest.approx(0.5 * heuristic + 0.5 * 70.0)


def test_vu_falls_back_to_heuristic_when_judge_unavailable():
    from opengame.gateway import BackendError

    captures = clean_captures()
    result = score_visual_usability(captures, gw(BackendError("no vlm")))
    assert result.heuristic_only is True
    assert result.vu == pytest.approx(visual_heuristic(captures))


# --- intent alignment --------------------------------------------------------------------

def reqs3() -> list[Requirement]:
    return [
        Requirement("r1", "double jump works", "core_mechanic"),
        Requirement("r2", "coin counter", "secondary_mechanic"),
        Requirement("r3", "forest theme", "cosmetic"),
    ]


def verdicts_for(values) -> list[Verdict]:
    return [
        Verdict(f"r{i+1}", VerdictValue.parse(v)) for i, v in enumerate(values)
    ]


def test_ia_weighted_pass_rate_hand_case():
    # weights (3,2,1), verdicts (pass, partial, fail): 100*(3+1+0)/6 = 66.66..
    ia = score_intent_alignment(reqs3(), verdicts_for(["pass", "partial", "fail"]))
    assert ia == pytest.approx(100 * 4 / 6)
    assert round(ia, 1) == 66.7


def test_ia_all_pass_is_100():
    assert score_intent_alignment(reqs3(), verdicts_for(["pass"] * 3)) == 100.0


def test_ia_unknown_requirement():
    verdicts = verdicts_for(["pass", "pass", "pass"]) + [Verdict("r9", VerdictValue.PASS)]
    with pytest.raises(UnknownRequirement):
        score_intent_alignment(reqs3(), verdicts)


def test_ia_missing_verdict():
    with pytest.raises(MissingVerdict):
        score_intent_alignment(reqs3(), verdicts_for(["pass", "pass"])[:2])


def test_ia_duplicate_verdict_rejected():
    verdicts = verdicts_for(["pass", "pass", "pass"])
    verdicts.append(Verdict("r1", VerdictValue.FAIL))
    with pytest.raises(UnknownRequirement):
        score_intent_alignment(reqs3(), verdicts)


def test_ia_scale_invariant_in_weights():
    # scaling all weights by k leaves ia unchanged; simulate by triplicating
    # every requirement's category weight via equal category mixes
    rng = random.Random(11)
    for _ in range(100):
        n = rng.randrange(1, 8)
        reqs = [
            Requirement(f"r{i}", f"req {i}", rng.choice(list(("core_mechanic", "secondary_mechanic", "cosmetic"))))
            for i in range(n)
        ]
        values = [rng.choice(list(VerdictValue)) for _ in range(n)]
        verdicts = [Verdict(r.id, v) for r, v in zip(reqs, values)]
        ia = score_intent_alignment(reqs, verdicts)
        manual = 100 * sum(r.weight * v.value for r, v in zip(reqs, values)) / sum(
            r.weight for r in reqs
        )
        assert ia == pytest.approx(manual)
        assert 0.0 <= ia <= 100.0


# --- requirement compilation ----------------------------------------------------------

def test_compile_requirements_extracts_and_dedups():
    payload = json.dumps(
        {
            "requirements": [
                {"text": "Double-jump works", "category": "core_mechanic"},
                {"text": "double-jump works", "category": "core_mechanic"},
                {"text": "Coin counter visible", "category": "secondary_mechanic"},
            ]
        }
    )
    reqs = compile_requirements("platformer with double-jump and coin counter", gw(payload))
    assert len(reqs) == 2
    assert reqs[0].category == "core_mechanic"
    assert len({r.id for r in reqs}) == 2


def test_compile_requirements_requires_core():
    payload = json.dumps(
        {"requirements": [{"text": "nice colors", "category": "cosmetic"}]}
    )
    with pytest.raises(NoRequirements):
        compile_requirements("something", gw(payload))


def test_compile_requirements_empty_prompt():
    with pytest.raises(ValueError):
        compile_requirements("  ", gw("{}"))


def test_collect_verdicts_round_trip():
    reqs = reqs3()
    payload = json.dumps(
        {
            "verdicts": [
                {"requirement_id": "r1", "value": "pass", "evidence": "seen"},
                {"requirement_id": "r2", "value": "partial", "evidence": "maybe"},
                {"requirement_id": "r3", "value": "fail", "evidence": "absent"},
            ]
        }
    )
    verdicts = collect_verdicts(reqs, clean_captures(), gw(payload))
    assert score_intent_alignment(reqs, verdicts) == pytest.approx(100 * 4 / 6)


# --- aggregation -----------------------------------------------------------------------

def seed_result(seed, bh=80.0, valid=True) -> SeedResult:
    validity = RunValidity(verdict="valid" if valid else "pipeline_error",
                           reasons=[] if valid else ["build failed"])
    scores = MetricScores(bh=bh, vu=50.0, ia=60.0) if valid else None
    return SeedResult(seed=seed, validity=validity, scores=scores)


def test_aggregate_mean_over_valid_seeds():
    report = aggregate_report("t", [seed_result(1, 70), seed_result(2, 80), seed_result(3, 90)])
    assert report.mean.bh == pytest.approx(80.0)
    assert report.pipeline_error_count == 0


def test_aggregate_excludes_pipeline_errors_from_mean():
    report = aggregate_report(
        "t", [seed_result(1, 70), seed_result(2, 90), seed_result(3, valid=False)]
    )
    assert report.mean.bh == pytest.approx(80.0)
    assert report.pipeline_error_count == 1


def test_aggregate_no_valid_runs():
    report = aggregate_report("t", [seed_result(s, valid=False) for s in (1, 2, 3)])
    assert report.mean is None
    assert report.pipeline_error_count == 3


def test_report_json_schema(tmp_path):
    report = aggregate_report("task-9", [seed_result(1), seed_result(2, valid=False)])
    path = tmp_path / "report.json"
    report.write(path)
    data = json.loads(path.read_text())
    assert data["task_id"] == "task-9"
    assert len(data["seeds"]) == 2
    assert data["pipeline_errors"] == 1
    assert set(data["mean"]) == {"bh", "vu", "ia"}
    assert data["seeds"][0]["validity"]["verdict"] == "valid"


def test_metric_scores_reject_out_of_range():
    with pytest.raises(ValueError):
        MetricScores(bh=101.0, vu=0.0, ia=0.0)
    with pytest.raises(ValueError):
        MetricScores(bh=0.0, vu=-1.0, ia=0.0)
