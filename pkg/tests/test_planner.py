import pytest

from vosagent.errors import ParameterError
from vosagent.planner import (
    Plan,
    PlanStep,
    PlannerError,
    ReferenceType,
    RemotePlanner,
    RulePlanner,
    ScriptedPlanner,
    StepIntent,
    classify_reference,
    consolidate_query,
    make_plan,
    plan_from_dict,
    plan_to_dict,
)

NARRATIVE = """objects:
horse_0: adult brown horse, visible frames 0-99
horse_1: small white horse, visible frames 0-99
events:
frames 40-60: small white horse moves around [ev_0]"""


class TestClassify:
    def test_bare_category_is_category_level(self):
        assert classify_reference("the horses", NARRATIVE) is ReferenceType.CATEGORY_LEVEL

    def test_attributed_instance_is_whole_video(self):
        assert (
            classify_reference("brown horse standing still", NARRATIVE)
            is ReferenceType.WHOLE_VIDEO_INSTANCE
        )

    def test_narrated_motion_is_segment_specific(self):
        # The inflected query form still matches the narrated "moves around".
        assert (
            classify_reference("small horse moving around", NARRATIVE)
            is ReferenceType.SEGMENT_SPECIFIC_INSTANCE
        )

    def test_motion_not_in_narrative_falls_back_to_whole_video(self):
        assert (
            classify_reference("small horse jumps upward", NARRATIVE)
            is ReferenceType.WHOLE_VIDEO_INSTANCE
        )

    def test_empty_query_rejected(self):
        with pytest.raises(ParameterError):
            classify_reference("   ", NARRATIVE)

    def test_totality_over_generated_queries(self):
        from vosagent.scenario import GenerationParams, generate_scenario, synthesize_narrative

        kinds = ("category", "whole_video", "whole_video_audio", "segment_long", "segment_short")
        expected = {
            "category": ReferenceType.CATEGORY_LEVEL,
            "whole_video": ReferenceType.WHOLE_VIDEO_INSTANCE,
            "whole_video_audio": ReferenceType.WHOLE_VIDEO_INSTANCE,
            "segment_long": ReferenceType.SEGMENT_SPECIFIC_INSTANCE,
            "segment_short": ReferenceType.SEGMENT_SPECIFIC_INSTANCE,
        }
        for seed in range(25):
            scenario = generate_scenario(seed, GenerationParams(query_kinds=kinds))
            narrative = synthesize_narrative(scenario)
            for kind, query in zip(kinds, scenario.queries):
                got = classify_reference(query.expression, narrative)
                assert got is expected[kind], (seed, kind, query.expression)
                assert got.value == query.gt_reference_type


class TestConsolidate:
    def test_unique_object_gains_attributes(self):
        assert (
            consolidate_query("the horse standing still", NARRATIVE.replace("horse_1: small white horse", "horse_1: small white cat").replace("small white horse moves", "small white cat moves"))
            == "the adult brown horse standing still"
        )

    def test_ambiguous_query_unchanged(self):
        assert consolidate_query("the horse standing still", NARRATIVE) == "the horse standing still"

    def test_idempotent(self):
        once = consolidate_query("the brown horse", NARRATIVE)
        assert once == "the brown adult horse"
        assert consolidate_query(once, NARRATIVE) == once

    def test_never_drops_words(self):
        from vosagent.scenario import GenerationParams, generate_scenario, synthesize_narrative

        for seed in range(25):
            scenario = generate_scenario(
                seed, GenerationParams(query_kinds=("whole_video", "segment_short"))
            )
            narrative = synthesize_narrative(scenario)
            for query in scenario.queries:
                merged = consolidate_query(query.expression, narrative)
                original = query.expression.split()
                merged_words = merged.split()
                it = iter(merged_words)
                assert all(word in it for word in original), (query.expression, merged)

    def test_no_constraint_words_unchanged(self):
        assert consolidate_query("the object making sound", NARRATIVE) == "the object making sound"


class TestMakePlan:
    def test_segment_plan_has_four_steps(self):
        plan = make_plan(ReferenceType.SEGMENT_SPECIFIC_INSTANCE, "brown horse moves left", False)
        assert [s.intent for s in plan.steps] == [
            StepIntent.COARSE_SEARCH,
            StepIntent.FINE_SEARCH,
            StepIntent.IDENTIFY,
            StepIntent.SEGMENT,
        ]
        assert plan.category_hint == "horse"

    def test_category_plan_has_two_steps(self):
        plan = make_plan(ReferenceType.CATEGORY_LEVEL, "the horses", False)
        assert [s.intent for s in plan.steps] == [StepIntent.IDENTIFY, StepIntent.SEGMENT]

    def test_audio_prepends_step(self):
        plan = make_plan(ReferenceType.CATEGORY_LEVEL, "the horses", True)
        assert len(plan.steps) == 3
        assert plan.steps[0].intent is StepIntent.AUDIO
        assert plan.use_audio_first

    def test_fine_marked_contingent_in_rationale(self):
        plan = make_plan(ReferenceType.SEGMENT_SPECIFIC_INSTANCE, "horse moves left", False)
        fine = next(s for s in plan.steps if s.intent is StepIntent.FINE_SEARCH)
        assert "only if" in fine.rationale

    def test_plan_invariants_enforced(self):
        with pytest.raises(ParameterError):
            Plan(
                reference_type=ReferenceType.CATEGORY_LEVEL,
                consolidated_query="x",
                category_hint=None,
                use_audio_first=False,
                steps=(PlanStep(StepIntent.IDENTIFY, "r"),),
            )
        with pytest.raises(ParameterError):
            Plan(
                reference_type=ReferenceType.SEGMENT_SPECIFIC_INSTANCE,
                consolidated_query="x",
                category_hint=None,
                use_audio_first=False,
                steps=(
                    PlanStep(StepIntent.FINE_SEARCH, "r"),
                    PlanStep(StepIntent.COARSE_SEARCH, "r"),
                    PlanStep(StepIntent.SEGMENT, "r"),
                ),
            )

    def test_round_trip(self):
        plan = make_plan(ReferenceType.SEGMENT_SPECIFIC_INSTANCE, "brown horse moves left", True)
        assert plan_from_dict(plan_to_dict(plan)) == plan


class TestBackends:
    def test_rule_planner_end_to_end(self):
        plan = RulePlanner().plan_query("the brown horse", NARRATIVE, False)
        assert plan.reference_type is ReferenceType.WHOLE_VIDEO_INSTANCE
        assert plan.consolidated_query == "the brown adult horse"

    def test_scripted_planner(self):
        plan = make_plan(ReferenceType.CATEGORY_LEVEL, "the horses", False)
        backend = ScriptedPlanner({"the horses": plan})
        assert backend.plan_query("the horses", NARRATIVE, False) == plan
        with pytest.raises(PlannerError):
            backend.plan_query("other", NARRATIVE, False)

    def test_remote_planner_parses_reply(self):
        def fake_complete(prompt):
            assert "the horse" in prompt
            return (
                'Sure: {"reference_type": "WHOLE_VIDEO_INSTANCE",'
                ' "consolidated_query": "the adult brown horse"}'
            )

        plan = RemotePlanner(fake_complete).plan_query("the horse", NARRATIVE, False)
        assert plan.reference_type is ReferenceType.WHOLE_VIDEO_INSTANCE
        assert plan.consolidated_query == "the adult brown horse"

    def test_remote_planner_bad_reply(self):
        with pytest.raises(PlannerError):
            RemotePlanner(lambda p: "no json here").plan_query("the horse", NARRATIVE, False)
