from src.synth.benchmark import EvalReport, evaluate_scene, run_benchmark, summarize_reports, write_report
from src.synth.generator import (
    GroundTruthArticulation,
    SceneBundle,
    generate_scene,
    load_scene_bundle,
    motion_schedule,
    render_articulation,
    render_sequence,
    sample_articulation,
    save_scene_bundle,
)
from src.synth.scenes import SCENE_MAP, BaseSceneTemplate, get_template

__all__ = [
    "EvalReport",
    "evaluate_scene",
    "run_benchmark",
    "summarize_reports",
    "write_report",
    "GroundTruthArticulation",
    "SceneBundle",
    "generate_scene",
    "load_scene_bundle",
    "motion_schedule",
    "render_articulation",
    "render_sequence",
    "sample_articulation",
    "save_scene_bundle",
    "SCENE_MAP",
    "BaseSceneTemplate",
    "get_template",
]
