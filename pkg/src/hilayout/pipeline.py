"""End-to-end orchestration: prompt -> parse -> repair -> infer -> solve -> assets.

Shared by the CLI and the HTTP server so both run the identical pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from . import catalog as catalog_mod
from . import hierarchy_io, llm_client
from .hierarchy_io import ValidationReport
from .layout_solver import SolverConfig, TargetPlacement, solve_edit, solve_scene
from .llm_client import ProviderConfig
from .placement_net import PredictedPlacement, infer, load_checkpoint, rule_placements
from .scene_model import SceneHierarchy, SceneLayout


@dataclass
class PipelineOptions:
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    seed: int = 0
    checkpoint_path: str | None = None  # None -> rule fallback
    solver: SolverConfig = field(default_factory=SolverConfig)
    categories: tuple[str, ...] | None = llm_client.DEFAULT_CATEGORIES
    attach_assets: bool = True


@dataclass
class PipelineResult:
    layout: SceneLayout
    source: SceneHierarchy            # as generated, before feasibility repair
    repaired: SceneHierarchy
    parse_report: ValidationReport
    repair_report: ValidationReport
    prompt_text: str = ""


def placements_to_targets(
    predictions: dict[tuple[str, str], PredictedPlacement],
) -> dict[str, TargetPlacement]:
    return {
        src: TargetPlacement(
            position=pred.rel_position,
            theta=pred.theta_argmax,
            aligned=pred.aligned_prob > 0.5,
        )
        for (src, _dst), pred in predictions.items()
    }


def predict_placements(
    hierarchy: SceneHierarchy, options: PipelineOptions
) -> dict[str, TargetPlacement]:
    if options.checkpoint_path:
        params, config, _, _ = load_checkpoint(options.checkpoint_path)
        preds = infer(hierarchy, params, seed=options.seed, config=config)
    else:
        preds = rule_placements(hierarchy)
    return placements_to_targets(preds)


def attach_assets(layout: SceneLayout) -> SceneLayout:
    """Pick a catalog asset per object; layout sizes stay authoritative."""
    assets = catalog_mod.load_catalog()
    objects = dict(layout.hierarchy.objects)
    for oid, obj in objects.items():
        hit = catalog_mod.retrieve(obj.text, obj.size, assets)
        objects[oid] = replace(obj, asset=hit.asset.id)
    hierarchy = replace(layout.hierarchy, objects=objects)
    return replace(layout, hierarchy=hierarchy)


def synthesize(requirement: str, room_size: tuple[float, float], options: PipelineOptions) -> PipelineResult:
    prompt = llm_client.build_prompt(requirement, room_size, options.categories)
    doc = llm_client.generate_hierarchy(prompt, options.provider)
    source, parse_report = hierarchy_io.parse(doc)
    repaired, repair_report = hierarchy_io.feasibility_repair(source, seed=options.seed)
    targets = predict_placements(repaired, options)
    layout = solve_scene(repaired, targets, seed=options.seed, config=options.solver)
    if options.attach_assets:
        layout = attach_assets(layout)
    return PipelineResult(
        layout=layout,
        source=source,
        repaired=repaired,
        parse_report=parse_report,
        repair_report=repair_report,
        prompt_text=prompt.text,
    )


def solve_hierarchy(source: SceneHierarchy, options: PipelineOptions) -> PipelineResult:
    """Pipeline tail for an already-obtained hierarchy (no provider step)."""
    repaired, repair_report = hierarchy_io.feasibility_repair(source, seed=options.seed)
    targets = predict_placements(repaired, options)
    layout = solve_scene(repaired, targets, seed=options.seed, config=options.solver)
    if options.attach_assets:
        layout = attach_assets(layout)
    return PipelineResult(
        layout=layout,
        source=source,
        repaired=repaired,
        parse_report=ValidationReport(),
        repair_report=repair_report,
    )


def edit_scene(previous: SceneLayout, instruction: str, options: PipelineOptions) -> PipelineResult:
    current_doc = hierarchy_io.serialize(previous).text
    prompt = llm_client.build_edit_prompt(current_doc, instruction)
    doc = llm_client.generate_hierarchy(prompt, options.provider)
    source, parse_report = hierarchy_io.parse(doc)
    repaired, repair_report = hierarchy_io.feasibility_repair(source, seed=options.seed)
    targets = predict_placements(repaired, options)
    layout = solve_edit(previous, repaired, targets, seed=options.seed, config=options.solver)
    if options.attach_assets:
        layout = attach_assets(layout)
    return PipelineResult(
        layout=layout,
        source=source,
        repaired=repaired,
        parse_report=parse_report,
        repair_report=repair_report,
        prompt_text=prompt.text,
    )


def pose_deltas(before: SceneLayout, after: SceneLayout) -> dict[str, dict]:
    """Per-object movement summary between two layouts."""
    deltas: dict[str, dict] = {}
    for oid in sorted(set(before.object_poses) | set(after.object_poses)):
        old = before.object_poses.get(oid)
        new = after.object_poses.get(oid)
        if old is None:
            deltas[oid] = {"status": "added"}
        elif new is None:
            deltas[oid] = {"status": "removed"}
        else:
            move = max(abs(new.center[0] - old.center[0]), abs(new.center[1] - old.center[1]))
            deltas[oid] = {
                "status": "moved" if (move > 1e-9 or new.theta != old.theta) else "unchanged",
                "move": move,
                "dtheta": (new.theta - old.theta) % 360,
            }
    return deltas
