"""Shared test helpers: fixture paths and a random valid-hierarchy generator."""

import importlib.resources

import numpy as np
import pytest

from hilayout.scene_model import (
    FunctionalArea,
    RelationEdge,
    SceneHierarchy,
    SceneObject,
    SceneRoot,
)

WORDS = ("oak", "blue", "round", "soft", "tall", "modern", "small", "wide")
CATEGORIES = ("bed", "nightstand", "table", "chair", "sofa", "lamp", "desk", "wardrobe")
PHRASES = ("left of", "right of", "in front of", "behind", "next to")


def fixtures_root():
    return importlib.resources.files("hilayout") / "fixtures"


@pytest.fixture
def bedroom_small_text():
    return (fixtures_root() / "scenes" / "bedroom_small.hi").read_text(encoding="utf-8")


def make_random_hierarchy(rng: np.random.Generator, with_placements: bool = False) -> SceneHierarchy:
    """A structurally valid random hierarchy for round-trip property tests."""
    n_areas = int(rng.integers(1, 4))
    areas = []
    objects = {}
    relations = []
    counter = 0
    for ai in range(n_areas):
        n_objs = int(rng.integers(1, 5))
        member_ids = []
        for _ in range(n_objs):
            oid = f"{CATEGORIES[int(rng.integers(len(CATEGORIES)))]}_{counter}"
            counter += 1
            objects[oid] = SceneObject(
                id=oid,
                text=f"{WORDS[int(rng.integers(len(WORDS)))]} {oid.split('_')[0]}",
                category=oid.split("_")[0],
                size=(
                    round(float(rng.uniform(0.2, 1.8)), 3),
                    round(float(rng.uniform(0.2, 1.8)), 3),
                    round(float(rng.uniform(0.2, 2.0)), 3),
                ),
                asset=None if rng.random() < 0.7 else f"asset_{counter}",
            )
            member_ids.append(oid)
        anchor = member_ids[0]
        for oid in member_ids[1:]:
            has_text = rng.random() < 0.7
            relations.append(
                RelationEdge(
                    from_id=oid,
                    to_id=anchor,
                    text=PHRASES[int(rng.integers(len(PHRASES)))] if has_text else None,
                    rel_position=(
                        (round(float(rng.uniform(-2, 2)), 4), round(float(rng.uniform(-2, 2)), 4))
                        if with_placements or rng.random() < 0.3
                        else None
                    ),
                    rel_theta=int(rng.choice([0, 90, 180, 270])) if with_placements else None,
                    aligned=bool(rng.random() < 0.5) if with_placements else None,
                )
            )
        areas.append(
            FunctionalArea(
                id=f"area_{ai}",
                text=f"functional area {ai}",
                size=(round(float(rng.uniform(1.5, 4.0)), 3), round(float(rng.uniform(1.5, 4.0)), 3)),
                anchor_object=anchor,
                members=tuple(member_ids),
            )
        )
    return SceneHierarchy(
        root=SceneRoot(text="a randomly generated room", size=(12.0, 12.0)),
        areas=tuple(areas),
        objects=objects,
        relations=tuple(relations),
    )
