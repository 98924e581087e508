"""Prompt construction and hierarchy generation via pluggable providers.

The prompt has three parts: role and task (with the hierarchy definition),
format and constraints (grammar, area types, anchors, relation
vocabulary), and a fixed demonstration scene plus the actual request.
Providers are a narrow text-in/text-out interface; the fixture and replay
providers make the whole pipeline runnable offline, and a recording
wrapper captures transcripts for later replay.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import urllib.error
import urllib.request
from dataclasses import dataclass, field, replace

from . import hierarchy_io, relations
from .hierarchy_io import RawDocument

DEFAULT_MAX_RETRIES = 3

DEFAULT_CATEGORIES = (
    "bed", "nightstand", "wardrobe", "dresser", "bench", "desk", "chair",
    "lamp", "sofa", "table", "tv stand", "side table", "bookshelf", "rug",
    "plant", "cabinet", "sideboard", "ottoman", "mirror",
)

DEFAULT_AREA_TYPES = (
    "sleeping area", "study corner", "storage corner", "seating area",
    "dining area", "reading nook", "entry area",
)

DEFAULT_ANCHORS = ("bed", "desk", "wardrobe", "sofa", "table")


class ProviderError(Exception):
    pass


class ExhaustedRetries(Exception):
    def __init__(self, attempts: int, last_error: Exception):
        self.attempts = attempts
        self.last_error = last_error
        super().__init__(f"no valid hierarchy after {attempts} attempts: {last_error}")


class FixtureMissing(ProviderError):
    pass


@dataclass(frozen=True)
class PromptSpec:
    role_task: str
    format_constraints: str
    example_and_request: str
    category_constraint: tuple[str, ...] | None = None
    lookup_key: str = ""
    kind: str = "synth"  # synth | edit

    @property
    def text(self) -> str:
        return "\n\n".join([self.role_task, self.format_constraints, self.example_and_request])


@dataclass
class ProviderConfig:
    kind: str = "fixture"  # fixture | replay | remote-chat-api
    fixtures_dir: str | None = None
    transcript_path: str | None = None
    record_path: str | None = None
    endpoint: str | None = None
    api_key_env: str = "HILAYOUT_API_KEY"
    model: str = "gpt-4"
    temperature: float = 0.7
    max_retries: int = DEFAULT_MAX_RETRIES


_EXAMPLE_SCENE = """format: hilayout/1
scene:
  text: a tiny pantry nook
  size: 2.4 2.0
area entry_area_0:
  text: entry area with a shoe bench
  size: 1.6 1.2
  anchor: bench_0
  object bench_0:
    text: slatted shoe bench
    category: bench
    size: 0.9 0.35 0.45
  object rack_0:
    text: narrow coat rack
    category: rack
    size: 0.35 0.35 1.7
relation:
  from: rack_0
  to: bench_0
  text: next to"""


def build_prompt(
    requirement: str,
    room_size: tuple[float, float],
    categories: tuple[str, ...] | None = DEFAULT_CATEGORIES,
) -> PromptSpec:
    """Assemble the three-part synthesis prompt; deterministic per inputs."""
    if not requirement.strip():
        raise ValueError("requirement must be non-empty")
    if room_size[0] <= 0 or room_size[1] <= 0:
        raise ValueError("room size must be positive")

    role_task = (
        "You are an interior layout planner. Given a room requirement, you "
        "describe the room as a three-level hierarchy: the scene (a "
        "rectangular floor), functional areas (rectangular zones, each with "
        "exactly one anchor object), and objects (the furniture inside each "
        "area). You choose the functional areas, their sizes, the objects "
        "with realistic metric sizes, and coarse spatial relations between "
        "each area's anchor object and its other members. You do not output "
        "absolute coordinates."
    )

    lines = [
        "Output only a document in this exact format (no prose, no code fences):",
        "- first line: format: hilayout/1",
        "- a scene block with text and size (width depth in meters)",
        "- one 'area <id>:' block per functional area with text, size,",
        "  anchor (an object id), and nested 'object <id>:' blocks carrying",
        "  text, category, and size (width depth height in meters)",
        "- optional 'relation:' blocks with from, to (the area's anchor),",
        "  and text drawn from the relation vocabulary",
        f"Area types to choose from: {', '.join(DEFAULT_AREA_TYPES)}.",
        f"Anchor objects must be one of: {', '.join(DEFAULT_ANCHORS)}.",
        "Relation vocabulary (use verbatim): " + ", ".join(relations.VOCABULARY) + ".",
        "Keep the summed area footprints under 85% of the floor area.",
    ]
    if categories is not None:
        lines.append("Allowed object categories: " + ", ".join(categories) + ".")
    format_constraints = "\n".join(lines)

    example_and_request = (
        "Example of the output format (unrelated to the request):\n"
        + _EXAMPLE_SCENE
        + "\n\nNow generate the hierarchy for this request:\n"
        + f"requirement: {requirement.strip()}\n"
        + f"room size: {room_size[0]} x {room_size[1]} meters"
    )

    return PromptSpec(
        role_task=role_task,
        format_constraints=format_constraints,
        example_and_request=example_and_request,
        category_constraint=tuple(categories) if categories is not None else None,
        lookup_key=requirement.strip(),
        kind="synth",
    )


def build_edit_prompt(current_scene_doc: str, instruction: str) -> PromptSpec:
    """Prompt for language-guided editing: current state plus instruction."""
    base = build_prompt(instruction, (1.0, 1.0))  # reuse role/format parts
    example_and_request = (
        "Current scene document:\n"
        + current_scene_doc.rstrip()
        + "\n\nApply this edit instruction and output the full updated "
        + "hierarchy document (same format, keep unchanged objects "
        + "identical):\n"
        + f"instruction: {instruction.strip()}"
    )
    return PromptSpec(
        role_task=base.role_task,
        format_constraints=base.format_constraints,
        example_and_request=example_and_request,
        category_constraint=base.category_constraint,
        lookup_key=instruction.strip(),
        kind="edit",
    )


# ---------------------------------------------------------------------------
# Providers
# ---------------------------------------------------------------------------


def _slug(text: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", text.strip().lower()).strip("_")


class FixtureProvider:
    """Offline provider: documents looked up by requirement/instruction."""

    def __init__(self, fixtures_dir):
        self.root = str(fixtures_dir)
        if not os.path.isdir(self.root):
            raise FixtureMissing(f"fixtures directory not found: {self.root}")
        self.index: list[tuple[str, str]] = []
        index_path = os.path.join(self.root, "index.txt")
        if os.path.isfile(index_path):
            with open(index_path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line or line.startswith("#") or "::" not in line:
                        continue
                    key, _, rel_path = line.partition("::")
                    self.index.append((_slug(key), rel_path.strip()))

    def generate(self, prompt_text: str, spec: PromptSpec) -> str:
        subdir = "edits" if spec.kind == "edit" else "scenes"
        key = _slug(spec.lookup_key)
        direct = os.path.join(self.root, subdir, f"{key}.hi")
        if os.path.isfile(direct):
            with open(direct, encoding="utf-8") as fh:
                return fh.read()
        for entry_key, rel_path in self.index:
            if entry_key == key or entry_key in key:
                full = os.path.join(self.root, rel_path)
                if os.path.isfile(full):
                    with open(full, encoding="utf-8") as fh:
                        return fh.read()
        raise FixtureMissing(f"no fixture for {spec.kind} request {spec.lookup_key!r}")


def _prompt_hash(prompt_text: str) -> str:
    return hashlib.sha256(prompt_text.encode("utf-8")).hexdigest()


class ReplayProvider:
    """Returns recorded responses keyed by the exact prompt hash."""

    def __init__(self, transcript_path):
        self.entries = read_transcript(transcript_path)

    def generate(self, prompt_text: str, spec: PromptSpec) -> str:
        key = _prompt_hash(prompt_text)
        if key not in self.entries:
            raise ProviderError(f"no recorded response for prompt hash {key[:16]}")
        return self.entries[key]


class RemoteChatProvider:
    """Minimal chat-completions client; credentials via environment only."""

    def __init__(self, config: ProviderConfig):
        if not config.endpoint:
            raise ProviderError("remote provider requires an endpoint")
        self.endpoint = config.endpoint
        self.model = config.model
        self.temperature = config.temperature
        self.api_key = os.environ.get(config.api_key_env, "")

    def generate(self, prompt_text: str, spec: PromptSpec) -> str:
        payload = json.dumps({
            "model": self.model,
            "temperature": self.temperature,
            "messages": [{"role": "user", "content": prompt_text}],
        }).encode("utf-8")
        request = urllib.request.Request(
            self.endpoint,
            data=payload,
            headers={
                "Content-Type": "application/json",
                **({"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}),
            },
        )
        try:
            with urllib.request.urlopen(request, timeout=60) as response:
                body = json.loads(response.read().decode("utf-8"))
        except (urllib.error.URLError, OSError, json.JSONDecodeError, TimeoutError) as exc:
            raise ProviderError(f"remote provider failed: {exc}") from exc
        try:
            return body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"unexpected response shape: {exc}") from exc


class RecordingProvider:
    """Wraps a provider and appends request/response pairs to a transcript."""

    def __init__(self, inner, record_path):
        self.inner = inner
        self.record_path = record_path

    def generate(self, prompt_text: str, spec: PromptSpec) -> str:
        response = self.inner.generate(prompt_text, spec)
        append_transcript(self.record_path, prompt_text, response)
        return response


def read_transcript(path) -> dict[str, str]:
    entries: dict[str, str] = {}
    if not os.path.isfile(path):
        raise ProviderError(f"transcript not found: {path}")
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    for block in text.split("=== request ")[1:]:
        header, _, rest = block.partition("\n")
        body, _, _ = rest.partition("=== end")
        marker = "=== response\n"
        if marker not in body:
            raise ProviderError(f"malformed transcript entry {header[:16]}")
        response = body.split(marker, 1)[1]
        entries[header.strip()] = response.rstrip("\n") + "\n"
    return entries


def append_transcript(path, prompt_text: str, response: str) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(f"=== request {_prompt_hash(prompt_text)}\n")
        fh.write("=== response\n")
        fh.write(response.rstrip("\n") + "\n")
        fh.write("=== end\n")


def make_provider(config: ProviderConfig):
    if config.kind == "fixture":
        provider = FixtureProvider(config.fixtures_dir or default_fixtures_dir())
    elif config.kind == "replay":
        if not config.transcript_path:
            raise ProviderError("replay provider requires a transcript path")
        provider = ReplayProvider(config.transcript_path)
    elif config.kind == "remote-chat-api":
        provider = RemoteChatProvider(config)
    else:
        raise ProviderError(f"unknown provider kind {config.kind!r}")
    if config.record_path:
        provider = RecordingProvider(provider, config.record_path)
    return provider


def default_fixtures_dir() -> str:
    import importlib.resources

    return str(importlib.resources.files("hilayout") / "fixtures")


# ---------------------------------------------------------------------------
# Generation with validation-feedback retries
# ---------------------------------------------------------------------------


def generate_hierarchy(prompt: PromptSpec, provider_or_config) -> RawDocument:
    """Obtain a document that parses into a valid hierarchy.

    On validation failure the retry prompt appends the errors to the base
    prompt (the base is never mutated); after the retry budget the last
    error is raised as ExhaustedRetries.
    """
    if isinstance(provider_or_config, ProviderConfig):
        provider = make_provider(provider_or_config)
        retries = provider_or_config.max_retries
    else:
        provider = provider_or_config
        retries = DEFAULT_MAX_RETRIES

    base_text = prompt.text
    attempt_text = base_text
    last_error: Exception | None = None
    for _ in range(max(1, retries)):
        raw = provider.generate(attempt_text, prompt)
        try:
            hierarchy_io.parse(RawDocument(raw))
            return RawDocument(raw)
        except hierarchy_io.HierarchyIoError as exc:
            last_error = exc
            issues = exc.report.errors if exc.report else []
            feedback = "\n".join(f"- {code} at {path}: {msg}" for code, path, msg in issues[:8])
            attempt_text = (
                base_text
                + "\n\nYour previous output failed validation with these errors:\n"
                + (feedback or f"- {exc}")
                + "\nOutput the corrected document only."
            )
    raise ExhaustedRetries(max(1, retries), last_error)
