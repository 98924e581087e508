"""Hierarchy-aware variational graph network.

Per functional area the objects form a complete directed graph; node
features combine text and size embeddings, edge features combine relation
text with (teacher-forced) relative placements.  Five rounds of message
passing encode the graph, satellite->anchor edge features parameterize a
Gaussian latent, and a mirrored five-round decoder conditioned on context
plus the latent emits position, orientation, and alignment heads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import text_embed
from ..scene_model import SceneHierarchy, THETAS
from . import tape
from .tape import Tensor

PLACEMENT_DIM = 7  # px, py, one-hot theta bin (4), aligned flag


class MissingGroundTruth(Exception):
    """Train-mode graph requested but an anchor edge lacks placements."""


class NonFiniteLoss(Exception):
    def __init__(self, breakdown: dict):
        self.breakdown = breakdown
        super().__init__(f"non-finite loss: {breakdown}")


@dataclass
class NetConfig:
    hidden: int = 128
    latent: int = 32
    rounds: int = 5
    theta_bins: int = 4
    learning_rate: float = 1e-4
    batch_size: int = 4
    epochs: int = 200
    beta_warmup_fraction: float = 0.1
    seed: int = 0

    @property
    def text_slice(self) -> int:
        return self.hidden // 2

    @property
    def embed_slice(self) -> int:
        return self.hidden - self.text_slice


@dataclass
class ContextualGraph:
    obj_ids: list[str]
    node_text: np.ndarray       # (N, text_slice)
    node_size: np.ndarray       # (N, 3)
    edge_src: np.ndarray        # (E,)
    edge_dst: np.ndarray        # (E,)
    edge_text: np.ndarray       # (E, text_slice)
    edge_placement: np.ndarray  # (E, PLACEMENT_DIM); zeros at inference
    has_text: np.ndarray        # (E,) bool
    supervised: np.ndarray      # (E,) bool: satellite -> anchor edges
    node_scene: np.ndarray      # (N,) scene index within the batch
    edge_scene: np.ndarray      # (E,) scene index within the batch
    num_scenes: int = 1
    targets: dict = field(default_factory=dict)  # supervised-edge ground truth arrays


@dataclass(frozen=True)
class LossBreakdown:
    l_kl: float
    l_ep: float
    l_etheta: float
    l_ed: float
    beta: float
    total: float

    def as_dict(self) -> dict:
        return {
            "l_kl": self.l_kl, "l_ep": self.l_ep, "l_etheta": self.l_etheta,
            "l_ed": self.l_ed, "beta": self.beta, "total": self.total,
        }


@dataclass(frozen=True)
class PredictedPlacement:
    rel_position: tuple[float, float]
    rel_theta: tuple[float, ...]  # distribution over the 4 orientation bins
    aligned_prob: float

    @property
    def theta_argmax(self) -> int:
        return THETAS[int(np.argmax(self.rel_theta))]


def _adapt_text(vec: np.ndarray, width: int) -> np.ndarray:
    if len(vec) >= width:
        return vec[:width]
    out = np.zeros(width)
    out[: len(vec)] = vec
    return out


def placement_vector(rel_position, rel_theta, aligned) -> np.ndarray:
    vec = np.zeros(PLACEMENT_DIM)
    vec[0], vec[1] = rel_position
    vec[2 + THETAS.index(rel_theta)] = 1.0
    vec[6] = 1.0 if aligned else 0.0
    return vec


def build_graph(
    hierarchies: SceneHierarchy | list[SceneHierarchy],
    mode: str = "infer",
    config: NetConfig | None = None,
    embedder: text_embed.Embedder | None = None,
) -> ContextualGraph:
    """Assemble the per-area complete digraph(s) for one or more scenes.

    In train mode every satellite->anchor edge must carry ground-truth
    relative placements; in infer mode the placement slice is all zeros.
    """
    if mode not in ("train", "infer"):
        raise ValueError(f"mode must be train or infer, got {mode!r}")
    config = config or NetConfig()
    emb = embedder.embed if embedder is not None else text_embed.embed
    scenes = hierarchies if isinstance(hierarchies, list) else [hierarchies]

    obj_ids: list[str] = []
    node_text, node_size, node_scene = [], [], []
    edge_src, edge_dst, edge_text, edge_place = [], [], [], []
    has_text, supervised, edge_scene = [], [], []
    tgt_pos, tgt_theta, tgt_aligned = [], [], []

    for scene_idx, h in enumerate(scenes):
        relation_by_pair = {(e.from_id, e.to_id): e for e in h.relations}
        index: dict[str, int] = {}
        for area in h.areas:
            for oid in area.members:
                obj = h.objects[oid]
                index[oid] = len(obj_ids)
                obj_ids.append(oid)
                node_text.append(_adapt_text(emb(obj.text), config.text_slice))
                node_size.append(np.asarray(obj.size, dtype=np.float64))
                node_scene.append(scene_idx)
            for a in area.members:
                for b in area.members:
                    if a == b:
                        continue
                    edge_src.append(index[a])
                    edge_dst.append(index[b])
                    edge_scene.append(scene_idx)
                    edge = relation_by_pair.get((a, b))
                    text = edge.text if edge is not None else None
                    has_text.append(text is not None)
                    edge_text.append(_adapt_text(emb(text), config.text_slice))
                    is_supervised = b == area.anchor_object and a != area.anchor_object
                    supervised.append(is_supervised)
                    if mode == "train" and is_supervised:
                        if edge is None or edge.rel_position is None or edge.rel_theta is None or edge.aligned is None:
                            raise MissingGroundTruth(
                                f"edge {a}->{b} lacks ground-truth relative placement"
                            )
                        edge_place.append(placement_vector(edge.rel_position, edge.rel_theta, edge.aligned))
                        tgt_pos.append(edge.rel_position)
                        tgt_theta.append(THETAS.index(edge.rel_theta))
                        tgt_aligned.append(1.0 if edge.aligned else 0.0)
                    elif mode == "train" and edge is not None and edge.rel_position is not None:
                        # Context edge with known placement: teacher-forced too.
                        theta = edge.rel_theta if edge.rel_theta is not None else 0
                        edge_place.append(placement_vector(edge.rel_position, theta, bool(edge.aligned)))
                    else:
                        edge_place.append(np.zeros(PLACEMENT_DIM))

    n, e = len(obj_ids), len(edge_src)
    return ContextualGraph(
        obj_ids=obj_ids,
        node_text=np.array(node_text).reshape(n, config.text_slice),
        node_size=np.array(node_size).reshape(n, 3),
        edge_src=np.array(edge_src, dtype=np.intp),
        edge_dst=np.array(edge_dst, dtype=np.intp),
        edge_text=np.array(edge_text).reshape(e, config.text_slice),
        edge_placement=np.array(edge_place).reshape(e, PLACEMENT_DIM),
        has_text=np.array(has_text, dtype=bool),
        supervised=np.array(supervised, dtype=bool),
        node_scene=np.array(node_scene, dtype=np.intp),
        edge_scene=np.array(edge_scene, dtype=np.intp),
        num_scenes=len(scenes),
        targets={
            "position": np.array(tgt_pos, dtype=np.float64).reshape(-1, 2),
            "theta": np.array(tgt_theta, dtype=np.intp),
            "aligned": np.array(tgt_aligned, dtype=np.float64),
        },
    )


# ---------------------------------------------------------------------------
# Parameters
# ---------------------------------------------------------------------------


def _glorot(rng, fan_in, fan_out):
    scale = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-scale, scale, size=(fan_in, fan_out))


def init_params(config: NetConfig, seed: int | None = None) -> dict[str, Tensor]:
    rng = np.random.default_rng(config.seed if seed is None else seed)
    h, dz, es = config.hidden, config.latent, config.embed_slice
    params: dict[str, np.ndarray] = {
        "embed.size.w": _glorot(rng, 3, es),
        "embed.size.b": np.zeros(es),
        "embed.place.w": _glorot(rng, PLACEMENT_DIM, es),
        "embed.place.b": np.zeros(es),
        "latent.mu.w": _glorot(rng, h, dz),
        "latent.mu.b": np.zeros(dz),
        "latent.lv.w": _glorot(rng, h, dz),
        "latent.lv.b": np.zeros(dz),
        "dec.z.w": _glorot(rng, dz, es),
        "dec.z.b": np.zeros(es),
        "head.pos.w": _glorot(rng, h, 2),
        "head.pos.b": np.zeros(2),
        "head.theta.w": _glorot(rng, h, config.theta_bins),
        "head.theta.b": np.zeros(config.theta_bins),
        "head.d.w": _glorot(rng, h, 1),
        "head.d.b": np.zeros(1),
    }
    for stack in ("enc", "dec"):
        for k in range(config.rounds):
            params[f"{stack}.{k}.ge.w1"] = _glorot(rng, 3 * h, h)
            params[f"{stack}.{k}.ge.b1"] = np.zeros(h)
            params[f"{stack}.{k}.ge.w2"] = _glorot(rng, h, h)
            params[f"{stack}.{k}.ge.b2"] = np.zeros(h)
            params[f"{stack}.{k}.go.w1"] = _glorot(rng, h, h)
            params[f"{stack}.{k}.go.b1"] = np.zeros(h)
            params[f"{stack}.{k}.go.w2"] = _glorot(rng, h, h)
            params[f"{stack}.{k}.go.b2"] = np.zeros(h)
    return {name: Tensor(value, requires_grad=True) for name, value in params.items()}


# ---------------------------------------------------------------------------
# Forward passes
# ---------------------------------------------------------------------------


def _mlp(params, prefix, x: Tensor) -> Tensor:
    hidden = tape.tanh(x @ params[f"{prefix}.w1"] + params[f"{prefix}.b1"])
    return hidden @ params[f"{prefix}.w2"] + params[f"{prefix}.b2"]


def message_pass(
    params: dict[str, Tensor],
    stack: str,
    node_feat: Tensor,
    edge_feat: Tensor,
    graph: ContextualGraph,
    config: NetConfig,
) -> tuple[Tensor, Tensor]:
    """Run the configured rounds of edge-then-node updates.

    Edges update from their endpoints; nodes add a residual MLP of the
    average 1-ring neighbor features.  Nodes without neighbors are left
    unchanged.
    """
    n = len(graph.obj_ids)
    counts = np.bincount(graph.edge_dst, minlength=n)
    isolated = counts == 0
    mask = Tensor((~isolated).astype(np.float64)[:, None])

    for k in range(config.rounds):
        src = tape.gather_rows(node_feat, graph.edge_src)
        dst = tape.gather_rows(node_feat, graph.edge_dst)
        edge_feat = _mlp(params, f"{stack}.{k}.ge", tape.concat([src, edge_feat, dst], axis=1))
        neighbor_avg = tape.segment_mean(
            tape.gather_rows(node_feat, graph.edge_src), graph.edge_dst, n
        )
        update = _mlp(params, f"{stack}.{k}.go", neighbor_avg)
        node_feat = node_feat + update * mask
    return node_feat, edge_feat


def _context_features(params, graph: ContextualGraph):
    node_size = Tensor(graph.node_size)
    node_emb = node_size @ params["embed.size.w"] + params["embed.size.b"]
    node_feat = tape.concat([Tensor(graph.node_text), node_emb], axis=1)
    return node_feat


def encode(params, graph: ContextualGraph, config: NetConfig):
    """Teacher-forced encoder: returns (mu, logvar) on supervised edges."""
    node_feat = _context_features(params, graph)
    place_emb = Tensor(graph.edge_placement) @ params["embed.place.w"] + params["embed.place.b"]
    edge_feat = tape.concat([Tensor(graph.edge_text), place_emb], axis=1)
    _, edge_out = message_pass(params, "enc", node_feat, edge_feat, graph, config)
    sup = tape.gather_rows(edge_out, np.flatnonzero(graph.supervised))
    mu = sup @ params["latent.mu.w"] + params["latent.mu.b"]
    logvar = sup @ params["latent.lv.w"] + params["latent.lv.b"]
    return mu, logvar


def decode(params, graph: ContextualGraph, z: Tensor, config: NetConfig):
    """Decoder conditioned on context plus per-supervised-edge latents."""
    node_feat = _context_features(params, graph)
    z_emb = z @ params["dec.z.w"] + params["dec.z.b"]
    # Scatter latent embeddings onto supervised edge rows; zeros elsewhere.
    e = len(graph.edge_src)
    sup_idx = np.flatnonzero(graph.supervised)
    scatter = np.zeros((len(sup_idx), e))
    scatter[np.arange(len(sup_idx)), sup_idx] = 1.0
    z_rows = Tensor(scatter.T) @ z_emb
    edge_feat = tape.concat([Tensor(graph.edge_text), z_rows], axis=1)
    _, edge_out = message_pass(params, "dec", node_feat, edge_feat, graph, config)
    sup = tape.gather_rows(edge_out, sup_idx)
    pos = sup @ params["head.pos.w"] + params["head.pos.b"]
    theta_logits = sup @ params["head.theta.w"] + params["head.theta.b"]
    d_logit = sup @ params["head.d.w"] + params["head.d.b"]
    return pos, theta_logits, d_logit


def _scene_mean(values: Tensor, graph: ContextualGraph) -> Tensor:
    """Mean over supervised edges per scene, then mean over the batch."""
    sup_scene = graph.edge_scene[graph.supervised]
    per_scene = tape.segment_mean(values, sup_scene, graph.num_scenes)
    return tape.mean_all(per_scene)


def loss_from_graph(
    params: dict[str, Tensor],
    graph: ContextualGraph,
    noise: np.ndarray,
    beta: float = 1.0,
) -> tuple[Tensor, dict]:
    """Total training loss plus the per-component breakdown (floats)."""
    config_rounds = sum(1 for k in params if k.startswith("enc.") and k.endswith(".ge.w1"))
    config = NetConfig(
        hidden=params["head.pos.w"].value.shape[0],
        latent=params["latent.mu.w"].value.shape[1],
        rounds=config_rounds,
    )
    mu, logvar = encode(params, graph, config)
    std = tape.exp(logvar * 0.5)
    z = mu + std * Tensor(noise)
    pos, theta_logits, d_logit = decode(params, graph, z, config)

    kl_per_edge = tape.sum_axis(
        (tape.square(mu) + tape.exp(logvar) - 1.0 - logvar) * 0.5, axis=1
    )
    l_kl = _scene_mean(kl_per_edge, graph)

    pos_err = tape.sum_axis(tape.absolute(pos - Tensor(graph.targets["position"])), axis=1)
    l_ep = _scene_mean(pos_err, graph)

    l_etheta = _scene_mean(tape.softmax_cross_entropy(theta_logits, graph.targets["theta"]), graph)

    d_flat = tape.sum_axis(d_logit, axis=1)  # (S,1) -> (S,)
    l_ed = _scene_mean(tape.sigmoid_bce(d_flat, graph.targets["aligned"]), graph)

    total = l_kl * beta + l_ep + l_etheta + l_ed
    breakdown = LossBreakdown(
        l_kl=l_kl.item(),
        l_ep=l_ep.item(),
        l_etheta=l_etheta.item(),
        l_ed=l_ed.item(),
        beta=beta,
        total=total.item(),
    )
    if not np.isfinite(total.value):
        raise NonFiniteLoss(breakdown.as_dict())
    return total, breakdown


def infer(
    hierarchy: SceneHierarchy,
    params: dict[str, Tensor],
    seed: int = 0,
    config: NetConfig | None = None,
    embedder: text_embed.Embedder | None = None,
) -> dict[tuple[str, str], PredictedPlacement]:
    """Sample placements for every satellite->anchor edge from the prior."""
    config = config or NetConfig(
        hidden=params["head.pos.w"].value.shape[0],
        latent=params["latent.mu.w"].value.shape[1],
        rounds=sum(1 for k in params if k.startswith("dec.") and k.endswith(".ge.w1")),
    )
    graph = build_graph(hierarchy, mode="infer", config=config, embedder=embedder)
    sup_idx = np.flatnonzero(graph.supervised)
    rng = np.random.default_rng(seed)
    z = Tensor(rng.standard_normal((len(sup_idx), config.latent)))
    pos, theta_logits, d_logit = decode(params, graph, z, config)

    theta_z = theta_logits.value - theta_logits.value.max(axis=1, keepdims=True)
    theta_probs = np.exp(theta_z)
    theta_probs /= theta_probs.sum(axis=1, keepdims=True)
    d_prob = 1.0 / (1.0 + np.exp(-d_logit.value[:, 0]))

    out: dict[tuple[str, str], PredictedPlacement] = {}
    for row, eidx in enumerate(sup_idx):
        src = graph.obj_ids[graph.edge_src[eidx]]
        dst = graph.obj_ids[graph.edge_dst[eidx]]
        out[(src, dst)] = PredictedPlacement(
            rel_position=(float(pos.value[row, 0]), float(pos.value[row, 1])),
            rel_theta=tuple(float(p) for p in theta_probs[row]),
            aligned_prob=float(d_prob[row]),
        )
    return out


# ---------------------------------------------------------------------------
# Gradient checking
# ---------------------------------------------------------------------------


def gradient_check(
    config: NetConfig | None = None,
    draws: int = 100,
    coords_per_draw: int = 24,
    step: float = 1e-5,
    seed: int = 0,
) -> float:
    """Compare analytic gradients of the total loss with central differences.

    Each draw samples fresh parameters, a small random graph, and a random
    subset of parameter coordinates.  Returns the worst relative error.
    """
    from ..corpus import generate

    config = config or NetConfig(hidden=16, latent=8, rounds=5)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for draw in range(draws):
        params = init_params(config, seed=int(rng.integers(2**31)))
        scene = generate(1, seed=int(rng.integers(2**31)))[0]
        graph = build_graph(scene, mode="train", config=config)
        noise = rng.standard_normal((int(graph.supervised.sum()), config.latent))
        beta = float(rng.uniform(0.2, 1.0))

        loss, _ = loss_from_graph(params, graph, noise, beta=beta)
        tape.backward(loss)
        grads = {name: t.grad.copy() if t.grad is not None else np.zeros_like(t.value) for name, t in params.items()}

        names = sorted(params)
        for _ in range(coords_per_draw):
            name = names[int(rng.integers(len(names)))]
            tensor = params[name]
            flat_idx = int(rng.integers(tensor.value.size))
            orig = tensor.value.flat[flat_idx]

            tensor.value.flat[flat_idx] = orig + step
            up, _ = loss_from_graph(params, graph, noise, beta=beta)
            tensor.value.flat[flat_idx] = orig - step
            down, _ = loss_from_graph(params, graph, noise, beta=beta)
            tensor.value.flat[flat_idx] = orig

            numeric = (up.item() - down.item()) / (2 * step)
            analytic = grads[name].flat[flat_idx]
            diff = abs(numeric - analytic)
            if diff < 1e-10:
                continue
            rel = diff / max(abs(numeric), abs(analytic), 1e-8)
            worst = max(worst, rel)
    return worst
