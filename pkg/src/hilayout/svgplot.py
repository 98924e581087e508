"""Deterministic top-view SVG rendering of solved layouts."""

from __future__ import annotations

from .scene_model import SceneLayout, rotate

SCALE = 100.0   # px per meter
MARGIN = 40.0

PALETTE = (
    "#8dd3c7", "#ffffb3", "#bebada", "#fb8072", "#80b1d3",
    "#fdb462", "#b3de69", "#fccde5", "#d9d9d9", "#bc80bd",
)


def _fmt(v: float) -> str:
    return f"{v:.2f}"


class _Canvas:
    def __init__(self, room: tuple[float, float]):
        self.room = room
        self.width = room[0] * SCALE + 2 * MARGIN
        self.height = room[1] * SCALE + 2 * MARGIN
        self.parts: list[str] = []

    def to_px(self, x: float, y: float) -> tuple[float, float]:
        return (MARGIN + (x + self.room[0] / 2) * SCALE, MARGIN + (self.room[1] / 2 - y) * SCALE)

    def rect(self, center, half, **style):
        cx, cy = self.to_px(*center)
        w, h = half[0] * 2 * SCALE, half[1] * 2 * SCALE
        attrs = " ".join(f'{k.replace("_", "-")}="{v}"' for k, v in style.items())
        self.parts.append(
            f'<rect x="{_fmt(cx - w / 2)}" y="{_fmt(cy - h / 2)}" width="{_fmt(w)}" height="{_fmt(h)}" {attrs}/>'
        )

    def line(self, a, b, **style):
        ax, ay = self.to_px(*a)
        bx, by = self.to_px(*b)
        attrs = " ".join(f'{k.replace("_", "-")}="{v}"' for k, v in style.items())
        self.parts.append(f'<line x1="{_fmt(ax)}" y1="{_fmt(ay)}" x2="{_fmt(bx)}" y2="{_fmt(by)}" {attrs}/>')

    def text(self, pos, label, size=11):
        x, y = self.to_px(*pos)
        self.parts.append(
            f'<text x="{_fmt(x)}" y="{_fmt(y)}" font-size="{size}" font-family="sans-serif" '
            f'text-anchor="middle">{label}</text>'
        )

    def svg(self) -> str:
        body = "\n".join(self.parts)
        return (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(self.width)}" '
            f'height="{_fmt(self.height)}" viewBox="0 0 {_fmt(self.width)} {_fmt(self.height)}">\n'
            f"{body}\n</svg>\n"
        )


def render_svg(layout: SceneLayout) -> str:
    room = layout.hierarchy.root.size
    canvas = _Canvas(room)
    canvas.rect((0.0, 0.0), (room[0] / 2, room[1] / 2), fill="#ffffff", stroke="#222222", stroke_width=2)

    for i, area in enumerate(layout.hierarchy.areas):
        pose = layout.area_poses.get(area.id)
        if pose is None:
            continue
        hx, hy = area.size[0] / 2, area.size[1] / 2
        if pose.angle % 180 == 90:
            hx, hy = hy, hx
        color = PALETTE[i % len(PALETTE)]
        canvas.rect(pose.center, (hx, hy), fill=color, fill_opacity="0.35",
                    stroke=color, stroke_width=1.5, stroke_dasharray="6 3")
        tip = rotate(pose.angle, (0.0, min(area.size[1] / 2, 0.45)))
        canvas.line(pose.center, (pose.center[0] + tip[0], pose.center[1] + tip[1]),
                    stroke="#333333", stroke_width=2)
        canvas.text((pose.center[0], pose.center[1] + hy + 0.12), area.id, size=12)

    for oid in sorted(layout.object_poses):
        pose = layout.object_poses[oid]
        obj = layout.hierarchy.objects[oid]
        hx, hy = obj.size[0] / 2, obj.size[1] / 2
        if pose.theta % 180 == 90:
            hx, hy = hy, hx
        canvas.rect(pose.center, (hx, hy), fill="#ffffff", fill_opacity="0.9",
                    stroke="#555555", stroke_width=1.2)
        nose = rotate(pose.theta, (0.0, obj.size[1] / 2 * 0.8))
        canvas.line(pose.center, (pose.center[0] + nose[0], pose.center[1] + nose[1]),
                    stroke="#888888", stroke_width=1)
        canvas.text(pose.center, oid, size=9)

    return canvas.svg()
