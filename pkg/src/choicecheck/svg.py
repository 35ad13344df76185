"""Minimal deterministic SVG 1.1 writer.

Attributes are emitted in sorted order and every coordinate is formatted
with two fixed decimals, so identical input always yields identical bytes.
"""

from __future__ import annotations

from xml.sax.saxutils import escape, quoteattr

__all__ = ["SvgCanvas", "fmt"]


def fmt(value) -> str:
    s = f"{float(value):.2f}"
    return "0.00" if s == "-0.00" else s


class _Element:
    def __init__(self, tag: str, text: str | None = None, **attrs):
        self.tag = tag
        self.text = text
        self.attrs = attrs
        self.children: list[_Element] = []

    def add(self, tag: str, text: str | None = None, **attrs) -> "_Element":
        child = _Element(tag, text=text, **attrs)
        self.children.append(child)
        return child

    def render(self, out: list, indent: int):
        pad = "  " * indent
        parts = [f"{pad}<{self.tag}"]
        for key in sorted(self.attrs):
            value = self.attrs[key]
            name = key.rstrip("_").replace("_", "-")
            parts.append(f" {name}={quoteattr(str(value))}")
        if not self.children and self.text is None:
            parts.append("/>")
            out.append("".join(parts))
            return
        parts.append(">")
        if self.text is not None:
            parts.append(escape(self.text))
        if self.children:
            out.append("".join(parts))
            for child in self.children:
                child.render(out, indent + 1)
            out.append(f"{pad}</{self.tag}>")
        else:
            parts.append(f"</{self.tag}>")
            out.append("".join(parts))


class SvgCanvas:
    """Fixed-size canvas; add shapes, then serialize with to_string()."""

    def __init__(self, width: float, height: float):
        self.width = width
        self.height = height
        self.root = _Element(
            "svg",
            xmlns="http://www.w3.org/2000/svg",
            version="1.1",
            width=fmt(width),
            height=fmt(height),
            viewBox=f"0 0 {fmt(width)} {fmt(height)}",
        )

    def group(self, **attrs) -> _Element:
        return self.root.add("g", **attrs)

    def line(self, x1, y1, x2, y2, parent=None, **attrs) -> _Element:
        target = parent if parent is not None else self.root
        return target.add(
            "line", x1=fmt(x1), y1=fmt(y1), x2=fmt(x2), y2=fmt(y2), **attrs
        )

    def polyline(self, points, parent=None, **attrs) -> _Element:
        target = parent if parent is not None else self.root
        coords = " ".join(f"{fmt(x)},{fmt(y)}" for x, y in points)
        return target.add("polyline", points=coords, fill="none", **attrs)

    def rect(self, x, y, w, h, parent=None, **attrs) -> _Element:
        target = parent if parent is not None else self.root
        return target.add(
            "rect", x=fmt(x), y=fmt(y), width=fmt(w), height=fmt(h), **attrs
        )

    def circle(self, cx, cy, r, parent=None, **attrs) -> _Element:
        target = parent if parent is not None else self.root
        return target.add("circle", cx=fmt(cx), cy=fmt(cy), r=fmt(r), **attrs)

    def text(self, x, y, content: str, parent=None, **attrs) -> _Element:
        target = parent if parent is not None else self.root
        return target.add("text", text=content, x=fmt(x), y=fmt(y), **attrs)

    def to_string(self) -> str:
        out = ['<?xml version="1.0" encoding="UTF-8"?>']
        self.root.render(out, 0)
        return "\n".join(out) + "\n"

    def write(self, path):
        from pathlib import Path

        Path(path).write_text(self.to_string(), encoding="utf-8")
