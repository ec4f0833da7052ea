"""Self-contained SVG line charts rendered from sweep CSV text."""

from __future__ import annotations

from xml.sax.saxutils import escape

WIDTH, HEIGHT, PAD = 480, 360, 48
COLOURS = ("#1f4fd1", "#d12a1f", "#2a9d3a", "#555555")


def parse_sweep_csv(text: str) -> tuple[dict[str, float], list[str], list[list[str]]]:
    meta, rows, header = {}, [], None
    for line in text.splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            meta[key.strip()] = float(value)
        elif header is None:
            header = line.split(",")
        else:
            rows.append(line.split(","))
    return meta, header or [], rows


def _polyline(xs, ys, sx, sy, colour, dashed=False) -> str:
    pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys))
    dash = ' stroke-dasharray="5,4"' if dashed else ""
    return f'<polyline fill="none" stroke="{colour}" stroke-width="2"{dash} points="{pts}"/>'


def line_chart(xs, series: dict[str, list[float]], markers: dict[str, float],
               title: str, ylabel: str, colours=COLOURS) -> str:
    """Render named series against a shared x axis, with dashed vertical markers."""
    ymax = max(max(v) for v in series.values()) * 1.1 or 1.0
    x0, x1 = 0.0, max(xs)

    def sx(x):
        return PAD + (x - x0) / (x1 - x0) * (WIDTH - 2 * PAD)

    def sy(y):
        return HEIGHT - PAD - y / ymax * (HEIGHT - 2 * PAD)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="20" text-anchor="middle">{escape(title)}</text>',
        f'<line x1="{PAD}" y1="{sy(0)}" x2="{WIDTH - PAD}" y2="{sy(0)}" stroke="black"/>',
        f'<line x1="{PAD}" y1="{sy(0)}" x2="{PAD}" y2="{PAD}" stroke="black"/>',
        f'<text x="{WIDTH - PAD}" y="{sy(0) + 30}" text-anchor="end">k</text>',
        f'<text x="{PAD - 8}" y="{PAD - 8}">{escape(ylabel)}</text>',
    ]
    for tick in (0.0, 0.25, 0.5, 0.75, 1.0):
        if tick <= x1:
            parts.append(f'<text x="{sx(tick):.2f}" y="{sy(0) + 16}" text-anchor="middle">{tick:g}</text>')
    for i, (name, ys) in enumerate(series.items()):
        colour = colours[i % len(colours)]
        parts.append(_polyline(xs, ys, sx, sy, colour))
        parts.append(f'<text x="{WIDTH - PAD + 4}" y="{sy(ys[-1]):.2f}" fill="{colour}">{escape(name)}</text>')
    for name, k in markers.items():
        parts.append(f'<line x1="{sx(k):.2f}" y1="{sy(0):.2f}" x2="{sx(k):.2f}" y2="{PAD}" '
                     f'stroke="#555555" stroke-dasharray="5,4"/>')
        parts.append(f'<text x="{sx(k):.2f}" y="{PAD - 2}" text-anchor="middle">{escape(name)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def fig1_svg(csv_text: str) -> str:
    meta, header, rows = parse_sweep_csv(csv_text)
    xs = [float(r[0]) for r in rows]
    ys = [float(r[1]) for r in rows]
    markers = {"k_bar": meta["k_bar"]} if "k_bar" in meta else {}
    return line_chart(xs, {"t_hat_k": ys}, markers, "Limit cut-off", "t_hat_k")


def fig2_svg(csv_text: str) -> str:
    meta, header, rows = parse_sweep_csv(csv_text)
    xs = [float(r[0]) for r in rows]
    series = {name: [float(r[i]) for r in rows] for i, name in enumerate(header) if i > 0}
    markers = {key: meta[key] for key in ("k_bar", "k_star") if key in meta}
    return line_chart(xs, series, markers, "Sure-winner fraction by state", "fraction",
                      colours=("#d12a1f", "#2a9d3a", "#1f4fd1"))
