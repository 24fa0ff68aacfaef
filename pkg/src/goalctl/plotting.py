"""Static SVG figures written without a plotting library.

Output depends only on the input data: coordinates are printed with fixed precision
and nothing time-dependent is embedded, so figures diff cleanly between runs.
"""

from pathlib import Path

import numpy as np

from goalctl.errors import SchemaMismatch
from goalctl.runio import read_csv

SCHEMAS = {
    "dip-profile": ("t", "cos_theta1", "cos_theta2"),
    "cstr-trace": ("t", "true_cb", "est_cb", "min_cb", "max_cb", "reward"),
    "time-near-goal": ("agent", "time_near_goal"),
    "learning-curve": ("iteration", "loss", "mean_cos"),
}
KINDS = tuple(SCHEMAS)

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
WIDTH, PANEL_H = 640, 300
MARGIN = dict(left=64, right=20, top=36, bottom=44)


def _f(v):
    return f"{v:.2f}"


def _esc(text):
    return str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def nice_ticks(lo, hi, count=5):
    if not np.isfinite(lo) or not np.isfinite(hi):
        lo, hi = 0.0, 1.0
    if hi <= lo:
        lo, hi = lo - 0.5, hi + 0.5
    raw = (hi - lo) / max(count, 1)
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = np.floor(lo / step) * step
    ticks = np.arange(start, hi + 0.5 * step, step)
    return [float(np.round(t, 10)) for t in ticks if lo - 1e-9 * step <= t <= hi + 1e-9 * step] or [lo, hi]


def _tick_label(v):
    return f"{v:g}"


class Panel:
    """One set of axes inside the figure, mapping data to pixel coordinates."""

    def __init__(self, svg, top, xlim, ylim, title="", xlabel="", ylabel="", xticks=True):
        self.svg = svg
        self.x0, self.x1 = MARGIN["left"], WIDTH - MARGIN["right"]
        self.y0, self.y1 = top + MARGIN["top"], top + PANEL_H - MARGIN["bottom"]
        self.xlim = _pad(xlim, 0.0)
        self.ylim = _pad(ylim, 0.05)
        self._axes(title, xlabel, ylabel, xticks)

    def px(self, x):
        lo, hi = self.xlim
        return self.x0 + (np.asarray(x, float) - lo) / (hi - lo) * (self.x1 - self.x0)

    def py(self, y):
        lo, hi = self.ylim
        return self.y1 - (np.asarray(y, float) - lo) / (hi - lo) * (self.y1 - self.y0)

    def _axes(self, title, xlabel, ylabel, xticks):
        s = self.svg
        s.append(f'<rect x="{_f(self.x0)}" y="{_f(self.y0)}" width="{_f(self.x1 - self.x0)}" '
                 f'height="{_f(self.y1 - self.y0)}" fill="none" stroke="#000"/>')
        for t in nice_ticks(*self.xlim) if xticks else []:
            x = float(self.px(t))
            s.append(f'<line x1="{_f(x)}" y1="{_f(self.y1)}" x2="{_f(x)}" y2="{_f(self.y1 + 4)}" stroke="#000"/>')
            s.append(f'<text x="{_f(x)}" y="{_f(self.y1 + 16)}" text-anchor="middle">{_tick_label(t)}</text>')
        for t in nice_ticks(*self.ylim):
            y = float(self.py(t))
            s.append(f'<line x1="{_f(self.x0 - 4)}" y1="{_f(y)}" x2="{_f(self.x0)}" y2="{_f(y)}" stroke="#000"/>')
            s.append(f'<text x="{_f(self.x0 - 6)}" y="{_f(y + 4)}" text-anchor="end">{_tick_label(t)}</text>')
        if title:
            s.append(f'<text x="{_f((self.x0 + self.x1) / 2)}" y="{_f(self.y0 - 12)}" '
                     f'text-anchor="middle" font-weight="bold">{_esc(title)}</text>')
        if xlabel:
            s.append(f'<text x="{_f((self.x0 + self.x1) / 2)}" y="{_f(self.y1 + 34)}" '
                     f'text-anchor="middle">{_esc(xlabel)}</text>')
        if ylabel:
            yc = (self.y0 + self.y1) / 2
            s.append(f'<text x="14" y="{_f(yc)}" text-anchor="middle" '
                     f'transform="rotate(-90 14 {_f(yc)})">{_esc(ylabel)}</text>')

    def line(self, x, y, color, width=1.5, dash=None, step=False):
        x, y = np.asarray(x, float), np.asarray(y, float)
        if step and len(x) > 1:
            x = np.repeat(x, 2)[1:]
            y = np.repeat(y, 2)[:-1]
        pts = " ".join(f"{_f(a)},{_f(b)}" for a, b in zip(self.px(x), self.py(y)))
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self.svg.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="{width}"{extra}/>')

    def band(self, x, lo, hi, color):
        x = np.asarray(x, float)
        pts = list(zip(self.px(x), self.py(hi))) + list(zip(self.px(x[::-1]), self.py(np.asarray(lo)[::-1])))
        pts = " ".join(f"{_f(a)},{_f(b)}" for a, b in pts)
        self.svg.append(f'<polygon points="{pts}" fill="{color}" fill-opacity="0.25" stroke="none"/>')

    def hline(self, y, color="#777", dash="4 3"):
        yy = float(self.py(y))
        self.svg.append(f'<line x1="{_f(self.x0)}" y1="{_f(yy)}" x2="{_f(self.x1)}" y2="{_f(yy)}" '
                        f'stroke="{color}" stroke-dasharray="{dash}"/>')

    def legend(self, entries):
        for i, (label, color) in enumerate(entries):
            y = self.y0 + 14 + 14 * i
            self.svg.append(f'<line x1="{_f(self.x1 - 130)}" y1="{_f(y - 4)}" x2="{_f(self.x1 - 112)}" '
                            f'y2="{_f(y - 4)}" stroke="{color}" stroke-width="2"/>')
            self.svg.append(f'<text x="{_f(self.x1 - 108)}" y="{_f(y)}">{_esc(label)}</text>')

    def note(self, text):
        self.svg.append(f'<text x="{_f((self.x0 + self.x1) / 2)}" y="{_f((self.y0 + self.y1) / 2)}" '
                        f'text-anchor="middle" fill="#777">{_esc(text)}</text>')


def _pad(lim, frac):
    lo, hi = (float(v) for v in lim)
    if not (np.isfinite(lo) and np.isfinite(hi)):
        return 0.0, 1.0
    if hi <= lo:
        return lo - 0.5, hi + 0.5
    pad = frac * (hi - lo)
    return lo - pad, hi + pad


def _document(parts, panels):
    height = PANEL_H * panels
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" '
            f'viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="11">')
    return "\n".join([head, f'<rect width="{WIDTH}" height="{height}" fill="#fff"/>', *parts, "</svg>"]) + "\n"


def _load(kind, paths):
    """Column dicts per input file; ``None`` for files with no header at all."""
    need = SCHEMAS[kind]
    tables = []
    for path in paths:
        header, rows = read_csv(path)
        if not header:
            tables.append(None)
            continue
        missing = [c for c in need if c not in header]
        if missing:
            raise SchemaMismatch(missing)
        tables.append({name: [r[header.index(name)] for r in rows] for name in header})
    return tables


def _floats(table, name):
    return np.asarray([float(v) for v in table[name]], dtype=float)


def _labels(paths, labels):
    return list(labels) if labels else [Path(p).stem for p in paths]


def dip_profile(tables, labels):
    parts = []
    data = [t for t in tables if t and t["t"]]
    if not data:
        p = Panel(parts, 0, (0, 1), (-1, 1), "double pendulum", "step", "cos theta")
        p.hline(1.0)
        p.note("no data")
        return _document(parts, 1)
    for i, (table, label) in enumerate(zip(tables, labels)):
        if not table or not table["t"]:
            Panel(parts, i * PANEL_H, (0, 1), (-1, 1), label, "step", "cos theta").note("no data")
            continue
        t = _floats(table, "t")
        p = Panel(parts, i * PANEL_H, (t.min(), t.max()), (-1, 1), label, "step", "cos theta")
        p.hline(1.0)
        p.line(t, _floats(table, "cos_theta1"), PALETTE[0])
        p.line(t, _floats(table, "cos_theta2"), PALETTE[1])
        p.legend([("link 1", PALETTE[0]), ("link 2", PALETTE[1])])
    return _document(parts, len(tables))


def cstr_trace(tables, labels, goal=0.6):
    parts = []
    table = tables[0] if tables else None
    if not table or not table["t"]:
        top = Panel(parts, 0, (0, 1), (0, 1), labels[0] if labels else "", "", "c_B")
        top.note("no data")
        bottom = Panel(parts, PANEL_H, (0, 1), (0, 1), "", "step", "estimated reward")
        bottom.note("no data")
        return _document(parts, 2)
    t = _floats(table, "t")
    true, est = _floats(table, "true_cb"), _floats(table, "est_cb")
    lo, hi = _floats(table, "min_cb"), _floats(table, "max_cb")
    r = _floats(table, "reward")
    ylim = (min(lo.min(), true.min(), goal), max(hi.max(), true.max(), goal))
    top = Panel(parts, 0, (t.min(), t.max()), ylim, labels[0], "", "c_B")
    top.band(t, lo, hi, PALETTE[0])
    top.hline(goal)
    top.line(t, est, PALETTE[0], step=True)
    top.line(t, true, "#000")
    top.legend([("true", "#000"), ("estimate", PALETTE[0])])
    bottom = Panel(parts, PANEL_H, (t.min(), t.max()), (min(r.min(), 0.0), r.max()), "", "step",
                   "estimated reward")
    bottom.line(t, r, PALETTE[1])
    return _document(parts, 2)


def _box(panel, pos, values, color, half=0.3):
    """Box (quartiles), whiskers (1.5 IQR) and median at x position ``pos``."""
    q1, med, q3 = np.percentile(values, [25, 50, 75])
    iqr = q3 - q1
    lo = values[values >= q1 - 1.5 * iqr].min()
    hi = values[values <= q3 + 1.5 * iqr].max()
    s = panel.svg
    x0, x1, xc = (float(panel.px(v)) for v in (pos - half, pos + half, pos))
    ya, yb = float(panel.py(q3)), float(panel.py(q1))
    s.append(f'<rect x="{_f(x0)}" y="{_f(ya)}" width="{_f(x1 - x0)}" height="{_f(max(yb - ya, 0.5))}" '
             f'fill="{color}" fill-opacity="0.35" stroke="{color}"/>')
    ym = float(panel.py(med))
    s.append(f'<line x1="{_f(x0)}" y1="{_f(ym)}" x2="{_f(x1)}" y2="{_f(ym)}" stroke="#000" stroke-width="2"/>')
    for a, b in ((hi, q3), (lo, q1)):
        s.append(f'<line x1="{_f(xc)}" y1="{_f(float(panel.py(a)))}" x2="{_f(xc)}" '
                 f'y2="{_f(float(panel.py(b)))}" stroke="{color}"/>')
    for v in values[(values < lo) | (values > hi)]:
        s.append(f'<circle cx="{_f(xc)}" cy="{_f(float(panel.py(v)))}" r="1.5" fill="{color}"/>')


def time_near_goal(tables, labels):
    parts = []
    groups = {}
    for table in tables:
        if not table:
            continue
        for name, value in zip(table["agent"], table["time_near_goal"]):
            groups.setdefault(name, []).append(float(value))
    if not groups:
        p = Panel(parts, 0, (0, 1), (0, 1), "time near goal", "agent", "time near goal")
        p.note("no data")
        return _document(parts, 1)
    names = sorted(groups)
    allv = np.concatenate([groups[n] for n in names])
    p = Panel(parts, 0, (-0.5, len(names) - 0.5), (allv.min(), allv.max()), "time near goal", "",
              "time near goal", xticks=False)
    for i, name in enumerate(names):
        _box(p, i, np.asarray(groups[name]), PALETTE[i % len(PALETTE)])
        parts.append(f'<text x="{_f(float(p.px(i)))}" y="{_f(p.y1 + 16)}" text-anchor="middle">{_esc(name)}</text>')
    return _document(parts, 1)


def learning_curve(tables, labels):
    parts = []
    data = [(t, lab) for t, lab in zip(tables, labels) if t and t["iteration"]]
    if not data:
        p = Panel(parts, 0, (0, 1), (0, 1), "learning curve", "iteration", "loss")
        p.note("no data")
        return _document(parts, 1)
    its = np.concatenate([_floats(t, "iteration") for t, _ in data])
    loss = np.concatenate([_floats(t, "loss") for t, _ in data])
    p = Panel(parts, 0, (its.min(), its.max()), (loss.min(), loss.max()), "learning curve", "iteration", "loss")
    for i, (t, _) in enumerate(data):
        p.line(_floats(t, "iteration"), _floats(t, "loss"), PALETTE[i % len(PALETTE)], width=1.0)
    p.legend([(lab, PALETTE[i % len(PALETTE)]) for i, (_, lab) in enumerate(data)][:6])
    return _document(parts, 1)


RENDER = {"dip-profile": dip_profile, "cstr-trace": cstr_trace, "time-near-goal": time_near_goal,
          "learning-curve": learning_curve}


def render(kind, paths, labels=None):
    if kind not in SCHEMAS:
        raise ValueError(f"unknown plot kind {kind!r}; expected one of {', '.join(KINDS)}")
    paths = [paths] if isinstance(paths, (str, Path)) else list(paths)
    return RENDER[kind](_load(kind, paths), _labels(paths, labels))


def plot(kind, paths, out, labels=None):
    """Render ``kind`` from CSV ``paths`` into the SVG file ``out``."""
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(render(kind, paths, labels))
    return out
