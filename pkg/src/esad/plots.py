"""Dependency-free SVG emitters for the evaluation figures."""

from __future__ import annotations

_PALETTE = ("#1f6fb2", "#d1495b", "#3a9d5d", "#8a6fb8")

_W, _H = 640, 480
_ML, _MR, _MT, _MB = 70, 20, 44, 56  # margins around the plot area


def _fmt(x: float) -> str:
    return f"{x:.4f}".rstrip("0").rstrip(".") if x == x else "0"


def _ticks(lo: float, hi: float, n: int = 5):
    if hi <= lo:
        hi = lo + 1.0
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n)]


def line_chart_svg(series, title: str, xlabel: str, ylabel: str,
                   x_range=None, y_range=None) -> str:
    """Polyline chart. `series` is a list of (label, xs, ys) tuples."""
    xs_all = [x for _, xs, _ in series for x in xs]
    ys_all = [y for _, _, ys in series for y in ys]
    if not xs_all:
        raise ValueError("cannot plot empty series")
    x_lo, x_hi = x_range if x_range else (min(xs_all), max(xs_all))
    y_lo, y_hi = y_range if y_range else (min(ys_all), max(ys_all))
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pw = _W - _ML - _MR
    ph = _H - _MT - _MB

    def px(x):
        return _ML + (x - x_lo) / (x_hi - x_lo) * pw

    def py(y):
        return _MT + ph - (y - y_lo) / (y_hi - y_lo) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2}" y="24" text-anchor="middle" font-size="16">{title}</text>',
        f'<rect x="{_ML}" y="{_MT}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
    ]
    for tx in _ticks(x_lo, x_hi):
        parts.append(
            f'<line x1="{_fmt(px(tx))}" y1="{_MT + ph}" x2="{_fmt(px(tx))}" '
            f'y2="{_MT + ph + 5}" stroke="#444"/>'
        )
        parts.append(
            f'<text x="{_fmt(px(tx))}" y="{_MT + ph + 20}" text-anchor="middle" '
            f'font-size="11">{_fmt(tx)}</text>'
        )
    for ty in _ticks(y_lo, y_hi):
        parts.append(
            f'<line x1="{_ML - 5}" y1="{_fmt(py(ty))}" x2="{_ML}" '
            f'y2="{_fmt(py(ty))}" stroke="#444"/>'
        )
        parts.append(
            f'<text x="{_ML - 9}" y="{_fmt(py(ty) + 4)}" text-anchor="end" '
            f'font-size="11">{_fmt(ty)}</text>'
        )
    parts.append(
        f'<text x="{_ML + pw / 2}" y="{_H - 14}" text-anchor="middle" font-size="13">{xlabel}</text>'
    )
    parts.append(
        f'<text x="20" y="{_MT + ph / 2}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 20 {_MT + ph / 2})">{ylabel}</text>'
    )
    for si, (label, xs, ys) in enumerate(series):
        color = _PALETTE[si % len(_PALETTE)]
        points = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in zip(xs, ys))
        parts.append(
            f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="1.8"/>'
        )
        ly = _MT + 16 + 16 * si
        parts.append(
            f'<line x1="{_ML + 8}" y1="{ly - 4}" x2="{_ML + 30}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="1.8"/>'
        )
        parts.append(f'<text x="{_ML + 36}" y="{ly}" font-size="12">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def confusion_matrix_svg(tn: int, fp: int, fn: int, tp: int, title: str) -> str:
    """2x2 heat cells, rows = actual (normal, anomalous), columns = predicted."""
    counts = [[tn, fp], [fn, tp]]
    peak = max(tn, fp, fn, tp, 1)
    size, x0, y0 = 150, 170, 90
    labels = ("normal", "anomalous")
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="520" height="460" '
        f'viewBox="0 0 520 460" font-family="sans-serif">',
        '<rect width="520" height="460" fill="white"/>',
        f'<text x="260" y="30" text-anchor="middle" font-size="16">{title}</text>',
        '<text x="245" y="62" text-anchor="middle" font-size="13">predicted</text>',
        '<text x="40" y="240" text-anchor="middle" font-size="13" '
        'transform="rotate(-90 40 240)">actual</text>',
    ]
    for col, label in enumerate(labels):
        parts.append(
            f'<text x="{x0 + size * col + size / 2}" y="82" text-anchor="middle" '
            f'font-size="12">{label}</text>'
        )
    for row, label in enumerate(labels):
        parts.append(
            f'<text x="{x0 - 10}" y="{y0 + size * row + size / 2 + 4}" '
            f'text-anchor="end" font-size="12">{label}</text>'
        )
    for row in range(2):
        for col in range(2):
            frac = counts[row][col] / peak
            # interpolate white -> blue
            r = int(255 - 200 * frac)
            g = int(255 - 144 * frac)
            parts.append(
                f'<rect x="{x0 + size * col}" y="{y0 + size * row}" width="{size}" '
                f'height="{size}" fill="rgb({r},{g},255)" stroke="#444"/>'
            )
            text_fill = "#000" if frac < 0.6 else "#fff"
            parts.append(
                f'<text x="{x0 + size * col + size / 2}" y="{y0 + size * row + size / 2 + 6}" '
                f'text-anchor="middle" font-size="20" fill="{text_fill}">{counts[row][col]}</text>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def roc_svg(fpr, tpr, auc: float) -> str:
    return line_chart_svg(
        [(f"ROC (AUC = {auc:.3f})", list(fpr), list(tpr)),
         ("chance", [0.0, 1.0], [0.0, 1.0])],
        title="Receiver operating characteristic",
        xlabel="false positive rate",
        ylabel="true positive rate",
        x_range=(0.0, 1.0),
        y_range=(0.0, 1.0),
    )


def pr_svg(recall, precision, ap: float) -> str:
    return line_chart_svg(
        [(f"PR (AP = {ap:.3f})", list(recall), list(precision))],
        title="Precision-recall curve",
        xlabel="recall",
        ylabel="precision",
        x_range=(0.0, 1.0),
        y_range=(0.0, 1.0),
    )
