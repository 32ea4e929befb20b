# spectral/services/charts.py
"""Gráfico SVG mínimo de las series observada y contrafactuales (reportlab)."""
from typing import Dict, List, Sequence

from reportlab.graphics import renderSVG
from reportlab.graphics.charts.legends import Legend
from reportlab.graphics.charts.lineplots import LinePlot
from reportlab.graphics.shapes import Drawing, Group, String
from reportlab.lib import colors

from ..exceptions import PreconditionError

WIDTH = 640
HEIGHT = 400

PALETTE = [
    colors.HexColor("#808080"),
    colors.HexColor("#1f77b4"),
    colors.HexColor("#2ca02c"),
    colors.HexColor("#d62728"),
    colors.HexColor("#9467bd"),
    colors.HexColor("#8c564b"),
    colors.HexColor("#e377c2"),
    colors.HexColor("#17becf"),
]


def _value_range(series: Dict[str, List[float]]):
    values = [v for line in series.values() for v in line]
    low, high = min(values), max(values)
    if high - low < 1e-12:
        pad = max(abs(high) * 0.1, 0.5)
        return low - pad, high + pad
    pad = (high - low) * 0.08
    return low - pad, high + pad


def render_series_chart(bins: Sequence[str], series: Dict[str, List[float]], title: str,
                        y_label: str = "Polarización (ρ)") -> bytes:
    """Devuelve el SVG como bytes; la salida es idéntica para la misma entrada."""
    if not bins or not series:
        raise PreconditionError("No hay series para graficar")
    labels = list(bins)
    names = list(series)

    drawing = Drawing(WIDTH, HEIGHT)
    plot = LinePlot()
    plot.x, plot.y = 70, 60
    plot.width, plot.height = WIDTH - 260, HEIGHT - 110
    plot.data = [[(i, float(v)) for i, v in enumerate(series[name])] for name in names]
    for i, _ in enumerate(names):
        plot.lines[i].strokeColor = PALETTE[i % len(PALETTE)]
        plot.lines[i].strokeWidth = 2 if i == 0 else 1.5

    if len(labels) == 1:
        plot.xValueAxis.valueMin, plot.xValueAxis.valueMax = -0.5, 0.5
    else:
        plot.xValueAxis.valueMin, plot.xValueAxis.valueMax = 0, len(labels) - 1
    plot.xValueAxis.valueSteps = list(range(len(labels)))
    plot.xValueAxis.labelTextFormat = lambda v: labels[int(round(v))] if 0 <= round(v) < len(labels) else ""
    plot.xValueAxis.labels.angle = 30
    plot.xValueAxis.labels.boxAnchor = "ne"
    plot.xValueAxis.labels.fontSize = 8

    y_min, y_max = _value_range(series)
    plot.yValueAxis.valueMin, plot.yValueAxis.valueMax = y_min, y_max
    plot.yValueAxis.labelTextFormat = "%.3f"
    plot.yValueAxis.labels.fontSize = 8
    drawing.add(plot)

    legend = Legend()
    legend.x, legend.y = WIDTH - 175, HEIGHT - 60
    legend.fontSize = 8
    legend.alignment = "right"
    legend.colorNamePairs = [(PALETTE[i % len(PALETTE)], name) for i, name in enumerate(names)]
    drawing.add(legend)

    drawing.add(String(WIDTH / 2, HEIGHT - 20, title, textAnchor="middle", fontSize=12))
    drawing.add(String(plot.x + plot.width / 2, 8, "Periodo", textAnchor="middle", fontSize=10))
    y_title = Group(String(0, 0, y_label, textAnchor="middle", fontSize=10))
    y_title.translate(18, plot.y + plot.height / 2)
    y_title.rotate(90)
    drawing.add(y_title)

    return renderSVG.drawToString(drawing).encode("utf-8")
