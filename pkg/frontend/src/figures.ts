import { Table, columnIndex, numericColumn } from "./csv";
import {
  colorBar, el, formatTick, linearScale, svgDocument, text, ticks, viridis,
} from "./svg";

const MASK_FILL = "#d8d8d8";

function finiteExtent(values: number[]): [number, number] {
  const live = values.filter((v) => isFinite(v));
  if (live.length === 0) return [0, 1];
  return [Math.min(...live), Math.max(...live)];
}

/** Two-panel heatmap of the potential surface: posterior mean and sd. */
export function surfaceFigure(surface: Table): string {
  const lon = numericColumn(surface, "lon");
  const lat = numericColumn(surface, "lat");
  const mean = numericColumn(surface, "mean");
  const sd = numericColumn(surface, "sd");
  const lons = [...new Set(lon)].sort((a, b) => a - b);
  const lats = [...new Set(lat)].sort((a, b) => a - b);
  const panelW = 260;
  const panelH = 220;
  const margin = 45;
  const width = margin + (panelW + 70) * 2;
  const height = panelH + 70;

  const panels = [
    { values: mean, title: "posterior mean potential", x0: margin },
    { values: sd, title: "posterior sd", x0: margin + panelW + 70 },
  ];
  const parts: string[] = [];
  const cellW = panelW / lons.length;
  const cellH = panelH / lats.length;
  for (const panel of panels) {
    const [lo, hi] = finiteExtent(panel.values);
    const span = hi - lo === 0 ? 1 : hi - lo;
    for (let k = 0; k < lon.length; k++) {
      const ci = lons.indexOf(lon[k]);
      const ri = lats.indexOf(lat[k]);
      const x = panel.x0 + ci * cellW;
      const y = 30 + (lats.length - 1 - ri) * cellH;
      const fill = isFinite(panel.values[k])
        ? viridis((panel.values[k] - lo) / span)
        : MASK_FILL;
      parts.push(el("rect", {
        x, y, width: cellW + 0.5, height: cellH + 0.5, fill,
        ...(isFinite(panel.values[k]) ? {} : { class: "masked" }),
      }));
    }
    parts.push(text(panel.x0, 18, panel.title, { "font-size": 13 }));
    parts.push(colorBar(panel.x0 + panelW + 8, 30, panelH, lo, hi));
    parts.push(text(panel.x0, 30 + panelH + 16,
      `lon ${formatTick(lons[0])}..${formatTick(lons[lons.length - 1])}, ` +
      `lat ${formatTick(lats[0])}..${formatTick(lats[lats.length - 1])}`));
  }
  return svgDocument(width, height, parts);
}

/** Truth plus both scenarios' posterior bands over the time domain. */
export function bandFigure(band: Table): string {
  const t = numericColumn(band, "t");
  const truth = numericColumn(band, "truth");
  const series = [
    { key: "plain", color: "#c23b22", label: "no weights" },
    { key: "weighted", color: "#2c6fbb", label: "composite weights" },
  ];
  const width = 640;
  const height = 360;
  const m = { left: 55, right: 15, top: 30, bottom: 40 };
  const all: number[] = [...truth];
  for (const s of series) {
    all.push(...numericColumn(band, `${s.key}_lower`), ...numericColumn(band, `${s.key}_upper`));
  }
  const [yLo, yHi] = finiteExtent(all);
  const pad = 0.05 * (yHi - yLo || 1);
  const sx = linearScale([t[0], t[t.length - 1]], [m.left, width - m.right]);
  const sy = linearScale([yLo - pad, yHi + pad], [height - m.bottom, m.top]);

  const parts: string[] = [];
  for (const tick of ticks(yLo, yHi)) {
    parts.push(el("line", {
      x1: m.left, x2: width - m.right, y1: sy(tick), y2: sy(tick),
      stroke: "#eee",
    }));
    parts.push(text(6, sy(tick) + 4, formatTick(tick)));
  }
  for (const tick of ticks(t[0], t[t.length - 1], 8)) {
    parts.push(text(sx(tick) - 4, height - m.bottom + 16, formatTick(tick)));
  }
  for (const s of series) {
    const lower = numericColumn(band, `${s.key}_lower`);
    const upper = numericColumn(band, `${s.key}_upper`);
    const meanCol = numericColumn(band, `${s.key}_mean`);
    const ribbon = [
      ...t.map((v, k) => `${sx(v)},${sy(upper[k])}`),
      ...t.map((v, k) => `${sx(t[t.length - 1 - k])},${sy(lower[t.length - 1 - k])}`),
    ].join(" ");
    parts.push(el("polygon", { points: ribbon, fill: s.color, opacity: 0.18 }));
    parts.push(el("polyline", {
      points: t.map((v, k) => `${sx(v)},${sy(meanCol[k])}`).join(" "),
      fill: "none", stroke: s.color, "stroke-width": 1.8,
    }));
  }
  parts.push(el("polyline", {
    points: t.map((v, k) => `${sx(v)},${sy(truth[k])}`).join(" "),
    fill: "none", stroke: "black", "stroke-width": 1.6, "stroke-dasharray": "4 3",
  }));
  parts.push(text(m.left, 18, "potential over time: truth (dashed) with 95% bands",
    { "font-size": 13 }));
  parts.push(text(width - 230, 18, "no weights", { fill: "#c23b22" }));
  parts.push(text(width - 130, 18, "composite weights", { fill: "#2c6fbb" }));
  parts.push(text(width / 2, height - 8, "t"));
  return svgDocument(width, height, parts);
}

/** Posterior-mean composite weight per time pair; dt=0 diagonal masked. */
export function weightMatrixFigure(matrix: Table): string {
  const labels = matrix.header.slice(1);
  const n = matrix.rows.length;
  const cell = Math.max(14, Math.min(26, Math.floor(360 / n)));
  const m = { left: 60, top: 40 };
  const width = m.left + n * cell + 80;
  const height = m.top + n * cell + 30;
  const parts: string[] = [];
  for (let r = 0; r < n; r++) {
    for (let c = 0; c < n; c++) {
      const value = Number(matrix.rows[r][c + 1]);
      const masked = r === c;
      parts.push(el("rect", {
        x: m.left + c * cell, y: m.top + r * cell,
        width: cell - 1, height: cell - 1,
        fill: masked ? MASK_FILL : viridis(value),
        ...(masked ? { class: "masked" } : {}),
      }));
    }
    if (n <= 20 || r % 2 === 0) {
      parts.push(text(m.left - 26, m.top + r * cell + cell / 2 + 4, labels[r] ?? String(r)));
      parts.push(text(m.left + r * cell + 2, m.top - 6, labels[r] ?? String(r),
        { "font-size": 9 }));
    }
  }
  parts.push(text(m.left, 16, "posterior mean composite weight by time pair (diagonal: dt=0, not regressed)",
    { "font-size": 13 }));
  parts.push(colorBar(m.left + n * cell + 12, m.top, n * cell, 0, 1));
  return svgDocument(width, height, parts);
}

export interface TraceSeries {
  label: string;
  chains: number[][];
}

/** Small-multiple trace plots, one panel per parameter. */
export function traceFigure(series: TraceSeries[]): string {
  const panelW = 300;
  const panelH = 110;
  const cols = 2;
  const rows = Math.ceil(series.length / cols);
  const m = { left: 50, top: 30, gapX: 60, gapY: 36 };
  const width = m.left + cols * (panelW + m.gapX);
  const height = m.top + rows * (panelH + m.gapY);
  const palette = ["#2c6fbb", "#c23b22", "#3a9b4e", "#8a5cb8"];
  const parts: string[] = [];
  series.forEach((s, idx) => {
    const x0 = m.left + (idx % cols) * (panelW + m.gapX);
    const y0 = m.top + Math.floor(idx / cols) * (panelH + m.gapY);
    const values = s.chains.flat();
    const [lo, hi] = finiteExtent(values);
    const pad = 0.05 * (hi - lo || 1);
    const sy = linearScale([lo - pad, hi + pad], [y0 + panelH, y0]);
    parts.push(el("rect", {
      x: x0, y: y0, width: panelW, height: panelH,
      fill: "none", stroke: "#ccc",
    }));
    s.chains.forEach((chain, c) => {
      const sx = linearScale([0, chain.length - 1], [x0, x0 + panelW]);
      parts.push(el("polyline", {
        points: chain.map((v, k) => `${sx(k)},${sy(v)}`).join(" "),
        fill: "none", stroke: palette[c % palette.length],
        "stroke-width": 0.8, opacity: 0.85,
      }));
    });
    parts.push(text(x0, y0 - 6, s.label, { "font-size": 12 }));
    parts.push(text(x0 - 44, y0 + 10, formatTick(hi), { "font-size": 9 }));
    parts.push(text(x0 - 44, y0 + panelH, formatTick(lo), { "font-size": 9 }));
  });
  parts.push(text(m.left, 14, "posterior traces (thinned, post burn-in)", { "font-size": 13 }));
  return svgDocument(width, height, parts);
}

/** CRPS comparison table as an HTML fragment. */
export function scoresTableHtml(scores: Table): string {
  const mi = columnIndex(scores, "model");
  const ci = columnIndex(scores, "crps");
  const di = columnIndex(scores, "draws_used");
  const rows = scores.rows
    .map((r) => {
      const crps = Number(r[ci]);
      return `<tr><td>${r[mi]}</td><td>${crps.toPrecision(6)}</td><td>${r[di]}</td></tr>`;
    })
    .join("\n");
  return [
    "<table>",
    "<thead><tr><th>model</th><th>mean CRPS</th><th>draws used</th></tr></thead>",
    `<tbody>\n${rows}\n</tbody>`,
    "</table>",
  ].join("\n");
}
