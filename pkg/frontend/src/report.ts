import { existsSync, mkdirSync, readFileSync, writeFileSync } from "fs";
import { join } from "path";

import { Table, readCsv } from "./csv";
import {
  TraceSeries, bandFigure, scoresTableHtml, surfaceFigure, traceFigure,
  weightMatrixFigure,
} from "./figures";

export type Format = "svg" | "png";

export interface RenderResult {
  written: string[];
  skipped: string[];
}

interface Section {
  id: string;
  title: string;
  note?: string;
  figure?: string; // file name of the rendered image
  html?: string;   // inline fragment (tables)
}

/** Traces are drawn for every scalar block plus the leading vector columns. */
const TRACE_FILES = ["beta", "gamma", "sigma2_y", "sigma2_eta", "sigma2_theta", "phi"];
const MAX_TRACE_PANELS = 8;

function traceSeriesFrom(dir: string): TraceSeries[] {
  const out: TraceSeries[] = [];
  for (const name of TRACE_FILES) {
    const path = join(dir, `${name}.csv`);
    if (!existsSync(path)) continue;
    const table = readCsv(path);
    const chainCol = table.header.indexOf("chain");
    const chains = [...new Set(table.rows.map((r) => r[chainCol]))];
    for (let col = 2; col < table.header.length; col++) {
      if (out.length >= MAX_TRACE_PANELS) return out;
      out.push({
        label: table.header[col],
        chains: chains.map((c) =>
          table.rows.filter((r) => r[chainCol] === c).map((r) => Number(r[col]))),
      });
    }
  }
  return out;
}

function writeFigure(outDir: string, name: string, svg: string, format: Format): string {
  if (format === "svg") {
    const file = `${name}.svg`;
    writeFileSync(join(outDir, file), svg);
    return file;
  }
  // lazy import so svg-only use works even without the native rasterizer
  const { Resvg } = require("@resvg/resvg-js");
  const png = new Resvg(svg).render().asPng();
  const file = `${name}.png`;
  writeFileSync(join(outDir, file), png);
  return file;
}

/** Render every recognized artifact in `inDir` into figures plus an index. */
export function render(inDir: string, outDir: string, format: Format = "svg"): RenderResult {
  mkdirSync(outDir, { recursive: true });
  const result: RenderResult = { written: [], skipped: [] };
  const sections: Section[] = [];

  if (!existsSync(join(inDir, "run_meta.json"))) {
    const html = indexHtml([{
      id: "empty", title: "Artifacts",
      note: "no artifacts found (run_meta.json missing); nothing to render",
    }], inDir);
    writeFileSync(join(outDir, "index.html"), html);
    result.written.push("index.html");
    result.skipped.push("all sections: no run_meta.json");
    return result;
  }

  const trySection = (
    id: string, title: string, artifact: string,
    build: (t: Table) => string,
  ) => {
    const path = join(inDir, artifact);
    if (!existsSync(path)) {
      sections.push({ id, title, note: `${artifact} not present; section skipped` });
      result.skipped.push(artifact);
      return;
    }
    try {
      const figure = writeFigure(outDir, id, build(readCsv(path)), format);
      sections.push({ id, title, figure });
      result.written.push(figure);
    } catch (err) {
      sections.push({ id, title, note: `failed to render ${artifact}: ${err}` });
      result.skipped.push(`${artifact} (${err})`);
    }
  };

  trySection("surface", "Potential surface (posterior mean and sd)",
    "surface.csv", surfaceFigure);
  trySection("potential_band", "Potential over time with 95% bands",
    join("sim", "potential_band.csv"), bandFigure);
  trySection("weight_matrix", "Posterior composite weights by time pair",
    join("sim", "weight_matrix.csv"), weightMatrixFigure);

  const traces = traceSeriesFrom(inDir);
  if (traces.length > 0) {
    const figure = writeFigure(outDir, "traces", traceFigure(traces), format);
    sections.push({ id: "traces", title: "Chain traces", figure });
    result.written.push(figure);
  } else {
    sections.push({ id: "traces", title: "Chain traces",
      note: "no draw files present; section skipped" });
    result.skipped.push("traces");
  }

  const scoresPath = join(inDir, "scores.csv");
  if (existsSync(scoresPath)) {
    sections.push({ id: "scores", title: "CRPS model comparison",
      html: scoresTableHtml(readCsv(scoresPath)) });
  } else {
    sections.push({ id: "scores", title: "CRPS model comparison",
      note: "scores.csv not present; section skipped" });
    result.skipped.push("scores.csv");
  }

  writeFileSync(join(outDir, "index.html"), indexHtml(sections, inDir));
  result.written.push("index.html");
  return result;
}

function indexHtml(sections: Section[], inDir: string): string {
  const meta = metaSummary(inDir);
  const body = sections
    .map((s) => {
      const content = s.figure
        ? `<p><a href="${s.figure}"><img src="${s.figure}" alt="${s.id}" style="max-width:100%"/></a></p>`
        : s.html ?? `<p class="note">${s.note}</p>`;
      return `<section id="${s.id}">\n<h2>${s.title}</h2>\n${content}\n</section>`;
    })
    .join("\n");
  return `<!DOCTYPE html>
<html lang="en">
<head>
<meta charset="utf-8"/>
<title>dyadflow report</title>
<style>
body { font-family: sans-serif; margin: 2em auto; max-width: 960px; color: #222; }
table { border-collapse: collapse; }
td, th { border: 1px solid #999; padding: 4px 10px; text-align: left; }
.note { color: #777; font-style: italic; }
h1 { border-bottom: 2px solid #444; padding-bottom: 6px; }
</style>
</head>
<body>
<h1>dyadflow report</h1>
${meta}
${body}
</body>
</html>
`;
}

function metaSummary(inDir: string): string {
  const path = join(inDir, "run_meta.json");
  if (!existsSync(path)) {
    return "";
  }
  try {
    const meta = JSON.parse(readFileSync(path, "utf-8"));
    const bits = [
      meta.subcommand ? `subcommand: ${meta.subcommand}` : null,
      meta.seed !== undefined ? `seed: ${meta.seed}` : null,
      meta.n !== undefined ? `n: ${meta.n}` : null,
      meta.dyad_count !== undefined ? `dyads: ${meta.dyad_count}` : null,
    ].filter((s) => s !== null);
    return `<p class="note">${bits.join(" · ")}</p>`;
  } catch {
    return "";
  }
}
