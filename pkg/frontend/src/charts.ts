/** Chart view state: server series verbatim, crossover markers, partition
 * band overlay. The log-scale flag only changes how pixels are computed,
 * never the stored values. */

import type {
  CrossoverPairDoc,
  IntervalDoc,
  PartitionDoc,
  SeriesDoc,
} from "./types.js";

export interface CrossoverMarker {
  param: number;
  below: string;
  above: string;
}

export interface ChartViewState {
  series: SeriesDoc[];
  markers: CrossoverMarker[];
  bands: IntervalDoc[];
  grid: number[];
  logScale: boolean;
}

export function buildChartState(
  series: SeriesDoc[],
  crossoverPairs: CrossoverPairDoc[] = [],
  partition: PartitionDoc | null = null,
  logScale = false,
): ChartViewState {
  const markers: CrossoverMarker[] = [];
  for (const pair of crossoverPairs) {
    for (const crossover of pair.crossovers) {
      markers.push({
        param: crossover.param,
        below: crossover.below,
        above: crossover.above,
      });
    }
  }
  markers.sort((a, b) => a.param - b.param);
  return {
    series,
    markers,
    bands: partition ? [...partition.intervals] : [],
    grid: series.length ? series[0].points.map(([p]) => p) : [],
    logScale,
  };
}

export function toggleLogScale(state: ChartViewState): ChartViewState {
  return { ...state, logScale: !state.logScale };
}

const PALETTE = ["#2c7fb8", "#d95f0e", "#31a354", "#756bb1", "#636363"];

/** Render the chart as a standalone SVG string. */
export function chartSvg(state: ChartViewState, width = 720, height = 360): string {
  const pad = { left: 56, right: 12, top: 12, bottom: 28 };
  const innerW = width - pad.left - pad.right;
  const innerH = height - pad.top - pad.bottom;
  const params = state.series.flatMap((s) => s.points.map(([p]) => p));
  const values = state.series.flatMap((s) => s.points.map(([, v]) => v));
  if (!params.length) return `<svg width="${width}" height="${height}"></svg>`;

  const pMin = Math.min(...params);
  const pMax = Math.max(...params);
  const vMaxRaw = Math.max(...values);
  const vMinRaw = Math.min(...values);
  const yVal = (v: number) => (state.logScale ? Math.log10(Math.max(v, 1e-9)) : v);
  const vMin = state.logScale ? yVal(Math.max(vMinRaw, 1e-9)) : 0;
  const vMax = yVal(vMaxRaw);
  const x = (p: number) => pad.left + ((p - pMin) / (pMax - pMin || 1)) * innerW;
  const y = (v: number) =>
    pad.top + innerH - ((yVal(v) - vMin) / (vMax - vMin || 1)) * innerH;

  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}">`,
  ];
  for (const band of state.bands) {
    parts.push(
      `<rect x="${x(band.lo).toFixed(1)}" y="${pad.top}" ` +
      `width="${(x(band.hi) - x(band.lo)).toFixed(1)}" height="${innerH}" ` +
      `fill="#eef7ee" data-winner="${band.winner}"><title>${band.winner}</title></rect>`,
    );
  }
  for (const marker of state.markers) {
    const mx = x(marker.param).toFixed(1);
    parts.push(
      `<line x1="${mx}" y1="${pad.top}" x2="${mx}" y2="${pad.top + innerH}" ` +
      `stroke="#999" stroke-dasharray="4 3" data-crossover="${marker.param}">` +
      `<title>${marker.below} below, ${marker.above} above</title></line>`,
    );
  }
  state.series.forEach((series, index) => {
    const path = series.points
      .map(([p, v], i) => `${i ? "L" : "M"}${x(p).toFixed(1)},${y(v).toFixed(1)}`)
      .join(" ");
    parts.push(
      `<path d="${path}" fill="none" stroke="${PALETTE[index % PALETTE.length]}" ` +
      `stroke-width="1.8" data-series="${series.label}"/>`,
    );
  });
  parts.push("</svg>");
  return parts.join("");
}
