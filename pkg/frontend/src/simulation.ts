/** Simulation launch/poll flow and the timeline view model.
 *
 * Displayed totals are taken verbatim from the result document: the UI
 * renders `String(value)` of the server's numbers, so what the API returned
 * is what the user reads, digit for digit.
 */

import { ApiClient } from "./api.js";
import type {
  RunDescriptor,
  SimulationRequest,
  SimulationResultDoc,
} from "./types.js";

export interface TimelinePoint {
  seq: number;
  cumulativeJ: number;
}

export interface ReconfigurationMarker {
  seq: number;
  rule: string;
  configuration: string[];
}

export interface TimelineViewState {
  points: TimelinePoint[];
  markers: ReconfigurationMarker[];
  overflowSeq: number | null;
  /** label -> exact decimal string of the API value */
  totals: Record<string, string>;
}

export function buildTimeline(result: SimulationResultDoc): TimelineViewState {
  const points: TimelinePoint[] = [];
  let cumulative = 0;
  for (const entry of result.ledger.entries) {
    for (const concern of Object.keys(entry.energy_j).sort()) {
      cumulative += entry.energy_j[concern];
    }
    cumulative += entry.overhead_j;
    points.push({ seq: entry.seq, cumulativeJ: cumulative });
  }
  const markers = result.adaptation_log.entries.map((entry) => ({
    seq: entry.seq,
    rule: entry.rule,
    configuration: entry.new,
  }));
  const totals: Record<string, string> = {
    grand_total_j: String(result.totals.grand_total_j),
    overhead_j: String(result.totals.overhead_j),
  };
  for (const concern of Object.keys(result.totals.by_concern).sort()) {
    totals[concern] = String(result.totals.by_concern[concern]);
  }
  return {
    points,
    markers,
    overflowSeq: result.overflow_seq,
    totals,
  };
}

export interface LaunchOutcome {
  descriptor: RunDescriptor;
  result: SimulationResultDoc | null;
  timeline: TimelineViewState | null;
  error: string | null;
}

/** POST the simulation, poll once a second, build the timeline when done. */
export async function launchSimulation(
  api: ApiClient,
  request: SimulationRequest,
  intervalMs = 1000,
  sleep?: (ms: number) => Promise<void>,
): Promise<LaunchOutcome> {
  const submitted = await api.submitSimulation(request);
  const descriptor = await api.pollSimulation(submitted.id, intervalMs, sleep);
  if (descriptor.status === "failed") {
    return { descriptor, result: null, timeline: null, error: descriptor.error ?? "failed" };
  }
  const result = descriptor.artifacts?.[0] ?? null;
  return {
    descriptor,
    result,
    timeline: result ? buildTimeline(result) : null,
    error: null,
  };
}

/** Cumulative-energy timeline as a standalone SVG string. */
export function timelineSvg(state: TimelineViewState, width = 720, height = 240): string {
  const pad = { left: 64, right: 12, top: 10, bottom: 24 };
  const innerW = width - pad.left - pad.right;
  const innerH = height - pad.top - pad.bottom;
  if (!state.points.length) {
    return `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}">` +
      `<line x1="${pad.left}" y1="${pad.top + innerH}" x2="${width - pad.right}" ` +
      `y2="${pad.top + innerH}" stroke="#ccc"/></svg>`;
  }
  const maxSeq = state.points[state.points.length - 1].seq;
  const maxJ = state.points[state.points.length - 1].cumulativeJ;
  const x = (seq: number) => pad.left + (seq / (maxSeq || 1)) * innerW;
  const y = (j: number) => pad.top + innerH - (j / (maxJ || 1)) * innerH;
  const parts = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}">`,
  ];
  const path = state.points
    .map((p, i) => `${i ? "L" : "M"}${x(p.seq).toFixed(1)},${y(p.cumulativeJ).toFixed(1)}`)
    .join(" ");
  parts.push(`<path d="${path}" fill="none" stroke="#2c7fb8" stroke-width="1.8"/>`);
  for (const marker of state.markers) {
    const mx = x(marker.seq).toFixed(1);
    parts.push(
      `<line x1="${mx}" y1="${pad.top}" x2="${mx}" y2="${pad.top + innerH}" ` +
      `stroke="#d62728" data-reconfiguration="${marker.seq}">` +
      `<title>#${marker.seq} ${marker.rule}</title></line>`,
    );
  }
  if (state.overflowSeq !== null) {
    const ox = x(state.overflowSeq).toFixed(1);
    parts.push(
      `<line x1="${ox}" y1="${pad.top}" x2="${ox}" y2="${pad.top + innerH}" ` +
      `stroke="#000" stroke-width="2" data-overflow="${state.overflowSeq}"/>`,
    );
  }
  parts.push("</svg>");
  return parts.join("");
}
