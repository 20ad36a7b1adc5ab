import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { buildTimeline, launchSimulation, timelineSvg } from "../src/simulation.js";
import type { SimulationResultDoc } from "../src/types.js";
import { MockFetch } from "./mockFetch.js";

const RESULT: SimulationResultDoc = {
  final_config: ["Communication", "Compression", "Compression.Speex"],
  overflow_seq: null,
  trace: { events: 3, capacity_mb: 4096, total_mb: 1028 },
  totals: {
    by_concern: { Communication: 321.79199999999997, Compression: 140.8 },
    monitoring_overhead_j: 0.03,
    reconfiguration_overhead_j: 2,
    overhead_j: 2.03,
    grand_total_j: 464.62199999999996,
  },
  ledger: {
    entries: [
      { seq: 1, config: ["a"], energy_j: { Compression: 70.4 }, overhead_j: 0.01 },
      { seq: 2, config: ["a"], energy_j: { Compression: 70.4 }, overhead_j: 0.01 },
      {
        seq: 3, config: ["b"],
        energy_j: { Communication: 321.79199999999997, Compression: 0 },
        overhead_j: 0.01,
      },
    ],
    totals: {
      by_concern: { Communication: 321.79199999999997, Compression: 140.8 },
      overhead_j: 0.03,
      grand_total_j: 462.62199999999996,
    },
  },
  adaptation_log: {
    entries: [
      { seq: 3, rule: "local-storage-almost-full", old: ["a"], new: ["b"], overhead_j: 2 },
    ],
    failures: [],
  },
};

describe("timeline view model", () => {
  it("accumulates ledger entries and marks reconfigurations", () => {
    const timeline = buildTimeline(RESULT);
    expect(timeline.points.map((p) => p.seq)).toEqual([1, 2, 3]);
    expect(timeline.points[0].cumulativeJ).toBeCloseTo(70.41, 10);
    expect(timeline.points[2].cumulativeJ).toBeCloseTo(462.622, 9);
    expect(timeline.markers).toEqual([
      { seq: 3, rule: "local-storage-almost-full", configuration: ["b"] },
    ]);
    expect(timeline.overflowSeq).toBeNull();
  });

  it("renders totals as the exact decimal strings of the API values", () => {
    const timeline = buildTimeline(RESULT);
    expect(timeline.totals.grand_total_j).toBe(String(RESULT.totals.grand_total_j));
    expect(timeline.totals.Communication).toBe(
      String(RESULT.totals.by_concern.Communication));
    expect(timeline.totals.overhead_j).toBe(String(RESULT.totals.overhead_j));
  });

  it("svg shows one reconfiguration line per marker and the energy path", () => {
    const svg = timelineSvg(buildTimeline(RESULT));
    expect(svg.match(/data-reconfiguration/g)).toHaveLength(1);
    expect(svg).toContain("local-storage-almost-full");
  });

  it("empty ledger renders a flat zero baseline", () => {
    const empty: SimulationResultDoc = {
      ...RESULT,
      ledger: { entries: [], totals: { by_concern: {}, overhead_j: 0, grand_total_j: 0 } },
      adaptation_log: { entries: [], failures: [] },
    };
    const timeline = buildTimeline(empty);
    expect(timeline.points).toEqual([]);
    expect(timelineSvg(timeline)).toContain("<line");
  });
});

describe("launch and poll", () => {
  it("polls once a second until done and builds the timeline", async () => {
    let polls = 0;
    const mock = new MockFetch([
      {
        match: (url) => url === "/simulations",
        response: { id: "r1", kind: "simulation", status: "pending" },
      },
      {
        match: (url) => url === "/simulations/r1",
        response: () => {
          polls += 1;
          return polls < 3
            ? { id: "r1", kind: "simulation", status: "pending" }
            : { id: "r1", kind: "simulation", status: "done", artifacts: [RESULT] };
        },
      },
    ]);
    const api = new ApiClient("", mock.fetch);
    const waits: number[] = [];
    const outcome = await launchSimulation(
      api,
      {
        workload: { phases: [{ count: 3, size: 4 }], seed: 1 },
        config: { selected: ["Store.Local", "Compression.LAME"] },
      },
      1000,
      async (ms) => { waits.push(ms); },
    );
    expect(waits).toEqual([1000, 1000]); // two pending polls, 1 s apart
    expect(outcome.descriptor.status).toBe("done");
    expect(outcome.timeline?.markers).toHaveLength(1);
    expect(outcome.error).toBeNull();
  });

  it("propagates run failure as an error message", async () => {
    const mock = new MockFetch([
      {
        match: (url) => url === "/simulations",
        response: { id: "r2", kind: "simulation", status: "pending" },
      },
      {
        match: (url) => url === "/simulations/r2",
        response: { id: "r2", kind: "simulation", status: "failed", error: "boom" },
      },
    ]);
    const api = new ApiClient("", mock.fetch);
    const outcome = await launchSimulation(
      api,
      { workload: { phases: [] }, config: { selected: [] } },
      1000,
      async () => {},
    );
    expect(outcome.error).toBe("boom");
    expect(outcome.timeline).toBeNull();
  });
});
