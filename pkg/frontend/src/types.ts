/** JSON document shapes of the analysis service. These mirror the server
 * schemas one-to-one; the client never reshapes numeric payloads. */

export interface ParameterDoc {
  name: string;
  unit: string;
}

export interface NodeDoc {
  id: string;
  kind: "concern" | "variant-group" | "variant";
  rule: "mandatory" | "optional" | "alternative" | "or";
  children: string[];
  parameter?: ParameterDoc;
}

export interface ConstraintDoc {
  kind: "implies" | "excludes";
  antecedent: string;
  consequents: string[];
}

export interface ModelDoc {
  nodes: NodeDoc[];
  constraints: ConstraintDoc[];
}

export interface ViolationDoc {
  rule: string;
  nodes: string[];
  message: string;
}

export interface PropagateResponse {
  selected: string[];
  auto_included: string[];
  open_choices: string[];
  bindings?: Record<string, string>;
}

export interface ConflictResponse {
  error: string;
  violations: ViolationDoc[];
}

export interface SeriesDoc {
  label: string;
  points: [number, number][];
}

export interface CrossoverDoc {
  param: number;
  below: string;
  above: string;
}

export interface CrossoverPairDoc {
  a: string;
  b: string;
  crossovers: CrossoverDoc[];
}

export interface CompareResponse {
  series: SeriesDoc[];
  crossovers?: CrossoverPairDoc[];
}

export interface IntervalDoc {
  lo: number;
  hi: number;
  winner: string;
}

export interface PartitionDoc {
  domain: [number, number];
  intervals: IntervalDoc[];
}

export interface PartitionResponse {
  partition: PartitionDoc;
  simplified?: PartitionDoc;
}

export interface ConditionDoc {
  op: "<=" | ">" | "<" | "range";
  threshold?: number;
  lo?: number;
  hi?: number;
}

export interface ActionDoc {
  kind: string;
  target?: string;
  parts?: ActionDoc[];
}

export interface RuleDoc {
  id: string;
  priority: number;
  event: string;
  condition: ConditionDoc;
  action: ActionDoc;
  guard?: Record<string, string>;
}

export interface ChainDoc {
  stages: { concern: string; variant?: string; coupling?: string }[];
  label?: string;
}

export interface RunDescriptor {
  id: string;
  kind: string;
  status: "pending" | "done" | "failed";
  artifacts?: SimulationResultDoc[];
  error?: string;
}

export interface LedgerEntryDoc {
  seq: number;
  config: string[];
  energy_j: Record<string, number>;
  overhead_j: number;
}

export interface AdaptationEntryDoc {
  seq: number;
  rule: string;
  old: string[];
  new: string[];
  overhead_j: number;
}

export interface SimulationResultDoc {
  final_config: string[];
  overflow_seq: number | null;
  trace: { events: number; capacity_mb: number; total_mb: number };
  totals: {
    by_concern: Record<string, number>;
    monitoring_overhead_j: number;
    reconfiguration_overhead_j: number;
    overhead_j: number;
    grand_total_j: number;
  };
  ledger: {
    entries: LedgerEntryDoc[];
    totals: {
      by_concern: Record<string, number>;
      overhead_j: number;
      grand_total_j: number;
    };
  };
  adaptation_log: {
    entries: AdaptationEntryDoc[];
    failures: { seq: number; rule: string; error: string }[];
  };
}

export interface WorkloadPhaseDoc {
  count: number;
  size?: number;
  uniform?: [number, number];
}

export interface WorkloadDoc {
  phases?: WorkloadPhaseDoc[];
  events?: { seq: number; size_mb: number }[];
  seed?: number;
  capacity_mb?: number;
}

export interface SimulationRequest {
  workload: WorkloadDoc;
  config: { selected: string[] };
  rules?: RuleDoc[];
  params?: { window?: number; monitor_cost_j?: number; reconfig_cost_j?: number };
}
