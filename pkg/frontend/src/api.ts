/** Typed client for the analysis service. Every number the UI shows comes
 * back through here untouched. */

import type {
  ChainDoc,
  CompareResponse,
  ConflictResponse,
  ModelDoc,
  PartitionDoc,
  PartitionResponse,
  PropagateResponse,
  RuleDoc,
  RunDescriptor,
  SimulationRequest,
  ViolationDoc,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  status: number;
  violations: ViolationDoc[];

  constructor(status: number, message: string, violations: ViolationDoc[] = []) {
    super(message);
    this.status = status;
    this.violations = violations;
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let message = `${response.status}`;
  let violations: ViolationDoc[] = [];
  try {
    const body = (await response.json()) as ConflictResponse;
    message = body.error ?? message;
    violations = body.violations ?? [];
  } catch {
    /* non-JSON error body */
  }
  return new ApiError(response.status, message, violations);
}

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async get<T>(path: string): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path);
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as T;
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as T;
  }

  getModel(): Promise<ModelDoc> {
    return this.get("/model");
  }

  propagate(selected: string[]): Promise<PropagateResponse> {
    return this.post("/configurations/propagate", { selected });
  }

  validate(selected: string[]): Promise<{ valid: boolean; violations: ViolationDoc[] }> {
    return this.post("/configurations/validate", { selected });
  }

  compare(chains: ChainDoc[], grid: number[]): Promise<CompareResponse> {
    return this.post("/analysis/compare", { chains, grid });
  }

  partition(chains: ChainDoc[], grid: number[], simplify = false): Promise<PartitionResponse> {
    return this.post("/analysis/partition", { chains, grid, simplify });
  }

  deriveRules(partition: PartitionDoc, guard?: Record<string, string>,
              priorityBase = 1): Promise<{ rules: RuleDoc[] }> {
    return this.post("/rules/derive", {
      partition, guard, priority_base: priorityBase,
    });
  }

  submitSimulation(request: SimulationRequest): Promise<RunDescriptor> {
    return this.post("/simulations", request);
  }

  getSimulation(id: string): Promise<RunDescriptor> {
    return this.get(`/simulations/${id}`);
  }

  /** Poll a run every `intervalMs` until it leaves pending. */
  async pollSimulation(
    id: string,
    intervalMs = 1000,
    sleep: (ms: number) => Promise<void> = (ms) => new Promise((r) => setTimeout(r, ms)),
  ): Promise<RunDescriptor> {
    for (;;) {
      const descriptor = await this.getSimulation(id);
      if (descriptor.status !== "pending") return descriptor;
      await sleep(intervalMs);
    }
  }
}
