/** Selection state driven entirely by the propagate endpoint.
 *
 * The store tracks the user's explicit picks; everything else (closure,
 * auto-inclusions, open choices, conflicts) mirrors the last server response
 * verbatim. No constraint logic lives on the client. Propagation requests
 * are serialized latest-wins so a stale closure can never overwrite a newer
 * one.
 */

import { ApiClient, ApiError } from "./api.js";
import type { PropagateResponse, ViolationDoc } from "./types.js";

export interface SelectionViewState {
  /** ids the user clicked */
  picks: string[];
  /** full closure from the server */
  selected: string[];
  /** closure minus picks, shown highlighted */
  autoIncluded: string[];
  /** unbound groups reported by the server */
  openChoices: string[];
  /** violations / conflict explanation of the last rejected interaction */
  violations: ViolationDoc[];
  conflict: string | null;
}

export function emptySelection(): SelectionViewState {
  return {
    picks: [],
    selected: [],
    autoIncluded: [],
    openChoices: [],
    violations: [],
    conflict: null,
  };
}

export class SelectionStore {
  private state: SelectionViewState = emptySelection();
  private requestCounter = 0;
  private listeners: ((state: SelectionViewState) => void)[] = [];

  constructor(private api: ApiClient) {}

  get current(): SelectionViewState {
    return this.state;
  }

  subscribe(listener: (state: SelectionViewState) => void): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  /** Toggle a node: deselect when picked, otherwise pick and re-propagate. */
  async toggle(nodeId: string): Promise<SelectionViewState> {
    const picks = this.state.picks.includes(nodeId)
      ? this.state.picks.filter((id) => id !== nodeId)
      : [...this.state.picks, nodeId];
    return this.setPicks(picks);
  }

  /** Replace the pick set (used by URL restore) and propagate. */
  async setPicks(picks: string[]): Promise<SelectionViewState> {
    const token = ++this.requestCounter;
    try {
      const response = await this.api.propagate(picks);
      if (token !== this.requestCounter) return this.state; // stale, dropped
      this.state = this.fromResponse(picks, response);
    } catch (error) {
      if (token !== this.requestCounter) return this.state;
      if (error instanceof ApiError && error.status === 422) {
        // conflicting pick: keep the previous selection, surface the report
        this.state = {
          ...this.state,
          violations: error.violations,
          conflict: error.message,
        };
      } else {
        throw error;
      }
    }
    this.emit();
    return this.state;
  }

  private fromResponse(picks: string[], response: PropagateResponse): SelectionViewState {
    return {
      picks,
      selected: response.selected,
      autoIncluded: response.auto_included,
      openChoices: response.open_choices,
      violations: [],
      conflict: null,
    };
  }
}
