/** Pure view-state transitions for one labeling session.
 *
 * Selection model: the first grid click marks the similar image, the second
 * marks the dissimilar one; clicking a selected image deselects it. Next is
 * allowed only with both marks set; Skip only with none. The reference can
 * never be selected, and the two marks can never coincide, so the UI cannot
 * produce an annotation the server would reject.
 */
import type { Annotation, CorpusEntry, Session } from "./api.js";

export interface SessionViewState {
  reference: CorpusEntry;
  grid: CorpusEntry[];
  selectedSimilar: string | null;
  selectedDissimilar: string | null;
  pendingCount: number;
}

export type SelectionRole = "similar" | "dissimilar" | "none";

export function freshState(session: Session, pendingCount = 0): SessionViewState {
  return {
    reference: session.reference,
    grid: session.grid,
    selectedSimilar: null,
    selectedDissimilar: null,
    pendingCount,
  };
}

/** Role the next click would assign; "none" when both marks are taken. */
export function nextSelectionRole(state: SessionViewState): SelectionRole {
  if (state.selectedSimilar === null) return "similar";
  if (state.selectedDissimilar === null) return "dissimilar";
  return "none";
}

export function toggleSelection(state: SessionViewState, id: string): SessionViewState {
  if (id === state.reference.id || !state.grid.some((e) => e.id === id)) {
    return state;
  }
  if (state.selectedSimilar === id) {
    return { ...state, selectedSimilar: null };
  }
  if (state.selectedDissimilar === id) {
    return { ...state, selectedDissimilar: null };
  }
  const role = nextSelectionRole(state);
  if (role === "similar") {
    return { ...state, selectedSimilar: id };
  }
  if (role === "dissimilar") {
    return { ...state, selectedDissimilar: id };
  }
  return state;
}

export function canNext(state: SessionViewState): boolean {
  return state.selectedSimilar !== null && state.selectedDissimilar !== null;
}

export function canSkip(state: SessionViewState): boolean {
  return state.selectedSimilar === null && state.selectedDissimilar === null;
}

/** The annotation for the current selections; null unless both are set. */
export function toAnnotation(state: SessionViewState): Annotation | null {
  if (!canNext(state)) return null;
  return {
    referenceId: state.reference.id,
    similarId: state.selectedSimilar as string,
    dissimilarId: state.selectedDissimilar as string,
    timestamp: Date.now() / 1000,
  };
}
