/** DOM shell for the labeling screen: reference on top, full image grid
 * below, mark one similar and one dissimilar, Next to save and continue,
 * Skip to continue without saving, Submit to finish. */
import { ApiClient, ApiError } from "./api.js";
import {
  SessionViewState,
  canNext,
  canSkip,
  freshState,
  nextSelectionRole,
  toAnnotation,
  toggleSelection,
} from "./state.js";

export class PairStudioApp {
  private state: SessionViewState | null = null;
  private posting = false;
  private errorText: string | null = null;
  private submittedCount: number | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
  ) {}

  async start(): Promise<void> {
    await this.loadSession(0);
  }

  /** Current state, for scripted tests. */
  get viewState(): SessionViewState | null {
    return this.state;
  }

  private async loadSession(pendingCount: number): Promise<void> {
    try {
      const session = await this.api.getSession();
      this.state = freshState(session, pendingCount);
      this.errorText = null;
    } catch (err) {
      this.errorText = err instanceof Error ? err.message : String(err);
    }
    this.render();
  }

  async clickImage(id: string): Promise<void> {
    if (!this.state || this.posting) return;
    this.state = toggleSelection(this.state, id);
    this.render();
  }

  async clickNext(): Promise<void> {
    if (!this.state || this.posting || !canNext(this.state)) return;
    const annotation = toAnnotation(this.state);
    if (!annotation) return;
    this.posting = true;
    this.render();
    try {
      await this.api.postAnnotation(annotation);
    } catch (err) {
      // keep the current selections so nothing is silently lost
      this.posting = false;
      this.errorText = err instanceof Error ? err.message : String(err);
      this.render();
      return;
    }
    this.posting = false;
    await this.loadSession(this.state.pendingCount + 1);
  }

  async clickSkip(): Promise<void> {
    if (!this.state || this.posting || !canSkip(this.state)) return;
    await this.loadSession(this.state.pendingCount);
  }

  async clickSubmit(): Promise<void> {
    if (this.posting) return;
    try {
      const result = await this.api.submit();
      this.submittedCount = result.pairCount;
      this.errorText = null;
    } catch (err) {
      this.errorText = err instanceof Error ? err.message : String(err);
    }
    this.render();
  }

  async retry(): Promise<void> {
    await this.loadSession(this.state?.pendingCount ?? 0);
  }

  render(): void {
    const doc = this.root.ownerDocument;
    this.root.textContent = "";

    const banner = doc.createElement("div");
    banner.id = "error-banner";
    if (this.errorText) {
      banner.className = "error";
      banner.textContent = this.errorText;
      const retry = doc.createElement("button");
      retry.id = "retry";
      retry.textContent = "Retry";
      retry.addEventListener("click", () => void this.retry());
      banner.appendChild(retry);
    }
    this.root.appendChild(banner);

    if (this.submittedCount !== null) {
      const done = doc.createElement("p");
      done.id = "submitted-count";
      done.textContent = `Submitted ${this.submittedCount} labeled pairs.`;
      this.root.appendChild(done);
    }

    if (!this.state) return;
    const state = this.state;

    const header = doc.createElement("header");
    const ref = doc.createElement("img");
    ref.id = "reference";
    ref.src = this.api.imageUrl(state.reference);
    ref.alt = `reference ${state.reference.id}`;
    header.appendChild(ref);

    const hint = doc.createElement("p");
    hint.id = "mode-hint";
    const role = nextSelectionRole(state);
    hint.textContent =
      role === "none"
        ? "Both images marked. Next saves this pair of labels."
        : `Click the ${role} image.`;
    header.appendChild(hint);

    const pending = doc.createElement("p");
    pending.id = "pending-count";
    pending.textContent = `${state.pendingCount} annotations this session`;
    header.appendChild(pending);
    this.root.appendChild(header);

    const grid = doc.createElement("div");
    grid.id = "grid";
    for (const entry of state.grid) {
      const cell = doc.createElement("button");
      cell.className = "cell";
      cell.dataset.id = entry.id;
      if (entry.id === state.selectedSimilar) cell.classList.add("similar");
      if (entry.id === state.selectedDissimilar) cell.classList.add("dissimilar");
      const img = doc.createElement("img");
      img.src = this.api.imageUrl(entry);
      img.alt = entry.id;
      img.loading = "lazy";
      cell.appendChild(img);
      cell.addEventListener("click", () => void this.clickImage(entry.id));
      grid.appendChild(cell);
    }
    this.root.appendChild(grid);

    const controls = doc.createElement("div");
    controls.id = "controls";
    const next = doc.createElement("button");
    next.id = "next";
    next.textContent = "Next";
    next.disabled = this.posting || !canNext(state);
    next.addEventListener("click", () => void this.clickNext());
    const skip = doc.createElement("button");
    skip.id = "skip";
    skip.textContent = "Skip";
    skip.disabled = this.posting || !canSkip(state);
    skip.addEventListener("click", () => void this.clickSkip());
    const submit = doc.createElement("button");
    submit.id = "submit";
    submit.textContent = "Submit";
    submit.disabled = this.posting;
    submit.addEventListener("click", () => void this.clickSubmit());
    controls.append(next, skip, submit);
    this.root.appendChild(controls);
  }
}

export { ApiClient, ApiError };
