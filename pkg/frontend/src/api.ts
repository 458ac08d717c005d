/** Typed client for the pair-studio backend endpoints. */

export interface CorpusEntry {
  id: string;
  relpath: string;
  width: number;
  height: number;
}

export interface Session {
  reference: CorpusEntry;
  grid: CorpusEntry[];
}

export interface Annotation {
  referenceId: string;
  similarId: string;
  dissimilarId: string;
  timestamp?: number;
}

export interface PairCount {
  pairCount: number;
}

export class ApiError extends Error {
  constructor(
    message: string,
    public readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  imageUrl(entry: CorpusEntry): string {
    return `${this.baseUrl}/img/${entry.relpath}`;
  }

  async getImages(): Promise<CorpusEntry[]> {
    return this.request<CorpusEntry[]>("GET", "/api/images");
  }

  async getSession(): Promise<Session> {
    return this.request<Session>("GET", "/api/session");
  }

  async postAnnotation(annotation: Annotation): Promise<PairCount> {
    return this.request<PairCount>("POST", "/api/pairs", annotation);
  }

  async submit(): Promise<PairCount> {
    return this.request<PairCount>("POST", "/api/submit");
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(`${this.baseUrl}${path}`, {
        method,
        headers: body !== undefined ? { "Content-Type": "application/json" } : undefined,
        body: body !== undefined ? JSON.stringify(body) : undefined,
      });
    } catch (err) {
      throw new ApiError(`network failure for ${method} ${path}: ${err}`, 0);
    }
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const parsed = (await response.json()) as { detail?: string };
        if (parsed.detail) detail = parsed.detail;
      } catch {
        // keep the status text
      }
      throw new ApiError(`${method} ${path} failed: ${detail}`, response.status);
    }
    return (await response.json()) as T;
  }
}
