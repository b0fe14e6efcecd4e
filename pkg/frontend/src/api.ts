/** Typed client for the hearfit session service HTTP API.
 *
 * The UI is a pure client: every number it displays comes from these
 * endpoints, never from local computation.
 */

export type Choice = "A" | "B" | "Same";

export interface SessionConfig {
  prescription_db: number[];
  episodes?: number;
  per_episode?: number;
  seed?: number;
  snr_db?: number;
  clip_duration_s?: number;
  corpus_dir?: string | null;
  noise_path?: string | null;
  mode?: "human" | "simulated";
  true_gain_set?: number[] | null;
  true_preference?: number[][] | null;
  sim_noise_sigma?: number;
}

export interface CreatedSession {
  session_id: string;
  total_pairs: number;
}

export interface PairView {
  presentation_id: number;
  episode: number;
  episodes: number;
  progress: number;
  audio_a: string;
  audio_b: string;
}

export interface FeedbackAck {
  episode_completed: boolean;
  complete: boolean;
}

export interface BandState {
  f: number[];
  lam: number;
  sigma: number;
  comparisons: number;
}

export interface SessionState {
  session_id: string;
  status: "active" | "complete";
  cursor: number;
  total_pairs: number;
  episode: number;
  episodes: number;
  episodes_done: number;
  bands: BandState[];
}

export interface FittingResult {
  session_id: string;
  personalized_levels: number[];
  personalized_gains_db: number[];
  prescription_db: number[];
  level_offsets_db: number[];
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (...args) => fetch(...args),
  ) {}

  /** Absolute URL for a service-relative path (e.g. an audio payload). */
  url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.url(path), init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = await response.json();
        detail = body.detail ?? JSON.stringify(body);
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("/health");
  }

  createSession(config: SessionConfig): Promise<CreatedSession> {
    return this.request("/sessions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(config),
    });
  }

  nextPair(sessionId: string): Promise<PairView> {
    return this.request(`/sessions/${sessionId}/next-pair`);
  }

  postFeedback(
    sessionId: string,
    presentationId: number,
    choice: Choice,
  ): Promise<FeedbackAck> {
    return this.request(`/sessions/${sessionId}/feedback`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ presentation_id: presentationId, choice }),
    });
  }

  state(sessionId: string): Promise<SessionState> {
    return this.request(`/sessions/${sessionId}/state`);
  }

  result(sessionId: string): Promise<FittingResult> {
    return this.request(`/sessions/${sessionId}/result`);
  }

  async eventsText(sessionId: string): Promise<string> {
    const response = await this.fetchFn(this.url(`/sessions/${sessionId}/events`));
    if (!response.ok) {
      throw new ApiError(response.status, response.statusText);
    }
    return response.text();
  }
}
