/** Session view-model: the state machine behind the comparison screen.
 *
 * Owns no fitting state — the service does. This layer enforces only the
 * UI rules: choice buttons stay disabled until both clips have been played
 * at least once, exactly one presentation is outstanding, and a submission
 * in flight blocks double submission.
 */

import {
  ApiClient,
  Choice,
  FittingResult,
  PairView,
  SessionConfig,
  SessionState,
} from "./api.js";

export type Screen = "start" | "comparison" | "result";

export interface ComparisonView {
  presentationId: number;
  audioUrlA: string;
  audioUrlB: string;
  playedA: boolean;
  playedB: boolean;
  choicesEnabled: boolean;
  episode: number;
  episodes: number;
  progress: number;
}

export interface ResultRow {
  band: number;
  prescriptionDb: number;
  personalizedDb: number;
  offsetDb: number;
}

export class SessionViewModel {
  private sessionId: string | null = null;
  private pair: PairView | null = null;
  private playedA = false;
  private playedB = false;
  private submitting = false;
  screen: Screen = "start";
  result: FittingResult | null = null;
  lastState: SessionState | null = null;

  constructor(private readonly api: ApiClient) {}

  get id(): string | null {
    return this.sessionId;
  }

  async start(config: SessionConfig): Promise<void> {
    const created = await this.api.createSession(config);
    this.sessionId = created.session_id;
    this.screen = "comparison";
    await this.loadNextPair();
  }

  /** Resume an existing session (e.g. after a page refresh). */
  async resume(sessionId: string): Promise<void> {
    this.sessionId = sessionId;
    const state = await this.api.state(sessionId);
    this.lastState = state;
    if (state.status === "complete") {
      await this.loadResult();
    } else {
      this.screen = "comparison";
      await this.loadNextPair();
    }
  }

  private requireId(): string {
    if (this.sessionId === null) {
      throw new Error("no active session");
    }
    return this.sessionId;
  }

  private async loadNextPair(): Promise<void> {
    this.pair = await this.api.nextPair(this.requireId());
    this.playedA = false;
    this.playedB = false;
  }

  view(): ComparisonView {
    if (this.pair === null) {
      throw new Error("no outstanding presentation");
    }
    return {
      presentationId: this.pair.presentation_id,
      audioUrlA: this.api.url(this.pair.audio_a),
      audioUrlB: this.api.url(this.pair.audio_b),
      playedA: this.playedA,
      playedB: this.playedB,
      choicesEnabled: this.playedA && this.playedB && !this.submitting,
      episode: this.pair.episode,
      episodes: this.pair.episodes,
      progress: this.pair.progress,
    };
  }

  markPlayed(side: "a" | "b"): void {
    if (side === "a") {
      this.playedA = true;
    } else {
      this.playedB = true;
    }
  }

  /** Post a choice; rejects until both clips were played. Returns true when
   * the session completed and the result screen is ready. */
  async submit(choice: Choice): Promise<boolean> {
    if (this.pair === null) {
      throw new Error("no outstanding presentation");
    }
    if (!this.playedA || !this.playedB) {
      throw new Error("play both clips before choosing");
    }
    if (this.submitting) {
      throw new Error("submission already in flight");
    }
    this.submitting = true;
    try {
      const ack = await this.api.postFeedback(
        this.requireId(),
        this.pair.presentation_id,
        choice,
      );
      this.pair = null;
      if (ack.complete) {
        await this.loadResult();
        return true;
      }
      await this.loadNextPair();
      return false;
    } finally {
      this.submitting = false;
    }
  }

  private async loadResult(): Promise<void> {
    this.result = await this.api.result(this.requireId());
    this.screen = "result";
  }

  async refreshState(): Promise<SessionState> {
    this.lastState = await this.api.state(this.requireId());
    return this.lastState;
  }

  /** Per-band table for the result screen; checks the offset invariant. */
  resultRows(): ResultRow[] {
    if (this.result === null) {
      throw new Error("session not complete");
    }
    return this.result.personalized_gains_db.map((gain, band) => {
      const prescription = this.result!.prescription_db[band];
      const offset = gain - prescription;
      if (offset < -9 - 1e-9 || offset > 12 + 1e-9) {
        throw new Error(
          `band ${band + 1} offset ${offset} dB outside [-9, +12]`,
        );
      }
      return {
        band: band + 1,
        prescriptionDb: prescription,
        personalizedDb: gain,
        offsetDb: offset,
      };
    });
  }
}

/** Keyboard shortcut mapping for the comparison screen: 1 / 2 / 0. */
export function choiceForKey(key: string): Choice | null {
  switch (key) {
    case "1":
      return "A";
    case "2":
      return "B";
    case "0":
      return "Same";
    default:
      return null;
  }
}
