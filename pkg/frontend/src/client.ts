// Thin typed client for the gateway's HTTP API. All mutation goes through
// POST /commands with a per-client strictly increasing sequence number.

import type { CommandResult, SimEventRecord, StateResponse } from "./types.js";
import { consumeEvents } from "./sse.js";

export class CommandRejectedError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "CommandRejectedError";
  }
}

export class GatewayClient {
  private seq = 0;

  constructor(
    readonly base: string,
    readonly clientId: string = `console-${Math.random().toString(36).slice(2, 8)}`,
  ) {}

  async state(): Promise<StateResponse> {
    const response = await fetch(`${this.base}/state`);
    if (!response.ok) throw new Error(`GET /state: HTTP ${response.status}`);
    return (await response.json()) as StateResponse;
  }

  async metrics(): Promise<Record<string, unknown>> {
    const response = await fetch(`${this.base}/metrics`);
    if (!response.ok) throw new Error(`GET /metrics: HTTP ${response.status}`);
    return (await response.json()) as Record<string, unknown>;
  }

  /**
   * Send one command. Sequence numbers are consumed even when the command
   * is rejected, matching the gateway's admission rule.
   */
  async command(command: string, args: Record<string, unknown> = {}): Promise<CommandResult> {
    this.seq += 1;
    const envelope = { client: this.clientId, seq: this.seq, command, args };
    const response = await fetch(`${this.base}/commands`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(envelope),
    });
    const body = (await response.json()) as Record<string, unknown>;
    if (!response.ok) {
      const reason = typeof body.error === "string" ? body.error : `HTTP ${response.status}`;
      throw new CommandRejectedError(response.status, reason);
    }
    return body as unknown as CommandResult;
  }

  /** Stream events with seq > after into the handler until aborted. */
  events(
    after: number,
    onEvent: (event: SimEventRecord) => void,
    signal?: AbortSignal,
  ): Promise<void> {
    return consumeEvents(this.base, { after, signal }, (frame) => {
      onEvent(JSON.parse(frame.data) as SimEventRecord);
    });
  }
}
