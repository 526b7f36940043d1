// Incremental server-sent-events parser and the gateway event feed.
//
// The parser is pure and chunk-agnostic: bytes may arrive split anywhere,
// including inside a UTF-8 code point (the caller decodes) or an SSE line.

export interface SseFrame {
  id: number | null;
  data: string;
}

export class SseParser {
  private buffer = "";
  private id: number | null = null;
  private dataLines: string[] = [];

  /** Feed one decoded chunk; returns every frame completed by it. */
  push(chunk: string): SseFrame[] {
    this.buffer += chunk;
    const frames: SseFrame[] = [];
    for (;;) {
      const nl = this.buffer.indexOf("\n");
      if (nl < 0) break;
      let line = this.buffer.slice(0, nl);
      this.buffer = this.buffer.slice(nl + 1);
      if (line.endsWith("\r")) line = line.slice(0, -1);

      if (line === "") {
        if (this.dataLines.length > 0) {
          frames.push({ id: this.id, data: this.dataLines.join("\n") });
        }
        this.id = null;
        this.dataLines = [];
        continue;
      }
      if (line.startsWith(":")) continue; // comment / keepalive ping

      const colon = line.indexOf(":");
      const field = colon < 0 ? line : line.slice(0, colon);
      let value = colon < 0 ? "" : line.slice(colon + 1);
      if (value.startsWith(" ")) value = value.slice(1);

      if (field === "data") this.dataLines.push(value);
      else if (field === "id") {
        const n = Number(value);
        if (Number.isInteger(n)) this.id = n;
      }
      // other fields (event, retry) are not used by the gateway
    }
    return frames;
  }
}

export interface FeedOptions {
  /** Replay events with sequence numbers greater than this. */
  after: number;
  signal?: AbortSignal;
  /** Wall-clock pause before reconnecting after a dropped stream. */
  retryMs?: number;
}

/**
 * Consume `/events` frames forever, reconnecting from the last seen
 * sequence number so no event is delivered twice. Resolves when aborted.
 */
export async function consumeEvents(
  base: string,
  options: FeedOptions,
  onFrame: (frame: SseFrame) => void,
): Promise<void> {
  let cursor = options.after;
  const retryMs = options.retryMs ?? 1000;
  for (;;) {
    if (options.signal?.aborted) return;
    try {
      const response = await fetch(`${base}/events?after=${cursor}`, {
        headers: { Accept: "text/event-stream" },
        signal: options.signal,
      });
      if (!response.ok || response.body === null) {
        throw new Error(`event stream HTTP ${response.status}`);
      }
      const reader = response.body.getReader();
      const decoder = new TextDecoder();
      const parser = new SseParser();
      for (;;) {
        const { done, value } = await reader.read();
        if (done) break;
        for (const frame of parser.push(decoder.decode(value, { stream: true }))) {
          if (frame.id !== null) cursor = Math.max(cursor, frame.id);
          onFrame(frame);
        }
      }
    } catch (err) {
      if (options.signal?.aborted) return;
    }
    if (options.signal?.aborted) return;
    await new Promise((resolve) => setTimeout(resolve, retryMs));
  }
}
