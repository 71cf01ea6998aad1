/**
 * Latest-wins control coalescer with a global rate cap.
 *
 * Every gesture produces exactly one protocol message kind; bursts keep
 * only the newest message per kind and flush at most `maxPerSecond`
 * sends overall, with a trailing flush so the final state always lands.
 */

export type SendFn = (control: object) => void;

export class ControlCoalescer {
  private pending = new Map<string, object>();
  private lastSend = -Infinity;
  private timer: ReturnType<typeof setTimeout> | null = null;
  sent = 0;

  constructor(
    private send: SendFn,
    private maxPerSecond = 30,
    private now: () => number = () => Date.now(),
  ) {}

  push(kind: string, control: object): void {
    this.pending.set(kind, control);
    this.maybeFlush();
  }

  private interval(): number {
    return 1000 / this.maxPerSecond;
  }

  private maybeFlush(): void {
    const wait = this.lastSend + this.interval() - this.now();
    if (wait <= 0) {
      this.flush();
    } else if (this.timer === null) {
      this.timer = setTimeout(() => {
        this.timer = null;
        this.flush();
      }, wait);
    }
  }

  flush(): void {
    if (this.pending.size === 0) return;
    const batch = this.pending.size;
    // a multi-kind flush consumes that many slots of the rate budget
    this.lastSend = this.now() + (batch - 1) * this.interval();
    for (const control of this.pending.values()) {
      this.send(control);
      this.sent += 1;
    }
    this.pending.clear();
  }

  dispose(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
  }
}
