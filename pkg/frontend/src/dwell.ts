// Viewport dwell instrumentation, kept free of DOM types so the event
// emission contract is testable headlessly. The feed view feeds it
// IntersectionObserver transitions at the 50%-visible threshold.

export interface DwellEmitter {
    (kind: "seen" | "dwell_end", image: string, data: Record<string, any>): void;
}

export class DwellTracker {
    private enteredAt = new Map<string, number>();

    constructor(
        private emit: DwellEmitter,
        private now: () => number = () => Date.now(),
    ) {}

    /** Image became >= 50% visible: count an impression, start the clock. */
    enter(image: string) {
        if (this.enteredAt.has(image)) return;
        this.enteredAt.set(image, this.now());
        this.emit("seen", image, {});
    }

    /** Image left the viewport: report the time spent viewing it. */
    exit(image: string) {
        const started = this.enteredAt.get(image);
        if (started === undefined) return;
        this.enteredAt.delete(image);
        const duration = Math.max(0, Math.round(this.now() - started));
        this.emit("dwell_end", image, { duration_ms: duration });
    }

    /** Flush everything still visible (page hide / disconnect). */
    exitAll() {
        for (const image of [...this.enteredAt.keys()]) {
            this.exit(image);
        }
    }

    visible(): string[] {
        return [...this.enteredAt.keys()];
    }
}
