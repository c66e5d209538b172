// Wire protocol types and the engine client.
//
// Every message is one JSON object {v, type, seq, body}. The client is a
// thin pipe: it never computes scores, profiles, or rankings, it only
// delivers server payloads in watermark order and drops stale ones.

export const PROTOCOL_VERSION = 1;

export interface Envelope {
    v: number;
    type: string;
    seq: number | null;
    body: any;
}

export interface WireEvent {
    seq: number;
    user: string;
    image: string | null;
    t: number;
    kind: string;
    data: Record<string, any>;
}

export interface ScorePayload {
    user: string;
    image: string;
    value: number;
    breakdown: Record<string, number>;
}

export interface EventEchoBody {
    events: WireEvent[];
    score?: ScorePayload | null;
    score_max?: number;
    scores?: Record<string, ScorePayload>;  // datalog snapshot form
    user?: string;
}

export interface TopTag {
    tag: string;
    affinity: number;
    top_images: string[];
}

export interface ProfileBody {
    user: string;
    affinities: Record<string, number>;
    taste: number[];
    strategy_weights: Record<string, number>;
    totals: Record<string, number>;
    top_tags: TopTag[];
}

export interface ExplanationPayload {
    template: string;
    args: Record<string, any>;
    text: string;
}

export interface QueueItem {
    image: string;
    strategy: string;
    components: Record<string, number>;
    total: number;
    explanation: ExplanationPayload | null;
}

export interface QueueBody {
    user: string;
    items: QueueItem[];
}

export interface LayoutNode {
    id: string;
    x: number;
    y: number;
    color: [number, number, number];
    label: string;
    top_image: string | null;
}

export interface GraphEdge {
    a: string;
    b: string;
    w: number;
}

export interface LayoutBody {
    scope?: string;
    nodes: LayoutNode[];
    edges: GraphEdge[];
    converged?: boolean;
}

export type SnapshotScope =
    | "user_profile"
    | "user_queue"
    | "user_datalog"
    | "social_graph"
    | "image_coengagement"
    | "topic_coengagement"
    | "tag_clouds";

export type ClientKind = "feed" | "monitor" | "projector";

// Minimal transport surface so tests can drive the client without sockets.
export interface Transport {
    send(text: string): void;
}

export function envelope(type: string, body: unknown): string {
    return JSON.stringify({ v: PROTOCOL_VERSION, type, seq: null, body });
}

type Handler = (msg: Envelope) => void;

export class EngineClient {
    private handlers = new Map<string, Handler[]>();
    private watermarks = new Map<string, number>();

    constructor(private transport: Transport) {}

    // -- outbound ------------------------------------------------------------

    hello(client: ClientKind, extra: Record<string, any> = {}) {
        this.transport.send(envelope("hello", { client, ...extra }));
    }

    join(nickname: string) {
        this.transport.send(envelope("join", { nickname }));
    }

    pair(code: string) {
        this.transport.send(envelope("pair", { code }));
    }

    sendEvent(kind: string, image: string | null, data: Record<string, any> = {}) {
        this.transport.send(envelope("event", { kind, image, data }));
    }

    requestSnapshot(scope: SnapshotScope, user?: string) {
        this.transport.send(envelope("snapshot_request", { scope, user }));
    }

    // -- inbound -------------------------------------------------------------

    on(type: string, handler: Handler) {
        const list = this.handlers.get(type) ?? [];
        list.push(handler);
        this.handlers.set(type, list);
    }

    /** Feed one raw wire message in. Returns false iff dropped as stale. */
    receive(text: string): boolean {
        let msg: Envelope;
        try {
            msg = JSON.parse(text);
        } catch {
            return false;
        }
        if (!msg || msg.v !== PROTOCOL_VERSION || typeof msg.type !== "string") {
            return false;
        }
        if (!this.admitWatermark(msg)) return false;
        for (const handler of this.handlers.get(msg.type) ?? []) {
            handler(msg);
        }
        return true;
    }

    /** Stale payloads (older watermark than already applied for the same
     *  channel) are discarded; messages without seq always pass. */
    private admitWatermark(msg: Envelope): boolean {
        if (msg.seq === null || msg.seq === undefined) return true;
        const scope = msg.body?.scope ?? msg.body?.user ?? "";
        const key = `${msg.type}:${scope}`;
        const seen = this.watermarks.get(key);
        if (seen !== undefined && msg.seq < seen) return false;
        this.watermarks.set(key, msg.seq);
        return true;
    }
}

// Browser transport: WebSocket with exponential backoff and resync on
// reconnect (connection loss -> hello with resume + snapshot requests).
export class WsTransport implements Transport {
    private ws!: WebSocket;
    private attempts = 0;
    onopen: () => void = () => {};
    onmessage: (text: string) => void = () => {};

    constructor(private url: string) {
        this.connect();
    }

    private connect() {
        this.ws = new WebSocket(this.url);
        this.ws.onopen = () => {
            this.attempts = 0;
            this.onopen();
        };
        this.ws.onmessage = (ev) => this.onmessage(String(ev.data));
        this.ws.onclose = () => this.reconnect();
    }

    private reconnect() {
        const delay = Math.min(500 * 2 ** this.attempts, 15000);
        this.attempts += 1;
        setTimeout(() => this.connect(), delay);
    }

    send(text: string) {
        if (this.ws.readyState === WebSocket.OPEN) {
            this.ws.send(text);
        }
    }
}
