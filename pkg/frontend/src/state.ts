// Role view models: plain reactive stores that mirror the latest wire
// payloads. All numbers rendered anywhere come from these payloads; the
// client performs no scoring, ranking, or profiling of its own.

import {
    Envelope,
    EngineClient,
    EventEchoBody,
    LayoutBody,
    ProfileBody,
    QueueBody,
    QueueItem,
    ScorePayload,
    WireEvent,
} from "./protocol.js";

type Listener = () => void;

export class Store {
    private listeners: Listener[] = [];

    subscribe(fn: Listener) {
        this.listeners.push(fn);
    }

    protected notify() {
        for (const fn of this.listeners) fn();
    }
}

export class FeedModel extends Store {
    user = "";
    nickname = "";
    pairingCode = "";
    monitoringActive = false;
    scoreMax = 10;
    upcoming: QueueItem[] = [];
    consumed: QueueItem[] = [];

    bind(client: EngineClient) {
        client.on("welcome", (msg) => {
            this.scoreMax = msg.body.score_max ?? 10;
            this.notify();
        });
        client.on("joined", (msg) => {
            if (msg.body.role === "feed" && msg.body.user) {
                this.user = msg.body.user;
                this.nickname = msg.body.nickname ?? "";
                this.pairingCode = msg.body.pairing_code ?? this.pairingCode;
            }
            if (msg.body.monitoring_active) {
                this.monitoringActive = true;
                if (msg.body.next_code) this.pairingCode = msg.body.next_code;
            }
            this.notify();
        });
        client.on("queue_update", (msg) => {
            const body = msg.body as QueueBody;
            const shown = new Set(this.consumed.map((i) => i.image));
            this.upcoming = body.items.filter((i) => !shown.has(i.image));
            this.notify();
        });
    }

    /** Move the next queued item into the visible feed (infinite scroll). */
    consumeNext(): QueueItem | null {
        const item = this.upcoming.shift() ?? null;
        if (item) {
            this.consumed.push(item);
            this.notify();
        }
        return item;
    }

    get exhausted(): boolean {
        return this.upcoming.length === 0;
    }
}

export interface DataRow {
    event: WireEvent;
    score: ScorePayload | null;
}

export class MonitorModel extends Store {
    target = "";
    nickname = "";
    rows: DataRow[] = [];           // newest first
    scores = new Map<string, ScorePayload>();
    scoreMax = 10;
    profile: ProfileBody | null = null;
    queue: QueueItem[] = [];
    tombstone = false;

    bind(client: EngineClient) {
        client.on("welcome", (msg) => {
            this.scoreMax = msg.body.score_max ?? this.scoreMax;
            this.notify();
        });
        client.on("joined", (msg) => {
            if (msg.body.role === "monitor") {
                this.target = msg.body.user;
                this.nickname = msg.body.nickname ?? "";
                this.notify();
            }
        });
        client.on("event_echo", (msg) => this.applyEcho(msg));
        client.on("profile_update", (msg) => {
            this.profile = msg.body as ProfileBody;
            this.notify();
        });
        client.on("queue_update", (msg) => {
            this.queue = (msg.body as QueueBody).items;
            this.notify();
        });
    }

    private applyEcho(msg: Envelope) {
        const body = msg.body as EventEchoBody;
        if (body.score_max !== undefined) this.scoreMax = body.score_max;
        if (body.scores) {
            // datalog snapshot: bulk form replaces both views
            this.rows = [];
            for (const [image, score] of Object.entries(body.scores)) {
                this.scores.set(image, score);
            }
        }
        if (body.score && body.score.image) {
            this.scores.set(body.score.image, body.score);
        }
        for (const event of body.events ?? []) {
            this.rows.unshift({
                event,
                score: event.image ? this.scores.get(event.image) ?? null : null,
            });
        }
        this.notify();
    }

    meterFor(image: string): { value: number; max: number } | null {
        const score = this.scores.get(image);
        return score ? { value: score.value, max: this.scoreMax } : null;
    }
}

export type ProjectorScope =
    | "social_graph"
    | "image_coengagement"
    | "topic_coengagement"
    | "tag_clouds";

export interface TagCloudUser {
    user: string;
    nickname: string;
    top_tags: { tag: string; affinity: number }[];
}

export class ProjectorModel extends Store {
    activeScope: ProjectorScope = "social_graph";
    layouts = new Map<string, LayoutBody>();
    tagClouds: TagCloudUser[] = [];
    highlighted: string | null = null;
    inspected: ProfileBody | null = null;
    dirty = false;   // a graph_update arrived; view should re-request its scope

    bind(client: EngineClient) {
        client.on("graph_update", (msg) => {
            const body = msg.body;
            if (body.scope && Array.isArray(body.nodes)) {
                this.layouts.set(body.scope, body as LayoutBody);
            } else if (body.scope === "tag_clouds" || Array.isArray(body.users)) {
                this.tagClouds = body.users ?? [];
            } else if (body.similarity) {
                // live summary push: raw graphs without positions; mark the
                // current layout stale so the view refreshes it
                this.dirty = true;
            }
            this.notify();
        });
        client.on("profile_update", (msg) => {
            this.inspected = msg.body as ProfileBody;
            this.notify();
        });
    }

    layout(): LayoutBody | null {
        return this.layouts.get(this.activeScope) ?? null;
    }

    highlight(node: string | null) {
        this.highlighted = node;
        this.notify();
    }
}
