// Drives the view models with a captured engine stream (real wire payloads
// from the saturating-engagement scenario) and checks the thin-client rule:
// every rendered figure comes from a payload field, never local math.

import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { meterText } from "../src/format.js";
import { EngineClient, Transport } from "../src/protocol.js";
import { FeedModel, MonitorModel, ProjectorModel } from "../src/state.js";

const FIXTURE = JSON.parse(
    readFileSync(
        fileURLToPath(new URL("./fixtures/monitor_stream.json", import.meta.url)),
        "utf-8",
    ),
) as any[];

class NullTransport implements Transport {
    send() {}
}

function monitorWithStream(upto = FIXTURE.length): MonitorModel {
    const client = new EngineClient(new NullTransport());
    const model = new MonitorModel();
    model.bind(client);
    for (const msg of FIXTURE.slice(0, upto)) {
        client.receive(JSON.stringify(msg));
    }
    return model;
}

describe("MonitorModel over a captured engine stream", () => {
    it("shows each action immediately as it arrives (no refresh step)", () => {
        const client = new EngineClient(new NullTransport());
        const model = new MonitorModel();
        model.bind(client);
        let renders = 0;
        model.subscribe(() => renders++);

        const first = FIXTURE.find((m) => m.type === "event_echo");
        client.receive(JSON.stringify(first));
        expect(renders).toBeGreaterThan(0);
        expect(model.rows.length).toBe(1);
        expect(model.rows[0].event.kind).toBe("seen");
    });

    it("renders the saturating scenario meter as 10/10 from the payload", () => {
        const model = monitorWithStream();
        const meter = model.meterFor("img_001");
        expect(meter).not.toBeNull();
        expect(meterText(meter!.value, meter!.max)).toBe("10/10");
        // and the value is exactly what the wire carried
        const lastScore = [...FIXTURE]
            .reverse()
            .find((m) => m.type === "event_echo" && m.body.score)?.body.score;
        expect(meter!.value).toBe(lastScore.value);
    });

    it("orders the data tab newest first", () => {
        const model = monitorWithStream();
        const kinds = model.rows.map((r) => r.event.kind);
        expect(kinds[0]).toBe("emoji_reaction");
        expect(kinds[kinds.length - 1]).toBe("seen");
    });

    it("profile tab lists most engaged topics in payload order", () => {
        const model = monitorWithStream();
        expect(model.profile).not.toBeNull();
        expect(model.profile!.top_tags[0].tag).toBe("musiikki");
        expect(model.profile!.totals.follow).toBe(1);
    });

    it("recommendations tab carries rendered explanation text", () => {
        const model = monitorWithStream();
        expect(model.queue.length).toBe(5);
        for (const item of model.queue) {
            expect(item.explanation?.text?.length).toBeGreaterThan(0);
        }
        expect(model.queue[0].explanation!.text).toContain("musiikki");
    });

    it("applies watermark order and discards a stale replayed update", () => {
        const client = new EngineClient(new NullTransport());
        const model = new MonitorModel();
        model.bind(client);
        for (const msg of FIXTURE) client.receive(JSON.stringify(msg));
        const rows = model.rows.length;
        const stale = FIXTURE.find((m) => m.type === "event_echo");
        expect(client.receive(JSON.stringify(stale))).toBe(false);
        expect(model.rows.length).toBe(rows);
    });
});

describe("FeedModel", () => {
    function feedWith(messages: any[]): FeedModel {
        const client = new EngineClient(new NullTransport());
        const model = new FeedModel();
        model.bind(client);
        for (const msg of messages) client.receive(JSON.stringify(msg));
        return model;
    }

    const queueMsg = (seq: number, images: string[]) => ({
        v: 1, type: "queue_update", seq,
        body: {
            user: "u1",
            items: images.map((image) => ({
                image, strategy: "content", components: {}, total: 0, explanation: null,
            })),
        },
    });

    it("holds the pairing code and join identity", () => {
        const model = feedWith([
            { v: 1, type: "welcome", seq: null, body: { score_max: 10 } },
            {
                v: 1, type: "joined", seq: 0,
                body: { user: "u1", nickname: "jarmo", role: "feed", pairing_code: "AB23CD" },
            },
        ]);
        expect(model.user).toBe("u1");
        expect(model.pairingCode).toBe("AB23CD");
        expect(model.monitoringActive).toBe(false);
    });

    it("surfaces the monitoring notice with the fresh code", () => {
        const model = feedWith([
            {
                v: 1, type: "joined", seq: 1,
                body: { role: "monitor", target: "u1", monitoring_active: true, next_code: "ZZ77QQ" },
            },
        ]);
        expect(model.monitoringActive).toBe(true);
        expect(model.pairingCode).toBe("ZZ77QQ");
    });

    it("never re-queues an image the feed already showed", () => {
        const model = feedWith([queueMsg(1, ["a", "b", "c"])]);
        expect(model.consumeNext()!.image).toBe("a");
        expect(model.consumeNext()!.image).toBe("b");
        const client = new EngineClient(new NullTransport());
        model.bind(client);
        client.receive(JSON.stringify(queueMsg(2, ["b", "a", "d"])));
        expect(model.upcoming.map((i) => i.image)).toEqual(["d"]);
    });

    it("reports exhaustion so the view can request a refresh", () => {
        const model = feedWith([queueMsg(1, ["a"])]);
        expect(model.exhausted).toBe(false);
        model.consumeNext();
        expect(model.exhausted).toBe(true);
    });
});

describe("ProjectorModel", () => {
    it("keeps per-scope layouts and flags live pushes as dirty", () => {
        const client = new EngineClient(new NullTransport());
        const model = new ProjectorModel();
        model.bind(client);

        const social = FIXTURE.find(
            (m) => m.type === "graph_update" && m.body.scope === "social_graph",
        );
        client.receive(JSON.stringify(social));
        expect(model.layout()).not.toBeNull();
        expect(model.layout()!.nodes[0].id).toBe("u1");
        expect(model.layout()!.nodes[0].label).toBe("jarmo");

        client.receive(JSON.stringify({
            v: 1, type: "graph_update", seq: 99,
            body: { similarity: { nodes: [], edges: [] } },
        }));
        expect(model.dirty).toBe(true);
    });

    it("stores tag cloud payloads", () => {
        const client = new EngineClient(new NullTransport());
        const model = new ProjectorModel();
        model.bind(client);
        client.receive(JSON.stringify({
            v: 1, type: "graph_update", seq: 7,
            body: {
                scope: "tag_clouds",
                users: [{ user: "u1", nickname: "jarmo", top_tags: [{ tag: "musiikki", affinity: 10 }] }],
            },
        }));
        expect(model.tagClouds[0].nickname).toBe("jarmo");
    });
});
