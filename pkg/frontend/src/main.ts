// Boot: pick a role, connect the WebSocket, wire model + view together.
// Role comes from the URL hash (#feed / #monitor / #projector) or a picker.

import { mountFeed } from "./feed.js";
import { mountMonitor } from "./monitor.js";
import { mountProjector } from "./projector.js";
import { ClientKind, EngineClient, WsTransport } from "./protocol.js";
import { FeedModel, MonitorModel, ProjectorModel } from "./state.js";

function wsUrl(): string {
    const proto = location.protocol === "https:" ? "wss" : "ws";
    return `${proto}://${location.host}/ws`;
}

function boot(role: ClientKind) {
    const root = document.getElementById("app")!;
    const transport = new WsTransport(wsUrl());
    const client = new EngineClient(transport);
    transport.onmessage = (text) => client.receive(text);

    let joinedUser = "";
    client.on("joined", (msg) => {
        if (msg.body.user && msg.body.role) joinedUser = msg.body.user;
    });
    client.on("error", (msg) => {
        console.warn("engine error:", msg.body.code, msg.body.message);
    });

    let firstOpen = true;
    transport.onopen = () => {
        if (firstOpen) {
            firstOpen = false;
            client.hello(role);
            if (role === "feed") {
                const nickname = prompt("Pick a nickname:") ?? `user${Date.now() % 1000}`;
                client.join(nickname);
            } else if (role === "monitor") {
                const code = prompt("Pairing code from the feed device:") ?? "";
                client.pair(code.trim().toUpperCase());
            }
            return;
        }
        // reconnect: resume the role, then resync every view from snapshots
        client.hello(role, joinedUser ? { resume: joinedUser } : {});
        if (role === "feed" && joinedUser) {
            client.requestSnapshot("user_queue");
        } else if (role === "monitor" && joinedUser) {
            client.requestSnapshot("user_datalog");
            client.requestSnapshot("user_profile");
            client.requestSnapshot("user_queue");
        } else if (role === "projector") {
            client.requestSnapshot("social_graph");
        }
    };

    if (role === "feed") {
        const model = new FeedModel();
        model.bind(client);
        mountFeed(root, client, model);
    } else if (role === "monitor") {
        const model = new MonitorModel();
        model.bind(client);
        mountMonitor(root, client, model);
    } else {
        const model = new ProjectorModel();
        model.bind(client);
        mountProjector(root, client, model);
    }
}

function pickRole() {
    const hash = location.hash.replace("#", "");
    if (hash === "feed" || hash === "monitor" || hash === "projector") {
        boot(hash);
        return;
    }
    const root = document.getElementById("app")!;
    root.innerHTML = `
      <div class="picker">
        <h1>Somekone</h1>
        <button data-role="feed">Browse the feed</button>
        <button data-role="monitor">Monitor a paired device</button>
        <button data-role="projector">Classroom projector</button>
      </div>`;
    for (const button of root.querySelectorAll<HTMLButtonElement>("button")) {
        button.onclick = () => {
            const role = button.dataset.role as ClientKind;
            if (role === "projector") {
                const token = prompt("Admin token (printed by the engine):") ?? "";
                location.hash = "projector";
                bootProjector(token);
            } else {
                location.hash = role;
                boot(role);
            }
        };
    }
}

function bootProjector(token: string) {
    const root = document.getElementById("app")!;
    const transport = new WsTransport(wsUrl());
    const client = new EngineClient(transport);
    transport.onmessage = (text) => client.receive(text);
    transport.onopen = () => client.hello("projector", { token });
    const model = new ProjectorModel();
    model.bind(client);
    mountProjector(root, client, model);
}

pickRole();
