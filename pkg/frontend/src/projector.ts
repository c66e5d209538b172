// Projector view: the classroom graph on a canvas. Nodes sit at the
// engine-computed layout positions with propagated colors; edge thickness
// follows similarity weight. The teacher can swap among the four
// visualizations, highlight a node's connections, and open its profile.

import { cssColor, edgeWidth, nodeTitle, trimNumber } from "./format.js";
import { EngineClient, LayoutBody, LayoutNode } from "./protocol.js";
import { ProjectorModel, ProjectorScope } from "./state.js";

const SCOPES: { scope: ProjectorScope; label: string }[] = [
    { scope: "social_graph", label: "Social network" },
    { scope: "tag_clouds", label: "Tag clouds" },
    { scope: "image_coengagement", label: "Image co-engagement" },
    { scope: "topic_coengagement", label: "Topic co-engagement" },
];

export function mountProjector(root: HTMLElement, client: EngineClient, model: ProjectorModel) {
    root.innerHTML = `
      <header class="bar">
        <nav id="scope-buttons"></nav>
      </header>
      <main class="projector">
        <canvas id="graph" width="1280" height="720"></canvas>
        <div id="clouds" class="hidden"></div>
        <aside id="inspect" class="hidden"></aside>
      </main>`;

    const canvas = root.querySelector("#graph") as HTMLCanvasElement;
    const ctx = canvas.getContext("2d")!;
    const clouds = root.querySelector("#clouds") as HTMLElement;
    const inspect = root.querySelector("#inspect") as HTMLElement;
    const nav = root.querySelector("#scope-buttons") as HTMLElement;

    for (const { scope, label } of SCOPES) {
        const button = document.createElement("button");
        button.textContent = label;
        button.onclick = () => {
            model.activeScope = scope;
            client.requestSnapshot(scope);
            model.highlight(null);
        };
        nav.appendChild(button);
    }

    function place(node: LayoutNode, layout: LayoutBody): [number, number] {
        // layout coordinates are unconstrained; fit the bounding box
        const xs = layout.nodes.map((n) => n.x);
        const ys = layout.nodes.map((n) => n.y);
        const pad = 60;
        const minX = Math.min(...xs), maxX = Math.max(...xs);
        const minY = Math.min(...ys), maxY = Math.max(...ys);
        const spanX = maxX - minX || 1;
        const spanY = maxY - minY || 1;
        return [
            pad + ((node.x - minX) / spanX) * (canvas.width - 2 * pad),
            pad + ((node.y - minY) / spanY) * (canvas.height - 2 * pad),
        ];
    }

    function draw() {
        const layout = model.layout();
        ctx.clearRect(0, 0, canvas.width, canvas.height);
        if (!layout || layout.nodes.length === 0) {
            ctx.fillStyle = "#666";
            ctx.font = "24px sans-serif";
            ctx.fillText("waiting for engagement data…", 40, 60);
            return;
        }
        const at = new Map(layout.nodes.map((n) => [n.id, place(n, layout)]));
        for (const edge of layout.edges) {
            const a = at.get(edge.a)!;
            const b = at.get(edge.b)!;
            const active =
                !model.highlighted ||
                edge.a === model.highlighted ||
                edge.b === model.highlighted;
            ctx.strokeStyle = active ? "#8899aa" : "#2a2f36";
            ctx.lineWidth = edgeWidth(edge.w);
            ctx.beginPath();
            ctx.moveTo(a[0], a[1]);
            ctx.lineTo(b[0], b[1]);
            ctx.stroke();
        }
        for (const node of layout.nodes) {
            const [x, y] = at.get(node.id)!;
            const r = node.id === model.highlighted ? 26 : 20;
            ctx.fillStyle = cssColor(node.color);
            ctx.beginPath();
            ctx.arc(x, y, r, 0, Math.PI * 2);
            ctx.fill();
            ctx.strokeStyle = "#10131a";
            ctx.lineWidth = 2;
            ctx.stroke();
            ctx.fillStyle = "#e8ecf2";
            ctx.font = "14px sans-serif";
            ctx.textAlign = "center";
            ctx.fillText(nodeTitle(node), x, y + r + 16);
        }
    }

    function renderClouds() {
        const rows = model.tagClouds
            .map((user) => {
                const tags = user.top_tags
                    .slice(0, 6)
                    .map((t) => `#${t.tag} (${trimNumber(t.affinity)})`)
                    .join(" ");
                return `<div class="cloud-row"><b>${user.nickname}</b> ${tags}</div>`;
            })
            .join("");
        clouds.innerHTML = rows || "<i>no users yet</i>";
    }

    function renderInspect() {
        const profile = model.inspected;
        if (!profile || !model.highlighted) {
            inspect.classList.add("hidden");
            return;
        }
        inspect.classList.remove("hidden");
        const tags = profile.top_tags
            .slice(0, 5)
            .map((t) => `<li>#${t.tag}: ${trimNumber(t.affinity)}</li>`)
            .join("");
        inspect.innerHTML = `<h3>${profile.user}</h3><ul>${tags}</ul>
          <button id="close-inspect">close</button>`;
        (inspect.querySelector("#close-inspect") as HTMLButtonElement).onclick = () => {
            model.highlight(null);
        };
    }

    canvas.onclick = (ev) => {
        const layout = model.layout();
        if (!layout) return;
        const rect = canvas.getBoundingClientRect();
        const px = ((ev.clientX - rect.left) / rect.width) * canvas.width;
        const py = ((ev.clientY - rect.top) / rect.height) * canvas.height;
        for (const node of layout.nodes) {
            const [x, y] = place(node, layout);
            if ((x - px) ** 2 + (y - py) ** 2 < 26 ** 2) {
                model.highlight(node.id);
                if (model.activeScope === "social_graph") {
                    client.requestSnapshot("user_profile", node.id);
                }
                return;
            }
        }
        model.highlight(null);
    };

    model.subscribe(() => {
        const isCloud = model.activeScope === "tag_clouds";
        canvas.classList.toggle("hidden", isCloud);
        clouds.classList.toggle("hidden", !isCloud);
        if (model.dirty) {
            model.dirty = false;
            client.requestSnapshot(model.activeScope);
        }
        if (isCloud) renderClouds();
        else draw();
        renderInspect();
    });

    client.requestSnapshot("social_graph");
}
