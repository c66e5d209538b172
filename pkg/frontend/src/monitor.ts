// Monitor view: three tabs over the paired user's live data.
//   Data - event stream with the per-image engagement meter (e.g. "10/10")
//   Profile - tag word cloud, per-tag top images, action totals
//   Recommendations - the next five queued images with their explanations

import {
    breakdownText,
    cloudSize,
    eventLabel,
    meterText,
    trimNumber,
} from "./format.js";
import { EngineClient } from "./protocol.js";
import { MonitorModel } from "./state.js";

export function mountMonitor(root: HTMLElement, client: EngineClient, model: MonitorModel) {
    root.innerHTML = `
      <header class="bar">
        <span id="mon-who">monitoring…</span>
        <nav class="tabs">
          <button data-tab="data" class="active">Data</button>
          <button data-tab="profile">Profile</button>
          <button data-tab="recs">Recommendations</button>
        </nav>
      </header>
      <main>
        <section id="tab-data" class="tab"></section>
        <section id="tab-profile" class="tab hidden"></section>
        <section id="tab-recs" class="tab hidden"></section>
      </main>`;

    const who = root.querySelector("#mon-who") as HTMLElement;
    const panels = {
        data: root.querySelector("#tab-data") as HTMLElement,
        profile: root.querySelector("#tab-profile") as HTMLElement,
        recs: root.querySelector("#tab-recs") as HTMLElement,
    };
    for (const button of root.querySelectorAll<HTMLButtonElement>(".tabs button")) {
        button.onclick = () => {
            root.querySelectorAll(".tabs button").forEach((b) => b.classList.remove("active"));
            button.classList.add("active");
            for (const [name, panel] of Object.entries(panels)) {
                panel.classList.toggle("hidden", name !== button.dataset.tab);
            }
        };
    }

    function renderData() {
        const rows = model.rows
            .map((row) => {
                const ev = row.event;
                const meter = ev.image ? model.meterFor(ev.image) : null;
                const meterHtml = meter
                    ? `<span class="meter" title="${row.score ? breakdownText(row.score) : ""}">
                         ${meterText(meter.value, meter.max)}</span>`
                    : "";
                return `<tr>
                  <td class="t">${trimNumber(ev.t / 1000)}s</td>
                  <td>${ev.image ?? "—"}</td>
                  <td>${eventLabel(ev.kind, ev.data)}</td>
                  <td>${meterHtml}</td>
                </tr>`;
            })
            .join("");
        panels.data.innerHTML = `<table class="datalog">
          <thead><tr><th>t</th><th>image</th><th>action</th><th>engagement</th></tr></thead>
          <tbody>${rows}</tbody></table>`;
    }

    function renderProfile() {
        const profile = model.profile;
        if (!profile) {
            panels.profile.innerHTML = "<p>No profile yet.</p>";
            return;
        }
        const maxAffinity = Math.max(
            0, ...profile.top_tags.map((t) => t.affinity),
        );
        const cloud = profile.top_tags
            .map(
                (t) =>
                    `<span class="cloud-tag" style="font-size:${cloudSize(t.affinity, maxAffinity)}px"
                       title="affinity ${trimNumber(t.affinity)}">#${t.tag}</span>`,
            )
            .join(" ");
        const perTag = profile.top_tags
            .map(
                (t) => `<li><b>#${t.tag}</b> (${trimNumber(t.affinity)}):
                    ${t.top_images.slice(0, 5).join(", ") || "—"}</li>`,
            )
            .join("");
        const totals = Object.entries(profile.totals)
            .map(([kind, n]) => `<li>${kind}: ${n}</li>`)
            .join("");
        panels.profile.innerHTML = `
          <div class="cloud">${cloud || "<i>no engagement yet</i>"}</div>
          <h3>Most engaged images per topic</h3><ul>${perTag}</ul>
          <h3>Actions</h3><ul class="totals">${totals}</ul>`;
    }

    function renderRecs() {
        const items = model.queue
            .map(
                (item, i) => `<li>
                  <span class="rank">${i + 1}</span>
                  <b>${item.image}</b>
                  <span class="strategy">[${item.strategy}]</span>
                  <p class="why">${item.explanation?.text ?? ""}</p>
                </li>`,
            )
            .join("");
        panels.recs.innerHTML = `<ol class="queue">${items}</ol>`;
    }

    model.subscribe(() => {
        who.textContent = model.nickname
            ? `watching @${model.nickname}${model.tombstone ? " (left)" : ""}`
            : "monitoring…";
        renderData();
        renderProfile();
        renderRecs();
    });
    void client;
}
