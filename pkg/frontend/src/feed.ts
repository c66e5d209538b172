// Feed view: infinite-scroll image feed with the engagement controls.
// Seen fires when a card becomes half visible, dwell_end when it leaves;
// everything else is a button press. The pairing code and the
// monitoring-active notice are surfaced at the top.

import { DwellTracker } from "./dwell.js";
import { EMOJI, emojiGlyph } from "./format.js";
import { EngineClient, QueueItem } from "./protocol.js";
import { FeedModel } from "./state.js";

export function mountFeed(root: HTMLElement, client: EngineClient, model: FeedModel) {
    root.innerHTML = `
      <header class="bar">
        <span id="feed-who"></span>
        <button id="show-code">pairing code</button>
        <span id="feed-notice" class="notice hidden">a paired device is watching this session</span>
      </header>
      <main id="feed-scroll" class="feed"></main>`;

    const scroll = root.querySelector("#feed-scroll") as HTMLElement;
    const who = root.querySelector("#feed-who") as HTMLElement;
    const notice = root.querySelector("#feed-notice") as HTMLElement;
    const codeButton = root.querySelector("#show-code") as HTMLButtonElement;
    codeButton.onclick = () => {
        alert(`Pairing code: ${model.pairingCode}\nType it on the monitor device.`);
    };

    const dwell = new DwellTracker((kind, image, data) =>
        client.sendEvent(kind, image, data),
    );
    window.addEventListener("pagehide", () => dwell.exitAll());

    const observer = new IntersectionObserver(
        (entries) => {
            for (const entry of entries) {
                const image = (entry.target as HTMLElement).dataset.image!;
                if (entry.isIntersecting) dwell.enter(image);
                else dwell.exit(image);
            }
        },
        { threshold: 0.5 },
    );

    const liked = new Set<string>();
    const followed = new Set<string>();

    function card(item: QueueItem): HTMLElement {
        const el = document.createElement("article");
        el.className = "card";
        el.dataset.image = item.image;
        el.innerHTML = `
          <div class="picture" title="${item.image}"><span>${item.image}</span></div>
          <div class="controls">
            <button class="like">❤ like</button>
            <span class="emoji-row hidden"></span>
            <button class="comment">💬 comment</button>
            <button class="follow">➕ follow</button>
            <button class="share">↗ share</button>
          </div>`;
        const like = el.querySelector(".like") as HTMLButtonElement;
        const emojiRow = el.querySelector(".emoji-row") as HTMLElement;
        for (const name of EMOJI) {
            const b = document.createElement("button");
            b.textContent = emojiGlyph(name);
            b.onclick = () => client.sendEvent("emoji_reaction", item.image, { emoji: name });
            emojiRow.appendChild(b);
        }
        // long-press (or second thought) on like reveals the emoji range
        let pressTimer = 0;
        like.onmousedown = () => {
            pressTimer = window.setTimeout(() => emojiRow.classList.remove("hidden"), 400);
        };
        like.onmouseup = () => window.clearTimeout(pressTimer);
        like.onclick = () => {
            if (liked.has(item.image)) {
                liked.delete(item.image);
                client.sendEvent("unlike", item.image);
                like.classList.remove("active");
            } else {
                liked.add(item.image);
                client.sendEvent("like", item.image);
                like.classList.add("active");
            }
        };
        (el.querySelector(".comment") as HTMLButtonElement).onclick = () => {
            const text = prompt("Comment:") ?? "";
            if (text.length > 0) {
                client.sendEvent("comment", item.image, {
                    length_chars: text.length,
                    text,
                });
            }
        };
        (el.querySelector(".follow") as HTMLButtonElement).onclick = () => {
            const creator = prompt("Creator id to follow?", "") ?? "";
            if (!creator) return;
            if (followed.has(creator)) {
                followed.delete(creator);
                client.sendEvent("unfollow", item.image, { creator });
            } else {
                followed.add(creator);
                client.sendEvent("follow", item.image, { creator });
            }
        };
        (el.querySelector(".share") as HTMLButtonElement).onclick = () => {
            const scope = prompt("Share with: private / friends / public", "friends");
            if (scope && ["private", "friends", "public"].includes(scope)) {
                client.sendEvent("share", item.image, { scope });
            }
        };
        return el;
    }

    function appendNext(count: number) {
        for (let i = 0; i < count; i++) {
            const item = model.consumeNext();
            if (!item) break;
            const el = card(item);
            scroll.appendChild(el);
            observer.observe(el);
        }
        if (model.exhausted) {
            client.requestSnapshot("user_queue");
        }
    }

    const sentinel = document.createElement("div");
    sentinel.className = "sentinel";
    scroll.after(sentinel);
    new IntersectionObserver((entries) => {
        if (entries[0].isIntersecting) appendNext(2);
    }).observe(sentinel);

    let primed = false;
    model.subscribe(() => {
        who.textContent = model.nickname ? `@${model.nickname}` : "joining…";
        notice.classList.toggle("hidden", !model.monitoringActive);
        if (!primed && model.upcoming.length > 0) {
            primed = true;
            appendNext(3);
        }
    });
}
