// Presentation helpers. Values always come straight from wire payloads;
// these functions only turn them into display strings.

import { LayoutNode, ScorePayload } from "./protocol.js";

/** "10/10", "7.5/10" - the engagement meter text. */
export function meterText(value: number, max: number): string {
    return `${trimNumber(value)}/${trimNumber(max)}`;
}

export function trimNumber(x: number): string {
    const rounded = Math.round(x * 100) / 100;
    return String(rounded);
}

export function breakdownText(score: ScorePayload): string {
    return Object.entries(score.breakdown)
        .map(([kind, amount]) => `${kind} ${amount >= 0 ? "+" : ""}${trimNumber(amount)}`)
        .join(", ");
}

/** Word-cloud font size in px, scaled linearly between the extremes. */
export function cloudSize(affinity: number, maxAffinity: number): number {
    if (maxAffinity <= 0) return 14;
    return Math.round(14 + 26 * (affinity / maxAffinity));
}

export function cssColor(color: [number, number, number]): string {
    const [r, g, b] = color.map((c) => Math.round(c * 255));
    return `rgb(${r}, ${g}, ${b})`;
}

/** Edge stroke width proportional to similarity weight (1px..8px). */
export function edgeWidth(weight: number): number {
    return 1 + 7 * Math.max(0, Math.min(1, weight));
}

export function eventLabel(kind: string, data: Record<string, any>): string {
    switch (kind) {
        case "seen":
            return "saw the image";
        case "dwell_end":
            return `viewed for ${trimNumber((data.duration_ms ?? 0) / 1000)}s`;
        case "like":
            return "liked";
        case "unlike":
            return "removed like";
        case "emoji_reaction":
            return `reacted ${emojiGlyph(data.emoji)}`;
        case "comment":
            return `commented (${data.length_chars ?? 0} chars)`;
        case "follow":
            return `followed ${data.creator ?? ""}`;
        case "unfollow":
            return `unfollowed ${data.creator ?? ""}`;
        case "share":
            return `shared (${data.scope ?? ""})`;
        case "inactivity_start":
            return "went inactive";
        case "inactivity_end":
            return "active again";
        default:
            return kind;
    }
}

export const EMOJI = ["heart_eyes", "laugh", "sad", "angry", "wow"] as const;

export function emojiGlyph(name: string | undefined): string {
    switch (name) {
        case "heart_eyes":
            return "😍";
        case "laugh":
            return "😂";
        case "sad":
            return "😢";
        case "angry":
            return "😡";
        case "wow":
            return "😮";
        default:
            return "❓";
    }
}

export function nodeTitle(node: LayoutNode): string {
    return node.top_image ? `${node.label} · ${node.top_image}` : node.label;
}
