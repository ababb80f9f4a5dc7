// Live quarantine-alert feed. Poll-based: GET /alerts?since=cursor on an
// interval, cursor only ever moves forward, and a dropped connection keeps
// what we already have on screen behind a reconnect indicator.

import { AlertDoc, Api } from "./api.js";

const VISIBLE_ROWS = 50;

export class AlertFeed {
  cursor = 0;
  items: AlertDoc[] = [];
  connected = true;
  private timer: ReturnType<typeof setInterval> | null = null;

  async poll(api: Api): Promise<void> {
    try {
      const { alerts, cursor } = await api.getAlerts(this.cursor);
      this.items.push(...alerts);
      if (cursor > this.cursor) this.cursor = cursor;
      this.connected = true;
    } catch {
      this.connected = false; // cached items stay; we just flag the gap
    }
  }

  start(api: Api, container: HTMLElement, intervalMs = 3000): void {
    this.stop();
    this.timer = setInterval(async () => {
      await this.poll(api);
      this.render(container);
    }, intervalMs);
  }

  stop(): void {
    if (this.timer) clearInterval(this.timer);
    this.timer = null;
  }

  render(container: HTMLElement): void {
    container.textContent = "";
    if (!this.connected) {
      const gap = document.createElement("div");
      gap.className = "reconnect";
      gap.textContent = "connection lost — retrying";
      container.appendChild(gap);
    }
    if (this.items.length === 0) {
      const empty = document.createElement("p");
      empty.className = "feed-empty";
      empty.textContent = "No quarantine violations.";
      container.appendChild(empty);
      return;
    }
    const list = document.createElement("ul");
    list.className = "alert-list";
    const newestFirst = [...this.items].reverse();
    for (const alert of newestFirst.slice(0, VISIBLE_ROWS)) {
      const row = document.createElement("li");
      row.dataset.seq = String(alert.seq);
      row.textContent =
        `${alert.at}  ${alert.subscriber}  ${Math.round(alert.distance_m)} m ` +
        `(limit ${alert.radius_m} m)`;
      list.appendChild(row);
    }
    container.appendChild(list);
    if (newestFirst.length > VISIBLE_ROWS) {
      const more = document.createElement("p");
      more.className = "feed-more";
      more.textContent = `${newestFirst.length - VISIBLE_ROWS} older alerts not shown`;
      container.appendChild(more);
    }
  }
}
